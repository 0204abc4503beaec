#pragma once

// Compilation from source rules to encoded normal rules:
// frame/descriptor desugaring, omni contrapositives, Lloyd-Topor body
// reduction, defeasibility rewrite plus argumentation theory, skip guards,
// and the Hilog/neg encoding the engine runs on.

#include <map>
#include <memory>
#include <optional>
#include <stdexcept>
#include <string>
#include <unordered_map>
#include <vector>

#include "silk/kernel.hpp"
#include "silk/reader.hpp"

namespace silk {

enum class RuleOrigin { User, OmniContrapositive, LtAuxiliary, DefeasibilityTheory, SkipGuard, FrameAxiom, Descriptor };

const char* to_string(RuleOrigin o);

enum class Theory { None, AtSimple, AtDefault };

const char* to_string(Theory t);
std::optional<Theory> theory_from_string(std::string_view s);

struct BodyLiteral {
  NafMode mode = NafMode::Plain;
  Term atom;  // encoded
  std::vector<Term> delay_guard;
};

struct NormalRule {
  Term head;  // encoded, positive
  std::vector<BodyLiteral> body;
  std::string rule_id;
  Term tag;
  RuleOrigin origin = RuleOrigin::User;
  bool defeasible = false;
  Provenance provenance;
};

struct TableSpec {
  std::optional<int> subgoal_abstract;
  std::optional<int> answer_abstract;
};

class CompileError : public std::runtime_error {
 public:
  explicit CompileError(std::vector<Diagnostic> diagnostics);
  const std::vector<Diagnostic>& diagnostics() const { return diagnostics_; }

 private:
  std::vector<Diagnostic> diagnostics_;
};

/// Head formula outside the supported fragment (or, naf, exists).
class UnsupportedHead : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

struct CompiledKB {
  std::vector<NormalRule> rules;
  std::map<std::string, TableSpec> table_decls;  // keyed by predicate key
  std::vector<Term> descriptor_store;            // encoded ruledesc/3 atoms
  std::vector<std::pair<Term, Term>> headof;     // tag -> encoded head template
  std::map<std::string, Term> tag_index;         // rule id -> tag
  std::vector<std::string> user_rule_ids;        // source order
  std::vector<TextgenRule> textgen;
  std::vector<std::string> warnings;
  Theory theory = Theory::AtDefault;
  int user_rule_count = 0;
  int aux_counter = 0;
  std::vector<std::string> user_predicates;  // names reserved against aux naming

  /// Clause indexes by predicate key; rebuilt by index().
  std::unordered_map<std::string, std::vector<std::size_t>> by_predicate;
  std::vector<std::size_t> variable_head_rules;
  void index();
};

// ---- individual pipeline stages (source level)

/// Head chain A ==> (B ==> C) becomes C :- A,B plus one contrapositive per
/// hypothesis. Non-omni rules come back as a singleton.
std::vector<Rule> omni_transform(const Rule& r);

struct LtRule {
  Literal head;
  std::vector<DefaultLiteral> body;
  std::string rule_id;
  Term tag;
  bool strict = false;
  bool auxiliary = false;
  Provenance provenance;
};

struct LtContext {
  int next_aux = 1;
  std::vector<std::string> taken;  // predicate names not usable for aux
};

/// Reduces the rule body to conjunctions of default literals. The head must
/// be a single literal (omni already applied).
std::vector<LtRule> lloyd_topor(const Rule& r, LtContext& ctx);

/// Argumentation theory text for the given theory (empty for None).
std::string theory_source(Theory t);

CompiledKB compile(const Program& program, Theory theory = Theory::AtDefault);

// ---- encoding

bool is_reserved_predicate(const Term& atom);
bool is_builtin(const Term& encoded_atom);

Term encode_term(const Term& t);
Term decode_term(const Term& t);
Term encode_literal(const Literal& l);
Literal decode_literal(const Term& encoded_atom);
/// Opposite-polarity twin of an encoded atom.
Term neg_twin(const Term& encoded_atom);
/// "p/2", "neg p/2", "frame/3", or "?/n" for a variable predicate.
std::string predicate_key(const Term& encoded_atom);
/// Key for a user-written indicator such as p/1.
std::string predicate_key_for_indicator(const std::string& indicator);

/// Display text of an encoded atom in source syntax.
std::string literal_text(const Term& encoded_atom);
/// Canonical (re-parseable, ?_Gn variables) text of a decoded encoded atom,
/// with explicit negation written neg(...).
std::string literal_canonical(const Term& encoded_atom);
/// Decoded atom, wrapped in neg(...) when explicitly negated.
Term log_literal(const Term& encoded_atom);
/// log_literal with memoized subterms, so repeated decodes of terms that
/// share structure share their results. Keeps the terms it has seen alive.
class DecodeCache {
 public:
  DecodeCache();
  ~DecodeCache();
  Term log_literal(const Term& encoded_atom);
  void clear();

 private:
  static constexpr std::size_t kLimit = 1u << 20;
  struct Impl;
  std::unique_ptr<Impl> impl_;
};
std::string to_text(const NormalRule& r);
/// One body literal with its guard and naf/unot prefix.
std::string body_literal_text(const BodyLiteral& b);
/// Canonical one-line form used by `run --emit`.
std::string emit_text(const NormalRule& r);

// ---- queries

struct CompiledGoal {
  Term root;                        // encoded atom whose table answers the query
  std::vector<NormalRule> extra;    // wrapper and auxiliary rules
  std::vector<Term> variables;      // goal variables, in order
  std::vector<Term> root_variables; // their positions in `root`
  Formula source;
};

CompiledGoal compile_goal(const CompiledKB& kb, const Formula& goal);

}  // namespace silk
