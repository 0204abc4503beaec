#pragma once

// Term substrate: Hilog-capable terms, substitutions, unification,
// variance/subsumption checks, depth measurement and depth-bounded
// abstraction, plus the canonical textual form used by logs and reports.

#include <cstdint>
#include <memory>
#include <optional>
#include <string>
#include <string_view>
#include <unordered_map>
#include <utility>
#include <vector>

namespace silk {

using VarId = std::uint64_t;

enum class TermKind : std::uint8_t { Variable, Atom, Integer, String, Application };

/// Immutable, structurally shared term. Copying is cheap.
class Term {
 public:
  Term();  // the atom '[]'

  static Term variable(VarId id, std::string name = {});
  static Term fresh_variable(std::string name = {});
  static Term atom(std::string_view name);
  static Term integer(std::int64_t value);
  static Term string(std::string_view text);
  static Term app(Term functor, std::vector<Term> args);
  static Term app(std::string_view functor, std::vector<Term> args);
  static Term list(std::vector<Term> items);

  TermKind kind() const;
  bool is_var() const { return kind() == TermKind::Variable; }
  bool is_atom() const { return kind() == TermKind::Atom; }
  bool is_integer() const { return kind() == TermKind::Integer; }
  bool is_string() const { return kind() == TermKind::String; }
  bool is_app() const { return kind() == TermKind::Application; }
  bool is_symbol() const { return !is_var() && !is_app(); }
  bool is_atom(std::string_view name) const;
  /// Application whose functor is the atom `name` with the given arity.
  bool is_app(std::string_view name, std::size_t arity) const;
  bool is_list() const;

  VarId var_id() const;
  /// Atom text, string contents, or variable display name.
  const std::string& text() const;
  std::int64_t int_value() const;
  const Term& functor() const;
  const std::vector<Term>& args() const;
  std::size_t arity() const;
  const Term& arg(std::size_t i) const { return args()[i]; }

  bool ground() const;
  std::size_t hash() const;
  std::size_t depth() const;
  /// Node identity: equal for copies of the same term object.
  const void* identity() const { return node_.get(); }

  /// Structural identity (variables compared by id).
  friend bool operator==(const Term& a, const Term& b);
  friend bool operator!=(const Term& a, const Term& b) { return !(a == b); }

 private:
  struct Node;
  struct Null {};
  explicit Term(Null) {}
  explicit Term(std::shared_ptr<const Node> node);
  std::shared_ptr<const Node> node_;
};

struct TermHash {
  std::size_t operator()(const Term& t) const { return t.hash(); }
};

enum class TruthValue : std::uint8_t { False, Undefined, True };

const char* to_string(TruthValue tv);

/// Triangular variable bindings. `resolve` yields the fully applied form.
class Substitution {
 public:
  bool empty() const { return bindings_.empty(); }
  std::size_t size() const { return bindings_.size(); }
  void bind(VarId var, Term value) { bindings_[var] = std::move(value); }
  const Term* lookup(VarId var) const;
  /// Follows variable bindings at the top level only.
  Term walk(Term t) const;
  /// Applies the substitution throughout `t`.
  Term resolve(const Term& t) const;
  /// Idempotent form: every binding fully resolved.
  Substitution normalized() const;
  const std::unordered_map<VarId, Term>& bindings() const { return bindings_; }

 private:
  std::unordered_map<VarId, Term> bindings_;
};

/// Extends `s` with a most general unifier of `a` and `b` (occurs check on).
bool unify_into(const Term& a, const Term& b, Substitution& s);
/// Most general unifier in idempotent form, or nullopt.
std::optional<Substitution> unify(const Term& a, const Term& b);

bool is_variant(const Term& a, const Term& b);
/// True iff some substitution maps `general` onto `specific`, treating the
/// variables of `specific` as constants.
bool subsumes(const Term& general, const Term& specific);

std::size_t term_depth(const Term& t);

struct Abstraction {
  Term literal;
  bool abstracted = false;
};
/// Replaces every non-variable subterm nested deeper than `k` argument
/// levels (top-level arguments are level 1) with a fresh variable.
Abstraction abstract_at_depth(const Term& literal, std::size_t k);

/// Copy of `t` with every variable replaced by a fresh one.
Term rename_apart(const Term& t);
/// Renames several terms with one shared variable map.
std::vector<Term> rename_apart(const std::vector<Term>& ts);

/// Variables of `t` in order of first occurrence.
std::vector<Term> variables_of(const Term& t);
void collect_variables(const Term& t, std::vector<Term>& out);
bool occurs_in(VarId var, const Term& t);

/// Deterministic re-parseable text; variables print as ?_G1, ?_G2, ...
/// numbered by first occurrence.
std::string canonical_text(const Term& t);
/// Canonical text of several terms sharing one variable numbering.
std::vector<std::string> canonical_texts(const std::vector<Term>& ts);
/// Hash that agrees on variant terms. Constant time for ground terms.
std::size_t variant_hash(const Term& t);
/// Key identifying the variance class of a term.
inline std::string variant_key(const Term& t) { return canonical_text(t); }
/// Readable text using source variable names where available.
std::string display_text(const Term& t);

/// Quoted form of an atom when it is not a plain identifier.
std::string atom_text(std::string_view name);

}  // namespace silk
