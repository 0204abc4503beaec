#pragma once

// Surface syntax of the rule language: source AST and parser.
//
// Statements end with '.'; variables are written ?name (?_ or _ is
// anonymous); frame sugar o[a->v], o # c and c :: d maps onto the reserved
// predicates frame/3, isa/2 and sub/2; a body-level @!{?r[attr->val]}
// queries the rule-descriptor store through ruledesc/3.

#include <optional>
#include <stdexcept>
#include <string>
#include <string_view>
#include <utility>
#include <vector>

#include "silk/kernel.hpp"

namespace silk {

struct Provenance {
  std::string file;
  int line = 0;
  int column = 0;
};

struct Diagnostic {
  std::string file;
  int line = 0;
  int column = 0;
  std::string message;
};

std::string to_string(const Diagnostic& d);

class ParseError : public std::runtime_error {
 public:
  explicit ParseError(std::vector<Diagnostic> diagnostics);
  const std::vector<Diagnostic>& diagnostics() const { return diagnostics_; }

 private:
  std::vector<Diagnostic> diagnostics_;
};

enum class NafMode { Plain, Naf, Unot };

/// An atom or its explicit negation.
struct Literal {
  bool negated = false;
  Term atom;
};

struct DefaultLiteral {
  NafMode mode = NafMode::Plain;
  Literal literal;
  /// Variables from a wish(ground(...))^ guard; empty when unguarded.
  std::vector<Term> delay_guard;
};

struct Formula {
  enum class Kind { Literal, And, Or, Naf, Implies, Equiv, Forall, Exists, True };

  Kind kind = Kind::True;
  DefaultLiteral lit;             // Kind::Literal
  std::vector<Formula> children;  // operands
  std::vector<Term> vars;         // quantified variables

  static Formula literal(DefaultLiteral l);
  static Formula atom(Term a, bool negated = false);
  static Formula conj(std::vector<Formula> parts);
  static Formula disj(std::vector<Formula> parts);
  static Formula naf(Formula f);
  static Formula implies(Formula a, Formula b);
  static Formula equiv(Formula a, Formula b);
  static Formula forall(std::vector<Term> vars, Formula f);
  static Formula exists(std::vector<Term> vars, Formula f);
  static Formula truth() { return Formula{}; }

  bool is_literal() const { return kind == Kind::Literal; }
};

struct Rule {
  std::string id;
  bool explicit_id = false;
  Term tag;
  bool strict = false;
  Formula head;
  std::optional<Formula> body;  // nullopt for facts
  std::vector<std::pair<std::string, Term>> descriptors;
  Provenance provenance;
};

struct TableDirective {
  std::string predicate;  // name/arity
  std::optional<int> subgoal_abstract;
  std::optional<int> answer_abstract;
  Provenance provenance;
};

struct SkipRule {
  Term pattern;
  std::vector<Term> vars;
  std::vector<Term> replacements;
  Formula condition;
  Provenance provenance;
};

struct TextgenRule {
  Term pattern;
  std::string templ;
  int priority = 0;
};

struct Program {
  std::vector<Rule> rules;
  std::vector<TableDirective> tables;
  std::vector<SkipRule> skips;
  std::vector<TextgenRule> textgen;

  void append(Program other);
};

/// Parses a whole program. Collects every error before throwing.
/// Auto-generated rule ids are numbered from `first_ordinal` in file order.
Program parse_program(std::string_view text, std::string_view file = "<input>",
                      int first_ordinal = 1);

struct SourceFile {
  std::string name;
  std::string text;
};

/// Parses several files as one program. Rule numbering continues across
/// files; diagnostics from every file are collected before throwing.
Program parse_sources(const std::vector<SourceFile>& files);

/// Parses a body-position formula used as a query.
Formula parse_goal(std::string_view text);

/// Parses a single term in canonical syntax (no trailing '.').
Term parse_term(std::string_view text);

/// Parses a single literal, accepting frame sugar and `neg`.
Literal parse_literal(std::string_view text);

/// Variables of a formula in first-occurrence order, anonymous ones excluded.
std::vector<Term> formula_variables(const Formula& f);

std::string to_text(const Term& atom_or_term);
std::string to_text(const Literal& l);
std::string to_text(const DefaultLiteral& l);
std::string to_text(const Formula& f);
std::string to_text(const Rule& r);

}  // namespace silk
