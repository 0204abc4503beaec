#include "silk/reader.hpp"

#include <cctype>
#include <map>
#include <set>
#include <sstream>
#include <unordered_map>
#include <unordered_set>

namespace silk {

std::string to_string(const Diagnostic& d) {
  std::ostringstream os;
  os << d.file << ':' << d.line << ':' << d.column << ": " << d.message;
  return os.str();
}

namespace {

std::string join_diagnostics(const std::vector<Diagnostic>& ds) {
  std::string out;
  for (const auto& d : ds) {
    if (!out.empty()) out += '\n';
    out += to_string(d);
  }
  return out.empty() ? "parse error" : out;
}

}  // namespace

ParseError::ParseError(std::vector<Diagnostic> diagnostics)
    : std::runtime_error(join_diagnostics(diagnostics)), diagnostics_(std::move(diagnostics)) {}

// ---------------------------------------------------------------- formulas

Formula Formula::literal(DefaultLiteral l) {
  Formula f;
  f.kind = Kind::Literal;
  f.lit = std::move(l);
  return f;
}

Formula Formula::atom(Term a, bool negated) {
  DefaultLiteral l;
  l.literal.atom = std::move(a);
  l.literal.negated = negated;
  return literal(std::move(l));
}

Formula Formula::conj(std::vector<Formula> parts) {
  if (parts.size() == 1) return std::move(parts[0]);
  Formula f;
  f.kind = Kind::And;
  f.children = std::move(parts);
  return f;
}

Formula Formula::disj(std::vector<Formula> parts) {
  if (parts.size() == 1) return std::move(parts[0]);
  Formula f;
  f.kind = Kind::Or;
  f.children = std::move(parts);
  return f;
}

Formula Formula::naf(Formula inner) {
  Formula f;
  f.kind = Kind::Naf;
  f.children.push_back(std::move(inner));
  return f;
}

Formula Formula::implies(Formula a, Formula b) {
  Formula f;
  f.kind = Kind::Implies;
  f.children.push_back(std::move(a));
  f.children.push_back(std::move(b));
  return f;
}

Formula Formula::equiv(Formula a, Formula b) {
  Formula f;
  f.kind = Kind::Equiv;
  f.children.push_back(std::move(a));
  f.children.push_back(std::move(b));
  return f;
}

Formula Formula::forall(std::vector<Term> vars, Formula inner) {
  Formula f;
  f.kind = Kind::Forall;
  f.vars = std::move(vars);
  f.children.push_back(std::move(inner));
  return f;
}

Formula Formula::exists(std::vector<Term> vars, Formula inner) {
  Formula f;
  f.kind = Kind::Exists;
  f.vars = std::move(vars);
  f.children.push_back(std::move(inner));
  return f;
}

void Program::append(Program other) {
  for (auto& r : other.rules) rules.push_back(std::move(r));
  for (auto& t : other.tables) tables.push_back(std::move(t));
  for (auto& s : other.skips) skips.push_back(std::move(s));
  for (auto& t : other.textgen) textgen.push_back(std::move(t));
}

namespace {

void formula_vars_rec(const Formula& f, std::vector<Term>& out) {
  switch (f.kind) {
    case Formula::Kind::Literal:
      collect_variables(f.lit.literal.atom, out);
      return;
    case Formula::Kind::True:
      return;
    default:
      for (const auto& v : f.vars) collect_variables(v, out);
      for (const auto& c : f.children) formula_vars_rec(c, out);
  }
}

}  // namespace

std::vector<Term> formula_variables(const Formula& f) {
  std::vector<Term> all;
  formula_vars_rec(f, all);
  std::vector<Term> out;
  for (auto& v : all)
    if (!v.text().empty() && v.text() != "_") out.push_back(v);
  return out;
}

// ---------------------------------------------------------------- lexer

namespace {

enum class Tok { Var, Name, Int, Str, Punct, End };

struct Token {
  Tok kind = Tok::End;
  std::string text;
  std::int64_t value = 0;
  bool quoted = false;    // quoted atom
  bool adjacent = false;  // no whitespace before this token
  int line = 1;
  int column = 1;
};

struct LexError {
  int line, column;
  std::string message;
};

class Lexer {
 public:
  explicit Lexer(std::string_view src) : src_(src) {}

  std::vector<Token> run(std::vector<LexError>& errors) {
    std::vector<Token> out;
    for (;;) {
      bool spaced = skip_space(errors);
      Token t;
      t.line = line_;
      t.column = col_;
      t.adjacent = !spaced;
      if (pos_ >= src_.size()) {
        t.kind = Tok::End;
        out.push_back(t);
        return out;
      }
      char c = src_[pos_];
      if (c == '?') {
        advance();
        std::string name = ident();
        if (name.empty()) {
          errors.push_back({t.line, t.column, "expected variable name after '?'"});
          continue;
        }
        t.kind = Tok::Var;
        t.text = name;
      } else if (c == '_' && !ident_char(peek(1))) {
        advance();
        t.kind = Tok::Var;
        t.text = "_";
      } else if (std::isalpha(static_cast<unsigned char>(c)) || c == '_') {
        std::string name = ident();
        t.kind = name[0] == '_' ? Tok::Var : Tok::Name;
        t.text = name;
      } else if (std::isdigit(static_cast<unsigned char>(c))) {
        std::string digits;
        while (pos_ < src_.size() && std::isdigit(static_cast<unsigned char>(src_[pos_]))) {
          digits += src_[pos_];
          advance();
        }
        t.kind = Tok::Int;
        try {
          t.value = std::stoll(digits);
        } catch (const std::out_of_range&) {
          errors.push_back({t.line, t.column, "integer literal out of range"});
        }
        t.text = digits;
      } else if (c == '"' || c == '\'') {
        advance();
        std::string body;
        bool closed = false;
        while (pos_ < src_.size()) {
          char d = src_[pos_];
          advance();
          if (d == c) {
            closed = true;
            break;
          }
          if (d == '\\' && pos_ < src_.size()) {
            body += src_[pos_];
            advance();
            continue;
          }
          body += d;
        }
        if (!closed) errors.push_back({t.line, t.column, "unterminated quoted text"});
        t.kind = c == '"' ? Tok::Str : Tok::Name;
        t.quoted = c == '\'';
        t.text = body;
      } else {
        static const char* puncts[] = {"<==>", "==>", "=:=", "=\\=", "@!", "@@", ":-", "::",
                                       "->",   "=<",  ">=",  "\\=",  "(",  ")",  "[",  "]",
                                       "{",    "}",   ",",   ".",    "^",  "#",  "=",  "<",
                                       ">",    "+",   "-",   "*",    "/",  ";",  "|"};
        bool matched = false;
        for (const char* p : puncts) {
          if (p[0] != c) continue;
          std::string_view ps(p);
          if (src_.substr(pos_, ps.size()) == ps) {
            for (std::size_t i = 0; i < ps.size(); ++i) advance();
            t.kind = Tok::Punct;
            t.text = std::string(ps);
            matched = true;
            break;
          }
        }
        if (!matched) {
          errors.push_back({t.line, t.column, std::string("unexpected character '") + c + "'"});
          advance();
          continue;
        }
      }
      out.push_back(std::move(t));
    }
  }

 private:
  static bool ident_char(char c) { return std::isalnum(static_cast<unsigned char>(c)) || c == '_'; }

  char peek(std::size_t k) const { return pos_ + k < src_.size() ? src_[pos_ + k] : '\0'; }

  void advance() {
    if (src_[pos_] == '\n') {
      ++line_;
      col_ = 1;
    } else {
      ++col_;
    }
    ++pos_;
  }

  std::string ident() {
    std::string s;
    while (pos_ < src_.size() && ident_char(src_[pos_])) {
      s += src_[pos_];
      advance();
    }
    return s;
  }

  bool skip_space(std::vector<LexError>& errors) {
    bool any = false;
    while (pos_ < src_.size()) {
      char c = src_[pos_];
      if (std::isspace(static_cast<unsigned char>(c))) {
        advance();
        any = true;
      } else if (c == '/' && peek(1) == '/') {
        while (pos_ < src_.size() && src_[pos_] != '\n') advance();
        any = true;
      } else if (c == '/' && peek(1) == '*') {
        int l = line_, col = col_;
        advance();
        advance();
        bool closed = false;
        while (pos_ < src_.size()) {
          if (src_[pos_] == '*' && peek(1) == '/') {
            advance();
            advance();
            closed = true;
            break;
          }
          advance();
        }
        if (!closed) errors.push_back({l, col, "unterminated block comment"});
        any = true;
      } else {
        break;
      }
    }
    return any;
  }

  std::string_view src_;
  std::size_t pos_ = 0;
  int line_ = 1;
  int col_ = 1;
};

// ---------------------------------------------------------------- parser

struct SyntaxError {
  int line, column;
  std::string message;
};

bool is_keyword(const Token& t, std::string_view w) {
  return t.kind == Tok::Name && !t.quoted && t.text == w;
}

bool is_punct(const Token& t, std::string_view p) { return t.kind == Tok::Punct && t.text == p; }

const std::unordered_set<std::string> kComparisons = {"=", "\\=", "<", ">", "=<", ">=", "=:=", "=\\="};

struct Descriptor {
  std::optional<Term> id;
  std::vector<std::pair<std::string, Term>> attrs;
  int line = 0, column = 0;
};

class Parser {
 public:
  Parser(std::vector<Token> toks, std::string file) : toks_(std::move(toks)), file_(std::move(file)) {}

  Program program(int first_ordinal, std::vector<Diagnostic>& diags) {
    Program prog;
    int ordinal = first_ordinal;
    std::set<std::string> explicit_ids;
    std::vector<std::size_t> auto_rules;
    while (peek().kind != Tok::End) {
      std::size_t start = pos_;
      try {
        statement(prog, ordinal, explicit_ids, auto_rules);
      } catch (const SyntaxError& e) {
        diags.push_back({file_, e.line, e.column, e.message});
        recover(start);
      }
    }
    for (std::size_t idx : auto_rules) {
      Rule& r = prog.rules[idx];
      std::string base = r.id;
      std::string id = base;
      for (int k = 1; explicit_ids.count(id); ++k) id = base + "_" + std::to_string(k);
      r.id = id;
      if (r.tag.is_atom(base)) r.tag = Term::atom(id);
    }
    return prog;
  }

  Formula goal() {
    vars_.clear();
    Formula f = formula();
    if (is_punct(peek(), ".")) next();
    expect_end();
    return f;
  }

  Term single_term() {
    vars_.clear();
    Term t = expr();
    expect_end();
    return t;
  }

  Formula single_literal() {
    vars_.clear();
    Formula f = unary();
    if (is_punct(peek(), ".")) next();
    expect_end();
    return f;
  }

 private:
  // ---- token helpers

  const Token& peek(std::size_t k = 0) const {
    std::size_t i = std::min(pos_ + k, toks_.size() - 1);
    return toks_[i];
  }
  const Token& next() {
    const Token& t = toks_[pos_];
    if (pos_ + 1 < toks_.size()) ++pos_;
    return t;
  }

  [[noreturn]] void fail(const Token& at, std::string msg) const {
    throw SyntaxError{at.line, at.column, std::move(msg)};
  }

  std::string describe(const Token& t) const {
    switch (t.kind) {
      case Tok::End:
        return "end of input";
      case Tok::Str:
        return "string";
      default:
        return "'" + t.text + "'";
    }
  }

  void expect(std::string_view p) {
    if (!is_punct(peek(), p)) fail(peek(), "expected '" + std::string(p) + "' but found " + describe(peek()));
    next();
  }

  void expect_end() {
    if (peek().kind != Tok::End) fail(peek(), "unexpected " + describe(peek()));
  }

  void recover(std::size_t start) {
    if (pos_ == start) next();
    while (peek().kind != Tok::End) {
      if (is_punct(peek(), ".")) {
        next();
        return;
      }
      next();
    }
  }

  // ---- variables

  Term variable(const std::string& name) {
    if (name == "_") return Term::fresh_variable("_");
    auto it = vars_.find(name);
    if (it != vars_.end()) return it->second;
    Term v = Term::fresh_variable(name);
    vars_.emplace(name, v);
    return v;
  }

  // ---- statements

  void statement(Program& prog, int& ordinal, std::set<std::string>& explicit_ids,
                 std::vector<std::size_t>& auto_rules) {
    vars_.clear();
    const Token& first = peek();
    if (is_punct(first, ":-")) {
      next();
      directive(prog, first);
      expect(".");
      return;
    }
    bool strict = false;
    std::optional<Descriptor> desc;
    for (;;) {
      if (is_punct(peek(), "@@")) {
        next();
        if (!is_keyword(peek(), "strict")) fail(peek(), "expected 'strict' after '@@'");
        next();
        strict = true;
      } else if (is_punct(peek(), "@!")) {
        if (desc) fail(peek(), "more than one descriptor block before a rule");
        desc = descriptor_block();
      } else {
        break;
      }
    }
    if (peek().kind == Tok::End || is_punct(peek(), ".")) {
      if (desc) fail(peek(), "descriptor block is not followed by a rule");
      fail(peek(), "expected a rule but found " + describe(peek()));
    }
    Provenance prov{file_, first.line, first.column};
    Formula head = formula();
    std::optional<Formula> body;
    if (is_punct(peek(), ":-")) {
      next();
      body = formula();
    }
    expect(".");

    // Special statement forms.
    if (!desc && !strict && head.is_literal() && head.lit.mode == NafMode::Plain &&
        !head.lit.literal.negated) {
      const Term& a = head.lit.literal.atom;
      if (a.is_app("skip", 3)) {
        skip_statement(prog, a, body, prov, first);
        return;
      }
      if (!body && (a.is_app("textgen", 2) || a.is_app("textgen", 3))) {
        textgen_statement(prog, a, first);
        return;
      }
    }

    Rule r;
    r.strict = strict;
    r.head = std::move(head);
    r.body = std::move(body);
    r.provenance = prov;
    if (desc && desc->id) {
      const Term& id = *desc->id;
      if (!id.is_atom()) fail(first, "rule id must be an atom");
      r.id = id.text();
      r.explicit_id = true;
      if (!explicit_ids.insert(r.id).second) {
        throw SyntaxError{desc->line, desc->column, "duplicate rule id '" + r.id + "'"};
      }
    } else {
      r.id = "rule_" + std::to_string(ordinal);
      auto_rules.push_back(prog.rules.size());
    }
    ++ordinal;
    r.tag = Term::atom(r.id);
    if (desc) {
      for (auto& [k, v] : desc->attrs) {
        if (k == "tag") r.tag = v;
        else r.descriptors.emplace_back(k, v);
      }
    }
    prog.rules.push_back(std::move(r));
  }

  Descriptor descriptor_block() {
    const Token& at = next();  // '@!'
    Descriptor d;
    d.line = at.line;
    d.column = at.column;
    expect("{");
    if (!is_punct(peek(), "[")) d.id = primary();
    if (is_punct(peek(), "[")) {
      next();
      d.attrs = attribute_list();
      expect("]");
    }
    expect("}");
    return d;
  }

  std::vector<std::pair<std::string, Term>> attribute_list() {
    std::vector<std::pair<std::string, Term>> out;
    if (is_punct(peek(), "]")) return out;
    for (;;) {
      const Token& t = peek();
      if (t.kind != Tok::Name) fail(t, "expected attribute name but found " + describe(t));
      std::string name = next().text;
      expect("->");
      out.emplace_back(name, expr());
      if (!is_punct(peek(), ",")) break;
      next();
    }
    return out;
  }

  void directive(Program& prog, const Token& at) {
    const Token& t = peek();
    if (!is_keyword(t, "table")) fail(t, "unknown directive; expected 'table'");
    next();
    std::vector<std::string> preds;
    for (;;) {
      const Token& n = peek();
      if (n.kind != Tok::Name) fail(n, "expected predicate indicator name/arity");
      std::string name = next().text;
      expect("/");
      const Token& a = peek();
      if (a.kind != Tok::Int) fail(a, "expected arity after '/'");
      next();
      preds.push_back(atom_text(name) + "/" + std::to_string(a.value));
      if (!is_punct(peek(), ",")) break;
      next();
    }
    std::optional<int> sg, ans;
    if (is_keyword(peek(), "as")) {
      next();
      for (;;) {
        const Token& o = peek();
        if (o.kind != Tok::Name) fail(o, "expected table option");
        std::string opt = next().text;
        expect("(");
        const Token& v = peek();
        if (v.kind != Tok::Int) fail(v, "expected integer bound");
        next();
        if (v.value < 1) fail(v, "abstraction bound must be at least 1");
        expect(")");
        if (opt == "subgoal_abstract") sg = static_cast<int>(v.value);
        else if (opt == "answer_abstract") ans = static_cast<int>(v.value);
        else fail(o, "unknown table option '" + opt + "'");
        if (!is_punct(peek(), ",")) break;
        next();
      }
    }
    for (auto& p : preds) prog.tables.push_back({p, sg, ans, Provenance{file_, at.line, at.column}});
  }

  void skip_statement(Program& prog, const Term& a, const std::optional<Formula>& body,
                      const Provenance& prov, const Token& at) {
    if (!a.arg(1).is_list() || !a.arg(2).is_list()) fail(at, "skip expects skip(Template, [Vars], [Replacements])");
    SkipRule s;
    s.pattern = a.arg(0);
    auto items = [](const Term& l) { return l.is_atom() ? std::vector<Term>{} : l.args(); };
    s.vars = items(a.arg(1));
    s.replacements = items(a.arg(2));
    if (s.vars.size() != s.replacements.size()) fail(at, "skip variable and replacement lists differ in length");
    for (const auto& v : s.vars) {
      if (!v.is_var()) fail(at, "skip guard list must contain variables");
      if (!occurs_in(v.var_id(), s.pattern)) fail(at, "skip variable ?" + v.text() + " does not occur in the template");
    }
    s.condition = body ? *body : Formula::truth();
    s.provenance = prov;
    prog.skips.push_back(std::move(s));
  }

  void textgen_statement(Program& prog, const Term& a, const Token& at) {
    if (!a.arg(1).is_string()) fail(at, "textgen template must be a string");
    TextgenRule t;
    t.pattern = a.arg(0);
    t.templ = a.arg(1).text();
    if (a.arity() == 3) {
      if (!a.arg(2).is_integer()) fail(at, "textgen priority must be an integer");
      t.priority = static_cast<int>(a.arg(2).int_value());
    }
    prog.textgen.push_back(std::move(t));
  }

  // ---- formulas

  Formula formula() {
    Formula left = implication();
    while (is_punct(peek(), "<==>")) {
      next();
      Formula right = implication();
      left = Formula::equiv(std::move(left), std::move(right));
    }
    return left;
  }

  Formula implication() {
    Formula left = disjunction();
    if (is_punct(peek(), "==>")) {
      next();
      Formula right = implication();
      return Formula::implies(std::move(left), std::move(right));
    }
    return left;
  }

  Formula disjunction() {
    std::vector<Formula> parts;
    parts.push_back(conjunction());
    while (is_keyword(peek(), "or") || is_punct(peek(), ";")) {
      next();
      parts.push_back(conjunction());
    }
    return Formula::disj(std::move(parts));
  }

  Formula conjunction() {
    std::vector<Formula> parts;
    auto push = [&](Formula f) {
      if (f.kind == Formula::Kind::And) {
        for (auto& c : f.children) parts.push_back(std::move(c));
      } else {
        parts.push_back(std::move(f));
      }
    };
    push(unary());
    while (is_keyword(peek(), "and") || is_punct(peek(), ",")) {
      next();
      push(unary());
    }
    return Formula::conj(std::move(parts));
  }

  static bool plain_literal(const Formula& f) {
    return f.is_literal() && f.lit.mode == NafMode::Plain && f.lit.delay_guard.empty();
  }

  Formula unary() {
    const Token& t = peek();
    if (is_keyword(t, "naf")) {
      next();
      Formula inner = unary();
      if (plain_literal(inner)) {
        inner.lit.mode = NafMode::Naf;
        return inner;
      }
      return Formula::naf(std::move(inner));
    }
    if (is_keyword(t, "unot")) {
      next();
      Formula inner = unary();
      if (!plain_literal(inner)) fail(t, "unot applies to a single literal");
      inner.lit.mode = NafMode::Unot;
      return inner;
    }
    if (is_keyword(t, "neg")) {
      next();
      Formula inner = unary();
      return negate(std::move(inner), t);
    }
    if ((is_keyword(t, "forall") || is_keyword(t, "exists")) && is_punct(peek(1), "(")) {
      next();
      next();
      std::vector<Term> qv;
      for (;;) {
        const Token& v = peek();
        if (v.kind != Tok::Var || v.text == "_") fail(v, "expected quantified variable");
        qv.push_back(variable(next().text));
        if (!is_punct(peek(), ",")) break;
        next();
      }
      expect(")");
      Formula body;
      if (is_punct(peek(), "^")) {
        next();
        body = unary();
      } else if (is_punct(peek(), "(")) {
        next();
        body = formula();
        expect(")");
      } else {
        fail(peek(), "expected '^' or '(' after quantifier");
      }
      return t.text == "forall" ? Formula::forall(std::move(qv), std::move(body))
                                : Formula::exists(std::move(qv), std::move(body));
    }
    if (is_keyword(t, "wish") && is_punct(peek(1), "(")) {
      next();
      next();
      std::vector<Term> guard;
      for (;;) {
        const Token& g = peek();
        if (!is_keyword(g, "ground")) fail(g, "expected ground(?Var) in wish guard");
        next();
        expect("(");
        const Token& v = peek();
        if (v.kind != Tok::Var || v.text == "_") fail(v, "expected variable in ground(...)");
        guard.push_back(variable(next().text));
        expect(")");
        if (is_keyword(peek(), "and") || is_punct(peek(), ",")) {
          next();
          continue;
        }
        break;
      }
      expect(")");
      expect("^");
      const Token& lt = peek();
      Formula inner = unary();
      if (!inner.is_literal() || !inner.lit.delay_guard.empty()) fail(lt, "wish guard applies to a single literal");
      for (const auto& g : guard)
        if (!occurs_in(g.var_id(), inner.lit.literal.atom))
          fail(lt, "guarded variable ?" + g.text() + " does not occur in the literal");
      inner.lit.delay_guard = std::move(guard);
      return inner;
    }
    if (is_punct(t, "@!")) {
      next();
      expect("{");
      Term subject = primary();
      expect("[");
      auto attrs = attribute_list();
      expect("]");
      expect("}");
      std::vector<Formula> parts;
      for (auto& [k, v] : attrs) parts.push_back(Formula::atom(Term::app("ruledesc", {subject, Term::atom(k), v})));
      if (parts.empty()) parts.push_back(Formula::atom(Term::app("ruledesc", {subject, Term::fresh_variable("_"), Term::fresh_variable("_")})));
      return Formula::conj(std::move(parts));
    }
    if (is_keyword(t, "true") && !is_punct(peek(1), "(")) {
      next();
      return Formula::truth();
    }
    if (is_punct(t, "(")) {
      std::size_t save = pos_;
      auto saved_vars = vars_;
      try {
        next();
        Formula f = formula();
        expect(")");
        // A parenthesized arithmetic operand followed by a comparison.
        if (peek().kind != Tok::Punct || !kComparisons.count(peek().text)) return f;
      } catch (const SyntaxError&) {
      }
      pos_ = save;
      vars_ = std::move(saved_vars);
    }
    return atomic();
  }

  Formula negate(Formula f, const Token& at) {
    if (f.kind == Formula::Kind::And) {
      for (auto& c : f.children) c = negate(std::move(c), at);
      return f;
    }
    if (!plain_literal(f) || f.lit.literal.negated) fail(at, "neg applies to a positive atom");
    if (f.lit.literal.atom.is_var()) fail(at, "neg cannot apply to a variable");
    f.lit.literal.negated = true;
    return f;
  }

  Formula atomic() {
    const Token& start = peek();
    bool simple = true;
    Term lhs = expr(&simple);
    const Token& op = peek();
    if (op.kind == Tok::Punct && kComparisons.count(op.text)) {
      next();
      Term rhs = expr();
      return Formula::atom(Term::app(op.text, {lhs, rhs}));
    }
    if (is_keyword(op, "is")) {
      next();
      Term rhs = expr();
      return Formula::atom(Term::app("is", {lhs, rhs}));
    }
    if (!simple) fail(start, "arithmetic expression used as a literal");
    if (is_punct(op, "[")) {
      next();
      auto attrs = frame_attrs_loose();
      std::vector<Formula> parts;
      for (auto& [k, v] : attrs) parts.push_back(Formula::atom(Term::app("frame", {lhs, k, v})));
      return Formula::conj(std::move(parts));
    }
    if (is_punct(op, "#")) {
      next();
      return Formula::atom(Term::app("isa", {lhs, expr()}));
    }
    if (is_punct(op, "::")) {
      next();
      return Formula::atom(Term::app("sub", {lhs, expr()}));
    }
    if (lhs.is_integer() || lhs.is_string()) fail(start, "expected a literal but found " + describe(start));
    return Formula::atom(lhs);
  }

  // Frame attributes whose names may be arbitrary terms (?A[?B->?C]).
  std::vector<std::pair<Term, Term>> frame_attrs_loose() {
    std::vector<std::pair<Term, Term>> out;
    for (;;) {
      Term k = expr();
      expect("->");
      Term v = expr();
      out.emplace_back(k, v);
      if (!is_punct(peek(), ",")) break;
      next();
    }
    expect("]");
    if (out.empty()) fail(peek(), "empty frame");
    return out;
  }

  // ---- terms

  Term expr(bool* simple = nullptr) {
    Term left = mul_expr(simple);
    while (is_punct(peek(), "+") || is_punct(peek(), "-")) {
      std::string op = next().text;
      Term right = mul_expr(nullptr);
      left = Term::app(op, {left, right});
      if (simple) *simple = false;
    }
    return left;
  }

  Term mul_expr(bool* simple) {
    Term left = primary();
    while (is_punct(peek(), "*") || is_punct(peek(), "/") || is_keyword(peek(), "mod")) {
      std::string op = next().text;
      Term right = primary();
      left = Term::app(op, {left, right});
      if (simple) *simple = false;
    }
    return left;
  }

  Term primary() {
    const Token& t = peek();
    Term base;
    switch (t.kind) {
      case Tok::Var:
        next();
        base = variable(t.text);
        break;
      case Tok::Int:
        next();
        return Term::integer(t.value);
      case Tok::Str:
        next();
        return Term::string(t.text);
      case Tok::Name:
        if (!t.quoted && is_reserved(t.text)) fail(t, "unexpected keyword '" + t.text + "'");
        next();
        base = Term::atom(t.text);
        break;
      case Tok::Punct:
        if (t.text == "-" && peek(1).kind == Tok::Int && peek(1).adjacent) {
          next();
          const Token& n = next();
          return Term::integer(-n.value);
        }
        if (t.text == "[") {
          next();
          std::vector<Term> items;
          if (!is_punct(peek(), "]")) {
            for (;;) {
              items.push_back(expr());
              if (!is_punct(peek(), ",")) break;
              next();
            }
          }
          expect("]");
          base = Term::list(std::move(items));
          break;
        }
        if (t.text == "(") {
          next();
          Term inner = expr();
          expect(")");
          return inner;
        }
        fail(t, "expected a term but found " + describe(t));
      case Tok::End:
        fail(t, "expected a term but found end of input");
    }
    // Hilog postfix application: f(a)(b), ?X(a).
    while (is_punct(peek(), "(") && peek().adjacent) {
      next();
      std::vector<Term> args;
      for (;;) {
        args.push_back(expr());
        if (!is_punct(peek(), ",")) break;
        next();
      }
      expect(")");
      base = Term::app(base, std::move(args));
    }
    return base;
  }

  static bool is_reserved(const std::string& s) {
    static const std::unordered_set<std::string> words = {"and", "or", "naf", "neg", "unot", "is", "mod"};
    return words.count(s) > 0;
  }

  std::vector<Token> toks_;
  std::string file_;
  std::size_t pos_ = 0;
  std::unordered_map<std::string, Term> vars_;
};

std::vector<Token> lex_or_throw(std::string_view text, const std::string& file,
                                std::vector<Diagnostic>* sink = nullptr) {
  std::vector<LexError> errs;
  auto toks = Lexer(text).run(errs);
  std::vector<Diagnostic> diags;
  for (auto& e : errs) diags.push_back({file, e.line, e.column, e.message});
  if (sink) {
    for (auto& d : diags) sink->push_back(d);
  } else if (!diags.empty()) {
    throw ParseError(std::move(diags));
  }
  return toks;
}

template <typename F>
auto parse_fragment(std::string_view text, F&& f) {
  auto toks = lex_or_throw(text, "<query>");
  Parser p(std::move(toks), "<query>");
  try {
    return f(p);
  } catch (const SyntaxError& e) {
    throw ParseError({{"<query>", e.line, e.column, e.message}});
  }
}

}  // namespace

Program parse_program(std::string_view text, std::string_view file, int first_ordinal) {
  std::vector<Diagnostic> diags;
  auto toks = lex_or_throw(text, std::string(file), &diags);
  Parser p(std::move(toks), std::string(file));
  Program prog = p.program(first_ordinal, diags);
  if (!diags.empty()) throw ParseError(std::move(diags));
  return prog;
}

Program parse_sources(const std::vector<SourceFile>& files) {
  Program all;
  std::vector<Diagnostic> diags;
  for (const auto& f : files) {
    try {
      all.append(parse_program(f.text, f.name, static_cast<int>(all.rules.size()) + 1));
    } catch (const ParseError& e) {
      diags.insert(diags.end(), e.diagnostics().begin(), e.diagnostics().end());
    }
  }
  if (!diags.empty()) throw ParseError(std::move(diags));
  return all;
}

Formula parse_goal(std::string_view text) {
  return parse_fragment(text, [](Parser& p) { return p.goal(); });
}

Term parse_term(std::string_view text) {
  return parse_fragment(text, [](Parser& p) { return p.single_term(); });
}

Literal parse_literal(std::string_view text) {
  Formula f = parse_fragment(text, [](Parser& p) { return p.single_literal(); });
  if (!f.is_literal() || f.lit.mode != NafMode::Plain || !f.lit.delay_guard.empty())
    throw ParseError({{"<query>", 1, 1, "expected a single literal"}});
  return f.lit.literal;
}

// ---------------------------------------------------------------- printing

namespace {

bool is_arith(const Term& t) {
  if (!t.is_app() || t.arity() != 2 || !t.functor().is_atom()) return false;
  const std::string& f = t.functor().text();
  return f == "+" || f == "-" || f == "*" || f == "/" || f == "mod";
}

std::string term_text(const Term& t) {
  if (!t.is_app()) return display_text(t);
  if (is_arith(t)) {
    const std::string& f = t.functor().text();
    return "(" + term_text(t.arg(0)) + " " + f + " " + term_text(t.arg(1)) + ")";
  }
  bool list = t.is_list();
  std::string s = list ? "[" : term_text(t.functor()) + "(";
  for (std::size_t i = 0; i < t.arity(); ++i) {
    if (i) s += ",";
    s += term_text(t.arg(i));
  }
  return s + (list ? "]" : ")");
}

std::string atom_display(const Term& a) {
  if (a.is_app() && a.functor().is_atom() && a.arity() == 2) {
    const std::string& f = a.functor().text();
    if (kComparisons.count(f) || f == "is") return term_text(a.arg(0)) + " " + f + " " + term_text(a.arg(1));
  }
  if (a.is_app("frame", 3)) {
    const Term& attr = a.arg(1);
    return term_text(a.arg(0)) + "[" + term_text(attr) + "->" + term_text(a.arg(2)) + "]";
  }
  if (a.is_app("isa", 2)) return term_text(a.arg(0)) + " # " + term_text(a.arg(1));
  if (a.is_app("sub", 2)) return term_text(a.arg(0)) + " :: " + term_text(a.arg(1));
  if (a.is_app("ruledesc", 3) && a.arg(1).is_atom())
    return "@!{" + term_text(a.arg(0)) + "[" + atom_text(a.arg(1).text()) + "->" + term_text(a.arg(2)) + "]}";
  return term_text(a);
}

std::string vars_text(const std::vector<Term>& vs) {
  std::string s;
  for (std::size_t i = 0; i < vs.size(); ++i) {
    if (i) s += ",";
    s += display_text(vs[i]);
  }
  return s;
}

std::string wrapped(const Formula& f) {
  if (f.is_literal() || f.kind == Formula::Kind::True) return to_text(f);
  return "(" + to_text(f) + ")";
}

}  // namespace

std::string to_text(const Term& t) { return atom_display(t); }

std::string to_text(const Literal& l) { return (l.negated ? "neg " : "") + atom_display(l.atom); }

std::string to_text(const DefaultLiteral& l) {
  std::string s;
  if (!l.delay_guard.empty()) {
    s += "wish(";
    for (std::size_t i = 0; i < l.delay_guard.size(); ++i) {
      if (i) s += " and ";
      s += "ground(" + display_text(l.delay_guard[i]) + ")";
    }
    s += ")^";
  }
  if (l.mode == NafMode::Naf) s += "naf ";
  if (l.mode == NafMode::Unot) s += "unot ";
  return s + to_text(l.literal);
}

std::string to_text(const Formula& f) {
  using K = Formula::Kind;
  switch (f.kind) {
    case K::True:
      return "true";
    case K::Literal:
      return to_text(f.lit);
    case K::And:
    case K::Or: {
      std::string sep = f.kind == K::And ? " and " : " or ";
      std::string s;
      for (std::size_t i = 0; i < f.children.size(); ++i) {
        if (i) s += sep;
        s += wrapped(f.children[i]);
      }
      return s;
    }
    case K::Naf:
      return "naf " + wrapped(f.children[0]);
    case K::Implies:
      return wrapped(f.children[0]) + " ==> " + wrapped(f.children[1]);
    case K::Equiv:
      return wrapped(f.children[0]) + " <==> " + wrapped(f.children[1]);
    case K::Forall:
      return "forall(" + vars_text(f.vars) + ")^" + wrapped(f.children[0]);
    case K::Exists:
      return "exists(" + vars_text(f.vars) + ")^" + wrapped(f.children[0]);
  }
  return {};
}

std::string to_text(const Rule& r) {
  std::string s;
  bool tag_default = r.tag.is_atom(r.id);
  if (r.explicit_id || !tag_default || !r.descriptors.empty()) {
    s += "@!{" + atom_text(r.id);
    std::vector<std::string> attrs;
    if (!tag_default) attrs.push_back("tag->" + term_text(r.tag));
    for (const auto& [k, v] : r.descriptors) attrs.push_back(atom_text(k) + "->" + term_text(v));
    if (!attrs.empty()) {
      s += "[";
      for (std::size_t i = 0; i < attrs.size(); ++i) {
        if (i) s += ", ";
        s += attrs[i];
      }
      s += "]";
    }
    s += "} ";
  }
  if (r.strict) s += "@@strict ";
  s += to_text(r.head);
  if (r.body) s += " :- " + to_text(*r.body);
  return s + ".";
}

}  // namespace silk
