#include "silk/transform.hpp"

#include <algorithm>
#include <set>
#include <sstream>
#include <unordered_set>

namespace silk {

const char* to_string(RuleOrigin o) {
  switch (o) {
    case RuleOrigin::User: return "user";
    case RuleOrigin::OmniContrapositive: return "omni_contrapositive";
    case RuleOrigin::LtAuxiliary: return "lt_auxiliary";
    case RuleOrigin::DefeasibilityTheory: return "defeasibility_theory";
    case RuleOrigin::SkipGuard: return "skip_guard";
    case RuleOrigin::FrameAxiom: return "frame_axiom";
    case RuleOrigin::Descriptor: return "descriptor";
  }
  return "?";
}

const char* to_string(Theory t) {
  switch (t) {
    case Theory::None: return "none";
    case Theory::AtSimple: return "at_simple";
    case Theory::AtDefault: return "at_default";
  }
  return "?";
}

std::optional<Theory> theory_from_string(std::string_view s) {
  if (s == "none") return Theory::None;
  if (s == "simple" || s == "at_simple") return Theory::AtSimple;
  if (s == "default" || s == "at_default") return Theory::AtDefault;
  return std::nullopt;
}

CompileError::CompileError(std::vector<Diagnostic> diagnostics)
    : std::runtime_error([&] {
        std::string s;
        for (const auto& d : diagnostics) {
          if (!s.empty()) s += '\n';
          s += to_string(d);
        }
        return s.empty() ? std::string("compile error") : s;
      }()),
      diagnostics_(std::move(diagnostics)) {}

// ---------------------------------------------------------------- encoding

namespace {

const std::unordered_map<std::string, std::size_t>& reserved_table() {
  static const std::unordered_map<std::string, std::size_t> t = {
      {"frame", 3},   {"isa", 2},       {"sub", 2},     {"ruledesc", 3}, {"opposes", 2},
      {"overrides", 2}, {"defeated", 1}, {"refutes", 2}, {"rebuts", 2},  {"conflicts", 2},
      {"candidate", 1}, {"headof", 2},  {"$query", 1}};
  return t;
}

const std::unordered_set<std::string>& builtin_binary() {
  static const std::unordered_set<std::string> s = {"is", "=", "\\=", "<", ">", "=<", ">=", "=:=", "=\\="};
  return s;
}

bool builtin_symbol(const Term& t) {
  return t.is_atom("true") || t.is_atom("fail") || t.is_atom("undefined");
}

bool needs_escape(const std::string& s) {
  return s == "apply" || s == "negf" || (!s.empty() && s[0] == '$');
}

Term escape_atom(const Term& a) {
  if (needs_escape(a.text())) return Term::atom("$" + a.text());
  return a;
}

Term unescape_atom(const Term& a) {
  const std::string& s = a.text();
  if (!s.empty() && s[0] == '$') return Term::atom(s.substr(1));
  return a;
}

bool first_order_reserved(const Term& atom, std::string* base = nullptr, bool* negated = nullptr) {
  if (!atom.is_app() || !atom.functor().is_atom()) return false;
  std::string name = atom.functor().text();
  bool neg = false;
  if (name.size() > 4 && name.compare(name.size() - 4, 4, "_neg") == 0) {
    name = name.substr(0, name.size() - 4);
    neg = true;
  }
  auto it = reserved_table().find(name);
  if (it == reserved_table().end() || it->second != atom.arity()) return false;
  if (base) *base = name;
  if (negated) *negated = neg;
  return true;
}

}  // namespace

bool is_reserved_predicate(const Term& atom) {
  if (!atom.is_app() || !atom.functor().is_atom()) return builtin_symbol(atom);
  const std::string& name = atom.functor().text();
  auto it = reserved_table().find(name);
  if (it != reserved_table().end() && it->second == atom.arity()) return true;
  return (atom.arity() == 2 && builtin_binary().count(name)) || (name == "$skip" && atom.arity() == 6);
}

bool is_builtin(const Term& a) {
  if (builtin_symbol(a)) return true;
  if (!a.is_app() || !a.functor().is_atom()) return false;
  const std::string& name = a.functor().text();
  return (a.arity() == 2 && builtin_binary().count(name)) || (name == "$skip" && a.arity() == 6);
}

Term encode_term(const Term& t) {
  switch (t.kind()) {
    case TermKind::Atom:
      return escape_atom(t);
    case TermKind::Application: {
      std::vector<Term> args;
      args.reserve(t.arity() + 1);
      args.push_back(encode_term(t.functor()));
      for (const auto& a : t.args()) args.push_back(encode_term(a));
      return Term::app("apply", std::move(args));
    }
    default:
      return t;
  }
}

namespace {

using DecodeMemo = std::unordered_map<const void*, std::pair<Term, Term>>;

Term decode_rec(const Term& t, DecodeMemo* memo) {
  switch (t.kind()) {
    case TermKind::Atom:
      return unescape_atom(t);
    case TermKind::Application: {
      if (memo)
        if (auto it = memo->find(t.identity()); it != memo->end()) return it->second.second;
      Term out;
      if (t.functor().is_atom("apply")) {
        Term f = decode_rec(t.arg(0), memo);
        if (t.arity() == 1) {
          out = f;
        } else {
          std::vector<Term> args;
          for (std::size_t i = 1; i < t.arity(); ++i) args.push_back(decode_rec(t.arg(i), memo));
          out = Term::app(f, std::move(args));
        }
      } else {
        std::vector<Term> args;
        for (const auto& a : t.args()) args.push_back(decode_rec(a, memo));
        Term f = t.functor().is_atom() ? t.functor() : decode_rec(t.functor(), memo);
        out = Term::app(f, std::move(args));
      }
      if (memo) memo->emplace(t.identity(), std::make_pair(t, out));
      return out;
    }
    default:
      return t;
  }
}

}  // namespace

Term decode_term(const Term& t) { return decode_rec(t, nullptr); }

Term encode_literal(const Literal& l) {
  const Term& a = l.atom;
  if (a.is_var()) {
    if (l.negated) throw std::invalid_argument("neg cannot apply to a variable literal");
    return a;
  }
  if (builtin_symbol(a) || (is_builtin(a) && a.is_app())) {
    if (l.negated) throw std::invalid_argument("neg cannot apply to builtin " + display_text(a));
    if (!a.is_app()) return a;
    std::vector<Term> args;
    for (const auto& x : a.args()) args.push_back(encode_term(x));
    return Term::app(a.functor(), std::move(args));
  }
  if (a.is_app() && a.functor().is_atom()) {
    auto it = reserved_table().find(a.functor().text());
    if (it != reserved_table().end() && it->second == a.arity()) {
      std::vector<Term> args;
      for (const auto& x : a.args()) args.push_back(encode_term(x));
      std::string name = a.functor().text() + (l.negated ? "_neg" : "");
      return Term::app(name, std::move(args));
    }
  }
  Term f = a.is_app() ? encode_term(a.functor()) : encode_term(a);
  if (l.negated) f = Term::app("negf", {f});
  std::vector<Term> args{f};
  if (a.is_app())
    for (const auto& x : a.args()) args.push_back(encode_term(x));
  return Term::app("apply", std::move(args));
}

namespace {

Literal decode_literal_rec(const Term& e, DecodeMemo* memo) {
  Literal out;
  if (e.is_var() || !e.is_app()) {
    out.atom = e.is_var() ? e : decode_rec(e, memo);
    return out;
  }
  if (e.functor().is_atom("apply")) {
    Term f = e.arg(0);
    if (f.is_app("negf", 1)) {
      out.negated = true;
      f = f.arg(0);
    }
    Term df = decode_rec(f, memo);
    if (e.arity() == 1) {
      out.atom = df;
      return out;
    }
    std::vector<Term> args;
    for (std::size_t i = 1; i < e.arity(); ++i) args.push_back(decode_rec(e.arg(i), memo));
    out.atom = Term::app(df, std::move(args));
    return out;
  }
  std::string base;
  bool neg = false;
  std::vector<Term> args;
  for (const auto& a : e.args()) args.push_back(decode_rec(a, memo));
  if (first_order_reserved(e, &base, &neg)) {
    out.negated = neg;
    out.atom = Term::app(base, std::move(args));
    return out;
  }
  out.atom = Term::app(e.functor(), std::move(args));
  return out;
}

}  // namespace

Literal decode_literal(const Term& e) { return decode_literal_rec(e, nullptr); }

Term neg_twin(const Term& e) {
  if (e.is_app() && e.functor().is_atom("apply")) {
    std::vector<Term> args = e.args();
    if (args[0].is_app("negf", 1)) args[0] = args[0].arg(0);
    else args[0] = Term::app("negf", {args[0]});
    return Term::app("apply", std::move(args));
  }
  std::string base;
  bool neg = false;
  if (first_order_reserved(e, &base, &neg)) return Term::app(neg ? base : base + "_neg", e.args());
  throw std::invalid_argument("no negative twin for " + display_text(e));
}

namespace {

std::string functor_key(const Term& f) {
  switch (f.kind()) {
    case TermKind::Variable: return "?";
    case TermKind::Atom: return atom_text(f.text());
    case TermKind::Application: return functor_key(f.functor()) + "(" + std::to_string(f.arity()) + ")";
    default: return display_text(f);
  }
}

}  // namespace

std::string predicate_key(const Term& e) {
  if (e.is_var()) return "?/0";
  // only the functor matters; skip decoding the arguments
  Term skeleton = e.is_app() && e.functor().is_atom("apply") ? Term::app("apply", {e.arg(0)}) : e;
  Literal l = decode_literal(skeleton);
  std::size_t arity = e.is_app() && e.functor().is_atom("apply") ? e.arity() - 1 : 0;
  const Term& a = l.atom;
  if (skeleton != e) {
    std::string k = functor_key(a) + "/" + std::to_string(arity);
    return l.negated ? "neg " + k : k;
  }
  std::string k = a.is_app() ? functor_key(a.functor()) + "/" + std::to_string(a.arity())
                             : functor_key(a) + "/0";
  return l.negated ? "neg " + k : k;
}

std::string predicate_key_for_indicator(const std::string& indicator) { return indicator; }

std::string literal_text(const Term& e) { return to_text(decode_literal(e)); }

namespace {

std::string body_prefix(const BodyLiteral& b) {
  std::string s;
  if (!b.delay_guard.empty()) {
    s += "wish(";
    for (std::size_t i = 0; i < b.delay_guard.size(); ++i) {
      if (i) s += " and ";
      s += "ground(" + display_text(b.delay_guard[i]) + ")";
    }
    s += ")^";
  }
  if (b.mode == NafMode::Naf) s += "naf ";
  if (b.mode == NafMode::Unot) s += "unot ";
  return s;
}

}  // namespace

std::string body_literal_text(const BodyLiteral& b) { return body_prefix(b) + literal_text(b.atom); }

Term log_literal(const Term& e) {
  Literal l = decode_literal(e);
  return l.negated ? Term::app("neg", {l.atom}) : l.atom;
}

struct DecodeCache::Impl {
  DecodeMemo memo;
};

DecodeCache::DecodeCache() : impl_(std::make_unique<Impl>()) {}
DecodeCache::~DecodeCache() = default;

Term DecodeCache::log_literal(const Term& e) {
  if (impl_->memo.size() > kLimit) impl_->memo.clear();
  Literal l = decode_literal_rec(e, &impl_->memo);
  return l.negated ? Term::app("neg", {l.atom}) : l.atom;
}

void DecodeCache::clear() { impl_->memo.clear(); }

std::string literal_canonical(const Term& e) { return canonical_text(log_literal(e)); }

std::string to_text(const NormalRule& r) {
  std::string s = literal_text(r.head);
  for (std::size_t i = 0; i < r.body.size(); ++i) {
    s += i ? ", " : " :- ";
    const BodyLiteral& b = r.body[i];
    if (b.atom.is_app("$skip", 6)) {
      s += body_prefix(b) + "$skip(" + literal_text(b.atom.arg(0)) + ")";
      continue;
    }
    s += body_prefix(b) + literal_text(b.atom);
  }
  return s + ".";
}

std::string emit_text(const NormalRule& r) {
  std::vector<Term> terms{r.head};
  for (const auto& b : r.body) {
    terms.push_back(b.atom);
    for (const auto& g : b.delay_guard) terms.push_back(g);
  }
  auto texts = canonical_texts(terms);
  std::string s = texts[0];
  std::size_t k = 1;
  for (std::size_t i = 0; i < r.body.size(); ++i) {
    const BodyLiteral& b = r.body[i];
    std::string atom = texts[k++];
    std::string guard;
    for (std::size_t g = 0; g < b.delay_guard.size(); ++g) {
      guard += (g ? " and ground(" : "ground(") + texts[k++] + ")";
    }
    s += i ? ", " : " :- ";
    if (!guard.empty()) s += "wish(" + guard + ")^";
    if (b.mode == NafMode::Naf) s += "naf ";
    if (b.mode == NafMode::Unot) s += "unot ";
    s += atom;
  }
  return s + ".  // " + r.rule_id + " " + to_string(r.origin);
}

// ---------------------------------------------------------------- omni

namespace {

[[noreturn]] void unsupported(const std::string& what) { throw UnsupportedHead(what); }

Formula strip_forall(const Formula& f) {
  if (f.kind == Formula::Kind::Forall) return strip_forall(f.children[0]);
  return f;
}

void check_objective(const Formula& f) {
  using K = Formula::Kind;
  switch (f.kind) {
    case K::Literal:
      if (f.lit.mode != NafMode::Plain) unsupported("default negation in a rule head");
      if (!f.lit.delay_guard.empty()) unsupported("delay quantifier in a rule head");
      return;
    case K::And:
      for (const auto& c : f.children) check_objective(strip_forall(c));
      return;
    case K::Or: unsupported("disjunction in a rule head");
    case K::Naf: unsupported("naf in a rule head");
    case K::Exists: unsupported("existential quantifier in a rule head");
    case K::True: unsupported("empty rule head");
    default: unsupported("nested implication in a rule head");
  }
}

void flatten_conj(const Formula& f, std::vector<Formula>& out) {
  Formula g = strip_forall(f);
  if (g.kind == Formula::Kind::And) {
    for (const auto& c : g.children) flatten_conj(c, out);
  } else {
    out.push_back(g);
  }
}

Formula negate_literal(Formula f) {
  if (f.lit.literal.atom.is_var()) unsupported("variable literal in an omni head");
  f.lit.literal.negated = !f.lit.literal.negated;
  return f;
}

Formula with_body(std::vector<Formula> parts, const std::optional<Formula>& body) {
  if (body) parts.push_back(*body);
  if (parts.empty()) return Formula::truth();
  return Formula::conj(std::move(parts));
}

}  // namespace

std::vector<Rule> omni_transform(const Rule& r) {
  Formula head = strip_forall(r.head);
  if (head.kind != Formula::Kind::Implies) {
    check_objective(head);
    Rule out = r;
    out.head = head;
    return {out};
  }
  std::vector<Formula> hyps;
  Formula cur = head;
  while (cur.kind == Formula::Kind::Implies) {
    flatten_conj(cur.children[0], hyps);
    cur = strip_forall(cur.children[1]);
  }
  std::vector<Formula> concl;
  flatten_conj(cur, concl);
  for (const auto& h : hyps) {
    if (!h.is_literal()) unsupported("hypothesis of an omni head must be a literal");
    check_objective(h);
  }
  for (const auto& c : concl) {
    if (!c.is_literal()) unsupported("conclusion of an omni head must be a literal or conjunction");
    check_objective(c);
  }

  std::vector<Rule> out;
  Rule main = r;
  main.head = Formula::conj(concl);
  main.body = with_body(hyps, r.body);
  out.push_back(main);

  // One contrapositive per hypothesis.
  for (std::size_t i = 0; i < hyps.size(); ++i) {
    Rule c = r;
    c.id = r.id + "_c" + std::to_string(i + 1);
    c.explicit_id = false;
    c.head = negate_literal(hyps[i]);
    std::vector<Formula> parts;
    for (std::size_t j = 0; j < hyps.size(); ++j)
      if (j != i) parts.push_back(hyps[j]);
    std::vector<Formula> negc;
    for (const auto& k : concl) negc.push_back(negate_literal(k));
    parts.push_back(Formula::disj(std::move(negc)));
    c.body = with_body(std::move(parts), r.body);
    out.push_back(c);
  }
  return out;
}

// ---------------------------------------------------------------- Lloyd-Topor

namespace {

using Conj = std::vector<DefaultLiteral>;

void add_vars(std::vector<Term>& set, const std::vector<Term>& more) {
  for (const auto& v : more) {
    bool seen = false;
    for (const auto& s : set)
      if (s.var_id() == v.var_id()) seen = true;
    if (!seen) set.push_back(v);
  }
}

std::vector<Term> all_vars(const Formula& f) { return formula_variables(f); }

bool contains_var(const std::vector<Term>& set, const Term& v) {
  for (const auto& s : set)
    if (s.var_id() == v.var_id()) return true;
  return false;
}

Formula push_naf(const Formula& f) {
  using K = Formula::Kind;
  switch (f.kind) {
    case K::True:
      return Formula::atom(Term::atom("fail"));
    case K::Literal: {
      Formula g = f;
      if (g.lit.mode == NafMode::Plain) {
        g.lit.mode = NafMode::Naf;
        return g;
      }
      if (g.lit.mode == NafMode::Naf) {
        g.lit.mode = NafMode::Plain;
        return g;
      }
      return Formula::naf(f);
    }
    case K::And: {
      std::vector<Formula> parts;
      for (const auto& c : f.children) parts.push_back(push_naf(c));
      return Formula::disj(std::move(parts));
    }
    case K::Or: {
      std::vector<Formula> parts;
      for (const auto& c : f.children) parts.push_back(push_naf(c));
      return Formula::conj(std::move(parts));
    }
    case K::Naf:
      return f.children[0];
    case K::Implies:
      return Formula::conj({f.children[0], push_naf(f.children[1])});
    case K::Equiv:
      return Formula::disj({Formula::conj({f.children[0], push_naf(f.children[1])}),
                            Formula::conj({f.children[1], push_naf(f.children[0])})});
    case K::Forall:
      return push_naf(f.children[0]);
    case K::Exists:
      return Formula::forall(f.vars, Formula::naf(f.children[0]));
  }
  return f;
}

struct LtRun {
  LtContext& ctx;
  const Rule& src;
  std::vector<LtRule>& out;

  std::string fresh_aux_name() {
    for (;;) {
      std::string name = "aux" + std::to_string(ctx.next_aux++);
      if (std::find(ctx.taken.begin(), ctx.taken.end(), name) == ctx.taken.end()) return name;
    }
  }

  // Defines name(fv) :- body through further reduction; returns the naf call.
  DefaultLiteral make_aux(const std::vector<Term>& fv, const Formula& body) {
    std::string name = fresh_aux_name();
    Term head = fv.empty() ? Term::atom(name) : Term::app(name, fv);
    for (auto& conj : reduce(body, fv)) {
      LtRule r;
      r.head.atom = head;
      r.body = std::move(conj);
      r.rule_id = src.id + "_" + name;
      r.tag = src.tag;
      r.strict = true;
      r.auxiliary = true;
      r.provenance = src.provenance;
      out.push_back(std::move(r));
    }
    DefaultLiteral call;
    call.mode = NafMode::Naf;
    call.literal.atom = head;
    return call;
  }

  std::vector<Conj> reduce(const Formula& f, const std::vector<Term>& outer) {
    using K = Formula::Kind;
    switch (f.kind) {
      case K::True:
        return {Conj{}};
      case K::Literal:
        return {Conj{f.lit}};
      case K::And: {
        std::vector<Conj> acc{Conj{}};
        for (std::size_t i = 0; i < f.children.size(); ++i) {
          std::vector<Term> ctx_vars = outer;
          for (std::size_t j = 0; j < f.children.size(); ++j)
            if (j != i) add_vars(ctx_vars, all_vars(f.children[j]));
          auto alts = reduce(f.children[i], ctx_vars);
          std::vector<Conj> next;
          for (const auto& a : acc)
            for (const auto& b : alts) {
              Conj c = a;
              c.insert(c.end(), b.begin(), b.end());
              next.push_back(std::move(c));
            }
          acc = std::move(next);
        }
        return acc;
      }
      case K::Or: {
        std::vector<Conj> acc;
        for (const auto& c : f.children) {
          auto alts = reduce(c, outer);
          acc.insert(acc.end(), alts.begin(), alts.end());
        }
        return acc;
      }
      case K::Exists:
        return reduce(f.children[0], outer);
      case K::Naf: {
        const Formula& g = f.children[0];
        if (g.is_literal() && g.lit.mode == NafMode::Plain) {
          DefaultLiteral l = g.lit;
          l.mode = NafMode::Naf;
          return {Conj{l}};
        }
        if (g.is_literal() && g.lit.mode == NafMode::Naf) {
          DefaultLiteral l = g.lit;
          l.mode = NafMode::Plain;
          return {Conj{l}};
        }
        std::vector<Term> fv;
        for (const auto& v : all_vars(g))
          if (contains_var(outer, v)) fv.push_back(v);
        return {Conj{make_aux(fv, g)}};
      }
      case K::Forall: {
        std::vector<Term> fv;
        for (const auto& v : all_vars(f.children[0]))
          if (!contains_var(f.vars, v)) fv.push_back(v);
        return {Conj{make_aux(fv, push_naf(f.children[0]))}};
      }
      case K::Implies: {
        const Formula& p = f.children[0];
        const Formula& q = f.children[1];
        std::vector<Term> fv;
        std::vector<Term> pq = all_vars(p);
        add_vars(pq, all_vars(q));
        for (const auto& v : pq)
          if (contains_var(outer, v)) fv.push_back(v);
        return {Conj{make_aux(fv, Formula::conj({p, push_naf(q)}))}};
      }
      case K::Equiv: {
        Formula both = Formula::conj({Formula::implies(f.children[0], f.children[1]),
                                      Formula::implies(f.children[1], f.children[0])});
        return reduce(both, outer);
      }
    }
    return {};
  }
};

}  // namespace

std::vector<LtRule> lloyd_topor(const Rule& r, LtContext& ctx) {
  if (!r.head.is_literal()) throw UnsupportedHead("rule head is not a single literal");
  std::vector<LtRule> aux;
  LtRun run{ctx, r, aux};
  std::vector<Term> outer;
  collect_variables(r.head.lit.literal.atom, outer);
  std::vector<Conj> bodies = r.body ? run.reduce(*r.body, outer) : std::vector<Conj>{Conj{}};
  std::vector<LtRule> out;
  for (auto& b : bodies) {
    LtRule lr;
    lr.head = r.head.lit.literal;
    lr.body = std::move(b);
    lr.rule_id = r.id;
    lr.tag = r.tag;
    lr.strict = r.strict;
    lr.provenance = r.provenance;
    out.push_back(std::move(lr));
  }
  for (auto& a : aux) out.push_back(std::move(a));
  return out;
}

// ---------------------------------------------------------------- theories

std::string theory_source(Theory t) {
  switch (t) {
    case Theory::None:
      return "";
    case Theory::AtSimple:
      return "defeated(?T) :- (refutes(?T2,?T) or rebuts(?T2,?T)), candidate(?T2).\n"
             "refutes(?T,?T2) :- conflicts(?T,?T2), overrides(?T,?T2).\n"
             "rebuts(?T,?T2) :- conflicts(?T,?T2), naf overrides(?T,?T2).\n"
             "conflicts(?T,?T2) :- (opposes(?T,?T2) or opposes(?T2,?T)), candidate(?T2).\n"
             "candidate(?T) :- headof(?T,?H), ?H.\n";
    case Theory::AtDefault:
      return "defeated(?T) :- (refutes(?T2,?T) or rebuts(?T2,?T)), candidate(?T2).\n"
             "refutes(?T,?T2) :- conflicts(?T,?T2), overrides(?T,?T2).\n"
             "rebuts(?T,?T2) :- conflicts(?T,?T2), naf overrides(?T,?T2), naf overrides(?T2,?T).\n"
             "conflicts(?T,?T2) :- opposes(?T,?T2) or opposes(?T2,?T).\n"
             "candidate(?T) :- headof(?T,?H), ?H.\n";
  }
  return "";
}

namespace {

const char* kFrameAxioms =
    "isa(?O,?C) :- sub(?D,?C), isa(?O,?D).\n"
    "sub(?A,?C) :- sub(?A,?B), sub(?B,?C).\n";

void collect_pred_names(const Term& atom, std::vector<std::string>& out) {
  Term f = atom;
  while (f.is_app()) f = f.functor();
  if (f.is_atom()) out.push_back(f.text());
}

void collect_formula_preds(const Formula& f, std::vector<std::string>& out) {
  if (f.is_literal()) {
    collect_pred_names(f.lit.literal.atom, out);
    return;
  }
  for (const auto& c : f.children) collect_formula_preds(c, out);
}

BodyLiteral encode_body(const DefaultLiteral& l) {
  BodyLiteral b;
  b.mode = l.mode;
  b.atom = encode_literal(l.literal);
  b.delay_guard = l.delay_guard;
  return b;
}

bool meta_head(const Term& encoded) {
  std::string base;
  bool neg = false;
  if (!first_order_reserved(encoded, &base, &neg)) return false;
  return base != "frame" && base != "isa" && base != "sub";
}

struct Compiler {
  const Program& prog;
  Theory theory;
  CompiledKB kb;
  std::vector<Diagnostic> diags;
  LtContext lt;

  void diag(const Provenance& p, const std::string& msg) { diags.push_back({p.file, p.line, p.column, msg}); }

  NormalRule encode_rule(const LtRule& r, RuleOrigin origin) {
    NormalRule n;
    n.head = encode_literal(r.head);
    if (n.head.is_var()) throw std::invalid_argument("rule head is a variable");
    if (is_builtin(n.head)) throw std::invalid_argument("rule head is a builtin: " + literal_text(n.head));
    for (const auto& b : r.body) n.body.push_back(encode_body(b));
    n.rule_id = r.rule_id;
    n.tag = encode_term(r.tag);
    n.origin = r.auxiliary ? RuleOrigin::LtAuxiliary : origin;
    n.provenance = r.provenance;
    return n;
  }

  void add_source_rules(const std::vector<Rule>& rules, RuleOrigin origin) {
    for (const Rule& r : rules) {
      std::vector<LtRule> lrs;
      try {
        for (const Rule& o : omni_transform(r)) {
          std::vector<Formula> heads;
          flatten_conj(o.head, heads);
          for (auto& h : heads) {
            Rule single = o;
            single.head = h;
            auto part = lloyd_topor(single, lt);
            bool omni = o.id != r.id;
            for (auto& p : part) {
              if (omni && !p.auxiliary) p.rule_id = o.id;
              lrs.push_back(std::move(p));
            }
          }
        }
      } catch (const UnsupportedHead& e) {
        diag(r.provenance, std::string("unsupported head: ") + e.what());
        continue;
      }
      bool omni_rule = strip_forall(r.head).kind == Formula::Kind::Implies;
      for (const auto& lr : lrs) {
        try {
          RuleOrigin o = origin;
          if (origin == RuleOrigin::User && lr.rule_id != r.id && !lr.auxiliary) o = RuleOrigin::OmniContrapositive;
          NormalRule n = encode_rule(lr, o);
          n.defeasible = origin == RuleOrigin::User && theory != Theory::None && !lr.strict && !lr.auxiliary &&
                         (r.body.has_value() || omni_rule) && !meta_head(n.head);
          kb.rules.push_back(std::move(n));
          if (origin == RuleOrigin::User && !lr.auxiliary) kb.tag_index[lr.rule_id] = encode_term(lr.tag);
        } catch (const std::invalid_argument& e) {
          diag(r.provenance, e.what());
        }
      }
    }
  }

  std::vector<Rule> parse_internal(const std::string& src, const std::string& prefix) {
    Program p = parse_program(src, "<" + prefix + ">");
    int k = 1;
    for (auto& r : p.rules) {
      r.id = prefix + "_" + std::to_string(k++);
      r.tag = Term::atom(r.id);
      r.strict = true;
    }
    return p.rules;
  }

  void apply_defeasibility() {
    std::set<std::string> strict_tags, defeasible_tags;
    for (auto& n : kb.rules) {
      if (n.origin != RuleOrigin::User && n.origin != RuleOrigin::OmniContrapositive) continue;
      (n.defeasible ? defeasible_tags : strict_tags).insert(canonical_text(n.tag));
      if (!n.defeasible) continue;
      BodyLiteral d;
      d.mode = NafMode::Naf;
      d.atom = Term::app("defeated", {n.tag});
      n.body.push_back(d);
    }
    for (const auto& t : strict_tags)
      if (defeasible_tags.count(t)) kb.warnings.push_back("tag " + t + " is shared by strict and defeasible rules");
  }

  void apply_skips() {
    for (const auto& s : prog.skips) {
      std::vector<Formula> conds;
      flatten_conj(s.condition, conds);
      std::vector<Term> cond_atoms;
      bool ok = true;
      for (const auto& c : conds) {
        if (c.kind == Formula::Kind::True) continue;
        if (!c.is_literal() || c.lit.mode != NafMode::Plain || !is_builtin(c.lit.literal.atom)) {
          diag(s.provenance, "skip condition must be a conjunction of builtin tests");
          ok = false;
          break;
        }
        cond_atoms.push_back(encode_literal(c.lit.literal));
      }
      if (!ok) continue;
      Term templ;
      try {
        templ = encode_literal(Literal{false, s.pattern});
      } catch (const std::invalid_argument& e) {
        diag(s.provenance, e.what());
        continue;
      }
      std::vector<Term> repls;
      for (const auto& r : s.replacements) repls.push_back(encode_term(r));
      for (auto& n : kb.rules) {
        if (n.origin != RuleOrigin::User && n.origin != RuleOrigin::OmniContrapositive) continue;
        if (!unify(rename_apart(templ), n.head)) continue;
        // Shared renaming of template, guarded variables, replacements and condition.
        std::vector<Term> bundle{templ, Term::list(s.vars), Term::list(repls), Term::list(cond_atoms)};
        auto fresh = rename_apart(bundle);
        const Term& t1 = fresh[0];
        std::vector<Term> inners = fresh[1].is_atom() ? std::vector<Term>{} : fresh[1].args();
        std::vector<Term> outs;
        Substitution to_out;
        for (const auto& v : inners) {
          Term o = Term::fresh_variable("Out");
          outs.push_back(o);
          to_out.bind(v.var_id(), o);
        }
        BodyLiteral g;
        g.atom = Term::app("$skip", {n.head, t1, Term::list(outs), Term::list(inners), fresh[2], fresh[3]});
        n.head = to_out.resolve(t1);
        n.body.push_back(g);
      }
    }
  }

  void add_fact(const Term& head, const std::string& id, RuleOrigin origin) {
    NormalRule n;
    n.head = head;
    n.rule_id = id;
    n.tag = Term::atom(id);
    n.origin = origin;
    kb.rules.push_back(std::move(n));
  }

  void run() {
    kb.theory = theory;
    // Names already used by user predicates are never reused for auxiliaries.
    for (const auto& r : prog.rules) {
      collect_formula_preds(r.head, lt.taken);
      if (r.body) collect_formula_preds(*r.body, lt.taken);
    }
    std::sort(lt.taken.begin(), lt.taken.end());
    lt.taken.erase(std::unique(lt.taken.begin(), lt.taken.end()), lt.taken.end());

    for (const auto& r : prog.rules) kb.user_rule_ids.push_back(r.id);
    kb.user_rule_count = static_cast<int>(prog.rules.size());
    add_source_rules(prog.rules, RuleOrigin::User);
    if (theory != Theory::None) apply_defeasibility();
    apply_skips();

    // Descriptor store.
    for (const auto& r : prog.rules) {
      Term id = Term::atom(r.id);
      std::vector<std::pair<std::string, Term>> attrs{{"tag", r.tag}};
      for (const auto& d : r.descriptors) attrs.push_back(d);
      for (const auto& [k, v] : attrs) {
        Term fact = encode_literal(Literal{false, Term::app("ruledesc", {id, Term::atom(k), v})});
        kb.descriptor_store.push_back(fact);
        add_fact(fact, r.id + "_desc", RuleOrigin::Descriptor);
      }
    }

    if (theory != Theory::None) {
      std::vector<std::size_t> defeasible;
      for (std::size_t i = 0; i < kb.rules.size(); ++i)
        if (kb.rules[i].defeasible) defeasible.push_back(i);
      std::set<std::string> seen_headof;
      for (std::size_t i : defeasible) {
        const NormalRule& n = kb.rules[i];
        Term templ = rename_apart(n.head);
        std::string key = canonical_text(Term::app("headof", {n.tag, templ}));
        if (!seen_headof.insert(key).second) continue;
        kb.headof.emplace_back(n.tag, templ);
      }
      for (const auto& [tag, templ] : kb.headof)
        add_fact(Term::app("headof", {tag, templ}), "headof", RuleOrigin::DefeasibilityTheory);
      // Automatic opposition between A and neg A heads.
      std::set<std::string> seen;
      int k = 1;
      for (const auto& [t1, h1] : kb.headof) {
        Literal l1 = decode_literal(h1);
        if (l1.negated) continue;
        for (const auto& [t2, h2] : kb.headof) {
          if (t1 == t2) continue;
          if (!decode_literal(h2).negated) continue;
          if (!unify(neg_twin(h1), rename_apart(h2))) continue;
          Term fact = Term::app("opposes", {t1, t2});
          if (!seen.insert(canonical_text(fact)).second) continue;
          add_fact(fact, "auto_opposes_" + std::to_string(k++), RuleOrigin::DefeasibilityTheory);
        }
      }
      add_source_rules(parse_internal(theory_source(theory), "theory"), RuleOrigin::DefeasibilityTheory);
    }
    add_source_rules(parse_internal(kFrameAxioms, "frame_axiom"), RuleOrigin::FrameAxiom);

    for (const auto& t : prog.tables) kb.table_decls[predicate_key_for_indicator(t.predicate)] = {t.subgoal_abstract, t.answer_abstract};
    kb.textgen = prog.textgen;
    kb.aux_counter = lt.next_aux;
    kb.user_predicates = lt.taken;
    kb.index();
  }
};

}  // namespace

void CompiledKB::index() {
  by_predicate.clear();
  variable_head_rules.clear();
  for (std::size_t i = 0; i < rules.size(); ++i) {
    std::string k = predicate_key(rules[i].head);
    if (k.find('?') != std::string::npos) variable_head_rules.push_back(i);
    else by_predicate[k].push_back(i);
  }
}

CompiledKB compile(const Program& program, Theory theory) {
  Compiler c{program, theory, {}, {}, {}};
  c.run();
  if (!c.diags.empty()) throw CompileError(std::move(c.diags));
  return std::move(c.kb);
}

CompiledGoal compile_goal(const CompiledKB& kb, const Formula& goal) {
  CompiledGoal out;
  out.source = goal;
  out.variables = formula_variables(goal);
  if (goal.is_literal() && goal.lit.mode == NafMode::Plain && goal.lit.delay_guard.empty() &&
      !goal.lit.literal.atom.is_var()) {
    Term enc = encode_literal(goal.lit.literal);
    if (!is_builtin(enc)) {
      out.root = enc;
      out.root_variables = out.variables;
      return out;
    }
  }
  Rule wrapper;
  wrapper.id = "query";
  wrapper.tag = Term::atom("query");
  wrapper.strict = true;
  wrapper.head = Formula::atom(Term::app("$query", {Term::list(out.variables)}));
  wrapper.body = goal;
  LtContext ctx;
  ctx.next_aux = kb.aux_counter;
  ctx.taken = kb.user_predicates;
  collect_formula_preds(goal, ctx.taken);
  for (const auto& lr : lloyd_topor(wrapper, ctx)) {
    NormalRule n;
    n.head = encode_literal(lr.head);
    for (const auto& b : lr.body) n.body.push_back(encode_body(b));
    n.rule_id = lr.rule_id;
    n.tag = Term::atom("query");
    n.origin = lr.auxiliary ? RuleOrigin::LtAuxiliary : RuleOrigin::User;
    out.extra.push_back(std::move(n));
  }
  out.root = out.extra.front().head;
  out.root_variables = out.variables;
  return out;
}

}  // namespace silk
