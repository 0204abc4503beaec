#include "silk/kernel.hpp"

#include <algorithm>
#include <atomic>
#include <cassert>
#include <cctype>
#include <functional>
#include <stdexcept>
#include <unordered_set>

namespace silk {

struct Term::Node {
  TermKind kind;
  std::string text;
  std::int64_t value = 0;  // integer value or variable id
  Term functor{Term::Null{}};
  std::vector<Term> args;
  bool ground = true;
  std::uint32_t depth = 0;
  std::size_t hash = 0;
};

namespace {

std::atomic<VarId> g_next_var{1u << 20};

std::size_t mix(std::size_t h, std::size_t v) {
  return h ^ (v + 0x9e3779b97f4a7c15ULL + (h << 6) + (h >> 2));
}

const std::string& empty_string() {
  static const std::string s;
  return s;
}

}  // namespace

Term::Term(std::shared_ptr<const Node> node) : node_(std::move(node)) {}

Term::Term() {
  static const Term nil = Term::atom("[]");
  node_ = nil.node_;
}

Term Term::variable(VarId id, std::string name) {
  auto n = std::make_shared<Node>();
  n->kind = TermKind::Variable;
  n->value = static_cast<std::int64_t>(id);
  n->text = std::move(name);
  n->ground = false;
  n->hash = mix(0x51, id);
  return Term(std::move(n));
}

Term Term::fresh_variable(std::string name) {
  return variable(g_next_var.fetch_add(1, std::memory_order_relaxed), std::move(name));
}

Term Term::atom(std::string_view name) {
  auto n = std::make_shared<Node>();
  n->kind = TermKind::Atom;
  n->text = std::string(name);
  n->hash = mix(0xa7, std::hash<std::string_view>{}(name));
  return Term(std::move(n));
}

Term Term::integer(std::int64_t value) {
  auto n = std::make_shared<Node>();
  n->kind = TermKind::Integer;
  n->value = value;
  n->hash = mix(0x17, std::hash<std::int64_t>{}(value));
  return Term(std::move(n));
}

Term Term::string(std::string_view text) {
  auto n = std::make_shared<Node>();
  n->kind = TermKind::String;
  n->text = std::string(text);
  n->hash = mix(0x5f, std::hash<std::string_view>{}(text));
  return Term(std::move(n));
}

Term Term::app(Term functor, std::vector<Term> args) {
  if (args.empty()) throw std::invalid_argument("application requires at least one argument");
  auto n = std::make_shared<Node>();
  n->kind = TermKind::Application;
  n->ground = functor.ground();
  std::size_t h = mix(0x3c, functor.hash());
  std::uint32_t d = 0;
  for (const auto& a : args) {
    n->ground = n->ground && a.ground();
    h = mix(h, a.hash());
    d = std::max(d, a.node_->depth);
  }
  n->depth = std::max(functor.node_->depth, d + 1);
  n->hash = h;
  n->functor = std::move(functor);
  n->args = std::move(args);
  return Term(std::move(n));
}

Term Term::app(std::string_view functor, std::vector<Term> args) {
  return app(atom(functor), std::move(args));
}

Term Term::list(std::vector<Term> items) {
  if (items.empty()) return atom("[]");
  return app(atom("[]"), std::move(items));
}

TermKind Term::kind() const { return node_->kind; }

std::size_t Term::depth() const { return node_->depth; }

bool Term::is_atom(std::string_view name) const { return is_atom() && node_->text == name; }

bool Term::is_app(std::string_view name, std::size_t arity) const {
  return is_app() && node_->args.size() == arity && node_->functor.is_atom(name);
}

bool Term::is_list() const {
  if (is_atom("[]")) return true;
  return is_app() && node_->functor.is_atom("[]");
}

VarId Term::var_id() const {
  assert(is_var());
  return static_cast<VarId>(node_->value);
}

const std::string& Term::text() const { return node_ ? node_->text : empty_string(); }

std::int64_t Term::int_value() const {
  assert(is_integer());
  return node_->value;
}

const Term& Term::functor() const {
  assert(is_app());
  return node_->functor;
}

const std::vector<Term>& Term::args() const {
  static const std::vector<Term> none;
  return is_app() ? node_->args : none;
}

std::size_t Term::arity() const { return is_app() ? node_->args.size() : 0; }

bool Term::ground() const { return node_->ground; }

std::size_t Term::hash() const { return node_->hash; }

bool operator==(const Term& a, const Term& b) {
  if (a.node_ == b.node_) return true;
  if (a.node_->hash != b.node_->hash || a.node_->kind != b.node_->kind) return false;
  switch (a.kind()) {
    case TermKind::Variable:
    case TermKind::Integer:
      return a.node_->value == b.node_->value;
    case TermKind::Atom:
    case TermKind::String:
      return a.node_->text == b.node_->text;
    case TermKind::Application:
      if (a.arity() != b.arity() || a.functor() != b.functor()) return false;
      for (std::size_t i = 0; i < a.arity(); ++i)
        if (a.arg(i) != b.arg(i)) return false;
      return true;
  }
  return false;
}


const char* to_string(TruthValue tv) {
  switch (tv) {
    case TruthValue::True: return "true";
    case TruthValue::Undefined: return "undefined";
    case TruthValue::False: return "false";
  }
  return "?";
}

// ---------------------------------------------------------------- substitution

const Term* Substitution::lookup(VarId var) const {
  auto it = bindings_.find(var);
  return it == bindings_.end() ? nullptr : &it->second;
}

Term Substitution::walk(Term t) const {
  while (t.is_var()) {
    const Term* b = lookup(t.var_id());
    if (!b) break;
    t = *b;
  }
  return t;
}

Term Substitution::resolve(const Term& t) const {
  if (bindings_.empty() || t.ground()) return t;
  Term w = walk(t);
  if (w.is_var()) return w;
  if (!w.is_app()) return w;
  Term f = resolve(w.functor());
  std::vector<Term> args;
  args.reserve(w.arity());
  bool changed = f.hash() != w.functor().hash() || !(f == w.functor());
  for (const auto& a : w.args()) {
    args.push_back(resolve(a));
    if (!changed && !(args.back() == a)) changed = true;
  }
  if (!changed) return w;
  return Term::app(std::move(f), std::move(args));
}

Substitution Substitution::normalized() const {
  Substitution out;
  for (const auto& [v, t] : bindings_) out.bindings_[v] = resolve(t);
  return out;
}

bool occurs_in(VarId var, const Term& t) {
  if (t.ground()) return false;
  if (t.is_var()) return t.var_id() == var;
  if (!t.is_app()) return false;
  if (occurs_in(var, t.functor())) return true;
  for (const auto& a : t.args())
    if (occurs_in(var, a)) return true;
  return false;
}

namespace {

bool occurs_check(VarId var, const Term& t, const Substitution& s) {
  Term w = s.walk(t);
  if (w.is_var()) return w.var_id() == var;
  if (!w.is_app() || w.ground()) return false;
  if (occurs_check(var, w.functor(), s)) return true;
  for (const auto& a : w.args())
    if (occurs_check(var, a, s)) return true;
  return false;
}

}  // namespace

bool unify_into(const Term& a, const Term& b, Substitution& s) {
  Term x = s.walk(a);
  Term y = s.walk(b);
  if (x.is_var() && y.is_var() && x.var_id() == y.var_id()) return true;
  if (x.is_var()) {
    if (occurs_check(x.var_id(), y, s)) return false;
    s.bind(x.var_id(), y);
    return true;
  }
  if (y.is_var()) {
    if (occurs_check(y.var_id(), x, s)) return false;
    s.bind(y.var_id(), x);
    return true;
  }
  if (x.kind() != y.kind()) return false;
  switch (x.kind()) {
    case TermKind::Atom:
    case TermKind::String:
      return x.text() == y.text();
    case TermKind::Integer:
      return x.int_value() == y.int_value();
    case TermKind::Application:
      if (x.arity() != y.arity()) return false;
      if (x.ground() && y.ground()) return x == y;
      if (!unify_into(x.functor(), y.functor(), s)) return false;
      for (std::size_t i = 0; i < x.arity(); ++i)
        if (!unify_into(x.arg(i), y.arg(i), s)) return false;
      return true;
    case TermKind::Variable:
      break;
  }
  return false;
}

std::optional<Substitution> unify(const Term& a, const Term& b) {
  Substitution s;
  if (!unify_into(a, b, s)) return std::nullopt;
  return s.normalized();
}

// ---------------------------------------------------------------- variance

namespace {

bool variant_rec(const Term& a, const Term& b, std::unordered_map<VarId, VarId>& ab,
                 std::unordered_map<VarId, VarId>& ba) {
  if (a.kind() != b.kind()) return false;
  switch (a.kind()) {
    case TermKind::Variable: {
      auto [i, fresh_a] = ab.emplace(a.var_id(), b.var_id());
      auto [j, fresh_b] = ba.emplace(b.var_id(), a.var_id());
      return i->second == b.var_id() && j->second == a.var_id();
    }
    case TermKind::Atom:
    case TermKind::String:
      return a.text() == b.text();
    case TermKind::Integer:
      return a.int_value() == b.int_value();
    case TermKind::Application:
      if (a.arity() != b.arity()) return false;
      if (a.ground() != b.ground()) return false;
      if (a.ground()) return a == b;
      if (!variant_rec(a.functor(), b.functor(), ab, ba)) return false;
      for (std::size_t i = 0; i < a.arity(); ++i)
        if (!variant_rec(a.arg(i), b.arg(i), ab, ba)) return false;
      return true;
  }
  return false;
}

// One-way matching: binds only variables of the general side.
bool match_rec(const Term& g, const Term& s, std::unordered_map<VarId, Term>& theta) {
  if (g.is_var()) {
    auto [it, fresh] = theta.emplace(g.var_id(), s);
    return fresh || it->second == s;
  }
  if (g.kind() != s.kind()) return false;
  switch (g.kind()) {
    case TermKind::Atom:
    case TermKind::String:
      return g.text() == s.text();
    case TermKind::Integer:
      return g.int_value() == s.int_value();
    case TermKind::Application:
      if (g.arity() != s.arity()) return false;
      if (g.ground()) return g == s;
      if (!match_rec(g.functor(), s.functor(), theta)) return false;
      for (std::size_t i = 0; i < g.arity(); ++i)
        if (!match_rec(g.arg(i), s.arg(i), theta)) return false;
      return true;
    case TermKind::Variable:
      break;
  }
  return false;
}

}  // namespace

bool is_variant(const Term& a, const Term& b) {
  std::unordered_map<VarId, VarId> ab, ba;
  return variant_rec(a, b, ab, ba);
}

namespace {

std::size_t variant_hash_rec(const Term& t, std::unordered_map<VarId, std::size_t>& seen) {
  if (t.ground()) return t.hash();
  if (t.is_var()) {
    auto [it, fresh] = seen.emplace(t.var_id(), seen.size() + 1);
    return mix(0x51ed27u, it->second);
  }
  std::size_t h = mix(variant_hash_rec(t.functor(), seen), t.arity());
  for (const auto& a : t.args()) h = mix(h, variant_hash_rec(a, seen));
  return h;
}

}  // namespace

std::size_t variant_hash(const Term& t) {
  std::unordered_map<VarId, std::size_t> seen;
  return variant_hash_rec(t, seen);
}

bool subsumes(const Term& general, const Term& specific) {
  // Shared variables between the two sides must not alias.
  Term g = general.ground() ? general : rename_apart(general);
  std::unordered_map<VarId, Term> theta;
  return match_rec(g, specific, theta);
}

// ---------------------------------------------------------------- depth

// A compound functor sits at the level of its own application; the node
// caches max(depth(functor), 1 + max depth(arg)).
std::size_t term_depth(const Term& t) { return t.depth(); }

namespace {

Term abstract_rec(const Term& t, std::size_t level, std::size_t k, bool& abstracted) {
  if (t.is_var()) return t;
  if (level > k) {
    abstracted = true;
    return Term::fresh_variable();
  }
  if (!t.is_app()) return t;
  // The functor sits at the same level as its application.
  Term f = abstract_rec(t.functor(), level, k, abstracted);
  std::vector<Term> args;
  args.reserve(t.arity());
  for (const auto& a : t.args()) args.push_back(abstract_rec(a, level + 1, k, abstracted));
  return Term::app(std::move(f), std::move(args));
}

}  // namespace

Abstraction abstract_at_depth(const Term& literal, std::size_t k) {
  Abstraction out;
  if (!literal.is_app()) {
    out.literal = literal;
    return out;
  }
  out.literal = abstract_rec(literal, 0, k, out.abstracted);
  if (!out.abstracted) out.literal = literal;
  return out;
}

// ---------------------------------------------------------------- variables

void collect_variables(const Term& t, std::vector<Term>& out) {
  if (t.ground()) return;
  if (t.is_var()) {
    for (const auto& v : out)
      if (v.var_id() == t.var_id()) return;
    out.push_back(t);
    return;
  }
  if (!t.is_app()) return;
  collect_variables(t.functor(), out);
  for (const auto& a : t.args()) collect_variables(a, out);
}

std::vector<Term> variables_of(const Term& t) {
  std::vector<Term> out;
  collect_variables(t, out);
  return out;
}

namespace {

Term rename_rec(const Term& t, std::unordered_map<VarId, Term>& map) {
  if (t.ground()) return t;
  if (t.is_var()) {
    auto it = map.find(t.var_id());
    if (it != map.end()) return it->second;
    Term v = Term::fresh_variable(t.text());
    map.emplace(t.var_id(), v);
    return v;
  }
  Term f = rename_rec(t.functor(), map);
  std::vector<Term> args;
  args.reserve(t.arity());
  for (const auto& a : t.args()) args.push_back(rename_rec(a, map));
  return Term::app(std::move(f), std::move(args));
}

}  // namespace

Term rename_apart(const Term& t) {
  std::unordered_map<VarId, Term> map;
  return rename_rec(t, map);
}

std::vector<Term> rename_apart(const std::vector<Term>& ts) {
  std::unordered_map<VarId, Term> map;
  std::vector<Term> out;
  out.reserve(ts.size());
  for (const auto& t : ts) out.push_back(rename_rec(t, map));
  return out;
}

// ---------------------------------------------------------------- text

namespace {

bool is_reserved_word(std::string_view s) {
  static const std::unordered_set<std::string_view> words = {
      "and", "or", "naf", "neg", "unot", "forall", "exists", "wish", "is", "mod"};
  return words.count(s) > 0;
}

bool is_plain_identifier(std::string_view s) {
  if (s.empty()) return false;
  if (!std::isalpha(static_cast<unsigned char>(s[0]))) return false;
  for (char c : s)
    if (!std::isalnum(static_cast<unsigned char>(c)) && c != '_') return false;
  return !is_reserved_word(s);
}

void write_quoted(std::string& os, std::string_view s, char quote) {
  os += quote;
  for (char c : s) {
    if (c == quote || c == '\\') os += '\\';
    os += c;
  }
  os += quote;
}

void write_atom(std::string& os, std::string_view name) {
  if (name == "[]" || is_plain_identifier(name)) {
    os += name;
  } else {
    write_quoted(os, name, '\'');
  }
}

struct Writer {
  std::string os;
  std::unordered_map<VarId, std::size_t> numbering;
  bool canonical = true;

  void var(const Term& t) {
    if (!canonical && !t.text().empty() && t.text() != "_") {
      os += '?';
      os += t.text();
      return;
    }
    auto [it, fresh] = numbering.emplace(t.var_id(), numbering.size() + 1);
    os += "?_G";
    os += std::to_string(it->second);
  }

  void write(const Term& t) {
    switch (t.kind()) {
      case TermKind::Variable:
        var(t);
        return;
      case TermKind::Atom:
        write_atom(os, t.text());
        return;
      case TermKind::Integer:
        os += std::to_string(t.int_value());
        return;
      case TermKind::String:
        write_quoted(os, t.text(), '"');
        return;
      case TermKind::Application:
        break;
    }
    if (t.is_list()) {
      os += '[';
      for (std::size_t i = 0; i < t.arity(); ++i) {
        if (i) os += ',';
        write(t.arg(i));
      }
      os += ']';
      return;
    }
    const Term& f = t.functor();
    if (f.is_integer() || f.is_string()) {
      // Not produced by the reader; keep it re-parseable as an atom.
      write_atom(os, f.is_integer() ? std::to_string(f.int_value()) : f.text());
    } else {
      write(f);
    }
    os += '(';
    for (std::size_t i = 0; i < t.arity(); ++i) {
      if (i) os += ',';
      write(t.arg(i));
    }
    os += ')';
  }
};

}  // namespace

std::string atom_text(std::string_view name) {
  std::string out;
  write_atom(out, name);
  return out;
}

std::string canonical_text(const Term& t) {
  Writer w;
  w.write(t);
  return std::move(w.os);
}

std::vector<std::string> canonical_texts(const std::vector<Term>& ts) {
  Writer w;
  std::vector<std::string> out;
  for (const auto& t : ts) {
    w.os.clear();
    w.write(t);
    out.push_back(w.os);
  }
  return out;
}

std::string display_text(const Term& t) {
  Writer w;
  w.canonical = false;
  w.write(t);
  return std::move(w.os);
}

}  // namespace silk
