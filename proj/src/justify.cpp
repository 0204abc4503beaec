#include "silk/justify.hpp"

#include <algorithm>
#include <deque>
#include <set>
#include <unordered_map>

namespace silk {

const char* to_string(NodeKind k) {
  switch (k) {
    case NodeKind::G: return "G";
    case NodeKind::A: return "A";
    case NodeKind::F: return "F";
    case NodeKind::P: return "P";
  }
  return "?";
}

const char* to_string(TvColor c) {
  switch (c) {
    case TvColor::Green: return "green";
    case TvColor::Red: return "red";
    case TvColor::Amber: return "amber";
  }
  return "?";
}

const char* to_string(ArgStatus s) {
  return s == ArgStatus::UndefeatedBang ? "undefeated_bang" : "defeated_downarrow";
}

const char* to_string(Side s) { return s == Side::Pro ? "pro" : "con_bar"; }

const char* to_string(Expansion e) {
  switch (e) {
    case Expansion::MoreProAndConBlackPlus: return "more_pro_and_con_black_plus";
    case Expansion::MoreProGreenPlus: return "more_pro_green_plus";
    case Expansion::None: return "none";
  }
  return "?";
}

TvColor color_of(TruthValue tv) {
  return tv == TruthValue::True ? TvColor::Green : tv == TruthValue::False ? TvColor::Red : TvColor::Amber;
}

// ---------------------------------------------------------------- rendering

namespace {

std::string fill_template(const TextgenRule& r, const Term& atom) {
  auto s = unify(r.pattern, atom);
  std::string out = r.templ;
  if (!s) return out;
  std::vector<Term> vars = variables_of(r.pattern);
  std::sort(vars.begin(), vars.end(), [](const Term& a, const Term& b) { return a.text().size() > b.text().size(); });
  for (const auto& v : vars) {
    std::string slot = "?" + v.text();
    std::string value = display_text(s->resolve(v));
    for (std::size_t at = out.find(slot); at != std::string::npos; at = out.find(slot, at + value.size()))
      out.replace(at, slot.size(), value);
  }
  return out;
}

std::string render_positive(const Term& atom, const std::vector<TextgenRule>& rules) {
  const TextgenRule* best = nullptr;
  for (const auto& r : rules)
    if (subsumes(r.pattern, atom) && (!best || r.priority > best->priority)) best = &r;
  if (best) return fill_template(*best, atom);
  if (atom.is_app("isa", 2))
    return display_text(atom.arg(0)) + " is an instance of the class " + display_text(atom.arg(1));
  return canonical_text(atom);
}

}  // namespace

std::string render_literal(const Term& encoded_atom, const std::vector<TextgenRule>& rules) {
  Literal l = decode_literal(encoded_atom);
  std::string pos = render_positive(l.atom, rules);
  return l.negated ? "It is not the case that " + pos + "." : pos;
}

std::string render(const JustificationNode& n, const std::vector<TextgenRule>& rules) {
  switch (n.kind) {
    case NodeKind::G: {
      if (!n.restrained.empty() && n.literal.is_atom("$restrained")) return "restrained (" + n.restrained + ")";
      if (is_builtin(n.literal)) return literal_text(n.literal);
      std::string s = render_literal(n.literal, rules);
      if (n.naf) s = "naf " + s;
      if (n.revisit) s += " (see above)";
      if (!n.evaluated) s += " (not evaluated)";
      return s;
    }
    case NodeKind::F: return render_literal(n.literal, rules);
    case NodeKind::A: return n.rule_id + ": " + render_literal(n.head, rules);
    case NodeKind::P:
      return display_text(decode_term(n.overrider)) + " has priority over " + display_text(decode_term(n.overridden));
  }
  return {};
}

// ---------------------------------------------------------------- session

namespace {

constexpr std::size_t kMaxInstances = 64;
constexpr std::size_t kMaxMatches = 64;

struct Match {
  Term instance;
  TruthValue tv;
  std::string restrained;
};

struct Proto {
  JustificationNode n;
  std::vector<Proto> elems;  // A: body elements and P nodes
};

TruthValue conj(TruthValue a, TruthValue b) { return std::min(a, b); }

TruthValue negate(TruthValue tv) {
  return tv == TruthValue::True ? TruthValue::False : tv == TruthValue::False ? TruthValue::True : TruthValue::Undefined;
}

std::string restraint_of(const Answer& a) {
  for (const auto& alt : a.delays)
    for (const auto& e : alt)
      if (e.kind == DelayElem::Kind::Marker && e.reason != MarkerReason::Undefined) return to_string(e.reason);
  return {};
}

}  // namespace

struct Justification::Impl {
  std::shared_ptr<const CompiledKB> kb;
  const Engine& engine;
  std::deque<JustificationNode> nodes;
  std::vector<std::vector<Proto>> pending;
  std::unordered_map<std::string, std::vector<int>> tables_by_pred;

  Impl(std::shared_ptr<const CompiledKB> k, const Engine& e) : kb(std::move(k)), engine(e) {
    const auto& ts = engine.tables();
    for (std::size_t i = 0; i < ts.size(); ++i) tables_by_pred[ts[i].predicate].push_back(static_cast<int>(i));
  }

  const std::vector<TextgenRule>& textgen() const { return kb->textgen; }

  std::optional<TruthValue> truth(const Term& atom) const {
    try {
      return engine.truth_of(atom);
    } catch (const NoSuchTable&) {
      return std::nullopt;
    }
  }

  // Answers unifying with `atom` from tables whose call subsumes it;
  // nullopt when no table covers the literal.
  std::optional<std::vector<Match>> matches(const Term& atom) const {
    const auto& ts = engine.tables();
    std::vector<int> cands;
    std::string key = predicate_key(atom);
    if (key.rfind("?/", 0) == 0) {
      for (std::size_t i = 0; i < ts.size(); ++i) cands.push_back(static_cast<int>(i));
    } else if (auto it = tables_by_pred.find(key); it != tables_by_pred.end()) {
      cands = it->second;
    }
    bool covered = false;
    std::map<std::string, Match> found;
    for (int t : cands) {
      const Table& tb = ts[t];
      if (!subsumes(tb.subgoal, atom)) continue;
      covered = true;
      for (const auto& a : tb.answers) {
        if (a.deleted) continue;
        Term inst = a.literal.ground() ? a.literal : rename_apart(a.literal);
        auto u = unify(atom, inst);
        if (!u) continue;
        Term r = u->resolve(atom);
        std::string k = canonical_text(r);
        auto [it, fresh] = found.emplace(k, Match{r, a.tv(), restraint_of(a)});
        if (!fresh && a.tv() > it->second.tv) it->second = Match{r, a.tv(), restraint_of(a)};
      }
    }
    if (!covered) return std::nullopt;
    std::vector<Match> out;
    for (auto& [k, m] : found) out.push_back(std::move(m));
    std::stable_sort(out.begin(), out.end(), [](const Match& a, const Match& b) { return a.tv > b.tv; });
    if (out.size() > kMaxMatches) out.resize(kMaxMatches);
    return out;
  }

  std::vector<const NormalRule*> rules_for(const Term& atom) const {
    std::vector<const NormalRule*> out;
    std::string key = predicate_key(atom);
    if (auto it = kb->by_predicate.find(key); it != kb->by_predicate.end())
      for (std::size_t i : it->second) out.push_back(&kb->rules[i]);
    for (std::size_t i : kb->variable_head_rules) out.push_back(&kb->rules[i]);
    return out;
  }

  bool is_fact(const Term& ground_atom) const {
    for (const NormalRule* r : rules_for(ground_atom))
      if (r->body.empty() && subsumes(r->head, ground_atom)) return true;
    return false;
  }

  static bool is_defeat_check(const NormalRule& r, const BodyLiteral& b) {
    return r.defeasible && b.mode == NafMode::Naf && b.atom.is_app("defeated", 1);
  }

  Proto g_proto(const Term& lit, TruthValue tv, Side side) const {
    Proto p;
    p.n.kind = NodeKind::G;
    p.n.literal = lit;
    p.n.tv_color = color_of(tv);
    p.n.side = side;
    return p;
  }

  // ---- argument instances

  struct Walk {
    const NormalRule* rule;
    Term head, tag;
    std::vector<BodyLiteral> body;
    Side side;
    std::vector<Proto>* out;
    std::set<std::string>* seen;
  };

  void instances(const NormalRule& r, const Term& lit, Side side, std::vector<Proto>& out,
                 std::set<std::string>& seen) const {
    std::vector<Term> parts{r.head, r.tag};
    for (const auto& b : r.body) {
      parts.push_back(b.atom);
      for (const auto& g : b.delay_guard) parts.push_back(g);
    }
    parts = rename_apart(parts);
    Walk w{&r, parts[0], parts[1], {}, side, &out, &seen};
    std::size_t k = 2;
    for (const auto& b : r.body) {
      BodyLiteral c = b;
      c.atom = parts[k++];
      for (auto& g : c.delay_guard) g = parts[k++];
      w.body.push_back(std::move(c));
    }
    Substitution s;
    if (!unify_into(w.head, lit, s)) return;
    std::vector<Proto> elems;
    walk(w, 0, s, elems, std::nullopt);
  }

  void walk(const Walk& w, std::size_t i, const Substitution& s, std::vector<Proto>& elems,
            std::optional<TruthValue> defeated) const {
    if (w.out->size() >= kMaxInstances) return;
    if (i == w.body.size()) return finish(w, s, elems, defeated);
    const BodyLiteral& b = w.body[i];
    Term atom = s.resolve(b.atom);
    if (is_defeat_check(*w.rule, b)) return walk(w, i + 1, s, elems, truth(atom));

    if (is_builtin(atom)) {
      Substitution s2 = s;
      TruthValue tv = TruthValue::True;
      std::string restrained;
      if (atom.is_app("$skip", 6)) {
        tv = skip(atom, s2);
        if (tv == TruthValue::Undefined) restrained = to_string(MarkerReason::Skip);
      } else {
        switch (evaluate_builtin(atom, s2)) {
          case BuiltinOutcome::Fail: tv = TruthValue::False; break;
          case BuiltinOutcome::Succeed: break;
          case BuiltinOutcome::Undefined: tv = TruthValue::Undefined; break;
          case BuiltinOutcome::Unbound:
            tv = TruthValue::Undefined;
            restrained = to_string(MarkerReason::Builtin);
            break;
        }
      }
      Proto e = g_proto(s2.resolve(atom), tv, Side::Pro);
      e.n.restrained = restrained;
      elems.push_back(std::move(e));
      if (tv == TruthValue::False) finish(w, s2, elems, defeated);
      else walk(w, i + 1, s2, elems, defeated);
      elems.pop_back();
      return;
    }

    if (b.mode != NafMode::Plain) {
      TruthValue tv = TruthValue::Undefined;
      Proto e = g_proto(atom, tv, Side::Pro);
      e.n.naf = true;
      bool stop = false;
      if (!atom.ground()) {
        e.n.restrained = to_string(MarkerReason::Unsafe);
      } else if (auto t = truth(atom)) {
        tv = negate(*t);
        e.n.tv_color = color_of(tv);
        stop = tv == TruthValue::False;
      } else {
        e.n.evaluated = false;
        stop = true;
      }
      elems.push_back(std::move(e));
      if (stop) finish(w, s, elems, defeated);
      else walk(w, i + 1, s, elems, defeated);
      elems.pop_back();
      return;
    }

    auto ms = matches(atom);
    if (!ms || ms->empty()) {
      Proto e = g_proto(atom, TruthValue::False, Side::Pro);
      if (!ms) {
        e.n.evaluated = false;
        e.n.tv_color = TvColor::Amber;
      }
      elems.push_back(std::move(e));
      finish(w, s, elems, defeated);
      elems.pop_back();
      return;
    }
    for (const auto& m : *ms) {
      Substitution s2 = s;
      if (!unify_into(atom, m.instance, s2)) continue;
      Proto e = g_proto(m.instance, m.tv, Side::Pro);
      if (m.tv == TruthValue::True && m.instance.ground() && is_fact(m.instance)) e.n.kind = NodeKind::F;
      elems.push_back(std::move(e));
      walk(w, i + 1, s2, elems, defeated);
      elems.pop_back();
      if (w.out->size() >= kMaxInstances) return;
    }
  }

  TruthValue skip(const Term& atom, Substitution& s) const {
    if (!unify_into(atom.arg(0), atom.arg(1), s)) return TruthValue::False;
    for (const auto& cond : atom.arg(5).args()) {
      if (evaluate_builtin(s.resolve(cond), s) == BuiltinOutcome::Fail) {
        return unify_into(atom.arg(2), atom.arg(3), s) ? TruthValue::True : TruthValue::False;
      }
    }
    return unify_into(atom.arg(2), atom.arg(4), s) ? TruthValue::Undefined : TruthValue::False;
  }

  void finish(const Walk& w, const Substitution& s, const std::vector<Proto>& elems,
              std::optional<TruthValue> defeated) const {
    Proto a;
    a.n.kind = NodeKind::A;
    a.n.side = w.side;
    a.n.rule_id = w.rule->rule_id;
    a.n.head = s.resolve(w.head);
    a.n.tag = s.resolve(w.tag);
    TruthValue tv = TruthValue::True;
    for (const auto& e : elems) {
      TruthValue et = e.n.tv_color == TvColor::Green ? TruthValue::True
                    : e.n.tv_color == TvColor::Red ? TruthValue::False : TruthValue::Undefined;
      tv = conj(tv, et);
    }
    for (const auto& b : w.body) {
      if (is_defeat_check(*w.rule, b)) {
        if (!defeated) defeated = truth(s.resolve(b.atom));
        continue;
      }
      BodyLiteral c = b;
      c.atom = s.resolve(b.atom);
      a.n.body.push_back(std::move(c));
    }
    a.n.tv_color = color_of(tv);
    if (!w.rule->defeasible || (defeated && *defeated == TruthValue::False))
      a.n.arg_status = ArgStatus::UndefeatedBang;
    else if (defeated && *defeated == TruthValue::True)
      a.n.arg_status = ArgStatus::DefeatedDownarrow;

    std::string key = a.n.rule_id + "|" + canonical_text(a.n.head);
    for (const auto& e : elems) key += "|" + canonical_text(e.n.literal);
    if (!w.seen->insert(key).second) return;

    a.elems = elems;
    if (a.n.arg_status == ArgStatus::DefeatedDownarrow) {
      Term refutes = Term::app("refutes", {Term::fresh_variable(), a.n.tag});
      if (auto ms = matches(refutes)) {
        for (const auto& m : *ms) {
          Proto p;
          p.n.kind = NodeKind::P;
          p.n.side = Side::Pro;
          p.n.overrider = m.instance.arg(0);
          p.n.overridden = a.n.tag;
          Term ov = Term::app("overrides", {p.n.overrider, p.n.overridden});
          p.n.literal = ov;
          p.n.tv_color = color_of(truth(ov).value_or(m.tv));
          a.elems.push_back(std::move(p));
        }
      }
    }
    w.out->push_back(std::move(a));
  }

  // ---- layers

  std::vector<Proto> children_of(const JustificationNode& n) const {
    std::vector<Proto> out;
    if (n.kind != NodeKind::G || n.revisit || n.literal.is_atom("$restrained")) return out;
    if (is_builtin(n.literal)) return out;
    if (n.naf) {
      if (auto t = truth(n.literal)) out.push_back(g_proto(n.literal, *t, Side::Pro));
      return out;
    }
    if (!n.evaluated) return out;

    std::set<std::string> seen;
    for (const NormalRule* r : rules_for(n.literal)) {
      if (!r->body.empty()) continue;
      Substitution s;
      Term h = rename_apart(r->head);
      if (!unify_into(h, n.literal, s)) continue;
      Term inst = s.resolve(n.literal);
      if (!seen.insert("F|" + canonical_text(inst)).second) continue;
      Proto f;
      f.n.kind = NodeKind::F;
      f.n.literal = inst;
      f.n.tv_color = TvColor::Green;
      out.push_back(std::move(f));
    }
    std::vector<Proto> args;
    for (const NormalRule* r : rules_for(n.literal))
      if (!r->body.empty()) instances(*r, n.literal, Side::Pro, args, seen);
    for (auto& a : args) out.push_back(std::move(a));

    if (n.tv_color == TvColor::Amber) {
      if (auto ms = matches(n.literal)) {
        for (const auto& m : *ms) {
          if (m.restrained.empty() || !subsumes(m.instance, n.literal)) continue;
          Proto leaf = g_proto(Term::atom("$restrained"), TruthValue::Undefined, Side::Pro);
          leaf.n.restrained = m.restrained;
          out.push_back(std::move(leaf));
          break;
        }
      }
    }

    std::optional<Term> twin;
    try {
      twin = neg_twin(n.literal);
    } catch (const std::invalid_argument&) {
    }
    if (twin && truth(*twin)) {
      std::vector<Proto> cons;
      for (const NormalRule* r : rules_for(*twin))
        if (!r->body.empty()) instances(*r, *twin, Side::ConBar, cons, seen);
      for (auto& c : cons) out.push_back(std::move(c));
    }
    return out;
  }

  int create(Proto p, int parent) {
    JustificationNode n = std::move(p.n);
    n.id = static_cast<int>(nodes.size());
    n.parent = parent;
    if (n.kind == NodeKind::G && !n.naf && !is_builtin(n.literal)) {
      for (int a = parent; a >= 0; a = nodes[a].parent) {
        const JustificationNode& up = nodes[a];
        if (up.kind == NodeKind::G && !up.naf && is_variant(up.literal, n.literal)) {
          n.revisit = true;
          break;
        }
      }
    }
    std::vector<Proto> kids = n.kind == NodeKind::A ? std::move(p.elems) : children_of(n);
    n.text = render(n, textgen());
    nodes.push_back(std::move(n));
    pending.push_back(std::move(kids));
    refresh(nodes.back().id);
    return nodes.back().id;
  }

  void refresh(int id) {
    bool pro = false, con = false;
    for (const auto& k : pending[id]) (k.n.side == Side::ConBar ? con : pro) = true;
    nodes[id].expansion = con ? Expansion::MoreProAndConBlackPlus : pro ? Expansion::MoreProGreenPlus : Expansion::None;
  }

  void check(int id) const {
    if (id < 0 || static_cast<std::size_t>(id) >= nodes.size()) throw UnknownNode("unknown justification node " + std::to_string(id));
  }
};

Justification::Justification(const EvaluationHandle& h) {
  if (h.state() != EvalState::Completed) throw std::logic_error("justification needs a completed evaluation");
  impl_ = std::make_unique<Impl>(h.kb(), h.engine());
}

Justification::Justification(std::shared_ptr<const CompiledKB> kb, const Engine& engine)
    : impl_(std::make_unique<Impl>(std::move(kb), engine)) {}

Justification::~Justification() = default;

const JustificationNode& Justification::root(const Literal& l) { return root_encoded(encode_literal(l)); }

const JustificationNode& Justification::root_encoded(const Term& encoded) {
  TruthValue tv = impl_->engine.truth_of(encoded);
  int id = impl_->create(impl_->g_proto(encoded, tv, Side::Pro), -1);
  return impl_->nodes[id];
}

std::vector<JustificationNode> Justification::expand(int id) {
  impl_->check(id);
  std::vector<Proto> kids = std::move(impl_->pending[id]);
  impl_->pending[id].clear();
  for (auto& k : kids) {
    int c = impl_->create(std::move(k), id);
    impl_->nodes[id].children.push_back(c);
  }
  impl_->refresh(id);
  std::vector<JustificationNode> out;
  for (int c : impl_->nodes[id].children) out.push_back(impl_->nodes[c]);
  return out;
}

const JustificationNode& Justification::node(int id) const {
  impl_->check(id);
  return impl_->nodes[id];
}

std::size_t Justification::size() const { return impl_->nodes.size(); }

std::pair<std::size_t, std::size_t> Justification::pending(int id) const {
  impl_->check(id);
  std::pair<std::size_t, std::size_t> out{0, 0};
  for (const auto& k : impl_->pending[id]) ++(k.n.side == Side::ConBar ? out.second : out.first);
  return out;
}

const JustificationNode& justify_root(Justification& session, const Literal& l) { return session.root(l); }

}  // namespace silk
