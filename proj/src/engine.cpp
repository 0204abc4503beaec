#include "silk/engine.hpp"

#include <algorithm>
#include <deque>
#include <map>

#include "silk/stack.hpp"

namespace silk {

const char* to_string(MarkerReason r) {
  switch (r) {
    case MarkerReason::Abstraction: return "abstraction";
    case MarkerReason::Skip: return "skip";
    case MarkerReason::Unsafe: return "unsafe";
    case MarkerReason::Undefined: return "undefined";
    case MarkerReason::Builtin: return "builtin";
  }
  return "?";
}

bool operator<(const DelayElem& a, const DelayElem& b) {
  if (a.kind != b.kind) return a.kind < b.kind;
  if (a.table != b.table) return a.table < b.table;
  if (a.answer != b.answer) return a.answer < b.answer;
  if (a.hash != b.hash) return a.hash < b.hash;
  if (a.reason != b.reason) return a.reason < b.reason;
  if (a.kind == DelayElem::Kind::Neg && !(a.literal == b.literal))
    return canonical_text(a.literal) < canonical_text(b.literal);
  return false;
}

bool operator==(const DelayElem& a, const DelayElem& b) {
  return a.kind == b.kind && a.table == b.table && a.answer == b.answer && a.hash == b.hash && a.reason == b.reason &&
         (a.kind != DelayElem::Kind::Neg || a.literal == b.literal);
}

namespace {

DelaySet with(const DelaySet& d, DelayElem e) {
  DelaySet out = d;
  auto it = std::lower_bound(out.begin(), out.end(), e);
  if (it == out.end() || !(*it == e)) out.insert(it, std::move(e));
  return out;
}

DelayElem marker(MarkerReason r) {
  DelayElem e;
  e.kind = DelayElem::Kind::Marker;
  e.reason = r;
  return e;
}

// Three-valued solution of a propositional residual program by W_P
// iteration: T_P steps interleaved with removal of the greatest unfounded set.
struct PropRule {
  int head;
  std::vector<int> pos;
  std::vector<int> neg;
};

std::vector<TruthValue> wp_model(int n, const std::vector<PropRule>& rules) {
  std::vector<int> val(n, 0);  // 1 true, -1 false, 0 unknown
  std::vector<std::vector<int>> rules_using(n);  // positive occurrences
  for (std::size_t r = 0; r < rules.size(); ++r)
    for (int p : rules[r].pos) rules_using[p].push_back(static_cast<int>(r));
  bool changed = true;
  while (changed) {
    changed = false;
    // T_P to its fixpoint
    for (bool grew = true; grew;) {
      grew = false;
      for (const auto& r : rules) {
        if (val[r.head] == 1) continue;
        bool ok = std::all_of(r.pos.begin(), r.pos.end(), [&](int p) { return val[p] == 1; }) &&
                  std::all_of(r.neg.begin(), r.neg.end(), [&](int c) { return val[c] == -1; });
        if (ok) {
          val[r.head] = 1;
          grew = changed = true;
        }
      }
    }
    // atoms with possible support; the rest form the greatest unfounded set
    std::vector<char> supported(n, 0);
    std::vector<int> missing(rules.size(), 0);
    std::vector<int> queue;
    for (std::size_t r = 0; r < rules.size(); ++r) {
      const auto& rule = rules[r];
      bool blocked = std::any_of(rule.pos.begin(), rule.pos.end(), [&](int p) { return val[p] == -1; }) ||
                     std::any_of(rule.neg.begin(), rule.neg.end(), [&](int c) { return val[c] == 1; });
      if (blocked) {
        missing[r] = -1;
        continue;
      }
      missing[r] = static_cast<int>(rule.pos.size());
      if (missing[r] == 0 && !supported[rule.head]) {
        supported[rule.head] = 1;
        queue.push_back(rule.head);
      }
    }
    while (!queue.empty()) {
      int a = queue.back();
      queue.pop_back();
      for (int r : rules_using[a]) {
        if (missing[r] <= 0) continue;
        // an atom may occur twice in one body
        int cnt = static_cast<int>(std::count(rules[r].pos.begin(), rules[r].pos.end(), a));
        missing[r] -= cnt;
        if (missing[r] == 0 && !supported[rules[r].head]) {
          supported[rules[r].head] = 1;
          queue.push_back(rules[r].head);
        }
      }
    }
    for (int a = 0; a < n; ++a) {
      if (!supported[a] && val[a] == 0) {
        val[a] = -1;
        changed = true;
      }
    }
  }
  std::vector<TruthValue> out(n);
  for (int a = 0; a < n; ++a)
    out[a] = val[a] == 1 ? TruthValue::True : val[a] == -1 ? TruthValue::False : TruthValue::Undefined;
  return out;
}

struct InstantiationFault {};

std::int64_t eval_arith(const Term& t0, const Substitution& s) {
  Term t = s.walk(t0);
  if (t.is_integer()) return t.int_value();
  if (t.is_var()) throw InstantiationFault{};
  if (t.is_app() && t.functor().is_atom("apply") && t.arity() == 3 && t.arg(0).is_atom()) {
    const std::string& op = t.arg(0).text();
    std::int64_t a = eval_arith(t.arg(1), s);
    std::int64_t b = eval_arith(t.arg(2), s);
    if (op == "+") return a + b;
    if (op == "-") return a - b;
    if (op == "*") return a * b;
    if (op == "/" || op == "mod") {
      if (b == 0) throw EvaluationError("division by zero");
      return op == "/" ? a / b : ((a % b) + b) % b;
    }
  }
  throw EvaluationError("not a number: " + display_text(decode_term(s.resolve(t))));
}

enum class BResult { Fail, Succeed, Restrained };

}  // namespace

BuiltinOutcome evaluate_builtin(const Term& atom, Substitution& s) {
  if (atom.is_atom("true")) return BuiltinOutcome::Succeed;
  if (atom.is_atom("fail")) return BuiltinOutcome::Fail;
  if (atom.is_atom("undefined")) return BuiltinOutcome::Undefined;
  const std::string& op = atom.functor().text();
  const Term& x = atom.arg(0);
  const Term& y = atom.arg(1);
  if (op == "=") return unify_into(x, y, s) ? BuiltinOutcome::Succeed : BuiltinOutcome::Fail;
  if (op == "\\=") return unify(s.resolve(x), s.resolve(y)) ? BuiltinOutcome::Fail : BuiltinOutcome::Succeed;
  try {
    if (op == "is") {
      std::int64_t v = eval_arith(y, s);
      return unify_into(x, Term::integer(v), s) ? BuiltinOutcome::Succeed : BuiltinOutcome::Fail;
    }
    std::int64_t l = eval_arith(x, s);
    std::int64_t r = eval_arith(y, s);
    bool ok = op == "<" ? l < r : op == ">" ? l > r : op == "=<" ? l <= r : op == ">=" ? l >= r
            : op == "=:=" ? l == r : l != r;
    return ok ? BuiltinOutcome::Succeed : BuiltinOutcome::Fail;
  } catch (const InstantiationFault&) {
    return BuiltinOutcome::Unbound;
  }
}

struct Engine::Impl {
  std::shared_ptr<const CompiledKB> kb;
  EvalOptions opts;
  std::deque<NormalRule> extra;
  std::unordered_map<std::string, std::vector<std::size_t>> extra_by_predicate;
  std::vector<std::size_t> extra_variable_heads;
  std::unordered_map<std::string, std::vector<const NormalRule*>> clause_cache;

  std::vector<Table> tables;
  std::unordered_map<std::size_t, std::vector<int>> table_index;  // by variant hash

  std::optional<int> lookup(const Term& call, std::size_t h) const {
    auto it = table_index.find(h);
    if (it == table_index.end()) return std::nullopt;
    for (int t : it->second)
      if (is_variant(tables[t].subgoal, call)) return t;
    return std::nullopt;
  }
  std::vector<int> stack;
  int next_dfn = 1;
  int next_scc = 1;
  std::uint64_t epoch = 0;
  bool broken = false;
  EngineCounters c;

  EventSink sink;
  bool logging = false;
  std::function<void()> checkpoint;

  struct Activation {
    int table;
    const NormalRule* rule;
  };
  using Pending = std::vector<std::uint32_t>;

  // ---- bookkeeping

  void op() {
    ++c.ops;
    if (c.ops > opts.max_ops)
      throw ResourceLimitExceeded("operation limit of " + std::to_string(opts.max_ops) + " exceeded");
    if (checkpoint) checkpoint();
  }

  template <class Build>
  void event(EventKind k, Build&& build) {
    ++c.events;
    if (!logging || !sink) return;
    LogEvent e;
    e.kind = k;
    e.ctr = c.events;
    build(e.args);
    sink(e);
  }

  mutable DecodeCache decoder;
  Term lit(const Term& encoded) const { return decoder.log_literal(encoded); }

  Term caller_term(int t) const { return t < 0 ? Term::atom("top") : lit(tables[t].subgoal); }

  std::optional<int> radius_for(const std::string& pred, bool answer, const Term& call) const {
    std::optional<int> k;
    auto it = kb->table_decls.find(pred);
    if (it != kb->table_decls.end()) k = answer ? it->second.answer_abstract : it->second.subgoal_abstract;
    if (answer && opts.answer_radius && call.is_app() && call.functor().is_atom("apply")) k = opts.answer_radius;
    return k;
  }

  Term abstract_encoded(const Term& encoded, int k, bool& abstracted) const {
    Literal l = decode_literal(encoded);
    Abstraction a = abstract_at_depth(l.atom, static_cast<std::size_t>(k));
    abstracted = a.abstracted;
    if (!abstracted) return encoded;
    return encode_literal(Literal{l.negated, a.literal});
  }

  // ---- clauses

  const std::vector<const NormalRule*>& clauses(const std::string& pred) {
    auto it = clause_cache.find(pred);
    if (it != clause_cache.end()) return it->second;
    std::vector<std::size_t> idx;
    std::vector<std::size_t> eidx;
    if (pred.find('?') != std::string::npos) {
      for (std::size_t i = 0; i < kb->rules.size(); ++i) idx.push_back(i);
      for (std::size_t i = 0; i < extra.size(); ++i) eidx.push_back(i);
    } else {
      if (auto f = kb->by_predicate.find(pred); f != kb->by_predicate.end()) idx = f->second;
      idx.insert(idx.end(), kb->variable_head_rules.begin(), kb->variable_head_rules.end());
      if (auto f = extra_by_predicate.find(pred); f != extra_by_predicate.end()) eidx = f->second;
      eidx.insert(eidx.end(), extra_variable_heads.begin(), extra_variable_heads.end());
    }
    std::sort(idx.begin(), idx.end());
    idx.erase(std::unique(idx.begin(), idx.end()), idx.end());
    std::sort(eidx.begin(), eidx.end());
    eidx.erase(std::unique(eidx.begin(), eidx.end()), eidx.end());
    std::vector<const NormalRule*> out;
    for (std::size_t i : idx) out.push_back(&kb->rules[i]);
    for (std::size_t i : eidx) out.push_back(&extra[i]);
    return clause_cache.emplace(pred, std::move(out)).first->second;
  }

  void add_rules(const std::vector<NormalRule>& rules) {
    for (const auto& r : rules) {
      std::size_t i = extra.size();
      extra.push_back(r);
      std::string k = predicate_key(r.head);
      if (k.find('?') != std::string::npos) extra_variable_heads.push_back(i);
      else extra_by_predicate[k].push_back(i);
    }
    clause_cache.clear();
  }

  // ---- tables

  int call_table(const Term& call0, int caller, const std::string& rule_id) {
    check_stack_headroom();
    Term call = call0;
    if (!kb->table_decls.empty()) {
      std::string pred = predicate_key(call);
      if (auto k = radius_for(pred, false, call)) {
        bool abstracted = false;
        Term abs = abstract_encoded(call, *k, abstracted);
        if (abstracted) {
          op();
          ++c.subgoal_abstractions;
          event(EventKind::SubgoalAbstraction, [&](std::vector<Term>& a) {
            a = {lit(call), lit(abs)};
          });
          call = abs;
        }
      }
    }
    op();
    std::size_t h = variant_hash(call);
    std::optional<int> found = lookup(call, h);
    bool fresh = !found;
    int t;
    if (fresh) {
      t = static_cast<int>(tables.size());
      Table tb;
      tb.subgoal = call.ground() ? call : rename_apart(call);
      tb.predicate = predicate_key(call);
      tables.push_back(std::move(tb));
      table_index[h].push_back(t);
      ++c.new_subgoals;
    } else {
      t = *found;
    }
    ++c.calls;
    tables[t].call_count++;
    tables[t].callers.insert(CallerRef{caller, rule_id});
    event(EventKind::TableCall, [&](std::vector<Term>& a) {
      a = {lit(tables[t].subgoal), caller_term(caller), Term::atom(rule_id.empty() ? "none" : rule_id),
           Term::atom(fresh ? "new" : "old")};
    });
    if (fresh) {
      evaluate(t);
      if (caller >= 0 && !tables[t].complete)
        tables[caller].lowlink = std::min(tables[caller].lowlink, tables[t].lowlink);
    } else if (caller >= 0 && !tables[t].complete) {
      tables[caller].lowlink = std::min(tables[caller].lowlink, tables[t].dfn);
    }
    return t;
  }

  void run_clauses(int t) {
    std::string pred = tables[t].predicate;
    const auto& cl = clauses(pred);
    for (std::size_t i = 0; i < cl.size(); ++i) {
      const NormalRule* r = cl[i];
      Substitution s;
      if (!unify_into(r->head, tables[t].subgoal, s)) continue;
      op();
      solve_body(Activation{t, r}, 0, s, {}, {});
    }
  }

  void evaluate(int t) {
    tables[t].dfn = tables[t].lowlink = next_dfn++;
    tables[t].stack_pos = stack.size();
    stack.push_back(t);
    std::uint64_t e0 = epoch;
    run_clauses(t);
    if (tables[t].lowlink != tables[t].dfn) return;
    std::size_t pos = tables[t].stack_pos;
    bool again = epoch != e0 && stack.size() > pos;
    while (again) {
      std::uint64_t e1 = epoch;
      for (std::size_t i = pos; i < stack.size(); ++i) run_clauses(stack[i]);
      int low = tables[t].dfn;
      for (std::size_t i = pos; i < stack.size(); ++i) low = std::min(low, tables[stack[i]].lowlink);
      if (low < tables[t].dfn) {
        tables[t].lowlink = low;
        return;
      }
      again = epoch != e1;
    }
    complete_scc(pos);
  }

  // ---- answers

  void add_answer(int t, Term answer, DelaySet d) {
    if (auto k = radius_for(tables[t].predicate, true, answer)) {
      bool abstracted = false;
      Term abs = abstract_encoded(answer, *k, abstracted);
      if (abstracted) {
        op();
        ++c.answer_abstractions;
        event(EventKind::AnswerAbstraction, [&](std::vector<Term>& a) {
          a = {lit(answer), lit(abs), lit(tables[t].subgoal)};
        });
        answer = abs;
        d = with(d, marker(MarkerReason::Abstraction));
      }
    }
    std::size_t h = variant_hash(answer);
    Table& tb = tables[t];
    int existing = -1;
    if (auto it = tb.answer_index.find(h); it != tb.answer_index.end())
      for (int i : it->second)
        if (is_variant(tb.answers[i].literal, answer)) existing = i;
    if (existing >= 0) {
      Answer& a = tb.answers[existing];
      if (a.unconditional) return;
      if (d.empty()) {
        op();
        a.unconditional = true;
        a.delays.clear();
        ++c.upgrades;
        ++epoch;
        event(EventKind::NewAnswer, [&](std::vector<Term>& v) { v = {lit(a.literal), lit(tb.subgoal)}; });
      } else if (std::find(a.delays.begin(), a.delays.end(), d) == a.delays.end()) {
        op();
        a.delays.push_back(std::move(d));
      }
      return;
    }
    op();
    Answer a;
    a.literal = answer.ground() ? answer : rename_apart(answer);
    a.unconditional = d.empty();
    ++c.answers;
    ++epoch;
    tb.answer_index[h].push_back(static_cast<int>(tb.answers.size()));
    if (a.unconditional) {
      tb.answers.push_back(std::move(a));
      const Answer& na = tb.answers.back();
      event(EventKind::NewAnswer, [&](std::vector<Term>& v) { v = {lit(na.literal), lit(tb.subgoal)}; });
    } else {
      ++c.conditional_answers;
      a.delays.push_back(std::move(d));
      tb.answers.push_back(std::move(a));
      const Answer& na = tb.answers.back();
      event(EventKind::ConditionalAnswer, [&](std::vector<Term>& v) {
        v = {lit(na.literal), lit(tb.subgoal), delay_list(na.delays.front())};
      });
    }
  }

  Term delay_list(const DelaySet& d) const {
    std::vector<Term> items;
    for (const auto& e : d) {
      switch (e.kind) {
        case DelayElem::Kind::Neg:
          items.push_back(Term::app("tnot", {lit(e.literal)}));
          break;
        case DelayElem::Kind::Pos:
          items.push_back(lit(tables[e.table].answers[e.answer].literal));
          break;
        case DelayElem::Kind::Marker:
          items.push_back(Term::app("restraint", {Term::atom(to_string(e.reason))}));
          break;
      }
    }
    return Term::list(std::move(items));
  }

  TruthValue match_truth(int t, const Term& ground) const {
    const Table& tb = tables[t];
    TruthValue best = TruthValue::False;
    if (tb.subgoal.ground()) {
      for (const auto& a : tb.answers) best = std::max(best, a.tv());
      return best;
    }
    for (const auto& a : tb.answers) {
      if (a.deleted || a.tv() <= best) continue;
      if (subsumes(a.literal, ground)) best = a.tv();
    }
    return best;
  }

  // ---- body evaluation

  static bool ground_under(const Term& t, const Substitution& s) { return s.resolve(t).ground(); }

  static bool must_postpone(const BodyLiteral& b, const Substitution& s) {
    for (const auto& v : b.delay_guard)
      if (!ground_under(v, s)) return true;
    return b.mode != NafMode::Plain && !ground_under(b.atom, s);
  }

  void solve_body(const Activation& a, std::size_t i, const Substitution& s, const DelaySet& d,
                  const Pending& pending) {
    const auto& body = a.rule->body;
    for (std::size_t j = 0; j < pending.size(); ++j) {
      const BodyLiteral& b = body[pending[j]];
      if (must_postpone(b, s)) continue;
      Pending rest = pending;
      rest.erase(rest.begin() + static_cast<std::ptrdiff_t>(j));
      run_literal(a, b, s, d, [&](const Substitution& s2, const DelaySet& d2) { solve_body(a, i, s2, d2, rest); });
      return;
    }
    if (i == body.size()) {
      if (!pending.empty()) {
        const BodyLiteral& b = body[pending.front()];
        Pending rest(pending.begin() + 1, pending.end());
        auto k = [&](const Substitution& s2, const DelaySet& d2) { solve_body(a, i, s2, d2, rest); };
        if (b.mode == NafMode::Plain) {
          // a wish-guarded positive literal is submitted anyway
          run_literal(a, b, s, d, k);
        } else {
          op();
          ++c.delays;
          event(EventKind::Delay, [&](std::vector<Term>& v) {
            v = {lit(tables[a.table].subgoal), lit(s.resolve(b.atom))};
          });
          k(s, with(d, marker(MarkerReason::Unsafe)));
        }
        return;
      }
      add_answer(a.table, s.resolve(tables[a.table].subgoal), d);
      return;
    }
    const BodyLiteral& b = body[i];
    if (must_postpone(b, s)) {
      Pending more = pending;
      more.push_back(static_cast<std::uint32_t>(i));
      solve_body(a, i + 1, s, d, more);
      return;
    }
    run_literal(a, b, s, d, [&](const Substitution& s2, const DelaySet& d2) { solve_body(a, i + 1, s2, d2, pending); });
  }

  template <class K>
  void run_literal(const Activation& a, const BodyLiteral& b, const Substitution& s, const DelaySet& d, K&& k) {
    Term atom = s.resolve(b.atom);
    if (atom.is_var()) {
      if (d.empty())
        throw BuiltinInstantiationError("unbound goal in rule " + a.rule->rule_id);
      k(s, with(d, marker(MarkerReason::Builtin)));
      return;
    }
    if (is_builtin(atom)) {
      Substitution s2 = s;
      DelaySet d2 = d;
      BResult r = builtin(a, atom, s2, d2);
      if (b.mode == NafMode::Plain) {
        if (r != BResult::Fail) k(s2, d2);
      } else if (r == BResult::Fail) {
        k(s, d);
      } else if (r == BResult::Restrained || d2.size() != d.size()) {
        k(s, with(d, marker(MarkerReason::Undefined)));
      }
      return;
    }
    if (b.mode == NafMode::Plain) {
      positive(a, atom, s, d, k);
    } else {
      negative(a, atom, s, d, k);
    }
  }

  template <class K>
  void positive(const Activation& a, const Term& atom, const Substitution& s, const DelaySet& d, K&& k) {
    int t = call_table(atom, a.table, a.rule->rule_id);
    for (std::size_t i = 0; i < tables[t].answers.size(); ++i) {
      const Answer& ans = tables[t].answers[i];
      if (ans.deleted) continue;
      Term ansl = ans.literal;
      bool uncond = ans.unconditional;
      Substitution s2 = s;
      if (!unify_into(atom, ansl, s2)) continue;
      op();
      if (uncond) {
        k(s2, d);
      } else {
        DelayElem e;
        e.kind = DelayElem::Kind::Pos;
        e.table = t;
        e.answer = static_cast<int>(i);
        k(s2, with(d, std::move(e)));
      }
    }
  }

  template <class K>
  void negative(const Activation& a, const Term& atom, const Substitution& s, const DelaySet& d, K&& k) {
    int t = call_table(atom, a.table, a.rule->rule_id);
    TruthValue tv = match_truth(t, atom);
    if (tv == TruthValue::True) return;
    if (tables[t].complete && tv == TruthValue::False) {
      k(s, d);
      return;
    }
    op();
    ++c.delays;
    event(EventKind::Delay, [&](std::vector<Term>& v) { v = {lit(tables[a.table].subgoal), lit(atom)}; });
    DelayElem e;
    e.kind = DelayElem::Kind::Neg;
    e.table = t;
    e.literal = atom;
    e.hash = variant_hash(atom);
    k(s, with(d, std::move(e)));
  }

  // ---- builtins

  BResult restrain_or_throw(const Term& atom, DelaySet& d) {
    if (d.empty())
      throw BuiltinInstantiationError("instantiation error in " + display_text(decode_term(atom)));
    d = with(d, marker(MarkerReason::Builtin));
    return BResult::Restrained;
  }

  BResult builtin(const Activation& a, const Term& atom, Substitution& s, DelaySet& d) {
    if (atom.is_app("$skip", 6)) return skip(a, atom, s, d);
    switch (evaluate_builtin(atom, s)) {
      case BuiltinOutcome::Fail: return BResult::Fail;
      case BuiltinOutcome::Succeed: return BResult::Succeed;
      case BuiltinOutcome::Undefined:
        d = with(d, marker(MarkerReason::Undefined));
        return BResult::Succeed;
      case BuiltinOutcome::Unbound: break;
    }
    return restrain_or_throw(atom, d);
  }

  // $skip(Head, Template, Outs, Inners, Replacements, Conditions)
  BResult skip(const Activation& a, const Term& atom, Substitution& s, DelaySet& d) {
    if (!unify_into(atom.arg(0), atom.arg(1), s)) return BResult::Fail;
    bool fire = true;
    for (const auto& cond : atom.arg(5).args()) {
      BResult r = builtin(a, s.resolve(cond), s, d);
      if (r == BResult::Fail) {
        fire = false;
        break;
      }
    }
    if (!fire) return unify_into(atom.arg(2), atom.arg(3), s) ? BResult::Succeed : BResult::Fail;
    if (!unify_into(atom.arg(2), atom.arg(4), s)) return BResult::Fail;
    d = with(d, marker(MarkerReason::Skip));
    return BResult::Succeed;
  }

  // ---- completion

  void complete_scc(std::size_t pos) {
    std::vector<int> members(stack.begin() + static_cast<std::ptrdiff_t>(pos), stack.end());
    std::unordered_map<int, bool> in_scc;
    for (int m : members) in_scc[m] = true;

    // atoms: conditional answers of members, then aux atoms for negations
    std::unordered_map<long long, int> atom_of;  // (table << 32 | answer) -> id
    std::vector<std::pair<int, int>> atom_answer;
    for (int m : members)
      for (std::size_t i = 0; i < tables[m].answers.size(); ++i) {
        const Answer& ans = tables[m].answers[i];
        if (ans.unconditional || ans.deleted) continue;
        atom_of[(static_cast<long long>(m) << 32) | static_cast<long long>(i)] = static_cast<int>(atom_answer.size());
        atom_answer.emplace_back(m, static_cast<int>(i));
      }
    if (!atom_answer.empty()) {
      int n = static_cast<int>(atom_answer.size());
      std::vector<PropRule> rules;
      int undef_atom = -1;
      std::map<std::pair<int, std::size_t>, std::vector<std::pair<Term, int>>> neg_atoms;
      auto undefined_atom = [&]() {
        if (undef_atom < 0) {
          undef_atom = n++;
          rules.push_back({undef_atom, {}, {undef_atom}});
        }
        return undef_atom;
      };
      for (int x = 0; x < static_cast<int>(atom_answer.size()); ++x) {
        auto [m, i] = atom_answer[x];
        for (const auto& alt : tables[m].answers[i].delays) {
          PropRule r{x, {}, {}};
          bool dead = false;
          for (const auto& e : alt) {
            if (e.kind == DelayElem::Kind::Marker) {
              r.neg.push_back(undefined_atom());
            } else if (e.kind == DelayElem::Kind::Pos) {
              const Answer& dep = tables[e.table].answers[e.answer];
              if (in_scc.count(e.table) && !dep.unconditional && !dep.deleted) {
                r.pos.push_back(atom_of.at((static_cast<long long>(e.table) << 32) | e.answer));
              } else if (dep.tv() == TruthValue::False) {
                dead = true;
              } else if (dep.tv() == TruthValue::Undefined) {
                r.neg.push_back(undefined_atom());
              }
            } else if (!in_scc.count(e.table)) {
              TruthValue tv = match_truth(e.table, e.literal);
              if (tv == TruthValue::True) dead = true;
              else if (tv == TruthValue::Undefined) r.neg.push_back(undefined_atom());
            } else {
              auto& bucket = neg_atoms[{e.table, e.hash}];
              int na = -1;
              for (const auto& [l, id] : bucket)
                if (l == e.literal) na = id;
              if (na < 0) {
                na = n++;
                bucket.emplace_back(e.literal, na);
                const Table& tb = tables[e.table];
                for (std::size_t j = 0; j < tb.answers.size(); ++j) {
                  const Answer& cand = tb.answers[j];
                  if (cand.deleted || !subsumes(cand.literal, e.literal)) continue;
                  if (cand.unconditional) rules.push_back({na, {}, {}});
                  else rules.push_back({na, {atom_of.at((static_cast<long long>(e.table) << 32) | j)}, {}});
                }
              }
              r.neg.push_back(na);
            }
            if (dead) break;
          }
          if (!dead) rules.push_back(std::move(r));
        }
      }
      std::vector<TruthValue> model = wp_model(n, rules);
      for (int x = 0; x < static_cast<int>(atom_answer.size()); ++x) {
        if (model[x] == TruthValue::Undefined) continue;
        auto [m, i] = atom_answer[x];
        Answer& ans = tables[m].answers[i];
        op();
        bool ok = model[x] == TruthValue::True;
        if (ok) {
          ans.unconditional = true;
          ans.delays.clear();
          ++c.simplifications_succeeded;
        } else {
          ans.deleted = true;
          ++c.simplifications_failed;
        }
        event(EventKind::Simplification, [&](std::vector<Term>& v) {
          v = {lit(tables[m].subgoal), lit(ans.literal), Term::atom(ok ? "succeeded" : "failed")};
        });
      }
    }
    int scc = next_scc++;
    for (int m : members) {
      op();
      tables[m].complete = true;
      tables[m].scc_id = scc;
      ++c.completions;
      event(EventKind::Completed, [&](std::vector<Term>& v) {
        v = {lit(tables[m].subgoal), Term::integer(scc)};
      });
    }
    stack.resize(pos);
  }

  // ---- queries

  std::vector<int> covering_tables(const Term& l) const {
    std::vector<int> out;
    if (auto v = lookup(l, variant_hash(l))) out.push_back(*v);
    for (std::size_t t = 0; t < tables.size(); ++t)
      if ((out.empty() || static_cast<int>(t) != out.front()) && subsumes(tables[t].subgoal, l))
        out.push_back(static_cast<int>(t));
    return out;
  }

  TruthValue truth_of(const Term& l) const {
    std::vector<int> ts = covering_tables(l);
    if (ts.empty()) throw NoSuchTable("no table covers " + literal_text(l));
    TruthValue best = TruthValue::False;
    for (int t : ts) {
      for (const auto& a : tables[t].answers) {
        if (a.deleted || a.tv() <= best) continue;
        if (l.ground() ? subsumes(a.literal, l) : (subsumes(a.literal, l) || is_variant(a.literal, l)))
          best = a.tv();
      }
    }
    return best;
  }
};

// ---------------------------------------------------------------- Engine

Engine::Engine(std::shared_ptr<const CompiledKB> kb, EvalOptions opts) : impl_(std::make_unique<Impl>()) {
  impl_->kb = std::move(kb);
  impl_->opts = std::move(opts);
  impl_->logging = impl_->opts.logging;
}

Engine::~Engine() = default;

int Engine::solve(const Term& call) {
  if (impl_->broken) throw std::logic_error("evaluation state is incomplete after an interruption");
  try {
    int t = impl_->call_table(call, -1, "none");
    return t;
  } catch (...) {
    impl_->broken = true;
    throw;
  }
}

void Engine::add_rules(const std::vector<NormalRule>& rules) { impl_->add_rules(rules); }

const std::vector<Table>& Engine::tables() const { return impl_->tables; }

std::optional<int> Engine::find_table(const Term& call) const {
  return impl_->lookup(call, variant_hash(call));
}

TruthValue Engine::truth_of(const Term& l) const { return impl_->truth_of(l); }

TruthValue Engine::truth_of_solving(const Term& l) {
  if (impl_->covering_tables(l).empty()) solve(l);
  return impl_->truth_of(l);
}

std::vector<std::pair<Term, TruthValue>> Engine::answers_matching(int table, const Term& pattern) const {
  std::vector<std::pair<Term, TruthValue>> out;
  for (const auto& a : impl_->tables[table].answers) {
    if (a.deleted) continue;
    Term al = a.literal.ground() ? a.literal : rename_apart(a.literal);
    auto mgu = unify(pattern, al);
    if (!mgu) continue;
    out.emplace_back(mgu->resolve(pattern), a.tv());
  }
  return out;
}

std::vector<const NormalRule*> Engine::clauses_for(const Term& call) {
  return impl_->clauses(predicate_key(call));
}

EngineCounters Engine::counters() const {
  EngineCounters c = impl_->c;
  c.undefined_answers = 0;
  for (const auto& t : impl_->tables)
    for (const auto& a : t.answers)
      if (!a.deleted && !a.unconditional) ++c.undefined_answers;
  return c;
}

const CompiledKB& Engine::kb() const { return *impl_->kb; }
bool Engine::broken() const { return impl_->broken; }
void Engine::set_event_sink(EventSink sink) { impl_->sink = std::move(sink); }
void Engine::set_logging(bool on) { impl_->logging = on; }
bool Engine::logging() const { return impl_->logging; }
void Engine::set_checkpoint(std::function<void()> fn) { impl_->checkpoint = std::move(fn); }

void Engine::note_interrupt(bool timer) {
  ++impl_->c.interrupts;
  impl_->event(EventKind::Interrupt, [&](std::vector<Term>& v) { v = {Term::atom(timer ? "timer" : "user")}; });
}

void Engine::note_resumed() {
  impl_->event(EventKind::Resumed, [](std::vector<Term>&) {});
}

void Engine::note_aborted() {
  impl_->event(EventKind::Aborted, [](std::vector<Term>&) {});
}

// ---------------------------------------------------------------- oracle

TruthValue WfsModel::value(const std::string& atom) const {
  if (true_atoms.count(atom)) return TruthValue::True;
  if (undefined_atoms.count(atom)) return TruthValue::Undefined;
  return TruthValue::False;
}

WfsModel wfs_oracle(const std::vector<GroundRule>& rules) {
  std::vector<std::string> names;
  std::unordered_map<std::string, int> id;
  auto intern = [&](const std::string& a) {
    auto [it, fresh] = id.emplace(a, static_cast<int>(names.size()));
    if (fresh) names.push_back(a);
    return it->second;
  };
  struct R {
    int head;
    std::vector<int> pos, neg;
  };
  std::vector<R> rs;
  for (const auto& g : rules) {
    R r{intern(g.head), {}, {}};
    for (const auto& p : g.pos) r.pos.push_back(intern(p));
    for (const auto& c : g.neg) r.neg.push_back(intern(c));
    rs.push_back(std::move(r));
  }
  const std::size_t n = names.size();
  // least model of the reduct w.r.t. `assumed` (negation of x holds iff x not assumed)
  auto gamma = [&](const std::vector<char>& assumed) {
    std::vector<char> m(n, 0);
    for (bool grew = true; grew;) {
      grew = false;
      for (const auto& r : rs) {
        if (m[r.head]) continue;
        bool ok = true;
        for (int p : r.pos) ok = ok && m[p];
        for (int c : r.neg) ok = ok && !assumed[c];
        if (ok) m[r.head] = grew = 1;
      }
    }
    return m;
  };
  std::vector<char> lower(n, 0);
  std::vector<char> upper = gamma(lower);
  for (;;) {
    std::vector<char> nl = gamma(upper);
    std::vector<char> nu = gamma(nl);
    if (nl == lower && nu == upper) break;
    lower = std::move(nl);
    upper = std::move(nu);
  }
  WfsModel out;
  for (std::size_t i = 0; i < n; ++i) {
    if (lower[i]) out.true_atoms.insert(names[i]);
    else if (upper[i]) out.undefined_atoms.insert(names[i]);
  }
  return out;
}

}  // namespace silk
