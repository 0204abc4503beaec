#include "silk/analysis.hpp"

#include <algorithm>
#include <cstdio>
#include <map>
#include <unordered_map>
#include <unordered_set>

namespace silk {

namespace {

const Term& strip_neg(const Term& t) { return t.is_app("neg", 1) ? t.arg(0) : t; }

std::string predicate_text(const Term& logged) {
  const Term& a = strip_neg(logged);
  std::string p = a.is_app() ? (a.functor().is_var() ? "?" : canonical_text(a.functor())) + "/" +
                                   std::to_string(a.arity())
                             : (a.is_var() ? "?" : canonical_text(a)) + "/0";
  return &a == &logged ? p : "neg " + p;
}

// Same predicate as `e`, without decoding deep arguments.
Term shallow(const Term& e) {
  if (!e.is_app()) return e;
  std::vector<Term> args = e.args();
  bool hilog = e.functor().is_atom("apply");
  for (std::size_t i = hilog ? 1 : 0; i < args.size(); ++i) args[i] = Term::atom("x");
  return Term::app(e.functor(), std::move(args));
}

std::string caller_text(const std::vector<Table>& tables, int caller) {
  return caller < 0 ? "top" : literal_canonical(tables[caller].subgoal);
}

void collect_vars(const Term& t, std::vector<Term>& out) {
  if (t.is_var()) {
    for (const auto& v : out)
      if (v.var_id() == t.var_id()) return;
    out.push_back(t);
  } else if (t.is_app()) {
    collect_vars(t.functor(), out);
    for (const auto& a : t.args()) collect_vars(a, out);
  }
}

bool mentions(const Term& t, VarId v) {
  if (t.is_var()) return t.var_id() == v;
  if (!t.is_app()) return false;
  if (mentions(t.functor(), v)) return true;
  for (const auto& a : t.args())
    if (mentions(a, v)) return true;
  return false;
}

// Terms up to variance, each with a dense id.
class VariantIds {
 public:
  int find(const Term& t) const {
    auto it = index_.find(variant_hash(t));
    if (it != index_.end())
      for (int id : it->second)
        if (is_variant(terms_[id], t)) return id;
    return -1;
  }
  int intern(const Term& t) {
    std::size_t h = variant_hash(t);
    auto& bucket = index_[h];
    for (int id : bucket)
      if (is_variant(terms_[id], t)) return id;
    int id = static_cast<int>(terms_.size());
    terms_.push_back(t);
    bucket.push_back(id);
    return id;
  }
  const Term& term(int id) const { return terms_[id]; }
  std::size_t size() const { return terms_.size(); }

 private:
  std::unordered_map<std::size_t, std::vector<int>> index_;
  std::vector<Term> terms_;
};

}  // namespace

// ---------------------------------------------------------------- table dump

std::vector<TableDumpEntry> table_dump(const std::vector<Table>& tables, const Literal& pattern) {
  std::optional<Term> enc;
  if (!pattern.atom.is_var()) enc = encode_literal(pattern);
  std::vector<TableDumpEntry> out;
  for (std::size_t i = 0; i < tables.size(); ++i) {
    const Table& t = tables[i];
    if (enc && !subsumes(*enc, t.subgoal)) continue;
    TableDumpEntry e;
    e.table = static_cast<int>(i);
    e.subgoal = literal_canonical(t.subgoal);
    e.predicate = predicate_text(log_literal(t.subgoal));
    e.call_count = t.call_count;
    e.completed = t.complete;
    for (const auto& c : t.callers) e.calling_rules.insert({c.rule_id.empty() ? "none" : c.rule_id, caller_text(tables, c.table)});
    for (const auto& a : t.answers) {
      if (a.deleted) continue;
      ++e.answer_count;
      (a.unconditional ? e.true_count : e.undefined_count)++;
      e.answers.emplace_back(literal_canonical(a.literal), a.tv());
    }
    out.push_back(std::move(e));
  }
  return out;
}

std::vector<TableDumpSummary> table_dump_summary(const std::vector<Table>& tables, const Literal& pattern) {
  std::optional<Term> enc;
  if (!pattern.atom.is_var()) enc = encode_literal(pattern);
  std::map<std::string, TableDumpSummary> by;
  for (const auto& t : tables) {
    if (enc && !subsumes(*enc, t.subgoal)) continue;
    auto& s = by[predicate_text(log_literal(shallow(t.subgoal)))];
    s.tables++;
    for (const auto& a : t.answers) s.answers += !a.deleted;
    s.calls += t.call_count;
  }
  std::vector<TableDumpSummary> out;
  for (auto& [p, s] : by) {
    s.predicate = p;
    out.push_back(std::move(s));
  }
  return out;
}

// ---------------------------------------------------------------- abstraction

Term abstract_subgoal(const Term& logged, AbstractionMode mode) {
  if (logged.is_app("neg", 1)) return Term::app("neg", {abstract_subgoal(logged.arg(0), mode)});
  if (logged.is_var()) throw std::invalid_argument("subgoal is a variable");
  if (mode == AbstractionMode::Predicate) {
    Term name = logged.is_app() ? logged.functor() : logged;
    if (name.is_var()) name = Term::atom("?");
    return Term::app("/", {name, Term::integer(static_cast<std::int64_t>(logged.is_app() ? logged.arity() : 0))});
  }
  if (!logged.is_app()) return logged;
  std::vector<Term> args;
  for (const auto& a : logged.args()) {
    bool free = a.is_var() || a.is_atom("free");
    args.push_back(Term::atom(free ? "free" : "bound"));
  }
  return Term::app(logged.functor(), std::move(args));
}

// ---------------------------------------------------------------- components

std::set<std::string> Scc::member_texts() const {
  std::set<std::string> out;
  for (const auto& m : members) out.insert(canonical_text(m));
  return out;
}

std::vector<Scc> sccs(const Log& log) {
  VariantIds ids;
  std::vector<std::tuple<int, int, std::string>> edges;
  for (const auto& e : log.events) {
    if (e.kind != EventKind::TableCall) continue;
    int callee = ids.intern(*e.subgoal());
    const Term* c = e.caller();
    if (c && !c->is_atom("top")) edges.emplace_back(ids.intern(*c), callee, e.rule_id());
  }
  int n = static_cast<int>(ids.size());
  std::vector<std::vector<int>> adj(n);
  for (const auto& [a, b, r] : edges) adj[a].push_back(b);

  // iterative Tarjan
  std::vector<int> index(n, -1), low(n, 0), comp(n, -1);
  std::vector<bool> on(n, false);
  std::vector<int> st;
  std::vector<std::vector<int>> groups;
  int counter = 0;
  for (int root = 0; root < n; ++root) {
    if (index[root] >= 0) continue;
    std::vector<std::pair<int, std::size_t>> work{{root, 0}};
    index[root] = low[root] = counter++;
    st.push_back(root);
    on[root] = true;
    while (!work.empty()) {
      int v = work.back().first;
      std::size_t& i = work.back().second;
      if (i < adj[v].size()) {
        int w = adj[v][i++];
        if (index[w] < 0) {
          index[w] = low[w] = counter++;
          st.push_back(w);
          on[w] = true;
          work.push_back({w, 0});
        } else if (on[w]) {
          low[v] = std::min(low[v], index[w]);
        }
        continue;
      }
      if (low[v] == index[v]) {
        std::vector<int> g;
        int w;
        do {
          w = st.back();
          st.pop_back();
          on[w] = false;
          comp[w] = static_cast<int>(groups.size());
          g.push_back(w);
        } while (w != v);
        std::sort(g.begin(), g.end());
        groups.push_back(std::move(g));
      }
      work.pop_back();
      if (!work.empty()) low[work.back().first] = std::min(low[work.back().first], low[v]);
    }
  }
  std::vector<Scc> out(groups.size());
  std::vector<std::size_t> slot(n);
  for (std::size_t g = 0; g < groups.size(); ++g) {
    out[g].id = static_cast<int>(g) + 1;
    for (int v : groups[g]) {
      slot[v] = out[g].members.size();
      out[g].members.push_back(ids.term(v));
    }
  }
  for (const auto& [a, b, r] : edges)
    if (comp[a] == comp[b]) out[comp[a]].edges.push_back({slot[a], slot[b], r});
  for (auto& s : out) {
    std::sort(s.edges.begin(), s.edges.end());
    s.edges.erase(std::unique(s.edges.begin(), s.edges.end()), s.edges.end());
    s.trivial = s.members.size() == 1 && s.edges.empty();
  }
  return out;
}

AbstractScc abstract_scc(const Scc& scc, AbstractionMode mode) {
  AbstractScc out;
  std::vector<std::string> abs;
  for (const auto& m : scc.members) {
    abs.push_back(canonical_text(abstract_subgoal(m, mode)));
    out.members[abs.back()]++;
  }
  for (const auto& e : scc.edges) out.edges.insert({abs[e.caller], abs[e.callee], e.rule_id});
  return out;
}

// ---------------------------------------------------------------- overview

OverviewStats overview(const Log& log) {
  OverviewStats s;
  s.events = log.events.size();
  s.negation_op_counts = {{"delay", 0}, {"simplification", 0}, {"completed", 0}};
  s.abstraction_counts = {{"subgoal", 0}, {"answer", 0}};
  VariantIds keys;
  std::unordered_set<int> pending;  // conditional answers not yet resolved
  auto key = [&](const Term& sg, const Term& ans) { return keys.intern(Term::app("-", {sg, ans})); };
  for (const auto& e : log.events) {
    switch (e.kind) {
      case EventKind::TableCall:
        ++s.total_calls;
        if (e.is_new_call()) ++s.distinct_subgoals;
        break;
      case EventKind::NewAnswer: {
        if (!pending.erase(key(e.args[1], e.args[0]))) ++s.total_answers;  // else an upgrade
        break;
      }
      case EventKind::ConditionalAnswer:
        ++s.total_answers;
        ++s.conditional_answers;
        pending.insert(key(e.args[1], e.args[0]));
        break;
      case EventKind::Delay: ++s.negation_op_counts["delay"]; break;
      case EventKind::Simplification:
        ++s.negation_op_counts["simplification"];
        pending.erase(key(e.args[0], e.args[1]));
        break;
      case EventKind::Completed:
        ++s.completions;
        ++s.negation_op_counts["completed"];
        break;
      case EventKind::SubgoalAbstraction: ++s.abstraction_counts["subgoal"]; break;
      case EventKind::AnswerAbstraction: ++s.abstraction_counts["answer"]; break;
      case EventKind::Interrupt: ++s.interrupts; break;
      case EventKind::Resumed:
      case EventKind::Aborted: break;
    }
  }
  s.undefined_answer_count = pending.size();
  for (const auto& c : sccs(log)) {
    if (c.trivial) continue;
    ++s.scc_count;
    s.scc_size_histogram[c.members.size()]++;
  }
  s.partial = log.partial() || !log.malformed.empty() || log.truncated_tail;
  return s;
}

// ---------------------------------------------------------------- Terminyzer

std::vector<CallSequenceFinding> terminyzer_calls(const Log& log, const CallSequenceParams& p) {
  struct Node {
    Term subgoal;
    std::uint64_t ctr;
    std::string rule;
    int parent;
    std::size_t depth;
    bool has_child = false;
  };
  std::vector<Node> nodes;
  VariantIds ids;
  std::vector<int> node_of;  // variant id -> node
  std::unordered_set<int> completed;
  for (const auto& e : log.events) {
    if (e.kind == EventKind::Completed) {
      completed.insert(ids.intern(*e.subgoal()));
      continue;
    }
    if (e.kind != EventKind::TableCall || !e.is_new_call()) continue;
    int parent = -1;
    if (!e.caller()->is_atom("top")) {
      int c = ids.find(*e.caller());
      if (c >= 0 && c < static_cast<int>(node_of.size())) parent = node_of[c];
    }
    std::size_t depth = parent >= 0 ? nodes[parent].depth + 1 : 0;
    if (parent >= 0) nodes[parent].has_child = true;
    int id = ids.intern(*e.subgoal());
    if (static_cast<int>(node_of.size()) <= id) node_of.resize(id + 1, -1);
    node_of[id] = static_cast<int>(nodes.size());
    nodes.push_back({*e.subgoal(), e.ctr, e.rule_id(), parent, depth});
  }

  std::vector<int> tails;
  for (std::size_t i = 0; i < nodes.size(); ++i)
    if (!nodes[i].has_child && !completed.count(ids.find(nodes[i].subgoal))) tails.push_back(static_cast<int>(i));
  std::stable_sort(tails.begin(), tails.end(), [&](int a, int b) { return nodes[a].depth > nodes[b].depth; });
  if (tails.size() > 16) tails.resize(16);

  std::vector<CallSequenceFinding> out;
  std::set<std::vector<std::string>> seen;
  for (int tail : tails) {
    std::vector<int> chain;
    for (int v = tail; v >= 0; v = nodes[v].parent) chain.push_back(v);
    std::reverse(chain.begin(), chain.end());
    std::size_t n = chain.size();
    for (std::size_t k = 1; k <= p.max_period && k < n; ++k) {
      std::size_t run = 0;
      for (std::size_t j = n - 1; j >= k && nodes[chain[j]].rule == nodes[chain[j - k]].rule; --j) ++run;
      std::size_t repeats = (run + k) / k;
      if (repeats < p.min_repeats) continue;
      std::size_t start = n - 1 - ((repeats - 1) * k);
      // depth must grow along one phase of the cycle within one predicate
      std::string cls = predicate_text(nodes[chain[start]].subgoal);
      bool ok = true;
      std::size_t first = term_depth(nodes[chain[start]].subgoal), prev = first;
      for (std::size_t j = start + k; j < n; j += k) {
        const Term& s = nodes[chain[j]].subgoal;
        std::size_t d = term_depth(s);
        if (d < prev || predicate_text(s) != cls) {
          ok = false;
          break;
        }
        prev = d;
      }
      if (!ok || prev < first + p.min_depth_growth) continue;
      std::vector<std::string> cycle;
      for (std::size_t j = n - k; j < n; ++j) cycle.push_back(nodes[chain[j]].rule);
      std::rotate(cycle.begin(), std::min_element(cycle.begin(), cycle.end()), cycle.end());
      if (!seen.insert(cycle).second) break;
      CallSequenceFinding f;
      f.rule_cycle = cycle;
      f.repeats = repeats;
      std::size_t from = start >= k ? start - k : 0;
      for (std::size_t j = from; j < n && f.witness_chain.size() < 12; ++j) {
        f.witness_chain.push_back(canonical_text(nodes[chain[j]].subgoal));
        f.witness_ctrs.push_back(nodes[chain[j]].ctr);
      }
      char buf[96];
      std::snprintf(buf, sizeof buf, "+%.3g depth per cycle over %zu cycles",
                    static_cast<double>(prev - first) / static_cast<double>(repeats - 1), repeats - 1);
      f.growth = buf;
      out.push_back(std::move(f));
      break;
    }
  }
  return out;
}

std::vector<AnswerFlowFinding> terminyzer_answers(const Log& log, const AnswerFlowParams& p) {
  struct Acc {
    std::vector<std::uint64_t> ctrs;
    std::size_t in_window = 0;
    std::vector<std::set<std::size_t>> values;  // variant hashes, at most two kept
    std::set<std::string> consumers;
    bool completed = false;
  };
  VariantIds ids;
  std::vector<Acc> acc;
  auto slot = [&](const Term& sg) -> Acc& {
    int id = ids.intern(sg);
    if (static_cast<int>(acc.size()) <= id) acc.resize(id + 1);
    return acc[id];
  };
  std::size_t total = log.events.size();
  std::size_t window_start = total > p.window ? total - p.window : 0;
  for (std::size_t i = 0; i < total; ++i) {
    const LogEvent& e = log.events[i];
    if (e.kind == EventKind::Completed) {
      slot(e.args[0]).completed = true;
    } else if (e.kind == EventKind::TableCall) {
      std::string r = e.rule_id();
      Acc& a = slot(e.args[0]);
      if (r != "none") a.consumers.insert(r);
    } else if (e.kind == EventKind::NewAnswer || e.kind == EventKind::ConditionalAnswer) {
      Acc& a = slot(e.args[1]);
      a.ctrs.push_back(e.ctr);
      if (i >= window_start) ++a.in_window;
      const Term& ans = strip_neg(e.args[0]);
      if (ans.is_app()) {
        a.values.resize(std::max(a.values.size(), ans.arity()));
        for (std::size_t k = 0; k < ans.arity(); ++k)
          if (a.values[k].size() < 2) a.values[k].insert(variant_hash(ans.arg(k)));
      }
    }
  }
  std::vector<AnswerFlowFinding> out;
  std::size_t span = std::max<std::size_t>(1, total - window_start);
  for (std::size_t id = 0; id < acc.size(); ++id) {
    const Acc& a = acc[id];
    if (a.completed || a.ctrs.size() < p.min_answers) continue;
    double rate = static_cast<double>(a.in_window) / static_cast<double>(span);
    if (rate < p.min_rate) continue;
    AnswerFlowFinding f;
    f.subgoal_term = ids.term(static_cast<int>(id));
    f.subgoal = canonical_text(f.subgoal_term);
    f.predicate = predicate_text(f.subgoal_term);
    f.answer_events = a.ctrs.size();
    f.growth_rate = rate;
    for (std::size_t i = 0; i < a.ctrs.size(); ++i)
      if (i < 5 || i + 5 >= a.ctrs.size()) f.answer_event_ctrs.push_back(a.ctrs[i]);
    f.feeding_rules = a.consumers;
    for (std::size_t k = 0; k < a.values.size(); ++k)
      if (a.values[k].size() > 1) f.varying_positions.push_back(k);
    out.push_back(std::move(f));
  }
  std::stable_sort(out.begin(), out.end(),
                   [](const auto& x, const auto& y) { return x.answer_events > y.answer_events; });
  return out;
}

TerminyzerReport terminyzer(const Log& log, const CallSequenceParams& cp, const AnswerFlowParams& ap) {
  return {terminyzer_calls(log, cp), terminyzer_answers(log, ap)};
}

SuggestionOutcome suggest_delay(const CompiledKB& kb, const TerminyzerReport& report) {
  SuggestionOutcome out;
  std::set<std::pair<std::string, std::size_t>> done;
  for (const auto& f : report.answer_flow_findings) {
    const Term& sg = f.subgoal_term;
    for (const auto& rid : f.feeding_rules) {
      for (const auto& r : kb.rules) {
        if (r.rule_id != rid) continue;
        for (std::size_t i = 0; i < r.body.size(); ++i) {
          const BodyLiteral& b = r.body[i];
          if (b.mode != NafMode::Plain || !b.delay_guard.empty()) continue;
          if (is_builtin(b.atom) || b.atom.is_app("$skip", 6)) continue;
          Term lit = log_literal(b.atom);
          if (predicate_text(lit) != f.predicate || !unify(rename_apart(sg), lit)) continue;
          if (!done.insert({rid, i}).second) continue;
          const Term& a = strip_neg(lit);
          std::vector<Term> infinite;
          if (f.varying_positions.empty() || !a.is_app()) {
            collect_vars(a, infinite);
          } else {
            for (auto k : f.varying_positions)
              if (k < a.arity()) collect_vars(a.arg(k), infinite);
          }
          std::vector<Term> guard;
          for (const auto& v : infinite) {
            bool shared = false;
            for (std::size_t j = i + 1; j < r.body.size() && !shared; ++j) {
              shared = mentions(r.body[j].atom, v.var_id());
              for (const auto& g : r.body[j].delay_guard) shared = shared || mentions(g, v.var_id());
            }
            if (shared) guard.push_back(v);
          }
          if (guard.empty()) {
            out.unmatched.push_back(rid + ": " + body_literal_text(b));
            continue;
          }
          NormalRule nr = r;
          nr.body[i].delay_guard = guard;
          DelaySuggestion s;
          s.rule_id = rid;
          s.body_position = i;
          s.original_literal = body_literal_text(b);
          s.rewritten_literal = body_literal_text(nr.body[i]);
          s.rewritten_rule = to_text(nr);
          s.guard = guard;
          s.subgoal = f.subgoal;
          out.suggestions.push_back(std::move(s));
        }
      }
    }
  }
  return out;
}

CompiledKB apply_suggestion(const CompiledKB& kb, const DelaySuggestion& s) {
  CompiledKB out = kb;
  for (auto& r : out.rules) {
    if (r.rule_id != s.rule_id || s.body_position >= r.body.size()) continue;
    BodyLiteral& b = r.body[s.body_position];
    if (body_literal_text(b) != s.original_literal) continue;
    b.delay_guard = s.guard;
  }
  out.index();
  return out;
}

}  // namespace silk
