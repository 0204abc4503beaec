#include "silk/report.hpp"

#include "silk/reader.hpp"

#include <map>
#include <stdexcept>
#include <unordered_map>

namespace silk::report {

namespace {

json term_rec(const Term& t, std::unordered_map<VarId, std::string>& names) {
  switch (t.kind()) {
    case TermKind::Variable: {
      auto [it, fresh] = names.emplace(t.var_id(), "");
      if (fresh) it->second = "_G" + std::to_string(names.size());
      return {{"v", it->second}};
    }
    case TermKind::Atom: return {{"s", t.text()}};
    case TermKind::Integer: return {{"s", t.int_value()}};
    case TermKind::String: return {{"str", t.text()}};
    case TermKind::Application: {
      json a = json::array();
      a.push_back(term_rec(t.functor(), names));
      for (const auto& x : t.args()) a.push_back(term_rec(x, names));
      json out = json::object();
      out["app"] = std::move(a);
      return out;
    }
  }
  return nullptr;
}

Term from_rec(const json& j, std::map<std::string, Term>& vars) {
  if (!j.is_object() || j.size() != 1) throw std::invalid_argument("bad term: " + j.dump());
  if (j.contains("v")) {
    const std::string& n = j["v"].get_ref<const std::string&>();
    auto [it, fresh] = vars.emplace(n, Term());
    if (fresh) it->second = Term::fresh_variable(n);
    return it->second;
  }
  if (j.contains("s")) {
    const json& s = j["s"];
    if (s.is_number_integer()) return Term::integer(s.get<std::int64_t>());
    if (s.is_string()) return Term::atom(s.get<std::string>());
  }
  if (j.contains("str") && j["str"].is_string()) return Term::string(j["str"].get<std::string>());
  if (j.contains("app") && j["app"].is_array() && j["app"].size() >= 2) {
    const json& a = j["app"];
    Term f = from_rec(a[0], vars);
    std::vector<Term> args;
    for (std::size_t i = 1; i < a.size(); ++i) args.push_back(from_rec(a[i], vars));
    return Term::app(f, std::move(args));
  }
  throw std::invalid_argument("bad term: " + j.dump());
}

TruthValue truth_from(const std::string& s) {
  if (s == "true") return TruthValue::True;
  if (s == "false") return TruthValue::False;
  return TruthValue::Undefined;
}

}  // namespace

json term(const Term& t) {
  std::unordered_map<VarId, std::string> names;
  return term_rec(t, names);
}

Term term_from(const json& j) {
  std::map<std::string, Term> vars;
  return from_rec(j, vars);
}

const char* truth_name(TruthValue tv) {
  return tv == TruthValue::True ? "true" : tv == TruthValue::False ? "false" : "undefined";
}

json diagnostics(const std::vector<Diagnostic>& ds) {
  json out = json::array();
  for (const auto& d : ds) out.push_back({{"file", d.file}, {"line", d.line}, {"column", d.column}, {"message", d.message}});
  return out;
}

json counters(const EngineCounters& c) {
  return {{"ops", c.ops},
          {"events", c.events},
          {"calls", c.calls},
          {"newSubgoals", c.new_subgoals},
          {"answers", c.answers},
          {"conditionalAnswers", c.conditional_answers},
          {"undefinedAnswers", c.undefined_answers},
          {"delays", c.delays},
          {"simplificationsSucceeded", c.simplifications_succeeded},
          {"simplificationsFailed", c.simplifications_failed},
          {"completions", c.completions},
          {"subgoalAbstractions", c.subgoal_abstractions},
          {"answerAbstractions", c.answer_abstractions},
          {"interrupts", c.interrupts}};
}

json answers(const std::vector<GoalAnswer>& as) {
  json out = json::array();
  for (const auto& a : as) {
    json b = json::object();
    for (const auto& [name, value] : a.bindings) b[name] = canonical_text(value);
    out.push_back({{"term", a.text}, {"tv", truth_name(a.tv)}, {"bindings", b}});
  }
  return out;
}

json table_dump(const std::vector<TableDumpEntry>& entries) {
  json out = json::array();
  for (const auto& e : entries) {
    json callers = json::array();
    for (const auto& c : e.calling_rules) callers.push_back({{"ruleId", c.rule_id}, {"caller", c.caller}});
    json ans = json::array();
    for (const auto& [text, tv] : e.answers) ans.push_back({{"answer", text}, {"tv", truth_name(tv)}});
    out.push_back({{"table", e.table},
                   {"subgoal", e.subgoal},
                   {"predicate", e.predicate},
                   {"answerCount", e.answer_count},
                   {"trueCount", e.true_count},
                   {"undefinedCount", e.undefined_count},
                   {"callCount", e.call_count},
                   {"completed", e.completed},
                   {"callingRules", callers},
                   {"answers", ans}});
  }
  return out;
}

json table_summary(const std::vector<TableDumpSummary>& rows) {
  json out = json::array();
  for (const auto& r : rows)
    out.push_back({{"predicate", r.predicate}, {"tables", r.tables}, {"answers", r.answers}, {"calls", r.calls}});
  return out;
}

json overview(const OverviewStats& o) {
  json hist = json::object();
  for (const auto& [size, n] : o.scc_size_histogram) hist[std::to_string(size)] = n;
  return {{"events", o.events},
          {"totalCalls", o.total_calls},
          {"distinctSubgoals", o.distinct_subgoals},
          {"totalAnswers", o.total_answers},
          {"conditionalAnswers", o.conditional_answers},
          {"undefinedAnswers", o.undefined_answer_count},
          {"completions", o.completions},
          {"sccCount", o.scc_count},
          {"sccSizeHistogram", hist},
          {"negationOps", o.negation_op_counts},
          {"abstractions", o.abstraction_counts},
          {"interrupts", o.interrupts},
          {"partial", o.partial}};
}

json scc(const Scc& c) {
  json members = json::array();
  for (const auto& m : c.members) members.push_back(canonical_text(m));
  json edges = json::array();
  for (const auto& e : c.edges)
    edges.push_back({{"caller", canonical_text(c.members[e.caller])},
                     {"callee", canonical_text(c.members[e.callee])},
                     {"ruleId", e.rule_id}});
  return {{"id", c.id}, {"members", members}, {"edges", edges}, {"trivial", c.trivial}};
}

json sccs(const std::vector<Scc>& cs) {
  json out = json::array();
  for (const auto& c : cs)
    if (!c.trivial) out.push_back(scc(c));
  return out;
}

json abstract_scc(const Scc& c, const AbstractScc& a, AbstractionMode mode) {
  json members = json::array();
  for (const auto& [form, n] : a.members) members.push_back({{"form", form}, {"subgoals", n}});
  json edges = json::array();
  for (const auto& [from, to, rule] : a.edges) edges.push_back({{"caller", from}, {"callee", to}, {"ruleId", rule}});
  return {{"id", c.id},
          {"abstraction", mode == AbstractionMode::Mode ? "mode" : "pred"},
          {"members", members},
          {"edges", edges}};
}

json terminyzer(const TerminyzerReport& r, const SuggestionOutcome& s) {
  json calls = json::array();
  for (const auto& f : r.call_sequence_findings)
    calls.push_back({{"ruleCycle", f.rule_cycle},
                     {"witnessChain", f.witness_chain},
                     {"witnessCtrs", f.witness_ctrs},
                     {"repeats", f.repeats},
                     {"growth", f.growth}});
  json flows = json::array();
  for (const auto& f : r.answer_flow_findings)
    flows.push_back({{"subgoal", f.subgoal},
                     {"predicate", f.predicate},
                     {"answerEvents", f.answer_events},
                     {"answerEventCtrs", f.answer_event_ctrs},
                     {"growthRate", f.growth_rate},
                     {"feedingRules", f.feeding_rules},
                     {"varyingPositions", f.varying_positions}});
  json sugg = json::array();
  for (const auto& d : s.suggestions) {
    json guard = json::array();
    for (const auto& g : d.guard) guard.push_back(display_text(g));
    sugg.push_back({{"ruleId", d.rule_id},
                    {"bodyPosition", d.body_position},
                    {"originalLiteral", d.original_literal},
                    {"rewrittenLiteral", d.rewritten_literal},
                    {"rewrittenRule", d.rewritten_rule},
                    {"guard", guard},
                    {"subgoal", d.subgoal}});
  }
  return {{"callSequenceFindings", calls},
          {"answerFlowFindings", flows},
          {"suggestions", sugg},
          {"unmatched", s.unmatched}};
}

json node(const JustificationNode& n) {
  json j = {{"id", n.id},
            {"kind", to_string(n.kind)},
            {"text", n.text},
            {"tvColor", n.tv_color ? json(to_string(*n.tv_color)) : json(nullptr)},
            {"argStatus", n.arg_status ? json(to_string(*n.arg_status)) : json(nullptr)},
            {"side", to_string(n.side)},
            {"expansion", to_string(n.expansion)},
            {"childIds", n.children}};
  if (n.revisit) j["revisit"] = true;
  if (!n.restrained.empty()) j["restrained"] = n.restrained;
  if (n.kind == NodeKind::A) j["ruleId"] = n.rule_id;
  return j;
}

json tables(const std::vector<Table>& ts) {
  json out = json::array();
  for (const auto& t : ts) {
    json ans = json::array();
    for (const auto& a : t.answers) {
      json x = json::object();
      x["literal"] = canonical_text(a.literal);
      x["tv"] = truth_name(a.tv());
      ans.push_back(std::move(x));
    }
    json callers = json::array();
    for (const auto& c : t.callers) callers.push_back({{"table", c.table}, {"ruleId", c.rule_id}});
    json row = {{"predicate", t.predicate}, {"complete", t.complete}, {"callCount", t.call_count}};
    row["subgoal"] = canonical_text(t.subgoal);
    row["answers"] = std::move(ans);
    row["callers"] = std::move(callers);
    out.push_back(std::move(row));
  }
  return out;
}

std::vector<Table> tables_from(const json& j) {
  std::vector<Table> out;
  for (const auto& r : j) {
    Table t;
    t.subgoal = parse_term(r.at("subgoal").get<std::string>());
    t.predicate = r.at("predicate").get<std::string>();
    t.complete = r.at("complete").get<bool>();
    t.call_count = r.at("callCount").get<std::uint64_t>();
    for (const auto& a : r.at("answers")) {
      Answer x;
      x.literal = parse_term(a.at("literal").get<std::string>());
      TruthValue tv = truth_from(a.at("tv").get<std::string>());
      x.unconditional = tv == TruthValue::True;
      x.deleted = tv == TruthValue::False;
      t.answers.push_back(std::move(x));
    }
    for (const auto& c : r.at("callers")) t.callers.insert({c.at("table").get<int>(), c.at("ruleId").get<std::string>()});
    out.push_back(std::move(t));
  }
  return out;
}

}  // namespace silk::report
