#pragma once

// Profiling over table snapshots and forest logs: table dump, run overview,
// recursive components of the call graph, and Terminyzer.

#include <cstdint>
#include <map>
#include <optional>
#include <set>
#include <string>
#include <tuple>
#include <vector>

#include "silk/engine.hpp"
#include "silk/forestlog.hpp"

namespace silk {

// ---------------------------------------------------------------- table dump

struct CallingRule {
  std::string rule_id;
  std::string caller;  // subgoal text, or "top"
  friend bool operator<(const CallingRule& a, const CallingRule& b) {
    return std::tie(a.rule_id, a.caller) < std::tie(b.rule_id, b.caller);
  }
  friend bool operator==(const CallingRule& a, const CallingRule& b) = default;
};

struct TableDumpEntry {
  int table = -1;
  std::string subgoal;    // canonical text
  std::string predicate;  // predicate abstraction, e.g. p/2
  std::size_t answer_count = 0;
  std::size_t true_count = 0;
  std::size_t undefined_count = 0;
  std::uint64_t call_count = 0;
  bool completed = false;
  std::set<CallingRule> calling_rules;
  std::vector<std::pair<std::string, TruthValue>> answers;
};

struct TableDumpSummary {
  std::string predicate;
  std::size_t tables = 0;
  std::size_t answers = 0;
  std::uint64_t calls = 0;
};

/// Tables whose subgoal is subsumed by `pattern`; a variable pattern selects
/// every table.
std::vector<TableDumpEntry> table_dump(const std::vector<Table>& tables, const Literal& pattern);
/// The same selection aggregated by predicate.
std::vector<TableDumpSummary> table_dump_summary(const std::vector<Table>& tables, const Literal& pattern);

// ---------------------------------------------------------------- abstraction

enum class AbstractionMode { Mode, Predicate };

/// Mode abstraction maps each argument to `bound` or `free`; predicate
/// abstraction gives name/arity (neg(name)/arity for explicit negation).
Term abstract_subgoal(const Term& logged_subgoal, AbstractionMode mode);

// ---------------------------------------------------------------- components

struct SccEdge {
  std::size_t caller = 0;  // indices into Scc::members
  std::size_t callee = 0;
  std::string rule_id;
  friend bool operator<(const SccEdge& a, const SccEdge& b) {
    return std::tie(a.caller, a.callee, a.rule_id) < std::tie(b.caller, b.callee, b.rule_id);
  }
  friend bool operator==(const SccEdge& a, const SccEdge& b) = default;
};

struct Scc {
  int id = 0;
  std::vector<Term> members;    // logged subgoals, first-call order
  std::vector<SccEdge> edges;   // both ends inside, sorted, no duplicates
  bool trivial = true;          // one member and no self edge

  std::set<std::string> member_texts() const;
};

/// Components of the caller -> callee graph of table_call events, in
/// reverse topological order (callees first).
std::vector<Scc> sccs(const Log& log);

/// Component members and edges coalesced under an abstraction.
struct AbstractScc {
  std::map<std::string, std::size_t> members;  // abstract form -> subgoal count
  std::set<std::tuple<std::string, std::string, std::string>> edges;  // caller, callee, rule
};
AbstractScc abstract_scc(const Scc& scc, AbstractionMode mode);

// ---------------------------------------------------------------- overview

struct OverviewStats {
  std::uint64_t events = 0;
  std::uint64_t total_calls = 0;
  std::uint64_t distinct_subgoals = 0;
  std::uint64_t total_answers = 0;         // distinct answers, conditional or not
  std::uint64_t conditional_answers = 0;
  std::uint64_t undefined_answer_count = 0;  // neither upgraded nor simplified
  std::uint64_t completions = 0;
  std::uint64_t scc_count = 0;             // recursive components
  std::map<std::size_t, std::size_t> scc_size_histogram;
  std::map<std::string, std::uint64_t> negation_op_counts;  // delay, simplification, completed
  std::map<std::string, std::uint64_t> abstraction_counts;  // subgoal, answer
  std::uint64_t interrupts = 0;
  bool partial = false;  // the log does not cover the whole run
};

OverviewStats overview(const Log& log);

// ---------------------------------------------------------------- Terminyzer

struct CallSequenceParams {
  std::size_t min_repeats = 3;
  std::size_t min_depth_growth = 2;  // over the repeating stretch
  std::size_t max_period = 8;
};

struct CallSequenceFinding {
  std::vector<std::string> rule_cycle;
  std::vector<std::string> witness_chain;  // subgoal texts, ctr order
  std::vector<std::uint64_t> witness_ctrs;
  std::size_t repeats = 0;
  std::string growth;
};

std::vector<CallSequenceFinding> terminyzer_calls(const Log& log, const CallSequenceParams& p = {});

struct AnswerFlowParams {
  std::size_t window = 1000;   // trailing events examined
  double min_rate = 0.05;      // answer events per event in the window
  std::size_t min_answers = 3;
};

struct AnswerFlowFinding {
  Term subgoal_term;
  std::string subgoal;
  std::string predicate;
  std::vector<std::uint64_t> answer_event_ctrs;  // first and last few
  std::size_t answer_events = 0;
  double growth_rate = 0;  // answer events per event in the window
  std::set<std::string> feeding_rules;
  std::vector<std::size_t> varying_positions;  // argument positions taking many values
};

std::vector<AnswerFlowFinding> terminyzer_answers(const Log& log, const AnswerFlowParams& p = {});

struct TerminyzerReport {
  std::vector<CallSequenceFinding> call_sequence_findings;
  std::vector<AnswerFlowFinding> answer_flow_findings;
};

TerminyzerReport terminyzer(const Log& log, const CallSequenceParams& cp = {}, const AnswerFlowParams& ap = {});

struct DelaySuggestion {
  std::string rule_id;
  std::size_t body_position = 0;
  std::string original_literal;
  std::string rewritten_literal;  // e.g. wish(ground(?X))^p(?X,?Y)
  std::string rewritten_rule;
  std::vector<Term> guard;        // variables to wait for
  std::string subgoal;            // the finding it answers
};

struct SuggestionOutcome {
  std::vector<DelaySuggestion> suggestions;
  /// Findings whose offending literals share no variable with later siblings.
  std::vector<std::string> unmatched;
};

SuggestionOutcome suggest_delay(const CompiledKB& kb, const TerminyzerReport& report);
/// Returns a copy of `kb` with the guard of `s` installed.
CompiledKB apply_suggestion(const CompiledKB& kb, const DelaySuggestion& s);

}  // namespace silk
