#pragma once

// JSON forms shared by the HTTP service and `silk ... --json`.

#include <string>
#include <vector>

#include "json.hpp"
#include "silk/analysis.hpp"
#include "silk/engine.hpp"
#include "silk/justify.hpp"

namespace silk::report {

using json = nlohmann::json;

/// Wire form of a term: {"v": name} | {"s": atom or integer} | {"str": text}
/// | {"app": [functor, args...]}. Variables are named _G1, _G2, ... in
/// first-occurrence order, so variants encode identically.
json term(const Term& t);
Term term_from(const json& j);

const char* truth_name(TruthValue tv);

json diagnostics(const std::vector<Diagnostic>& ds);
json counters(const EngineCounters& c);
json answers(const std::vector<GoalAnswer>& as);
json table_dump(const std::vector<TableDumpEntry>& entries);
json table_summary(const std::vector<TableDumpSummary>& rows);
json overview(const OverviewStats& o);
json scc(const Scc& c);
json sccs(const std::vector<Scc>& cs);
json abstract_scc(const Scc& c, const AbstractScc& a, AbstractionMode mode);
json terminyzer(const TerminyzerReport& r, const SuggestionOutcome& s);
json node(const JustificationNode& n);

/// Lossless enough to rebuild tables for table_dump after a restart:
/// subgoals, answers with truth values, call counts, callers.
json tables(const std::vector<Table>& ts);
std::vector<Table> tables_from(const json& j);

}  // namespace silk::report
