// silk: run queries, analyze forest logs, serve the HTTP API.

#include <chrono>
#include <cstdlib>
#include <fstream>
#include <iostream>
#include <sstream>
#include <thread>

#include "CLI11.hpp"
#include "silk/analysis.hpp"
#include "silk/engine.hpp"
#include "silk/forestlog.hpp"
#include "silk/justify.hpp"
#include "silk/reader.hpp"
#include "silk/report.hpp"
#include "silk/service.hpp"
#include "silk/stack.hpp"
#include "silk/transform.hpp"

using namespace silk;
using report::json;

namespace {

constexpr int kExitParse = 1;
constexpr int kExitRuntime = 2;
constexpr int kExitLimit = 3;

struct RunFlags {
  std::vector<std::string> files;
  std::string goal;
  std::string log_path;
  bool log_compat = false;
  int interval_ms = 0;
  std::uint64_t max_ops = EvalOptions{}.max_ops;
  std::string theory = "default";
  std::string dump;
  std::string justify;
  bool json_out = false;
  bool emit = false;
};

struct AnalyzeFlags {
  std::string log_path;
  bool overview = false;
  bool sccs = false;
  std::string abstraction;
  bool terminyzer = false;
  std::vector<std::string> programs;
  bool json_out = false;
};

struct ServeFlags {
  std::string host = "0.0.0.0";
  int port = 8080;
  std::string data_dir = "silk-data";
  std::string ui_dir;
};

std::string read_file(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw std::runtime_error("cannot read " + path);
  std::ostringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

// Parse and compile; prints diagnostics and returns null on failure.
std::shared_ptr<const CompiledKB> load_kb(const std::vector<std::string>& files, Theory th) {
  std::vector<SourceFile> sources;
  for (const auto& f : files) sources.push_back({f, read_file(f)});
  try {
    return std::make_shared<const CompiledKB>(compile(parse_sources(sources), th));
  } catch (const ParseError& e) {
    for (const auto& d : e.diagnostics()) std::cerr << to_string(d) << "\n";
  } catch (const CompileError& e) {
    for (const auto& d : e.diagnostics()) std::cerr << to_string(d) << "\n";
  } catch (const UnsupportedHead& e) {
    std::cerr << "error: " << e.what() << "\n";
  }
  return nullptr;
}

// ---------------------------------------------------------------- text reports

const char* tv_word(TruthValue tv) {
  return tv == TruthValue::True ? "TRUE" : tv == TruthValue::False ? "FALSE" : "UNDEFINED";
}

void print_overview(const OverviewStats& o) {
  std::cout << "events:               " << o.events << "\n"
            << "calls:                " << o.total_calls << "\n"
            << "distinct subgoals:    " << o.distinct_subgoals << "\n"
            << "answers:              " << o.total_answers << "\n"
            << "conditional answers:  " << o.conditional_answers << "\n"
            << "undefined answers:    " << o.undefined_answer_count << "\n"
            << "completions:          " << o.completions << "\n"
            << "recursive components: " << o.scc_count << "\n";
  for (const auto& [size, n] : o.scc_size_histogram) std::cout << "  size " << size << ": " << n << "\n";
  for (const auto& [k, n] : o.negation_op_counts) std::cout << "negation " << k << ": " << n << "\n";
  for (const auto& [k, n] : o.abstraction_counts) std::cout << "abstraction " << k << ": " << n << "\n";
  std::cout << "interrupts:           " << o.interrupts << "\n";
  if (o.partial) std::cout << "(partial log)\n";
}

void print_sccs(const std::vector<Scc>& cs, std::optional<AbstractionMode> mode) {
  bool any = false;
  for (const auto& c : cs) {
    if (c.trivial) continue;
    any = true;
    std::cout << "component " << c.id << " (" << c.members.size() << " subgoals)\n";
    if (mode) {
      AbstractScc a = abstract_scc(c, *mode);
      for (const auto& [form, n] : a.members) std::cout << "  " << form << "  x" << n << "\n";
      for (const auto& [from, to, rule] : a.edges) std::cout << "  " << from << " -> " << to << "  [" << rule << "]\n";
    } else {
      for (const auto& m : c.members) std::cout << "  " << canonical_text(m) << "\n";
      for (const auto& e : c.edges)
        std::cout << "  " << canonical_text(c.members[e.caller]) << " -> " << canonical_text(c.members[e.callee])
                  << "  [" << e.rule_id << "]\n";
    }
  }
  if (!any) std::cout << "no recursive components\n";
}

std::string join(const std::vector<std::string>& xs, const char* sep) {
  std::string s;
  for (const auto& x : xs) s += (s.empty() ? "" : sep) + x;
  return s;
}

std::string elide(const std::string& s, std::size_t max = 160) {
  if (s.size() <= max) return s;
  return s.substr(0, max - 20) + " ... " + s.substr(s.size() - 15) + " (" + std::to_string(s.size()) + " chars)";
}

void print_terminyzer(const TerminyzerReport& r, const SuggestionOutcome* s) {
  if (r.call_sequence_findings.empty() && r.answer_flow_findings.empty()) {
    std::cout << "no non-termination found\n";
    return;
  }
  for (const auto& f : r.call_sequence_findings) {
    std::cout << "call sequence: rule cycle " << join(f.rule_cycle, " -> ") << " repeats " << f.repeats << " times, "
              << f.growth << "\n";
    std::size_t shown = std::min<std::size_t>(f.witness_chain.size(), 6);
    for (std::size_t i = 0; i < shown; ++i) std::cout << "  " << elide(f.witness_chain[i]) << "  @" << f.witness_ctrs[i] << "\n";
    if (shown < f.witness_chain.size()) std::cout << "  ...\n";
  }
  for (const auto& f : r.answer_flow_findings) {
    std::vector<std::string> rules(f.feeding_rules.begin(), f.feeding_rules.end());
    std::vector<std::string> pos;
    for (auto p : f.varying_positions) pos.push_back(std::to_string(p));
    std::cout << "answer flow: " << elide(f.subgoal) << " received " << f.answer_events << " answers (rate " << f.growth_rate
              << "), fed by " << join(rules, ", ") << ", varying positions " << join(pos, ", ") << "\n";
  }
  if (!s) return;
  for (const auto& d : s->suggestions)
    std::cout << "suggestion: " << d.rule_id << " body literal " << d.body_position << ": " << d.original_literal
              << "  =>  " << d.rewritten_literal << "\n  " << d.rewritten_rule << "\n";
  for (const auto& u : s->unmatched) std::cout << "no delay suggestion for " << u << "\n";
}

void print_dump(const std::vector<TableDumpEntry>& entries) {
  if (entries.empty()) std::cout << "no matching tables\n";
  for (const auto& e : entries) {
    std::cout << "table " << e.subgoal << (e.completed ? "" : " (incomplete)") << ": " << e.answer_count
              << " answers, " << e.undefined_count << " undefined, " << e.call_count << " calls\n";
    for (const auto& c : e.calling_rules) std::cout << "  called by " << c.rule_id << "@" << c.caller << "\n";
    for (const auto& [text, tv] : e.answers) std::cout << "  " << tv_word(tv) << " " << text << "\n";
  }
}

// ---------------------------------------------------------------- justification

void print_tree(Justification& j, int id, int depth, int& budget) {
  const JustificationNode& n = j.node(id);
  std::cout << std::string(2 * depth, ' ') << to_string(n.kind);
  if (n.side == Side::ConBar) std::cout << " con";
  if (n.tv_color) std::cout << " (" << to_string(*n.tv_color) << ")";
  if (n.arg_status) std::cout << (*n.arg_status == ArgStatus::UndefeatedBang ? " !" : " v");
  std::cout << " " << n.text;
  if (n.revisit) std::cout << "  (revisit)";
  std::cout << "\n";
  if (n.expansion == Expansion::None && n.children.empty()) return;
  if (--budget <= 0 || depth >= 12) {
    std::cout << std::string(2 * depth + 2, ' ') << "...\n";
    return;
  }
  std::vector<int> kids = n.children;
  if (n.expansion != Expansion::None) {
    kids.clear();
    for (const auto& c : j.expand(id)) kids.push_back(c.id);
  }
  for (int k : kids) print_tree(j, k, depth + 1, budget);
}

json tree_json(Justification& j, int id, int depth, int& budget) {
  if (j.node(id).expansion != Expansion::None && --budget > 0 && depth < 12) j.expand(id);
  json out = report::node(j.node(id));
  json kids = json::array();
  for (int k : j.node(id).children) kids.push_back(tree_json(j, k, depth + 1, budget));
  out["children"] = std::move(kids);
  return out;
}

// ---------------------------------------------------------------- interrupt prompt

constexpr std::size_t kPromptDumpLimit = 20;

// Runs on the main thread while the evaluation waits in await_decision().
void interrupt_prompt(EvaluationHandle& h, bool& abort) {
  std::cerr << "interrupted after " << h.op_count() << " operations\n";
  for (;;) {
    std::cerr << "[d]ump [pattern], [l]ogging on/off, [t]erminyzer, [s]cc overview, [c]ontinue, [a]bort > "
              << std::flush;
    std::string line;
    if (!std::getline(std::cin, line)) return;  // no input: keep going
    std::istringstream in(line);
    std::string cmd;
    in >> cmd;
    std::string rest;
    std::getline(in, rest);
    rest.erase(0, rest.find_first_not_of(' '));
    try {
      if (cmd == "c" || cmd == "continue") return;
      if (cmd == "a" || cmd == "abort") {
        abort = true;
        return;
      }
      if (cmd == "d" || cmd == "dump") {
        Literal pat = parse_literal(rest.empty() ? "?T" : rest);
        std::vector<Table> tables = h.table_snapshot();
        std::size_t matched = 0;
        for (const auto& r : table_dump_summary(tables, pat)) {
          std::cerr << "  " << r.predicate << ": " << r.tables << " tables, " << r.answers << " answers, " << r.calls
                    << " calls\n";
          matched += r.tables;
        }
        if (matched > kPromptDumpLimit)
          std::cerr << "  (" << matched << " tables; narrow the pattern to list them)\n";
        else if (!rest.empty()) {
          std::streambuf* old = std::cout.rdbuf(std::cerr.rdbuf());
          print_dump(table_dump(tables, pat));
          std::cout.rdbuf(old);
        }
      } else if (cmd == "l" || cmd == "logging") {
        h.set_logging(!h.logging());
        std::cerr << "logging " << (h.logging() ? "on" : "off") << "\n";
      } else if (cmd == "t" || cmd == "terminyzer" || cmd == "s" || cmd == "scc") {
        Log log = h.captured_log();
        if (log.events.empty()) {
          std::cerr << "no log events yet; switch logging on and continue\n";
          continue;
        }
        std::streambuf* old = std::cout.rdbuf(std::cerr.rdbuf());
        if (cmd[0] == 't') {
          TerminyzerReport rep = terminyzer(log);
          SuggestionOutcome sug = suggest_delay(*h.kb(), rep);
          print_terminyzer(rep, &sug);
        } else {
          print_overview(overview(log));
          print_sccs(sccs(log), AbstractionMode::Mode);
        }
        std::cout.rdbuf(old);
      } else if (!cmd.empty()) {
        std::cerr << "unknown choice '" << cmd << "'\n";
      }
    } catch (const std::exception& e) {
      std::cerr << "error: " << e.what() << "\n";
    }
  }
}

void drive(EvaluationHandle& h, bool interactive) {
  h.start();
  if (!interactive) {
    h.wait();
    return;
  }
  for (;;) {
    EvalState s = h.state();
    if (s == EvalState::Completed || s == EvalState::Aborted || s == EvalState::Failed) break;
    if (s == EvalState::Paused) {
      bool abort = false;
      interrupt_prompt(h, abort);
      if (abort) h.request_abort();
      else h.resume();
      while (h.state() == EvalState::Paused) std::this_thread::sleep_for(std::chrono::milliseconds(1));
      continue;
    }
    std::this_thread::sleep_for(std::chrono::milliseconds(2));
  }
  h.wait();
}

// ---------------------------------------------------------------- subcommands

int cmd_run(const RunFlags& f) {
  auto th = theory_from_string(f.theory);
  if (!th) {
    std::cerr << "unknown theory " << f.theory << "\n";
    return kExitParse;
  }
  std::shared_ptr<const CompiledKB> kb;
  try {
    kb = load_kb(f.files, *th);
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return kExitParse;
  }
  if (!kb) return kExitParse;

  json out = json::object();
  if (f.emit) {
    if (f.json_out) {
      json rules = json::array();
      for (const auto& r : kb->rules) rules.push_back(emit_text(r));
      out["rules"] = std::move(rules);
    } else {
      for (const auto& r : kb->rules) std::cout << emit_text(r) << "\n";
    }
    if (f.goal.empty()) {
      if (f.json_out) std::cout << out.dump(2) << "\n";
      return 0;
    }
  }
  if (f.goal.empty()) {
    std::cerr << "run needs a goal (-q)\n";
    return kExitParse;
  }

  Formula goal;
  std::optional<Literal> dump_pat, justify_lit;
  try {
    goal = parse_goal(f.goal);
    if (!f.dump.empty()) dump_pat = parse_literal(f.dump);
    if (!f.justify.empty()) justify_lit = parse_literal(f.justify);
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return kExitParse;
  }

  EvalOptions opts;
  opts.max_ops = f.max_ops;
  opts.log_path = f.log_path;
  opts.logging = !f.log_path.empty();
  opts.log_compat = f.log_compat;
  opts.capture_log = f.interval_ms > 0;
  std::unique_ptr<EvaluationHandle> h;
  try {
    h = std::make_unique<EvaluationHandle>(kb, goal, opts);
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return kExitParse;
  }
  if (f.interval_ms > 0)
    h->set_interrupt_handler([](EvaluationHandle& x) { return x.await_decision(); }, f.interval_ms);
  drive(*h, f.interval_ms > 0);

  EvalState st = h->state();
  out["state"] = to_string(st);
  out["counters"] = report::counters(h->counters());
  std::vector<Table> tables = h->table_snapshot();
  if (dump_pat) {
    if (f.json_out) out["tables"] = report::table_dump(table_dump(tables, *dump_pat));
    else print_dump(table_dump(tables, *dump_pat));
  }

  if (st == EvalState::Failed) {
    out["error"] = h->error();
    out["limitExceeded"] = h->limit_exceeded();
    if (f.json_out) std::cout << out.dump(2) << "\n";
    std::cerr << "error: " << h->error() << "\n";
    if (!h->limit_exceeded()) return kExitRuntime;
    if (!f.log_path.empty())
      std::cerr << "see `silk analyze " << f.log_path << " --terminyzer` for likely causes\n";
    else
      std::cerr << "rerun with --log FILE, then `silk analyze FILE --terminyzer` for likely causes\n";
    return kExitLimit;
  }
  if (st == EvalState::Aborted) {
    if (f.json_out) std::cout << out.dump(2) << "\n";
    std::cerr << "evaluation aborted\n";
    return kExitRuntime;
  }

  std::vector<GoalAnswer> answers = h->answers();
  if (f.json_out) {
    out["answers"] = report::answers(answers);
  } else {
    std::stable_partition(answers.begin(), answers.end(), [](const GoalAnswer& a) { return a.tv == TruthValue::True; });
    for (const auto& a : answers) std::cout << (a.tv == TruthValue::True ? "TRUE      " : "UNDEFINED ") << a.text << "\n";
    if (answers.empty()) std::cout << "FALSE     " << to_text(goal) << "\n";
  }

  if (justify_lit) {
    try {
      Justification j(*h);
      const JustificationNode& root = j.root(*justify_lit);
      int budget = 400;
      if (f.json_out) out["justification"] = tree_json(j, root.id, 0, budget);
      else print_tree(j, root.id, 0, budget);
    } catch (const NoSuchTable& e) {
      std::cerr << "cannot justify: " << e.what() << "\n";
      if (f.json_out) out["justification"] = nullptr;
    }
  }
  if (f.json_out) std::cout << out.dump(2) << "\n";
  return 0;
}

int cmd_analyze(const AnalyzeFlags& f) {
  Log log;
  try {
    log = load_log(f.log_path);
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return kExitParse;
  }
  std::size_t lines = log.events.size() + log.malformed.size();
  for (const auto& m : log.malformed) std::cerr << f.log_path << ":" << m.line_no << ": " << m.message << "\n";
  // tolerate the odd damaged line, not a file that is mostly noise
  if (lines > 0 && log.malformed.size() * 10 > lines) {
    std::cerr << "error: too many malformed lines (" << log.malformed.size() << " of " << lines << ")\n";
    return kExitParse;
  }
  if (log.truncated_tail) std::cerr << "warning: last line is cut off\n";

  std::optional<AbstractionMode> mode;
  if (f.abstraction == "mode") mode = AbstractionMode::Mode;
  else if (f.abstraction == "pred") mode = AbstractionMode::Predicate;

  bool all = !f.overview && !f.sccs && !f.terminyzer;
  json out = json::object();
  if (f.overview || all) {
    OverviewStats o = overview(log);
    if (f.json_out) out["overview"] = report::overview(o);
    else print_overview(o);
  }
  if (f.sccs) {
    std::vector<Scc> cs = sccs(log);
    if (f.json_out) {
      if (mode) {
        json arr = json::array();
        for (const auto& c : cs)
          if (!c.trivial) arr.push_back(report::abstract_scc(c, abstract_scc(c, *mode), *mode));
        out["sccs"] = std::move(arr);
      } else {
        out["sccs"] = report::sccs(cs);
      }
    } else {
      print_sccs(cs, mode);
    }
  }
  if (f.terminyzer) {
    TerminyzerReport rep = terminyzer(log);
    std::optional<SuggestionOutcome> sug;
    if (!f.programs.empty()) {
      std::shared_ptr<const CompiledKB> kb;
      try {
        kb = load_kb(f.programs, Theory::AtDefault);
      } catch (const std::exception& e) {
        std::cerr << "error: " << e.what() << "\n";
      }
      if (!kb) return kExitParse;
      sug = suggest_delay(*kb, rep);
    }
    if (f.json_out) out["terminyzer"] = report::terminyzer(rep, sug.value_or(SuggestionOutcome{}));
    else print_terminyzer(rep, sug ? &*sug : nullptr);
  }
  if (f.json_out) std::cout << out.dump(2) << "\n";
  return 0;
}

int cmd_serve(const ServeFlags& f) {
  std::cerr << "silk: serving on http://" << f.host << ":" << f.port << " (data in " << f.data_dir << ")\n";
  int rc = serve(ServiceConfig{f.data_dir, f.ui_dir}, f.host, f.port);
  if (rc != 0) std::cerr << "error: cannot bind " << f.host << ":" << f.port << "\n";
  return rc;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Rulelog query engine and debugger"};
  app.require_subcommand(1);

  RunFlags rf;
  CLI::App* run = app.add_subcommand("run", "Compile programs and evaluate a goal");
  run->add_option("files", rf.files, "Program files")->required()->check(CLI::ExistingFile);
  run->add_option("-q,--query", rf.goal, "Goal");
  run->add_option("--log", rf.log_path, "Write the forest log to PATH");
  run->add_flag("--log-compat", rf.log_compat, "Log lines without caller rule ids");
  run->add_option("--interval", rf.interval_ms, "Interrupt every MS milliseconds and prompt")->check(CLI::PositiveNumber);
  run->add_option("--max-ops", rf.max_ops, "Operation limit");
  run->add_option("--theory", rf.theory, "Argumentation theory")->check(CLI::IsMember({"simple", "default", "none"}));
  run->add_option("--dump", rf.dump, "Table dump for subgoals matching PATTERN");
  run->add_option("--justify", rf.justify, "Print the justification tree of LITERAL");
  run->add_flag("--json", rf.json_out, "JSON output");
  run->add_flag("--emit", rf.emit, "Print the compiled rules");

  AnalyzeFlags af;
  CLI::App* analyze = app.add_subcommand("analyze", "Analyze a forest log");
  analyze->add_option("log", af.log_path, "Log file")->required();
  analyze->add_flag("--overview", af.overview, "Statistics");
  analyze->add_flag("--sccs", af.sccs, "Recursive components");
  analyze->add_option("--abstraction", af.abstraction, "Abstract component members")
      ->check(CLI::IsMember({"mode", "pred"}));
  analyze->add_flag("--terminyzer", af.terminyzer, "Non-termination analysis");
  analyze->add_option("-p,--program", af.programs, "Program files, for delay suggestions");
  analyze->add_flag("--json", af.json_out, "JSON output");

  ServeFlags sf;
  if (const char* p = std::getenv("SILK_PORT")) sf.port = std::atoi(p);
  if (const char* d = std::getenv("SILK_DATA_DIR")) sf.data_dir = d;
  CLI::App* srv = app.add_subcommand("serve", "Run the HTTP API and web UI");
  srv->add_option("--host", sf.host, "Bind address");
  srv->add_option("--port", sf.port, "Port");
  srv->add_option("--data-dir", sf.data_dir, "Persistence directory");
  srv->add_option("--ui-dir", sf.ui_dir, "Static UI files");

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    int rc = app.exit(e);
    return rc == 0 ? 0 : kExitParse;
  }

  int rc = 0;
  with_large_stack([&] {
    try {
      if (*run) rc = cmd_run(rf);
      else if (*analyze) rc = cmd_analyze(af);
      else rc = cmd_serve(sf);
    } catch (const std::exception& e) {
      std::cerr << "error: " << e.what() << "\n";
      rc = kExitRuntime;
    }
  }, 512u << 20);
  return rc;
}
