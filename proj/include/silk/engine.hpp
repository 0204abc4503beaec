#pragma once

// Tabled evaluation of a CompiledKB under the well-founded semantics.
//
// Every user predicate is tabled by call variance. Negative literals on
// tables that are not yet complete are delayed; when a strongly connected
// group of tables completes, the residual program formed by its conditional
// answers is solved (W_P iteration) and answers become TRUE, FALSE (deleted)
// or stay UNDEFINED. Restraint (depth abstraction, skip guards, unsafe
// negation, undefined builtin) adds markers that keep answers UNDEFINED.

#include <atomic>
#include <chrono>
#include <condition_variable>
#include <cstdint>
#include <functional>
#include <memory>
#include <mutex>
#include <optional>
#include <set>
#include <stdexcept>
#include <string>
#include <thread>
#include <unordered_map>
#include <utility>
#include <vector>

#include "silk/forestlog.hpp"
#include "silk/kernel.hpp"
#include "silk/reader.hpp"
#include "silk/transform.hpp"

namespace silk {

class BuiltinInstantiationError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// Type errors and division by zero in arithmetic.
class EvaluationError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

class SnapshotWhileRunning : public std::logic_error {
 public:
  SnapshotWhileRunning() : std::logic_error("table snapshot requested while evaluation is running") {}
};

class NoSuchTable : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

enum class BuiltinOutcome { Fail, Succeed, Undefined, Unbound };

/// Evaluates a builtin other than $skip under `s`, extending `s` on success.
/// Unbound reports an instantiation fault in arithmetic.
BuiltinOutcome evaluate_builtin(const Term& atom, Substitution& s);

enum class MarkerReason : std::uint8_t { Abstraction, Skip, Unsafe, Undefined, Builtin };

const char* to_string(MarkerReason r);

struct DelayElem {
  enum class Kind : std::uint8_t { Neg, Pos, Marker };
  Kind kind = Kind::Marker;
  int table = -1;
  int answer = -1;        // Pos
  Term literal;           // Neg: the ground literal negated
  std::size_t hash = 0;   // Neg: variant hash of `literal`
  MarkerReason reason = MarkerReason::Undefined;

  friend bool operator<(const DelayElem& a, const DelayElem& b);
  friend bool operator==(const DelayElem& a, const DelayElem& b);
};

using DelaySet = std::vector<DelayElem>;  // sorted, no duplicates

struct Answer {
  Term literal;  // encoded instance of the table's subgoal
  bool unconditional = false;
  bool deleted = false;
  std::vector<DelaySet> delays;  // alternative conditions while not unconditional

  TruthValue tv() const {
    return deleted ? TruthValue::False : unconditional ? TruthValue::True : TruthValue::Undefined;
  }
};

struct CallerRef {
  int table = -1;  // -1 for the query itself
  std::string rule_id;
  friend bool operator<(const CallerRef& a, const CallerRef& b) {
    return a.table != b.table ? a.table < b.table : a.rule_id < b.rule_id;
  }
};

struct Table {
  Term subgoal;  // encoded, variables private to the table
  std::string predicate;
  bool complete = false;
  std::vector<Answer> answers;
  std::unordered_map<std::size_t, std::vector<int>> answer_index;  // by variant hash
  std::uint64_t call_count = 0;
  std::set<CallerRef> callers;
  int scc_id = -1;

  // scheduling
  int dfn = 0;
  int lowlink = 0;
  std::size_t stack_pos = 0;
};

struct EngineCounters {
  std::uint64_t ops = 0;
  std::uint64_t events = 0;
  std::uint64_t calls = 0;
  std::uint64_t new_subgoals = 0;
  std::uint64_t answers = 0;
  std::uint64_t conditional_answers = 0;
  std::uint64_t upgrades = 0;
  std::uint64_t delays = 0;
  std::uint64_t simplifications_succeeded = 0;
  std::uint64_t simplifications_failed = 0;
  std::uint64_t completions = 0;
  std::uint64_t subgoal_abstractions = 0;
  std::uint64_t answer_abstractions = 0;
  std::uint64_t interrupts = 0;
  std::uint64_t undefined_answers = 0;  // answers currently neither TRUE nor deleted
};

struct EvalOptions {
  std::uint64_t max_ops = 5'000'000;
  bool logging = false;
  std::string log_path;       // written when non-empty
  bool log_compat = false;
  bool capture_log = false;   // keep events in memory (Log)
  int interval_ms = 0;        // timer interrupts when > 0
  std::optional<int> answer_radius;  // overrides answer_abstract on user predicates
  std::optional<std::chrono::steady_clock::time_point> deadline;
};

/// Single-threaded forest and evaluator. Tables survive between solve()
/// calls, so later queries reuse completed tables.
class Engine {
 public:
  Engine(std::shared_ptr<const CompiledKB> kb, EvalOptions opts = {});
  ~Engine();
  Engine(const Engine&) = delete;
  Engine& operator=(const Engine&) = delete;

  /// Evaluates `encoded_call` to completion and returns its table.
  int solve(const Term& encoded_call);
  /// Adds goal-specific rules (wrapper and auxiliaries).
  void add_rules(const std::vector<NormalRule>& rules);

  const std::vector<Table>& tables() const;
  std::optional<int> find_table(const Term& encoded_call) const;
  /// Truth of a literal against completed tables whose subgoal subsumes it.
  TruthValue truth_of(const Term& encoded_literal) const;
  /// Like truth_of, evaluating the literal first when no table covers it.
  TruthValue truth_of_solving(const Term& encoded_literal);
  /// Non-deleted answers of `table` unifying with `pattern`, as instances.
  std::vector<std::pair<Term, TruthValue>> answers_matching(int table, const Term& pattern) const;

  /// Candidate clauses for a call, in program order.
  std::vector<const NormalRule*> clauses_for(const Term& encoded_call);

  EngineCounters counters() const;
  const CompiledKB& kb() const;
  bool broken() const;  // an evaluation was interrupted by an exception

  using EventSink = std::function<void(const LogEvent&)>;
  void set_event_sink(EventSink sink);
  void set_logging(bool on);
  bool logging() const;
  void set_checkpoint(std::function<void()> fn);
  /// Emits interrupt/resumed/aborted events (no operation counted).
  void note_interrupt(bool timer);
  void note_resumed();
  void note_aborted();

 private:
  struct Impl;
  std::unique_ptr<Impl> impl_;
};

// ---------------------------------------------------------------- handle

enum class EvalState { Idle, Running, Paused, Completed, Aborted, Failed };

const char* to_string(EvalState s);

enum class HandlerAction { Resume, Abort };

class EvaluationHandle;
using InterruptHandler = std::function<HandlerAction(EvaluationHandle&)>;

struct GoalAnswer {
  std::vector<std::pair<std::string, Term>> bindings;  // source-level values
  std::string text;                                    // goal instance
  TruthValue tv = TruthValue::True;
};

/// One evaluation of a goal: runs on its own large-stack thread, honours
/// pause/resume/abort and timer interrupts at operation checkpoints.
class EvaluationHandle {
 public:
  EvaluationHandle(std::shared_ptr<const CompiledKB> kb, Formula goal, EvalOptions opts = {});
  ~EvaluationHandle();
  EvaluationHandle(const EvaluationHandle&) = delete;
  EvaluationHandle& operator=(const EvaluationHandle&) = delete;

  void run();    // blocking
  void start();  // background
  void wait();

  EvalState state() const;
  std::string error() const;
  bool limit_exceeded() const;

  void request_pause();
  void resume();
  void request_abort();
  void set_logging(bool on);
  bool logging() const;
  void set_interrupt_handler(InterruptHandler h, int interval_ms);
  /// For handlers that hand control to another thread: blocks until
  /// resume() or request_abort() is called.
  HandlerAction await_decision();

  std::vector<Table> table_snapshot() const;
  TruthValue truth_of(const Literal& l) const;
  std::vector<GoalAnswer> answers() const;
  EngineCounters counters() const;
  std::uint64_t op_count() const;
  std::chrono::milliseconds elapsed() const;
  /// Events captured in memory (capture_log); safe while paused or finished.
  Log captured_log() const;

  const CompiledGoal& goal() const { return goal_; }
  const Formula& source_goal() const { return source_; }
  Engine& engine() { return *engine_; }
  const Engine& engine() const { return *engine_; }
  std::shared_ptr<const CompiledKB> kb() const { return kb_; }
  int root_table() const { return root_table_; }

 private:
  void body();
  void checkpoint();
  void pause_here(bool timer);

  std::shared_ptr<const CompiledKB> kb_;
  Formula source_;
  CompiledGoal goal_;
  EvalOptions opts_;
  std::unique_ptr<Engine> engine_;
  std::unique_ptr<LogWriter> writer_;
  std::vector<LogEvent> captured_;
  int root_table_ = -1;

  mutable std::mutex mu_;
  std::condition_variable cv_;
  EvalState state_ = EvalState::Idle;
  std::optional<HandlerAction> decision_;
  std::string error_;
  bool limit_exceeded_ = false;
  std::atomic<bool> pause_requested_{false};
  std::atomic<bool> abort_requested_{false};
  std::atomic<int> logging_wanted_{-1};
  InterruptHandler handler_;
  int interval_ms_ = 0;
  std::chrono::steady_clock::time_point started_;
  std::chrono::steady_clock::time_point finished_;
  std::chrono::steady_clock::time_point last_interrupt_;
  std::uint32_t tick_ = 0;
  std::thread thread_;
};

/// Runs `goal` with a timer interrupt every `interval_ms` calling `handler`.
std::unique_ptr<EvaluationHandle> timed_call(std::shared_ptr<const CompiledKB> kb, const Formula& goal,
                                             int interval_ms, InterruptHandler handler, EvalOptions opts = {});

struct AnytimeResult {
  std::vector<GoalAnswer> answers;
  int radius_reached = 0;
  bool complete = false;  // false when not even the first radius finished
  std::vector<int> rounds_completed;
};

AnytimeResult evaluate_anytime(std::shared_ptr<const CompiledKB> kb, const Formula& goal, int budget_ms,
                               const std::vector<int>& radius_schedule);

// ---------------------------------------------------------------- oracle

struct GroundRule {
  std::string head;
  std::vector<std::string> pos;
  std::vector<std::string> neg;
};

struct WfsModel {
  std::set<std::string> true_atoms;
  std::set<std::string> undefined_atoms;
  TruthValue value(const std::string& atom) const;
};

/// Well-founded model by the alternating fixpoint.
WfsModel wfs_oracle(const std::vector<GroundRule>& rules);

}  // namespace silk
