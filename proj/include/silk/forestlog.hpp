#pragma once

// Forest logs: one counter-stamped fact per tabling operation.
//
//   table_call(Callee, Caller|top, RuleId|none, new|old, Ctr).
//   new_answer(Answer, Subgoal, Ctr).
//   conditional_answer(Answer, Subgoal, DelayList, Ctr).
//   delay(Subgoal, Literal, Ctr).
//   simplification(Subgoal, Answer, succeeded|failed, Ctr).
//   completed(Subgoal, SccId, Ctr).
//   subgoal_abstraction(Original, Abstracted, Ctr).
//   answer_abstraction(Original, Abstracted, Subgoal, Ctr).
//   interrupt(timer|user, Ctr).  resumed(Ctr).  aborted(Ctr).
//
// Every payload term is written in canonical form on its own variable
// numbering. In compat mode table_call drops the rule id.

#include <cstdint>
#include <fstream>
#include <iosfwd>
#include <memory>
#include <optional>
#include <stdexcept>
#include <string>
#include <unordered_map>
#include <vector>

#include "silk/kernel.hpp"

namespace silk {

enum class EventKind : std::uint8_t {
  TableCall,
  NewAnswer,
  ConditionalAnswer,
  Delay,
  Simplification,
  Completed,
  SubgoalAbstraction,
  AnswerAbstraction,
  Interrupt,
  Resumed,
  Aborted,
};
constexpr std::size_t kEventKindCount = 11;

const char* to_string(EventKind k);
std::optional<EventKind> event_kind_from_string(std::string_view s);

struct LogEvent {
  EventKind kind = EventKind::TableCall;
  std::uint64_t ctr = 0;
  std::vector<Term> args;  // payload, in the field order above

  /// Table the event is about (callee for calls); nullptr for interrupts.
  const Term* subgoal() const;
  const Term* caller() const;  // table_call only; atom `top` for the root
  std::string rule_id() const; // table_call only; "none" when absent
  bool is_new_call() const;
};

/// One line without the trailing newline.
std::string serialize(const LogEvent& e, bool compat = false);

class MalformedLine : public std::runtime_error {
 public:
  MalformedLine(std::size_t line_no, std::string text);
  std::size_t line_no() const { return line_no_; }
  const std::string& text() const { return text_; }

 private:
  std::size_t line_no_;
  std::string text_;
};

/// Parses one log line. Throws MalformedLine.
LogEvent parse_event(const std::string& line, std::size_t line_no = 0);

/// Append-only writer. Asserts counter density; a resync (after logging is
/// switched back on) accepts the next counter as the new base.
class LogWriter {
 public:
  explicit LogWriter(std::ostream& out, bool compat = false);
  explicit LogWriter(const std::string& path, bool compat = false);
  ~LogWriter();

  void emit(const LogEvent& e);
  void resync() { resync_ = true; }
  void flush();
  bool failed() const { return failed_; }
  std::uint64_t written() const { return written_; }

 private:
  std::unique_ptr<std::ofstream> file_;
  std::ostream* out_;
  bool compat_;
  bool resync_ = true;
  bool failed_ = false;
  std::uint64_t last_ = 0;
  std::uint64_t written_ = 0;
};

struct LogDiagnostic {
  std::size_t line_no = 0;
  std::string text;
  std::string message;
};

struct Log {
  std::vector<LogEvent> events;
  std::vector<LogDiagnostic> malformed;
  bool truncated_tail = false;
  bool compat = false;

  std::vector<std::vector<std::size_t>> by_kind;  // EventKind -> event indices
  // keyed by variant_hash; confirm with is_variant
  std::unordered_map<std::size_t, std::vector<std::size_t>> by_subgoal;
  std::unordered_map<std::size_t, std::vector<std::size_t>> by_caller;
  std::unordered_map<std::string, std::vector<std::size_t>> by_rule;

  void add(LogEvent e);
  void build_indexes();
  /// Counters are 1..N without gaps.
  bool dense() const;
  /// The log starts after the beginning of the run or has gaps.
  bool partial() const;
  std::string serialize() const;
};

Log load_log(std::istream& in);
Log load_log(const std::string& path);

struct LogSelector {
  std::optional<EventKind> kind;
  std::optional<bool> new_call;     // stage filter for table_call
  std::optional<Term> subgoal;      // callee / table of the event
  std::optional<Term> caller;
  bool by_subsumption = false;      // otherwise variance
  std::optional<std::string> rule_id;
  std::optional<std::uint64_t> ctr_from;
  std::optional<std::uint64_t> ctr_to;
};

std::vector<const LogEvent*> query(const Log& log, const LogSelector& sel);

}  // namespace silk
