#include "silk/forestlog.hpp"

#include <array>
#include <istream>
#include <ostream>
#include <sstream>
#include <unordered_set>

#include "silk/reader.hpp"

namespace silk {

namespace {

constexpr std::array<const char*, kEventKindCount> kNames = {
    "table_call",   "new_answer", "conditional_answer",  "delay",
    "simplification", "completed", "subgoal_abstraction", "answer_abstraction",
    "interrupt",    "resumed",    "aborted"};

// Payload arity per kind (canonical form).
constexpr std::array<std::size_t, kEventKindCount> kArity = {4, 2, 3, 2, 3, 2, 2, 3, 1, 0, 0};

}  // namespace

const char* to_string(EventKind k) { return kNames[static_cast<std::size_t>(k)]; }

std::optional<EventKind> event_kind_from_string(std::string_view s) {
  for (std::size_t i = 0; i < kNames.size(); ++i)
    if (s == kNames[i]) return static_cast<EventKind>(i);
  return std::nullopt;
}

const Term* LogEvent::subgoal() const {
  switch (kind) {
    case EventKind::TableCall:
    case EventKind::Delay:
    case EventKind::Simplification:
    case EventKind::Completed:
      return &args[0];
    case EventKind::NewAnswer:
    case EventKind::ConditionalAnswer:
    case EventKind::SubgoalAbstraction:
      return &args[1];
    case EventKind::AnswerAbstraction:
      return &args[2];
    default:
      return nullptr;
  }
}

const Term* LogEvent::caller() const { return kind == EventKind::TableCall ? &args[1] : nullptr; }

std::string LogEvent::rule_id() const {
  if (kind != EventKind::TableCall) return "none";
  const Term& r = args[2];
  return r.is_atom() ? r.text() : canonical_text(r);
}

bool LogEvent::is_new_call() const { return kind == EventKind::TableCall && args[3].is_atom("new"); }

std::string serialize(const LogEvent& e, bool compat) {
  std::string s = to_string(e.kind);
  s += '(';
  for (std::size_t i = 0; i < e.args.size(); ++i) {
    if (compat && e.kind == EventKind::TableCall && i == 2) continue;
    s += canonical_text(e.args[i]);
    s += ',';
  }
  s += std::to_string(e.ctr);
  s += ").";
  return s;
}

MalformedLine::MalformedLine(std::size_t line_no, std::string text)
    : std::runtime_error("malformed log line " + std::to_string(line_no)),
      line_no_(line_no),
      text_(std::move(text)) {}

LogEvent parse_event(const std::string& line, std::size_t line_no) {
  std::string body = line;
  while (!body.empty() && (body.back() == '\r' || body.back() == ' ')) body.pop_back();
  if (body.empty() || body.back() != '.') throw MalformedLine(line_no, line);
  body.pop_back();
  Term t;
  try {
    t = parse_term(body);
  } catch (const ParseError&) {
    throw MalformedLine(line_no, line);
  }
  if (!t.is_app() || !t.functor().is_atom()) {
    // resumed/aborted carry only the counter but still need parentheses
    throw MalformedLine(line_no, line);
  }
  auto kind = event_kind_from_string(t.functor().text());
  if (!kind) throw MalformedLine(line_no, line);
  const auto& a = t.args();
  if (a.empty() || !a.back().is_integer() || a.back().int_value() <= 0) throw MalformedLine(line_no, line);
  std::size_t want = kArity[static_cast<std::size_t>(*kind)];
  LogEvent e;
  e.kind = *kind;
  e.ctr = static_cast<std::uint64_t>(a.back().int_value());
  e.args.assign(a.begin(), a.end() - 1);
  if (*kind == EventKind::TableCall && e.args.size() == 3) {
    e.args.insert(e.args.begin() + 2, Term::atom("none"));
  } else if (e.args.size() != want) {
    throw MalformedLine(line_no, line);
  }
  auto one_of = [](const Term& t, std::initializer_list<const char*> names) {
    for (const char* n : names)
      if (t.is_atom(n)) return true;
    return false;
  };
  bool ok = true;
  switch (e.kind) {
    case EventKind::TableCall: ok = one_of(e.args[3], {"new", "old"}) && e.args[2].is_atom(); break;
    case EventKind::Simplification: ok = one_of(e.args[2], {"succeeded", "failed"}); break;
    case EventKind::Completed: ok = e.args[1].is_integer(); break;
    case EventKind::Interrupt: ok = one_of(e.args[0], {"timer", "user"}); break;
    case EventKind::ConditionalAnswer: ok = e.args[2].is_list(); break;
    default: break;
  }
  if (!ok) throw MalformedLine(line_no, line);
  return e;
}

// ---------------------------------------------------------------- writer

LogWriter::LogWriter(std::ostream& out, bool compat) : out_(&out), compat_(compat) {}

LogWriter::LogWriter(const std::string& path, bool compat)
    : file_(std::make_unique<std::ofstream>(path, std::ios::binary | std::ios::trunc)),
      out_(file_.get()),
      compat_(compat) {
  if (!*file_) failed_ = true;
}

LogWriter::~LogWriter() {
  try {
    flush();
  } catch (...) {
  }
}

void LogWriter::emit(const LogEvent& e) {
  if (failed_) return;
  if (!resync_ && e.ctr != last_ + 1)
    throw std::logic_error("forest log counter gap: " + std::to_string(last_) + " -> " + std::to_string(e.ctr));
  resync_ = false;
  last_ = e.ctr;
  *out_ << serialize(e, compat_) << '\n';
  if (!*out_) {
    failed_ = true;
    return;
  }
  ++written_;
}

void LogWriter::flush() {
  if (out_ && !failed_) out_->flush();
}

// ---------------------------------------------------------------- log

void Log::add(LogEvent e) { events.push_back(std::move(e)); }

void Log::build_indexes() {
  by_kind.assign(kEventKindCount, {});
  by_subgoal.clear();
  by_caller.clear();
  by_rule.clear();
  for (std::size_t i = 0; i < events.size(); ++i) {
    const LogEvent& e = events[i];
    by_kind[static_cast<std::size_t>(e.kind)].push_back(i);
    if (const Term* s = e.subgoal()) by_subgoal[variant_hash(*s)].push_back(i);
    if (e.kind == EventKind::TableCall) {
      by_caller[variant_hash(e.args[1])].push_back(i);
      by_rule[e.rule_id()].push_back(i);
    }
  }
}

bool Log::dense() const {
  for (std::size_t i = 0; i < events.size(); ++i)
    if (events[i].ctr != i + 1) return false;
  return true;
}

bool Log::partial() const {
  if (events.empty()) return false;
  for (std::size_t i = 1; i < events.size(); ++i)
    if (events[i].ctr != events[i - 1].ctr + 1) return true;
  return events.front().ctr != 1;
}

std::string Log::serialize() const {
  std::string out;
  for (const auto& e : events) {
    out += silk::serialize(e, compat);
    out += '\n';
  }
  return out;
}

namespace {

// Shares repeated subterms across lines. Runaway logs repeat ever deeper
// terms, so without this memory grows with the square of the run length.
struct Interner {
  std::unordered_set<Term, TermHash> seen;

  Term operator()(const Term& t) {
    if (auto it = seen.find(t); it != seen.end()) return *it;
    Term out = t;
    if (t.is_app()) {
      std::vector<Term> args;
      args.reserve(t.arity());
      for (const auto& a : t.args()) args.push_back((*this)(a));
      out = Term::app((*this)(t.functor()), std::move(args));
    }
    return *seen.insert(out).first;
  }
};

}  // namespace

Log load_log(std::istream& in) {
  Log log;
  Interner intern;
  std::string line;
  std::size_t line_no = 0;
  bool compat_seen = false;
  while (std::getline(in, line)) {
    ++line_no;
    bool last = in.eof();  // no trailing newline: possibly cut off mid-write
    if (line.empty()) continue;
    try {
      LogEvent e = parse_event(line, line_no);
      if (!compat_seen && e.kind == EventKind::TableCall) {
        compat_seen = true;
        // A compat line has one payload field fewer before the counter.
        log.compat = parse_term(line.substr(0, line.size() - 1)).arity() == 4;
      }
      for (auto& a : e.args) a = intern(a);
      log.add(std::move(e));
    } catch (const MalformedLine& m) {
      if (last) {
        log.truncated_tail = true;
      } else {
        log.malformed.push_back({line_no, line, m.what()});
      }
    }
  }
  log.build_indexes();
  return log;
}

Log load_log(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw std::runtime_error("cannot open log file: " + path);
  return load_log(in);
}

std::vector<const LogEvent*> query(const Log& log, const LogSelector& sel) {
  auto field_matches = [&](const Term* field, const Term& pattern) {
    if (!field) return false;
    return sel.by_subsumption ? subsumes(pattern, *field) : is_variant(pattern, *field);
  };
  std::vector<const LogEvent*> out;
  auto consider = [&](const LogEvent& e) {
    if (sel.kind && e.kind != *sel.kind) return;
    if (sel.ctr_from && e.ctr < *sel.ctr_from) return;
    if (sel.ctr_to && e.ctr > *sel.ctr_to) return;
    if (sel.new_call && (e.kind != EventKind::TableCall || e.is_new_call() != *sel.new_call)) return;
    if (sel.subgoal && !field_matches(e.subgoal(), *sel.subgoal)) return;
    if (sel.caller && !field_matches(e.caller(), *sel.caller)) return;
    if (sel.rule_id && (e.kind != EventKind::TableCall || e.rule_id() != *sel.rule_id)) return;
    out.push_back(&e);
  };
  auto bucket = [&](const auto& index, const Term& t) {
    std::vector<std::size_t> none;
    auto it = index.find(variant_hash(t));
    for (std::size_t i : it == index.end() ? none : it->second) consider(log.events[i]);
  };
  bool indexed = log.by_kind.size() == kEventKindCount;
  if (indexed && sel.subgoal && !sel.by_subsumption) {
    bucket(log.by_subgoal, *sel.subgoal);
  } else if (indexed && sel.caller && !sel.by_subsumption) {
    bucket(log.by_caller, *sel.caller);
  } else if (indexed && sel.kind) {
    for (std::size_t i : log.by_kind[static_cast<std::size_t>(*sel.kind)]) consider(log.events[i]);
  } else {
    for (const auto& e : log.events) consider(e);
  }
  return out;
}

}  // namespace silk
