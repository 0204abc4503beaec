#include <algorithm>

#include "silk/engine.hpp"
#include "silk/stack.hpp"

namespace silk {

namespace {

struct AbortSignal {};

using Clock = std::chrono::steady_clock;

void substitute(Formula& f, const Substitution& s) {
  if (f.kind == Formula::Kind::Literal) {
    f.lit.literal.atom = s.resolve(f.lit.literal.atom);
    for (auto& g : f.lit.delay_guard) g = s.resolve(g);
  }
  for (auto& c : f.children) substitute(c, s);
}

}  // namespace

const char* to_string(EvalState s) {
  switch (s) {
    case EvalState::Idle: return "idle";
    case EvalState::Running: return "running";
    case EvalState::Paused: return "paused";
    case EvalState::Completed: return "completed";
    case EvalState::Aborted: return "aborted";
    case EvalState::Failed: return "failed";
  }
  return "?";
}

EvaluationHandle::EvaluationHandle(std::shared_ptr<const CompiledKB> kb, Formula goal, EvalOptions opts)
    : kb_(std::move(kb)), source_(std::move(goal)), opts_(std::move(opts)) {
  goal_ = compile_goal(*kb_, source_);
  engine_ = std::make_unique<Engine>(kb_, opts_);
  engine_->add_rules(goal_.extra);
  if (!opts_.log_path.empty()) writer_ = std::make_unique<LogWriter>(opts_.log_path, opts_.log_compat);
  engine_->set_event_sink([this](const LogEvent& e) {
    if (writer_) writer_->emit(e);
    if (opts_.capture_log) captured_.push_back(e);
  });
  engine_->set_checkpoint([this] { checkpoint(); });
  interval_ms_ = opts_.interval_ms;
}

EvaluationHandle::~EvaluationHandle() {
  if (thread_.joinable()) {
    request_abort();
    thread_.join();
  }
}

void EvaluationHandle::body() {
  {
    std::lock_guard<std::mutex> lk(mu_);
    state_ = EvalState::Running;
    started_ = last_interrupt_ = Clock::now();
  }
  EvalState final_state = EvalState::Completed;
  std::string err;
  bool limit = false;
  try {
    root_table_ = engine_->solve(goal_.root);
  } catch (const AbortSignal&) {
    final_state = EvalState::Aborted;
  } catch (const ResourceLimitExceeded& e) {
    final_state = EvalState::Failed;
    err = e.what();
    limit = true;
  } catch (const std::exception& e) {
    final_state = EvalState::Failed;
    err = e.what();
  }
  if (writer_) writer_->flush();
  std::lock_guard<std::mutex> lk(mu_);
  if (root_table_ < 0 && !engine_->tables().empty()) root_table_ = engine_->find_table(goal_.root).value_or(0);
  state_ = final_state;
  error_ = err;
  limit_exceeded_ = limit;
  finished_ = Clock::now();
  cv_.notify_all();
}

void EvaluationHandle::run() {
  with_large_stack([this] { body(); });
}

void EvaluationHandle::start() {
  {
    std::lock_guard<std::mutex> lk(mu_);
    state_ = EvalState::Running;
    started_ = Clock::now();
  }
  thread_ = std::thread([this] { with_large_stack([this] { body(); }); });
}

void EvaluationHandle::wait() {
  if (thread_.joinable()) thread_.join();
}

EvalState EvaluationHandle::state() const {
  std::lock_guard<std::mutex> lk(mu_);
  return state_;
}

std::string EvaluationHandle::error() const {
  std::lock_guard<std::mutex> lk(mu_);
  return error_;
}

bool EvaluationHandle::limit_exceeded() const {
  std::lock_guard<std::mutex> lk(mu_);
  return limit_exceeded_;
}

void EvaluationHandle::request_pause() { pause_requested_ = true; }

void EvaluationHandle::resume() {
  pause_requested_ = false;
  std::lock_guard<std::mutex> lk(mu_);
  if (state_ == EvalState::Paused) decision_ = HandlerAction::Resume;
  cv_.notify_all();
}

void EvaluationHandle::request_abort() {
  abort_requested_ = true;
  std::lock_guard<std::mutex> lk(mu_);
  decision_ = HandlerAction::Abort;
  cv_.notify_all();
}

void EvaluationHandle::set_logging(bool on) {
  std::lock_guard<std::mutex> lk(mu_);
  if (state_ == EvalState::Idle) {
    engine_->set_logging(on);
    return;
  }
  logging_wanted_ = on ? 1 : 0;
}

bool EvaluationHandle::logging() const {
  int w = logging_wanted_;
  return w >= 0 ? w == 1 : engine_->logging();
}

void EvaluationHandle::set_interrupt_handler(InterruptHandler h, int interval_ms) {
  handler_ = std::move(h);
  interval_ms_ = interval_ms;
}

HandlerAction EvaluationHandle::await_decision() {
  std::unique_lock<std::mutex> lk(mu_);
  cv_.wait(lk, [&] { return decision_.has_value(); });
  return *decision_;
}

void EvaluationHandle::checkpoint() {
  if (abort_requested_) {
    engine_->note_aborted();
    throw AbortSignal{};
  }
  int lw = logging_wanted_.exchange(-1);
  if (lw >= 0 && (lw == 1) != engine_->logging()) {
    if (lw == 1 && writer_) writer_->resync();
    engine_->set_logging(lw == 1);
  }
  if (pause_requested_.exchange(false)) pause_here(false);
  if (!opts_.deadline && interval_ms_ <= 0) return;
  if ((++tick_ & 15u) != 0) return;
  auto now = Clock::now();
  if (opts_.deadline && now >= *opts_.deadline) {
    engine_->note_aborted();
    throw AbortSignal{};
  }
  if (interval_ms_ > 0 && handler_ && now - last_interrupt_ >= std::chrono::milliseconds(interval_ms_))
    pause_here(true);
}

void EvaluationHandle::pause_here(bool timer) {
  engine_->note_interrupt(timer);
  if (writer_) writer_->flush();
  {
    std::lock_guard<std::mutex> lk(mu_);
    state_ = EvalState::Paused;
    if (!abort_requested_) decision_.reset();
    cv_.notify_all();
  }
  HandlerAction act = (timer && handler_) ? handler_(*this) : await_decision();
  if (abort_requested_) act = HandlerAction::Abort;
  last_interrupt_ = Clock::now();
  if (act == HandlerAction::Abort) {
    engine_->note_aborted();
    throw AbortSignal{};
  }
  {
    std::lock_guard<std::mutex> lk(mu_);
    state_ = EvalState::Running;
    decision_.reset();
  }
  // a logging toggle made while paused applies from here on
  int lw = logging_wanted_.exchange(-1);
  if (lw >= 0 && (lw == 1) != engine_->logging()) {
    if (lw == 1 && writer_) writer_->resync();
    engine_->set_logging(lw == 1);
  }
  engine_->note_resumed();
}

std::vector<Table> EvaluationHandle::table_snapshot() const {
  std::lock_guard<std::mutex> lk(mu_);
  if (state_ == EvalState::Running) throw SnapshotWhileRunning();
  return engine_->tables();
}

TruthValue EvaluationHandle::truth_of(const Literal& l) const {
  std::lock_guard<std::mutex> lk(mu_);
  if (state_ == EvalState::Running) throw SnapshotWhileRunning();
  return engine_->truth_of(encode_literal(l));
}

std::vector<GoalAnswer> EvaluationHandle::answers() const {
  std::lock_guard<std::mutex> lk(mu_);
  if (state_ == EvalState::Running) throw SnapshotWhileRunning();
  std::vector<GoalAnswer> out;
  if (root_table_ < 0) return out;
  std::vector<GoalAnswer> undefined;
  for (const auto& a : engine_->tables()[root_table_].answers) {
    if (a.deleted) continue;
    Term al = a.literal.ground() ? a.literal : rename_apart(a.literal);
    auto mgu = unify(goal_.root, al);
    if (!mgu) continue;
    GoalAnswer g;
    g.tv = a.tv();
    Substitution src;
    for (const auto& v : goal_.variables) {
      Term val = decode_term(mgu->resolve(v));
      g.bindings.emplace_back(v.text(), val);
      src.bind(v.var_id(), val);
    }
    if (goal_.extra.empty()) {
      g.text = literal_text(mgu->resolve(goal_.root));
    } else {
      Formula f = source_;
      substitute(f, src);
      g.text = to_text(f);
    }
    (g.tv == TruthValue::True ? out : undefined).push_back(std::move(g));
  }
  out.insert(out.end(), std::make_move_iterator(undefined.begin()), std::make_move_iterator(undefined.end()));
  return out;
}

EngineCounters EvaluationHandle::counters() const { return engine_->counters(); }

std::uint64_t EvaluationHandle::op_count() const { return engine_->counters().ops; }

std::chrono::milliseconds EvaluationHandle::elapsed() const {
  std::lock_guard<std::mutex> lk(mu_);
  if (state_ == EvalState::Idle) return std::chrono::milliseconds(0);
  bool done = state_ == EvalState::Completed || state_ == EvalState::Aborted || state_ == EvalState::Failed;
  auto end = done ? finished_ : Clock::now();
  return std::chrono::duration_cast<std::chrono::milliseconds>(end - started_);
}

Log EvaluationHandle::captured_log() const {
  std::lock_guard<std::mutex> lk(mu_);
  if (state_ == EvalState::Running) throw SnapshotWhileRunning();
  Log log;
  log.events = captured_;
  log.compat = opts_.log_compat;
  log.build_indexes();
  return log;
}

std::unique_ptr<EvaluationHandle> timed_call(std::shared_ptr<const CompiledKB> kb, const Formula& goal,
                                             int interval_ms, InterruptHandler handler, EvalOptions opts) {
  opts.interval_ms = interval_ms;
  auto h = std::make_unique<EvaluationHandle>(std::move(kb), goal, opts);
  h->set_interrupt_handler(std::move(handler), interval_ms);
  h->run();
  return h;
}

AnytimeResult evaluate_anytime(std::shared_ptr<const CompiledKB> kb, const Formula& goal, int budget_ms,
                               const std::vector<int>& schedule) {
  AnytimeResult out;
  auto deadline = Clock::now() + std::chrono::milliseconds(budget_ms);
  for (std::size_t i = 0; i < schedule.size(); ++i) {
    EvalOptions opts;
    opts.answer_radius = schedule[i];
    opts.deadline = deadline;
    EvaluationHandle h(kb, goal, opts);
    h.run();
    if (h.state() != EvalState::Completed) {
      if (i == 0) {
        out.answers = h.answers();
        out.radius_reached = schedule[0];
        out.complete = false;
      }
      break;
    }
    out.answers = h.answers();
    out.radius_reached = schedule[i];
    out.complete = true;
    out.rounds_completed.push_back(schedule[i]);
    if (h.counters().answer_abstractions == 0) break;  // larger radii change nothing
  }
  return out;
}

}  // namespace silk
