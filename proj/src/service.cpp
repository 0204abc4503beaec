#include "silk/service.hpp"

#include <atomic>
#include <chrono>
#include <filesystem>
#include <fstream>
#include <map>
#include <mutex>
#include <thread>

#include "httplib.h"
#include "silk/report.hpp"

namespace silk {

namespace fs = std::filesystem;
using report::json;

namespace {

using SysClock = std::chrono::system_clock;

std::int64_t epoch_ms(SysClock::time_point t) {
  return std::chrono::duration_cast<std::chrono::milliseconds>(t.time_since_epoch()).count();
}

bool terminal(EvalState s) { return s == EvalState::Completed || s == EvalState::Failed || s == EvalState::Aborted; }

// Error carrying an HTTP status; thrown inside handlers.
struct HttpError {
  int status;
  std::string message;
  json extra = json::object();
};

struct KbRecord {
  std::string id;
  std::vector<SourceFile> sources;
  Theory theory = Theory::AtDefault;
  std::shared_ptr<const CompiledKB> kb;
  std::int64_t created = 0;
};

struct Session {
  std::string qid;
  std::string kb_id;
  std::string goal;
  Theory theory = Theory::AtDefault;
  std::shared_ptr<const CompiledKB> kb;
  std::unique_ptr<EvaluationHandle> h;  // null once restored from disk
  std::string log_path;
  std::int64_t created = 0;
  std::atomic<std::int64_t> updated{0};
  std::thread watcher;
  std::mutex control;

  std::mutex cache_mu;
  std::optional<Log> log_cache;  // terminal runs only
  std::unique_ptr<Justification> just;

  bool restored = false;
  json snapshot;  // restored sessions: the persisted terminal state

  EvalState state() const {
    if (restored) {
      std::string s = snapshot.at("state").get<std::string>();
      for (EvalState e : {EvalState::Completed, EvalState::Failed, EvalState::Aborted})
        if (s == to_string(e)) return e;
      return EvalState::Aborted;
    }
    return h->state();
  }
};

json read_json_file(const fs::path& p) {
  std::ifstream in(p);
  return json::parse(in);
}

void write_json_file(const fs::path& p, const json& j) {
  fs::path tmp = p;
  tmp += ".tmp";
  {
    std::ofstream out(tmp);
    out << j.dump() << "\n";
  }
  fs::rename(tmp, p);
}

int id_number(const std::string& id, const std::string& prefix) {
  if (id.rfind(prefix, 0) != 0) return 0;
  try {
    return std::stoi(id.substr(prefix.size()));
  } catch (...) {
    return 0;
  }
}

}  // namespace

struct Service::Impl {
  ServiceConfig cfg;
  std::mutex mu;
  std::map<std::string, std::shared_ptr<KbRecord>> kbs;
  std::map<std::string, std::shared_ptr<Session>> sessions;
  int next_kb = 1;
  int next_q = 1;

  explicit Impl(ServiceConfig c) : cfg(std::move(c)) {
    fs::create_directories(kb_dir());
    fs::create_directories(session_dir());
    fs::create_directories(log_dir());
    restore();
  }

  ~Impl() {
    std::vector<std::shared_ptr<Session>> all;
    {
      std::lock_guard<std::mutex> lk(mu);
      for (auto& [id, s] : sessions) all.push_back(s);
    }
    for (auto& s : all) {
      if (s->h && !terminal(s->h->state())) s->h->request_abort();
      if (s->watcher.joinable()) s->watcher.join();
    }
  }

  fs::path kb_dir() const { return fs::path(cfg.data_dir) / "kbs"; }
  fs::path session_dir() const { return fs::path(cfg.data_dir) / "sessions"; }
  fs::path log_dir() const { return fs::path(cfg.data_dir) / "logs"; }

  // ---- persistence

  static std::shared_ptr<const CompiledKB> compile_record(const std::vector<SourceFile>& sources, Theory th) {
    return std::make_shared<const CompiledKB>(compile(parse_sources(sources), th));
  }

  void restore() {
    for (const auto& e : fs::directory_iterator(kb_dir())) {
      if (e.path().extension() != ".json") continue;
      try {
        json j = read_json_file(e.path());
        auto r = std::make_shared<KbRecord>();
        r->id = j.at("kbId").get<std::string>();
        for (const auto& s : j.at("sources")) r->sources.push_back({s.at("name").get<std::string>(), s.at("text").get<std::string>()});
        r->theory = theory_from_string(j.at("theory").get<std::string>()).value_or(Theory::AtDefault);
        r->created = j.value("created", std::int64_t{0});
        r->kb = compile_record(r->sources, r->theory);
        next_kb = std::max(next_kb, id_number(r->id, "kb") + 1);
        kbs[r->id] = r;
      } catch (const std::exception&) {
        // unreadable records are skipped
      }
    }
    for (const auto& e : fs::directory_iterator(session_dir())) {
      if (e.path().extension() != ".json") continue;
      try {
        json j = read_json_file(e.path());
        auto s = std::make_shared<Session>();
        s->qid = j.at("qid").get<std::string>();
        s->kb_id = j.at("kbId").get<std::string>();
        s->goal = j.at("goal").get<std::string>();
        s->log_path = j.value("logPath", "");
        s->created = j.value("created", std::int64_t{0});
        s->updated = j.value("updated", std::int64_t{0});
        s->restored = true;
        s->snapshot = std::move(j);
        if (auto it = kbs.find(s->kb_id); it != kbs.end()) s->kb = it->second->kb;
        next_q = std::max(next_q, id_number(s->qid, "q") + 1);
        sessions[s->qid] = s;
      } catch (const std::exception&) {
      }
    }
  }

  void persist_session(Session& s) {
    EvaluationHandle& h = *s.h;
    json j = {{"qid", s.qid},
              {"kbId", s.kb_id},
              {"goal", s.goal},
              {"theory", to_string(s.theory)},
              {"state", to_string(h.state())},
              {"error", h.error()},
              {"limitExceeded", h.limit_exceeded()},
              {"logPath", s.log_path},
              {"created", s.created},
              {"updated", s.updated.load()},
              {"elapsedMs", h.elapsed().count()},
              {"counters", report::counters(h.counters())},
              {"answers", h.state() == EvalState::Completed ? report::answers(h.answers()) : json::array()}};
    j["tables"] = report::tables(h.table_snapshot());
    write_json_file(session_dir() / (s.qid + ".json"), j);
  }

  // ---- helpers

  std::shared_ptr<KbRecord> kb_or_404(const std::string& id) {
    std::lock_guard<std::mutex> lk(mu);
    auto it = kbs.find(id);
    if (it == kbs.end()) throw HttpError{404, "unknown knowledge base " + id};
    return it->second;
  }

  std::shared_ptr<Session> session_or_404(const std::string& qid) {
    std::lock_guard<std::mutex> lk(mu);
    auto it = sessions.find(qid);
    if (it == sessions.end()) throw HttpError{404, "unknown query " + qid};
    return it->second;
  }

  static json base(const Session& s, EvalState st) { return {{"qid", s.qid}, {"state", to_string(st)}}; }

  static HttpError not_ready(const Session& s, EvalState st, const std::string& why) {
    return HttpError{409, why, base(s, st)};
  }

  // Tables of a session outside Running; restored sessions rebuild them.
  static std::vector<Table> tables_of(Session& s, EvalState& st) {
    if (s.restored) {
      st = s.state();
      return report::tables_from(s.snapshot.at("tables"));
    }
    st = s.h->state();
    if (st == EvalState::Running || st == EvalState::Idle)
      throw not_ready(s, st, "tables are available once the query is paused or finished");
    try {
      return s.h->table_snapshot();
    } catch (const SnapshotWhileRunning&) {
      st = EvalState::Running;
      throw not_ready(s, st, "tables are available once the query is paused or finished");
    }
  }

  Log log_of(Session& s, EvalState& st) {
    if (s.restored) {
      st = s.state();
      std::lock_guard<std::mutex> lk(s.cache_mu);
      if (!s.log_cache) {
        if (s.log_path.empty() || !fs::exists(s.log_path)) throw HttpError{409, "no forest log for this query", base(s, st)};
        s.log_cache = load_log(s.log_path);
      }
      return *s.log_cache;
    }
    st = s.h->state();
    if (st == EvalState::Running || st == EvalState::Idle)
      throw not_ready(s, st, "log analyses are available once the query is paused or finished");
    std::lock_guard<std::mutex> lk(s.cache_mu);
    if (s.log_cache) return *s.log_cache;
    Log log;
    try {
      log = s.h->captured_log();
    } catch (const SnapshotWhileRunning&) {
      st = EvalState::Running;
      throw not_ready(s, st, "log analyses are available once the query is paused or finished");
    }
    if (log.events.empty()) throw HttpError{409, "no forest log events; enable logging for this query", base(s, st)};
    if (terminal(st)) s.log_cache = log;
    return log;
  }

  // ---- knowledge bases

  json create_kb(const json& body, int& status) {
    std::vector<SourceFile> sources;
    if (body.contains("sources")) {
      for (const auto& s : body.at("sources"))
        sources.push_back({s.value("name", "<input>"), s.at("text").get<std::string>()});
    } else if (body.contains("source")) {
      sources.push_back({body.value("name", "<input>"), body.at("source").get<std::string>()});
    } else {
      throw HttpError{400, "expected \"source\" or \"sources\""};
    }
    std::string th = body.value("theory", "at_default");
    auto theory = theory_from_string(th);
    if (!theory) throw HttpError{400, "unknown theory " + th};

    auto r = std::make_shared<KbRecord>();
    r->sources = sources;
    r->theory = *theory;
    r->created = epoch_ms(SysClock::now());
    try {
      r->kb = compile_record(sources, *theory);
    } catch (const ParseError& e) {
      throw HttpError{422, "parse error", {{"diagnostics", report::diagnostics(e.diagnostics())}}};
    } catch (const CompileError& e) {
      throw HttpError{422, "compile error", {{"diagnostics", report::diagnostics(e.diagnostics())}}};
    } catch (const UnsupportedHead& e) {
      throw HttpError{422, e.what(), {{"diagnostics", json::array()}}};
    }
    {
      std::lock_guard<std::mutex> lk(mu);
      r->id = "kb" + std::to_string(next_kb++);
      kbs[r->id] = r;
    }
    json src = json::array();
    for (const auto& s : sources) src.push_back({{"name", s.name}, {"text", s.text}});
    write_json_file(kb_dir() / (r->id + ".json"),
                    {{"kbId", r->id}, {"sources", src}, {"theory", to_string(r->theory)}, {"created", r->created}});
    status = 201;
    return kb_info(*r);
  }

  static json kb_info(const KbRecord& r) {
    return {{"kbId", r.id},
            {"ruleCount", r.kb->user_rule_count},
            {"compiledRuleCount", r.kb->rules.size()},
            {"theory", to_string(r.theory)},
            {"warnings", r.kb->warnings},
            {"files", [&] {
               json f = json::array();
               for (const auto& s : r.sources) f.push_back(s.name);
               return f;
             }()}};
  }

  json list_kbs() {
    std::lock_guard<std::mutex> lk(mu);
    json out = json::array();
    for (const auto& [id, r] : kbs) out.push_back(kb_info(*r));
    return {{"kbs", out}};
  }

  json kb_rules(const std::string& id) {
    auto r = kb_or_404(id);
    json lines = json::array();
    for (const auto& rule : r->kb->rules) lines.push_back(emit_text(rule));
    return {{"kbId", id}, {"rules", lines}};
  }

  // ---- queries

  json start_query(const json& body, int& status) {
    auto r = kb_or_404(body.at("kbId").get<std::string>());
    std::string goal_text = body.at("goal").get<std::string>();
    Formula goal;
    try {
      goal = parse_goal(goal_text);
    } catch (const ParseError& e) {
      throw HttpError{400, "goal parse error", {{"diagnostics", report::diagnostics(e.diagnostics())}}};
    }
    auto s = std::make_shared<Session>();
    s->kb_id = r->id;
    s->goal = goal_text;
    s->theory = r->theory;
    s->kb = r->kb;
    if (body.contains("theory") && !body["theory"].is_null()) {
      auto th = theory_from_string(body["theory"].get<std::string>());
      if (!th) throw HttpError{400, "unknown theory"};
      if (*th != r->theory) {
        s->theory = *th;
        s->kb = compile_record(r->sources, *th);
      }
    }
    EvalOptions opts;
    opts.logging = body.value("log", false);
    opts.capture_log = true;
    opts.max_ops = body.value("maxOps", opts.max_ops);
    int interval = body.value("intervalMs", 0);
    opts.interval_ms = interval;
    {
      std::lock_guard<std::mutex> lk(mu);
      s->qid = "q" + std::to_string(next_q++);
      sessions[s->qid] = s;
    }
    s->log_path = (log_dir() / (s->qid + ".fl")).string();
    opts.log_path = s->log_path;
    s->created = s->updated = epoch_ms(SysClock::now());
    try {
      s->h = std::make_unique<EvaluationHandle>(s->kb, goal, opts);
    } catch (const std::exception& e) {
      std::lock_guard<std::mutex> lk(mu);
      sessions.erase(s->qid);
      throw HttpError{400, e.what()};
    }
    if (interval > 0)
      s->h->set_interrupt_handler([](EvaluationHandle& h) { return h.await_decision(); }, interval);
    s->h->start();
    Session* raw = s.get();
    s->watcher = std::thread([this, raw] {
      raw->h->wait();
      raw->updated = epoch_ms(SysClock::now());
      try {
        persist_session(*raw);
      } catch (const std::exception&) {
      }
    });
    status = 201;
    return status_json(*s);
  }

  json status_json(Session& s) {
    EvalState st = s.state();
    json j = base(s, st);
    j["kbId"] = s.kb_id;
    j["goal"] = s.goal;
    j["theory"] = to_string(s.theory);
    j["created"] = s.created;
    j["updated"] = s.updated.load();
    if (s.restored) {
      j["restored"] = true;
      j["error"] = s.snapshot.value("error", "");
      j["limitExceeded"] = s.snapshot.value("limitExceeded", false);
      j["counters"] = s.snapshot.value("counters", json::object());
      j["elapsedMs"] = s.snapshot.value("elapsedMs", 0);
      j["logging"] = false;
      return j;
    }
    j["error"] = s.h->error();
    j["limitExceeded"] = s.h->limit_exceeded();
    j["logging"] = s.h->logging();
    j["elapsedMs"] = s.h->elapsed().count();
    if (st != EvalState::Running) j["counters"] = report::counters(s.h->counters());
    return j;
  }

  json list_queries() {
    std::vector<std::shared_ptr<Session>> all;
    {
      std::lock_guard<std::mutex> lk(mu);
      for (auto& [id, s] : sessions) all.push_back(s);
    }
    json out = json::array();
    for (auto& s : all) out.push_back(status_json(*s));
    return {{"queries", out}};
  }

  template <class Pred>
  static void wait_for(const EvaluationHandle& h, Pred done, int ms) {
    auto until = std::chrono::steady_clock::now() + std::chrono::milliseconds(ms);
    while (!done(h.state()) && std::chrono::steady_clock::now() < until)
      std::this_thread::sleep_for(std::chrono::milliseconds(1));
  }

  json control(const std::string& qid, const json& body) {
    auto s = session_or_404(qid);
    std::string action = body.at("action").get<std::string>();
    if (s->restored) throw HttpError{409, "restored queries are read-only", base(*s, s->state())};
    std::lock_guard<std::mutex> lk(s->control);
    EvaluationHandle& h = *s->h;
    EvalState st = h.state();
    auto bad = [&] { return HttpError{409, "cannot " + action + " a " + to_string(st) + " query", base(*s, st)}; };
    if (action == "pause") {
      if (st != EvalState::Running) throw bad();
      h.request_pause();
      wait_for(h, [](EvalState x) { return x != EvalState::Running; }, 2000);
    } else if (action == "resume") {
      if (st != EvalState::Paused) throw bad();
      h.resume();
      wait_for(h, [](EvalState x) { return x != EvalState::Paused; }, 2000);
    } else if (action == "abort") {
      if (terminal(st)) throw bad();
      h.request_abort();
      wait_for(h, [](EvalState x) { return terminal(x); }, 5000);
    } else if (action == "set_logging") {
      if (terminal(st)) throw bad();
      if (!body.contains("value") || !body["value"].is_boolean()) throw HttpError{400, "set_logging needs a boolean value"};
      h.set_logging(body["value"].get<bool>());
    } else {
      throw HttpError{400, "unknown action " + action};
    }
    s->updated = epoch_ms(SysClock::now());
    return status_json(*s);
  }

  json answers(const std::string& qid) {
    auto s = session_or_404(qid);
    EvalState st = s->state();
    if (st != EvalState::Completed) throw not_ready(*s, st, "answers are available once the query has completed");
    json j = base(*s, st);
    j["answers"] = s->restored ? s->snapshot.at("answers") : report::answers(s->h->answers());
    return j;
  }

  json tables(const std::string& qid, const std::string& pattern, bool summary) {
    auto s = session_or_404(qid);
    Literal pat;
    try {
      pat = parse_literal(pattern.empty() ? "?T" : pattern);
    } catch (const std::exception& e) {
      throw HttpError{400, std::string("bad pattern: ") + e.what()};
    }
    EvalState st;
    std::vector<Table> ts = tables_of(*s, st);
    json j = base(*s, st);
    j["pattern"] = pattern.empty() ? "?T" : pattern;
    if (summary) j["summary"] = report::table_summary(table_dump_summary(ts, pat));
    else j["tables"] = report::table_dump(table_dump(ts, pat));
    return j;
  }

  json log_overview(const std::string& qid) {
    auto s = session_or_404(qid);
    EvalState st;
    Log log = log_of(*s, st);
    json j = base(*s, st);
    j["overview"] = report::overview(overview(log));
    return j;
  }

  json log_sccs(const std::string& qid) {
    auto s = session_or_404(qid);
    EvalState st;
    Log log = log_of(*s, st);
    json j = base(*s, st);
    j["sccs"] = report::sccs(sccs(log));
    return j;
  }

  json log_scc(const std::string& qid, int id, const std::string& abstraction) {
    auto s = session_or_404(qid);
    EvalState st;
    Log log = log_of(*s, st);
    std::vector<Scc> cs = sccs(log);
    auto it = std::find_if(cs.begin(), cs.end(), [&](const Scc& c) { return c.id == id; });
    if (it == cs.end()) throw HttpError{404, "unknown component " + std::to_string(id), base(*s, st)};
    json j = base(*s, st);
    if (abstraction.empty()) {
      j["scc"] = report::scc(*it);
    } else if (abstraction == "mode" || abstraction == "pred") {
      AbstractionMode m = abstraction == "mode" ? AbstractionMode::Mode : AbstractionMode::Predicate;
      j["scc"] = report::abstract_scc(*it, abstract_scc(*it, m), m);
    } else {
      throw HttpError{400, "abstraction must be mode or pred"};
    }
    return j;
  }

  json log_terminyzer(const std::string& qid) {
    auto s = session_or_404(qid);
    EvalState st;
    Log log = log_of(*s, st);
    TerminyzerReport rep = terminyzer(log);
    SuggestionOutcome sug;
    if (s->kb) sug = suggest_delay(*s->kb, rep);
    json j = base(*s, st);
    j["terminyzer"] = report::terminyzer(rep, sug);
    return j;
  }

  Justification& justification(Session& s) {
    EvalState st = s.state();
    if (st != EvalState::Completed) throw not_ready(s, st, "justification needs a completed query");
    if (s.restored) throw HttpError{409, "justification needs the live evaluation; restored queries keep tables only", base(s, st)};
    if (!s.just) s.just = std::make_unique<Justification>(*s.h);
    return *s.just;
  }

  json justify(const std::string& qid, const std::string& literal) {
    auto s = session_or_404(qid);
    Literal l;
    try {
      l = parse_literal(literal);
    } catch (const std::exception& e) {
      throw HttpError{400, std::string("bad literal: ") + e.what()};
    }
    std::lock_guard<std::mutex> lk(s->cache_mu);
    Justification& j = justification(*s);
    json out = base(*s, s->state());
    try {
      out["root"] = report::node(j.root(l));
    } catch (const NoSuchTable& e) {
      throw HttpError{404, e.what(), base(*s, s->state())};
    }
    return out;
  }

  json justify_children(const std::string& qid, int id) {
    auto s = session_or_404(qid);
    std::lock_guard<std::mutex> lk(s->cache_mu);
    Justification& j = justification(*s);
    json out = base(*s, s->state());
    try {
      json kids = json::array();
      for (const auto& c : j.expand(id)) kids.push_back(report::node(c));
      out["node"] = report::node(j.node(id));
      out["children"] = kids;
    } catch (const UnknownNode& e) {
      throw HttpError{404, e.what(), base(*s, s->state())};
    }
    return out;
  }
};

Service::Service(ServiceConfig cfg) : impl_(std::make_unique<Impl>(std::move(cfg))) {}

Service::~Service() = default;

namespace {

void send(httplib::Response& res, int status, const json& j) {
  res.status = status;
  res.set_content(j.dump(), "application/json");
}

template <class F>
httplib::Server::Handler wrap(F f) {
  return [f](const httplib::Request& req, httplib::Response& res) {
    try {
      int status = 200;
      json j = f(req, status);
      send(res, status, j);
    } catch (const HttpError& e) {
      json j = e.extra;
      j["error"] = e.message;
      send(res, e.status, j);
    } catch (const json::exception& e) {
      send(res, 400, {{"error", std::string("bad request: ") + e.what()}});
    } catch (const std::exception& e) {
      send(res, 500, {{"error", e.what()}});
    }
  };
}

json body_of(const httplib::Request& req) {
  if (req.body.empty()) return json::object();
  return json::parse(req.body);
}

}  // namespace

void Service::mount(httplib::Server& srv) {
  Impl* d = impl_.get();
  const std::string api = "/api/v1";
  srv.Get(api + "/health", wrap([](const httplib::Request&, int&) { return json{{"status", "ok"}}; }));

  srv.Post(api + "/kbs", wrap([d](const httplib::Request& req, int& st) { return d->create_kb(body_of(req), st); }));
  srv.Get(api + "/kbs", wrap([d](const httplib::Request&, int&) { return d->list_kbs(); }));
  srv.Get(api + R"(/kbs/([^/]+))", wrap([d](const httplib::Request& req, int&) {
            return Impl::kb_info(*d->kb_or_404(req.matches[1]));
          }));
  srv.Get(api + R"(/kbs/([^/]+)/rules)", wrap([d](const httplib::Request& req, int&) { return d->kb_rules(req.matches[1]); }));

  srv.Post(api + "/queries", wrap([d](const httplib::Request& req, int& st) { return d->start_query(body_of(req), st); }));
  srv.Get(api + "/queries", wrap([d](const httplib::Request&, int&) { return d->list_queries(); }));
  srv.Get(api + R"(/queries/([^/]+))", wrap([d](const httplib::Request& req, int&) {
            return d->status_json(*d->session_or_404(req.matches[1]));
          }));
  srv.Post(api + R"(/queries/([^/]+)/control)", wrap([d](const httplib::Request& req, int&) {
             return d->control(req.matches[1], body_of(req));
           }));
  srv.Get(api + R"(/queries/([^/]+)/answers)", wrap([d](const httplib::Request& req, int&) { return d->answers(req.matches[1]); }));
  srv.Get(api + R"(/queries/([^/]+)/tables)", wrap([d](const httplib::Request& req, int&) {
            std::string summary = req.get_param_value("summary");
            return d->tables(req.matches[1], req.get_param_value("pattern"), summary == "true" || summary == "1");
          }));
  srv.Get(api + R"(/queries/([^/]+)/log/overview)", wrap([d](const httplib::Request& req, int&) {
            return d->log_overview(req.matches[1]);
          }));
  srv.Get(api + R"(/queries/([^/]+)/log/sccs)", wrap([d](const httplib::Request& req, int&) { return d->log_sccs(req.matches[1]); }));
  srv.Get(api + R"(/queries/([^/]+)/log/sccs/(\d+))", wrap([d](const httplib::Request& req, int&) {
            return d->log_scc(req.matches[1], std::stoi(req.matches[2]), req.get_param_value("abstraction"));
          }));
  srv.Get(api + R"(/queries/([^/]+)/log/terminyzer)", wrap([d](const httplib::Request& req, int&) {
            return d->log_terminyzer(req.matches[1]);
          }));
  srv.Get(api + R"(/queries/([^/]+)/justify)", wrap([d](const httplib::Request& req, int&) {
            if (!req.has_param("literal")) throw HttpError{400, "missing literal"};
            return d->justify(req.matches[1], req.get_param_value("literal"));
          }));
  srv.Get(api + R"(/queries/([^/]+)/justify/node/(\d+)/children)", wrap([d](const httplib::Request& req, int&) {
            return d->justify_children(req.matches[1], std::stoi(req.matches[2]));
          }));

  if (!d->cfg.ui_dir.empty()) {
    srv.set_mount_point("/", d->cfg.ui_dir);
  } else {
    srv.Get("/", [](const httplib::Request&, httplib::Response& res) {
      res.set_content("silk service: the web UI is not configured (use --ui-dir). API under /api/v1.\n", "text/plain");
    });
  }
}

int serve(const ServiceConfig& cfg, const std::string& host, int port) {
  httplib::Server srv;
  // SO_REUSEADDR only: a port already served by another process must fail
  srv.set_socket_options([](socket_t sock) {
    int yes = 1;
    setsockopt(sock, SOL_SOCKET, SO_REUSEADDR, reinterpret_cast<const void*>(&yes), sizeof(yes));
  });
  if (!srv.bind_to_port(host, port)) return 1;
  Service service(cfg);
  service.mount(srv);
  return srv.listen_after_bind() ? 0 : 1;
}

}  // namespace silk
