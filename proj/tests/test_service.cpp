#include "doctest.h"

#include <chrono>
#include <filesystem>
#include <fstream>
#include <thread>

#include "httplib.h"
#include "programs.hpp"
#include "silk/report.hpp"
#include "silk/service.hpp"
#include "term_gen.hpp"

using namespace silk;
using report::json;
namespace fs = std::filesystem;

namespace {

fs::path fresh_dir(const std::string& name) {
  fs::path d = fs::temp_directory_path() / ("silk-test-" + name + "-" + std::to_string(::getpid()));
  fs::remove_all(d);
  fs::create_directories(d);
  return d;
}

struct TestServer {
  std::unique_ptr<Service> svc;
  std::unique_ptr<httplib::Server> srv;
  std::thread th;
  int port = 0;

  explicit TestServer(const fs::path& data, const std::string& ui = "") {
    svc = std::make_unique<Service>(ServiceConfig{data.string(), ui});
    srv = std::make_unique<httplib::Server>();
    svc->mount(*srv);
    port = srv->bind_to_any_port("127.0.0.1");
    th = std::thread([this] { srv->listen_after_bind(); });
    srv->wait_until_ready();
  }
  ~TestServer() {
    srv->stop();
    th.join();
    svc.reset();
  }

  std::pair<int, json> get(const std::string& path) {
    httplib::Client c("127.0.0.1", port);
    c.set_read_timeout(30, 0);
    auto r = c.Get(path);
    REQUIRE(r);
    return {r->status, r->body.empty() ? json() : json::parse(r->body)};
  }
  std::string get_raw(const std::string& path) {
    httplib::Client c("127.0.0.1", port);
    auto r = c.Get(path);
    REQUIRE(r);
    return r->body;
  }
  std::pair<int, json> post(const std::string& path, const json& body) {
    httplib::Client c("127.0.0.1", port);
    c.set_read_timeout(10, 0);
    auto r = c.Post(path, body.dump(), "application/json");
    REQUIRE(r);
    return {r->status, json::parse(r->body)};
  }

  std::string kb(const std::string& source, const std::string& theory = "at_default") {
    auto [st, j] = post("/api/v1/kbs", {{"source", source}, {"theory", theory}});
    REQUIRE(st == 201);
    return j["kbId"].get<std::string>();
  }
  std::string query(const json& body) {
    auto [st, j] = post("/api/v1/queries", body);
    REQUIRE(st == 201);
    return j["qid"].get<std::string>();
  }
  std::string wait_state(const std::string& qid, std::initializer_list<const char*> states, int ms = 20000) {
    auto until = std::chrono::steady_clock::now() + std::chrono::milliseconds(ms);
    std::string s;
    while (std::chrono::steady_clock::now() < until) {
      s = get("/api/v1/queries/" + qid).second["state"].get<std::string>();
      for (const char* want : states)
        if (s == want) return s;
      std::this_thread::sleep_for(std::chrono::milliseconds(2));
    }
    return s;
  }
};

std::string q(const std::string& qid, const std::string& rest) { return "/api/v1/queries/" + qid + rest; }

}  // namespace

TEST_CASE("health and knowledge bases") {
  fs::path dir = fresh_dir("kb");
  TestServer s(dir);
  CHECK(s.get("/api/v1/health").first == 200);

  auto [st, j] = s.post("/api/v1/kbs", {{"source", programs::kCells}});
  CHECK(st == 201);
  CHECK(j["ruleCount"] == 5);
  CHECK(j["theory"] == "at_default");

  auto [bad, bj] = s.post("/api/v1/kbs", {{"source", "p(a :- q.\n"}});
  CHECK(bad == 422);
  REQUIRE(!bj["diagnostics"].empty());
  CHECK(bj["diagnostics"][0]["line"] == 1);
  CHECK(bj["diagnostics"][0]["column"].get<int>() > 0);

  auto [em, ej] = s.post("/api/v1/kbs", {{"source", ""}});
  CHECK(em == 201);
  CHECK(ej["ruleCount"] == 0);

  CHECK(s.post("/api/v1/kbs", {{"source", "p."}, {"theory", "bogus"}}).first == 400);
  CHECK(s.get("/api/v1/kbs/kb999").first == 404);
  CHECK(s.get("/api/v1/kbs").second["kbs"].size() == 2);
  auto rules = s.get("/api/v1/kbs/" + j["kbId"].get<std::string>() + "/rules").second["rules"];
  CHECK(rules.size() > 5);
}

TEST_CASE("a query runs to completion and reads are idempotent") {
  fs::path dir = fresh_dir("win");
  TestServer s(dir);
  std::string kb = s.kb(programs::kWin);
  std::string qid = s.query({{"kbId", kb}, {"goal", "win(?X)"}, {"log", true}});
  CHECK(s.wait_state(qid, {"completed"}) == "completed");

  auto [st, a] = s.get(q(qid, "/answers"));
  CHECK(st == 200);
  CHECK(a["qid"] == qid);
  CHECK(a["state"] == "completed");
  REQUIRE(a["answers"].size() == 1);
  CHECK(a["answers"][0]["term"] == "win(b)");
  CHECK(a["answers"][0]["tv"] == "true");
  CHECK(a["answers"][0]["bindings"]["X"] == "b");

  for (const char* path : {"/answers", "/tables?pattern=win(?A)", "/tables?summary=true", "/log/overview",
                           "/log/sccs", "/log/terminyzer"})
    CHECK(s.get_raw(q(qid, path)) == s.get_raw(q(qid, path)));

  auto tables = s.get(q(qid, "/tables?pattern=win(?A)")).second["tables"];
  CHECK(tables.size() == 4);
  auto ov = s.get(q(qid, "/log/overview")).second["overview"];
  auto status = s.get(q(qid, "")).second;
  CHECK(ov["distinctSubgoals"] == status["counters"]["newSubgoals"]);
  CHECK(ov["totalCalls"] == status["counters"]["calls"]);

  auto comps = s.get(q(qid, "/log/sccs")).second["sccs"];
  REQUIRE(comps.size() == 1);
  CHECK(comps[0]["members"].size() == 2);
  int id = comps[0]["id"];
  auto abs = s.get(q(qid, "/log/sccs/" + std::to_string(id) + "?abstraction=mode")).second["scc"];
  REQUIRE(abs["members"].size() == 1);
  CHECK(abs["members"][0]["form"] == "win(bound)");
  CHECK(abs["members"][0]["subgoals"] == 2);
  CHECK(s.get(q(qid, "/log/sccs/" + std::to_string(id) + "?abstraction=zzz")).first == 400);
  CHECK(s.get(q(qid, "/log/sccs/9999")).first == 404);

  CHECK(s.post(q(qid, "/control"), {{"action", "resume"}}).first == 409);
  CHECK(s.post(q(qid, "/control"), {{"action", "pause"}}).first == 409);
  CHECK(s.post(q(qid, "/control"), {{"action", "fly"}}).first == 400);
  CHECK(s.get(q(qid, "/tables?pattern=p(")).first == 400);
}

TEST_CASE("error statuses") {
  fs::path dir = fresh_dir("err");
  TestServer s(dir);
  std::string kb = s.kb(programs::kWin);
  CHECK(s.post("/api/v1/queries", {{"kbId", "nope"}, {"goal", "win(?X)"}}).first == 404);
  CHECK(s.post("/api/v1/queries", {{"kbId", kb}, {"goal", "win(?X"}}).first == 400);
  CHECK(s.get("/api/v1/queries/q404").first == 404);
  CHECK(s.get("/api/v1/queries/q404/answers").first == 404);
}

TEST_CASE("timer interrupts surface as a paused session") {
  fs::path dir = fresh_dir("timer");
  TestServer s(dir);
  std::string kb = s.kb(programs::kRunaway);
  auto t0 = std::chrono::steady_clock::now();
  std::string qid = s.query({{"kbId", kb}, {"goal", "r(a)"}, {"intervalMs", 200}, {"log", true}, {"maxOps", 100000000}});
  CHECK(s.wait_state(qid, {"paused"}, 5000) == "paused");
  auto took = std::chrono::duration_cast<std::chrono::milliseconds>(std::chrono::steady_clock::now() - t0).count();
  CHECK(took <= 400);

  auto [st, sum] = s.get(q(qid, "/tables?pattern=?T&summary=true"));
  CHECK(st == 200);
  CHECK(sum["state"] == "paused");
  REQUIRE(!sum["summary"].empty());
  CHECK(sum["summary"][0]["predicate"] == "r/1");
  CHECK(s.get(q(qid, "/log/overview")).first == 200);
  CHECK(s.get(q(qid, "/answers")).first == 409);
  CHECK(s.get(q(qid, "/justify?literal=r(a)")).first == 409);

  auto [rs, rj] = s.post(q(qid, "/control"), {{"action", "resume"}});
  CHECK(rs == 200);
  CHECK(rj["state"] != "paused");
  CHECK(s.wait_state(qid, {"paused"}, 5000) == "paused");

  auto [as, aj] = s.post(q(qid, "/control"), {{"action", "abort"}});
  CHECK(as == 200);
  CHECK(aj["state"] == "aborted");
  CHECK(s.post(q(qid, "/control"), {{"action", "resume"}}).first == 409);

  auto term = s.get(q(qid, "/log/terminyzer")).second["terminyzer"];
  REQUIRE(!term["callSequenceFindings"].empty());
  CHECK(term["callSequenceFindings"][0]["ruleCycle"] == json::array({"rule_1"}));
  CHECK(fs::file_size(dir / "logs" / (qid + ".fl")) > 0);
}

TEST_CASE("operation limit fails the query and keeps its tables") {
  fs::path dir = fresh_dir("limit");
  TestServer s(dir);
  std::string kb = s.kb(programs::kRunaway);
  std::string qid = s.query({{"kbId", kb}, {"goal", "r(a)"}, {"maxOps", 1000}});
  CHECK(s.wait_state(qid, {"failed"}) == "failed");
  auto st = s.get(q(qid, "")).second;
  CHECK(st["limitExceeded"] == true);
  CHECK(!s.get(q(qid, "/tables")).second["tables"].empty());
  CHECK(s.get(q(qid, "/log/overview")).first == 409);  // logging was off
}

TEST_CASE("pause, resume and logging toggles") {
  fs::path dir = fresh_dir("toggle");
  TestServer s(dir);
  std::string kb = s.kb("cnt(0).\ncnt(?M) :- cnt(?N), ?N < 150000, ?M is ?N + 1.\n");
  std::string qid = s.query({{"kbId", kb}, {"goal", "cnt(?X)"}});
  s.wait_state(qid, {"running"});
  auto [ps, pj] = s.post(q(qid, "/control"), {{"action", "pause"}});
  CHECK(ps == 200);
  CHECK(pj["state"] == "paused");
  CHECK(s.post(q(qid, "/control"), {{"action", "set_logging"}, {"value", true}}).first == 200);
  CHECK(s.post(q(qid, "/control"), {{"action", "set_logging"}}).first == 400);
  CHECK(s.post(q(qid, "/control"), {{"action", "resume"}}).first == 200);
  std::this_thread::sleep_for(std::chrono::milliseconds(30));
  auto [ps2, pj2] = s.post(q(qid, "/control"), {{"action", "pause"}});
  if (ps2 == 200) {
    auto ov = s.get(q(qid, "/log/overview")).second["overview"];
    CHECK(ov["partial"] == true);
    CHECK(ov["events"].get<int>() > 0);
    s.post(q(qid, "/control"), {{"action", "resume"}});
  }
  CHECK(s.wait_state(qid, {"completed"}, 60000) == "completed");
  auto answers = s.get(q(qid, "/answers")).second["answers"];
  CHECK(answers.size() == 150001);
}

TEST_CASE("justification endpoints") {
  fs::path dir = fresh_dir("justify");
  TestServer s(dir);
  std::string kb = s.kb(std::string(programs::kCells) + "textgen(frame(?O,has,?V), \"?O has a ?V\").\n");
  std::string qid = s.query({{"kbId", kb}, {"goal", "cell52[has->?V]"}});
  CHECK(s.wait_state(qid, {"completed"}) == "completed");
  auto [st, j] = s.get(q(qid, "/justify?literal=cell52[has->nucleus]"));
  REQUIRE(st == 200);
  json root = j["root"];
  CHECK(root["kind"] == "G");
  CHECK(root["tvColor"] == "red");
  CHECK(root["expansion"] == "more_pro_and_con_black_plus");
  CHECK(root["text"] == "cell52 has a nucleus");
  for (const char* k : {"id", "kind", "text", "tvColor", "argStatus", "side", "expansion", "childIds"})
    CHECK(root.contains(k));

  auto kids = s.get(q(qid, "/justify/node/" + std::to_string(root["id"].get<int>()) + "/children")).second;
  REQUIRE(kids["children"].size() == 2);
  CHECK(kids["node"]["expansion"] == "none");
  CHECK(kids["children"][0]["argStatus"] == "defeated_downarrow");
  CHECK(kids["children"][1]["argStatus"] == "undefeated_bang");
  CHECK(kids["children"][1]["side"] == "con_bar");
  CHECK(s.get(q(qid, "/justify/node/999/children")).first == 404);
  CHECK(s.get(q(qid, "/justify?literal=zork(1)")).first == 404);
  CHECK(s.get(q(qid, "/justify")).first == 400);
}

TEST_CASE("completed sessions survive a restart read-only") {
  fs::path dir = fresh_dir("restart");
  std::string qid, answers, tables, overview;
  {
    TestServer s(dir);
    std::string kb = s.kb(programs::kWin);
    qid = s.query({{"kbId", kb}, {"goal", "win(?X)"}, {"log", true}});
    REQUIRE(s.wait_state(qid, {"completed"}) == "completed");
    // the snapshot is written once the run finishes
    for (int i = 0; i < 2000 && !fs::exists(dir / "sessions" / (qid + ".json")); ++i)
      std::this_thread::sleep_for(std::chrono::milliseconds(1));
    answers = s.get_raw(q(qid, "/answers"));
    tables = s.get_raw(q(qid, "/tables"));
    overview = s.get_raw(q(qid, "/log/overview"));
  }
  TestServer s(dir);
  auto st = s.get(q(qid, "")).second;
  CHECK(st["state"] == "completed");
  CHECK(st["restored"] == true);
  CHECK(s.get_raw(q(qid, "/answers")) == answers);
  CHECK(s.get_raw(q(qid, "/tables")) == tables);
  CHECK(s.get_raw(q(qid, "/log/overview")) == overview);
  CHECK(s.post(q(qid, "/control"), {{"action", "abort"}}).first == 409);
  CHECK(s.get(q(qid, "/justify?literal=win(b)")).first == 409);
  CHECK(s.get("/api/v1/kbs").second["kbs"].size() == 1);
  // new ids continue after the restored ones
  std::string kb2 = s.kb("p.");
  CHECK(kb2 == "kb2");
}

TEST_CASE("concurrent sessions") {
  fs::path dir = fresh_dir("many");
  TestServer s(dir);
  std::vector<std::pair<std::string, std::string>> qs;
  for (const auto& b : programs::benchmarks()) {
    std::string kb = s.kb(b.program);
    qs.emplace_back(b.name, s.query({{"kbId", kb}, {"goal", b.goal}}));
  }
  for (const auto& [name, qid] : qs) CHECK_MESSAGE(s.wait_state(qid, {"completed"}) == "completed", name);
}

TEST_CASE("static UI files") {
  fs::path dir = fresh_dir("ui");
  fs::path ui = dir / "ui";
  fs::create_directories(ui);
  std::ofstream(ui / "index.html") << "<html>silk</html>";
  TestServer s(dir / "data", ui.string());
  CHECK(s.get_raw("/index.html") == "<html>silk</html>");
  CHECK(s.get_raw("/") == "<html>silk</html>");
  CHECK(s.get("/api/v1/health").first == 200);
}

TEST_CASE("second service on a bound port fails") {
  httplib::Server first;
  int port = first.bind_to_any_port("127.0.0.1");
  fs::path dir = fresh_dir("port");
  CHECK(serve(ServiceConfig{dir.string(), ""}, "127.0.0.1", port) == 1);
}

TEST_CASE("property: wire terms round-trip") {
  testgen::TermGen g(77);
  for (int i = 0; i < 500; ++i) {
    Term t = g.literal(3);
    json j = report::term(t);
    Term back = report::term_from(j);
    CHECK(canonical_text(back) == canonical_text(t));
    CHECK(report::term(back) == j);
  }
  CHECK(report::term(Term::string("a")) != report::term(Term::atom("a")));
  CHECK_THROWS(report::term_from(json{{"q", 1}}));
}
