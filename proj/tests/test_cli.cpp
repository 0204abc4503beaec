#include "doctest.h"

#include <arpa/inet.h>
#include <netinet/in.h>
#include <sys/socket.h>
#include <sys/wait.h>
#include <unistd.h>

#include <chrono>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <sstream>
#include <thread>

#include "httplib.h"
#include "programs.hpp"
#include "silk/report.hpp"
#include "silk/transform.hpp"

using silk::report::json;
namespace fs = std::filesystem;

namespace {

struct Result {
  int code = -1;
  std::string out, err;
};

fs::path work_dir() {
  static fs::path d = [] {
    fs::path p = fs::temp_directory_path() / ("silk-cli-" + std::to_string(::getpid()));
    fs::remove_all(p);
    fs::create_directories(p);
    return p;
  }();
  return d;
}

std::string slurp(const fs::path& p) {
  std::ifstream in(p, std::ios::binary);
  std::ostringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

std::string write(const std::string& name, const std::string& text) {
  fs::path p = work_dir() / name;
  std::ofstream(p, std::ios::binary) << text;
  return p.string();
}

Result run_silk(const std::string& args, const std::string& input = "") {
  fs::path out = work_dir() / "stdout.txt", err = work_dir() / "stderr.txt";
  std::string cmd = std::string(SILK_BIN) + " " + args + " >" + out.string() + " 2>" + err.string();
  if (!input.empty()) cmd = "printf '" + input + "' | " + cmd;
  else cmd += " </dev/null";
  int status = std::system(cmd.c_str());
  return {WIFEXITED(status) ? WEXITSTATUS(status) : -1, slurp(out), slurp(err)};
}

int free_port() {
  int fd = ::socket(AF_INET, SOCK_STREAM, 0);
  sockaddr_in a{};
  a.sin_family = AF_INET;
  a.sin_addr.s_addr = htonl(INADDR_LOOPBACK);
  a.sin_port = 0;
  ::bind(fd, reinterpret_cast<sockaddr*>(&a), sizeof a);
  socklen_t len = sizeof a;
  ::getsockname(fd, reinterpret_cast<sockaddr*>(&a), &len);
  ::close(fd);
  return ntohs(a.sin_port);
}

int count(const std::string& hay, const std::string& needle) {
  int n = 0;
  for (auto p = hay.find(needle); p != std::string::npos; p = hay.find(needle, p + 1)) ++n;
  return n;
}

}  // namespace

TEST_CASE("run prints answers, TRUE first") {
  std::string f = write("step.rlg", programs::kStep);
  Result r = run_silk("run " + f + " -q 'step(?X)'");
  CHECK(r.code == 0);
  CHECK(count(r.out, "TRUE      step(") == 10);
  CHECK(count(r.out, "UNDEFINED ") == 1);
  CHECK(r.out.find("UNDEFINED") > r.out.rfind("TRUE"));
}

TEST_CASE("run is deterministic") {
  std::string f = write("win.rlg", programs::kWin);
  Result a = run_silk("run " + f + " -q 'win(?X)' --dump 'win(?A)' --json");
  Result b = run_silk("run " + f + " -q 'win(?X)' --dump 'win(?A)' --json");
  CHECK(a.code == 0);
  CHECK(a.out == b.out);
  json j = json::parse(a.out);
  CHECK(j["state"] == "completed");
  REQUIRE(j["answers"].size() == 1);
  CHECK(j["answers"][0] == json({{"term", "win(b)"}, {"tv", "true"}, {"bindings", {{"X", "b"}}}}));
  CHECK(j["tables"].size() == 4);
}

TEST_CASE("false goal and justification") {
  std::string f = write("cells.rlg", std::string(programs::kCells) + "textgen(frame(?O,has,?V), \"?O has a ?V\").\n");
  Result r = run_silk("run " + f + " -q 'cell52[has->nucleus]' --justify 'cell52[has->nucleus]'");
  CHECK(r.code == 0);
  CHECK(r.out.find("FALSE     cell52[has->nucleus]") == 0);
  CHECK(r.out.find("\nG (red) cell52 has a nucleus\n") != std::string::npos);
  CHECK(r.out.find("A (green) v r1: cell52 has a nucleus") != std::string::npos);
  CHECK(r.out.find("P (green) r2 has priority over r1") != std::string::npos);
  CHECK(r.out.find("A con (green) ! r2: It is not the case that cell52 has a nucleus.") != std::string::npos);

  Result j = run_silk("run " + f + " -q 'cell52[has->nucleus]' --justify 'cell52[has->nucleus]' --json");
  json tree = json::parse(j.out)["justification"];
  CHECK(tree["tvColor"] == "red");
  CHECK(tree["children"].size() == 2);

  Result none = run_silk("run " + f + " -q 'cell52[has->nucleus]' --justify 'zork(1)'");
  CHECK(none.code == 0);
  CHECK(none.err.find("cannot justify") != std::string::npos);
}

TEST_CASE("theory flag") {
  std::string f = write("cells2.rlg", programs::kCells);
  CHECK(run_silk("run " + f + " -q 'cell52[has->nucleus]'").out.find("FALSE") == 0);
  CHECK(run_silk("run " + f + " -q 'cell52[has->nucleus]' --theory simple").out.find("UNDEFINED") == 0);
  CHECK(run_silk("run " + f + " -q 'x' --theory odd").code == 1);
}

TEST_CASE("emit prints the compiled rules") {
  std::string f = write("vac.rlg", programs::kVacuole);
  Result r = run_silk("run " + f + " --emit --theory none");
  CHECK(r.code == 0);
  silk::CompiledKB kb = silk::compile(silk::parse_program(programs::kVacuole), silk::Theory::None);
  std::string want;
  for (const auto& rule : kb.rules) want += silk::emit_text(rule) + "\n";
  CHECK(r.out == want);
}

TEST_CASE("exit codes") {
  std::string bad = write("bad.rlg", "p(a :- q.\n");
  Result r = run_silk("run " + bad + " -q 'p(?X)'");
  CHECK(r.code == 1);
  CHECK(r.err.find("bad.rlg:1:") != std::string::npos);

  std::string ok = write("ok.rlg", "p(1).\n");
  CHECK(run_silk("run " + ok + " -q 'p(?X'").code == 1);
  CHECK(run_silk("run " + ok).code == 1);
  CHECK(run_silk("run /nonexistent.rlg -q 'p(?X)'").code == 1);
  CHECK(run_silk("").code == 1);

  std::string inst = write("inst.rlg", "p(?X) :- ?X > 1.\n");
  Result rt = run_silk("run " + inst + " -q 'p(?Y)'");
  CHECK(rt.code == 2);
  CHECK(!rt.err.empty());
}

TEST_CASE("limit hit points at the analyzer, which finds the cycle") {
  std::string f = write("runaway.rlg", programs::kRunaway);
  std::string log = (work_dir() / "runaway.fl").string();
  Result r = run_silk("run " + f + " -q 'r(a)' --max-ops 3000 --log " + log);
  CHECK(r.code == 3);
  CHECK(r.err.find("analyze " + log + " --terminyzer") != std::string::npos);

  Result a = run_silk("analyze " + log + " --terminyzer");
  CHECK(a.code == 0);
  CHECK(a.out.find("call sequence: rule cycle rule_1 repeats") == 0);
  CHECK(a.out.find("r(s(s(a)))  @3") != std::string::npos);

  Result nolog = run_silk("run " + f + " -q 'r(a)' --max-ops 1000");
  CHECK(nolog.code == 3);
  CHECK(nolog.err.find("rerun with --log") != std::string::npos);
}

TEST_CASE("analyze overview, components and JSON") {
  std::string f = write("win2.rlg", programs::kWin);
  std::string log = (work_dir() / "win.fl").string();
  Result run = run_silk("run " + f + " -q 'win(?X)' --json --log " + log);
  json counters = json::parse(run.out)["counters"];

  Result ov = run_silk("analyze " + log + " --overview --json");
  json o = json::parse(ov.out)["overview"];
  CHECK(o["distinctSubgoals"] == counters["newSubgoals"]);
  CHECK(o["totalCalls"] == counters["calls"]);
  CHECK(o["partial"] == false);

  Result text = run_silk("analyze " + log + " --overview");
  CHECK(text.out.find("distinct subgoals:    " + std::to_string(o["distinctSubgoals"].get<int>())) != std::string::npos);

  Result sc = run_silk("analyze " + log + " --sccs --abstraction mode");
  CHECK(sc.out.find("  win(bound)  x2\n") != std::string::npos);
  json sj = json::parse(run_silk("analyze " + log + " --sccs --abstraction mode --json").out);
  REQUIRE(sj["sccs"].size() == 1);
  CHECK(sj["sccs"][0]["abstraction"] == "mode");
  CHECK(run_silk("analyze " + log + " --sccs --abstraction odd").code == 1);
  CHECK(run_silk("analyze " + log + " --terminyzer").out == "no non-termination found\n");
}

TEST_CASE("analyze suggests a delay when given the program") {
  std::string f = write("pq.rlg", programs::kTerminyzerPQ);
  std::string log = (work_dir() / "pq.fl").string();
  Result r = run_silk("run " + f + " -q 'test(?X,?Y)' --max-ops 4000 --log " + log);
  CHECK(r.code == 3);
  Result a = run_silk("analyze " + log + " --terminyzer -p " + f);
  CHECK(a.out.find("=>  wish(ground(?X))^p(?X,?Y)") != std::string::npos);
  json j = json::parse(run_silk("analyze " + log + " --terminyzer --json -p " + f).out);
  REQUIRE(!j["terminyzer"]["suggestions"].empty());
  CHECK(j["terminyzer"]["suggestions"][0]["rewrittenLiteral"] == "wish(ground(?X))^p(?X,?Y)");
}

TEST_CASE("analyze rejects a mostly malformed log") {
  std::string junk = write("junk.fl", "hello\nworld\nnot a log\n");
  CHECK(run_silk("analyze " + junk).code == 1);
  CHECK(run_silk("analyze /nonexistent.fl").code == 1);
}

TEST_CASE("interactive interrupt prompt") {
  std::string f = write("runaway2.rlg", programs::kRunaway);
  // first interrupt: dump, switch logging on, continue; second: analyses, abort
  Result r = run_silk("run " + f + " -q 'r(a)' --interval 100 --max-ops 100000000",
                  "d r(?X)\\nl\\nc\\nt\\ns\\nzz\\na\\n");
  CHECK(r.code == 2);
  CHECK(count(r.err, "interrupted after") >= 2);
  CHECK(r.err.find("r/1: ") != std::string::npos);
  CHECK(r.err.find("logging on") != std::string::npos);
  CHECK(r.err.find("call sequence: rule cycle rule_1") != std::string::npos);
  CHECK(r.err.find("unknown choice 'zz'") != std::string::npos);
  CHECK(r.err.find("evaluation aborted") != std::string::npos);

  // no input: the run continues after each interrupt and completes
  std::string w = write("win3.rlg", programs::kWin);
  Result done = run_silk("run " + w + " -q 'win(?X)' --interval 1");
  CHECK(done.code == 0);
  CHECK(done.out == "TRUE      win(b)\n");
}

TEST_CASE("serve") {
  // find a free port
  int port = free_port();
  fs::path data = work_dir() / "data";
  std::string cmd = std::string(SILK_BIN) + " serve --host 127.0.0.1 --port " + std::to_string(port) +
                    " --data-dir " + data.string() + " >/dev/null 2>&1 & echo $! > " +
                    (work_dir() / "pid").string();
  REQUIRE(std::system(cmd.c_str()) == 0);
  httplib::Client c("127.0.0.1", port);
  c.set_connection_timeout(1, 0);
  bool up = false;
  for (int i = 0; i < 200 && !up; ++i) {
    auto res = c.Get("/api/v1/health");
    up = res && res->status == 200;
    if (!up) std::this_thread::sleep_for(std::chrono::milliseconds(20));
  }
  CHECK(up);
  CHECK(fs::exists(data / "kbs"));

  Result second = run_silk("serve --host 127.0.0.1 --port " + std::to_string(port) + " --data-dir " + data.string());
  CHECK(second.code == 1);
  CHECK(second.err.find("cannot bind") != std::string::npos);

  std::string pid = slurp(work_dir() / "pid");
  CHECK(std::system(("kill " + pid).c_str()) == 0);

  // environment defaults
  port = free_port();
  std::string env = "SILK_PORT=" + std::to_string(port) + " SILK_DATA_DIR=" + (work_dir() / "envdata").string() + " ";
  httplib::Server blocker;
  REQUIRE(blocker.bind_to_port("127.0.0.1", port));
  std::string errf = (work_dir() / "env.err").string();
  int status = std::system((env + SILK_BIN + " serve --host 127.0.0.1 >/dev/null 2>" + errf).c_str());
  CHECK(WEXITSTATUS(status) == 1);
  std::string err = slurp(errf);
  CHECK(err.find("127.0.0.1:" + std::to_string(port) + " (data in " + (work_dir() / "envdata").string() + ")") !=
        std::string::npos);
}
