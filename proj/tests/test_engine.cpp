#include "doctest.h"

#include <algorithm>
#include <map>
#include <random>
#include <set>

#include "programs.hpp"
#include "random_programs.hpp"
#include "silk/engine.hpp"
#include "silk/stack.hpp"

using namespace silk;

namespace {

std::unique_ptr<EvaluationHandle> run(const std::string& text, const std::string& goal,
                                      Theory th = Theory::AtDefault, EvalOptions opts = {}) {
  auto kb = programs::compile_text(text, th);
  auto h = std::make_unique<EvaluationHandle>(kb, parse_goal(goal), opts);
  h->run();
  return h;
}

std::map<std::string, TruthValue> answer_map(const EvaluationHandle& h) {
  std::map<std::string, TruthValue> m;
  for (const auto& a : h.answers()) m[a.text] = a.tv;
  return m;
}

std::set<std::string> true_answers(const EvaluationHandle& h) {
  std::set<std::string> s;
  for (const auto& a : h.answers())
    if (a.tv == TruthValue::True) s.insert(a.text);
  return s;
}

TruthValue truth(const EvaluationHandle& h, const std::string& literal) {
  return h.truth_of(parse_literal(literal));
}

std::set<std::string> table_set(const EvaluationHandle& h) {
  std::set<std::string> s;
  for (const auto& t : h.table_snapshot()) s.insert(literal_canonical(t.subgoal));
  return s;
}

}  // namespace

TEST_CASE("win/move: only win(b) holds") {
  auto h = run(programs::kWin, "win(?X)");
  REQUIRE(h->state() == EvalState::Completed);
  auto m = answer_map(*h);
  CHECK(m.size() == 1);
  CHECK(m["win(b)"] == TruthValue::True);
  CHECK(truth(*h, "win(b)") == TruthValue::True);
  CHECK(truth(*h, "win(c)") == TruthValue::False);
  CHECK(truth(*h, "win(a)") == TruthValue::False);
  CHECK_THROWS_AS(truth(*h, "lose(a)"), NoSuchTable);
}

TEST_CASE("negative loop is undefined") {
  auto h = run(programs::kNafLoop, "p");
  auto a = h->answers();
  REQUIRE(a.size() == 1);
  CHECK(a[0].tv == TruthValue::Undefined);
  CHECK(truth(*h, "p") == TruthValue::Undefined);
  CHECK(truth(*h, "q") == TruthValue::Undefined);
}

TEST_CASE("positive loop is false and its negation true") {
  auto h = run("p :- q.\nq :- p.\ns :- naf p.\n", "s");
  CHECK(answer_map(*h)["s"] == TruthValue::True);
  CHECK(truth(*h, "p") == TruthValue::False);
}

TEST_CASE("unfounded conditional answers are removed at completion") {
  // p and q support each other only through delayed negation of r
  auto h = run("p :- q, naf r.\nq :- p.\nr :- naf s.\ns.\n", "p");
  CHECK(h->answers().empty());
  CHECK(truth(*h, "p") == TruthValue::False);
}

TEST_CASE("odd loop stays undefined through dependents") {
  auto h = run("p(a) :- naf p(a).\nq :- p(a).\nr :- naf q.\n", "r");
  auto a = h->answers();
  REQUIRE(a.size() == 1);
  CHECK(a[0].tv == TruthValue::Undefined);
}

TEST_CASE("radial restraint on answers") {
  auto h = run(programs::kRadial, "p(?Y)");
  REQUIRE(h->state() == EvalState::Completed);
  CHECK(true_answers(*h) == std::set<std::string>{"p(0)", "p(s(0))", "p(s(s(0)))"});
  bool deep = false;
  for (const auto& a : h->answers()) {
    if (a.tv == TruthValue::True) continue;
    CHECK(a.tv == TruthValue::Undefined);
    Term t = encode_literal(parse_literal(a.text));
    if (is_variant(decode_literal(t).atom, parse_term("p(s(s(s(?Z))))"))) deep = true;
  }
  CHECK(deep);
  CHECK(h->counters().answer_abstractions > 0);
}

TEST_CASE("radial restraint on subgoals bounds the subgoal set") {
  // Call variance still opens p(?X), whose answers are unbounded without
  // answer abstraction, so the run ends on the operation limit.
  EvalOptions o;
  o.max_ops = 20000;
  std::map<int, std::set<std::string>> expected = {
      {1, {"p(a)", "p(s(?_G1))", "p(?_G1)"}},
      {2, {"p(a)", "p(s(a))", "p(s(s(?_G1)))", "p(s(?_G1))", "p(?_G1)"}}};
  for (int k : {1, 2}) {
    auto h = run(programs::radial_subgoal(k), "p(a)", Theory::AtDefault, o);
    CHECK(h->state() == EvalState::Failed);
    CHECK(h->limit_exceeded());
    std::set<std::string> ps;
    for (const auto& s : table_set(*h))
      if (s.rfind("p(", 0) == 0) ps.insert(s);
    CHECK(ps == expected[k]);
    for (const auto& s : ps) CHECK(term_depth(parse_term(s)) <= static_cast<std::size_t>(k) + 1);
  }
}

TEST_CASE("skip restraint: step program has eleven answers") {
  auto h = run(programs::kStep, "step(?X)");
  REQUIRE(h->state() == EvalState::Completed);
  auto a = h->answers();
  REQUIRE(a.size() == 11);
  for (int i = 0; i < 10; ++i) {
    CHECK(a[i].tv == TruthValue::True);
    CHECK(a[i].text == "step(" + std::to_string(i + 1) + ")");
  }
  CHECK(a[10].tv == TruthValue::Undefined);
  CHECK(a[10].bindings.at(0).second.is_var());
}

TEST_CASE("skip restraint with a constant replacement") {
  auto h = run(programs::kSkipConstant, "q(?X)");
  auto m = answer_map(*h);
  CHECK(m.size() == 6);
  for (int i = 1; i <= 5; ++i) CHECK(m["q(" + std::to_string(i) + ")"] == TruthValue::True);
  CHECK(m["q(bounded)"] == TruthValue::Undefined);
}

TEST_CASE("unsafe negation restrains to undefined") {
  auto h = run(programs::kRunaway + std::string("s :- unot r(?X).\nt :- naf u(?Y).\nu(1).\n"), "s");
  REQUIRE(h->state() == EvalState::Completed);
  CHECK(answer_map(*h)["s"] == TruthValue::Undefined);
  auto h2 = run("t :- naf u(?Y).\nu(1).\n", "t");
  CHECK(answer_map(*h2)["t"] == TruthValue::Undefined);
  // ground at selection time behaves as tabled negation
  auto h3 = run("t(?Y) :- v(?Y), unot u(?Y).\nv(1). v(2).\nu(1).\n", "t(?Y)");
  auto m = answer_map(*h3);
  CHECK(m.size() == 1);
  CHECK(m["t(2)"] == TruthValue::True);
}

TEST_CASE("wish guard postpones a literal until its variable is bound") {
  const char* prog =
      "p(0,zero).\np(s(?X),?Y) :- p(?X,?Y).\nq(s(0)). q(s(s(0))).\n"
      "test(?X,?Y) :- wish(ground(?X))^p(?X,?Y) and q(?X).\n";
  auto h = run(prog, "test(?X,?Y)");
  REQUIRE(h->state() == EvalState::Completed);
  auto m = answer_map(*h);
  CHECK(m.size() == 2);
  CHECK(m["test(s(0),zero)"] == TruthValue::True);
  CHECK(m["test(s(s(0)),zero)"] == TruthValue::True);
  // a negative guarded literal whose guard never binds is undefined
  auto h2 = run("t :- wish(ground(?X))^naf r(?X).\nr(1).\n", "t");
  CHECK(answer_map(*h2)["t"] == TruthValue::Undefined);
}

TEST_CASE("undefined builtin marks the answer") {
  auto h = run("p(1) :- undefined.\np(2).\n", "p(?X)");
  auto m = answer_map(*h);
  CHECK(m["p(1)"] == TruthValue::Undefined);
  CHECK(m["p(2)"] == TruthValue::True);
}

TEST_CASE("arithmetic and comparison builtins") {
  auto h = run("v(?X) :- ?X is (3 + 4) * 2 - 10 / 5.\nw(?X) :- v(?X), ?X >= 12, ?X =< 12, ?X =:= 12, ?X =\\= 3.\n",
               "w(?X)");
  CHECK(answer_map(*h)["w(12)"] == TruthValue::True);
  auto h2 = run("m(?X) :- ?X is 7 mod 3.\nn(?X) :- m(?X), ?X \\= 2, ?X = 1.\n", "n(?X)");
  CHECK(answer_map(*h2).size() == 1);
}

TEST_CASE("instantiation errors fail the evaluation") {
  auto h = run("p(?X) :- ?X is ?Y + 1.\n", "p(?X)");
  CHECK(h->state() == EvalState::Failed);
  CHECK(h->error().find("instantiation") != std::string::npos);
}

TEST_CASE("operation limit fails with tables retained") {
  EvalOptions o;
  o.max_ops = 50000;
  auto h = run(programs::kRunaway, "r(a)", Theory::AtDefault, o);
  CHECK(h->state() == EvalState::Failed);
  CHECK(h->limit_exceeded());
  auto snap = h->table_snapshot();
  CHECK(snap.size() > 1000);
  CHECK(std::none_of(snap.begin(), snap.end(), [](const Table& t) { return t.complete; }));
}

TEST_CASE("defeasibility on the cells knowledge base") {
  const std::string goal = "cell52[has->nucleus]";
  auto h = run(programs::kCells, goal);
  CHECK(truth(*h, goal) == TruthValue::False);
  auto hn = run(programs::kCells, "neg " + goal);
  CHECK(truth(*hn, "neg " + goal) == TruthValue::True);

  for (const char* kb : {programs::kCellsNoOverride, programs::kCellsCyclic}) {
    auto p = run(kb, goal);
    CHECK(truth(*p, goal) == TruthValue::Undefined);
    auto n = run(kb, "neg " + goal);
    CHECK(truth(*n, "neg " + goal) == TruthValue::Undefined);
  }
  auto s = run(programs::kCells, goal, Theory::AtSimple);
  CHECK(truth(*s, goal) == TruthValue::Undefined);
}

TEST_CASE("hilog and frames evaluate through the encoding") {
  auto h = run("eukaryotic(cell)(c1).\nk(?K)(?X) :- ?K(cell)(?X).\n", "k(?K)(?X)");
  auto m = answer_map(*h);
  CHECK(m["k(eukaryotic)(c1)"] == TruthValue::True);
  auto f = run("o1[color->red].\no1 # thing.\nthing :: object.\n", "o1 # ?C");
  CHECK(answer_map(*f).size() == 2);
}

TEST_CASE("compound goals go through the query wrapper") {
  auto h = run(programs::kWin, "move(?X,?Y) and naf win(?Y)");
  auto a = h->answers();
  REQUIRE(a.size() == 2);
  CHECK(a[0].bindings.size() == 2);
  CHECK(a[0].bindings[0].first == "X");
  std::set<std::string> xs;
  for (const auto& x : a) xs.insert(display_text(x.bindings[0].second));
  CHECK(xs == std::set<std::string>{"b"});
}

TEST_CASE("anytime evaluation returns the last completed radius") {
  auto kb = programs::compile_text(programs::kRadial);
  auto r = evaluate_anytime(kb, parse_goal("p(?Y)"), 5000, {1, 2, 3});
  CHECK(r.complete);
  CHECK(r.radius_reached == 3);
  std::set<std::string> t;
  for (const auto& a : r.answers)
    if (a.tv == TruthValue::True) t.insert(a.text);
  CHECK(t == std::set<std::string>{"p(0)", "p(s(0))", "p(s(s(0)))"});

  auto one = evaluate_anytime(kb, parse_goal("p(?Y)"), 5000, {1});
  CHECK(one.radius_reached == 1);
  std::set<std::string> t1;
  for (const auto& a : one.answers)
    if (a.tv == TruthValue::True) t1.insert(a.text);
  CHECK(t1 == std::set<std::string>{"p(0)"});

  auto kw = programs::compile_text(programs::kWin);
  auto w = evaluate_anytime(kw, parse_goal("win(?X)"), 5000, {1, 2, 3});
  CHECK(w.rounds_completed.size() == 1);
  CHECK(w.answers.size() == 1);
}

TEST_CASE("evaluation is deterministic") {
  for (const auto& b : programs::benchmarks()) {
    auto a = run(b.program, b.goal);
    auto c = run(b.program, b.goal);
    CHECK_MESSAGE(a->op_count() == c->op_count(), b.name);
    auto ta = a->table_snapshot();
    auto tc = c->table_snapshot();
    REQUIRE(ta.size() == tc.size());
    for (std::size_t i = 0; i < ta.size(); ++i) {
      CHECK(canonical_text(ta[i].subgoal) == canonical_text(tc[i].subgoal));
      REQUIRE(ta[i].answers.size() == tc[i].answers.size());
      for (std::size_t j = 0; j < ta[i].answers.size(); ++j)
        CHECK(canonical_text(ta[i].answers[j].literal) == canonical_text(tc[i].answers[j].literal));
    }
  }
}

TEST_CASE("benchmarks complete") {
  for (const auto& b : programs::benchmarks()) {
    auto h = run(b.program, b.goal);
    CHECK_MESSAGE(h->state() == EvalState::Completed, b.name << ": " << h->error());
  }
}

TEST_CASE("table invariants: variance dedup and restraint soundness") {
  for (const auto& b : programs::benchmarks()) {
    auto h = run(b.program, b.goal);
    auto snap = h->table_snapshot();
    std::set<std::string> keys;
    for (const auto& t : snap) {
      CHECK(keys.insert(canonical_text(t.subgoal)).second);
      CHECK(t.call_count >= t.callers.size());
      std::set<std::string> ans;
      for (const auto& a : t.answers) {
        CHECK(ans.insert(canonical_text(a.literal)).second);
        CHECK(subsumes(t.subgoal, a.literal));
        if (a.tv() == TruthValue::True) CHECK(a.delays.empty());
        for (const auto& d : a.delays)
          for (const auto& e : d)
            if (e.kind == DelayElem::Kind::Marker) CHECK(a.tv() != TruthValue::True);
      }
    }
  }
}

TEST_CASE("oracle: hand examples") {
  auto loop = wfs_oracle({{"p", {}, {"q"}}, {"q", {}, {"p"}}});
  CHECK(loop.true_atoms.empty());
  CHECK(loop.undefined_atoms == std::set<std::string>{"p", "q"});
  auto pos = wfs_oracle({{"a", {}, {}}, {"b", {"a"}, {}}});
  CHECK(pos.true_atoms == std::set<std::string>{"a", "b"});
  std::vector<GroundRule> win = {{"move(a,b)", {}, {}}, {"move(b,a)", {}, {}}, {"move(b,c)", {}, {}}};
  for (auto [x, y] : std::vector<std::pair<std::string, std::string>>{{"a", "b"}, {"b", "a"}, {"b", "c"}})
    win.push_back({"win(" + x + ")", {"move(" + x + "," + y + ")"}, {"win(" + y + ")"}});
  auto wm = wfs_oracle(win);
  CHECK(wm.value("win(b)") == TruthValue::True);
  CHECK(wm.value("win(a)") == TruthValue::False);
  CHECK(wm.undefined_atoms.empty());
}

TEST_CASE("property: engine agrees with the oracle on random ground programs") {
  for (unsigned seed = 1; seed <= 200; ++seed) {
    programs::RandomProgram p = programs::random_program(seed);
    WfsModel model = wfs_oracle(p.rules);
    auto kb = programs::compile_text(p.text, Theory::None);
    Engine e(kb);
    for (const auto& a : p.atoms) {
      Term enc = encode_literal(parse_literal(a));
      e.solve(enc);
      TruthValue got = e.truth_of(enc);
      CHECK_MESSAGE(got == model.value(a), "seed " << seed << " atom " << a);
    }
  }
}

TEST_CASE("timed_call with a resuming handler is transparent") {
  for (const auto& b : programs::benchmarks()) {
    auto plain = run(b.program, b.goal);
    auto kb = programs::compile_text(b.program);
    int calls = 0;
    auto h = timed_call(kb, parse_goal(b.goal), 1, [&](EvaluationHandle& eh) {
      ++calls;
      CHECK(eh.state() == EvalState::Paused);
      CHECK_NOTHROW(eh.table_snapshot());
      return HandlerAction::Resume;
    });
    CHECK(h->state() == EvalState::Completed);
    auto x = plain->answers();
    auto y = h->answers();
    REQUIRE(x.size() == y.size());
    for (std::size_t i = 0; i < x.size(); ++i) {
      CHECK(x[i].text == y[i].text);
      CHECK(x[i].tv == y[i].tv);
    }
  }
}

TEST_CASE("timer handler fires on a long workload and abort preserves tables") {
  auto kb = programs::compile_text(programs::kLongCount);
  int calls = 0;
  auto h = timed_call(kb, parse_goal("cnt(?X)"), 20, [&](EvaluationHandle&) {
    return ++calls >= 3 ? HandlerAction::Abort : HandlerAction::Resume;
  });
  CHECK(calls == 3);
  CHECK(h->state() == EvalState::Aborted);
  auto snap = h->table_snapshot();
  REQUIRE(!snap.empty());
  CHECK(!snap[0].complete);
  CHECK(!snap[0].answers.empty());
}

TEST_CASE("pause and resume from another thread") {
  auto kb = programs::compile_text(programs::kLongCount);
  EvalOptions o;
  o.capture_log = true;
  EvaluationHandle h(kb, parse_goal("cnt(?X)"), o);
  h.start();
  std::this_thread::sleep_for(std::chrono::milliseconds(30));
  if (h.state() == EvalState::Running) CHECK_THROWS_AS(h.table_snapshot(), SnapshotWhileRunning);
  h.request_pause();
  while (h.state() == EvalState::Running) std::this_thread::yield();
  CHECK(h.state() == EvalState::Paused);
  auto snap = h.table_snapshot();
  CHECK(!snap.empty());
  h.set_logging(true);
  h.resume();
  h.wait();
  CHECK(h.state() == EvalState::Completed);
  CHECK(h.answers().size() == 400001);
  Log log = h.captured_log();
  CHECK(!log.events.empty());
  CHECK(log.partial());
  CHECK(log.events.front().kind == EventKind::Resumed);
}

TEST_CASE("abort request stops a background run") {
  auto kb = programs::compile_text(programs::kLongCount);
  EvaluationHandle h(kb, parse_goal("cnt(?X)"));
  h.start();
  h.request_abort();
  h.wait();
  CHECK(h.state() == EvalState::Aborted);
}
