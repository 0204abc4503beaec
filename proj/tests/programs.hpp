#pragma once

// Programs shared by the unit tests, the acceptance binary and benchmarks.

#include <memory>
#include <string>
#include <vector>

#include "silk/engine.hpp"
#include "silk/reader.hpp"
#include "silk/transform.hpp"

namespace programs {

inline const char* kWin =
    "move(a,b). move(b,a). move(b,c).\n"
    "win(?X) :- move(?X,?Y) and naf win(?Y).\n";

inline const char* kNafLoop = "p :- naf q.\nq :- naf p.\n";

inline const char* kCells =
    "cell52 # red(blood(cell)).\n"
    "@!{r1} ?C[has->nucleus] :- ?C # eukaryotic(cell).\n"
    "red(blood(cell)) :: eukaryotic(cell).\n"
    "@!{r2} neg ?C[has->nucleus] :- ?C # red(blood(cell)).\n"
    "overrides(r2, r1).\n";

inline const char* kCellsNoOverride =
    "cell52 # red(blood(cell)).\n"
    "@!{r1} ?C[has->nucleus] :- ?C # eukaryotic(cell).\n"
    "red(blood(cell)) :: eukaryotic(cell).\n"
    "@!{r2} neg ?C[has->nucleus] :- ?C # red(blood(cell)).\n";

inline const char* kCellsCyclic =
    "cell52 # red(blood(cell)).\n"
    "@!{r1} ?C[has->nucleus] :- ?C # eukaryotic(cell).\n"
    "red(blood(cell)) :: eukaryotic(cell).\n"
    "@!{r2} neg ?C[has->nucleus] :- ?C # red(blood(cell)).\n"
    "overrides(r2, r1).\noverrides(r1, r2).\n";

inline const char* kRadial =
    ":- table p/1 as subgoal_abstract(2), answer_abstract(3).\n"
    "p(0).\np(s(?X)) :- p(?X).\np(?X) :- p(s(?X)).\n";

inline std::string radial_subgoal(int k) {
  return ":- table p/1 as subgoal_abstract(" + std::to_string(k) +
         ").\np(0).\np(s(?X)) :- p(?X).\np(?X) :- p(s(?X)).\n";
}

inline const char* kRadialPlain = "p(0).\np(s(?X)) :- p(?X).\np(?X) :- p(s(?X)).\n";

inline const char* kStep =
    "step(1).\n"
    "step(?N1) :- step(?N), ?N1 is ?N + 1.\n"
    "skip(step(?N),[?N],[_]) :- ?N > 10.\n";

inline const char* kSkipConstant =
    "q(1). q(2). q(3). q(4). q(5). q(6). q(7).\n"
    "skip(q(?X),[?X],[bounded]) :- ?X > 5.\n";

inline const char* kRunaway = "r(?X) :- r(s(?X)).\n";

inline const char* kNat = "nat(0).\nnat(s(?X)) :- nat(?X).\n";

inline const char* kTerminyzerPQ =
    "p(0,zero).\n"
    "p(s(?X),?Y) :- p(?X,?Y).\n"
    "q(s(0)). q(s(s(0))).\n"
    "test(?X,?Y) :- p(?X,?Y) and q(?X).\n";

inline const char* kVacuole =
    "forall(?x6)^contractile(vacuole)(?x6) ==> forall(?x9)^isotonic(environment)(?x9) ==> "
    "inactive(in(?x9))(?x6).\n";

struct Benchmark {
  std::string name;
  std::string program;
  std::string goal;
};

inline std::string chain(int n) {
  std::string s;
  for (int i = 0; i < n; ++i) s += "e(n" + std::to_string(i) + ",n" + std::to_string(i + 1) + ").\n";
  return s;
}

/// Twenty terminating programs covering recursion, negation and restraint.
inline std::vector<Benchmark> benchmarks() {
  std::vector<Benchmark> b;
  b.push_back({"win_move", kWin, "win(?X)"});
  b.push_back({"naf_loop", kNafLoop, "p"});
  b.push_back({"cells", kCells, "cell52[has->?V]"});
  b.push_back({"cells_rebut", kCellsNoOverride, "neg cell52[has->nucleus]"});
  b.push_back({"radial", kRadial, "p(?Y)"});
  b.push_back({"step_skip", kStep, "step(?X)"});
  b.push_back({"skip_constant", kSkipConstant, "q(?X)"});
  b.push_back({"tc_chain", chain(60) + "tc(?X,?Y) :- e(?X,?Y).\ntc(?X,?Z) :- tc(?X,?Y), e(?Y,?Z).\n", "tc(n0,?Y)"});
  b.push_back({"tc_left", chain(40) + "tc(?X,?Y) :- e(?X,?Y).\ntc(?X,?Z) :- e(?X,?Y), tc(?Y,?Z).\n", "tc(?X,?Y)"});
  b.push_back({"cycle_reach",
               "e(a,b). e(b,c). e(c,d). e(d,a). e(d,x).\nr(?X,?Y) :- e(?X,?Y).\nr(?X,?Y) :- e(?X,?Z), r(?Z,?Y).\n",
               "r(a,?Y)"});
  b.push_back({"even_odd",
               "num(0).\nnum(?M) :- num(?N), ?N < 40, ?M is ?N + 1.\n"
               "even(0).\neven(?M) :- num(?M), ?M > 0, ?N is ?M - 1, naf even(?N).\n",
               "even(?X)"});
  b.push_back({"stratified",
               "bird(tweety). bird(polly). penguin(polly).\nab(?X) :- penguin(?X).\n"
               "flies(?X) :- bird(?X), naf ab(?X).\n",
               "flies(?X)"});
  b.push_back({"odd_loop", "p(a) :- naf p(a).\nq :- p(a).\nr :- naf q.\n", "r"});
  b.push_back({"positive_loop", "p :- q.\nq :- p.\ns :- naf p.\n", "s"});
  b.push_back({"vacuole",
               std::string(kVacuole) + "contractile(vacuole)(v1).\nisotonic(environment)(e1).\n",
               "inactive(in(?E))(?V)"});
  b.push_back({"same_generation",
               "par(a,b). par(a,c). par(b,d). par(c,e). par(d,f). par(e,g).\n"
               "sg(?X,?X) :- par(?_P,?X).\nsg(?X,?Y) :- par(?PX,?X), sg(?PX,?PY), par(?PY,?Y).\n",
               "sg(f,?Y)"});
  b.push_back({"forall_body",
               "p(x,a). p(x,b). p(y,a). q(a). q(b).\nall(?X) :- p(?X,?_), forall(?Z)^(q(?Z) ==> p(?X,?Z)).\n",
               "all(?X)"});
  b.push_back({"hilog",
               "eukaryotic(cell)(c1). eukaryotic(cell)(c2).\nkind(?K)(?X) :- ?K(cell)(?X).\n", "kind(?K)(?X)"});
  b.push_back({"unot_unsafe", "s :- unot r(?X).\n", "s"});
  b.push_back({"counting",
               "cnt(0).\ncnt(?M) :- cnt(?N), ?N < 500, ?M is ?N + 1.\n"
               "big(?X) :- cnt(?X), ?X > 490.\n",
               "big(?X)"});
  return b;
}

/// A single-table workload long enough for timer interrupts.
inline const char* kLongCount = "cnt(0).\ncnt(?M) :- cnt(?N), ?N < 400000, ?M is ?N + 1.\n";

inline std::shared_ptr<const silk::CompiledKB> compile_text(const std::string& text,
                                                            silk::Theory th = silk::Theory::AtDefault) {
  return std::make_shared<const silk::CompiledKB>(silk::compile(silk::parse_program(text), th));
}

}  // namespace programs
