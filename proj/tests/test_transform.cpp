#include "doctest.h"

#include <algorithm>

#include "silk/reader.hpp"
#include "silk/transform.hpp"
#include "term_gen.hpp"

using namespace silk;

namespace {

const char* kVacuole =
    "forall(?x6)^contractile(vacuole)(?x6) ==> forall(?x9)^isotonic(environment)(?x9) ==> "
    "inactive(in(?x9))(?x6).";

std::vector<std::string> texts(const std::vector<Rule>& rs) {
  std::vector<std::string> out;
  for (const auto& r : rs) out.push_back(to_text(r.head) + " :- " + to_text(*r.body));
  return out;
}

std::vector<NormalRule> user_rules(const CompiledKB& kb) {
  std::vector<NormalRule> out;
  for (const auto& r : kb.rules)
    if (r.origin == RuleOrigin::User || r.origin == RuleOrigin::OmniContrapositive ||
        r.origin == RuleOrigin::LtAuxiliary)
      out.push_back(r);
  return out;
}

}  // namespace

TEST_CASE("omni: vacuole rule yields the positive rule and two contrapositives") {
  auto p = parse_program(kVacuole);
  auto rs = omni_transform(p.rules[0]);
  REQUIRE(rs.size() == 3);
  auto t = texts(rs);
  CHECK(t[0] == "inactive(in(?x9))(?x6) :- contractile(vacuole)(?x6) and isotonic(environment)(?x9)");
  CHECK(t[1] == "neg contractile(vacuole)(?x6) :- isotonic(environment)(?x9) and neg inactive(in(?x9))(?x6)");
  CHECK(t[2] == "neg isotonic(environment)(?x9) :- contractile(vacuole)(?x6) and neg inactive(in(?x9))(?x6)");
  CHECK(rs[1].id == rs[0].id + "_c1");
  CHECK(rs[1].tag == rs[0].tag);
}

TEST_CASE("omni: identity on ordinary rules, single implication, errors") {
  auto p = parse_program("p(?X) :- q(?X).\na ==> b.\n");
  CHECK(omni_transform(p.rules[0]).size() == 1);
  auto rs = omni_transform(p.rules[1]);
  REQUIRE(rs.size() == 2);
  CHECK(to_text(rs[0].head) == "b");
  CHECK(to_text(*rs[1].body) == "neg b");
  CHECK(to_text(rs[1].head) == "neg a");
  auto bad = parse_program("a or b. \n exists(?X)^p(?X).\n (naf a) ==> b.");
  for (const auto& r : bad.rules) CHECK_THROWS_AS(omni_transform(r), UnsupportedHead);
}

TEST_CASE("property: omni output count is hypotheses plus one") {
  for (int n = 1; n <= 6; ++n) {
    std::string src;
    for (int i = 0; i < n; ++i) src += "h" + std::to_string(i) + "(?X) ==> ";
    src += "c(?X).";
    auto p = parse_program(src);
    CHECK(omni_transform(p.rules[0]).size() == static_cast<std::size_t>(n + 1));
  }
}

TEST_CASE("Lloyd-Topor: forall with equivalence") {
  auto p = parse_program("p_equivalent(?X,?Y) :- forall(?Z)(p(?Z,?X) <==> p(?Z,?Y)).");
  LtContext ctx;
  auto rs = lloyd_topor(p.rules[0], ctx);
  REQUIRE(rs.size() == 3);
  CHECK(to_text(rs[0].head) == "p_equivalent(?X,?Y)");
  REQUIRE(rs[0].body.size() == 1);
  CHECK(to_text(rs[0].body[0]) == "naf aux1(?X,?Y)");
  CHECK(to_text(rs[1].head) == "aux1(?X,?Y)");
  CHECK(to_text(rs[1].body[0]) + " and " + to_text(rs[1].body[1]) == "p(?Z,?X) and naf p(?Z,?Y)");
  CHECK(to_text(rs[2].body[0]) + " and " + to_text(rs[2].body[1]) == "p(?Z,?Y) and naf p(?Z,?X)");
  CHECK(rs[1].auxiliary);
  CHECK(rs[1].strict);
}

TEST_CASE("Lloyd-Topor: disjunction split and naf of a conjunction") {
  LtContext ctx;
  auto p = parse_program("h :- a or b.\nh :- naf (a and b).\n");
  auto r1 = lloyd_topor(p.rules[0], ctx);
  REQUIRE(r1.size() == 2);
  CHECK(to_text(r1[0].body[0]) == "a");
  CHECK(to_text(r1[1].body[0]) == "b");
  auto r2 = lloyd_topor(p.rules[1], ctx);
  REQUIRE(r2.size() == 2);
  CHECK(to_text(r2[0].body[0]) == "naf aux1");
  CHECK(r2[1].body.size() == 2);
}

TEST_CASE("Lloyd-Topor: aux names skip user predicates") {
  auto p = parse_program("aux1 :- a. h :- naf (a and b).");
  CompiledKB kb = compile(p, Theory::None);
  bool found = false;
  for (const auto& r : kb.rules)
    if (literal_text(r.head) == "aux2") found = true;
  CHECK(found);
}

TEST_CASE("Lloyd-Topor: body implication becomes naf of an auxiliary") {
  LtContext ctx;
  auto p = parse_program("h(?X) :- d(?X), (p(?X) ==> q(?X)).");
  auto rs = lloyd_topor(p.rules[0], ctx);
  REQUIRE(rs.size() == 2);
  CHECK(to_text(rs[0].body[1]) == "naf aux1(?X)");
  CHECK(to_text(rs[1].body[0]) == "p(?X)");
  CHECK(to_text(rs[1].body[1]) == "naf q(?X)");
}

TEST_CASE("encoding") {
  Term t = parse_term("p(a,b)");
  CHECK(canonical_text(encode_literal({false, t})) == "apply(p,a,b)");
  Term h = parse_term("eukaryotic(cell)(?x1)");
  Term eh = encode_literal({false, h});
  CHECK(canonical_text(eh) == "apply(apply(eukaryotic,cell),?_G1)");
  Term nf = encode_literal({true, parse_term("frame(cell52,has,nucleus)")});
  CHECK(canonical_text(nf) == "frame_neg(cell52,has,nucleus)");
  CHECK(canonical_text(encode_literal({true, t})) == "apply(negf(p),a,b)");
  CHECK(predicate_key(eh) == "eukaryotic(1)/1");
  CHECK(predicate_key(encode_literal({true, t})) == "neg p/2");
  CHECK(predicate_key(nf) == "neg frame/3");
  CHECK(neg_twin(neg_twin(eh)) == eh);
  Literal back = decode_literal(nf);
  CHECK(back.negated);
  CHECK(to_text(back) == "neg cell52[has->nucleus]");
  // User atoms that collide with the encoding vocabulary survive a round trip.
  Term tricky = parse_term("apply(negf(x), '$y')");
  CHECK(decode_term(encode_term(tricky)) == tricky);
}

TEST_CASE("property: decode(encode(t)) = t and encode is injective") {
  std::vector<Term> seen;
  for (unsigned seed = 0; seed < 300; ++seed) {
    testgen::TermGen g(seed);
    Term t = g.literal(3);
    for (bool neg : {false, true}) {
      Term e = encode_literal({neg, t});
      Literal d = decode_literal(e);
      CHECK(d.negated == neg);
      CHECK(d.atom == t);
    }
    CHECK(decode_term(encode_term(t)) == t);
    Term e = encode_term(t);
    for (const auto& s : seen)
      if (is_variant(s, e)) CHECK(is_variant(decode_term(s), t));
    seen.push_back(e);
  }
}

TEST_CASE("defeasibility: one naf defeated per defeasible rule, none for strict") {
  auto p = parse_program(
      "@!{r1} a(?X) :- b(?X).\n"
      "@@strict c(?X) :- b(?X).\n"
      "b(1).\n"
      "@!{r2[tag->t2]} neg a(?X) :- d(?X).\n");
  CompiledKB kb = compile(p, Theory::AtDefault);
  int defeasible = 0;
  for (const auto& r : kb.rules) {
    int n = 0;
    for (const auto& b : r.body)
      if (b.atom.is_app("defeated", 1)) ++n;
    if (r.origin == RuleOrigin::User) {
      CHECK(n == (r.defeasible ? 1 : 0));
      if (r.defeasible) {
        ++defeasible;
        CHECK(r.body.back().mode == NafMode::Naf);
      }
    }
  }
  CHECK(defeasible == 2);
  CHECK(kb.headof.size() == 2);
  bool opp = false;
  for (const auto& r : kb.rules)
    if (canonical_text(r.head) == "opposes(r1,t2)") opp = true;
  CHECK(opp);
  CHECK(kb.tag_index.at("r2") == Term::atom("t2"));
}

TEST_CASE("theories") {
  auto simple = parse_program(theory_source(Theory::AtSimple));
  CHECK(simple.rules.size() == 5);
  CHECK(to_text(simple.rules[0]).find("defeated(?T) :- (refutes(?T2,?T) or rebuts(?T2,?T)) and candidate(?T2)") !=
        std::string::npos);
  auto dflt = parse_program(theory_source(Theory::AtDefault));
  CHECK(dflt.rules.size() == 5);
  CHECK(theory_source(Theory::None).empty());
}

TEST_CASE("empty program has only frame axioms and theory rules") {
  CompiledKB none = compile(parse_program(""), Theory::None);
  CHECK(none.rules.size() == 2);
  for (const auto& r : none.rules) CHECK(r.origin == RuleOrigin::FrameAxiom);
  CompiledKB dflt = compile(parse_program(""), Theory::AtDefault);
  for (const auto& r : dflt.rules)
    CHECK((r.origin == RuleOrigin::FrameAxiom || r.origin == RuleOrigin::DefeasibilityTheory));
  CHECK(dflt.rules.size() == 9);
}

TEST_CASE("vacuole compiles to three encoded rules, two contrapositives") {
  CompiledKB kb = compile(parse_program(kVacuole), Theory::None);
  auto us = user_rules(kb);
  REQUIRE(us.size() == 3);
  CHECK(std::count_if(us.begin(), us.end(), [](const NormalRule& r) {
          return r.origin == RuleOrigin::OmniContrapositive;
        }) == 2);
}

TEST_CASE("cells KB structure") {
  const char* cells =
      "cell52 # red(blood(cell)).\n"
      "@!{r1} ?C[has->nucleus] :- ?C # eukaryotic(cell).\n"
      "red(blood(cell)) :: eukaryotic(cell).\n"
      "@!{r2} neg ?C[has->nucleus] :- ?C # red(blood(cell)).\n"
      "overrides(r2, r1).\n";
  CompiledKB kb = compile(parse_program(cells));
  int defeasible = 0, axioms = 0, theory = 0;
  for (const auto& r : kb.rules) {
    defeasible += r.defeasible;
    axioms += r.origin == RuleOrigin::FrameAxiom;
    theory += r.origin == RuleOrigin::DefeasibilityTheory;
  }
  CHECK(defeasible == 2);
  CHECK(axioms == 2);
  CHECK(theory >= 7);
}

TEST_CASE("skip compilation guards matching heads") {
  auto p = parse_program(
      "step(1).\n"
      "step(?N1) :- step(?N), ?N1 is ?N + 1.\n"
      "skip(step(?N),[?N],[_]) :- ?N > 10.\n");
  CompiledKB kb = compile(p, Theory::None);
  int guarded = 0;
  for (const auto& r : kb.rules)
    if (!r.body.empty() && r.body.back().atom.is_app("$skip", 6)) ++guarded;
  CHECK(guarded == 2);
  CompiledKB plain = compile(parse_program("step(1)."), Theory::None);
  for (const auto& r : plain.rules)
    for (const auto& b : r.body) CHECK_FALSE(b.atom.is_app("$skip", 6));
}

TEST_CASE("compile is deterministic") {
  const char* src = "@!{r1} p(?X) :- q(?X) or naf r(?X). q(a). r(b). s :- forall(?Y)^(q(?Y) ==> r(?Y)).";
  CompiledKB a = compile(parse_program(src)), b = compile(parse_program(src));
  REQUIRE(a.rules.size() == b.rules.size());
  for (std::size_t i = 0; i < a.rules.size(); ++i) CHECK(emit_text(a.rules[i]) == emit_text(b.rules[i]));
}

TEST_CASE("compile errors carry provenance") {
  try {
    compile(parse_program("p.\n a or b.\n"));
    FAIL("expected CompileError");
  } catch (const CompileError& e) {
    REQUIRE(e.diagnostics().size() == 1);
    CHECK(e.diagnostics()[0].line == 2);
  }
}
