#pragma once

#include <random>
#include <string>
#include <vector>

#include "silk/kernel.hpp"

namespace testgen {

// Small random term generator over a fixed signature.
struct TermGen {
  std::mt19937 rng;
  std::vector<silk::Term> vars;

  explicit TermGen(unsigned seed, int nvars = 3) : rng(seed) {
    for (int i = 0; i < nvars; ++i) vars.push_back(silk::Term::fresh_variable("V" + std::to_string(i)));
  }

  int pick(int n) { return std::uniform_int_distribution<int>(0, n - 1)(rng); }

  silk::Term term(int depth) {
    int choice = pick(depth > 0 ? 7 : 4);
    switch (choice) {
      case 0:
        return vars[pick(static_cast<int>(vars.size()))];
      case 1:
        return silk::Term::atom(pick(2) ? "a" : "b");
      case 2:
        return silk::Term::integer(pick(3));
      case 3:
        return pick(4) == 0 ? silk::Term::string("s t") : silk::Term::atom("c");
      case 4:
        return silk::Term::app("f", {term(depth - 1)});
      case 5:
        return silk::Term::app("g", {term(depth - 1), term(depth - 1)});
      default:
        // Hilog functor position.
        return silk::Term::app(silk::Term::app("h", {term(depth - 1)}), {term(depth - 1)});
    }
  }

  silk::Term literal(int depth) {
    int n = 1 + pick(2);
    std::vector<silk::Term> args;
    for (int i = 0; i < n; ++i) args.push_back(term(depth));
    return silk::Term::app(pick(2) ? "p" : "q", std::move(args));
  }
};

}  // namespace testgen
