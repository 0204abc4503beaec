#pragma once

// Random ground normal programs for oracle comparisons.

#include <random>
#include <string>
#include <vector>

#include "silk/engine.hpp"

namespace programs {

struct RandomProgram {
  std::string text;
  std::vector<silk::GroundRule> rules;
  std::vector<std::string> atoms;
};

inline RandomProgram random_program(unsigned seed) {
  std::mt19937 rng(seed);
  auto pick = [&](int lo, int hi) { return std::uniform_int_distribution<int>(lo, hi)(rng); };
  RandomProgram p;
  int n = pick(2, 40);
  int m = pick(1, 120);
  for (int i = 0; i < n; ++i) p.atoms.push_back("a" + std::to_string(i));
  for (int r = 0; r < m; ++r) {
    silk::GroundRule g;
    g.head = p.atoms[pick(0, n - 1)];
    int len = pick(0, 4);
    std::string line = g.head;
    for (int k = 0; k < len; ++k) {
      const std::string& a = p.atoms[pick(0, n - 1)];
      bool neg = pick(0, 2) == 0;
      (neg ? g.neg : g.pos).push_back(a);
      line += (k == 0 ? " :- " : ", ") + std::string(neg ? "naf " : "") + a;
    }
    p.text += line + ".\n";
    p.rules.push_back(std::move(g));
  }
  return p;
}

}  // namespace programs
