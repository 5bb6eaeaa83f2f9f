#pragma once

// Brute-force reference quantities computed by listing every derivation
// straight from the production tables. Shared by the unit and acceptance
// suites; deliberately independent of the library's enumerator and BP code.

#include <vector>

#include "rhm/corruption.hpp"
#include "rhm/grammar.hpp"

namespace oracle {

struct Tree {
  // levels[l][node], l = 0 (leaves) .. L (root)
  std::vector<std::vector<rhm::Symbol>> levels;
  double prior = 0.0;
};

std::vector<Tree> AllTrees(const rhm::RuleSet& rules);

struct Posterior {
  // marginals[l] is node-major (node x v).
  std::vector<std::vector<double>> marginals;
  double evidence = 0.0;
};

// P(h | observation) for every node by direct summation over AllTrees.
Posterior Conditionals(const rhm::RuleSet& rules, const rhm::LeafLikelihoods& leaves);

// Likelihood of one observed token given the clean symbol, written from the
// kernel definitions rather than shared code.
double KernelLikelihood(rhm::NoiseKind kind, double keep, int vocab, rhm::Symbol observed,
                        rhm::Symbol clean);

}  // namespace oracle
