#pragma once

#include <span>
#include <vector>

#include "rhm/corruption.hpp"
#include "rhm/grammar.hpp"
#include "rhm/rng.hpp"

namespace rhm {

// Sum-product messages and marginals on the RHM tree. Each per-level vector
// is row-major (node x v). Messages are normalized to sum to one; the scale
// factors are accumulated in log_partition, which equals the log evidence
// sum_x P(x) prod_i likelihood_i(x_i).
struct BeliefState {
  int vocab = 0;
  std::vector<std::vector<double>> upward;
  std::vector<std::vector<double>> downward;
  std::vector<std::vector<double>> marginals;
  double log_partition = 0.0;

  std::span<const double> Upward(int level, std::size_t node) const {
    return Slice(upward, level, node);
  }
  std::span<const double> Downward(int level, std::size_t node) const {
    return Slice(downward, level, node);
  }
  std::span<const double> Marginal(int level, std::size_t node) const {
    return Slice(marginals, level, node);
  }

 private:
  std::span<const double> Slice(const std::vector<std::vector<double>>& v,
                                int level, std::size_t node) const {
    return {v[level].data() + node * vocab, static_cast<std::size_t>(vocab)};
  }
};

// Exact marginals of every node given leaf likelihoods. Rule factor is 1/m
// for each of a symbol's productions, root prior 1/v. Throws
// kImpossibleEvidence when the evidence has probability zero.
BeliefState BpMarginals(const RuleSet& rules, const LeafLikelihoods& leaves);

// Exact posterior draw: upward pass, then root and rule choices sampled
// top-down from their conditionals.
Derivation BpPosteriorSample(const RuleSet& rules, const LeafLikelihoods& leaves,
                             Rng& rng);

// E[x(0) | x(t)] as d x v row-major leaf marginals.
std::vector<double> DenoiseExpectation(const RuleSet& rules,
                                       std::span<const Symbol> noisy,
                                       const NoiseSpec& spec);

}  // namespace rhm
