#pragma once

#include <optional>
#include <span>
#include <vector>

#include "rhm/grammar.hpp"
#include "rhm/rng.hpp"

namespace rhm {

enum class NoiseKind { kUniform, kMasking };

// Forward corruption: either a per-step schedule beta_1..beta_T or a single
// cumulative corruption probability beta_bar.
struct NoiseSpec {
  NoiseKind kind = NoiseKind::kMasking;
  std::vector<double> schedule;
  std::optional<double> beta_bar;

  static NoiseSpec Cumulative(NoiseKind kind, double beta_bar);
  static NoiseSpec Scheduled(NoiseKind kind, std::vector<double> betas);

  void Validate() const;
};

// Linear ramp beta_t = start + (end - start) (t - 1) / (T - 1), t = 1..T.
std::vector<double> LinearSchedule(int steps, double beta_start = 1e-4,
                                   double beta_end = 0.02);

// Probability that a token is never hit: prod_t (1 - beta_t), or
// 1 - beta_bar. For the uniform kind a hit resamples uniformly over all v
// symbols, so it may reproduce the original value.
double CumulativeKeepProb(const NoiseSpec& spec);

struct Corrupted {
  std::vector<Symbol> tokens;
  std::vector<bool> hit;
};

// One-shot corruption at the cumulative level. Masked tokens take the value
// `vocab` (the mask id).
Corrupted Corrupt(std::span<const Symbol> x, int vocab, const NoiseSpec& spec,
                  Rng& rng);

// Step-by-step corruption through every beta_t of the schedule; `hit` marks
// positions touched at least once. Only used to cross-check the cumulative
// kernel.
Corrupted CorruptTrajectory(std::span<const Symbol> x, int vocab,
                            const NoiseSpec& spec, Rng& rng);

// Row-major d x v likelihoods P(observation | clean symbol).
struct LeafLikelihoods {
  std::size_t length = 0;
  int vocab = 0;
  std::vector<double> values;

  std::span<const double> At(std::size_t i) const {
    return {values.data() + i * vocab, static_cast<std::size_t>(vocab)};
  }
  std::span<double> At(std::size_t i) {
    return {values.data() + i * vocab, static_cast<std::size_t>(vocab)};
  }
};

LeafLikelihoods ComputeLeafLikelihoods(std::span<const Symbol> noisy, int vocab,
                                       const NoiseSpec& spec);

// One-hot likelihoods of a clean sequence.
LeafLikelihoods CleanLikelihoods(std::span<const Symbol> x, int vocab);

}  // namespace rhm
