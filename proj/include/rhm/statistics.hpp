#pragma once

#include <cstddef>
#include <optional>
#include <span>
#include <vector>

#include "rhm/grammar.hpp"

namespace rhm {

// Token-token correlations pooled by tree distance. values[k] is the mean
// over position pairs with lowest common ancestor at levels[k] of
// ||C_ij||_F / v, C_ij the v x v covariance of the one-hot tokens. Dividing
// by v puts the independence floor at 1/(v sqrt(N)).
struct CorrelationReport {
  std::vector<int> levels;
  std::vector<std::size_t> distances;
  std::vector<double> values;
  std::vector<std::size_t> n_pairs;
  double samples = 0.0;
  double noise_floor = 0.0;

  // Value at LCA level `level`; throws if absent.
  double At(int level) const;
};

// Weighted joint counts of every ordered position pair (i < j). Shards can be
// accumulated independently and merged.
class TokenPairAccumulator {
 public:
  TokenPairAccumulator(const GrammarParams& params);

  void Add(std::span<const Symbol> row, double weight = 1.0);
  void Merge(const TokenPairAccumulator& other);
  double total_weight() const { return total_; }

  // `samples` is the N used for the noise floor; defaults to the total weight.
  CorrelationReport Report(std::optional<double> samples = std::nullopt) const;

 private:
  GrammarParams params_;
  std::size_t length_;
  std::size_t vocab_;
  double total_ = 0.0;
  std::vector<double> single_;
  std::vector<double> pair_;
};

CorrelationReport TokenTokenCorrelation(const Dataset& data,
                                        const GrammarParams& params);

// Exact population report using enumeration weights.
CorrelationReport PopulationTokenTokenCorrelation(const RuleSet& rules);

// C(mu, nu) = P[x_1 = mu, tuple = nu] - P[x_1 = mu] P[tuple = nu] where the
// tuple is the level-(level-2) block at positions s..2s-1 (0-based) of that
// level, whose lowest common ancestor with x_1 is at `level`.
struct TokenTupleCorrelation {
  int level = 0;
  int vocab = 0;
  int branching = 0;
  std::vector<std::size_t> tuple_codes;  // sorted, base-v
  std::vector<double> values;            // vocab x tuple_codes.size()
  std::vector<double> tuple_probs;
  std::vector<double> token_probs;

  std::size_t tuples() const { return tuple_codes.size(); }
  double At(int mu, std::size_t k) const { return values[mu * tuples() + k]; }
  // Root mean square over all v * v^s entries, unlisted tuples counting as 0.
  double RmsDense() const;
  // Root mean square over the tuples with nonzero probability.
  double RmsSupported() const;
  // Value for an arbitrary tuple code (0 if not listed).
  double Lookup(int mu, std::size_t code) const;
};

class TokenTupleAccumulator {
 public:
  TokenTupleAccumulator(int vocab, int branching, int level);
  void Add(Symbol token, std::size_t tuple_code, double weight = 1.0);
  void Merge(const TokenTupleAccumulator& other);
  TokenTupleCorrelation Finish() const;

 private:
  int vocab_;
  int branching_;
  int level_;
  double total_ = 0.0;
  std::vector<std::size_t> slot_of_code_;
  std::vector<std::size_t> codes_;
  std::vector<double> joint_;  // slots x vocab
};

// Empirical correlation from a dataset retaining latents (see ParseLatents).
TokenTupleCorrelation EmpiricalTokenTupleCorrelation(const Dataset& data,
                                                     const GrammarParams& params,
                                                     int level);

// Exact correlation by propagating rule probabilities; lists every one of
// the v^s tuple codes.
TokenTupleCorrelation PopulationTokenTupleCorrelation(const RuleSet& rules,
                                                      int level);

// Fills dataset latents from the grammar parse of every row. Rows that do not
// parse fully are rejected with kMissingLatents.
void ParseLatents(const RuleSet& rules, Dataset& data);

// RMS of (empirical - population) over the tuples the population assigns
// nonzero probability, i.e. the sampling noise of the estimator.
double TokenTupleSamplingNoise(const TokenTupleCorrelation& empirical,
                               const TokenTupleCorrelation& population);

// Predicted magnitudes for correlations whose LCA sits at `level`.
struct TheoryPrediction {
  int level = 0;
  double rule_density = 0.0;       // f
  double correlation = 0.0;        // C^(level)
  double sampling_noise = 0.0;     // (v^2 m P)^(-1/2), NaN without P
  double sample_complexity = 0.0;  // P_level
  double local_complexity = 0.0;   // P_1 = v m
};

// Throws kDivergent when f >= 1.
TheoryPrediction Theory(const GrammarParams& params, int level,
                        std::optional<double> samples = std::nullopt);

// v^(s-1) (v-1) / (m (v^s - 1)): ratio between consecutive squared
// correlation magnitudes over grammar draws.
double RecursionPrefactor(int vocab, int branching, int synonyms);

struct RecursionReport {
  int level = 0;
  int draws = 0;
  double lower_variance = 0.0;  // Var C^(level)
  double upper_variance = 0.0;  // Var C^(level+1)
  double ratio = 0.0;
  double predicted = 0.0;
};

// Draws n grammars of depth level+1 (seeds derived from params.seed) and
// compares the variance of the exact C^(level+1), LCA at the root, with that
// of C^(level) on the sub-grammar made of levels 2..level+1 of the same draw,
// so that C^(level+1) = sum_b p_1(mu | b) C^(level)(b, nu) holds per draw.
// Variances pool the entries of producible tuples (nonzero probability) over
// all draws. Requires at least 30 draws.
RecursionReport CorrelationRecursionCheck(const GrammarParams& params, int level,
                                          int n_grammars);

// Unbiased standard deviation of the exact C^(level) (LCA at the root) over n
// grammar draws of depth `level`, pooling the entries of producible tuples.
// Requires at least 30 draws.
double CorrelationMagnitude(const GrammarParams& params, int level, int n_grammars);

}  // namespace rhm
