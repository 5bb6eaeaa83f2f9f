#pragma once

#include <cstddef>
#include <vector>

#include "rhm/grammar.hpp"
#include "rhm/statistics.hpp"

namespace rhm {

// (tuple, label) pairs: the first s tokens of a row and the token after them.
struct NextTokenData {
  int vocab = 0;
  int branching = 0;
  std::vector<std::size_t> tuple_codes;
  std::vector<Symbol> labels;
  std::vector<double> weights;  // empty means unit weights
};

NextTokenData NextTokenPairs(const Dataset& data, const GrammarParams& params);

// Every derivation of the grammar, weighted by its probability.
NextTokenData PopulationNextTokenPairs(const RuleSet& rules);

// Linear softmax classifier over the one-hot tuple, W: v labels x observed
// tuples, initialized to log P(label) in every column and moved by one full
// batch gradient step on the mean cross-entropy.
struct OneStepModel {
  int vocab = 0;
  double eta = 0.0;
  std::vector<std::size_t> tuple_codes;  // sorted, observed
  std::vector<double> init;              // log P(label), length v
  std::vector<double> weights;           // v x tuples, after the step
  std::vector<double> delta;             // weights - initial weights
  // Label-tuple correlation measured directly from the pairs.
  TokenTupleCorrelation correlation;

  std::size_t tuples() const { return tuple_codes.size(); }
  double Delta(int label, std::size_t k) const { return delta[label * tuples() + k]; }
};

// Throws kInsufficientData when some label never occurs (log 0 init).
OneStepModel OneStepGd(const NextTokenData& data, double eta);

// max |delta - eta * C| over all entries.
double OneStepIdentityError(const OneStepModel& model);

// Mean cosine similarity between delta columns of synonymous tuple pairs
// (same parent in `rules`).
double SynonymColumnCosine(const OneStepModel& model, const RuleSet& rules);

}  // namespace rhm
