#include "rhm/one_step.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <string>

#include "rhm/error.hpp"

namespace rhm {

NextTokenData NextTokenPairs(const Dataset& data, const GrammarParams& params) {
  const std::size_t s = params.branching;
  Require(data.length > s, ErrorCode::kInvalidArgument,
          "rows must be longer than s to have a next token");
  NextTokenData out;
  out.vocab = params.vocab;
  out.branching = params.branching;
  for (std::size_t i = 0; i < data.rows(); ++i) {
    auto row = data.Row(i);
    std::size_t code = 0;
    for (std::size_t c = 0; c < s; ++c) code = code * params.vocab + row[c];
    out.tuple_codes.push_back(code);
    out.labels.push_back(row[s]);
  }
  return out;
}

NextTokenData PopulationNextTokenPairs(const RuleSet& rules) {
  const auto& p = rules.params();
  const std::size_t s = p.branching;
  Require(p.SequenceLength() > s, ErrorCode::kInvalidArgument,
          "rows must be longer than s to have a next token");
  NextTokenData out;
  out.vocab = p.vocab;
  out.branching = p.branching;
  for (const auto& wd : EnumerateAll(rules)) {
    auto row = wd.derivation.leaves();
    out.tuple_codes.push_back(rules.EncodeTuple(row.first(s)));
    out.labels.push_back(row[s]);
    out.weights.push_back(wd.weight);
  }
  return out;
}

OneStepModel OneStepGd(const NextTokenData& data, double eta) {
  Require(eta > 0.0, ErrorCode::kInvalidArgument, "learning rate must be > 0");
  Require(!data.labels.empty() && data.labels.size() == data.tuple_codes.size(),
          ErrorCode::kInsufficientData, "no (tuple, label) pairs");
  Require(data.weights.empty() || data.weights.size() == data.labels.size(),
          ErrorCode::kInvalidArgument, "weights do not match the pairs");
  const std::size_t v = data.vocab;
  const std::size_t n = data.labels.size();
  auto weight = [&](std::size_t i) { return data.weights.empty() ? 1.0 : data.weights[i]; };

  OneStepModel model;
  model.vocab = data.vocab;
  model.eta = eta;
  model.tuple_codes = data.tuple_codes;
  std::sort(model.tuple_codes.begin(), model.tuple_codes.end());
  model.tuple_codes.erase(std::unique(model.tuple_codes.begin(), model.tuple_codes.end()),
                          model.tuple_codes.end());
  const std::size_t tuples = model.tuple_codes.size();

  double total = 0.0;
  std::vector<double> marginal(v, 0.0);
  for (std::size_t i = 0; i < n; ++i) {
    Require(data.labels[i] >= 0 && static_cast<std::size_t>(data.labels[i]) < v,
            ErrorCode::kInvalidArgument, "label out of range");
    marginal[data.labels[i]] += weight(i);
    total += weight(i);
  }
  model.init.resize(v);
  for (std::size_t a = 0; a < v; ++a) {
    Require(marginal[a] > 0.0, ErrorCode::kInsufficientData,
            "label " + std::to_string(a) + " never occurs; its initial weight log 0 is undefined");
    model.init[a] = std::log(marginal[a] / total);
  }

  // Full-batch gradient of the mean cross-entropy at the initial weights.
  std::vector<double> w0(v * tuples);
  for (std::size_t a = 0; a < v; ++a) {
    std::fill_n(w0.begin() + a * tuples, tuples, model.init[a]);
  }
  std::vector<double> grad(v * tuples, 0.0);
  std::vector<double> probs(v);
  for (std::size_t i = 0; i < n; ++i) {
    const std::size_t k = static_cast<std::size_t>(
        std::lower_bound(model.tuple_codes.begin(), model.tuple_codes.end(),
                         data.tuple_codes[i]) -
        model.tuple_codes.begin());
    double top = -std::numeric_limits<double>::infinity();
    for (std::size_t a = 0; a < v; ++a) top = std::max(top, w0[a * tuples + k]);
    double z = 0.0;
    for (std::size_t a = 0; a < v; ++a) {
      probs[a] = std::exp(w0[a * tuples + k] - top);
      z += probs[a];
    }
    const double w = weight(i) / total;
    for (std::size_t a = 0; a < v; ++a) {
      const double target = static_cast<std::size_t>(data.labels[i]) == a ? 1.0 : 0.0;
      grad[a * tuples + k] += w * (probs[a] / z - target);
    }
  }
  model.weights.resize(v * tuples);
  model.delta.resize(v * tuples);
  for (std::size_t e = 0; e < v * tuples; ++e) {
    model.weights[e] = w0[e] - eta * grad[e];
    model.delta[e] = model.weights[e] - w0[e];
  }

  TokenTupleAccumulator acc(data.vocab, data.branching, 2);
  for (std::size_t i = 0; i < n; ++i) acc.Add(data.labels[i], data.tuple_codes[i], weight(i));
  model.correlation = acc.Finish();
  return model;
}

double OneStepIdentityError(const OneStepModel& model) {
  double worst = 0.0;
  for (std::size_t k = 0; k < model.tuples(); ++k) {
    for (int a = 0; a < model.vocab; ++a) {
      const double c = model.correlation.Lookup(a, model.tuple_codes[k]);
      worst = std::max(worst, std::abs(model.Delta(a, k) - model.eta * c));
    }
  }
  return worst;
}

double SynonymColumnCosine(const OneStepModel& model, const RuleSet& rules) {
  const std::size_t n = model.tuples();
  std::vector<Symbol> parent(n);
  for (std::size_t k = 0; k < n; ++k) parent[k] = rules.LookupCode(1, model.tuple_codes[k]).parent;
  double sum = 0.0;
  std::size_t pairs = 0;
  for (std::size_t i = 0; i < n; ++i) {
    if (parent[i] < 0) continue;
    for (std::size_t j = i + 1; j < n; ++j) {
      if (parent[j] != parent[i]) continue;
      double dot = 0.0, ni = 0.0, nj = 0.0;
      for (int a = 0; a < model.vocab; ++a) {
        dot += model.Delta(a, i) * model.Delta(a, j);
        ni += model.Delta(a, i) * model.Delta(a, i);
        nj += model.Delta(a, j) * model.Delta(a, j);
      }
      if (ni <= 0.0 || nj <= 0.0) continue;
      sum += dot / std::sqrt(ni * nj);
      ++pairs;
    }
  }
  Require(pairs > 0, ErrorCode::kInsufficientData, "no synonymous tuple pairs observed");
  return sum / static_cast<double>(pairs);
}

}  // namespace rhm
