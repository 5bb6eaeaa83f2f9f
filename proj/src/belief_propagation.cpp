#include "rhm/belief_propagation.hpp"

#include <cmath>
#include <numeric>
#include <string>

#include "rhm/error.hpp"

namespace rhm {
namespace {

// Normalizes in place and returns the original sum.
double Normalize(std::span<double> values) {
  const double total = std::accumulate(values.begin(), values.end(), 0.0);
  if (total > 0.0) {
    for (auto& x : values) x /= total;
  }
  return total;
}

[[noreturn]] void ImpossibleEvidence(int level, std::size_t node) {
  Fail(ErrorCode::kImpossibleEvidence,
       "impossible evidence: zero message at level " + std::to_string(level) +
           ", node " + std::to_string(node));
}

// Upward pass only; shared by marginals and posterior sampling.
void UpwardPass(const RuleSet& rules, const LeafLikelihoods& leaves,
                BeliefState& state) {
  const auto& p = rules.params();
  const std::size_t v = p.vocab;
  const std::size_t s = p.branching;
  const int m = p.synonyms;
  Require(leaves.length == p.SequenceLength() &&
              leaves.vocab == p.vocab,
          ErrorCode::kInvalidArgument,
          "leaf likelihoods do not match the grammar shape");
  for (double w : leaves.values) {
    Require(w >= 0.0 && std::isfinite(w), ErrorCode::kInvalidArgument,
            "leaf likelihoods must be finite and nonnegative");
  }
  state.vocab = p.vocab;
  state.upward.assign(p.depth + 1, {});
  state.log_partition = 0.0;

  state.upward[0] = leaves.values;
  for (std::size_t i = 0; i < leaves.length; ++i) {
    std::span<double> row(state.upward[0].data() + i * v, v);
    const double z = Normalize(row);
    if (z <= 0.0) ImpossibleEvidence(0, i);
    state.log_partition += std::log(z);
  }

  for (int level = 1; level <= p.depth; ++level) {
    const std::size_t width = p.NodesAt(level);
    const auto& below = state.upward[level - 1];
    auto& up = state.upward[level];
    up.assign(width * v, 0.0);
    for (std::size_t node = 0; node < width; ++node) {
      const double* child = below.data() + node * s * v;
      std::span<double> msg(up.data() + node * v, v);
      // Only the m*v valid productions contribute.
      for (std::size_t a = 0; a < v; ++a) {
        double acc = 0.0;
        for (int r = 0; r < m; ++r) {
          auto prod = rules.Production(level, static_cast<Symbol>(a), r);
          double w = 1.0;
          for (std::size_t c = 0; c < s; ++c) w *= child[c * v + prod[c]];
          acc += w;
        }
        msg[a] = acc / m;
      }
      const double z = Normalize(msg);
      if (z <= 0.0) ImpossibleEvidence(level, node);
      state.log_partition += std::log(z);
    }
  }
  const auto& root = state.upward[p.depth];
  double z = 0.0;
  for (std::size_t a = 0; a < v; ++a) z += root[a] / static_cast<double>(v);
  if (z <= 0.0) ImpossibleEvidence(p.depth, 0);
  state.log_partition += std::log(z);
}

}  // namespace

BeliefState BpMarginals(const RuleSet& rules, const LeafLikelihoods& leaves) {
  const auto& p = rules.params();
  const std::size_t v = p.vocab;
  const std::size_t s = p.branching;
  const int m = p.synonyms;
  BeliefState state;
  UpwardPass(rules, leaves, state);

  state.downward.assign(p.depth + 1, {});
  state.marginals.assign(p.depth + 1, {});
  state.downward[p.depth].assign(v, 1.0 / static_cast<double>(v));

  std::vector<double> excl(s);
  for (int level = p.depth; level >= 1; --level) {
    const std::size_t width = p.NodesAt(level);
    const auto& up_children = state.upward[level - 1];
    const auto& down_parents = state.downward[level];
    auto& down_children = state.downward[level - 1];
    down_children.assign(width * s * v, 0.0);
    for (std::size_t node = 0; node < width; ++node) {
      const double* child = up_children.data() + node * s * v;
      const double* down = down_parents.data() + node * v;
      double* out = down_children.data() + node * s * v;
      for (std::size_t a = 0; a < v; ++a) {
        if (down[a] == 0.0) continue;
        const double scale = down[a] / m;
        for (int r = 0; r < m; ++r) {
          auto prod = rules.Production(level, static_cast<Symbol>(a), r);
          for (std::size_t i = 0; i < s; ++i) {
            double w = scale;
            for (std::size_t j = 0; j < s; ++j) {
              if (j != i) w *= child[j * v + prod[j]];
            }
            excl[i] = w;
          }
          for (std::size_t i = 0; i < s; ++i) out[i * v + prod[i]] += excl[i];
        }
      }
      for (std::size_t i = 0; i < s; ++i) {
        Normalize(std::span<double>(out + i * v, v));
      }
    }
  }

  for (int level = 0; level <= p.depth; ++level) {
    const auto& up = state.upward[level];
    const auto& down = state.downward[level];
    auto& marg = state.marginals[level];
    marg.resize(up.size());
    for (std::size_t k = 0; k < up.size(); ++k) marg[k] = up[k] * down[k];
    for (std::size_t node = 0; node < up.size() / v; ++node) {
      if (Normalize(std::span<double>(marg.data() + node * v, v)) <= 0.0) {
        ImpossibleEvidence(level, node);
      }
    }
  }
  return state;
}

namespace {

std::size_t DrawIndex(std::span<const double> weights, Rng& rng) {
  const double total = std::accumulate(weights.begin(), weights.end(), 0.0);
  double u = rng.Uniform() * total;
  std::size_t last = 0;
  for (std::size_t k = 0; k < weights.size(); ++k) {
    if (weights[k] <= 0.0) continue;
    last = k;
    if (u < weights[k]) return k;
    u -= weights[k];
  }
  return last;
}

}  // namespace

Derivation BpPosteriorSample(const RuleSet& rules, const LeafLikelihoods& leaves,
                             Rng& rng) {
  const auto& p = rules.params();
  const std::size_t v = p.vocab;
  const std::size_t s = p.branching;
  const int m = p.synonyms;
  BeliefState state;
  UpwardPass(rules, leaves, state);

  Derivation out;
  out.levels.resize(p.depth + 1);
  out.choices.resize(p.depth + 1);
  // Uniform prior times upward message.
  out.levels[p.depth] = {static_cast<Symbol>(DrawIndex(
      std::span<const double>(state.upward[p.depth].data(), v), rng))};
  std::vector<double> rule_weights(m);
  for (int level = p.depth; level >= 1; --level) {
    const auto& parents = out.levels[level];
    const auto& up_children = state.upward[level - 1];
    auto& children = out.levels[level - 1];
    children.resize(parents.size() * s);
    out.choices[level].resize(parents.size());
    for (std::size_t node = 0; node < parents.size(); ++node) {
      const double* child = up_children.data() + node * s * v;
      for (int r = 0; r < m; ++r) {
        auto prod = rules.Production(level, parents[node], r);
        double w = 1.0;
        for (std::size_t c = 0; c < s; ++c) w *= child[c * v + prod[c]];
        rule_weights[r] = w;
      }
      const int r = static_cast<int>(DrawIndex(rule_weights, rng));
      out.choices[level][node] = r;
      auto prod = rules.Production(level, parents[node], r);
      std::copy(prod.begin(), prod.end(), children.begin() + node * s);
    }
  }
  return out;
}

std::vector<double> DenoiseExpectation(const RuleSet& rules,
                                       std::span<const Symbol> noisy,
                                       const NoiseSpec& spec) {
  const auto leaves = ComputeLeafLikelihoods(noisy, rules.params().vocab, spec);
  return BpMarginals(rules, leaves).marginals[0];
}

}  // namespace rhm
