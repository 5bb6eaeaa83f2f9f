#include "rhm/statistics.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numeric>
#include <string>

#include "rhm/error.hpp"

namespace rhm {
namespace {

constexpr std::size_t kNoSlot = std::numeric_limits<std::size_t>::max();

// Running sums for a pooled unbiased variance.
struct VarianceAccumulator {
  double n = 0.0;
  double mean = 0.0;
  double m2 = 0.0;

  void Add(double x) {
    n += 1.0;
    const double delta = x - mean;
    mean += delta / n;
    m2 += delta * (x - mean);
  }
  double Variance() const { return n > 1.0 ? m2 / (n - 1.0) : 0.0; }

  void AddSupported(const TokenTupleCorrelation& c) {
    for (std::size_t k = 0; k < c.tuples(); ++k) {
      if (c.tuple_probs[k] <= 0.0) continue;
      for (int mu = 0; mu < c.vocab; ++mu) Add(c.At(mu, k));
    }
  }
};

void CheckDraws(int n_grammars) {
  Require(n_grammars >= 30, ErrorCode::kInsufficientData,
          "at least 30 grammar draws are required, got " + std::to_string(n_grammars));
}

// F(a -> b) = (1/m) #{rules of a whose child at `position` is b}.
std::vector<double> PositionKernel(const RuleSet& rules, int level, int position) {
  const auto& p = rules.params();
  const std::size_t v = p.vocab;
  std::vector<double> kernel(v * v, 0.0);
  for (std::size_t a = 0; a < v; ++a) {
    for (int r = 0; r < p.synonyms; ++r) {
      const Symbol b = rules.Production(level, static_cast<Symbol>(a), r)[position];
      kernel[a * v + b] += 1.0 / p.synonyms;
    }
  }
  return kernel;
}

}  // namespace

double CorrelationReport::At(int level) const {
  for (std::size_t k = 0; k < levels.size(); ++k) {
    if (levels[k] == level) return values[k];
  }
  Fail(ErrorCode::kInvalidArgument, "no pairs at level " + std::to_string(level));
}

TokenPairAccumulator::TokenPairAccumulator(const GrammarParams& params)
    : params_(params),
      length_(params.SequenceLength()),
      vocab_(static_cast<std::size_t>(params.vocab)),
      single_(length_ * vocab_, 0.0),
      pair_(length_ * (length_ - 1) / 2 * vocab_ * vocab_, 0.0) {}

void TokenPairAccumulator::Add(std::span<const Symbol> row, double weight) {
  Require(row.size() == length_, ErrorCode::kInvalidArgument,
          "row length does not match d");
  total_ += weight;
  const std::size_t vv = vocab_ * vocab_;
  std::size_t idx = 0;
  for (std::size_t i = 0; i < length_; ++i) {
    single_[i * vocab_ + row[i]] += weight;
    for (std::size_t j = i + 1; j < length_; ++j, ++idx) {
      pair_[idx * vv + row[i] * vocab_ + row[j]] += weight;
    }
  }
}

void TokenPairAccumulator::Merge(const TokenPairAccumulator& other) {
  Require(other.params_ == params_, ErrorCode::kInvalidArgument,
          "cannot merge accumulators of different shapes");
  total_ += other.total_;
  for (std::size_t k = 0; k < single_.size(); ++k) single_[k] += other.single_[k];
  for (std::size_t k = 0; k < pair_.size(); ++k) pair_[k] += other.pair_[k];
}

CorrelationReport TokenPairAccumulator::Report(std::optional<double> samples) const {
  Require(total_ > 0.0, ErrorCode::kInsufficientData, "empty dataset");
  const std::size_t v = vocab_;
  const std::size_t vv = v * v;
  const int depth = params_.depth;
  std::vector<double> sums(depth + 1, 0.0);
  std::vector<std::size_t> counts(depth + 1, 0);
  std::vector<double> pi(v), pj(v);
  std::size_t idx = 0;
  for (std::size_t i = 0; i < length_; ++i) {
    for (std::size_t k = 0; k < v; ++k) pi[k] = single_[i * v + k] / total_;
    for (std::size_t j = i + 1; j < length_; ++j, ++idx) {
      for (std::size_t k = 0; k < v; ++k) pj[k] = single_[j * v + k] / total_;
      double sq = 0.0;
      const double* joint = pair_.data() + idx * vv;
      for (std::size_t a = 0; a < v; ++a) {
        for (std::size_t b = 0; b < v; ++b) {
          const double c = joint[a * v + b] / total_ - pi[a] * pj[b];
          sq += c * c;
        }
      }
      const int level = ComputeTreeDistance(i + 1, j + 1, params_).level;
      sums[level] += std::sqrt(sq) / static_cast<double>(v);
      ++counts[level];
    }
  }
  CorrelationReport report;
  report.samples = samples.value_or(total_);
  report.noise_floor = 1.0 / (static_cast<double>(v) * std::sqrt(report.samples));
  std::size_t distance = 1;
  for (int level = 1; level <= depth; ++level) {
    distance *= static_cast<std::size_t>(params_.branching);
    if (counts[level] == 0) continue;
    report.levels.push_back(level);
    report.distances.push_back(distance);
    report.values.push_back(sums[level] / static_cast<double>(counts[level]));
    report.n_pairs.push_back(counts[level]);
  }
  return report;
}

CorrelationReport TokenTokenCorrelation(const Dataset& data,
                                        const GrammarParams& params) {
  Require(data.rows() >= 2, ErrorCode::kInsufficientData,
          "token-token correlation needs at least 2 rows");
  TokenPairAccumulator acc(params);
  for (std::size_t i = 0; i < data.rows(); ++i) acc.Add(data.Row(i));
  return acc.Report();
}

CorrelationReport PopulationTokenTokenCorrelation(const RuleSet& rules) {
  TokenPairAccumulator acc(rules.params());
  for (const auto& wd : EnumerateAll(rules)) acc.Add(wd.derivation.leaves(), wd.weight);
  return acc.Report(std::numeric_limits<double>::infinity());
}

double TokenTupleCorrelation::RmsDense() const {
  double sq = 0.0;
  for (double c : values) sq += c * c;
  const double entries =
      static_cast<double>(vocab) * std::pow(static_cast<double>(vocab), branching);
  return std::sqrt(sq / entries);
}

double TokenTupleCorrelation::RmsSupported() const {
  double sq = 0.0;
  std::size_t count = 0;
  for (std::size_t k = 0; k < tuples(); ++k) {
    if (tuple_probs[k] <= 0.0) continue;
    for (int mu = 0; mu < vocab; ++mu) {
      sq += At(mu, k) * At(mu, k);
      ++count;
    }
  }
  return count == 0 ? 0.0 : std::sqrt(sq / static_cast<double>(count));
}

double TokenTupleCorrelation::Lookup(int mu, std::size_t code) const {
  auto it = std::lower_bound(tuple_codes.begin(), tuple_codes.end(), code);
  if (it == tuple_codes.end() || *it != code) return 0.0;
  return At(mu, static_cast<std::size_t>(it - tuple_codes.begin()));
}

TokenTupleAccumulator::TokenTupleAccumulator(int vocab, int branching, int level)
    : vocab_(vocab), branching_(branching), level_(level) {
  std::size_t space = 1;
  for (int i = 0; i < branching; ++i) space *= static_cast<std::size_t>(vocab);
  slot_of_code_.assign(space, kNoSlot);
}

void TokenTupleAccumulator::Add(Symbol token, std::size_t tuple_code, double weight) {
  std::size_t& slot = slot_of_code_[tuple_code];
  if (slot == kNoSlot) {
    slot = codes_.size();
    codes_.push_back(tuple_code);
    joint_.resize(joint_.size() + vocab_, 0.0);
  }
  joint_[slot * vocab_ + token] += weight;
  total_ += weight;
}

void TokenTupleAccumulator::Merge(const TokenTupleAccumulator& other) {
  Require(other.vocab_ == vocab_ && other.branching_ == branching_ &&
              other.level_ == level_,
          ErrorCode::kInvalidArgument, "cannot merge accumulators of different shapes");
  for (std::size_t k = 0; k < other.codes_.size(); ++k) {
    for (int mu = 0; mu < vocab_; ++mu) {
      const double w = other.joint_[k * vocab_ + mu];
      if (w != 0.0) Add(mu, other.codes_[k], w);
    }
    if (slot_of_code_[other.codes_[k]] == kNoSlot) Add(0, other.codes_[k], 0.0);
  }
}

TokenTupleCorrelation TokenTupleAccumulator::Finish() const {
  Require(total_ > 0.0, ErrorCode::kInsufficientData, "no token-tuple events");
  TokenTupleCorrelation out;
  out.level = level_;
  out.vocab = vocab_;
  out.branching = branching_;
  std::vector<std::size_t> order(codes_.size());
  std::iota(order.begin(), order.end(), 0);
  std::sort(order.begin(), order.end(),
            [&](std::size_t a, std::size_t b) { return codes_[a] < codes_[b]; });
  const std::size_t n = codes_.size();
  out.tuple_codes.resize(n);
  out.tuple_probs.assign(n, 0.0);
  out.token_probs.assign(vocab_, 0.0);
  out.values.assign(static_cast<std::size_t>(vocab_) * n, 0.0);
  for (std::size_t k = 0; k < n; ++k) {
    const std::size_t slot = order[k];
    out.tuple_codes[k] = codes_[slot];
    for (int mu = 0; mu < vocab_; ++mu) {
      const double pj = joint_[slot * vocab_ + mu] / total_;
      out.tuple_probs[k] += pj;
      out.token_probs[mu] += pj;
    }
  }
  for (std::size_t k = 0; k < n; ++k) {
    const std::size_t slot = order[k];
    for (int mu = 0; mu < vocab_; ++mu) {
      out.values[mu * n + k] = joint_[slot * vocab_ + mu] / total_ -
                               out.token_probs[mu] * out.tuple_probs[k];
    }
  }
  return out;
}

namespace {

void CheckTupleLevel(const GrammarParams& p, int level) {
  Require(level >= 2 && level <= p.depth, ErrorCode::kInvalidArgument,
          "token-tuple correlation level must lie in 2..L");
}

}  // namespace

TokenTupleCorrelation EmpiricalTokenTupleCorrelation(const Dataset& data,
                                                     const GrammarParams& params,
                                                     int level) {
  CheckTupleLevel(params, level);
  Require(data.rows() > 0, ErrorCode::kInsufficientData, "empty dataset");
  Require(level == 2 || data.has_latents(), ErrorCode::kMissingLatents,
          "token-tuple correlations above level 2 need latents");
  const std::size_t s = params.branching;
  TokenTupleAccumulator acc(params.vocab, params.branching, level);
  std::vector<Symbol> tuple(s);
  for (std::size_t i = 0; i < data.rows(); ++i) {
    auto syms = data.LevelRow(level - 2, i);
    std::size_t code = 0;
    for (std::size_t c = 0; c < s; ++c) {
      code = code * params.vocab + static_cast<std::size_t>(syms[s + c]);
    }
    acc.Add(data.Row(i)[0], code);
  }
  return acc.Finish();
}

TokenTupleCorrelation PopulationTokenTupleCorrelation(const RuleSet& rules,
                                                      int level) {
  const auto& p = rules.params();
  CheckTupleLevel(p, level);
  const std::size_t v = p.vocab;
  const std::size_t s = p.branching;
  const int m = p.synonyms;

  // Marginal of h^(level)_1: uniform root pushed down the first-child path.
  std::vector<double> lca(v, 1.0 / static_cast<double>(v));
  for (int k = p.depth; k > level; --k) {
    const auto kernel = PositionKernel(rules, k, 0);
    std::vector<double> next(v, 0.0);
    for (std::size_t a = 0; a < v; ++a) {
      for (std::size_t b = 0; b < v; ++b) next[b] += lca[a] * kernel[a * v + b];
    }
    lca = std::move(next);
  }

  // to_leaf[b * v + mu] = P(x_1 = mu | h^(level-1)_1 = b).
  std::vector<double> to_leaf(v * v, 0.0);
  for (std::size_t b = 0; b < v; ++b) to_leaf[b * v + b] = 1.0;
  for (int k = level - 1; k >= 1; --k) {
    const auto kernel = PositionKernel(rules, k, 0);
    std::vector<double> next(v * v, 0.0);
    for (std::size_t b = 0; b < v; ++b) {
      for (std::size_t c = 0; c < v; ++c) {
        const double w = to_leaf[b * v + c];
        if (w == 0.0) continue;
        for (std::size_t d = 0; d < v; ++d) next[b * v + d] += w * kernel[c * v + d];
      }
    }
    to_leaf = std::move(next);
  }

  TokenTupleAccumulator acc(p.vocab, p.branching, level);
  for (std::size_t code = 0; code < p.TupleSpace(); ++code) acc.Add(0, code, 0.0);
  for (std::size_t a = 0; a < v; ++a) {
    if (lca[a] == 0.0) continue;
    for (int r = 0; r < m; ++r) {
      auto top = rules.Production(level, static_cast<Symbol>(a), r);
      for (int r2 = 0; r2 < m; ++r2) {
        const std::size_t code =
            rules.EncodeTuple(rules.Production(level - 1, top[1], r2));
        const double w = lca[a] / (static_cast<double>(m) * m);
        for (std::size_t mu = 0; mu < v; ++mu) {
          const double t = to_leaf[static_cast<std::size_t>(top[0]) * v + mu];
          if (t != 0.0) acc.Add(static_cast<Symbol>(mu), code, w * t);
        }
      }
    }
  }
  (void)s;
  return acc.Finish();
}

void ParseLatents(const RuleSet& rules, Dataset& data) {
  const auto& p = rules.params();
  std::vector<std::vector<Symbol>> latents(p.depth + 1);
  for (int level = 1; level <= p.depth; ++level) {
    latents[level].reserve(data.rows() * p.NodesAt(level));
  }
  for (std::size_t i = 0; i < data.rows(); ++i) {
    const ParseResult parsed = Parse(rules, data.Row(i));
    Require(parsed.max_valid_level == p.depth, ErrorCode::kMissingLatents,
            "row " + std::to_string(i) + " is not grammatical; latents unavailable");
    for (int level = 1; level <= p.depth; ++level) {
      const auto& syms = parsed.partial.levels[level];
      latents[level].insert(latents[level].end(), syms.begin(), syms.end());
    }
  }
  data.latents = std::move(latents);
}

double TokenTupleSamplingNoise(const TokenTupleCorrelation& empirical,
                               const TokenTupleCorrelation& population) {
  double sq = 0.0;
  std::size_t count = 0;
  for (std::size_t k = 0; k < population.tuples(); ++k) {
    if (population.tuple_probs[k] <= 0.0) continue;
    for (int mu = 0; mu < population.vocab; ++mu) {
      const double diff =
          empirical.Lookup(mu, population.tuple_codes[k]) - population.At(mu, k);
      sq += diff * diff;
      ++count;
    }
  }
  Require(count > 0, ErrorCode::kInsufficientData, "population has no support");
  return std::sqrt(sq / static_cast<double>(count));
}

TheoryPrediction Theory(const GrammarParams& params, int level,
                        std::optional<double> samples) {
  Require(level >= 1, ErrorCode::kInvalidArgument, "theory level must be >= 1");
  const double v = params.vocab;
  const double m = params.synonyms;
  const double f = params.RuleDensity();
  Require(f < 1.0, ErrorCode::kDivergent,
          "f = m / v^(s-1) = 1: sample complexities diverge");
  TheoryPrediction t;
  t.level = level;
  t.rule_density = f;
  t.correlation = std::sqrt((1.0 - f) / (v * v * v * std::pow(m, level + 2)));
  t.sampling_noise = samples ? 1.0 / std::sqrt(v * v * m * *samples)
                             : std::numeric_limits<double>::quiet_NaN();
  t.sample_complexity = v * std::pow(m, level + 1) / (1.0 - f);
  t.local_complexity = v * m;
  return t;
}

double RecursionPrefactor(int vocab, int branching, int synonyms) {
  const double v = vocab;
  const double vs1 = std::pow(v, branching - 1);
  return vs1 * (v - 1.0) / (synonyms * (vs1 * v - 1.0));
}

RecursionReport CorrelationRecursionCheck(const GrammarParams& params, int level,
                                          int n_grammars) {
  CheckDraws(n_grammars);
  Require(level >= 2, ErrorCode::kInvalidArgument, "recursion level must be >= 2");
  VarianceAccumulator lower, upper;
  for (int g = 0; g < n_grammars; ++g) {
    GrammarParams p = params;
    p.depth = level + 1;
    p.seed = DeriveSeed(params.seed, static_cast<std::uint64_t>(g), "recursion");
    const RuleSet rs = RuleSet::Generate(p);
    upper.AddSupported(PopulationTokenTupleCorrelation(rs, level + 1));
    lower.AddSupported(PopulationTokenTupleCorrelation(rs.Levels(2, level + 1), level));
  }
  RecursionReport report;
  report.level = level;
  report.draws = n_grammars;
  report.lower_variance = lower.Variance();
  report.upper_variance = upper.Variance();
  report.ratio = report.upper_variance / report.lower_variance;
  report.predicted = RecursionPrefactor(params.vocab, params.branching, params.synonyms);
  return report;
}

double CorrelationMagnitude(const GrammarParams& params, int level, int n_grammars) {
  CheckDraws(n_grammars);
  VarianceAccumulator acc;
  for (int g = 0; g < n_grammars; ++g) {
    GrammarParams p = params;
    p.depth = level;
    p.seed = DeriveSeed(params.seed, static_cast<std::uint64_t>(g), "magnitude");
    acc.AddSupported(PopulationTokenTupleCorrelation(RuleSet::Generate(p), level));
  }
  return std::sqrt(acc.Variance());
}

}  // namespace rhm
