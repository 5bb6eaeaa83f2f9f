#include "rhm/learner.hpp"

#include <algorithm>
#include <atomic>
#include <cmath>
#include <exception>
#include <limits>
#include <map>
#include <mutex>
#include <numeric>
#include <string>
#include <thread>

#include <json.hpp>

#include "rhm/error.hpp"

namespace rhm {
namespace {

constexpr std::size_t kNoSlot = std::numeric_limits<std::size_t>::max();

std::size_t Pow(std::size_t a, int b) {
  std::size_t r = 1;
  for (int i = 0; i < b; ++i) r *= a;
  return r;
}

std::size_t Encode(std::span<const Symbol> tuple, int vocab) {
  std::size_t code = 0;
  for (Symbol x : tuple) code = code * static_cast<std::size_t>(vocab) + static_cast<std::size_t>(x);
  return code;
}

std::vector<Symbol> Decode(std::size_t code, int vocab, int branching) {
  std::vector<Symbol> tuple(branching);
  for (int c = branching - 1; c >= 0; --c) {
    tuple[c] = static_cast<Symbol>(code % static_cast<std::size_t>(vocab));
    code /= static_cast<std::size_t>(vocab);
  }
  return tuple;
}

double Median(std::vector<double> values) {
  if (values.empty()) return std::numeric_limits<double>::quiet_NaN();
  std::sort(values.begin(), values.end());
  const std::size_t n = values.size();
  return n % 2 == 1 ? values[n / 2] : 0.5 * (values[n / 2 - 1] + values[n / 2]);
}

double PairCount(double n) { return n * (n - 1.0) / 2.0; }

}  // namespace

std::string_view VariantName(ContextVariant variant) {
  return variant == ContextVariant::kSingleToken ? "single-token" : "full-tuple";
}

ContextVariant ParseVariant(std::string_view name) {
  if (name == "single-token") return ContextVariant::kSingleToken;
  if (name == "full-tuple") return ContextVariant::kFullTuple;
  Fail(ErrorCode::kInvalidConfig, "unknown context variant '" + std::string(name) +
                                      "' (expected single-token or full-tuple)");
}

LevelSequences TokenSequences(const Dataset& data) {
  return LevelSequences{data.length, data.vocab, data.tokens};
}

std::size_t ContextStats::dim() const {
  return variant == ContextVariant::kSingleToken
             ? static_cast<std::size_t>(vocab)
             : static_cast<std::size_t>(vocab) * static_cast<std::size_t>(branching);
}

ContextAccumulator::ContextAccumulator(int level, int vocab, int branching,
                                       ContextVariant variant, bool pooled)
    : level_(level),
      vocab_(vocab),
      branching_(branching),
      variant_(variant),
      pooled_(pooled),
      dim_(variant == ContextVariant::kSingleToken
               ? static_cast<std::size_t>(vocab)
               : static_cast<std::size_t>(vocab) * static_cast<std::size_t>(branching)),
      slot_of_code_(Pow(static_cast<std::size_t>(vocab), branching), kNoSlot) {}

void ContextAccumulator::AddEvent(std::size_t code, std::span<const Symbol> context,
                                  double weight) {
  std::size_t& slot = slot_of_code_[code];
  if (slot == kNoSlot) {
    slot = codes_.size();
    codes_.push_back(code);
    sums_.resize(sums_.size() + dim_, 0.0);
    counts_.push_back(0.0);
  }
  double* sum = sums_.data() + slot * dim_;
  for (std::size_t c = 0; c < context.size(); ++c) {
    sum[c * static_cast<std::size_t>(vocab_) + context[c]] += weight;
  }
  counts_[slot] += weight;
}

void ContextAccumulator::Add(std::span<const Symbol> level_row,
                             std::span<const Symbol> tokens, double weight) {
  const std::size_t s = branching_;
  const std::size_t width = level_row.size();
  Require(width % s == 0 && width / s >= s, ErrorCode::kInvalidArgument,
          "level " + std::to_string(level_) + " has " + std::to_string(width) +
              " symbols; context statistics need at least 2s = " +
              std::to_string(2 * s) + " and whole sibling groups");
  const std::size_t blocks = width / s;
  Require(tokens.size() % blocks == 0, ErrorCode::kInvalidArgument,
          "token row does not align with the level row");
  const std::size_t span = tokens.size() / blocks;
  const std::size_t context_len = variant_ == ContextVariant::kSingleToken ? 1 : s;
  Require(span >= context_len, ErrorCode::kInvalidArgument,
          "sibling subtree shorter than the context");

  const std::size_t first = pooled_ ? 0 : 1;
  const std::size_t last = pooled_ ? blocks : 2;
  for (std::size_t b = first; b < last; ++b) {
    auto target = level_row.subspan(b * s, s);
    if (std::any_of(target.begin(), target.end(),
                    [&](Symbol x) { return x < 0 || x >= vocab_; })) {
      continue;
    }
    const std::size_t sibling = b % s != 0 ? b - 1 : b + 1;
    auto context = tokens.subspan(sibling * span, context_len);
    if (std::any_of(context.begin(), context.end(),
                    [&](Symbol x) { return x < 0 || x >= vocab_; })) {
      continue;
    }
    AddEvent(Encode(target, vocab_), context, weight);
  }
}

void ContextAccumulator::Merge(const ContextAccumulator& other) {
  Require(other.level_ == level_ && other.vocab_ == vocab_ &&
              other.branching_ == branching_ && other.variant_ == variant_ &&
              other.pooled_ == pooled_,
          ErrorCode::kInvalidArgument, "cannot merge context accumulators of different shapes");
  for (std::size_t k = 0; k < other.codes_.size(); ++k) {
    std::size_t& slot = slot_of_code_[other.codes_[k]];
    if (slot == kNoSlot) {
      slot = codes_.size();
      codes_.push_back(other.codes_[k]);
      sums_.resize(sums_.size() + dim_, 0.0);
      counts_.push_back(0.0);
    }
    for (std::size_t t = 0; t < dim_; ++t) sums_[slot * dim_ + t] += other.sums_[k * dim_ + t];
    counts_[slot] += other.counts_[k];
  }
}

ContextStats ContextAccumulator::Finish() const {
  ContextStats stats;
  stats.level = level_;
  stats.variant = variant_;
  stats.pooled = pooled_;
  stats.vocab = vocab_;
  stats.branching = branching_;
  std::vector<std::size_t> order(codes_.size());
  std::iota(order.begin(), order.end(), 0);
  std::sort(order.begin(), order.end(),
            [&](std::size_t a, std::size_t b) { return codes_[a] < codes_[b]; });
  for (std::size_t slot : order) {
    if (counts_[slot] <= 0.0) continue;
    stats.tuple_codes.push_back(codes_[slot]);
    stats.counts.push_back(counts_[slot]);
    for (std::size_t t = 0; t < dim_; ++t) {
      stats.means.push_back(sums_[slot * dim_ + t] / counts_[slot]);
    }
  }
  return stats;
}

ContextStats BuildContextStats(const LevelSequences& level_data,
                               const LevelSequences& tokens, int level, int branching,
                               ContextVariant variant, bool pooled) {
  Require(level_data.rows() == tokens.rows(), ErrorCode::kInvalidArgument,
          "level and token sequences have different row counts");
  ContextAccumulator acc(level, tokens.vocab, branching, variant, pooled);
  for (std::size_t i = 0; i < tokens.rows(); ++i) {
    acc.Add(level_data.Row(i), tokens.Row(i));
  }
  return acc.Finish();
}

ContextStats PopulationContextStats(const RuleSet& rules, int level,
                                    ContextVariant variant, bool pooled) {
  const auto& p = rules.params();
  Require(level >= 0 && level <= p.depth - 2, ErrorCode::kInvalidArgument,
          "context statistics need level <= L-2");
  ContextAccumulator acc(level, p.vocab, p.branching, variant, pooled);
  for (const auto& wd : EnumerateAll(rules)) {
    acc.Add(wd.derivation.levels[level], wd.derivation.leaves(), wd.weight);
  }
  return acc.Finish();
}

TuplePartition ClusterTuples(const ContextStats& stats, int k,
                             const KMeansConfig& config) {
  Require(stats.tuples() > 0, ErrorCode::kInsufficientData, "no tuples to cluster");
  const KMeansResult km = KMeans(stats.means, stats.dim(), k, config);
  TuplePartition out;
  out.tuple_codes = stats.tuple_codes;
  out.cluster_of = km.assignment;
  out.clusters = km.k;
  out.partial = km.partial;
  return out;
}

DetectionTest TestDependence(const ContextStats& stats) {
  const std::size_t v = stats.vocab;
  const std::size_t dim = stats.dim();
  const std::size_t k = stats.tuples();
  DetectionTest test;
  if (k < 2) return test;
  double total = 0.0;
  std::vector<double> marginal(v, 0.0);
  for (std::size_t i = 0; i < k; ++i) {
    total += stats.counts[i];
    for (std::size_t t = 0; t < v; ++t) marginal[t] += stats.counts[i] * stats.means[i * dim + t];
  }
  std::size_t support = 0;
  for (auto& x : marginal) {
    x /= total;
    if (x > 0.0) ++support;
  }
  if (support < 2) return test;
  for (std::size_t i = 0; i < k; ++i) {
    for (std::size_t t = 0; t < v; ++t) {
      if (marginal[t] <= 0.0) continue;
      const double d = stats.means[i * dim + t] - marginal[t];
      test.chi_square += stats.counts[i] * d * d / marginal[t];
    }
  }
  test.dof = static_cast<double>((k - 1) * (support - 1));
  test.z = (test.chi_square - test.dof) / std::sqrt(2.0 * test.dof);
  test.signal_to_noise = test.chi_square / test.dof - 1.0;
  return test;
}

double RandScore(std::span<const int> clusters, std::span<const int> classes) {
  Require(clusters.size() == classes.size(), ErrorCode::kInvalidArgument,
          "partition and reference sizes differ");
  const std::size_t n = clusters.size();
  if (n < 2) return 1.0;
  // Give every class -1 member a fresh label.
  int fresh = *std::max_element(classes.begin(), classes.end()) + 1;
  std::map<int, double> by_cluster, by_class;
  std::map<std::pair<int, int>, double> cells;
  for (std::size_t i = 0; i < n; ++i) {
    const int cls = classes[i] >= 0 ? classes[i] : fresh++;
    by_cluster[clusters[i]] += 1.0;
    by_class[cls] += 1.0;
    cells[{clusters[i], cls}] += 1.0;
  }
  double same_cluster = 0.0, same_class = 0.0, both = 0.0;
  for (const auto& [key, c] : by_cluster) same_cluster += PairCount(c);
  for (const auto& [key, c] : by_class) same_class += PairCount(c);
  for (const auto& [key, c] : cells) both += PairCount(c);
  const double total = PairCount(static_cast<double>(n));
  return (total + 2.0 * both - same_cluster - same_class) / total;
}

double RandChanceBaseline(std::span<const int> classes, int k) {
  Require(k >= 1, ErrorCode::kInvalidArgument, "k must be >= 1");
  const std::size_t n = classes.size();
  if (n < 2) return 1.0;
  std::map<int, double> by_class;
  for (int c : classes) {
    if (c >= 0) by_class[c] += 1.0;
  }
  double within = 0.0;
  for (const auto& [key, c] : by_class) within += PairCount(c);
  const double total = PairCount(static_cast<double>(n));
  const double q = 1.0 / k;
  return (within * q + (total - within) * (1.0 - q)) / total;
}

std::vector<std::size_t> LearnedLevel::Members(int cluster) const {
  std::vector<std::size_t> out;
  for (std::size_t k = 0; k < partition.tuple_codes.size(); ++k) {
    if (partition.cluster_of[k] == cluster) out.push_back(partition.tuple_codes[k]);
  }
  return out;
}

int ClusterModel::LearnedDepth() const {
  int depth = 0;
  while (depth < static_cast<int>(levels.size()) && levels[depth].detected) ++depth;
  return depth;
}

double ClusterModel::MinRecovery() const {
  double r = 1.0;
  for (const auto& level : levels) r = std::min(r, level.recovery);
  return r;
}

LevelSequences CollapseBlocks(const LevelSequences& in, const TuplePartition& part,
                        int branching) {
  const std::size_t s = branching;
  LevelSequences out;
  out.width = in.width / s;
  out.vocab = in.vocab;
  out.symbols.resize(in.rows() * out.width, -1);
  for (std::size_t i = 0; i < in.rows(); ++i) {
    auto row = in.Row(i);
    for (std::size_t b = 0; b < out.width; ++b) {
      auto block = row.subspan(b * s, s);
      if (std::any_of(block.begin(), block.end(), [](Symbol x) { return x < 0; })) continue;
      const std::size_t code = Encode(block, in.vocab);
      auto it = std::lower_bound(part.tuple_codes.begin(), part.tuple_codes.end(), code);
      if (it == part.tuple_codes.end() || *it != code) continue;
      out.symbols[i * out.width + b] = part.cluster_of[it - part.tuple_codes.begin()];
    }
  }
  return out;
}

namespace {

// True level-(j+1) symbol of each tuple, given how level-j symbols map to
// true symbols (nullptr: they are the true symbols already).
std::vector<int> TrueParents(const RuleSet& truth, int level,
                             std::span<const std::size_t> codes,
                             const std::vector<Symbol>* symbol_truth) {
  const auto& p = truth.params();
  std::vector<int> parents(codes.size(), -1);
  for (std::size_t k = 0; k < codes.size(); ++k) {
    std::vector<Symbol> tuple = Decode(codes[k], p.vocab, p.branching);
    bool ok = true;
    if (symbol_truth != nullptr) {
      for (auto& x : tuple) {
        x = static_cast<std::size_t>(x) < symbol_truth->size() ? (*symbol_truth)[x] : -1;
        if (x < 0) ok = false;
      }
    }
    if (ok) parents[k] = truth.Lookup(level + 1, tuple).parent;
  }
  return parents;
}

std::vector<Symbol> MajorityTruth(const TuplePartition& part, std::span<const int> parents,
                                  int vocab) {
  std::vector<Symbol> out(part.clusters, -1);
  std::vector<std::vector<int>> votes(part.clusters, std::vector<int>(vocab, 0));
  for (std::size_t k = 0; k < parents.size(); ++k) {
    if (parents[k] >= 0) ++votes[part.cluster_of[k]][parents[k]];
  }
  for (int c = 0; c < part.clusters; ++c) {
    int best = 0;
    for (int a = 0; a < vocab; ++a) {
      if (votes[c][a] > best) {
        best = votes[c][a];
        out[c] = a;
      }
    }
  }
  return out;
}

ClusterModel Learn(const Dataset& data, const RuleSet& truth, const LearnOptions& options,
                   bool oracle) {
  const auto& p = truth.params();
  Require(data.length == p.SequenceLength() && data.vocab == p.vocab,
          ErrorCode::kInvalidArgument, "dataset shape does not match the grammar");
  Require(data.rows() > 0, ErrorCode::kInsufficientData, "empty dataset");
  ClusterModel model;
  model.params = p;
  model.variant = options.variant;
  model.pooled = options.pooled;

  const LevelSequences tokens = TokenSequences(data);
  LevelSequences current = tokens;
  // Reserved so that symbol_truth stays valid while levels are appended.
  model.levels.reserve(p.depth);
  const std::vector<Symbol>* symbol_truth = nullptr;
  for (int j = 0; j + 2 <= p.depth; ++j) {
    const ContextStats stats =
        BuildContextStats(current, tokens, j, p.branching, options.variant, options.pooled);
    Require(stats.tuples() > 0, ErrorCode::kInsufficientData,
            "no tuples observed at level " + std::to_string(j));
    LearnedLevel level;
    level.level = j;
    const std::vector<int> parents =
        TrueParents(truth, j, stats.tuple_codes, symbol_truth);
    if (oracle) {
      level.partition.tuple_codes = stats.tuple_codes;
      level.partition.cluster_of = parents;
      level.partition.clusters = p.vocab;
      for (int c : parents) {
        Require(c >= 0, ErrorCode::kInvalidArgument,
                "oracle partition needs grammatical data");
      }
    } else {
      KMeansConfig km = options.kmeans;
      km.seed = DeriveSeed(options.kmeans.seed, static_cast<std::uint64_t>(j), "kmeans");
      level.partition = ClusterTuples(stats, p.vocab, km);
    }
    level.detection = TestDependence(stats);
    level.detected = oracle || (level.detection.signal_to_noise >= options.detection_snr &&
                                level.detection.z >= options.detection_z);
    level.recovery = RandScore(level.partition.cluster_of, parents);
    level.chance = RandChanceBaseline(parents, p.vocab);
    level.truth_of_cluster = MajorityTruth(level.partition, parents, p.vocab);
    current = CollapseBlocks(current, level.partition, p.branching);
    model.levels.push_back(std::move(level));
    symbol_truth = &model.levels.back().truth_of_cluster;
  }

  std::vector<std::size_t> top;
  for (std::size_t i = 0; i < current.rows(); ++i) {
    auto row = current.Row(i);
    if (std::any_of(row.begin(), row.end(), [](Symbol x) { return x < 0; })) continue;
    top.push_back(Encode(row, p.vocab));
  }
  std::sort(top.begin(), top.end());
  top.erase(std::unique(top.begin(), top.end()), top.end());
  model.top_tuples = std::move(top);
  return model;
}

}  // namespace

ClusterModel LearnGrammar(const Dataset& data, const RuleSet& truth,
                          const LearnOptions& options) {
  return Learn(data, truth, options, false);
}

ClusterModel OracleModel(const Dataset& data, const RuleSet& truth,
                         const LearnOptions& options) {
  return Learn(data, truth, options, true);
}

Dataset GenerateFromLearned(const ClusterModel& model, std::size_t n, Rng& rng) {
  const auto& p = model.params;
  const std::size_t s = p.branching;
  std::vector<std::vector<std::vector<Symbol>>> members(model.levels.size());
  for (std::size_t j = 0; j < model.levels.size(); ++j) {
    const auto& level = model.levels[j];
    members[j].resize(level.partition.clusters);
    for (std::size_t k = 0; k < level.partition.tuple_codes.size(); ++k) {
      const auto tuple = Decode(level.partition.tuple_codes[k], p.vocab, p.branching);
      auto& list = members[j][level.partition.cluster_of[k]];
      list.insert(list.end(), tuple.begin(), tuple.end());
    }
  }

  // Level whose s-tuples are drawn from the observed inventory.
  const int base = model.LearnedDepth();
  const bool full = base == static_cast<int>(model.levels.size());
  const std::vector<std::size_t>& inventory =
      full ? model.top_tuples : model.levels[base].partition.tuple_codes;
  Require(!inventory.empty(), ErrorCode::kInsufficientData,
          "learned grammar has an empty tuple inventory");
  const std::size_t blocks = full ? 1 : p.NodesAt(base + 1);

  Dataset out;
  out.length = p.SequenceLength();
  out.vocab = p.vocab;
  out.tokens.reserve(n * out.length);
  std::vector<Symbol> current, next;
  for (std::size_t i = 0; i < n; ++i) {
    current.clear();
    for (std::size_t b = 0; b < blocks; ++b) {
      const auto tuple = Decode(inventory[rng.Below(inventory.size())], p.vocab, p.branching);
      current.insert(current.end(), tuple.begin(), tuple.end());
    }
    for (int j = base - 1; j >= 0; --j) {
      next.clear();
      for (Symbol c : current) {
        const auto& list = members[j][c];
        Require(!list.empty(), ErrorCode::kInsufficientData,
                "learned symbol " + std::to_string(c) + " has no productions");
        const std::size_t r = rng.Below(list.size() / s);
        next.insert(next.end(), list.begin() + r * s, list.begin() + (r + 1) * s);
      }
      std::swap(current, next);
    }
    out.tokens.insert(out.tokens.end(), current.begin(), current.end());
  }
  return out;
}

std::string ClusterModelToJson(const ClusterModel& model) {
  using nlohmann::json;
  const auto& p = model.params;
  json j;
  j["params"] = {{"L", p.depth}, {"s", p.branching}, {"v", p.vocab},
                 {"m", p.synonyms}, {"seed", p.seed}};
  j["variant"] = std::string(VariantName(model.variant));
  j["pooled"] = model.pooled;
  json levels = json::array();
  for (const auto& level : model.levels) {
    json clusters = json::array();
    for (int c = 0; c < level.partition.clusters; ++c) {
      json prods = json::array();
      for (std::size_t code : level.Members(c)) prods.push_back(Decode(code, p.vocab, p.branching));
      clusters.push_back({{"id", c}, {"productions", prods}});
    }
    levels.push_back({{"level", level.level},
                      {"recovery", level.recovery},
                      {"detected", level.detected},
                      {"signal_to_noise", level.detection.signal_to_noise},
                      {"partial", level.partition.partial},
                      {"clusters", clusters}});
  }
  j["levels"] = levels;
  json top = json::array();
  for (std::size_t code : model.top_tuples) top.push_back(Decode(code, p.vocab, p.branching));
  j["top"] = top;
  return j.dump(2) + "\n";
}

bool HasDegenerateContexts(const RuleSet& rules) {
  const auto& p = rules.params();
  const std::size_t v = p.vocab;
  const int m = p.synonyms;
  auto first_child = [&](int level) {
    std::vector<double> kernel(v * v, 0.0);
    for (std::size_t a = 0; a < v; ++a) {
      for (int r = 0; r < m; ++r) {
        kernel[a * v + rules.Production(level, static_cast<Symbol>(a), r)[0]] += 1.0 / m;
      }
    }
    return kernel;
  };
  auto compose = [&](const std::vector<double>& a, const std::vector<double>& b) {
    std::vector<double> out(v * v, 0.0);
    for (std::size_t i = 0; i < v; ++i) {
      for (std::size_t k = 0; k < v; ++k) {
        if (a[i * v + k] == 0.0) continue;
        for (std::size_t t = 0; t < v; ++t) out[i * v + t] += a[i * v + k] * b[k * v + t];
      }
    }
    return out;
  };

  for (int j = 0; j + 2 <= p.depth; ++j) {
    // Marginal of the grandparent h^(j+2)_1 (first node of its level).
    std::vector<double> pi(v, 1.0 / static_cast<double>(v));
    for (int k = p.depth; k > j + 2; --k) {
      const auto kernel = first_child(k);
      std::vector<double> next(v, 0.0);
      for (std::size_t a = 0; a < v; ++a) {
        for (std::size_t b = 0; b < v; ++b) next[b] += pi[a] * kernel[a * v + b];
      }
      pi = std::move(next);
    }
    // P(x_1 | sibling symbol at level j+1).
    std::vector<double> down(v * v, 0.0);
    for (std::size_t a = 0; a < v; ++a) down[a * v + a] = 1.0;
    for (int k = j + 1; k >= 1; --k) down = compose(down, first_child(k));

    std::vector<double> joint(v * v, 0.0);  // (symbol of block 1's parent, x_1)
    for (std::size_t g = 0; g < v; ++g) {
      if (pi[g] == 0.0) continue;
      for (int r = 0; r < m; ++r) {
        auto prod = rules.Production(j + 2, static_cast<Symbol>(g), r);
        for (std::size_t x = 0; x < v; ++x) {
          joint[prod[1] * v + x] += pi[g] / m * down[prod[0] * v + x];
        }
      }
    }
    std::vector<std::size_t> present;
    for (std::size_t a = 0; a < v; ++a) {
      double total = 0.0;
      for (std::size_t x = 0; x < v; ++x) total += joint[a * v + x];
      if (total <= 0.0) continue;
      for (std::size_t x = 0; x < v; ++x) joint[a * v + x] /= total;
      present.push_back(a);
    }
    for (std::size_t i = 0; i < present.size(); ++i) {
      for (std::size_t k = i + 1; k < present.size(); ++k) {
        double diff = 0.0;
        for (std::size_t x = 0; x < v; ++x) {
          diff = std::max(diff, std::abs(joint[present[i] * v + x] - joint[present[k] * v + x]));
        }
        if (diff <= 1e-12) return true;
      }
    }
  }
  return false;
}

void SweepConfig::Validate() const {
  GrammarParams base{depth, branching, vocab, 1, seed};
  base.Validate();
  Require(!m_list.empty(), ErrorCode::kInvalidConfig, "sweep m_list is empty");
  Require(!p_grid.empty(), ErrorCode::kInvalidConfig, "sweep P_grid is empty");
  Require(std::is_sorted(p_grid.begin(), p_grid.end()) && p_grid.front() >= 1,
          ErrorCode::kInvalidConfig, "sweep P_grid must be ascending and positive");
  Require(trials >= 5, ErrorCode::kInvalidConfig, "sweep needs at least 5 trials per point");
  Require(threshold > 0.0 && threshold < 1.0, ErrorCode::kInvalidConfig,
          "sweep threshold must lie in (0, 1)");
  Require(generated >= 1, ErrorCode::kInvalidConfig, "generated sample count must be >= 1");
  Require(depth >= 2, ErrorCode::kInvalidConfig, "sweeps need L >= 2 (nothing to cluster)");
  for (int m : m_list) {
    GrammarParams p = base;
    p.synonyms = m;
    p.Validate();
  }
}

std::vector<std::size_t> GeometricGrid(double lo, double hi, int count) {
  Require(lo >= 1.0 && hi >= lo && count >= 1, ErrorCode::kInvalidArgument,
          "geometric grid needs 1 <= lo <= hi and count >= 1");
  std::vector<std::size_t> grid;
  for (int k = 0; k < count; ++k) {
    const double t = count == 1 ? 0.0 : static_cast<double>(k) / (count - 1);
    grid.push_back(static_cast<std::size_t>(std::llround(lo * std::pow(hi / lo, t))));
  }
  grid.erase(std::unique(grid.begin(), grid.end()), grid.end());
  return grid;
}

SlopeFit FitLogLogSlope(std::span<const double> m, std::span<const double> p_star) {
  Require(m.size() == p_star.size(), ErrorCode::kInvalidArgument, "size mismatch");
  const std::size_t n = m.size();
  Require(n >= 3, ErrorCode::kInsufficientData, "slope fit needs at least 3 points");
  std::vector<double> x(n), y(n);
  for (std::size_t i = 0; i < n; ++i) {
    x[i] = std::log(m[i]);
    y[i] = std::log(p_star[i]);
  }
  const double mx = std::accumulate(x.begin(), x.end(), 0.0) / n;
  const double my = std::accumulate(y.begin(), y.end(), 0.0) / n;
  double sxx = 0.0, sxy = 0.0;
  for (std::size_t i = 0; i < n; ++i) {
    sxx += (x[i] - mx) * (x[i] - mx);
    sxy += (x[i] - mx) * (y[i] - my);
  }
  Require(sxx > 0.0, ErrorCode::kInsufficientData, "slope fit needs distinct m values");
  SlopeFit fit;
  fit.points = static_cast<int>(n);
  fit.slope = sxy / sxx;
  fit.intercept = my - fit.slope * mx;
  double sse = 0.0;
  for (std::size_t i = 0; i < n; ++i) {
    const double r = y[i] - fit.intercept - fit.slope * x[i];
    sse += r * r;
  }
  // Two-sided 95% Student t quantiles for 1..30 degrees of freedom.
  static constexpr double kT975[] = {12.706, 4.303, 3.182, 2.776, 2.571, 2.447, 2.365,
                                     2.306,  2.262, 2.228, 2.201, 2.179, 2.160, 2.145,
                                     2.131,  2.120, 2.110, 2.101, 2.093, 2.086, 2.080,
                                     2.074,  2.069, 2.064, 2.060, 2.056, 2.052, 2.048,
                                     2.045,  2.042};
  const std::size_t df = n - 2;
  const double t = df <= 30 ? kT975[df - 1] : 1.96;
  const double se = std::sqrt(sse / static_cast<double>(df) / sxx);
  fit.ci_low = fit.slope - t * se;
  fit.ci_high = fit.slope + t * se;
  return fit;
}

void ParallelFor(std::size_t n, int threads, const std::function<void(std::size_t)>& fn) {
  const std::size_t workers =
      std::min<std::size_t>(n, static_cast<std::size_t>(std::max(1, threads)));
  if (workers <= 1) {
    for (std::size_t i = 0; i < n; ++i) fn(i);
    return;
  }
  std::atomic<std::size_t> next{0};
  std::mutex mu;
  std::size_t failed_index = n;
  std::exception_ptr failure;
  auto work = [&] {
    for (std::size_t i = next++; i < n; i = next++) {
      try {
        fn(i);
      } catch (...) {
        std::lock_guard<std::mutex> lock(mu);
        // Report the lowest failing index so errors do not depend on timing.
        if (i < failed_index) {
          failed_index = i;
          failure = std::current_exception();
        }
      }
    }
  };
  std::vector<std::thread> pool;
  for (std::size_t w = 0; w < workers; ++w) pool.emplace_back(work);
  for (auto& t : pool) t.join();
  if (failure) std::rethrow_exception(failure);
}

SweepResult MeasureSampleComplexity(const SweepConfig& config) {
  config.Validate();
  SweepResult result;
  std::vector<double> fit_m, fit_p, fit_m_gen, fit_p_gen;
  for (int m : config.m_list) {
    GrammarParams params{config.depth, config.branching, config.vocab, m, 0};

    // One grammar per trial, shared along the P grid.
    std::vector<std::uint64_t> grammar_seeds(config.trials);
    std::vector<RuleSet> grammars;
    for (int t = 0; t < config.trials; ++t) {
      const std::uint64_t base = DeriveSeed(
          config.seed, static_cast<std::uint64_t>(m) * 1000003ULL + t, "grammar");
      std::uint64_t seed = base;
      for (std::uint64_t attempt = 1;; ++attempt) {
        params.seed = seed;
        RuleSet rs = RuleSet::Generate(params);
        if (!config.resample_degenerate || !HasDegenerateContexts(rs)) {
          grammars.push_back(std::move(rs));
          break;
        }
        seed = DeriveSeed(base, attempt, "resample");
      }
      grammar_seeds[t] = seed;
    }

    SweepSummaryRow row;
    row.m = m;
    row.censored = row.censored_generation = true;
    int streak = 0;
    for (std::size_t pi = 0; pi < config.p_grid.size(); ++pi) {
      const std::size_t p = config.p_grid[pi];
      std::vector<SweepTrial> trials(config.trials);
      ParallelFor(trials.size(), config.threads, [&](std::size_t t) {
        SweepTrial& trial = trials[t];
        trial.m = m;
        trial.p = p;
        trial.trial = static_cast<int>(t);
        trial.grammar_seed = grammar_seeds[t];
        trial.data_seed = DeriveSeed(grammar_seeds[t], p, "data");
        Rng rng(trial.data_seed);
        const Dataset data = SampleDistinct(grammars[t], p, rng);
        LearnOptions options;
        options.variant = config.variant;
        options.pooled = config.pooled;
        options.kmeans.seed = DeriveSeed(trial.data_seed, 0, "kmeans");
        const ClusterModel model = LearnGrammar(data, grammars[t], options);
        for (const auto& level : model.levels) trial.recovery.push_back(level.recovery);
        trial.min_recovery = model.MinRecovery();
        Rng gen_rng(DeriveSeed(trial.data_seed, 0, "generate"));
        const Dataset generated = GenerateFromLearned(model, config.generated, gen_rng);
        trial.accuracy = AccuracyCurve(grammars[t], generated);
      });

      SweepPoint point;
      point.m = m;
      point.p = p;
      std::vector<double> rec, acc;
      for (const auto& trial : trials) {
        rec.push_back(trial.min_recovery);
        acc.push_back(trial.accuracy.back());
      }
      point.median_recovery = Median(rec);
      point.median_accuracy = Median(acc);
      result.points.push_back(point);
      for (auto& trial : trials) result.trials.push_back(std::move(trial));

      const bool clustered = point.median_recovery > config.threshold;
      const bool generates = point.median_accuracy > config.accuracy_threshold;
      if (clustered && row.censored) {
        row.censored = false;
        row.p_star = p;
      }
      if (generates && row.censored_generation) {
        row.censored_generation = false;
        row.p_star_generation = p;
      }
      streak = clustered && generates ? streak + 1 : 0;
      if (config.stop_after > 0 && streak >= config.stop_after) break;
    }
    if (m > 1 && !row.censored) {
      fit_m.push_back(m);
      fit_p.push_back(static_cast<double>(row.p_star));
    }
    if (m > 1 && !row.censored_generation) {
      fit_m_gen.push_back(m);
      fit_p_gen.push_back(static_cast<double>(row.p_star_generation));
    }
    result.summary.push_back(row);
  }
  if (fit_m.size() >= 3) result.fit = FitLogLogSlope(fit_m, fit_p);
  if (fit_m_gen.size() >= 3) result.fit_generation = FitLogLogSlope(fit_m_gen, fit_p_gen);
  return result;
}

}  // namespace rhm
