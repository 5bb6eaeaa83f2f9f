#pragma once

#include <cstddef>
#include <cstdint>
#include <functional>
#include <span>
#include <string>
#include <vector>

#include "rhm/grammar.hpp"
#include "rhm/kmeans.hpp"

namespace rhm {

enum class ContextVariant { kSingleToken, kFullTuple };

std::string_view VariantName(ContextVariant variant);
ContextVariant ParseVariant(std::string_view name);

// Symbols of one tree level for every row, row-major (rows x width). Values
// are in [0, vocab) or -1 for an unknown symbol.
struct LevelSequences {
  std::size_t width = 0;
  int vocab = 0;
  std::vector<Symbol> symbols;

  std::size_t rows() const { return width == 0 ? 0 : symbols.size() / width; }
  std::span<const Symbol> Row(std::size_t i) const {
    return {symbols.data() + i * width, width};
  }
};

LevelSequences TokenSequences(const Dataset& data);

// Mean context vector of every observed s-tuple at one level. The target is
// an s-aligned block of level-`level` symbols; its context is read from the
// visible tokens of the sibling subtree (the neighbouring block under the
// same grandparent): the first token for kSingleToken, the first s tokens
// for kFullTuple. Pooled statistics use every block; otherwise only block 1,
// whose context is x_1.
struct ContextStats {
  int level = 0;
  ContextVariant variant = ContextVariant::kSingleToken;
  bool pooled = true;
  int vocab = 0;
  int branching = 0;
  std::vector<std::size_t> tuple_codes;  // sorted
  std::vector<double> means;             // tuples x dim
  std::vector<double> counts;

  std::size_t dim() const;
  std::size_t tuples() const { return tuple_codes.size(); }
  std::span<const double> Mean(std::size_t k) const { return {means.data() + k * dim(), dim()}; }
};

// Shard-mergeable sums behind ContextStats.
class ContextAccumulator {
 public:
  ContextAccumulator(int level, int vocab, int branching, ContextVariant variant,
                     bool pooled);

  // One row: level symbols (width d / s^level) and the visible tokens.
  void Add(std::span<const Symbol> level_row, std::span<const Symbol> tokens,
           double weight = 1.0);
  void Merge(const ContextAccumulator& other);
  ContextStats Finish() const;

 private:
  void AddEvent(std::size_t code, std::span<const Symbol> context, double weight);

  int level_;
  int vocab_;
  int branching_;
  ContextVariant variant_;
  bool pooled_;
  std::size_t dim_;
  std::vector<std::size_t> slot_of_code_;
  std::vector<std::size_t> codes_;
  std::vector<double> sums_;
  std::vector<double> counts_;
};

// Throws kInvalidArgument when the level is narrower than 2s symbols.
ContextStats BuildContextStats(const LevelSequences& level_data,
                               const LevelSequences& tokens, int level,
                               int branching, ContextVariant variant, bool pooled);

// Exact statistics with enumeration weights.
ContextStats PopulationContextStats(const RuleSet& rules, int level,
                                    ContextVariant variant, bool pooled);

struct TuplePartition {
  std::vector<std::size_t> tuple_codes;  // sorted
  std::vector<int> cluster_of;
  int clusters = 0;
  bool partial = false;
};

// k-means with k = v on the mean context vectors.
TuplePartition ClusterTuples(const ContextStats& stats, int k,
                             const KMeansConfig& config);

// Replaces each s-block of a level by its cluster id; blocks holding an
// unknown symbol or a tuple absent from the partition become -1.
LevelSequences CollapseBlocks(const LevelSequences& in, const TuplePartition& partition,
                              int branching);

// Pearson chi-square test of independence between the tuple and the first
// context token, from the accumulated counts. chi2 / dof - 1 estimates the
// squared ratio between the per-entry correlation and its sampling noise;
// z = (chi2 - dof) / sqrt(2 dof) is the significance of the excess.
struct DetectionTest {
  double chi_square = 0.0;
  double dof = 0.0;
  double z = 0.0;
  double signal_to_noise = 0.0;
};

DetectionTest TestDependence(const ContextStats& stats);

// Pairwise Rand score of a partition of tuples against reference classes
// (class -1 marks a tuple that belongs to no class; each such tuple is its
// own singleton class).
double RandScore(std::span<const int> clusters, std::span<const int> classes);

// Expected Rand score of a uniformly random assignment to k clusters.
double RandChanceBaseline(std::span<const int> classes, int k);

// Level-by-level outcome of the learner. Level j holds the clustered
// s-tuples of level-j symbols (learned cluster ids for j >= 1) and their
// partition, whose cluster ids are the level-(j+1) symbols.
struct LearnedLevel {
  int level = 0;
  TuplePartition partition;
  double recovery = 0.0;
  double chance = 0.0;
  DetectionTest detection;
  // The tuple-context dependence was detected, so the partition is used to
  // build the level above.
  bool detected = false;
  // truth_of_cluster[c]: majority true level-(j+1) symbol of cluster c, -1 if
  // none of its members maps to a valid production.
  std::vector<Symbol> truth_of_cluster;

  // Member tuple codes of cluster c.
  std::vector<std::size_t> Members(int cluster) const;
};

struct ClusterModel {
  GrammarParams params;
  ContextVariant variant = ContextVariant::kSingleToken;
  bool pooled = true;
  std::vector<LearnedLevel> levels;  // j = 0..L-2
  // Distinct observed s-tuples of level-(L-1) learned symbols; the learned
  // root draws one of them uniformly.
  std::vector<std::size_t> top_tuples;

  // Minimum recovery over the clustered levels (1 when there are none).
  double MinRecovery() const;
  // Number of leading levels whose dependence was detected. Generation uses
  // the partitions of these levels only; above them, the s-tuples of the
  // first undetected level are drawn independently from its inventory.
  int LearnedDepth() const;
};

struct LearnOptions {
  ContextVariant variant = ContextVariant::kSingleToken;
  bool pooled = true;
  KMeansConfig kmeans;
  // A level counts as detected when its correlations stand above sampling
  // noise: signal_to_noise >= detection_snr and z >= detection_z.
  double detection_snr = 1.0;
  double detection_z = 4.0;
};

// Clusters level 0, collapses every block to its cluster id, and repeats up
// to level L-2. Ground truth is used only for the recovery scores.
ClusterModel LearnGrammar(const Dataset& data, const RuleSet& truth,
                          const LearnOptions& options);

// Same pipeline with the true synonym partition injected at every level;
// every level counts as detected.
ClusterModel OracleModel(const Dataset& data, const RuleSet& truth,
                         const LearnOptions& options);

// Ancestral sampling from the learned productions.
Dataset GenerateFromLearned(const ClusterModel& model, std::size_t n, Rng& rng);

// Learned grammar as JSON: params, variant, per-level clusters with their
// member tuples, and the top-level tuple inventory.
std::string ClusterModelToJson(const ClusterModel& model);

// True if two distinct symbols at some clustered level have population
// context conditionals (single-token, block 1) within 1e-12 of each other,
// which makes them indistinguishable to any amount of data.
bool HasDegenerateContexts(const RuleSet& rules);

// Sample-complexity sweep.
struct SweepConfig {
  int depth = 2;
  int branching = 2;
  int vocab = 16;
  std::vector<int> m_list;
  std::vector<std::size_t> p_grid;  // ascending
  int trials = 5;
  ContextVariant variant = ContextVariant::kSingleToken;
  bool pooled = true;
  double threshold = 0.95;          // clustering success: min recovery
  double accuracy_threshold = 0.5;  // generation success: A_L
  std::size_t generated = 1024;
  // Stop a given m after this many consecutive grid points at which both
  // success criteria hold; 0 runs the whole grid.
  int stop_after = 2;
  bool resample_degenerate = true;
  std::uint64_t seed = 0;
  int threads = 1;

  void Validate() const;
};

struct SweepTrial {
  int m = 0;
  std::size_t p = 0;
  int trial = 0;
  std::uint64_t grammar_seed = 0;
  std::uint64_t data_seed = 0;
  std::vector<double> recovery;  // per clustered level
  std::vector<double> accuracy;  // A_0..A_L of generated samples
  double min_recovery = 0.0;
};

struct SweepPoint {
  int m = 0;
  std::size_t p = 0;
  double median_recovery = 0.0;
  double median_accuracy = 0.0;  // A_L
};

struct SlopeFit {
  double slope = 0.0;
  double intercept = 0.0;
  double ci_low = 0.0;
  double ci_high = 0.0;
  int points = 0;
};

struct SweepSummaryRow {
  int m = 0;
  std::size_t p_star = 0;
  bool censored = false;
  std::size_t p_star_generation = 0;
  bool censored_generation = false;
};

struct SweepResult {
  std::vector<SweepTrial> trials;  // sorted by (m, P, trial)
  std::vector<SweepPoint> points;
  std::vector<SweepSummaryRow> summary;
  SlopeFit fit;             // clustering P*
  SlopeFit fit_generation;  // generation P*
};

// Least squares of log P* on log m with a 95% t interval on the slope. Needs
// at least 3 points.
SlopeFit FitLogLogSlope(std::span<const double> m, std::span<const double> p_star);

// Geometric grid of `count` integers from lo to hi (deduplicated).
std::vector<std::size_t> GeometricGrid(double lo, double hi, int count);

SweepResult MeasureSampleComplexity(const SweepConfig& config);

// Runs fn(i) for i in [0, n) on up to `threads` workers.
void ParallelFor(std::size_t n, int threads, const std::function<void(std::size_t)>& fn);

}  // namespace rhm
