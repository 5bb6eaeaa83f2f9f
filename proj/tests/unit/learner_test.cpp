#include <doctest.h>

#include <algorithm>
#include <cmath>

#include "rhm/error.hpp"
#include "rhm/learner.hpp"
#include "rhm/statistics.hpp"

using namespace rhm;

namespace {

GrammarParams Params(int L, int s, int v, int m, std::uint64_t seed) {
  GrammarParams p;
  p.depth = L;
  p.branching = s;
  p.vocab = v;
  p.synonyms = m;
  p.seed = seed;
  return p;
}

LevelSequences LatentSequences(const Dataset& d, int level) {
  LevelSequences out;
  out.vocab = d.vocab;
  out.width = d.LevelRow(level, 0).size();
  for (std::size_t i = 0; i < d.rows(); ++i) {
    auto row = d.LevelRow(level, i);
    out.symbols.insert(out.symbols.end(), row.begin(), row.end());
  }
  return out;
}

// Pairs of tuples joined in both partitions or split in both, counted by
// brute force over all pairs.
double BruteRand(const std::vector<int>& a, const std::vector<int>& b) {
  double agree = 0, total = 0;
  for (std::size_t i = 0; i < a.size(); ++i) {
    for (std::size_t j = i + 1; j < a.size(); ++j) {
      const bool same_b = b[i] >= 0 && b[i] == b[j];
      agree += (a[i] == a[j]) == same_b;
      total += 1;
    }
  }
  return agree / total;
}

}  // namespace

TEST_CASE("context vectors are conditional distributions") {
  const RuleSet rs = RuleSet::Generate(Params(3, 2, 6, 2, 1));
  Rng rng(2);
  const Dataset d = Sample(rs, 2000, rng);
  const LevelSequences tokens = TokenSequences(d);
  for (auto variant : {ContextVariant::kSingleToken, ContextVariant::kFullTuple}) {
    for (bool pooled : {true, false}) {
      const ContextStats st = BuildContextStats(tokens, tokens, 0, 2, variant, pooled);
      double events = 0.0;
      for (std::size_t k = 0; k < st.tuples(); ++k) {
        events += st.counts[k];
        const auto mean = st.Mean(k);
        const std::size_t blocks = st.dim() / 6;
        for (std::size_t b = 0; b < blocks; ++b) {
          double sum = 0.0;
          for (int a = 0; a < 6; ++a) sum += mean[b * 6 + a];
          CHECK(sum == doctest::Approx(1.0).epsilon(1e-12));
        }
      }
      CHECK(events == (pooled ? 4.0 : 1.0) * 2000);
      CHECK(st.dim() == (variant == ContextVariant::kSingleToken ? 6u : 12u));
    }
  }
  LevelSequences narrow;
  narrow.width = 2;
  narrow.vocab = 6;
  narrow.symbols = {0, 1};
  CHECK_THROWS_AS(BuildContextStats(narrow, narrow, 0, 2, ContextVariant::kSingleToken, true),
                  Error);
}

TEST_CASE("fixed co-occurrence gives a one-hot mean") {
  LevelSequences seq;
  seq.width = 4;
  seq.vocab = 3;
  for (int i = 0; i < 10; ++i) seq.symbols.insert(seq.symbols.end(), {0, 1, 2, 2});
  const ContextStats st = BuildContextStats(seq, seq, 0, 2, ContextVariant::kSingleToken, false);
  // Unpooled: the block at positions 2..3 with context x_1.
  REQUIRE(st.tuples() == 1);
  CHECK(st.Mean(0)[0] == 1.0);
  CHECK(st.Mean(0)[2] == 0.0);
}

TEST_CASE("population context vectors of synonyms coincide") {
  const RuleSet rs = RuleSet::Generate(Params(2, 2, 4, 2, 6));
  for (auto variant : {ContextVariant::kSingleToken, ContextVariant::kFullTuple}) {
    const ContextStats st = PopulationContextStats(rs, 0, variant, true);
    CHECK(st.tuples() == 8);
    for (Symbol parent = 0; parent < 4; ++parent) {
      const std::size_t c0 = rs.EncodeTuple(rs.Production(1, parent, 0));
      const std::size_t c1 = rs.EncodeTuple(rs.Production(1, parent, 1));
      const auto k0 = std::lower_bound(st.tuple_codes.begin(), st.tuple_codes.end(), c0) -
                      st.tuple_codes.begin();
      const auto k1 = std::lower_bound(st.tuple_codes.begin(), st.tuple_codes.end(), c1) -
                      st.tuple_codes.begin();
      CHECK(std::ranges::equal(st.Mean(k0), st.Mean(k1)));
    }
    // k-means on exact vectors recovers the synonym classes, unless two
    // parents happen to share the same conditional.
    if (!HasDegenerateContexts(rs)) {
      KMeansConfig cfg;
      cfg.seed = 1;
      const TuplePartition part = ClusterTuples(st, 4, cfg);
      std::vector<int> truth;
      for (std::size_t code : part.tuple_codes) truth.push_back(rs.LookupCode(1, code).parent);
      CHECK(RandScore(part.cluster_of, truth) == 1.0);
    }
  }
}

TEST_CASE("collapse with the true partition equals the retained latents") {
  const RuleSet rs = RuleSet::Generate(Params(3, 2, 8, 3, 9));
  Rng rng(10);
  const Dataset d = Sample(rs, 3000, rng);
  const ClusterModel oracle = OracleModel(d, rs, {});
  const LevelSequences tokens = TokenSequences(d);
  const LevelSequences collapsed =
      CollapseBlocks(tokens, oracle.levels[0].partition, rs.params().branching);
  const LevelSequences latent = LatentSequences(d, 1);
  CHECK(collapsed.symbols == latent.symbols);
  for (auto variant : {ContextVariant::kSingleToken, ContextVariant::kFullTuple}) {
    const ContextStats a = BuildContextStats(collapsed, tokens, 1, 2, variant, true);
    const ContextStats b = BuildContextStats(latent, tokens, 1, 2, variant, true);
    CHECK(a.tuple_codes == b.tuple_codes);
    CHECK(a.means == b.means);
    CHECK(a.counts == b.counts);
  }
}

TEST_CASE("shard merge of context statistics") {
  const RuleSet rs = RuleSet::Generate(Params(2, 2, 8, 2, 11));
  Rng rng(12);
  const Dataset d = Sample(rs, 1000, rng);
  ContextAccumulator all(0, 8, 2, ContextVariant::kFullTuple, true);
  ContextAccumulator a(0, 8, 2, ContextVariant::kFullTuple, true);
  ContextAccumulator b(0, 8, 2, ContextVariant::kFullTuple, true);
  for (std::size_t i = 0; i < d.rows(); ++i) {
    all.Add(d.Row(i), d.Row(i));
    (i < 400 ? a : b).Add(d.Row(i), d.Row(i));
  }
  b.Merge(a);
  const ContextStats x = all.Finish();
  const ContextStats y = b.Finish();
  CHECK(x.tuple_codes == y.tuple_codes);
  for (std::size_t k = 0; k < x.means.size(); ++k) CHECK(std::abs(x.means[k] - y.means[k]) <= 1e-10);
}

TEST_CASE("Rand score") {
  const std::vector<int> truth = {0, 0, 1, 1, 2, 2, -1};
  CHECK(RandScore(truth, truth) == 1.0);
  const std::vector<int> one(truth.size(), 0);
  CHECK(RandScore(one, truth) == doctest::Approx(BruteRand(one, truth)));
  const std::vector<int> mixed = {0, 1, 1, 2, 2, 0, 1};
  CHECK(RandScore(mixed, truth) == doctest::Approx(BruteRand(mixed, truth)));

  // v = 16, m = 4, one cluster: within-class pairs over all pairs.
  std::vector<int> classes;
  for (int c = 0; c < 16; ++c) {
    for (int r = 0; r < 4; ++r) classes.push_back(c);
  }
  const std::vector<int> lump(64, 0);
  CHECK(RandScore(lump, classes) == doctest::Approx(16.0 * 6 / (64.0 * 63 / 2)));

  // Random partitions into k clusters concentrate near the baseline.
  Rng rng(3);
  double mean = 0.0;
  const int reps = 400;
  for (int rep = 0; rep < reps; ++rep) {
    std::vector<int> random(64);
    for (auto& x : random) x = static_cast<int>(rng.Below(16));
    mean += RandScore(random, classes) / reps;
  }
  CHECK(mean == doctest::Approx(RandChanceBaseline(classes, 16)).epsilon(0.005));
}

TEST_CASE("m = 1 recovers from v samples") {
  const RuleSet rs = RuleSet::Generate(Params(3, 2, 8, 1, 13));
  Rng rng(14);
  const Dataset d = Sample(rs, 8, rng);
  const ClusterModel model = LearnGrammar(d, rs, {});
  for (const auto& level : model.levels) CHECK(level.recovery == 1.0);
}

TEST_CASE("plentiful data recovers the grammar and regenerates it") {
  const RuleSet rs = RuleSet::Generate(Params(2, 2, 16, 4, 15));
  REQUIRE_FALSE(HasDegenerateContexts(rs));
  Rng rng(16);
  const Dataset d = SampleDistinct(rs, 20000, rng);
  LearnOptions opt;
  opt.kmeans.seed = 1;
  const ClusterModel model = LearnGrammar(d, rs, opt);
  CHECK(model.levels[0].recovery == 1.0);
  CHECK(model.levels[0].detected);
  CHECK(model.LearnedDepth() == 1);
  CHECK(model.top_tuples.size() == 64);
  Rng g(17);
  const auto acc = AccuracyCurve(rs, GenerateFromLearned(model, 2000, g));
  CHECK(acc[2] >= 0.99);
  // Productions are exactly the observed inventory.
  std::size_t members = 0;
  for (int c = 0; c < 16; ++c) members += model.levels[0].Members(c).size();
  CHECK(members == model.levels[0].partition.tuple_codes.size());
}

TEST_CASE("minimal inventory clusters at chance") {
  const RuleSet rs = RuleSet::Generate(Params(2, 2, 16, 4, 19));
  Rng rng(20);
  const Dataset d = SampleDistinct(rs, 64, rng);
  LearnOptions opt;
  opt.kmeans.seed = 2;
  const ClusterModel model = LearnGrammar(d, rs, opt);
  CHECK(model.levels[0].recovery < 0.95);
  CHECK(std::abs(model.levels[0].recovery - model.levels[0].chance) < 0.1);
  CHECK_FALSE(model.levels[0].detected);
  // Undetected level: blocks are drawn independently from the inventory.
  Rng g(21);
  const auto acc = AccuracyCurve(rs, GenerateFromLearned(model, 4000, g));
  CHECK(acc[1] == 1.0);
  CHECK(acc[2] < 0.5);
}

TEST_CASE("oracle partitions regenerate perfectly") {
  const RuleSet rs = RuleSet::Generate(Params(3, 2, 8, 2, 23));
  Rng rng(24);
  const Dataset d = Sample(rs, 3000, rng);
  const ClusterModel model = OracleModel(d, rs, {});
  for (const auto& level : model.levels) CHECK(level.recovery == 1.0);
  Rng g(25);
  for (double a : AccuracyCurve(rs, GenerateFromLearned(model, 3000, g))) CHECK(a == 1.0);
}

TEST_CASE("random merges at the upper level") {
  // Correct level-0 clusters, scrambled level-1 clusters.
  const RuleSet rs = RuleSet::Generate(Params(3, 2, 8, 2, 27));
  Rng rng(28);
  const Dataset d = Sample(rs, 4000, rng);
  ClusterModel model = OracleModel(d, rs, {});
  auto& part = model.levels[1].partition;
  for (auto& c : part.cluster_of) c = static_cast<int>(rng.Below(8));
  // Rebuild the top inventory from the scrambled level.
  const LevelSequences tokens = TokenSequences(d);
  const LevelSequences l1 = CollapseBlocks(tokens, model.levels[0].partition, 2);
  const LevelSequences l2 = CollapseBlocks(l1, part, 2);
  model.top_tuples.clear();
  for (std::size_t i = 0; i < l2.rows(); ++i) {
    auto row = l2.Row(i);
    model.top_tuples.push_back(static_cast<std::size_t>(row[0]) * 8 + row[1]);
  }
  std::sort(model.top_tuples.begin(), model.top_tuples.end());
  model.top_tuples.erase(std::unique(model.top_tuples.begin(), model.top_tuples.end()),
                         model.top_tuples.end());
  Rng g(29);
  const auto acc = AccuracyCurve(rs, GenerateFromLearned(model, 20000, g));
  // Members of a scrambled cluster are still observed valid tuples, so the
  // damage shows at the level above them.
  CHECK(acc[1] == 1.0);
  CHECK(acc[2] == 1.0);
  CHECK(acc[3] < 0.6);
}

TEST_CASE("learned grammar serializes") {
  const RuleSet rs = RuleSet::Generate(Params(2, 2, 8, 2, 31));
  Rng rng(32);
  const Dataset d = Sample(rs, 2000, rng);
  const std::string json = ClusterModelToJson(LearnGrammar(d, rs, {}));
  CHECK(json.find("\"levels\"") != std::string::npos);
  CHECK(json.find("\"top\"") != std::string::npos);
}

TEST_CASE("degenerate contexts are detected") {
  // Both root productions put symbol 0 on the left, so the two right-hand
  // level-1 symbols see the same x_1 distribution.
  const auto p = Params(2, 2, 2, 1, 0);
  const std::vector<std::vector<std::vector<std::vector<Symbol>>>> tables = {
      {{{0, 1}}, {{1, 1}}},
      {{{0, 0}}, {{0, 1}}},
  };
  CHECK(HasDegenerateContexts(RuleSet::FromTables(p, tables)));
  CHECK_FALSE(HasDegenerateContexts(RuleSet::Generate(Params(2, 2, 16, 4, 15))));
}

TEST_CASE("log-log slope fit") {
  const std::vector<double> m = {2, 3, 4, 6, 8};
  std::vector<double> p;
  for (double x : m) p.push_back(5.0 * std::pow(x, 3.0));
  const SlopeFit fit = FitLogLogSlope(m, p);
  CHECK(fit.slope == doctest::Approx(3.0));
  CHECK(fit.ci_low == doctest::Approx(3.0));
  CHECK(fit.points == 5);
  CHECK_THROWS_AS(FitLogLogSlope(std::vector<double>{2, 3}, std::vector<double>{1, 2}), Error);
  const auto grid = GeometricGrid(32, 1024, 6);
  CHECK(grid == std::vector<std::size_t>{32, 64, 128, 256, 512, 1024});
}

TEST_CASE("small sweep") {
  SweepConfig c;
  c.depth = 2;
  c.vocab = 8;
  c.m_list = {1, 2, 3, 4};
  c.p_grid = GeometricGrid(16, 8192, 10);
  c.trials = 5;
  c.seed = 3;
  const SweepResult a = MeasureSampleComplexity(c);
  c.threads = 2;
  const SweepResult b = MeasureSampleComplexity(c);
  REQUIRE(a.trials.size() == b.trials.size());
  for (std::size_t i = 0; i < a.trials.size(); ++i) {
    CHECK(a.trials[i].recovery == b.trials[i].recovery);
    CHECK(a.trials[i].accuracy == b.trials[i].accuracy);
  }
  REQUIRE(a.summary.size() == 4);
  for (std::size_t i = 1; i < a.summary.size(); ++i) {
    if (!a.summary[i].censored && !a.summary[i - 1].censored) {
      CHECK(a.summary[i].p_star >= a.summary[i - 1].p_star);
    }
  }
  // m = 1 saturates at the first grid point and is excluded from the fit.
  CHECK(a.summary[0].p_star <= 64);
  CHECK(a.fit.points <= 3);
  CHECK(a.fit.slope > 1.0);

  SweepConfig bad = c;
  bad.trials = 4;
  CHECK_THROWS_AS(MeasureSampleComplexity(bad), Error);
  bad = c;
  bad.p_grid.clear();
  CHECK_THROWS_AS(MeasureSampleComplexity(bad), Error);
}

TEST_CASE("ten times the detection threshold recovers the synonyms") {
  const GrammarParams base = Params(2, 2, 16, 4, 0);
  const double p2 = Theory(base, 2).sample_complexity;
  const auto n = static_cast<std::size_t>(10 * p2);
  int successes = 0;
  for (int trial = 0; trial < 20; ++trial) {
    GrammarParams p = base;
    p.seed = DeriveSeed(77, trial, "grammar");
    const RuleSet rs = RuleSet::Generate(p);
    Rng rng(DeriveSeed(p.seed, 0, "data"));
    LearnOptions opt;
    opt.kmeans.seed = trial;
    successes += LearnGrammar(SampleDistinct(rs, n, rng), rs, opt).levels[0].recovery >= 0.95;
  }
  CHECK(successes >= 16);
}
