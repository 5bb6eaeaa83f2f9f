#include <doctest.h>

#include <algorithm>
#include <cmath>
#include <map>
#include <numeric>

#include "enumeration_oracle.hpp"
#include "rhm/error.hpp"
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

Dataset UniformTokens(std::size_t rows, std::size_t length, int v, Rng& rng) {
  Dataset d;
  d.length = length;
  d.vocab = v;
  d.tokens.resize(rows * length);
  for (auto& t : d.tokens) t = static_cast<Symbol>(rng.Below(v));
  return d;
}

// Mean over pairs with LCA at `level` of ||Cov||_F / v, from the trees.
double OracleTokenToken(const RuleSet& rs, int level) {
  const auto& p = rs.params();
  const auto trees = oracle::AllTrees(rs);
  const std::size_t d = p.SequenceLength();
  const int v = p.vocab;
  double total = 0.0;
  int pairs = 0;
  for (std::size_t i = 1; i <= d; ++i) {
    for (std::size_t j = i + 1; j <= d; ++j) {
      if (ComputeTreeDistance(i, j, p).level != level) continue;
      std::vector<double> joint(v * v, 0.0), pi(v, 0.0), pj(v, 0.0);
      for (const auto& t : trees) {
        joint[t.levels[0][i - 1] * v + t.levels[0][j - 1]] += t.prior;
        pi[t.levels[0][i - 1]] += t.prior;
        pj[t.levels[0][j - 1]] += t.prior;
      }
      double sq = 0.0;
      for (int a = 0; a < v; ++a) {
        for (int b = 0; b < v; ++b) {
          const double c = joint[a * v + b] - pi[a] * pj[b];
          sq += c * c;
        }
      }
      total += std::sqrt(sq) / v;
      ++pairs;
    }
  }
  return total / pairs;
}

// x_1 against the level-(level-2) block at positions s..2s-1, from the trees.
std::map<std::pair<int, std::size_t>, double> OracleTokenTuple(const RuleSet& rs, int level) {
  const auto& p = rs.params();
  const int v = p.vocab, s = p.branching;
  std::map<std::pair<int, std::size_t>, double> joint;
  std::vector<double> px(v, 0.0);
  std::map<std::size_t, double> pt;
  for (const auto& t : oracle::AllTrees(rs)) {
    const auto& row = t.levels[level - 2];
    std::size_t code = 0;
    for (int c = 0; c < s; ++c) code = code * v + row[s + c];
    joint[{t.levels[0][0], code}] += t.prior;
    px[t.levels[0][0]] += t.prior;
    pt[code] += t.prior;
  }
  std::map<std::pair<int, std::size_t>, double> out;
  for (int a = 0; a < v; ++a) {
    for (const auto& [code, q] : pt) out[{a, code}] = joint[{a, code}] - px[a] * q;
  }
  return out;
}

}  // namespace

TEST_CASE("token-token floor of independent tokens") {
  Rng rng(1);
  const auto p = Params(3, 2, 16, 4, 0);
  const std::size_t n = 1 << 16;
  const Dataset d = UniformTokens(n, 8, 16, rng);
  const CorrelationReport rep = TokenTokenCorrelation(d, p);
  CHECK(rep.noise_floor == doctest::Approx(1.0 / (16.0 * 256.0)));
  for (double x : rep.values) CHECK(std::abs(x / rep.noise_floor - 1.0) < 0.2);
  CHECK(rep.distances == std::vector<std::size_t>{2, 4, 8});
  CHECK(rep.n_pairs == std::vector<std::size_t>{4, 8, 16});
}

TEST_CASE("constant dataset has zero covariance") {
  const auto p = Params(2, 2, 4, 2, 0);
  Dataset d;
  d.length = 4;
  d.vocab = 4;
  for (int i = 0; i < 50; ++i) d.tokens.insert(d.tokens.end(), {1, 2, 3, 0});
  for (double x : TokenTokenCorrelation(d, p).values) CHECK(x == 0.0);
  Dataset empty;
  empty.length = 4;
  empty.vocab = 4;
  CHECK_THROWS_AS(TokenTokenCorrelation(empty, p), Error);
}

TEST_CASE("population token-token correlation matches the enumeration oracle") {
  for (std::uint64_t seed : {1, 2, 3}) {
    const RuleSet rs = RuleSet::Generate(Params(2, 2, 4, 2, seed));
    const CorrelationReport rep = PopulationTokenTokenCorrelation(rs);
    for (int level = 1; level <= 2; ++level) {
      CHECK(std::abs(rep.At(level) - OracleTokenToken(rs, level)) <= 1e-9);
    }
  }
}

TEST_CASE("token-token estimator symmetries and sharding") {
  const RuleSet rs = RuleSet::Generate(Params(3, 2, 5, 2, 9));
  Rng rng(10);
  Dataset d = Sample(rs, 4000, rng);
  const CorrelationReport base = TokenTokenCorrelation(d, rs.params());

  // Row shuffle.
  Dataset shuffled = d;
  shuffled.latents.clear();
  std::vector<std::size_t> order(d.rows());
  std::iota(order.begin(), order.end(), 0);
  std::reverse(order.begin(), order.end());
  for (std::size_t i = 0; i < d.rows(); ++i) {
    std::copy(d.Row(order[i]).begin(), d.Row(order[i]).end(),
              shuffled.tokens.begin() + i * d.length);
  }
  const CorrelationReport shuf = TokenTokenCorrelation(shuffled, rs.params());
  for (std::size_t k = 0; k < base.values.size(); ++k) {
    CHECK(std::abs(shuf.values[k] - base.values[k]) <= 1e-12);
  }

  // Mirrored rows swap the order of every pair but keep its tree distance.
  Dataset mirrored = shuffled;
  for (std::size_t i = 0; i < d.rows(); ++i) {
    std::reverse_copy(d.Row(i).begin(), d.Row(i).end(), mirrored.tokens.begin() + i * d.length);
  }
  const CorrelationReport mir = TokenTokenCorrelation(mirrored, rs.params());
  for (std::size_t k = 0; k < base.values.size(); ++k) {
    CHECK(std::abs(mir.values[k] - base.values[k]) <= 1e-12);
  }

  TokenPairAccumulator a(rs.params()), b(rs.params()), c(rs.params());
  for (std::size_t i = 0; i < d.rows(); ++i) (i % 3 == 0 ? a : i % 3 == 1 ? b : c).Add(d.Row(i));
  TokenPairAccumulator left = a;
  left.Merge(b);
  left.Merge(c);
  TokenPairAccumulator right = c;
  right.Merge(a);
  right.Merge(b);
  const auto r1 = left.Report();
  const auto r2 = right.Report();
  for (std::size_t k = 0; k < base.values.size(); ++k) {
    CHECK(std::abs(r1.values[k] - base.values[k]) <= 1e-10);
    CHECK(std::abs(r2.values[k] - base.values[k]) <= 1e-10);
  }
}

TEST_CASE("adjacent correlations stand above the floor") {
  const RuleSet rs = RuleSet::Generate(Params(3, 2, 8, 2, 17));
  Rng rng(18);
  const Dataset d = Sample(rs, 10'000, rng);
  const CorrelationReport rep = TokenTokenCorrelation(d, rs.params());
  CHECK(rep.At(1) > 2 * rep.noise_floor);
  // Correlations decay with distance.
  CHECK(rep.At(1) > rep.At(2));
}

TEST_CASE("token-tuple correlation: identities and two population routes") {
  const RuleSet rs = RuleSet::Generate(Params(3, 2, 4, 2, 5));
  for (int level : {2, 3}) {
    const TokenTupleCorrelation prop = PopulationTokenTupleCorrelation(rs, level);
    const auto ref = OracleTokenTuple(rs, level);
    CHECK(prop.tuples() == 16);
    for (int a = 0; a < 4; ++a) {
      for (std::size_t k = 0; k < prop.tuples(); ++k) {
        const auto it = ref.find({a, prop.tuple_codes[k]});
        const double expected = it == ref.end() ? 0.0 : it->second;
        CHECK(std::abs(prop.At(a, k) - expected) <= 1e-12);
      }
    }
    // Marginal sums vanish.
    for (std::size_t k = 0; k < prop.tuples(); ++k) {
      double sum = 0.0;
      for (int a = 0; a < 4; ++a) sum += prop.At(a, k);
      CHECK(std::abs(sum) <= 1e-15);
    }
    for (int a = 0; a < 4; ++a) {
      double sum = 0.0;
      for (std::size_t k = 0; k < prop.tuples(); ++k) sum += prop.At(a, k);
      CHECK(std::abs(sum) <= 1e-15);
    }
    // Synonymous tuples share their row.
    const RuleSet& g = rs;
    for (Symbol parent = 0; parent < 4; ++parent) {
      const std::size_t c0 = g.EncodeTuple(g.Production(level - 1, parent, 0));
      const std::size_t c1 = g.EncodeTuple(g.Production(level - 1, parent, 1));
      for (int a = 0; a < 4; ++a) CHECK(prop.Lookup(a, c0) == prop.Lookup(a, c1));
    }
  }
}

TEST_CASE("empirical token-tuple correlation with retained or parsed latents") {
  const RuleSet rs = RuleSet::Generate(Params(3, 2, 6, 2, 7));
  Rng rng(8);
  Dataset d = Sample(rs, 5000, rng);
  const TokenTupleCorrelation kept = EmpiricalTokenTupleCorrelation(d, rs.params(), 3);
  Dataset stripped = d;
  stripped.latents.clear();
  CHECK_THROWS_AS(EmpiricalTokenTupleCorrelation(stripped, rs.params(), 3), Error);
  // Level 2 needs no latents: the tuple is visible.
  CHECK_NOTHROW(EmpiricalTokenTupleCorrelation(stripped, rs.params(), 2));
  ParseLatents(rs, stripped);
  const TokenTupleCorrelation parsed = EmpiricalTokenTupleCorrelation(stripped, rs.params(), 3);
  CHECK(parsed.tuple_codes == kept.tuple_codes);
  CHECK(parsed.values == kept.values);
  for (std::size_t k = 0; k < kept.tuples(); ++k) {
    double sum = 0.0;
    for (int a = 0; a < 6; ++a) sum += kept.At(a, k);
    CHECK(std::abs(sum) <= 1e-15);
  }
  CHECK_THROWS_AS(EmpiricalTokenTupleCorrelation(d, rs.params(), 1), Error);
  CHECK_THROWS_AS(EmpiricalTokenTupleCorrelation(d, rs.params(), 4), Error);

  Dataset junk = stripped;
  junk.latents.clear();
  junk.tokens[0] = (junk.tokens[0] + 1) % 6;
  while (Parse(rs, junk.Row(0)).max_valid_level == 3) junk.tokens[0] = (junk.tokens[0] + 1) % 6;
  try {
    ParseLatents(rs, junk);
    FAIL("expected missing latents");
  } catch (const Error& e) {
    CHECK(e.code() == ErrorCode::kMissingLatents);
  }
}

TEST_CASE("sampling noise shrinks with the sample size") {
  const RuleSet rs = RuleSet::Generate(Params(2, 2, 8, 2, 3));
  const TokenTupleCorrelation pop = PopulationTokenTupleCorrelation(rs, 2);
  Rng rng(4);
  double small = 0.0, large = 0.0;
  for (int rep = 0; rep < 5; ++rep) {
    small += TokenTupleSamplingNoise(
        EmpiricalTokenTupleCorrelation(Sample(rs, 1000, rng), rs.params(), 2), pop);
    large += TokenTupleSamplingNoise(
        EmpiricalTokenTupleCorrelation(Sample(rs, 16000, rng), rs.params(), 2), pop);
  }
  // Ratio sqrt(16) = 4 expected.
  CHECK(small / large == doctest::Approx(4.0).epsilon(0.25));
}

TEST_CASE("closed-form predictions") {
  const TheoryPrediction t = Theory(Params(3, 2, 16, 4, 0), 3, 1000.0);
  CHECK(t.rule_density == 0.25);
  CHECK(t.sample_complexity == doctest::Approx(4.0 / 3.0 * 16 * 256));
  CHECK(t.sample_complexity == doctest::Approx(5461.333).epsilon(1e-6));
  CHECK(t.local_complexity == 64.0);
  CHECK(t.correlation == doctest::Approx(std::sqrt(0.75 / (4096.0 * 1024.0))));
  CHECK(t.sampling_noise == doctest::Approx(1.0 / std::sqrt(256.0 * 4 * 1000)));
  CHECK(Theory(Params(2, 2, 16, 4, 0), 2).correlation == doctest::Approx(8.46e-4).epsilon(1e-3));
  CHECK(std::isnan(Theory(Params(2, 2, 16, 4, 0), 2).sampling_noise));

  const TheoryPrediction one = Theory(Params(3, 2, 16, 1, 0), 2);
  CHECK(one.correlation == doctest::Approx(std::sqrt((1 - 1.0 / 16) / 4096.0)));
  CHECK(one.sample_complexity == doctest::Approx(16.0 / (1 - 1.0 / 16)));

  try {
    Theory(Params(2, 2, 4, 4, 0), 2);
    FAIL("expected divergence");
  } catch (const Error& e) {
    CHECK(e.code() == ErrorCode::kDivergent);
  }
}

TEST_CASE("recursion prefactor") {
  CHECK(RecursionPrefactor(8, 2, 2) == doctest::Approx(8.0 * 7 / (2 * 63)));
  CHECK(RecursionPrefactor(512, 2, 3) == doctest::Approx(1.0 / 3).epsilon(1e-2));
  CHECK(std::abs(RecursionPrefactor(512, 2, 3) - 1.0 / 3) < std::abs(RecursionPrefactor(64, 2, 3) - 1.0 / 3));
  CHECK_THROWS_AS(CorrelationRecursionCheck(Params(3, 2, 8, 2, 1), 2, 29), Error);
  CHECK_THROWS_AS(CorrelationMagnitude(Params(2, 2, 16, 4, 1), 2, 10), Error);
}

TEST_CASE("recursion with deterministic rules") {
  const RecursionReport r = CorrelationRecursionCheck(Params(3, 2, 8, 1, 5), 2, 60);
  CHECK(r.predicted == doctest::Approx(8.0 * 7 / 63));
  CHECK(r.ratio == doctest::Approx(r.predicted).epsilon(0.3));
}
