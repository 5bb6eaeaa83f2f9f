#include <doctest.h>

#include <algorithm>
#include <cmath>

#include "rhm/error.hpp"
#include "rhm/one_step.hpp"

using namespace rhm;

namespace {

GrammarParams Params(int L, int v, int m, std::uint64_t seed) {
  GrammarParams p;
  p.depth = L;
  p.branching = 2;
  p.vocab = v;
  p.synonyms = m;
  p.seed = seed;
  return p;
}

// Random dataset in which every label occurs.
NextTokenData RandomPairs(int v, std::size_t n, Rng& rng) {
  NextTokenData d;
  d.vocab = v;
  d.branching = 2;
  for (std::size_t i = 0; i < n; ++i) {
    d.tuple_codes.push_back(rng.Below(v * v));
    d.labels.push_back(static_cast<Symbol>(i < static_cast<std::size_t>(v) ? i : rng.Below(v)));
  }
  return d;
}

}  // namespace

TEST_CASE("one gradient step equals eta times the correlation") {
  Rng rng(1);
  for (int rep = 0; rep < 10; ++rep) {
    const NextTokenData d = RandomPairs(5, 300, rng);
    for (double eta : {0.1, 1.0, 10.0}) {
      const OneStepModel model = OneStepGd(d, eta);
      CHECK(OneStepIdentityError(model) <= 1e-10);
      CHECK(model.eta == eta);
    }
  }
}

TEST_CASE("initial columns are the log label marginals") {
  Rng rng(2);
  const NextTokenData d = RandomPairs(4, 200, rng);
  const OneStepModel model = OneStepGd(d, 1.0);
  std::vector<double> count(4, 0.0);
  for (Symbol y : d.labels) count[y] += 1.0;
  for (int a = 0; a < 4; ++a) {
    CHECK(model.init[a] == doctest::Approx(std::log(count[a] / 200)));
    for (std::size_t k = 0; k < model.tuples(); ++k) {
      CHECK(model.weights[a * model.tuples() + k] - model.Delta(a, k) ==
            doctest::Approx(model.init[a]));
    }
  }
}

TEST_CASE("population step gives identical synonym columns") {
  const RuleSet rs = RuleSet::Generate(Params(2, 4, 2, 5));
  const NextTokenData pop = PopulationNextTokenPairs(rs);
  const OneStepModel model = OneStepGd(pop, 1.0);
  CHECK(OneStepIdentityError(model) <= 1e-12);
  for (std::size_t i = 0; i < model.tuples(); ++i) {
    for (std::size_t j = i + 1; j < model.tuples(); ++j) {
      if (rs.LookupCode(1, model.tuple_codes[i]).parent !=
          rs.LookupCode(1, model.tuple_codes[j]).parent) {
        continue;
      }
      for (int a = 0; a < 4; ++a) CHECK(std::abs(model.Delta(a, i) - model.Delta(a, j)) <= 1e-15);
    }
  }
  CHECK(SynonymColumnCosine(model, rs) == doctest::Approx(1.0));
}

TEST_CASE("missing label and bad learning rate") {
  NextTokenData d;
  d.vocab = 3;
  d.branching = 2;
  d.tuple_codes = {0, 1, 2};
  d.labels = {0, 1, 1};
  try {
    OneStepGd(d, 1.0);
    FAIL("expected an error");
  } catch (const Error& e) {
    CHECK(e.code() == ErrorCode::kInsufficientData);
  }
  d.labels = {0, 1, 2};
  CHECK_THROWS_AS(OneStepGd(d, 0.0), Error);
  CHECK_THROWS_AS(OneStepGd(d, -1.0), Error);
}

TEST_CASE("next-token pairs from samples") {
  const RuleSet rs = RuleSet::Generate(Params(2, 4, 2, 9));
  Rng rng(10);
  const Dataset data = Sample(rs, 50, rng);
  const NextTokenData pairs = NextTokenPairs(data, rs.params());
  REQUIRE(pairs.labels.size() == 50);
  for (std::size_t i = 0; i < 50; ++i) {
    CHECK(pairs.labels[i] == data.Row(i)[2]);
    CHECK(pairs.tuple_codes[i] == rs.EncodeTuple(data.Row(i).first(2)));
  }
}

TEST_CASE("synonym columns align near the detection threshold") {
  // With squared signal-to-noise P / P2 per entry, the mean cosine between
  // synonym columns follows r / (1 + r), r = P / P2: 1/2 at P2 and 0.9 at 9 P2.
  GrammarParams p = Params(2, 16, 4, 0);
  const double p2 = Theory(p, 2).sample_complexity;
  for (int g = 0; g < 3; ++g) {
    p.seed = DeriveSeed(3, g, "grammar");
    const RuleSet rs = RuleSet::Generate(p);
    double half = 0.0, ninety = 0.0;
    for (std::size_t n = 256; n <= 1 << 18; n *= 2) {
      Rng rng(DeriveSeed(p.seed, n, "data"));
      const double cosine =
          SynonymColumnCosine(OneStepGd(NextTokenPairs(Sample(rs, n, rng), p), 1.0), rs);
      const double r = n / p2;
      CHECK(std::abs(cosine - r / (1 + r)) < 0.08);
      if (half == 0.0 && cosine > 0.5) half = static_cast<double>(n);
      if (ninety == 0.0 && cosine > 0.9) ninety = static_cast<double>(n);
    }
    CHECK(half >= p2 / 2);
    CHECK(half <= p2 * 2);
    CHECK(ninety >= 9 * p2 / 4);
    CHECK(ninety <= 9 * p2 * 4);
  }
}
