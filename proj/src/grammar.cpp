#include "rhm/grammar.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <string>
#include <unordered_set>

#include "rhm/error.hpp"

namespace rhm {
namespace {

constexpr std::size_t kMaxTupleSpace = std::size_t{1} << 24;
constexpr std::size_t kMaxSequenceLength = std::size_t{1} << 24;

// a^b, or 0 on overflow past `limit`.
std::size_t CheckedPow(std::size_t a, int b, std::size_t limit) {
  std::size_t r = 1;
  for (int i = 0; i < b; ++i) {
    if (r > limit / a) return 0;
    r *= a;
  }
  return r;
}

std::size_t Pow(std::size_t a, int b) {
  std::size_t r = 1;
  for (int i = 0; i < b; ++i) r *= a;
  return r;
}

}  // namespace

void GrammarParams::Validate() const {
  Require(depth >= 1, ErrorCode::kInvalidArgument, "depth L must be >= 1");
  Require(branching >= 2, ErrorCode::kInvalidArgument,
          "branching factor s must be >= 2");
  Require(vocab >= 2, ErrorCode::kInvalidArgument, "vocabulary v must be >= 2");
  Require(synonyms >= 1, ErrorCode::kInvalidArgument, "synonyms m must be >= 1");
  const std::size_t tuples =
      CheckedPow(static_cast<std::size_t>(vocab), branching, kMaxTupleSpace);
  Require(tuples != 0, ErrorCode::kInvalidArgument,
          "v^s exceeds the supported tuple space (2^24)");
  Require(CheckedPow(static_cast<std::size_t>(branching), depth,
                     kMaxSequenceLength) != 0,
          ErrorCode::kInvalidArgument, "s^L exceeds the supported length (2^24)");
  const std::size_t per_symbol = tuples / static_cast<std::size_t>(vocab);
  Require(static_cast<std::size_t>(synonyms) <= per_symbol,
          ErrorCode::kInfeasibleParams,
          "m > v^(s-1): an unambiguous rule set does not exist");
}

std::size_t GrammarParams::SequenceLength() const {
  return Pow(static_cast<std::size_t>(branching), depth);
}

std::size_t GrammarParams::TupleSpace() const {
  return Pow(static_cast<std::size_t>(vocab), branching);
}

double GrammarParams::RuleDensity() const {
  return static_cast<double>(synonyms) /
         std::pow(static_cast<double>(vocab), branching - 1);
}

std::size_t GrammarParams::NodesAt(int level) const {
  return Pow(static_cast<std::size_t>(branching), depth - level);
}

std::size_t GrammarParams::InternalNodes() const {
  return (SequenceLength() - 1) / static_cast<std::size_t>(branching - 1);
}

RuleSet RuleSet::Generate(const GrammarParams& params) {
  params.Validate();
  RuleSet rs;
  rs.params_ = params;
  const std::size_t s = params.branching;
  const std::size_t v = params.vocab;
  const std::size_t m = params.synonyms;
  const std::size_t space = params.TupleSpace();
  std::vector<std::uint32_t> codes(space);
  for (int level = 1; level <= params.depth; ++level) {
    Rng rng(DeriveSeed(params.seed, static_cast<std::uint64_t>(level), "rules"));
    std::iota(codes.begin(), codes.end(), 0u);
    // The first m*v entries of a Fisher-Yates shuffle are a uniform sample
    // without replacement; consecutive blocks of m go to symbols 0..v-1.
    const std::size_t take = m * v;
    for (std::size_t i = 0; i < take; ++i) {
      const std::size_t j = i + rng.Below(space - i);
      std::swap(codes[i], codes[j]);
    }
    std::vector<Symbol> table(take * s);
    for (std::size_t k = 0; k < take; ++k) {
      std::size_t code = codes[k];
      // Most significant digit first: child 0 is the leading digit.
      for (std::size_t c = s; c-- > 0;) {
        table[k * s + c] = static_cast<Symbol>(code % v);
        code /= v;
      }
    }
    rs.productions_.push_back(std::move(table));
  }
  rs.BuildInverse();
  return rs;
}

RuleSet RuleSet::FromTables(
    const GrammarParams& params,
    const std::vector<std::vector<std::vector<std::vector<Symbol>>>>& tables) {
  params.Validate();
  Require(tables.size() == static_cast<std::size_t>(params.depth),
          ErrorCode::kInvalidArgument, "rule table must have L levels");
  RuleSet rs;
  rs.params_ = params;
  const std::size_t s = params.branching;
  for (const auto& level : tables) {
    Require(level.size() == static_cast<std::size_t>(params.vocab),
            ErrorCode::kInvalidArgument, "each level needs v symbols");
    std::vector<Symbol> flat;
    for (const auto& symbol_rules : level) {
      Require(symbol_rules.size() == static_cast<std::size_t>(params.synonyms),
              ErrorCode::kInvalidArgument, "each symbol needs m productions");
      for (const auto& production : symbol_rules) {
        Require(production.size() == s, ErrorCode::kInvalidArgument,
                "each production must have s children");
        for (Symbol c : production) {
          Require(c >= 0 && c < params.vocab, ErrorCode::kInvalidArgument,
                  "production symbol out of range");
          flat.push_back(c);
        }
      }
    }
    rs.productions_.push_back(std::move(flat));
  }
  rs.BuildInverse();
  return rs;
}

void RuleSet::BuildInverse() {
  const std::size_t s = params_.branching;
  inverse_.assign(params_.depth,
                  std::vector<std::int32_t>(params_.TupleSpace(), -1));
  for (int level = 1; level <= params_.depth; ++level) {
    const auto& table = productions_[level - 1];
    auto& inv = inverse_[level - 1];
    const std::size_t count = table.size() / s;
    for (std::size_t k = 0; k < count; ++k) {
      const std::size_t code =
          EncodeTuple(std::span<const Symbol>(table.data() + k * s, s));
      Require(inv[code] < 0, ErrorCode::kInvalidArgument,
              "ambiguous rule set: a tuple is produced twice at level " +
                  std::to_string(level));
      inv[code] = static_cast<std::int32_t>(k);
    }
  }
}

std::span<const Symbol> RuleSet::Production(int level, Symbol symbol,
                                            int rule) const {
  const std::size_t s = params_.branching;
  const std::size_t k =
      static_cast<std::size_t>(symbol) * params_.synonyms + rule;
  return {productions_[level - 1].data() + k * s, s};
}

std::size_t RuleSet::EncodeTuple(std::span<const Symbol> tuple) const {
  std::size_t code = 0;
  for (Symbol c : tuple) code = code * params_.vocab + static_cast<std::size_t>(c);
  return code;
}

RuleRef RuleSet::LookupCode(int level, std::size_t code) const {
  const std::int32_t k = inverse_[level - 1][code];
  if (k < 0) return {};
  return {k / params_.synonyms, k % params_.synonyms};
}

RuleRef RuleSet::Lookup(int level, std::span<const Symbol> tuple) const {
  for (Symbol c : tuple) {
    if (c < 0 || c >= params_.vocab) return {};
  }
  return LookupCode(level, EncodeTuple(tuple));
}

std::vector<std::vector<std::vector<std::vector<Symbol>>>> RuleSet::Tables()
    const {
  std::vector<std::vector<std::vector<std::vector<Symbol>>>> out;
  for (int level = 1; level <= params_.depth; ++level) {
    auto& lvl = out.emplace_back(params_.vocab);
    for (Symbol a = 0; a < params_.vocab; ++a) {
      for (int r = 0; r < params_.synonyms; ++r) {
        auto p = Production(level, a, r);
        lvl[a].emplace_back(p.begin(), p.end());
      }
    }
  }
  return out;
}

std::uint64_t RuleSet::Hash() const {
  std::string buf = "rhm-grammar:" + std::to_string(params_.depth) + ',' +
                    std::to_string(params_.branching) + ',' +
                    std::to_string(params_.vocab) + ',' +
                    std::to_string(params_.synonyms) + ',' +
                    std::to_string(params_.seed) + ':';
  for (const auto& level : productions_) {
    for (Symbol c : level) {
      buf += std::to_string(c);
      buf += ' ';
    }
    buf += '|';
  }
  return Fnv1a64(buf);
}

RuleSet RuleSet::Levels(int first, int last) const {
  Require(first >= 1 && first <= last && last <= params_.depth,
          ErrorCode::kInvalidArgument, "level range out of bounds");
  RuleSet rs;
  rs.params_ = params_;
  rs.params_.depth = last - first + 1;
  rs.productions_.assign(productions_.begin() + (first - 1),
                         productions_.begin() + last);
  rs.inverse_.assign(inverse_.begin() + (first - 1), inverse_.begin() + last);
  return rs;
}

std::span<const Symbol> Dataset::LevelRow(int level, std::size_t i) const {
  if (level == 0) return Row(i);
  const auto& lv = latents.at(static_cast<std::size_t>(level));
  const std::size_t width = lv.size() / rows();
  return {lv.data() + i * width, width};
}

namespace {

// Expands one row top-down into per-level buffers at offset `row`.
void SampleRow(const RuleSet& rules, Rng& rng,
               std::vector<std::vector<Symbol>>& levels, std::size_t row) {
  const auto& p = rules.params();
  const std::size_t s = p.branching;
  levels[p.depth][row] = static_cast<Symbol>(rng.Below(p.vocab));
  for (int level = p.depth; level >= 1; --level) {
    const std::size_t width = p.NodesAt(level);
    const Symbol* parents = levels[level].data() + row * width;
    Symbol* children = levels[level - 1].data() + row * width * s;
    for (std::size_t node = 0; node < width; ++node) {
      const int r = static_cast<int>(rng.Below(p.synonyms));
      auto prod = rules.Production(level, parents[node], r);
      std::copy(prod.begin(), prod.end(), children + node * s);
    }
  }
}

Dataset MakeDataset(const RuleSet& rules, std::size_t n) {
  const auto& p = rules.params();
  Dataset data;
  data.length = p.SequenceLength();
  data.vocab = p.vocab;
  data.grammar_hash = rules.Hash();
  data.latents.resize(p.depth + 1);
  for (int level = 1; level <= p.depth; ++level) {
    data.latents[level].resize(n * p.NodesAt(level));
  }
  return data;
}

}  // namespace

Dataset Sample(const RuleSet& rules, std::size_t n, Rng& rng) {
  const auto& p = rules.params();
  Dataset data = MakeDataset(rules, n);
  std::vector<std::vector<Symbol>> levels(p.depth + 1);
  levels[0].resize(n * data.length);
  for (int level = 1; level <= p.depth; ++level) {
    levels[level] = std::move(data.latents[level]);
  }
  for (std::size_t i = 0; i < n; ++i) SampleRow(rules, rng, levels, i);
  data.tokens = std::move(levels[0]);
  for (int level = 1; level <= p.depth; ++level) {
    data.latents[level] = std::move(levels[level]);
  }
  return data;
}

double DerivationCount(const GrammarParams& params) {
  return static_cast<double>(params.vocab) *
         std::pow(static_cast<double>(params.synonyms),
                  static_cast<double>(params.InternalNodes()));
}

Dataset SampleDistinct(const RuleSet& rules, std::size_t n, Rng& rng) {
  const auto& p = rules.params();
  if (static_cast<double>(n) > DerivationCount(p) / 2.0) {
    Dataset data = Sample(rules, n, rng);
    data.distinct = false;
    return data;
  }
  Dataset data = MakeDataset(rules, n);
  const std::size_t d = data.length;
  std::vector<std::vector<Symbol>> one(p.depth + 1);
  one[0].resize(d);
  for (int level = 1; level <= p.depth; ++level) one[level].resize(p.NodesAt(level));
  data.tokens.reserve(n * d);
  std::unordered_set<std::string> seen;
  seen.reserve(n * 2);
  std::size_t accepted = 0;
  while (accepted < n) {
    SampleRow(rules, rng, one, 0);
    std::string key(reinterpret_cast<const char*>(one[0].data()),
                    d * sizeof(Symbol));
    if (!seen.insert(std::move(key)).second) continue;
    data.tokens.insert(data.tokens.end(), one[0].begin(), one[0].end());
    for (int level = 1; level <= p.depth; ++level) {
      std::copy(one[level].begin(), one[level].end(),
                data.latents[level].begin() + accepted * one[level].size());
    }
    ++accepted;
  }
  data.distinct = true;
  return data;
}

Derivation Expand(const RuleSet& rules, Symbol root,
                  const std::vector<std::vector<int>>& choices) {
  const auto& p = rules.params();
  Derivation out;
  out.levels.resize(p.depth + 1);
  out.choices = choices;
  out.levels[p.depth] = {root};
  for (int level = p.depth; level >= 1; --level) {
    auto& children = out.levels[level - 1];
    children.clear();
    const auto& parents = out.levels[level];
    for (std::size_t node = 0; node < parents.size(); ++node) {
      auto prod = rules.Production(level, parents[node], choices[level][node]);
      children.insert(children.end(), prod.begin(), prod.end());
    }
  }
  return out;
}

std::vector<WeightedDerivation> EnumerateAll(const RuleSet& rules,
                                             std::size_t cap) {
  const auto& p = rules.params();
  const double total = DerivationCount(p);
  Require(total <= static_cast<double>(cap), ErrorCode::kCapExceeded,
          "enumeration would produce " + std::to_string(total) +
              " derivations, above the cap of " + std::to_string(cap));
  const std::size_t per_root = static_cast<std::size_t>(total) / p.vocab;
  const double weight = 1.0 / total;
  std::vector<WeightedDerivation> out;
  out.reserve(static_cast<std::size_t>(total));
  std::vector<std::vector<int>> choices(p.depth + 1);
  for (int level = 1; level <= p.depth; ++level) choices[level].resize(p.NodesAt(level));
  for (Symbol root = 0; root < p.vocab; ++root) {
    for (std::size_t idx = 0; idx < per_root; ++idx) {
      // Mixed-radix decode of idx, root level first.
      std::size_t rest = idx;
      for (int level = 1; level <= p.depth; ++level) {
        for (auto& c : choices[level]) {
          c = static_cast<int>(rest % p.synonyms);
          rest /= p.synonyms;
        }
      }
      out.push_back({Expand(rules, root, choices), weight});
    }
  }
  return out;
}

ParseResult Parse(const RuleSet& rules, std::span<const Symbol> sequence) {
  const auto& p = rules.params();
  Require(sequence.size() == p.SequenceLength(), ErrorCode::kInvalidArgument,
          "sequence length " + std::to_string(sequence.size()) +
              " does not match d = " + std::to_string(p.SequenceLength()));
  const std::size_t s = p.branching;
  ParseResult result;
  auto& partial = result.partial;
  partial.levels.resize(p.depth + 1);
  partial.choices.resize(p.depth + 1);
  partial.levels[0].assign(sequence.begin(), sequence.end());
  for (int level = 1; level <= p.depth; ++level) {
    const auto& below = partial.levels[level - 1];
    const std::size_t width = below.size() / s;
    std::vector<Symbol> parents(width);
    std::vector<int> rule_ids(width);
    for (std::size_t node = 0; node < width; ++node) {
      const RuleRef ref =
          rules.Lookup(level, std::span<const Symbol>(below.data() + node * s, s));
      if (!ref.valid()) return result;
      parents[node] = ref.parent;
      rule_ids[node] = ref.rule;
    }
    partial.levels[level] = std::move(parents);
    partial.choices[level] = std::move(rule_ids);
    result.max_valid_level = level;
  }
  return result;
}

std::vector<double> AccuracyCurve(const RuleSet& rules, const Dataset& data) {
  const int depth = rules.params().depth;
  std::vector<std::size_t> counts(depth + 1, 0);
  const std::size_t n = data.rows();
  for (std::size_t i = 0; i < n; ++i) {
    const int reached = Parse(rules, data.Row(i)).max_valid_level;
    for (int l = 0; l <= reached; ++l) ++counts[l];
  }
  std::vector<double> curve(depth + 1, 1.0);
  if (n == 0) return curve;
  for (int l = 0; l <= depth; ++l) {
    curve[l] = static_cast<double>(counts[l]) / static_cast<double>(n);
  }
  return curve;
}

double Accuracy(const RuleSet& rules, const Dataset& data, int level) {
  Require(level >= 0 && level <= rules.params().depth,
          ErrorCode::kInvalidArgument, "accuracy level out of range");
  if (level == 0) return 1.0;
  Require(data.rows() > 0, ErrorCode::kInsufficientData, "empty dataset");
  std::size_t ok = 0;
  for (std::size_t i = 0; i < data.rows(); ++i) {
    if (Parse(rules, data.Row(i)).max_valid_level >= level) ++ok;
  }
  return static_cast<double>(ok) / static_cast<double>(data.rows());
}

TreeDistance ComputeTreeDistance(std::size_t i, std::size_t j,
                                 const GrammarParams& params) {
  const std::size_t d = params.SequenceLength();
  Require(i >= 1 && j >= 1 && i <= d && j <= d, ErrorCode::kInvalidArgument,
          "positions must lie in 1..d");
  Require(i != j, ErrorCode::kInvalidArgument,
          "tree distance is undefined for identical positions");
  std::size_t a = i - 1;
  std::size_t b = j - 1;
  TreeDistance out;
  out.distance = 1;
  while (a != b) {
    a /= params.branching;
    b /= params.branching;
    ++out.level;
    out.distance *= params.branching;
  }
  return out;
}

Derivation ResampleBelow(const RuleSet& rules, const Derivation& derivation,
                         int level, Rng& rng) {
  const auto& p = rules.params();
  Require(level >= 1 && level <= p.depth, ErrorCode::kInvalidArgument,
          "resample level out of range");
  Derivation out = derivation;
  const std::size_t s = p.branching;
  for (int l = level; l >= 1; --l) {
    const auto& parents = out.levels[l];
    auto& children = out.levels[l - 1];
    auto& choice = out.choices[l];
    for (std::size_t node = 0; node < parents.size(); ++node) {
      choice[node] = static_cast<int>(rng.Below(p.synonyms));
      auto prod = rules.Production(l, parents[node], choice[node]);
      std::copy(prod.begin(), prod.end(), children.begin() + node * s);
    }
  }
  return out;
}

Derivation DerivationOfRow(const RuleSet& rules, const Dataset& data,
                           std::size_t i) {
  Require(data.has_latents(), ErrorCode::kMissingLatents,
          "dataset does not retain latents");
  const auto& p = rules.params();
  Derivation out;
  out.levels.resize(p.depth + 1);
  out.choices.resize(p.depth + 1);
  for (int level = 0; level <= p.depth; ++level) {
    auto row = data.LevelRow(level, i);
    out.levels[level].assign(row.begin(), row.end());
  }
  const std::size_t s = p.branching;
  for (int level = 1; level <= p.depth; ++level) {
    const auto& below = out.levels[level - 1];
    for (std::size_t node = 0; node < out.levels[level].size(); ++node) {
      const RuleRef ref =
          rules.Lookup(level, std::span<const Symbol>(below.data() + node * s, s));
      Require(ref.valid() && ref.parent == out.levels[level][node],
              ErrorCode::kInvalidArgument,
              "retained latents are inconsistent with the grammar");
      out.choices[level].push_back(ref.rule);
    }
  }
  return out;
}

}  // namespace rhm
