#pragma once

#include <cstddef>
#include <cstdint>
#include <span>
#include <vector>

#include "rhm/rng.hpp"

namespace rhm {

using Symbol = std::int32_t;

// Shape of a Random Hierarchy Model instance.
struct GrammarParams {
  int depth = 2;        // L
  int branching = 2;    // s
  int vocab = 4;        // v, symbols per level
  int synonyms = 2;     // m, productions per symbol
  std::uint64_t seed = 0;

  // Throws kInfeasibleParams / kInvalidArgument; callers rely on this to
  // reject configurations before doing any work.
  void Validate() const;

  std::size_t SequenceLength() const;   // d = s^L
  std::size_t TupleSpace() const;       // v^s
  double RuleDensity() const;           // f = m / v^(s-1)
  // Number of nodes at `level` (level 0 = leaves, level L = root).
  std::size_t NodesAt(int level) const;
  // Internal nodes of the tree: (s^L - 1) / (s - 1).
  std::size_t InternalNodes() const;

  bool operator==(const GrammarParams&) const = default;
};

struct RuleRef {
  Symbol parent = -1;
  int rule = -1;
  bool valid() const { return parent >= 0; }
};

// Frozen random grammar. Level l in 1..L maps each level-l symbol to m
// productions, each an s-tuple of level-(l-1) symbols. All m*v tuples of a
// level are distinct, so the inverse table is a function.
class RuleSet {
 public:
  static RuleSet Generate(const GrammarParams& params);

  // Builds from explicit tables, productions[level-1][symbol][rule][child].
  // Throws if the tables are malformed or ambiguous.
  static RuleSet FromTables(
      const GrammarParams& params,
      const std::vector<std::vector<std::vector<std::vector<Symbol>>>>& tables);

  const GrammarParams& params() const { return params_; }

  std::span<const Symbol> Production(int level, Symbol symbol, int rule) const;
  // Inverse lookup by tuple; invalid tuples give RuleRef{-1, -1}.
  RuleRef Lookup(int level, std::span<const Symbol> tuple) const;
  RuleRef LookupCode(int level, std::size_t code) const;
  // Base-v code of a tuple; all entries must be in [0, v).
  std::size_t EncodeTuple(std::span<const Symbol> tuple) const;

  std::vector<std::vector<std::vector<std::vector<Symbol>>>> Tables() const;

  // Content hash over params and productions.
  std::uint64_t Hash() const;

  // Copy holding only levels first..last, renumbered 1..(last-first+1). The
  // result is an RHM whose leaves are the level-(first-1) symbols.
  RuleSet Levels(int first, int last) const;

 private:
  RuleSet() = default;
  void BuildInverse();

  GrammarParams params_;
  // productions_[level-1] is v*m*s symbols, symbol-major then rule.
  std::vector<std::vector<Symbol>> productions_;
  // inverse_[level-1][code] = parent*m + rule, or -1.
  std::vector<std::vector<std::int32_t>> inverse_;
};

// Full tree assignment. levels[l] holds the s^(L-l) symbols at level l;
// choices[l] (l >= 1) holds the rule index used by each level-l node.
struct Derivation {
  std::vector<std::vector<Symbol>> levels;
  std::vector<std::vector<int>> choices;

  std::span<const Symbol> leaves() const { return levels.front(); }
  Symbol root() const { return levels.back().front(); }
  bool operator==(const Derivation&) const = default;
};

// P rows of d tokens, optionally with the latent symbols of every level.
struct Dataset {
  std::size_t length = 0;   // d
  int vocab = 0;            // v
  std::vector<Symbol> tokens;
  // Empty, or latents[l] for l in 0..L holding rows * s^(L-l) symbols, with
  // latents[0] left empty (the leaves live in `tokens`).
  std::vector<std::vector<Symbol>> latents;
  std::uint64_t grammar_hash = 0;
  std::uint64_t seed = 0;
  bool distinct = false;

  std::size_t rows() const { return length == 0 ? 0 : tokens.size() / length; }
  std::span<const Symbol> Row(std::size_t i) const {
    return {tokens.data() + i * length, length};
  }
  bool has_latents() const { return !latents.empty(); }
  // Symbols at `level` of row i (level 0 is the token row).
  std::span<const Symbol> LevelRow(int level, std::size_t i) const;
};

Dataset Sample(const RuleSet& rules, std::size_t n, Rng& rng);

// Draws n distinct strings by rejection when n is at most half the number of
// possible strings; otherwise falls back to sampling with replacement. The
// returned dataset records which policy applied in `distinct`.
Dataset SampleDistinct(const RuleSet& rules, std::size_t n, Rng& rng);

// Total number of derivations v * m^((s^L - 1)/(s - 1)), as a double so that
// huge instances do not overflow.
double DerivationCount(const GrammarParams& params);

struct WeightedDerivation {
  Derivation derivation;
  double weight = 0.0;
};

inline constexpr std::size_t kDefaultEnumerationCap = 1'000'000;

std::vector<WeightedDerivation> EnumerateAll(
    const RuleSet& rules, std::size_t cap = kDefaultEnumerationCap);

struct ParseResult {
  int max_valid_level = 0;
  // levels[0..max_valid_level] and choices[1..max_valid_level] are filled.
  Derivation partial;
};

ParseResult Parse(const RuleSet& rules, std::span<const Symbol> sequence);

// Fraction of rows that parse through `level` (cumulative: every level up to
// and including it must be valid). level 0 is always 1.
double Accuracy(const RuleSet& rules, const Dataset& data, int level);

// Accuracies for every level 0..L from one parse per row.
std::vector<double> AccuracyCurve(const RuleSet& rules, const Dataset& data);

struct TreeDistance {
  int level = 0;              // level of the lowest common ancestor
  std::size_t distance = 0;   // s^level
};

// Positions are 1-based, as in the usual x_1..x_d notation.
TreeDistance ComputeTreeDistance(std::size_t i, std::size_t j,
                                 const GrammarParams& params);

// Keeps every symbol at levels >= level and redraws all rule choices of
// level-`level` nodes and below.
Derivation ResampleBelow(const RuleSet& rules, const Derivation& derivation,
                         int level, Rng& rng);

// Re-expands from the root using the recorded rule choices.
Derivation Expand(const RuleSet& rules, Symbol root,
                  const std::vector<std::vector<int>>& choices);

// Derivation of row i of a dataset with retained latents; rule choices are
// recovered from the inverse tables.
Derivation DerivationOfRow(const RuleSet& rules, const Dataset& data,
                           std::size_t i);

}  // namespace rhm
