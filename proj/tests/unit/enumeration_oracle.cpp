#include "enumeration_oracle.hpp"

#include <cmath>

namespace oracle {

namespace {

// Expands one level: each symbol picks one of its m productions.
void ExpandLevel(const rhm::RuleSet& rules, int level, const Tree& partial,
                 std::vector<Tree>& out) {
  const auto& p = rules.params();
  const auto& parents = partial.levels.front();
  const std::size_t n = parents.size();
  std::vector<int> pick(n, 0);
  while (true) {
    Tree t = partial;
    std::vector<rhm::Symbol> children;
    for (std::size_t i = 0; i < n; ++i) {
      const auto prod = rules.Production(level, parents[i], pick[i]);
      children.insert(children.end(), prod.begin(), prod.end());
    }
    t.levels.insert(t.levels.begin(), children);
    t.prior = partial.prior * std::pow(1.0 / p.synonyms, static_cast<double>(n));
    out.push_back(std::move(t));
    std::size_t i = 0;
    while (i < n && ++pick[i] == p.synonyms) pick[i++] = 0;
    if (i == n) break;
  }
}

}  // namespace

std::vector<Tree> AllTrees(const rhm::RuleSet& rules) {
  const auto& p = rules.params();
  std::vector<Tree> current;
  for (int r = 0; r < p.vocab; ++r) current.push_back({{{r}}, 1.0 / p.vocab});
  for (int level = p.depth; level >= 1; --level) {
    std::vector<Tree> next;
    for (const auto& t : current) ExpandLevel(rules, level, t, next);
    current = std::move(next);
  }
  return current;
}

Posterior Conditionals(const rhm::RuleSet& rules, const rhm::LeafLikelihoods& leaves) {
  const auto& p = rules.params();
  Posterior post;
  post.marginals.resize(p.depth + 1);
  for (int l = 0; l <= p.depth; ++l) post.marginals[l].assign(p.NodesAt(l) * p.vocab, 0.0);
  for (const auto& t : AllTrees(rules)) {
    double w = t.prior;
    for (std::size_t i = 0; i < leaves.length; ++i) w *= leaves.At(i)[t.levels[0][i]];
    if (w == 0.0) continue;
    post.evidence += w;
    for (int l = 0; l <= p.depth; ++l) {
      for (std::size_t node = 0; node < t.levels[l].size(); ++node) {
        post.marginals[l][node * p.vocab + t.levels[l][node]] += w;
      }
    }
  }
  if (post.evidence > 0.0) {
    for (auto& level : post.marginals) {
      for (auto& x : level) x /= post.evidence;
    }
  }
  return post;
}

double KernelLikelihood(rhm::NoiseKind kind, double keep, int vocab, rhm::Symbol observed,
                        rhm::Symbol clean) {
  if (kind == rhm::NoiseKind::kMasking) {
    if (observed == vocab) return 1.0 - keep;
    return observed == clean ? keep : 0.0;
  }
  const double flip = (1.0 - keep) / vocab;
  return observed == clean ? keep + flip : flip;
}

}  // namespace oracle
