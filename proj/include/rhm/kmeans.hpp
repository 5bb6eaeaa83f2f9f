#pragma once

#include <cstddef>
#include <cstdint>
#include <vector>

namespace rhm {

struct KMeansConfig {
  int restarts = 16;
  int max_iterations = 200;
  double tolerance = 1e-8;  // relative inertia change
  std::uint64_t seed = 0;
};

struct KMeansResult {
  std::vector<int> assignment;  // one cluster id per point
  std::vector<double> centers;  // k x dim
  double inertia = 0.0;
  int k = 0;
  // Fewer points than clusters: every point is its own cluster.
  bool partial = false;
};

// Lloyd iterations with greedy-spread (farthest point) seeding. The first
// center of each restart is a random point; the best inertia over restarts
// wins, earlier restarts winning ties. Points are rows of `points` (n x dim).
KMeansResult KMeans(const std::vector<double>& points, std::size_t dim, int k,
                    const KMeansConfig& config);

}  // namespace rhm
