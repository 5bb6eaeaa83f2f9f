#include "rhm/kmeans.hpp"

#include <algorithm>
#include <cmath>
#include <limits>

#include "rhm/error.hpp"
#include "rhm/rng.hpp"

namespace rhm {
namespace {

double SquaredDistance(const double* a, const double* b, std::size_t dim) {
  double acc = 0.0;
  for (std::size_t k = 0; k < dim; ++k) {
    const double d = a[k] - b[k];
    acc += d * d;
  }
  return acc;
}

struct Run {
  std::vector<int> assignment;
  std::vector<double> centers;
  double inertia = 0.0;
};

// Assigns every point to its nearest center (lowest index on ties) and
// returns the inertia; dist receives each point's squared distance.
double Assign(const std::vector<double>& points, std::size_t n, std::size_t dim,
              const std::vector<double>& centers, int k, std::vector<int>& assignment,
              std::vector<double>& dist) {
  double inertia = 0.0;
  for (std::size_t i = 0; i < n; ++i) {
    const double* x = points.data() + i * dim;
    int best = 0;
    double best_d = std::numeric_limits<double>::infinity();
    for (int c = 0; c < k; ++c) {
      const double d = SquaredDistance(x, centers.data() + c * dim, dim);
      if (d < best_d) {
        best_d = d;
        best = c;
      }
    }
    assignment[i] = best;
    dist[i] = best_d;
    inertia += best_d;
  }
  return inertia;
}

Run Lloyd(const std::vector<double>& points, std::size_t n, std::size_t dim, int k,
          const KMeansConfig& config, Rng& rng) {
  Run run;
  run.centers.assign(static_cast<std::size_t>(k) * dim, 0.0);
  std::vector<double> nearest(n, std::numeric_limits<double>::infinity());

  // Greedy spread: random first center, then repeatedly the farthest point.
  std::size_t pick = rng.Below(n);
  for (int c = 0; c < k; ++c) {
    std::copy_n(points.data() + pick * dim, dim, run.centers.data() + c * dim);
    std::size_t far = 0;
    double far_d = -1.0;
    for (std::size_t i = 0; i < n; ++i) {
      nearest[i] = std::min(nearest[i], SquaredDistance(points.data() + i * dim,
                                                        run.centers.data() + c * dim, dim));
      if (nearest[i] > far_d) {
        far_d = nearest[i];
        far = i;
      }
    }
    pick = far;
  }

  run.assignment.assign(n, 0);
  std::vector<double> dist(n, 0.0);
  std::vector<std::size_t> sizes(k);
  double previous = std::numeric_limits<double>::infinity();
  for (int iter = 0; iter < config.max_iterations; ++iter) {
    run.inertia = Assign(points, n, dim, run.centers, k, run.assignment, dist);
    const bool converged =
        std::isfinite(previous) &&
        previous - run.inertia <= config.tolerance * std::max(previous, 1e-300);
    if (converged || run.inertia == 0.0) break;
    previous = run.inertia;

    std::fill(run.centers.begin(), run.centers.end(), 0.0);
    std::fill(sizes.begin(), sizes.end(), 0);
    for (std::size_t i = 0; i < n; ++i) {
      const int c = run.assignment[i];
      ++sizes[c];
      const double* x = points.data() + i * dim;
      double* center = run.centers.data() + c * dim;
      for (std::size_t t = 0; t < dim; ++t) center[t] += x[t];
    }
    for (int c = 0; c < k; ++c) {
      double* center = run.centers.data() + c * dim;
      if (sizes[c] == 0) {
        // Empty cluster: move it onto the point worst served so far.
        const auto worst = static_cast<std::size_t>(
            std::max_element(dist.begin(), dist.end()) - dist.begin());
        std::copy_n(points.data() + worst * dim, dim, center);
        dist[worst] = 0.0;
        continue;
      }
      for (std::size_t t = 0; t < dim; ++t) center[t] /= static_cast<double>(sizes[c]);
    }
  }
  // Leave assignment and inertia consistent with the final centers.
  run.inertia = Assign(points, n, dim, run.centers, k, run.assignment, dist);
  return run;
}

}  // namespace

KMeansResult KMeans(const std::vector<double>& points, std::size_t dim, int k,
                    const KMeansConfig& config) {
  Require(k >= 1 && dim >= 1, ErrorCode::kInvalidArgument,
          "k-means needs k >= 1 and dim >= 1");
  Require(points.size() % dim == 0, ErrorCode::kInvalidArgument,
          "point buffer is not a multiple of dim");
  Require(config.restarts >= 1 && config.max_iterations >= 1,
          ErrorCode::kInvalidArgument, "k-means needs restarts and iterations >= 1");
  const std::size_t n = points.size() / dim;

  KMeansResult result;
  if (n <= static_cast<std::size_t>(k)) {
    result.k = static_cast<int>(n);
    result.partial = n < static_cast<std::size_t>(k);
    result.assignment.resize(n);
    for (std::size_t i = 0; i < n; ++i) result.assignment[i] = static_cast<int>(i);
    result.centers = points;
    return result;
  }

  Rng rng(config.seed);
  Run best;
  best.inertia = std::numeric_limits<double>::infinity();
  for (int r = 0; r < config.restarts; ++r) {
    Run run = Lloyd(points, n, dim, k, config, rng);
    if (run.inertia < best.inertia) best = std::move(run);
  }
  result.k = k;
  result.assignment = std::move(best.assignment);
  result.centers = std::move(best.centers);
  result.inertia = best.inertia;
  return result;
}

}  // namespace rhm
