#pragma once

#include <variant>
#include <vector>

#include "embalign/random.hpp"
#include "embalign/types.hpp"

namespace embalign {

struct PlusPlusInit {};

struct ExplicitCentroids {
  Matrix centroids;
};

using InitSpec = std::variant<PlusPlusInit, ExplicitCentroids>;

struct Clustering {
  Matrix centroids;                  // c x d
  std::vector<Index> assignments;    // one per row, in [0, c)
  double inertia = 0.0;              // sum of squared distances to own centroid
  std::vector<double> inertia_history;  // after each centroid update
  Index iterations = 0;
  bool converged = false;
};

inline constexpr Index kDefaultKMeansIterations = 300;

/// Lloyd's algorithm under Euclidean distance.
///
/// Stops when an assignment pass changes nothing or after `max_iter` centroid
/// updates. With `max_iter == 0` the initial centroids are returned together
/// with their nearest-centroid assignments. Empty clusters are repaired by
/// moving the point farthest from its centroid into a new singleton cluster,
/// so the result always has exactly `c` non-empty clusters.
///
/// Deterministic for a given (x, c, init, seed, max_iter).
Clustering kmeans_fit(const MatrixRef& x, Index c, const InitSpec& init, Seed seed,
                      Index max_iter = kDefaultKMeansIterations);

// Index of the nearest centroid for every row (lowest index wins ties).
std::vector<Index> nearest_centroids(const MatrixRef& x, const MatrixRef& centroids);

}  // namespace embalign
