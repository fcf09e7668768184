#include "embalign/clustering.hpp"

#include <algorithm>
#include <cmath>
#include <limits>

#include "embalign/error.hpp"
#include "embalign/parallel.hpp"

namespace embalign {

namespace {

constexpr Index kAssignBlock = 1024;

Index sample_by_weight(const Eigen::VectorXd& d2, double total, Rng& rng) {
  std::uniform_real_distribution<double> u(0.0, total);
  const double target = u(rng);
  double acc = 0.0;
  for (Index i = 0; i < d2.size(); ++i) {
    acc += d2(i);
    if (acc > target && d2(i) > 0.0) return i;
  }
  for (Index i = d2.size() - 1; i > 0; --i)
    if (d2(i) > 0.0) return i;
  return 0;
}

// Greedy k-means++: each step draws several D^2-weighted candidates and keeps
// the one that lowers the potential most.
Matrix plus_plus_init(const MatrixRef& x, Index c, Seed seed) {
  Rng rng = make_rng(seed);
  const Index n = x.rows();
  const Index trials = 2 + static_cast<Index>(std::log(static_cast<double>(c)));
  Matrix centroids(c, x.cols());

  std::uniform_int_distribution<Index> pick(0, n - 1);
  centroids.row(0) = x.row(pick(rng));

  Eigen::VectorXd d2 = (x.rowwise() - centroids.row(0)).rowwise().squaredNorm();
  for (Index j = 1; j < c; ++j) {
    const double total = d2.sum();
    if (!(total > 0.0)) {
      centroids.row(j) = x.row(pick(rng));
      continue;
    }
    Index best = -1;
    double best_potential = std::numeric_limits<double>::infinity();
    Eigen::VectorXd best_d2;
    for (Index t = 0; t < trials; ++t) {
      const Index cand = sample_by_weight(d2, total, rng);
      Eigen::VectorXd cand_d2 = d2.cwiseMin((x.rowwise() - x.row(cand)).rowwise().squaredNorm());
      const double potential = cand_d2.sum();
      if (potential < best_potential) {
        best_potential = potential;
        best = cand;
        best_d2 = std::move(cand_d2);
      }
    }
    centroids.row(j) = x.row(best);
    d2 = std::move(best_d2);
  }
  return centroids;
}

Matrix cluster_means(const MatrixRef& x, const std::vector<Index>& labels, Index c) {
  Matrix sums = Matrix::Zero(c, x.cols());
  Eigen::VectorXd counts = Eigen::VectorXd::Zero(c);
  for (Index i = 0; i < x.rows(); ++i) {
    const Index l = labels[static_cast<std::size_t>(i)];
    sums.row(l) += x.row(i);
    counts(l) += 1.0;
  }
  for (Index j = 0; j < c; ++j) sums.row(j) /= counts(j);
  return sums;
}

double inertia_of(const MatrixRef& x, const MatrixRef& centroids, const std::vector<Index>& labels) {
  double total = 0.0;
  for (Index i = 0; i < x.rows(); ++i)
    total += (x.row(i) - centroids.row(labels[static_cast<std::size_t>(i)])).squaredNorm();
  return total;
}

// Gives every empty cluster the point currently farthest from its centroid
// (taken only from clusters with more than one member).
void repair_empty(const MatrixRef& x, Matrix& centroids, std::vector<Index>& labels) {
  const Index c = centroids.rows();
  std::vector<Index> counts(static_cast<std::size_t>(c), 0);
  for (Index l : labels) ++counts[static_cast<std::size_t>(l)];
  for (Index j = 0; j < c; ++j) {
    if (counts[static_cast<std::size_t>(j)] > 0) continue;
    Index farthest = -1;
    double best = -1.0;
    for (Index i = 0; i < x.rows(); ++i) {
      const Index l = labels[static_cast<std::size_t>(i)];
      if (counts[static_cast<std::size_t>(l)] < 2) continue;
      const double dist = (x.row(i) - centroids.row(l)).squaredNorm();
      if (dist > best) {
        best = dist;
        farthest = i;
      }
    }
    if (farthest < 0) break;  // unreachable while c <= n
    --counts[static_cast<std::size_t>(labels[static_cast<std::size_t>(farthest)])];
    labels[static_cast<std::size_t>(farthest)] = j;
    counts[static_cast<std::size_t>(j)] = 1;
    centroids.row(j) = x.row(farthest);
  }
}

}  // namespace

std::vector<Index> nearest_centroids(const MatrixRef& x, const MatrixRef& centroids) {
  const Index n = x.rows();
  const Index c = centroids.rows();
  const Eigen::VectorXd c_norms = centroids.rowwise().squaredNorm();
  std::vector<Index> labels(static_cast<std::size_t>(n));

  const Index blocks = (n + kAssignBlock - 1) / kAssignBlock;
  parallel_for(blocks, 1, [&](Index first_block, Index last_block) {
    Matrix dots;
    for (Index b = first_block; b < last_block; ++b) {
      const Index begin = b * kAssignBlock;
      const Index rows = std::min(kAssignBlock, n - begin);
      dots.noalias() = x.middleRows(begin, rows) * centroids.transpose();
      for (Index r = 0; r < rows; ++r) {
        // ||x||^2 is constant per row and does not affect the argmin.
        Index best = 0;
        double best_d = std::numeric_limits<double>::infinity();
        for (Index j = 0; j < c; ++j) {
          const double d = c_norms(j) - 2.0 * dots(r, j);
          if (d < best_d) {
            best_d = d;
            best = j;
          }
        }
        labels[static_cast<std::size_t>(begin + r)] = best;
      }
    }
  });
  return labels;
}

Clustering kmeans_fit(const MatrixRef& x, Index c, const InitSpec& init, Seed seed, Index max_iter) {
  if (c < 1) throw Error(ErrorCode::kTooFewPoints, "cluster count must be at least 1");
  if (c > x.rows())
    throw Error(ErrorCode::kTooFewPoints, "cannot form " + std::to_string(c) + " clusters from " +
                                              std::to_string(x.rows()) + " points");
  if (!x.allFinite()) throw Error(ErrorCode::kNonFiniteInput, "k-means input has NaN/Inf");

  Clustering result;
  if (const auto* given = std::get_if<ExplicitCentroids>(&init)) {
    if (given->centroids.rows() != c || given->centroids.cols() != x.cols())
      throw Error(ErrorCode::kShapeMismatch, "initial centroids must be " + std::to_string(c) + "x" +
                                                 std::to_string(x.cols()));
    if (!given->centroids.allFinite())
      throw Error(ErrorCode::kNonFiniteInput, "initial centroids have NaN/Inf");
    result.centroids = given->centroids;
  } else {
    result.centroids = plus_plus_init(x, c, seed);
  }

  std::vector<Index> labels = nearest_centroids(x, result.centroids);
  repair_empty(x, result.centroids, labels);

  for (Index iter = 0; iter < max_iter; ++iter) {
    result.centroids = cluster_means(x, labels, c);
    result.inertia_history.push_back(inertia_of(x, result.centroids, labels));
    result.iterations = iter + 1;

    std::vector<Index> next = nearest_centroids(x, result.centroids);
    repair_empty(x, result.centroids, next);
    if (next == labels) {
      result.converged = true;
      break;
    }
    labels = std::move(next);
  }
  if (max_iter > 0 && !result.converged) {
    result.centroids = cluster_means(x, labels, c);
    result.inertia_history.push_back(inertia_of(x, result.centroids, labels));
  }

  result.inertia = inertia_of(x, result.centroids, labels);
  result.assignments = std::move(labels);
  return result;
}

}  // namespace embalign
