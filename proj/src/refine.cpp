#include "embalign/refine.hpp"

#include <algorithm>
#include <numeric>

#include "embalign/clustering.hpp"
#include "embalign/error.hpp"
#include "embalign/mapping.hpp"
#include "embalign/neighbors.hpp"

namespace embalign {

namespace {

void check_inputs(const MatrixRef& xa, const MatrixRef& xb, const MatrixRef& w) {
  if (xa.cols() != xb.cols()) throw Error(ErrorCode::kDimensionMismatch, "pool dimensions differ");
  if (w.rows() != xa.cols() || w.cols() != xa.cols())
    throw Error(ErrorCode::kDimensionMismatch, "map must be d x d");
}

double mean_row_cosine(const MatrixRef& a, const MatrixRef& b) {
  const Matrix an = row_normalized(a);
  const Matrix bn = row_normalized(b);
  return an.cwiseProduct(bn).rowwise().sum().mean();
}

void warn(RefineTrace* trace, std::string message) {
  if (trace) trace->warnings.push_back(std::move(message));
}

}  // namespace

double matching_cosine(const MatrixRef& sample, const MatrixRef& xb, const MatrixRef& w, Index k) {
  const Matrix transformed = sample * w;
  const Matrix matched = neighbor_means(knn_cosine(transformed, xb, k), xb);
  return mean_row_cosine(transformed, matched);
}

Matrix refine1(const MatrixRef& xa, const MatrixRef& xb, const MatrixRef& w,
               const Refine1Params& params, RefineTrace* trace) {
  check_inputs(xa, xb, w);
  if (params.k_prime < 1 || params.k_prime > xb.rows())
    throw Error(ErrorCode::kKTooLarge, "k'=" + std::to_string(params.k_prime) + " but pool B has " +
                                           std::to_string(xb.rows()) + " rows");
  if (params.iterations < 0) throw Error(ErrorCode::kInvalidConfig, "iteration count is negative");

  Index n_sample = params.n_sample;
  if (n_sample > xa.rows()) {
    warn(trace, "refine-1 sample size " + std::to_string(n_sample) + " clamped to pool size " +
                    std::to_string(xa.rows()));
    n_sample = xa.rows();
  }
  if (n_sample < 2) throw Error(ErrorCode::kTooFewPairs, "refine-1 needs a sample of at least 2 rows");

  Matrix current = w;
  std::vector<Index> all(static_cast<std::size_t>(xa.rows()));
  std::iota(all.begin(), all.end(), Index{0});
  std::vector<Index> picked(static_cast<std::size_t>(n_sample));
  Matrix sample(n_sample, xa.cols());
  bool warned_rank = false;

  for (Index t = 0; t < params.iterations; ++t) {
    Rng rng = make_rng(derive_seed(params.seed, 0, static_cast<std::uint64_t>(t)));
    std::sample(all.begin(), all.end(), picked.begin(), n_sample, rng);
    for (Index i = 0; i < n_sample; ++i) sample.row(i) = xa.row(picked[static_cast<std::size_t>(i)]);

    const Matrix transformed = sample * current;
    const Matrix matched = neighbor_means(knn_cosine(transformed, xb, params.k_prime), xb);
    if (trace) trace->mean_cosine.push_back(mean_row_cosine(transformed, matched));

    const ProcrustesSolution sol = procrustes_fit(sample, matched);
    if (sol.rank_deficient && !warned_rank) {
      warn(trace, "refine-1: rank-deficient Procrustes problem (min singular value " +
                      std::to_string(sol.min_singular_value) + ")");
      warned_rank = true;
    }
    current = smooth_update(current, sol.w, params.alpha);
  }
  return current;
}

Matrix refine2(const MatrixRef& xa, const MatrixRef& xb, const MatrixRef& w,
               const Refine2Params& params, RefineTrace* trace) {
  check_inputs(xa, xb, w);
  if (params.c_prime < 1 || params.c_prime > std::min(xa.rows(), xb.rows()))
    throw Error(ErrorCode::kTooFewPoints, "c'=" + std::to_string(params.c_prime) +
                                              " exceeds the smaller pool size");
  if (params.iterations > 1)
    warn(trace, "refine-2 with " + std::to_string(params.iterations) +
                    " iterations; more than one pass tends to degrade the alignment slightly");

  Matrix current = w;
  for (Index it = 0; it < params.iterations; ++it) {
    const Seed round = derive_seed(params.seed, 0, static_cast<std::uint64_t>(it));
    const Clustering ka = kmeans_fit(xa, params.c_prime, PlusPlusInit{}, derive_seed(round, 0));
    const Matrix seeded = ka.centroids * current;
    const Clustering kb =
        kmeans_fit(xb, params.c_prime, ExplicitCentroids{seeded}, derive_seed(round, 1));

    const ProcrustesSolution sol = procrustes_fit(ka.centroids, kb.centroids);
    if (sol.rank_deficient)
      warn(trace, "refine-2: rank-deficient Procrustes problem on " + std::to_string(params.c_prime) +
                      " centroid pair(s) (min singular value " + std::to_string(sol.min_singular_value) +
                      ")");
    current = smooth_update(current, sol.w, params.alpha);
  }
  return current;
}

}  // namespace embalign
