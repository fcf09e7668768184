#include "embalign/correspondence.hpp"

#include <algorithm>
#include <numeric>

#include "embalign/clustering.hpp"
#include "embalign/error.hpp"
#include "embalign/neighbors.hpp"
#include "embalign/parallel.hpp"

namespace embalign {

namespace {

constexpr double kZeroNorm = 1e-12;
// Swaps must improve the objective by more than this to be accepted.
constexpr double kMinImprovement = 1e-12;

Eigen::VectorXd checked_norms(const MatrixRef& rows, ErrorCode code, const char* what) {
  Eigen::VectorXd norms = rows.rowwise().norm();
  for (Index i = 0; i < norms.size(); ++i)
    if (!(norms(i) > kZeroNorm))
      throw Error(code, std::string(what) + " " + std::to_string(i) + " has zero norm");
  return norms;
}

void check_square_pair(const MatrixRef& sa, const MatrixRef& sb) {
  if (sa.rows() != sa.cols() || sb.rows() != sb.cols() || sa.rows() != sb.rows())
    throw Error(ErrorCode::kShapeMismatch, "similarity matrices must be square and of equal size");
}

}  // namespace

Matrix centroid_similarity(const MatrixRef& centroids) {
  const Eigen::VectorXd norms = checked_norms(centroids, ErrorCode::kZeroCentroid, "centroid");
  const Index c = centroids.rows();
  Matrix s(c, c);
  for (Index i = 0; i < c; ++i) {
    s(i, i) = 1.0;
    for (Index j = i + 1; j < c; ++j) {
      const double v = centroids.row(i).dot(centroids.row(j)) / (norms(i) * norms(j));
      s(i, j) = v;
      s(j, i) = v;
    }
  }
  return s;
}

double qap_objective(const MatrixRef& sa, const MatrixRef& sb, std::span<const Index> perm) {
  check_square_pair(sa, sb);
  if (static_cast<Index>(perm.size()) != sa.rows())
    throw Error(ErrorCode::kShapeMismatch, "permutation length does not match matrices");
  const Index c = sa.rows();
  double total = 0.0;
  for (Index i = 0; i < c; ++i)
    for (Index j = 0; j < c; ++j) total += sa(i, j) * sb(perm[i], perm[j]);
  return total;
}

double qap_swap_delta(const MatrixRef& sa, const MatrixRef& sb, std::span<const Index> perm,
                      Index r, Index s) {
  const Index pr = perm[r];
  const Index ps = perm[s];
  double delta = (sa(r, r) - sa(s, s)) * (sb(ps, ps) - sb(pr, pr)) +
                 (sa(r, s) - sa(s, r)) * (sb(ps, pr) - sb(pr, ps));
  for (Index k = 0; k < static_cast<Index>(perm.size()); ++k) {
    if (k == r || k == s) continue;
    const Index pk = perm[k];
    delta += (sa(k, r) - sa(k, s)) * (sb(pk, ps) - sb(pk, pr)) +
             (sa(r, k) - sa(s, k)) * (sb(ps, pk) - sb(pr, pk));
  }
  return delta;
}

CentroidPermutation qap_2opt(const MatrixRef& sa, const MatrixRef& sb, Index restarts, Seed seed,
                             const QapObserver& observer) {
  check_square_pair(sa, sb);
  const Index c = sa.rows();
  if (c < 1) throw Error(ErrorCode::kShapeMismatch, "similarity matrices are empty");
  if (restarts < 1) throw Error(ErrorCode::kInvalidConfig, "qap restarts must be at least 1");

  CentroidPermutation best;
  std::vector<Index> perm(static_cast<std::size_t>(c));
  for (Index restart = 0; restart < restarts; ++restart) {
    std::iota(perm.begin(), perm.end(), Index{0});
    Rng rng = make_rng(derive_seed(seed, 0, static_cast<std::uint64_t>(restart)));
    std::shuffle(perm.begin(), perm.end(), rng);

    double score = qap_objective(sa, sb, perm);
    if (observer) observer(restart, score);
    for (;;) {
      double best_delta = kMinImprovement;
      Index best_r = -1, best_s = -1;
      for (Index r = 0; r < c; ++r) {
        for (Index s = r + 1; s < c; ++s) {
          const double delta = qap_swap_delta(sa, sb, perm, r, s);
          if (delta > best_delta) {
            best_delta = delta;
            best_r = r;
            best_s = s;
          }
        }
      }
      if (best_r < 0) break;
      std::swap(perm[static_cast<std::size_t>(best_r)], perm[static_cast<std::size_t>(best_s)]);
      score += best_delta;
      if (observer) observer(restart, score);
    }
    // Drop accumulated rounding from the incremental updates.
    score = qap_objective(sa, sb, perm);
    if (best.perm.empty() || score > best.score) {
      best.perm = perm;
      best.score = score;
    }
  }
  return best;
}

Matrix relative_representation(const MatrixRef& x, const MatrixRef& anchors) {
  if (x.cols() != anchors.cols())
    throw Error(ErrorCode::kDimensionMismatch, "embedding and anchor dimensions differ");
  const Eigen::VectorXd anchor_norms = checked_norms(anchors, ErrorCode::kZeroAnchor, "anchor");
  Matrix r = x * anchors.transpose();
  const Eigen::VectorXd x_norms = x.rowwise().norm();
  for (Index i = 0; i < r.rows(); ++i) {
    if (x_norms(i) == 0.0) {
      r.row(i).setZero();
      continue;
    }
    for (Index j = 0; j < r.cols(); ++j) r(i, j) /= x_norms(i) * anchor_norms(j);
  }
  return r;
}

AnchorRun anchor_run(const MatrixRef& xa, const MatrixRef& xb, Index c, Index qap_restarts,
                     Seed run_seed) {
  if (xa.cols() != xb.cols()) throw Error(ErrorCode::kDimensionMismatch, "pool dimensions differ");
  const Clustering ka = kmeans_fit(xa, c, PlusPlusInit{}, derive_seed(run_seed, 0));
  const Clustering kb = kmeans_fit(xb, c, PlusPlusInit{}, derive_seed(run_seed, 1));

  AnchorRun run;
  run.anchors_a = ka.centroids;
  if (c >= 2) {
    const Matrix sa = centroid_similarity(ka.centroids);
    const Matrix sb = centroid_similarity(kb.centroids);
    run.matching = qap_2opt(sa, sb, qap_restarts, derive_seed(run_seed, 2));
  } else {
    run.matching.perm = {0};
    run.matching.score = 1.0;
  }
  run.anchors_b.resize(c, xb.cols());
  for (Index i = 0; i < c; ++i)
    run.anchors_b.row(i) = kb.centroids.row(run.matching.perm[static_cast<std::size_t>(i)]);

  run.ra = relative_representation(xa, run.anchors_a);
  run.rb = relative_representation(xb, run.anchors_b);
  return run;
}

RelativeRepresentations anchor_alignment(const MatrixRef& xa, const MatrixRef& xb, Index c,
                                         Index s, Index qap_restarts, Seed seed) {
  if (s < 1) throw Error(ErrorCode::kInvalidConfig, "anchor run count must be at least 1");
  if (c > std::min(xa.rows(), xb.rows()))
    throw Error(ErrorCode::kTooFewPoints, "c=" + std::to_string(c) + " exceeds the smaller pool size");

  RelativeRepresentations out;
  out.ra.resize(xa.rows(), s * c);
  out.rb.resize(xb.rows(), s * c);
  parallel_for(s, 1, [&](Index first, Index last) {
    for (Index r = first; r < last; ++r) {
      const AnchorRun run =
          anchor_run(xa, xb, c, qap_restarts, derive_seed(seed, 0, static_cast<std::uint64_t>(r)));
      out.ra.middleCols(r * c, c) = run.ra;
      out.rb.middleCols(r * c, c) = run.rb;
    }
  });
  return out;
}

PseudoPairSet build_pseudo_pairs(const MatrixRef& xa_rows, const MatrixRef& ra, const MatrixRef& xb,
                                 const MatrixRef& rb, Index k) {
  if (xa_rows.rows() != ra.rows() || xb.rows() != rb.rows())
    throw Error(ErrorCode::kLengthMismatch, "relative representations must match their pools");
  if (ra.cols() != rb.cols())
    throw Error(ErrorCode::kDimensionMismatch, "relative representation widths differ");
  if (xa_rows.cols() != xb.cols())
    throw Error(ErrorCode::kDimensionMismatch, "pool dimensions differ");
  if (k < 1 || k > xb.rows())
    throw Error(ErrorCode::kKTooLarge, "k=" + std::to_string(k) + " but pool B has " +
                                           std::to_string(xb.rows()) + " rows");

  const IndexMatrix neighbors = knn_cosine(ra, rb, k);
  return PseudoPairSet{Matrix(xa_rows), neighbor_means(neighbors, xb)};
}

}  // namespace embalign
