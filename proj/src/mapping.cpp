#include "embalign/mapping.hpp"

#include <cmath>

#include "embalign/error.hpp"

namespace embalign {

namespace {

// Flips singular-vector pairs so each left vector's largest-magnitude entry
// is positive (first one wins on ties). u * v^T is unchanged.
void fix_signs(Matrix& u, Matrix& v) {
  for (Index j = 0; j < u.cols(); ++j) {
    Index arg = 0;
    double best = -1.0;
    for (Index i = 0; i < u.rows(); ++i) {
      if (std::abs(u(i, j)) > best) {
        best = std::abs(u(i, j));
        arg = i;
      }
    }
    if (u(arg, j) < 0.0) {
      u.col(j) *= -1.0;
      v.col(j) *= -1.0;
    }
  }
}

}  // namespace

ProcrustesSolution procrustes_fit(const MatrixRef& source, const MatrixRef& target) {
  if (source.rows() != target.rows())
    throw Error(ErrorCode::kLengthMismatch, "source and target pair counts differ");
  if (source.cols() != target.cols())
    throw Error(ErrorCode::kDimensionMismatch, "source and target dimensions differ");
  if (source.rows() < 1) throw Error(ErrorCode::kTooFewPairs, "no pairs to fit");
  if (!source.allFinite() || !target.allFinite())
    throw Error(ErrorCode::kNonFiniteInput, "pairs contain NaN/Inf");

  const Eigen::MatrixXd cross = source.transpose() * target;
  Eigen::BDCSVD<Eigen::MatrixXd> svd(cross, Eigen::ComputeFullU | Eigen::ComputeFullV);
  Matrix u = svd.matrixU();
  Matrix v = svd.matrixV();
  fix_signs(u, v);

  ProcrustesSolution sol;
  sol.w = u * v.transpose();
  sol.min_singular_value = svd.singularValues().minCoeff();
  sol.rank_deficient = sol.min_singular_value < kRankDeficiencyThreshold;
  sol.residual = std::sqrt((source * sol.w - target).rowwise().squaredNorm().mean());
  return sol;
}

ProcrustesSolution procrustes(const PseudoPairSet& pairs) {
  if (pairs.source_rows.rows() < 2)
    throw Error(ErrorCode::kTooFewPairs,
                "Procrustes needs at least 2 pairs, got " + std::to_string(pairs.source_rows.rows()));
  return procrustes_fit(pairs.source_rows, pairs.target_rows);
}

Matrix smooth_update(const MatrixRef& w, const MatrixRef& w_new, double alpha) {
  if (w.rows() != w_new.rows() || w.cols() != w_new.cols())
    throw Error(ErrorCode::kShapeMismatch, "smoothing operands differ in shape");
  if (!(alpha > 0.0 && alpha <= 1.0))
    throw Error(ErrorCode::kInvalidConfig, "alpha must lie in (0, 1]");
  return (1.0 - alpha) * w + alpha * w_new;
}

double orthogonality_defect(const MatrixRef& w) {
  const Matrix gram = w.transpose() * w;
  return (gram - Matrix::Identity(w.cols(), w.cols())).cwiseAbs().maxCoeff();
}

double spectral_norm(const MatrixRef& w) {
  if (w.size() == 0) return 0.0;
  const Eigen::MatrixXd dense = w;
  Eigen::BDCSVD<Eigen::MatrixXd> svd(dense);
  return svd.singularValues()(0);
}

}  // namespace embalign
