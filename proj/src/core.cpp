#include "embalign/core.hpp"

#include <cmath>

#include "embalign/error.hpp"

namespace embalign {

EmbeddingMatrix::EmbeddingMatrix(Matrix data, std::string label)
    : data_(std::move(data)), label_(std::move(label)) {
  if (data_.rows() == 0) throw Error(ErrorCode::kEmptyInput, "embedding matrix has no rows");
  if (data_.cols() < 2)
    throw Error(ErrorCode::kDimensionMismatch, "embedding dimension must be at least 2");
  if (!data_.allFinite()) throw Error(ErrorCode::kNonFiniteInput, "embedding matrix has NaN/Inf");
}

namespace {

// Centers with `mean` and normalizes; collects degenerate rows.
Matrix center_rows(const Matrix& x, const RowVector& mean) {
  Matrix centered = x.rowwise() - mean;
  std::vector<std::int64_t> degenerate;
  for (Index i = 0; i < centered.rows(); ++i) {
    const double norm = centered.row(i).norm();
    if (norm < kDegenerateNorm) {
      degenerate.push_back(i);
    } else {
      centered.row(i) /= norm;
    }
  }
  if (!degenerate.empty()) throw DegenerateRowError(std::move(degenerate));
  return centered;
}

}  // namespace

std::pair<EmbeddingMatrix, NormalizationStats> center_and_normalize(const EmbeddingMatrix& x) {
  NormalizationStats stats;
  stats.mean = x.data().colwise().mean();
  Matrix normalized = center_rows(x.data(), stats.mean);

  const double avg_norm = x.data().rowwise().norm().mean();
  stats.mean_norm_share = avg_norm > 0.0 ? std::min(1.0, stats.mean.norm() / avg_norm) : 0.0;
  return {EmbeddingMatrix(std::move(normalized), x.label()), std::move(stats)};
}

EmbeddingMatrix normalize_with(const EmbeddingMatrix& x, const NormalizationStats& stats) {
  if (stats.mean.size() != x.dim())
    throw Error(ErrorCode::kDimensionMismatch,
                "input dimension " + std::to_string(x.dim()) + " does not match statistics dimension " +
                    std::to_string(stats.mean.size()));
  return EmbeddingMatrix(center_rows(x.data(), stats.mean), x.label());
}

Matrix apply_map(const AlignmentModel& model, const MatrixRef& x_normalized) {
  if (x_normalized.cols() != model.dim())
    throw Error(ErrorCode::kDimensionMismatch, "input dimension does not match model");
  return x_normalized * model.w;
}

EmbeddingMatrix translate(const AlignmentModel& model, const EmbeddingMatrix& x_raw) {
  if (x_raw.dim() != model.dim())
    throw Error(ErrorCode::kDimensionMismatch,
                "input dimension " + std::to_string(x_raw.dim()) + " does not match model dimension " +
                    std::to_string(model.dim()));
  const EmbeddingMatrix normalized = normalize_with(x_raw, model.stats_a);
  return EmbeddingMatrix(apply_map(model, normalized.data()), x_raw.label());
}

std::pair<EmbeddingMatrix, std::vector<Index>> drop_degenerate_rows(const EmbeddingMatrix& x,
                                                                    const RowVector& mean) {
  if (mean.size() != x.dim()) throw Error(ErrorCode::kDimensionMismatch, "mean dimension mismatch");
  std::vector<Index> keep, dropped;
  for (Index i = 0; i < x.rows(); ++i) {
    if ((x.data().row(i) - mean).norm() < kDegenerateNorm) {
      dropped.push_back(i);
    } else {
      keep.push_back(i);
    }
  }
  if (keep.empty()) throw Error(ErrorCode::kEmptyInput, "every row is degenerate");
  if (dropped.empty()) return {x, {}};
  Matrix kept(static_cast<Index>(keep.size()), x.dim());
  for (std::size_t r = 0; r < keep.size(); ++r) kept.row(static_cast<Index>(r)) = x.data().row(keep[r]);
  return {EmbeddingMatrix(std::move(kept), x.label()), std::move(dropped)};
}

std::pair<EmbeddingMatrix, std::vector<Index>> drop_degenerate_rows(const EmbeddingMatrix& x) {
  return drop_degenerate_rows(x, x.data().colwise().mean());
}

double cosine(const RowVector& a, const RowVector& b) {
  const double na = a.norm();
  const double nb = b.norm();
  if (na == 0.0 || nb == 0.0) return 0.0;
  return a.dot(b) / (na * nb);
}

}  // namespace embalign

namespace embalign {

PipelineConfig PipelineConfig::small_preset() {
  PipelineConfig cfg;
  cfg.c = 10;
  cfg.s = 10;
  cfg.k = 20;
  cfg.iterations = 50;
  cfg.c_prime = 100;
  cfg.n_sample = 2000;
  cfg.k_prime = 20;
  return cfg;
}

void PipelineConfig::validate() const {
  auto at_least = [](const char* field, Index value, Index floor) {
    if (value < floor)
      throw ConfigError(field, "must be at least " + std::to_string(floor) + ", got " +
                                   std::to_string(value));
  };
  at_least("c", c, 1);
  at_least("k", k, 1);
  at_least("s", s, 1);
  at_least("t", iterations, 0);
  at_least("kprime", k_prime, 1);
  at_least("cprime", c_prime, 1);
  at_least("nsample", n_sample, 1);
  at_least("refine2iters", refine2_iterations, 0);
  at_least("qaprestarts", qap_restarts, 1);
  if (!(alpha > 0.0 && alpha <= 1.0))
    throw ConfigError("alpha", "must lie in (0, 1], got " + std::to_string(alpha));
}

}  // namespace embalign
