#pragma once

#include <Eigen/Dense>
#include <cstdint>
#include <limits>
#include <string>
#include <vector>

#include "embalign/random.hpp"

namespace embalign {

using Index = Eigen::Index;
using Matrix = Eigen::Matrix<double, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor>;
using RowVector = Eigen::RowVectorXd;
using MatrixRef = Eigen::Ref<const Matrix>;

/// A pool of embeddings, one per row. Rows >= 1, dimension >= 2, all finite.
class EmbeddingMatrix {
 public:
  explicit EmbeddingMatrix(Matrix data, std::string label = {});

  const Matrix& data() const noexcept { return data_; }
  Index rows() const noexcept { return data_.rows(); }
  Index dim() const noexcept { return data_.cols(); }
  const std::string& label() const noexcept { return label_; }

 private:
  Matrix data_;
  std::string label_;
};

struct NormalizationStats {
  RowVector mean;
  // ||mean|| / average raw row norm. Diagnostic only.
  double mean_norm_share = 0.0;
};

/// Hyperparameters of the full alignment pipeline.
///
/// Defaults are the published settings. `iterations` (Refine-1) and
/// `refine2_iterations` may be 0, which skips that stage; every other count
/// must be at least 1.
struct PipelineConfig {
  Index c = 20;             // clusters per anchor run
  Index k = 50;             // neighbors averaged per pseudo-pair
  Index s = 30;             // anchor runs
  Index iterations = 100;   // Refine-1 iterations (T)
  double alpha = 0.5;       // smoothing weight
  Index k_prime = 50;       // Refine-1 neighbors
  Index c_prime = 500;      // Refine-2 clusters
  Index n_sample = 10000;   // Refine-1 subsample size
  Index refine2_iterations = 1;
  Index qap_restarts = 30;
  Seed seed = 0;

  static PipelineConfig paper_defaults() { return {}; }
  static PipelineConfig small_preset();

  // Throws ConfigError naming the offending field.
  void validate() const;

  bool operator==(const PipelineConfig&) const = default;
};

/// Mean cosine similarity reported after each pipeline stage. NaN when the
/// stage did not run.
struct StageDiagnostics {
  double initial = std::numeric_limits<double>::quiet_NaN();
  double refine1 = std::numeric_limits<double>::quiet_NaN();
  double refine2 = std::numeric_limits<double>::quiet_NaN();
  std::vector<double> refine1_trace;
};

/// A fitted map from normalized space A into normalized space B, applied to
/// row vectors as x * w.
struct AlignmentModel {
  Matrix w;
  NormalizationStats stats_a;
  NormalizationStats stats_b;
  StageDiagnostics diagnostics;
  PipelineConfig config;

  Index dim() const noexcept { return w.rows(); }
};

}  // namespace embalign
