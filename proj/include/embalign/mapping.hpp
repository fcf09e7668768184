#pragma once

#include "embalign/correspondence.hpp"
#include "embalign/types.hpp"

namespace embalign {

inline constexpr double kRankDeficiencyThreshold = 1e-10;

struct ProcrustesSolution {
  Matrix w;                 // d x d orthogonal
  double residual = 0.0;    // RMS of ||a_i w - b_i||
  double min_singular_value = 0.0;
  bool rank_deficient = false;  // min singular value of A^T B below 1e-10
};

/// Orthogonal w minimizing ||A w - B||_F (row-vector convention). Requires at
/// least two pairs; throws TooFewPairs otherwise.
ProcrustesSolution procrustes(const PseudoPairSet& pairs);

/// Same solver without the pair-count floor (needs m >= 1). Used where a
/// single correspondence is meaningful, e.g. one centroid pair.
ProcrustesSolution procrustes_fit(const MatrixRef& source, const MatrixRef& target);

/// (1 - alpha) * w + alpha * w_new.
Matrix smooth_update(const MatrixRef& w, const MatrixRef& w_new, double alpha);

// max |w^T w - I|.
double orthogonality_defect(const MatrixRef& w);

double spectral_norm(const MatrixRef& w);

}  // namespace embalign
