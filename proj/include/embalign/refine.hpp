#pragma once

#include <string>
#include <vector>

#include "embalign/random.hpp"
#include "embalign/types.hpp"

namespace embalign {

struct RefineTrace {
  // Refine-1: mean cosine of (x_sample * w, matched average) per iteration,
  // using the map the matching was done with.
  std::vector<double> mean_cosine;
  std::vector<std::string> warnings;
};

struct Refine1Params {
  Index iterations = 100;
  double alpha = 0.5;
  Index k_prime = 50;
  Index n_sample = 10000;
  Seed seed = 0;
};

/// Matching-based refinement. Each iteration samples rows of xa without
/// replacement, matches them to the mean of their k' nearest xb rows under
/// the current map, fits Procrustes on those pairs and smooths it into w.
/// n_sample is clamped to the rows of xa (with a warning).
Matrix refine1(const MatrixRef& xa, const MatrixRef& xb, const MatrixRef& w,
               const Refine1Params& params, RefineTrace* trace = nullptr);

struct Refine2Params {
  double alpha = 0.5;
  Index c_prime = 500;
  Index iterations = 1;
  Seed seed = 0;
};

/// Clustering-based refinement: cluster xa, push the centroids through w,
/// run k-means on xb seeded with them, and fit Procrustes on the centroid
/// pairs matched by index. Repeated `iterations` times.
Matrix refine2(const MatrixRef& xa, const MatrixRef& xb, const MatrixRef& w,
               const Refine2Params& params, RefineTrace* trace = nullptr);

/// Mean cosine between sample * w and the mean of each sample row's k
/// nearest xb rows. The unsupervised quality signal used by both loops.
double matching_cosine(const MatrixRef& sample, const MatrixRef& xb, const MatrixRef& w, Index k);

}  // namespace embalign
