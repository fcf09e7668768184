#pragma once

#include <cstdint>
#include <vector>

#include "embalign/random.hpp"
#include "embalign/types.hpp"

namespace embalign {

struct SynthSpec {
  Index n = 4000;          // pool size per space
  Index d = 64;
  Index components = 20;
  double noise_sigma = 0.01;
  double anisotropy = 0.5;
  Seed seed = 0;
  Index eval_pairs = 500;

  void validate() const;  // throws SpecInvalid
};

/// The B view of a latent point z is scale * (z * rotation) + translation.
struct GroundTruth {
  Matrix rotation;  // d x d orthogonal
  RowVector translation;
  double scale = 1.0;

  Matrix map_raw(const MatrixRef& a_rows) const;
};

struct SynthData {
  EmbeddingMatrix xa;
  EmbeddingMatrix xb;
  EmbeddingMatrix eval_a;
  EmbeddingMatrix eval_b;
  GroundTruth truth;
  // Component j shares a parent center with every k where j % groups ==
  // k % groups.
  Index groups = 1;
  // Mixture component and latent sample id of every row.
  std::vector<Index> labels_a, labels_b, labels_eval;
  std::vector<std::uint64_t> ids_a, ids_b, ids_eval;
};

/// Draws 2n + eval_pairs latent points from a Gaussian mixture and splits
/// them into disjoint A-only, B-only and shared evaluation sets. Each view
/// receives its own noise. The A/B split is stratified by component, so both
/// pools have the same occupancy counts up to one point per component.
SynthData synth_generate(const SynthSpec& spec);

}  // namespace embalign
