#pragma once

#include <functional>
#include <span>
#include <vector>

#include "embalign/random.hpp"
#include "embalign/types.hpp"

namespace embalign {

/// Pairwise cosine similarities between centroids (c x c, symmetric, unit
/// diagonal). Throws ZeroCentroid if any centroid has norm <= 1e-12.
Matrix centroid_similarity(const MatrixRef& centroids);

/// A matching of centroids: A-centroid i corresponds to B-centroid perm[i].
struct CentroidPermutation {
  std::vector<Index> perm;
  double score = 0.0;
};

/// sum_ij sa(i, j) * sb(perm[i], perm[j]), i.e. Tr(Sa^T P Sb P^T) without
/// forming P.
double qap_objective(const MatrixRef& sa, const MatrixRef& sb, std::span<const Index> perm);

/// Change in qap_objective when perm[r] and perm[s] are exchanged. O(c).
double qap_swap_delta(const MatrixRef& sa, const MatrixRef& sb, std::span<const Index> perm,
                      Index r, Index s);

// Called with (restart, score) after every accepted swap and once at the
// start of each restart.
using QapObserver = std::function<void(Index restart, double score)>;

/// Best-of-`restarts` 2-OPT local search maximizing qap_objective.
///
/// Each restart starts from a uniformly random permutation drawn from
/// derive_seed(seed, 0, restart) and applies the best improving pairwise
/// exchange until none improves. The first restart reaching the best score
/// wins, so a run with more restarts never scores lower.
CentroidPermutation qap_2opt(const MatrixRef& sa, const MatrixRef& sb, Index restarts, Seed seed,
                             const QapObserver& observer = {});

/// Entry (i, j) = cos(x.row(i), anchors.row(j)). Throws ZeroAnchor.
Matrix relative_representation(const MatrixRef& x, const MatrixRef& anchors);

/// One clustering + matching round of anchor discovery.
struct AnchorRun {
  Matrix anchors_a;  // A centroids
  Matrix anchors_b;  // B centroids reordered so row i matches anchors_a row i
  CentroidPermutation matching;
  Matrix ra;  // n_A x c
  Matrix rb;  // n_B x c
};

AnchorRun anchor_run(const MatrixRef& xa, const MatrixRef& xb, Index c, Index qap_restarts,
                     Seed run_seed);

struct RelativeRepresentations {
  Matrix ra;  // n_A x (s * c), run blocks in order
  Matrix rb;  // n_B x (s * c)
};

/// s independent anchor runs concatenated column-wise. Run r uses
/// derive_seed(seed, 0, r); runs may execute concurrently.
RelativeRepresentations anchor_alignment(const MatrixRef& xa, const MatrixRef& xb, Index c,
                                         Index s, Index qap_restarts, Seed seed);

struct PseudoPairSet {
  Matrix source_rows;  // m x d, rows of A
  Matrix target_rows;  // m x d, averaged B rows
};

/// For every source row, average the B rows whose relative representations
/// are the k nearest (cosine) to the source's relative representation.
PseudoPairSet build_pseudo_pairs(const MatrixRef& xa_rows, const MatrixRef& ra,
                                 const MatrixRef& xb, const MatrixRef& rb, Index k);

}  // namespace embalign
