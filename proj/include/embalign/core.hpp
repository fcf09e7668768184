#pragma once

#include <utility>

#include "embalign/types.hpp"

namespace embalign {

// Rows with a centered norm below this are treated as degenerate.
inline constexpr double kDegenerateNorm = 1e-12;

/// Subtracts the column mean and scales every row to unit L2 norm.
/// Throws DegenerateRowError listing every row that centers to ~zero.
std::pair<EmbeddingMatrix, NormalizationStats> center_and_normalize(const EmbeddingMatrix& x);

/// Applies previously computed statistics (center with `stats.mean`, then
/// normalize rows). Throws DimensionMismatch or DegenerateRowError.
EmbeddingMatrix normalize_with(const EmbeddingMatrix& x, const NormalizationStats& stats);

/// Maps raw A-space embeddings into normalized B space. Output rows are not
/// re-normalized.
EmbeddingMatrix translate(const AlignmentModel& model, const EmbeddingMatrix& x_raw);

/// The linear part of translate: rows that are already centered and
/// normalized, multiplied by the model map.
Matrix apply_map(const AlignmentModel& model, const MatrixRef& x_normalized);

/// Returns x with degenerate rows (relative to `mean`) removed, and the
/// removed row indices. Throws EmptyInput if nothing survives.
std::pair<EmbeddingMatrix, std::vector<Index>> drop_degenerate_rows(
    const EmbeddingMatrix& x, const RowVector& mean);

/// Same, using the column mean of x itself.
std::pair<EmbeddingMatrix, std::vector<Index>> drop_degenerate_rows(const EmbeddingMatrix& x);

/// Cosine similarity; 0 when either vector has zero norm.
double cosine(const RowVector& a, const RowVector& b);

}  // namespace embalign
