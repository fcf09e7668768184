#pragma once

#include "embalign/types.hpp"

namespace embalign {

using IndexMatrix = Eigen::Matrix<Index, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor>;

// Rows scaled to unit norm; zero rows stay zero.
Matrix row_normalized(const MatrixRef& x);

// Exact k nearest pool rows for each query row under cosine similarity.
// Row i of the result lists pool indices by decreasing similarity; ties go
// to the lower index. Throws KTooLarge when k > pool rows.
IndexMatrix knn_cosine(const MatrixRef& queries, const MatrixRef& pool, Index k);

// Row i = unweighted mean of values.row(j) over j in neighbors.row(i).
Matrix neighbor_means(const IndexMatrix& neighbors, const MatrixRef& values);

}  // namespace embalign
