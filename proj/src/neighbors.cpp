#include "embalign/neighbors.hpp"

#include <algorithm>
#include <numeric>

#include "embalign/error.hpp"
#include "embalign/parallel.hpp"

namespace embalign {

namespace {
constexpr Index kQueryBlock = 256;
}

Matrix row_normalized(const MatrixRef& x) {
  Matrix out = x;
  for (Index i = 0; i < out.rows(); ++i) {
    const double norm = out.row(i).norm();
    if (norm > 0.0) out.row(i) /= norm;
  }
  return out;
}

IndexMatrix knn_cosine(const MatrixRef& queries, const MatrixRef& pool, Index k) {
  if (queries.cols() != pool.cols())
    throw Error(ErrorCode::kDimensionMismatch, "query and pool dimensions differ");
  if (k < 1 || k > pool.rows())
    throw Error(ErrorCode::kKTooLarge, "k=" + std::to_string(k) + " but the pool has " +
                                           std::to_string(pool.rows()) + " rows");

  const Matrix q = row_normalized(queries);
  const Matrix p = row_normalized(pool);
  const Index n_pool = p.rows();
  IndexMatrix result(queries.rows(), k);

  const Index blocks = (q.rows() + kQueryBlock - 1) / kQueryBlock;
  parallel_for(blocks, 1, [&](Index first_block, Index last_block) {
    std::vector<Index> order(static_cast<std::size_t>(n_pool));
    Matrix sims;
    for (Index b = first_block; b < last_block; ++b) {
      const Index begin = b * kQueryBlock;
      const Index rows = std::min(kQueryBlock, q.rows() - begin);
      sims.noalias() = q.middleRows(begin, rows) * p.transpose();
      for (Index r = 0; r < rows; ++r) {
        const double* s = sims.data() + r * n_pool;
        std::iota(order.begin(), order.end(), Index{0});
        std::partial_sort(order.begin(), order.begin() + k, order.end(), [s](Index a, Index c) {
          return s[a] > s[c] || (s[a] == s[c] && a < c);
        });
        for (Index j = 0; j < k; ++j) result(begin + r, j) = order[static_cast<std::size_t>(j)];
      }
    }
  });
  return result;
}

Matrix neighbor_means(const IndexMatrix& neighbors, const MatrixRef& values) {
  Matrix out = Matrix::Zero(neighbors.rows(), values.cols());
  const double inv = 1.0 / static_cast<double>(neighbors.cols());
  for (Index i = 0; i < neighbors.rows(); ++i) {
    for (Index j = 0; j < neighbors.cols(); ++j) out.row(i) += values.row(neighbors(i, j));
    out.row(i) *= inv;
  }
  return out;
}

}  // namespace embalign
