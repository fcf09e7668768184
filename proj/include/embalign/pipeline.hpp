#pragma once

#include <map>
#include <string>
#include <vector>

#include "embalign/types.hpp"

namespace embalign {

// Seed streams derived from PipelineConfig::seed.
inline constexpr std::uint64_t kAnchorStream = 1;
inline constexpr std::uint64_t kRefine1Stream = 2;
inline constexpr std::uint64_t kRefine2Stream = 3;
inline constexpr std::uint64_t kDiagnosticStream = 4;

struct FitLog {
  std::vector<std::string> warnings;
};

/// Learns the map from pool A to pool B:
/// normalize -> anchors -> pseudo-pairs -> Procrustes -> Refine-1 -> Refine-2.
///
/// Errors escaping a stage carry its name in Error::stage().
AlignmentModel fit(const EmbeddingMatrix& xa_raw, const EmbeddingMatrix& xb_raw,
                   const PipelineConfig& config, FitLog* log = nullptr);

struct EvalReport {
  double top1 = 0.0;
  double avg_rank = 0.0;
  double mean_cosine = 0.0;
  Index n = 0;
  std::map<std::string, double> per_stage;
  std::vector<Index> ranks;  // 1-based rank of each query's true match
};

/// Retrieval metrics for row-aligned pairs (eval_a row i <-> eval_b row i).
/// Queries are translated with the model; targets are normalized with the
/// model's B statistics.
EvalReport evaluate(const AlignmentModel& model, const EmbeddingMatrix& eval_a,
                    const EmbeddingMatrix& eval_b);

/// Ranking core of evaluate: queries and targets already live in the same
/// space. Ties are pessimistic, so a true match tied with k other targets
/// ranks k + 1 places down.
EvalReport rank_report(const MatrixRef& queries, const MatrixRef& targets);

}  // namespace embalign
