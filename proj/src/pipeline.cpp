#include "embalign/pipeline.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>

#include "embalign/correspondence.hpp"
#include "embalign/core.hpp"
#include "embalign/error.hpp"
#include "embalign/mapping.hpp"
#include "embalign/neighbors.hpp"
#include "embalign/parallel.hpp"
#include "embalign/refine.hpp"

namespace embalign {

namespace {

template <class Fn>
auto run_stage(const char* stage, Fn&& fn) {
  try {
    return fn();
  } catch (Error& e) {
    if (e.stage().empty()) e.set_stage(stage);
    throw;
  }
}

// Fixed subsample of A used to compare stages on the same rows.
Matrix diagnostic_sample(const Matrix& xa, Index size, Seed seed) {
  size = std::min(size, xa.rows());
  std::vector<Index> all(static_cast<std::size_t>(xa.rows()));
  std::iota(all.begin(), all.end(), Index{0});
  std::vector<Index> picked(static_cast<std::size_t>(size));
  Rng rng = make_rng(seed);
  std::sample(all.begin(), all.end(), picked.begin(), size, rng);
  Matrix out(size, xa.cols());
  for (Index i = 0; i < size; ++i) out.row(i) = xa.row(picked[static_cast<std::size_t>(i)]);
  return out;
}

}  // namespace

AlignmentModel fit(const EmbeddingMatrix& xa_raw, const EmbeddingMatrix& xb_raw,
                   const PipelineConfig& config, FitLog* log) {
  config.validate();
  if (xa_raw.dim() != xb_raw.dim())
    throw Error(ErrorCode::kDimensionMismatch, "pools have dimensions " + std::to_string(xa_raw.dim()) +
                                                   " and " + std::to_string(xb_raw.dim()));
  auto warn = [log](std::string message) {
    if (log) log->warnings.push_back(std::move(message));
  };

  AlignmentModel model;
  model.config = config;

  auto [xa, stats_a] = run_stage("normalize", [&] { return center_and_normalize(xa_raw); });
  auto [xb, stats_b] = run_stage("normalize", [&] { return center_and_normalize(xb_raw); });
  model.stats_a = std::move(stats_a);
  model.stats_b = std::move(stats_b);
  const Matrix& a = xa.data();
  const Matrix& b = xb.data();

  const Index d = a.cols();
  if (a.rows() < d)
    warn("pool A has fewer rows (" + std::to_string(a.rows()) + ") than dimensions (" +
         std::to_string(d) + "); the initial map is under-determined");

  const RelativeRepresentations rel = run_stage("anchors", [&] {
    return anchor_alignment(a, b, config.c, config.s, config.qap_restarts,
                            derive_seed(config.seed, kAnchorStream));
  });
  const PseudoPairSet pairs =
      run_stage("pseudo-pairs", [&] { return build_pseudo_pairs(a, rel.ra, b, rel.rb, config.k); });
  const ProcrustesSolution initial = run_stage("procrustes", [&] { return procrustes(pairs); });
  if (initial.rank_deficient) warn("initial Procrustes problem is rank-deficient");
  Matrix w = initial.w;

  const Index diag_k = std::min(config.k_prime, b.rows());
  const Matrix probe = diagnostic_sample(a, std::min(config.n_sample, a.rows()),
                                         derive_seed(config.seed, kDiagnosticStream));
  model.diagnostics.initial = matching_cosine(probe, b, w, diag_k);

  RefineTrace trace;
  if (config.iterations > 0) {
    w = run_stage("refine-1", [&] {
      return refine1(a, b, w,
                     Refine1Params{config.iterations, config.alpha, config.k_prime, config.n_sample,
                                   derive_seed(config.seed, kRefine1Stream)},
                     &trace);
    });
    model.diagnostics.refine1 = matching_cosine(probe, b, w, diag_k);
    model.diagnostics.refine1_trace = trace.mean_cosine;
  }
  if (config.refine2_iterations > 0) {
    w = run_stage("refine-2", [&] {
      return refine2(a, b, w,
                     Refine2Params{config.alpha, config.c_prime, config.refine2_iterations,
                                   derive_seed(config.seed, kRefine2Stream)},
                     &trace);
    });
    model.diagnostics.refine2 = matching_cosine(probe, b, w, diag_k);
  }
  for (auto& message : trace.warnings) warn(std::move(message));

  model.w = std::move(w);
  return model;
}

EvalReport rank_report(const MatrixRef& queries, const MatrixRef& targets) {
  if (queries.rows() != targets.rows())
    throw Error(ErrorCode::kLengthMismatch, "query and target counts differ");
  if (queries.cols() != targets.cols())
    throw Error(ErrorCode::kDimensionMismatch, "query and target dimensions differ");
  const Index n = queries.rows();
  if (n == 0) throw Error(ErrorCode::kEmptyInput, "no evaluation pairs");

  const Matrix q = row_normalized(queries);
  const Matrix t = row_normalized(targets);

  EvalReport report;
  report.n = n;
  report.ranks.assign(static_cast<std::size_t>(n), 0);
  std::vector<double> cosines(static_cast<std::size_t>(n), 0.0);

  constexpr Index kBlock = 256;
  const Index blocks = (n + kBlock - 1) / kBlock;
  parallel_for(blocks, 1, [&](Index first, Index last) {
    Matrix sims;
    for (Index blk = first; blk < last; ++blk) {
      const Index begin = blk * kBlock;
      const Index rows = std::min(kBlock, n - begin);
      sims.noalias() = q.middleRows(begin, rows) * t.transpose();
      for (Index r = 0; r < rows; ++r) {
        const Index i = begin + r;
        const double truth = sims(r, i);
        Index rank = 1;
        for (Index j = 0; j < n; ++j)
          if (j != i && sims(r, j) >= truth) ++rank;
        report.ranks[static_cast<std::size_t>(i)] = rank;
        cosines[static_cast<std::size_t>(i)] = truth;
      }
    }
  });

  Index hits = 0;
  double rank_sum = 0.0;
  for (Index r : report.ranks) {
    hits += (r == 1);
    rank_sum += static_cast<double>(r);
  }
  report.top1 = static_cast<double>(hits) / static_cast<double>(n);
  report.avg_rank = rank_sum / static_cast<double>(n);
  report.mean_cosine = std::accumulate(cosines.begin(), cosines.end(), 0.0) / static_cast<double>(n);
  return report;
}

EvalReport evaluate(const AlignmentModel& model, const EmbeddingMatrix& eval_a,
                    const EmbeddingMatrix& eval_b) {
  if (eval_a.rows() != eval_b.rows())
    throw Error(ErrorCode::kLengthMismatch, "evaluation sets have " + std::to_string(eval_a.rows()) +
                                                " and " + std::to_string(eval_b.rows()) + " rows");
  if (eval_a.dim() != model.dim() || eval_b.dim() != model.dim())
    throw Error(ErrorCode::kDimensionMismatch, "evaluation dimension does not match model");

  const EmbeddingMatrix queries = translate(model, eval_a);
  const EmbeddingMatrix targets = normalize_with(eval_b, model.stats_b);
  EvalReport report = rank_report(queries.data(), targets.data());

  const auto& diag = model.diagnostics;
  if (!std::isnan(diag.initial)) report.per_stage["initial"] = diag.initial;
  if (!std::isnan(diag.refine1)) report.per_stage["refine1"] = diag.refine1;
  if (!std::isnan(diag.refine2)) report.per_stage["refine2"] = diag.refine2;
  return report;
}

}  // namespace embalign
