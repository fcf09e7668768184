#include "embalign/synth.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>

#include "embalign/error.hpp"

namespace embalign {

namespace {

constexpr double kClusterRadius = 0.25;
constexpr double kSiblingSpread = 0.15;
constexpr Index kComponentsPerGroup = 2;
constexpr double kOffsetNorm = 1.5;
constexpr double kTranslationNorm = 2.0;

Matrix gaussian_matrix(Index rows, Index cols, Rng& rng) {
  std::normal_distribution<double> normal(0.0, 1.0);
  Matrix m(rows, cols);
  for (Index i = 0; i < rows; ++i)
    for (Index j = 0; j < cols; ++j) m(i, j) = normal(rng);
  return m;
}

// Haar-distributed orthogonal matrix: QR of a Gaussian matrix with the signs
// of R's diagonal folded into Q.
Matrix random_orthogonal(Index d, Rng& rng) {
  const Eigen::MatrixXd g = gaussian_matrix(d, d, rng);
  Eigen::HouseholderQR<Eigen::MatrixXd> qr(g);
  Eigen::MatrixXd q = qr.householderQ();
  const Eigen::MatrixXd r = qr.matrixQR().triangularView<Eigen::Upper>();
  for (Index j = 0; j < d; ++j)
    if (r(j, j) < 0.0) q.col(j) *= -1.0;
  return q;
}

RowVector random_direction(Index d, double norm, Rng& rng) {
  RowVector v = gaussian_matrix(1, d, rng).row(0);
  return v * (norm / v.norm());
}

}  // namespace

void SynthSpec::validate() const {
  auto fail = [](const std::string& msg) { throw Error(ErrorCode::kSpecInvalid, msg); };
  if (n < 1) fail("n must be at least 1");
  if (d < 2) fail("d must be at least 2");
  if (components < 1) fail("components must be at least 1");
  if (components > n) fail("components must not exceed n");
  if (eval_pairs < 1) fail("eval_pairs must be at least 1");
  if (!(noise_sigma >= 0.0) || !std::isfinite(noise_sigma)) fail("noise must be a finite value >= 0");
  if (!(anisotropy >= 0.0) || !std::isfinite(anisotropy))
    fail("anisotropy must be a finite value >= 0");
}

Matrix GroundTruth::map_raw(const MatrixRef& a_rows) const {
  return (scale * (a_rows * rotation)).rowwise() + translation;
}

SynthData synth_generate(const SynthSpec& spec) {
  spec.validate();
  Rng rng = make_rng(spec.seed);
  const Index d = spec.d;
  const Index kc = spec.components;

  // Components come in sibling groups around a shared parent center, so a
  // coarse clustering of the pool has one clear optimum.
  const Index groups = std::max<Index>(1, kc / kComponentsPerGroup);
  Matrix parents = gaussian_matrix(groups, d, rng);
  parents /= parents.rowwise().norm().mean();
  Matrix centers(kc, d);
  {
    const Matrix jitter = gaussian_matrix(kc, d, rng) * (kSiblingSpread / std::sqrt(static_cast<double>(d)));
    for (Index j = 0; j < kc; ++j) centers.row(j) = parents.row(j % groups) + jitter.row(j);
  }

  // Per-component axis scales; anisotropy spreads them log-normally.
  Matrix axis_scale(kc, d);
  {
    std::normal_distribution<double> normal(0.0, 1.0);
    const double base = kClusterRadius / std::sqrt(static_cast<double>(d));
    for (Index j = 0; j < kc; ++j)
      for (Index a = 0; a < d; ++a) axis_scale(j, a) = base * std::exp(spec.anisotropy * normal(rng));
  }
  std::vector<double> weights(static_cast<std::size_t>(kc));
  {
    std::uniform_real_distribution<double> u(0.5, 1.5);
    for (auto& w : weights) w = u(rng);
  }
  const RowVector offset = random_direction(d, kOffsetNorm, rng);

  GroundTruth truth;
  truth.rotation = random_orthogonal(d, rng);
  truth.translation = random_direction(d, kTranslationNorm, rng);
  truth.scale = std::uniform_real_distribution<double>(0.5, 2.0)(rng);

  const Index total = 2 * spec.n + spec.eval_pairs;
  std::vector<Index> labels(static_cast<std::size_t>(total));
  Matrix latent(total, d);
  {
    std::discrete_distribution<Index> pick(weights.begin(), weights.end());
    std::normal_distribution<double> normal(0.0, 1.0);
    for (Index i = 0; i < total; ++i) {
      const Index l = pick(rng);
      labels[static_cast<std::size_t>(i)] = l;
      for (Index a = 0; a < d; ++a)
        latent(i, a) = offset(a) + centers(l, a) + axis_scale(l, a) * normal(rng);
    }
  }

  // Evaluation ids first, then a per-component alternating A/B split.
  std::vector<Index> order(static_cast<std::size_t>(total));
  std::iota(order.begin(), order.end(), Index{0});
  std::shuffle(order.begin(), order.end(), rng);
  std::vector<Index> eval_ids(order.begin(), order.begin() + spec.eval_pairs);
  std::vector<std::vector<Index>> by_component(static_cast<std::size_t>(kc));
  for (auto it = order.begin() + spec.eval_pairs; it != order.end(); ++it)
    by_component[static_cast<std::size_t>(labels[static_cast<std::size_t>(*it)])].push_back(*it);

  std::vector<Index> a_ids, b_ids;
  bool odd_to_a = true;
  for (const auto& members : by_component) {
    for (std::size_t i = 0; i + 1 < members.size(); i += 2) {
      a_ids.push_back(members[i]);
      b_ids.push_back(members[i + 1]);
    }
    if (members.size() % 2 == 1) {
      (odd_to_a ? a_ids : b_ids).push_back(members.back());
      odd_to_a = !odd_to_a;
    }
  }
  std::shuffle(a_ids.begin(), a_ids.end(), rng);
  std::shuffle(b_ids.begin(), b_ids.end(), rng);

  std::normal_distribution<double> noise(0.0, 1.0);
  auto a_view = [&](const std::vector<Index>& ids) {
    Matrix m(static_cast<Index>(ids.size()), d);
    for (std::size_t r = 0; r < ids.size(); ++r) {
      m.row(static_cast<Index>(r)) = latent.row(ids[r]);
      for (Index a = 0; a < d; ++a) m(static_cast<Index>(r), a) += spec.noise_sigma * noise(rng);
    }
    return m;
  };
  auto b_view = [&](const std::vector<Index>& ids) {
    Matrix m(static_cast<Index>(ids.size()), d);
    for (std::size_t r = 0; r < ids.size(); ++r) m.row(static_cast<Index>(r)) = latent.row(ids[r]);
    m = truth.map_raw(m);
    for (Index r = 0; r < m.rows(); ++r)
      for (Index a = 0; a < d; ++a) m(r, a) += spec.noise_sigma * noise(rng);
    return m;
  };
  auto labels_of = [&](const std::vector<Index>& ids) {
    std::vector<Index> out;
    out.reserve(ids.size());
    for (Index id : ids) out.push_back(labels[static_cast<std::size_t>(id)]);
    return out;
  };
  auto as_ids = [](const std::vector<Index>& ids) {
    return std::vector<std::uint64_t>(ids.begin(), ids.end());
  };

  Matrix xa = a_view(a_ids);
  Matrix xb = b_view(b_ids);
  Matrix ea = a_view(eval_ids);
  Matrix eb = b_view(eval_ids);

  return SynthData{
      EmbeddingMatrix(std::move(xa), "synth-A"),
      EmbeddingMatrix(std::move(xb), "synth-B"),
      EmbeddingMatrix(std::move(ea), "synth-eval-A"),
      EmbeddingMatrix(std::move(eb), "synth-eval-B"),
      std::move(truth),
      groups,
      labels_of(a_ids),
      labels_of(b_ids),
      labels_of(eval_ids),
      as_ids(a_ids),
      as_ids(b_ids),
      as_ids(eval_ids),
  };
}

}  // namespace embalign
