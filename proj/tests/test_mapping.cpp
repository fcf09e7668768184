#include <doctest.h>

#include "embalign/error.hpp"
#include "embalign/mapping.hpp"
#include "test_util.hpp"

using namespace embalign;
using testutil::gaussian;

namespace {

PseudoPairSet pairs_of(Matrix a, Matrix b) { return PseudoPairSet{std::move(a), std::move(b)}; }

double max_abs(const Matrix& m) { return m.cwiseAbs().maxCoeff(); }

}  // namespace

TEST_CASE("identical pairs give the identity") {
  const Matrix a = gaussian(30, 5, 1);
  auto sol = procrustes(pairs_of(a, a));
  CHECK(max_abs(sol.w - Matrix::Identity(5, 5)) <= 1e-10);
  CHECK(sol.residual < 1e-10);
  CHECK_FALSE(sol.rank_deficient);
}

TEST_CASE("exact rotated pairs recover the rotation") {
  for (std::uint64_t seed = 0; seed < 10; ++seed) {
    const Matrix q = testutil::random_orthogonal(16, seed);
    const Matrix a = gaussian(200, 16, seed + 50);
    auto sol = procrustes(pairs_of(a, a * q));
    CHECK((sol.w - q).norm() <= 1e-8);
  }
}

TEST_CASE("noisy rotated pairs stay close to the rotation") {
  const Matrix q = testutil::random_orthogonal(16, 7);
  const Matrix a = gaussian(200, 16, 8);
  const Matrix b = a * q + gaussian(200, 16, 9, 0.01);
  auto sol = procrustes(pairs_of(a, b));
  CHECK((sol.w - q).norm() <= 0.1);
  const double identity_residual = std::sqrt((a - b).rowwise().squaredNorm().mean());
  CHECK(sol.residual <= identity_residual);
  CHECK(sol.residual < 0.05);  // noise floor is 0.01 * sqrt(16)
}

TEST_CASE("every output is orthogonal") {
  for (std::uint64_t seed = 0; seed < 30; ++seed) {
    const Index d = 2 + static_cast<Index>(seed % 12);
    const Index m = 2 + static_cast<Index>(seed * 3 % 40);
    auto sol = procrustes(pairs_of(gaussian(m, d, seed), gaussian(m, d, seed + 1000)));
    CHECK(orthogonality_defect(sol.w) <= 1e-8);
    CHECK(max_abs(sol.w.transpose() * sol.w - Matrix::Identity(d, d)) <= 1e-8);
  }
}

TEST_CASE("pair order does not matter") {
  const Matrix a = gaussian(40, 6, 3);
  const Matrix b = gaussian(40, 6, 4);
  Matrix ar = a.colwise().reverse();
  Matrix br = b.colwise().reverse();
  auto x = procrustes(pairs_of(a, b));
  auto y = procrustes(pairs_of(ar, br));
  CHECK(max_abs(x.w - y.w) <= 1e-10);
}

TEST_CASE("residual is no worse than any other orthogonal map") {
  const Matrix a = gaussian(50, 4, 5);
  const Matrix b = gaussian(50, 4, 6);
  auto sol = procrustes(pairs_of(a, b));
  for (std::uint64_t seed = 0; seed < 20; ++seed) {
    const Matrix other = testutil::random_orthogonal(4, seed + 300);
    const double r = std::sqrt((a * other - b).rowwise().squaredNorm().mean());
    CHECK(sol.residual <= r + 1e-12);
  }
}

TEST_CASE("fits are bitwise repeatable") {
  const Matrix a = gaussian(60, 8, 11);
  const Matrix b = gaussian(60, 8, 12);
  auto x = procrustes(pairs_of(a, b));
  auto y = procrustes(pairs_of(a, b));
  CHECK(max_abs(x.w - y.w) == 0.0);
}

TEST_CASE("degenerate input is flagged") {
  try {
    procrustes(pairs_of(gaussian(1, 3, 1), gaussian(1, 3, 2)));
    FAIL("no throw");
  } catch (const Error& e) {
    CHECK(e.code() == ErrorCode::kTooFewPairs);
  }
  auto single = procrustes_fit(gaussian(1, 3, 1), gaussian(1, 3, 2));
  CHECK(single.rank_deficient);
  CHECK(orthogonality_defect(single.w) <= 1e-8);

  Matrix collinear = gaussian(5, 1, 3) * gaussian(1, 4, 4);
  auto sol = procrustes(pairs_of(collinear, collinear));
  CHECK(sol.rank_deficient);
  CHECK(sol.min_singular_value < kRankDeficiencyThreshold);

  try {
    procrustes(pairs_of(gaussian(4, 3, 1), gaussian(5, 3, 2)));
    FAIL("no throw");
  } catch (const Error& e) {
    CHECK(e.code() == ErrorCode::kLengthMismatch);
  }
}

TEST_CASE("smoothing examples") {
  const Matrix w = testutil::random_orthogonal(5, 1);
  const Matrix v = testutil::random_orthogonal(5, 2);
  CHECK(max_abs(smooth_update(w, w, 0.3) - w) <= 1e-15);
  CHECK(max_abs(smooth_update(w, v, 1.0) - v) == 0.0);
  try {
    smooth_update(w, v, 0.0);
    FAIL("no throw");
  } catch (const Error& e) {
    CHECK(e.code() == ErrorCode::kInvalidConfig);
  }
  CHECK(max_abs(smooth_update(w, v, 0.25) - (0.75 * w + 0.25 * v)) <= 1e-15);
}

TEST_CASE("smoothing orthogonal inputs keeps the spectral norm at most one") {
  Matrix w = Matrix::Identity(8, 8);
  for (std::uint64_t step = 0; step < 50; ++step) {
    const double alpha = 0.1 + 0.8 * static_cast<double>(step % 7) / 6.0;
    w = smooth_update(w, testutil::random_orthogonal(8, step + 400), alpha);
    CHECK(spectral_norm(w) <= 1.0 + 1e-8);
  }
}

TEST_CASE("spectral norm and defect of simple matrices") {
  Matrix m = Matrix::Zero(3, 3);
  m.diagonal() << 3, 1, 0.5;
  CHECK(spectral_norm(m) == doctest::Approx(3.0));
  CHECK(orthogonality_defect(m) == doctest::Approx(8.0));
  CHECK(orthogonality_defect(Matrix::Identity(4, 4)) == 0.0);
}
