#include <catch2/catch_amalgamated.hpp>

#include <random>

#include "flowridge/spectral.hpp"

using namespace flowridge;
using Eigen::MatrixXd;
using Eigen::VectorXd;

namespace {

MatrixXd random_matrix(Eigen::Index n, Eigen::Index p, std::uint64_t seed) {
  std::mt19937_64 rng(seed);
  std::normal_distribution<double> g;
  MatrixXd X(n, p);
  for (Eigen::Index j = 0; j < p; ++j)
    for (Eigen::Index i = 0; i < n; ++i) X(i, j) = g(rng);
  return X;
}

/// Truncated power-series oracle for exp(A), 20 terms.
MatrixXd exp_series(const MatrixXd& A, int terms = 20) {
  MatrixXd acc = MatrixXd::Identity(A.rows(), A.cols());
  MatrixXd term = MatrixXd::Identity(A.rows(), A.cols());
  for (int k = 1; k <= terms; ++k) {
    term = (term * A) / static_cast<double>(k);
    acc += term;
  }
  return acc;
}

}  // namespace

TEST_CASE("DesignMatrix validates input") {
  CHECK_THROWS_AS(DesignMatrix(MatrixXd(0, 3)), std::invalid_argument);
  MatrixXd bad = MatrixXd::Ones(2, 2);
  bad(0, 1) = std::numeric_limits<double>::quiet_NaN();
  CHECK_THROWS_AS(DesignMatrix(bad), std::invalid_argument);
}

TEST_CASE("decompose: identity design") {
  // X = sqrt(2) I_2 gives Sigma_hat = I
  const DesignMatrix X(std::sqrt(2.0) * MatrixXd::Identity(2, 2));
  const SpectralData sd = decompose(X);
  CHECK(sd.eigenvalues(0) == Catch::Approx(1.0).epsilon(1e-12));
  CHECK(sd.eigenvalues(1) == Catch::Approx(1.0).epsilon(1e-12));
  CHECK_FALSE(sd.rank_deficient);
  // V orthonormal; up to column signs it is the identity here
  CHECK((sd.right_vectors.transpose() * sd.right_vectors - MatrixXd::Identity(2, 2)).norm() < 1e-12);
  CHECK(sd.right_vectors.cwiseAbs().isApprox(MatrixXd::Identity(2, 2), 1e-10));
}

TEST_CASE("decompose: singular design sets the rank-deficient flag") {
  MatrixXd X(2, 2);
  X << 1, 0, 0, 0;
  const SpectralData sd = decompose(DesignMatrix(X));
  CHECK(sd.eigenvalues(0) == Catch::Approx(0.5).epsilon(1e-12));
  CHECK(sd.eigenvalues(1) == 0.0);
  CHECK(sd.rank == 1);
  CHECK(sd.rank_deficient);
}

TEST_CASE("decompose: reconstruction and orthonormality on a random 5x3 design") {
  const DesignMatrix X(random_matrix(5, 3, 17));
  const SpectralData sd = decompose(X);
  const MatrixXd cov = X.entries().transpose() * X.entries() / 5.0;
  const MatrixXd rebuilt =
      sd.right_vectors * sd.eigenvalues.asDiagonal() * sd.right_vectors.transpose();
  CHECK((rebuilt - cov).norm() / cov.norm() < 1e-10);
  CHECK((sd.right_vectors.transpose() * sd.right_vectors - MatrixXd::Identity(3, 3)).norm() <
        1e-10);
  CHECK((sd.left_vectors.transpose() * sd.left_vectors - MatrixXd::Identity(3, 3)).norm() < 1e-10);
  for (Eigen::Index i = 0; i < sd.p; ++i) REQUIRE(sd.eigenvalues(i) >= 0.0);
  // trace identity
  CHECK(sd.eigenvalues.sum() == Catch::Approx(cov.trace()).epsilon(1e-10));
}

TEST_CASE("decompose: wide design pads eigenvalues with exact zeros") {
  const DesignMatrix X(random_matrix(3, 6, 5));
  const SpectralData sd = decompose(X);
  REQUIRE(sd.eigenvalues.size() == 6);
  CHECK(sd.rank == 3);
  CHECK(sd.rank_deficient);
  for (Eigen::Index i = 3; i < 6; ++i) CHECK(sd.eigenvalues(i) == 0.0);
  CHECK((sd.right_vectors.transpose() * sd.right_vectors - MatrixXd::Identity(6, 6)).norm() <
        1e-10);
  const MatrixXd cov = X.entries().transpose() * X.entries() / 3.0;
  const MatrixXd rebuilt =
      sd.right_vectors * sd.eigenvalues.asDiagonal() * sd.right_vectors.transpose();
  CHECK((rebuilt - cov).norm() / cov.norm() < 1e-10);
}

TEST_CASE("apply_spectral: identity and constant functions") {
  const DesignMatrix X(random_matrix(4, 4, 23));
  const SpectralData sd = decompose(X);
  const MatrixXd cov = X.entries().transpose() * X.entries() / 4.0;
  CHECK((apply_spectral(sd, [](double s) { return s; }) - cov).norm() < 1e-10 * cov.norm());
  CHECK((apply_spectral(sd, [](double) { return 1.0; }) - MatrixXd::Identity(4, 4)).norm() < 1e-10);
}

TEST_CASE("apply_spectral rejects non-finite values with the eigenvalue named") {
  const DesignMatrix X(random_matrix(4, 4, 29));
  const SpectralData sd = decompose(X);
  CHECK_THROWS_AS(apply_spectral(sd, [](double) { return std::nan(""); }), std::domain_error);
}

TEST_CASE("matrix_exp_neg matches the power-series oracle") {
  const DesignMatrix X(random_matrix(2, 2, 31));
  const SpectralData sd = decompose(X);
  const MatrixXd cov = X.entries().transpose() * X.entries() / 2.0;
  for (double t : {0.3, 0.7}) {
    const MatrixXd via_spec = matrix_exp_neg(sd, t);
    const MatrixXd via_series = exp_series(-t * cov);
    CHECK((via_spec - via_series).norm() < 1e-10);
  }
  CHECK((matrix_exp_neg(sd, 0.0) - MatrixXd::Identity(2, 2)).norm() < 1e-12);
  CHECK_THROWS_AS(matrix_exp_neg(sd, -1.0), std::invalid_argument);
}

TEST_CASE("matrix_exp_neg on the identity covariance is a scalar multiple") {
  const DesignMatrix X(std::sqrt(2.0) * MatrixXd::Identity(2, 2));
  const SpectralData sd = decompose(X);
  const MatrixXd e = matrix_exp_neg(sd, 1.0);
  CHECK((e - std::exp(-1.0) * MatrixXd::Identity(2, 2)).norm() < 1e-12);
}

TEST_CASE("pseudoinverse: explicit diagonal cases and Penrose identities") {
  {
    const DesignMatrix X(std::sqrt(2.0) * MatrixXd::Identity(2, 2));
    const SpectralData sd = decompose(X);
    CHECK((pseudoinverse(sd) - MatrixXd::Identity(2, 2)).norm() < 1e-12);
  }
  {
    MatrixXd X(2, 2);
    X << 2, 0, 0, 0;
    const SpectralData sd = decompose(DesignMatrix(X));  // Sigma_hat = diag(2, 0)
    MatrixXd expected(2, 2);
    expected << 0.5, 0, 0, 0;
    CHECK((pseudoinverse(sd) - expected).norm() < 1e-12);
  }
  {
    // random rank-2 3x3 covariance
    std::mt19937_64 rng(41);
    std::normal_distribution<double> g;
    MatrixXd X(3, 3);
    VectorXd r1(3), r2(3), c1(3), c2(3);
    for (int i = 0; i < 3; ++i) { r1(i) = g(rng); r2(i) = g(rng); c1(i) = g(rng); c2(i) = g(rng); }
    X = r1 * c1.transpose() + r2 * c2.transpose();
    const SpectralData sd = decompose(DesignMatrix(X));
    REQUIRE(sd.rank == 2);
    const MatrixXd cov = X.transpose() * X / 3.0;
    const MatrixXd pinv = pseudoinverse(sd);
    CHECK((cov * pinv * cov - cov).norm() < 1e-10 * cov.norm());
    CHECK((pinv * cov * pinv - pinv).norm() < 1e-10 * pinv.norm());
  }
}

TEST_CASE("spectral function algebra on random designs") {
  const DesignMatrix X(random_matrix(6, 4, 57));
  const SpectralData sd = decompose(X);
  auto f = [](double s) { return std::exp(-0.4 * s); };
  auto g = [](double s) { return 1.0 / (1.0 + s); };
  const MatrixXd prod = apply_spectral(sd, f) * apply_spectral(sd, g);
  const MatrixXd joint = apply_spectral(sd, [&](double s) { return f(s) * g(s); });
  CHECK((prod - joint).norm() < 1e-10);
  // semigroup property of the matrix exponential
  const MatrixXd split = matrix_exp_neg(sd, 0.9) * matrix_exp_neg(sd, 0.6);
  CHECK((split - matrix_exp_neg(sd, 1.5)).norm() < 1e-10);
}
