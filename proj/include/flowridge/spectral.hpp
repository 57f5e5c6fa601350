#pragma once

#include <Eigen/Dense>
#include <cmath>
#include <sstream>
#include <stdexcept>

namespace flowridge {

/// An n x p design matrix; rows are observations.  Entries must be finite.
class DesignMatrix {
 public:
  explicit DesignMatrix(Eigen::MatrixXd entries) : entries_(std::move(entries)) {
    if (entries_.rows() < 1 || entries_.cols() < 1)
      throw std::invalid_argument("DesignMatrix: need at least one row and one column");
    if (!entries_.allFinite())
      throw std::invalid_argument("DesignMatrix: entries must be finite");
  }

  const Eigen::MatrixXd& entries() const { return entries_; }
  Eigen::Index n() const { return entries_.rows(); }
  Eigen::Index p() const { return entries_.cols(); }

 private:
  Eigen::MatrixXd entries_;
};

/// Spectral decomposition of the sample covariance X^T X / n, together with
/// the left singular subspace of X.  This is the sufficient statistic for all
/// estimator paths and risk formulas.
///
/// Writing X = sqrt(n) U S^{1/2} V^T, we store:
///   eigenvalues   -- the p eigenvalues s_i of X^T X / n, sorted descending.
///                    The first min(n, p) come from the decomposition; when
///                    p > n the remaining p - n are exact zeros.  Entries at
///                    or below zero_threshold are clamped to exactly 0.
///   right_vectors -- V, p x p orthonormal.
///   left_vectors  -- U, n x min(n, p) with orthonormal columns.
struct SpectralData {
  Eigen::VectorXd eigenvalues;
  Eigen::MatrixXd right_vectors;
  Eigen::MatrixXd left_vectors;
  Eigen::Index n = 0;
  Eigen::Index p = 0;
  Eigen::Index rank = 0;
  bool rank_deficient = false;
  double zero_threshold = 0.0;

  double s_max() const { return eigenvalues.size() ? eigenvalues(0) : 0.0; }
};

/// Eigendecomposition of X^T X / n via the SVD of X.  Eigenvalues below
/// p * eps * s_max are treated as exactly zero and the data is flagged
/// rank-deficient.
inline SpectralData decompose(const DesignMatrix& X) {
  const Eigen::Index n = X.n(), p = X.p();
  Eigen::BDCSVD<Eigen::MatrixXd> svd(X.entries(), Eigen::ComputeThinU | Eigen::ComputeFullV);

  SpectralData sd;
  sd.n = n;
  sd.p = p;
  sd.right_vectors = svd.matrixV();
  sd.left_vectors = svd.matrixU();
  sd.eigenvalues = Eigen::VectorXd::Zero(p);
  const Eigen::Index m = std::min(n, p);
  for (Eigen::Index i = 0; i < m; ++i) {
    const double sv = svd.singularValues()(i);
    sd.eigenvalues(i) = sv * sv / static_cast<double>(n);
  }

  const double eps = std::numeric_limits<double>::epsilon();
  sd.zero_threshold = static_cast<double>(p) * eps * sd.eigenvalues(0);
  sd.rank = 0;
  for (Eigen::Index i = 0; i < p; ++i) {
    if (sd.eigenvalues(i) <= sd.zero_threshold)
      sd.eigenvalues(i) = 0.0;
    else
      ++sd.rank;
  }
  sd.rank_deficient = sd.rank < p;
  return sd;
}

/// V diag(f(s_i)) V^T for a scalar function f of the eigenvalues.
template <class F>
Eigen::MatrixXd apply_spectral(const SpectralData& sd, F&& f) {
  Eigen::VectorXd d(sd.p);
  for (Eigen::Index i = 0; i < sd.p; ++i) {
    d(i) = f(sd.eigenvalues(i));
    if (!std::isfinite(d(i))) {
      std::ostringstream msg;
      msg << "apply_spectral: f is not finite at eigenvalue s = " << sd.eigenvalues(i);
      throw std::domain_error(msg.str());
    }
  }
  return sd.right_vectors * d.asDiagonal() * sd.right_vectors.transpose();
}

/// exp(-t X^T X / n) for t >= 0.
inline Eigen::MatrixXd matrix_exp_neg(const SpectralData& sd, double t) {
  if (!(t >= 0.0) || !std::isfinite(t))
    throw std::invalid_argument("matrix_exp_neg: t must be finite and >= 0");
  return apply_spectral(sd, [t](double s) { return std::exp(-t * s); });
}

/// Moore-Penrose pseudoinverse of X^T X / n; zero eigenvalues map to zero.
inline Eigen::MatrixXd pseudoinverse(const SpectralData& sd) {
  return apply_spectral(sd, [](double s) { return s > 0.0 ? 1.0 / s : 0.0; });
}

}  // namespace flowridge
