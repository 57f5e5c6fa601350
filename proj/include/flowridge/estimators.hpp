#pragma once

#include <cmath>
#include <limits>
#include <stdexcept>
#include <vector>

#include "flowridge/spectral.hpp"

namespace flowridge {

enum class Estimator { flow, ridge };

/// A point on one of the estimator paths.  flow_time may be +infinity, which
/// denotes the min-norm least squares limit.
struct TuningValue {
  enum class Kind { ridge_lambda, flow_time, descent_steps };
  Kind kind;
  double value;

  static TuningValue ridge(double lambda) {
    if (!(lambda >= 0.0)) throw std::invalid_argument("TuningValue: lambda must be >= 0");
    return {Kind::ridge_lambda, lambda};
  }
  static TuningValue flow(double t) {
    if (!(t >= 0.0)) throw std::invalid_argument("TuningValue: t must be >= 0");
    return {Kind::flow_time, t};
  }
  static TuningValue steps(double k) {
    if (!(k >= 0.0) || k != std::floor(k))
      throw std::invalid_argument("TuningValue: step count must be a nonnegative integer");
    return {Kind::descent_steps, k};
  }
};

namespace detail {

/// exp(-t s), with the t = +inf limit taken pointwise (1 at s = 0).
inline double flow_decay(double s, double t) {
  if (std::isinf(t)) return s > 0.0 ? 0.0 : 1.0;
  return std::exp(-t * s);
}

/// 1 - exp(-t s), evaluated stably near 0.
inline double flow_shrink(double s, double t) {
  if (std::isinf(t)) return s > 0.0 ? 1.0 : 0.0;
  return -std::expm1(-t * s);
}

/// s / (s + lambda); 0 when s = lambda = 0, 0 when lambda = +inf.
inline double ridge_shrink(double s, double lambda) {
  if (std::isinf(lambda)) return 0.0;
  if (s == 0.0) return 0.0;
  return s / (s + lambda);
}

/// lambda / (s + lambda) = 1 - ridge_shrink; 1 at lambda = +inf.
inline double ridge_resid(double s, double lambda) {
  if (std::isinf(lambda)) return 1.0;
  if (lambda == 0.0) return s > 0.0 ? 0.0 : 1.0;
  return lambda / (s + lambda);
}

/// Squared residual shrinkage factor (the bias kernel) for one eigenvalue.
inline double bias_factor(Estimator est, double s, double kappa) {
  const double r = est == Estimator::flow ? flow_decay(s, kappa) : ridge_resid(s, kappa);
  return r * r;
}

/// Variance kernel for one eigenvalue, with the (1-e^{-x})^2/x = 0 convention
/// at x = 0; the ridge kernel s/(s+lambda)^2 is naturally 0 at s = 0.
inline double variance_factor(Estimator est, double s, double kappa) {
  if (s == 0.0) return 0.0;
  if (est == Estimator::flow) {
    const double g = flow_shrink(s, kappa);
    return g * g / s;
  }
  if (std::isinf(kappa)) return 0.0;
  const double d = s + kappa;
  return s / (d * d);
}

}  // namespace detail

/// Spectral shrinkage factor g(s, kappa) applied by each estimator to the
/// data component along an eigendirection with eigenvalue s.
inline double shrinkage_map(Estimator kind, double s, double kappa) {
  if (!(s >= 0.0) || !(kappa >= 0.0))
    throw std::invalid_argument("shrinkage_map: need s >= 0 and kappa >= 0");
  return kind == Estimator::ridge ? detail::ridge_shrink(s, kappa) : detail::flow_shrink(s, kappa);
}

/// Ridge solution (X^T X + n lambda I)^{-1} X^T y, computed spectrally.
/// lambda = 0 is allowed only for full-rank designs.
inline Eigen::VectorXd ridge_solution(const SpectralData& sd, const Eigen::VectorXd& y,
                                      double lambda) {
  if (y.size() != sd.n) throw std::invalid_argument("ridge_solution: y has wrong length");
  if (!(lambda >= 0.0)) throw std::invalid_argument("ridge_solution: lambda must be >= 0");
  if (lambda == 0.0 && sd.rank_deficient)
    throw std::domain_error("ridge_solution: lambda = 0 requires a full-rank design");
  const Eigen::Index m = sd.left_vectors.cols();
  Eigen::VectorXd w = sd.left_vectors.transpose() * y;
  const double root_n = std::sqrt(static_cast<double>(sd.n));
  for (Eigen::Index i = 0; i < m; ++i) {
    const double s = sd.eigenvalues(i);
    w(i) *= s > 0.0 || lambda > 0.0 ? std::sqrt(s) / (root_n * (s + lambda)) : 0.0;
  }
  return sd.right_vectors.leftCols(m) * w;
}

/// Exact gradient flow solution (X^T X)^+ (I - exp(-t X^T X / n)) X^T y.
/// t = 0 gives 0; t = +inf gives the min-norm least squares solution.
inline Eigen::VectorXd gradient_flow_solution(const SpectralData& sd, const Eigen::VectorXd& y,
                                              double t) {
  if (y.size() != sd.n) throw std::invalid_argument("gradient_flow_solution: y has wrong length");
  if (!(t >= 0.0)) throw std::invalid_argument("gradient_flow_solution: t must be >= 0");
  const Eigen::Index m = sd.left_vectors.cols();
  Eigen::VectorXd w = sd.left_vectors.transpose() * y;
  const double root_n = std::sqrt(static_cast<double>(sd.n));
  for (Eigen::Index i = 0; i < m; ++i) {
    const double s = sd.eigenvalues(i);
    w(i) *= s > 0.0 ? detail::flow_shrink(s, t) / (root_n * std::sqrt(s)) : 0.0;
  }
  return sd.right_vectors.leftCols(m) * w;
}

/// Gradient descent iterates on the least squares objective, started at 0.
struct DescentPath {
  double step_size = 0.0;
  std::vector<Eigen::VectorXd> iterates;  // iterates[k] = beta^(k), k = 0..K

  const Eigen::VectorXd& final() const { return iterates.back(); }
};

inline DescentPath gradient_descent_path(const DesignMatrix& X, const Eigen::VectorXd& y,
                                         double step_size, Eigen::Index steps) {
  if (y.size() != X.n()) throw std::invalid_argument("gradient_descent_path: y has wrong length");
  if (!(step_size > 0.0)) throw std::invalid_argument("gradient_descent_path: step size must be > 0");
  if (steps < 1) throw std::invalid_argument("gradient_descent_path: need at least one step");
  DescentPath path;
  path.step_size = step_size;
  path.iterates.reserve(static_cast<std::size_t>(steps) + 1);
  path.iterates.emplace_back(Eigen::VectorXd::Zero(X.p()));
  const double scale = step_size / static_cast<double>(X.n());
  Eigen::VectorXd beta = path.iterates.front();
  Eigen::VectorXd resid = y;
  for (Eigen::Index k = 1; k <= steps; ++k) {
    beta += scale * (X.entries().transpose() * resid);
    resid = y - X.entries() * beta;
    path.iterates.push_back(beta);
  }
  return path;
}

/// Uniform bound on max_k |beta^(k) - beta_gf(k eps)| from the forward Euler
/// error analysis: (eps ||X^T y|| / 2n) (exp(K eps s_max) - 1).  Requires
/// eps < 1/s_max.
inline double discretization_bound(const SpectralData& sd, const Eigen::VectorXd& y,
                                   double step_size, Eigen::Index steps) {
  if (y.size() != sd.n) throw std::invalid_argument("discretization_bound: y has wrong length");
  if (!(step_size > 0.0) || !(step_size * sd.s_max() < 1.0))
    throw std::invalid_argument("discretization_bound: need 0 < eps < 1/s_max");
  // ||X^T y|| = sqrt(n) ||S^{1/2} U^T y||
  const Eigen::Index m = sd.left_vectors.cols();
  Eigen::VectorXd w = sd.left_vectors.transpose() * y;
  for (Eigen::Index i = 0; i < m; ++i) w(i) *= std::sqrt(sd.eigenvalues(i));
  const double xty_norm = std::sqrt(static_cast<double>(sd.n)) * w.norm();
  const double growth = std::expm1(static_cast<double>(steps) * step_size * sd.s_max());
  return step_size * xty_norm / (2.0 * static_cast<double>(sd.n)) * growth;
}

enum class RegularizerKind { descent, flow };

/// The implicit quadratic regularizer underlying gradient descent / flow:
/// Q_t = V S (exp(tS) - I)^{-1} V^T or Q_k = V S ((I - eps S)^{-k} - I)^{-1} V^T,
/// with zero eigenvalues mapping to zero.  Solving the penalized least squares
/// problem with Q reproduces the corresponding iterate.
inline Eigen::MatrixXd implicit_regularizer(const SpectralData& sd, RegularizerKind kind,
                                            double kappa, double step_size = 0.0) {
  if (kind == RegularizerKind::flow) {
    if (!(kappa > 0.0))
      throw std::invalid_argument("implicit_regularizer: t must be > 0 (regularizer is unbounded at 0)");
    // s (e^{ts} - 1)^{-1} written as s e^{-ts} / (1 - e^{-ts}) to avoid
    // overflow at large ts; expm1 keeps small ts accurate.
    return apply_spectral(sd, [kappa](double s) {
      if (s == 0.0) return 0.0;
      return s * std::exp(-kappa * s) / (-std::expm1(-kappa * s));
    });
  }
  if (!(kappa >= 1.0) || kappa != std::floor(kappa))
    throw std::invalid_argument("implicit_regularizer: k must be a positive integer");
  if (!(step_size > 0.0) || !(step_size * sd.s_max() < 1.0))
    throw std::invalid_argument("implicit_regularizer: need 0 < eps < 1/s_max");
  return apply_spectral(sd, [kappa, step_size](double s) {
    if (s == 0.0) return 0.0;
    const double w = -kappa * std::log1p(-step_size * s);  // (1-eps s)^{-k} = e^w
    return s * std::exp(-w) / (-std::expm1(-w));
  });
}

}  // namespace flowridge
