#pragma once

#include <optional>
#include <span>
#include <string>
#include <vector>

#include "flowridge/estimators.hpp"
#include "flowridge/numeric.hpp"
#include "flowridge/spectral.hpp"

namespace flowridge {

/// Second-moment model: noise variance sigma^2, signal strength
/// r^2 = E||beta_0||^2 under the spherical prior, and the derived
/// signal-to-noise ratio alpha = r^2 n / (sigma^2 p).
struct PriorModel {
  double sigma2;
  double r2;
  double alpha;

  static PriorModel make(double sigma2, double r2, Eigen::Index n, Eigen::Index p) {
    if (!(sigma2 > 0.0) || !(r2 > 0.0))
      throw std::invalid_argument("PriorModel: sigma2 and r2 must be > 0");
    return {sigma2, r2, r2 * static_cast<double>(n) / (sigma2 * static_cast<double>(p))};
  }
};

/// Which loss the risk is measured in.  Out-of-sample risk needs the
/// population feature covariance.
struct RiskFlavor {
  enum class Kind { estimation, in_sample, out_of_sample };
  Kind kind = Kind::estimation;
  std::optional<Eigen::MatrixXd> population_cov;

  static RiskFlavor estimation() { return {Kind::estimation, std::nullopt}; }
  static RiskFlavor in_sample() { return {Kind::in_sample, std::nullopt}; }
  static RiskFlavor out_of_sample(Eigen::MatrixXd sigma) {
    if (sigma.rows() != sigma.cols())
      throw std::invalid_argument("RiskFlavor: population covariance must be square");
    if ((sigma - sigma.transpose()).cwiseAbs().maxCoeff() > 1e-10)
      throw std::invalid_argument("RiskFlavor: population covariance must be symmetric");
    return {Kind::out_of_sample, std::move(sigma)};
  }
};

inline const char* to_string(Estimator e) { return e == Estimator::flow ? "flow" : "ridge"; }

inline const char* to_string(RiskFlavor::Kind k) {
  switch (k) {
    case RiskFlavor::Kind::estimation: return "estimation";
    case RiskFlavor::Kind::in_sample: return "in-sample";
    default: return "out-of-sample";
  }
}

/// One point on a risk curve.
struct RiskPoint {
  TuningValue tuning;
  double bias_sq = 0.0;
  double variance = 0.0;
  double total = 0.0;
};

struct RiskCurve {
  Estimator estimator = Estimator::flow;
  RiskFlavor::Kind flavor = RiskFlavor::Kind::estimation;
  std::string calibration = "native";
  bool is_limit = false;  // true for Marchenko-Pastur limiting curves
  std::vector<RiskPoint> points;
  std::vector<double> l2_norm;  // sqrt(E||beta_hat||^2), parallel to points

  std::size_t size() const { return points.size(); }
};

namespace detail {

inline void require_kind(Estimator est, const TuningValue& tuning) {
  const bool ok = (est == Estimator::flow && tuning.kind == TuningValue::Kind::flow_time) ||
                  (est == Estimator::ridge && tuning.kind == TuningValue::Kind::ridge_lambda);
  if (!ok) throw std::invalid_argument("risk: tuning kind does not match estimator");
  if (est == Estimator::ridge && !(tuning.value >= 0.0))
    throw std::invalid_argument("risk: lambda must be >= 0");
  if (est == Estimator::flow && !(tuning.value >= 0.0))
    throw std::invalid_argument("risk: t must be >= 0");
}

inline void require_ridge_zero_ok(const SpectralData& sd, Estimator est, const TuningValue& tuning) {
  if (est == Estimator::ridge && tuning.value == 0.0 && sd.rank_deficient)
    throw std::domain_error("risk: ridge at lambda = 0 is undefined for rank-deficient designs");
}

/// diag(V^T Sigma V): the weight each eigendirection receives in the
/// out-of-sample trace forms.
inline Eigen::VectorXd out_of_sample_weights(const SpectralData& sd, const Eigen::MatrixXd& sigma) {
  if (sigma.rows() != sd.p)
    throw std::invalid_argument("risk: population covariance has wrong dimension");
  return (sd.right_vectors.transpose() * sigma * sd.right_vectors).diagonal();
}

/// Per-flavor weight of the i-th estimation-risk summand: 1 for estimation,
/// s_i for in-sample, v_i^T Sigma v_i for out-of-sample.
inline Eigen::VectorXd flavor_weights(const SpectralData& sd, const RiskFlavor& flavor) {
  switch (flavor.kind) {
    case RiskFlavor::Kind::estimation:
      return Eigen::VectorXd::Ones(sd.p);
    case RiskFlavor::Kind::in_sample:
      return sd.eigenvalues;
    default:
      if (!flavor.population_cov)
        throw std::invalid_argument("risk: out-of-sample flavor requires a population covariance");
      return out_of_sample_weights(sd, *flavor.population_cov);
  }
}

}  // namespace detail

/// Per-eigenvalue bias and variance summands of a Bayes risk; risk_bayes sums
/// them.  Exposed so the termwise structure of the pathwise bounds can be
/// checked directly.
struct RiskTerms {
  Eigen::VectorXd bias;
  Eigen::VectorXd variance;
};

namespace detail {

inline RiskTerms risk_terms_weighted(const SpectralData& sd, const PriorModel& prior, Estimator est,
                                     double kappa, const Eigen::VectorXd& w) {
  const double scale = prior.sigma2 / static_cast<double>(sd.n);
  RiskTerms terms;
  terms.bias.resize(sd.p);
  terms.variance.resize(sd.p);
  for (Eigen::Index i = 0; i < sd.p; ++i) {
    const double s = sd.eigenvalues(i);
    terms.bias(i) = scale * prior.alpha * bias_factor(est, s, kappa) * w(i);
    terms.variance(i) = scale * variance_factor(est, s, kappa) * w(i);
  }
  return terms;
}

inline RiskPoint sum_terms(const RiskTerms& terms, const TuningValue& tuning) {
  RiskPoint pt;
  pt.tuning = tuning;
  pt.bias_sq = pairwise_sum({terms.bias.data(), static_cast<std::size_t>(terms.bias.size())});
  pt.variance =
      pairwise_sum({terms.variance.data(), static_cast<std::size_t>(terms.variance.size())});
  pt.total = pt.bias_sq + pt.variance;
  return pt;
}

}  // namespace detail

inline RiskTerms risk_terms_bayes(const SpectralData& sd, const PriorModel& prior, Estimator est,
                                  const TuningValue& tuning, const RiskFlavor& flavor) {
  detail::require_kind(est, tuning);
  detail::require_ridge_zero_ok(sd, est, tuning);
  return detail::risk_terms_weighted(sd, prior, est, tuning.value,
                                     detail::flavor_weights(sd, flavor));
}

/// Bayes risk under the spherical prior (estimation, in-sample, or
/// out-of-sample, per the flavor).
inline RiskPoint risk_bayes(const SpectralData& sd, const PriorModel& prior, Estimator est,
                            const TuningValue& tuning, const RiskFlavor& flavor) {
  return detail::sum_terms(risk_terms_bayes(sd, prior, est, tuning, flavor), tuning);
}

/// Risk at a fixed coefficient vector beta_0 (the prior supplies sigma^2 only).
inline RiskPoint risk_fixed(const SpectralData& sd, const Eigen::VectorXd& beta0,
                            const PriorModel& prior, Estimator est, const TuningValue& tuning,
                            const RiskFlavor& flavor) {
  detail::require_kind(est, tuning);
  detail::require_ridge_zero_ok(sd, est, tuning);
  if (beta0.size() != sd.p) throw std::invalid_argument("risk_fixed: beta0 has wrong length");

  const double scale = prior.sigma2 / static_cast<double>(sd.n);
  RiskPoint pt;
  pt.tuning = tuning;

  // Rotated coordinates of beta0: bias terms involve |v_i^T beta0|^2.
  const Eigen::VectorXd b = sd.right_vectors.transpose() * beta0;

  if (flavor.kind == RiskFlavor::Kind::out_of_sample) {
    if (!flavor.population_cov)
      throw std::invalid_argument("risk_fixed: out-of-sample flavor requires a population covariance");
    const Eigen::MatrixXd& sigma = *flavor.population_cov;
    if (sigma.rows() != sd.p)
      throw std::invalid_argument("risk_fixed: population covariance has wrong dimension");
    // Bias |Sigma^{1/2} R(kappa) beta0|^2 keeps its cross terms; only the
    // variance reduces to a weighted eigenvalue sum.
    Eigen::VectorXd rb(sd.p);
    for (Eigen::Index i = 0; i < sd.p; ++i) {
      const double s = sd.eigenvalues(i);
      const double resid = est == Estimator::flow ? detail::flow_decay(s, tuning.value)
                                                  : detail::ridge_resid(s, tuning.value);
      rb(i) = resid * b(i);
    }
    const Eigen::VectorXd q = sd.right_vectors * rb;
    pt.bias_sq = q.dot(sigma * q);
    const Eigen::VectorXd w = detail::out_of_sample_weights(sd, sigma);
    double var = 0.0;
    for (Eigen::Index i = 0; i < sd.p; ++i)
      var += detail::variance_factor(est, sd.eigenvalues(i), tuning.value) * w(i);
    pt.variance = scale * var;
  } else {
    const bool in_sample = flavor.kind == RiskFlavor::Kind::in_sample;
    double bias = 0.0, var = 0.0;
    for (Eigen::Index i = 0; i < sd.p; ++i) {
      const double s = sd.eigenvalues(i);
      const double w = in_sample ? s : 1.0;
      bias += b(i) * b(i) * detail::bias_factor(est, s, tuning.value) * w;
      var += detail::variance_factor(est, s, tuning.value) * w;
    }
    pt.bias_sq = bias;
    pt.variance = scale * var;
  }
  pt.total = pt.bias_sq + pt.variance;
  return pt;
}

/// Expected squared l2 norm of the estimator under the data model and prior.
inline double expected_l2_norm_sq(const SpectralData& sd, const PriorModel& prior, Estimator est,
                                  const TuningValue& tuning) {
  detail::require_kind(est, tuning);
  double sum = 0.0;
  for (Eigen::Index i = 0; i < sd.p; ++i) {
    const double s = sd.eigenvalues(i);
    if (s == 0.0) continue;
    if (est == Estimator::flow) {
      const double g = detail::flow_shrink(s, tuning.value);
      sum += g * g * (prior.alpha + 1.0 / s);
    } else {
      const double g = detail::ridge_shrink(s, tuning.value);
      sum += g * g * (prior.alpha + 1.0 / s);
    }
  }
  return sum / static_cast<double>(sd.n);
}

/// The exact Bayes-optimal ridge tuning lambda* = 1/alpha.
inline TuningValue ridge_optimal_lambda(const PriorModel& prior) {
  if (!(prior.alpha > 0.0)) throw std::invalid_argument("ridge_optimal_lambda: alpha must be > 0");
  return TuningValue::ridge(1.0 / prior.alpha);
}

/// Numerically optimal flow time for the Bayes risk of the given flavor:
/// a 200-point log-grid scan over [2^-10, 2^10] refined by golden section.
inline TuningValue flow_optimal_t(const SpectralData& sd, const PriorModel& prior,
                                  const RiskFlavor& flavor) {
  if (!(prior.alpha > 0.0)) throw std::invalid_argument("flow_optimal_t: alpha must be > 0");
  const Eigen::VectorXd w = detail::flavor_weights(sd, flavor);
  const double scale = prior.sigma2 / static_cast<double>(sd.n);
  auto objective = [&](double t) {
    double sum = 0.0;
    for (Eigen::Index i = 0; i < sd.p; ++i) {
      const double s = sd.eigenvalues(i);
      sum += (prior.alpha * detail::bias_factor(Estimator::flow, s, t) +
              detail::variance_factor(Estimator::flow, s, t)) *
             w(i);
    }
    return scale * sum;
  };
  const std::vector<double> grid = default_tuning_grid();
  return TuningValue::flow(grid_then_golden_minimize(objective, grid, 1e-6));
}

/// Bayes risk curve over a tuning grid (order preserved), with the expected
/// l2 norm recorded alongside each point.
inline RiskCurve risk_curve(const SpectralData& sd, const PriorModel& prior, Estimator est,
                            std::span<const double> grid, const RiskFlavor& flavor) {
  if (grid.empty()) throw std::invalid_argument("risk_curve: empty grid");
  const Eigen::VectorXd w = detail::flavor_weights(sd, flavor);
  RiskCurve curve;
  curve.estimator = est;
  curve.flavor = flavor.kind;
  curve.points.reserve(grid.size());
  curve.l2_norm.reserve(grid.size());
  for (double kappa : grid) {
    const TuningValue tuning =
        est == Estimator::flow ? TuningValue::flow(kappa) : TuningValue::ridge(kappa);
    detail::require_ridge_zero_ok(sd, est, tuning);
    curve.points.push_back(
        detail::sum_terms(detail::risk_terms_weighted(sd, prior, est, kappa, w), tuning));
    curve.l2_norm.push_back(std::sqrt(expected_l2_norm_sq(sd, prior, est, tuning)));
  }
  return curve;
}

}  // namespace flowridge
