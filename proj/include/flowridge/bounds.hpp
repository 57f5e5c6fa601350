#pragma once

#include <map>
#include <string>

#include "flowridge/risk.hpp"

namespace flowridge::bounds {

// Certified constants of the relative-risk theory.  The first two are the
// suprema of scalar maps, obtained by numerical maximization and rounded up;
// the last two are derived from them.
inline constexpr double kShrinkConstant = 1.2985;    // sup (1-e^{-x})(1+x)/x
inline constexpr double kSqrtConstant = 0.4634;      // sup (1-(1+x)e^{-x})/sqrt(x)
inline constexpr double kPathwiseConstant = 1.6862;  // kShrinkConstant^2, rounded
inline constexpr double kOptimalConstant = 1.2147;   // 1 + kSqrtConstant^2, rounded
inline constexpr double kCertSlack = 1e-9;

enum class BoundName { pathwise_1_6862, optimal_1_2147, scalar_1_2985, scalar_C };

inline const char* to_string(BoundName name) {
  switch (name) {
    case BoundName::pathwise_1_6862: return "pathwise-1.6862";
    case BoundName::optimal_1_2147: return "optimal-1.2147";
    case BoundName::scalar_1_2985: return "scalar-1.2985";
    default: return "scalar-C";
  }
}

/// Outcome of checking one bound over a family of points: the largest
/// observed ratio, where it occurred, and whether the bound held.
struct BoundCertificate {
  BoundName name = BoundName::pathwise_1_6862;
  double constant = 0.0;
  double max_observed_ratio = 0.0;
  double witness = 0.0;  // tuning value or scalar argument at the max
  bool holds = false;
};

namespace detail {

template <class F>
double maximize_scan_golden(F&& f, double lo, double hi, int scan_points, double tol) {
  double best_x = lo, best = f(lo);
  const double llo = std::log(lo), lhi = std::log(hi);
  for (int k = 0; k <= scan_points; ++k) {
    const double x = std::exp(llo + (lhi - llo) * k / static_cast<double>(scan_points));
    const double v = f(x);
    if (v > best) { best = v; best_x = x; }
  }
  const double a = std::max(lo, best_x * 0.5), b = std::min(hi, best_x * 2.0);
  const double x = golden_section_minimize([&](double u) { return -f(u); }, a, b, tol);
  return std::max(best, f(x));
}

}  // namespace detail

/// Recomputes the theory constants by deterministic numerical maximization
/// over x in (0, 100] (coarse log scan plus golden-section refinement).
inline std::map<std::string, double> recompute_constants() {
  auto shrink_objective = [](double x) { return -std::expm1(-x) * (1.0 + x) / x; };
  auto sqrt_objective = [](double x) { return (1.0 - (1.0 + x) * std::exp(-x)) / std::sqrt(x); };
  const double c1 = detail::maximize_scan_golden(shrink_objective, 1e-6, 100.0, 4096, 1e-8);
  const double C = detail::maximize_scan_golden(sqrt_objective, 1e-6, 100.0, 4096, 1e-8);
  return {
      {"c1", c1},
      {"C", C},
      {"c1_squared", c1 * c1},
      {"one_plus_C_squared", 1.0 + C * C},
  };
}

enum class ScalarInequality { exp_resolvent, shrink_1_2985, sum_1_2147 };

/// Signed margin RHS - LHS of one of the scalar inequalities behind the
/// relative-risk bounds; nonnegative for all x >= 0.
inline double scalar_inequality_margin(double x, ScalarInequality which) {
  if (!(x >= 0.0)) throw std::invalid_argument("scalar_inequality_margin: x must be >= 0");
  switch (which) {
    case ScalarInequality::exp_resolvent:
      return 1.0 / (1.0 + x) - std::exp(-x);
    case ScalarInequality::shrink_1_2985:
      return kShrinkConstant * x / (1.0 + x) - (-std::expm1(-x));
    default: {
      const double g = -std::expm1(-x);
      const double lhs = std::exp(-2.0 * x) + (x > 0.0 ? g * g / x : 0.0);
      return kOptimalConstant / (1.0 + x) - lhs;
    }
  }
}

/// Pathwise certificate from two already-evaluated curves: for each flow time
/// t the ridge row with tuning lambda = 1/t is located (the grids must pair to
/// relative accuracy 1e-9) and the ratio of totals is certified against
/// 1.6862.  Degenerate (zero) ridge risk is rejected.
inline BoundCertificate certificate_from_curves(const RiskCurve& flow_curve,
                                                const RiskCurve& ridge_curve) {
  if (flow_curve.estimator != Estimator::flow || ridge_curve.estimator != Estimator::ridge)
    throw std::invalid_argument("certificate_from_curves: need one flow and one ridge curve");
  if (flow_curve.flavor != ridge_curve.flavor)
    throw std::invalid_argument("certificate_from_curves: curve flavors do not match");
  if (flow_curve.size() != ridge_curve.size() || flow_curve.points.empty())
    throw std::invalid_argument("certificate_from_curves: curves must share a nonempty grid");
  const std::size_t count = flow_curve.size();
  BoundCertificate cert;
  cert.name = BoundName::pathwise_1_6862;
  cert.constant = kPathwiseConstant;
  for (std::size_t k = 0; k < count; ++k) {
    const double t = flow_curve.points[k].tuning.value;
    const double lambda = ridge_curve.points[count - 1 - k].tuning.value;
    if (std::abs(t * lambda - 1.0) > 1e-9)
      throw std::invalid_argument(
          "certificate_from_curves: grids are not inverse-symmetric (lambda != 1/t)");
    const double denom = ridge_curve.points[count - 1 - k].total;
    if (!(denom > 0.0))
      throw std::domain_error("certificate_from_curves: degenerate zero ridge risk");
    const double ratio = flow_curve.points[k].total / denom;
    if (ratio > cert.max_observed_ratio) {
      cert.max_observed_ratio = ratio;
      cert.witness = t;
    }
  }
  cert.holds = cert.max_observed_ratio <= cert.constant + kCertSlack;
  return cert;
}

/// Pathwise relative-risk certificate: flow at t versus ridge at 1/t over the
/// given grid of flow times.  With a fixed beta0 the claim covers estimation
/// and in-sample risk only; out-of-sample uses the Bayes form (the fixed-beta0
/// out-of-sample version is an open question and is rejected here).
inline BoundCertificate pathwise_ratio_check(const SpectralData& sd, const PriorModel& prior,
                                             const RiskFlavor& flavor,
                                             std::span<const double> grid,
                                             const Eigen::VectorXd* beta0 = nullptr) {
  if (grid.empty()) throw std::invalid_argument("pathwise_ratio_check: empty grid");
  if (beta0 && flavor.kind == RiskFlavor::Kind::out_of_sample)
    throw std::invalid_argument(
        "pathwise_ratio_check: the fixed-beta0 out-of-sample bound is not established; "
        "use the Bayes form");

  if (!beta0) {
    // Bayes path: evaluate both curves on the shared grid and pair by index,
    // identically to the CSV round-trip route.
    const RiskCurve fc = risk_curve(sd, prior, Estimator::flow, grid, flavor);
    const RiskCurve rc = risk_curve(sd, prior, Estimator::ridge, grid, flavor);
    return certificate_from_curves(fc, rc);
  }

  BoundCertificate cert;
  cert.name = BoundName::pathwise_1_6862;
  cert.constant = kPathwiseConstant;
  const std::size_t count = grid.size();
  for (std::size_t k = 0; k < count; ++k) {
    const double t = grid[k];
    if (!(t > 0.0)) throw std::invalid_argument("pathwise_ratio_check: flow times must be > 0");
    const double lambda = 1.0 / t;
    const double num =
        risk_fixed(sd, *beta0, prior, Estimator::flow, TuningValue::flow(t), flavor).total;
    const double denom =
        risk_fixed(sd, *beta0, prior, Estimator::ridge, TuningValue::ridge(lambda), flavor).total;
    if (!(denom > 0.0))
      throw std::domain_error("pathwise_ratio_check: degenerate zero ridge risk");
    const double ratio = num / denom;
    if (ratio > cert.max_observed_ratio) {
      cert.max_observed_ratio = ratio;
      cert.witness = t;
    }
  }
  cert.holds = cert.max_observed_ratio <= cert.constant + kCertSlack;
  return cert;
}

/// Optimal-tuning certificate: Bayes risk of flow at the numerically optimal
/// t against ridge at lambda* = 1/alpha; the ratio must lie in
/// [1 - 1e-9, 1.2147 + 1e-9].
inline BoundCertificate optimal_ratio_check(const SpectralData& sd, const PriorModel& prior,
                                            const RiskFlavor& flavor) {
  const TuningValue t_star = flow_optimal_t(sd, prior, flavor);
  const TuningValue lambda_star = ridge_optimal_lambda(prior);
  const double num = risk_bayes(sd, prior, Estimator::flow, t_star, flavor).total;
  const double denom = risk_bayes(sd, prior, Estimator::ridge, lambda_star, flavor).total;
  BoundCertificate cert;
  cert.name = BoundName::optimal_1_2147;
  cert.constant = kOptimalConstant;
  cert.max_observed_ratio = num / denom;
  cert.witness = t_star.value;
  cert.holds = cert.max_observed_ratio <= cert.constant + kCertSlack &&
               cert.max_observed_ratio >= 1.0 - kCertSlack;
  return cert;
}

/// Eigenvalue-level check of the three matrix inequalities (the Loewner
/// orderings behind the pathwise and optimal bounds) on X = t * Sigma_hat.
/// Simultaneous diagonalizability reduces each to scalar inequalities at
/// x_i = t s_i.
struct MatrixInequalityReport {
  bool holds = false;
  double max_violation = 0.0;  // largest eigenvalue of LHS - RHS over the three inequalities
  double witness_x = 0.0;
};

inline MatrixInequalityReport matrix_inequality_check(const SpectralData& sd, double t) {
  if (!(t >= 0.0)) throw std::invalid_argument("matrix_inequality_check: t must be >= 0");
  MatrixInequalityReport report;
  report.max_violation = -std::numeric_limits<double>::infinity();
  for (Eigen::Index i = 0; i < sd.p; ++i) {
    const double x = t * sd.eigenvalues(i);
    const double e = std::exp(-x);
    const double g = -std::expm1(-x);
    const double var = x > 0.0 ? g * g / x : 0.0;
    // Lemma-style scalar reductions: exp(-2x) <= (1+x)^{-2},
    // (1-e^{-x})^2/x <= 1.6862 x (1+x)^{-2},
    // exp(-2x) + (1-e^{-x})^2/x <= 1.2147 (1+x)^{-1}.
    const double viol[3] = {
        e * e - 1.0 / ((1.0 + x) * (1.0 + x)),
        var - kPathwiseConstant * x / ((1.0 + x) * (1.0 + x)),
        e * e + var - kOptimalConstant / (1.0 + x),
    };
    for (double v : viol) {
      if (v > report.max_violation) {
        report.max_violation = v;
        report.witness_x = x;
      }
    }
  }
  report.holds = report.max_violation <= 1e-10;
  return report;
}

/// Scalar-map certificates for the two numerically maximized constants,
/// evaluated over a fixed deterministic grid.
inline BoundCertificate scalar_constant_check(BoundName which, int grid_points = 1000000,
                                              double lo = 1e-8, double hi = 1e4) {
  if (which != BoundName::scalar_1_2985 && which != BoundName::scalar_C)
    throw std::invalid_argument("scalar_constant_check: expects a scalar bound name");
  BoundCertificate cert;
  cert.name = which;
  cert.constant = which == BoundName::scalar_1_2985 ? kShrinkConstant : kSqrtConstant;
  const double llo = std::log(lo), lhi = std::log(hi);
  for (int k = 0; k <= grid_points; ++k) {
    const double x = std::exp(llo + (lhi - llo) * k / static_cast<double>(grid_points));
    const double v = which == BoundName::scalar_1_2985
                         ? -std::expm1(-x) * (1.0 + x) / x
                         : (1.0 - (1.0 + x) * std::exp(-x)) / std::sqrt(x);
    if (v > cert.max_observed_ratio) {
      cert.max_observed_ratio = v;
      cert.witness = x;
    }
  }
  cert.holds = cert.max_observed_ratio <= cert.constant + kCertSlack;
  return cert;
}

}  // namespace flowridge::bounds
