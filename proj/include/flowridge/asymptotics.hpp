#pragma once

#include <cmath>
#include <stdexcept>

#include "flowridge/estimators.hpp"
#include "flowridge/numeric.hpp"

namespace flowridge::mp {

/// Marchenko-Pastur law for aspect ratio gamma = lim p/n with identity
/// population covariance: continuous density on [a, b] with
/// a = (1 - sqrt(gamma))^2, b = (1 + sqrt(gamma))^2, plus a point mass
/// max(0, 1 - 1/gamma) at zero.
struct MPLaw {
  double gamma = 1.0;
  double a = 0.0;
  double b = 4.0;
  double point_mass_zero = 0.0;
};

inline MPLaw mp_law(double gamma) {
  if (!(gamma > 0.0) || !std::isfinite(gamma))
    throw std::invalid_argument("mp_law: gamma must be finite and > 0");
  MPLaw law;
  law.gamma = gamma;
  const double root = std::sqrt(gamma);
  law.a = (1.0 - root) * (1.0 - root);
  law.b = (1.0 + root) * (1.0 + root);
  law.point_mass_zero = std::max(0.0, 1.0 - 1.0 / gamma);
  return law;
}

/// Continuous density sqrt((b-s)(s-a)) / (2 pi gamma s) on (a, b), 0 outside.
/// The point mass at zero is reported separately, never folded in here.
inline double density(const MPLaw& law, double s) {
  if (!(s > law.a) || !(s < law.b) || s <= 0.0) return 0.0;
  return std::sqrt((law.b - s) * (s - law.a)) / (2.0 * M_PI * law.gamma * s);
}

/// Integral of h against the MP law: point_mass * h(0) plus the continuous
/// part under the substitution s = a + (b-a) sin^2(theta), which removes the
/// inverse-square-root edge singularities.  Composite Gauss-Legendre with
/// `nodes` points (128 panels x order 16 by default); 2048 nodes agree with a
/// 4096-node refinement to better than 1e-8 relative for the integrands used
/// here.
template <class H>
double integrate(const MPLaw& law, H&& h, int nodes = 2048) {
  static const GaussLegendreRule rule = gauss_legendre(16);
  const int panels = std::max(1, nodes / 16);
  const double width = (M_PI / 2.0) / panels;
  const double c = (law.b - law.a) * (law.b - law.a) / (4.0 * M_PI * law.gamma);
  double total = 0.0;
  for (int panel = 0; panel < panels; ++panel) {
    const double mid = (panel + 0.5) * width;
    const double half = 0.5 * width;
    double acc = 0.0;
    for (int q = 0; q < 16; ++q) {
      const double theta = mid + half * rule.nodes[q];
      const double st = std::sin(theta);
      const double s = law.a + (law.b - law.a) * st * st;
      const double s2t = std::sin(2.0 * theta);
      const double value = h(s) * c * s2t * s2t / s;
      if (!std::isfinite(value))
        throw std::domain_error("mp::integrate: integrand not finite on the support");
      acc += rule.weights[q] * value;
    }
    total += half * acc;
  }
  if (law.point_mass_zero > 0.0) {
    const double h0 = h(0.0);
    if (!std::isfinite(h0)) throw std::domain_error("mp::integrate: integrand not finite at 0");
    total += law.point_mass_zero * h0;
  }
  return total;
}

/// Limiting Bayes (estimation) risk functional, alpha0 = r^2 / (sigma^2 gamma):
///   flow:  sigma^2 gamma Int [alpha0 e^{-2ts} + (1-e^{-ts})^2/s] dF
///   ridge: sigma^2 gamma Int (alpha0 lambda^2 + s) / (s+lambda)^2 dF
/// with the x = 0 convention applied at the point mass.
inline double limiting_bayes_risk(const MPLaw& law, double alpha0, double sigma2, Estimator est,
                                  const TuningValue& tuning) {
  if (!(alpha0 > 0.0)) throw std::invalid_argument("limiting_bayes_risk: alpha0 must be > 0");
  const double kappa = tuning.value;
  if (est == Estimator::flow) {
    if (tuning.kind != TuningValue::Kind::flow_time)
      throw std::invalid_argument("limiting_bayes_risk: tuning kind does not match estimator");
    return sigma2 * law.gamma * integrate(law, [&](double s) {
             const double d = detail::flow_decay(s, kappa);
             const double g = detail::flow_shrink(s, kappa);
             return alpha0 * d * d + (s > 0.0 ? g * g / s : 0.0);
           });
  }
  if (tuning.kind != TuningValue::Kind::ridge_lambda)
    throw std::invalid_argument("limiting_bayes_risk: tuning kind does not match estimator");
  return sigma2 * law.gamma * integrate(law, [&](double s) {
           const double r = detail::ridge_resid(s, kappa);
           return alpha0 * r * r + detail::variance_factor(Estimator::ridge, s, kappa);
         });
}

/// Stieltjes transform m(F_gamma)(-z) = Int 1/(u+z) dF_gamma(u) for z > 0.
inline double stieltjes(const MPLaw& law, double z) {
  if (!(z > 0.0)) throw std::domain_error("mp::stieltjes: need z > 0");
  return integrate(law, [z](double u) { return 1.0 / (u + z); });
}

/// Closed-form MP Stieltjes transform at -z from the self-consistency
/// quadratic gamma z m^2 + (z + gamma - 1) m + 1 = 0 (positive root).
inline double stieltjes_closed_form(const MPLaw& law, double z) {
  if (!(z > 0.0)) throw std::domain_error("mp::stieltjes_closed_form: need z > 0");
  const double g = law.gamma;
  const double q = g - 1.0 - z;
  return (q + std::sqrt(q * q + 4.0 * g * z)) / (2.0 * g * z);
}

/// Laplace transform of the full MP measure (point mass included):
/// L(t) = point_mass + Int e^{-ts} dF over the support; equals 1 at t = 0.
inline double laplace_transform(const MPLaw& law, double t) {
  if (!(t >= 0.0)) throw std::invalid_argument("mp::laplace_transform: t must be >= 0");
  return integrate(law, [t](double s) { return std::exp(-t * s); });
}

/// Limiting Bayes prediction risk of gradient flow, specialized to the
/// identity population covariance, where the inverse Laplace transform of the
/// resolvent functional reduces to the MP Laplace transform:
///   sigma^2 gamma [alpha0 L(2t) + 2 Int_0^t (L(u) - L(2u)) du].
inline double limiting_prediction_risk_flow(const MPLaw& law, double alpha0, double sigma2,
                                            double t) {
  if (!(alpha0 > 0.0))
    throw std::invalid_argument("limiting_prediction_risk_flow: alpha0 must be > 0");
  if (!(t >= 0.0)) throw std::invalid_argument("limiting_prediction_risk_flow: t must be >= 0");
  const double bias = alpha0 * laplace_transform(law, 2.0 * t);
  const double var = 2.0 * integrate_decaying(
                               [&](double u) {
                                 return laplace_transform(law, u) - laplace_transform(law, 2.0 * u);
                               },
                               t, 1e-8);
  return sigma2 * law.gamma * (bias + var);
}

/// Limiting expected squared l2 norm:
///   ridge: gamma Int (alpha0 s^2 + s) / (s+lambda)^2 dF
///   flow:  gamma Int (1-e^{-ts})^2 (alpha0 + 1/s) dF   (0 at s = 0)
inline double limiting_l2_norm_sq(const MPLaw& law, double alpha0, Estimator est,
                                  const TuningValue& tuning) {
  if (!(alpha0 > 0.0)) throw std::invalid_argument("limiting_l2_norm_sq: alpha0 must be > 0");
  const bool kind_ok = (est == Estimator::flow && tuning.kind == TuningValue::Kind::flow_time) ||
                       (est == Estimator::ridge && tuning.kind == TuningValue::Kind::ridge_lambda);
  if (!kind_ok)
    throw std::invalid_argument("limiting_l2_norm_sq: tuning kind does not match estimator");
  const double kappa = tuning.value;
  return law.gamma * integrate(law, [&](double s) {
           if (s == 0.0) return 0.0;
           const double g = est == Estimator::flow ? detail::flow_shrink(s, kappa)
                                                   : detail::ridge_shrink(s, kappa);
           return g * g * (alpha0 + 1.0 / s);
         });
}

/// Limiting ridge Bayes risk in its Stieltjes form
/// sigma^2 gamma [m(-lambda) - lambda (1 - alpha0 lambda) m'(-lambda)], with
/// the derivative by central finite difference of step 1e-5 * lambda.  Used
/// as a consistency cross-check of the direct integral form.
inline double limiting_ridge_risk_stieltjes_form(const MPLaw& law, double alpha0, double sigma2,
                                                 double lambda) {
  if (!(lambda > 0.0))
    throw std::invalid_argument("limiting_ridge_risk_stieltjes_form: lambda must be > 0");
  const double h = 1e-5 * lambda;
  const double m = stieltjes(law, lambda);
  // m'(-lambda) = Int (u+lambda)^{-2} dF = (m(-(lambda-h)) - m(-(lambda+h))) / 2h
  const double mprime = (stieltjes(law, lambda - h) - stieltjes(law, lambda + h)) / (2.0 * h);
  return sigma2 * law.gamma * (m - lambda * (1.0 - alpha0 * lambda) * mprime);
}

/// Left side of the iterated-Laplace identity L(L(f))(z) = m(-z): the outer
/// Laplace integral is truncated where the integrand's e^{-(z+a)t} envelope
/// makes the tail < 1e-9 (the point mass is integrated exactly as pm/z).
inline double iterated_laplace(const MPLaw& law, double z, double tol = 1e-9) {
  if (!(z > 0.0)) throw std::domain_error("mp::iterated_laplace: need z > 0");
  const double horizon = 200.0 / (z + law.a);
  const double continuous = integrate_decaying(
      [&](double t) {
        return std::exp(-z * t) * (laplace_transform(law, t) - law.point_mass_zero);
      },
      horizon, tol);
  return continuous + law.point_mass_zero / z;
}

}  // namespace flowridge::mp
