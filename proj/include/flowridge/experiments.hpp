#pragma once

#include <cstdint>
#include <optional>
#include <random>
#include <vector>

#include "flowridge/asymptotics.hpp"
#include "flowridge/bounds.hpp"
#include "flowridge/risk.hpp"

namespace flowridge::experiments {

enum class Distribution { gaussian, student_t3, bernoulli_half };

inline const char* to_string(Distribution d) {
  switch (d) {
    case Distribution::gaussian: return "gaussian";
    case Distribution::student_t3: return "student-t3";
    default: return "bernoulli-half";
  }
}

/// One synthetic experiment: design distribution, dimensions, equicorrelation
/// of the population covariance, model parameters, tuning grid, and seed.
/// Identical configs produce bit-identical designs and outputs.
struct ExperimentConfig {
  Distribution dist = Distribution::gaussian;
  Eigen::Index n = 100;
  Eigen::Index p = 100;
  double rho = 0.0;
  double sigma2 = 1.0;
  double r2 = 1.0;
  std::vector<double> grid = default_tuning_grid();
  std::uint64_t seed = 1;
  RiskFlavor::Kind flavor = RiskFlavor::Kind::estimation;
};

/// Equicorrelation covariance: unit diagonal, rho off-diagonal.
inline Eigen::MatrixXd equicorrelation(Eigen::Index p, double rho) {
  if (!(rho >= 0.0) || !(rho < 1.0)) throw std::invalid_argument("equicorrelation: need rho in [0, 1)");
  Eigen::MatrixXd sigma = Eigen::MatrixXd::Constant(p, p, rho);
  sigma.diagonal().setOnes();
  return sigma;
}

namespace detail {

inline double draw_standardized(Distribution dist, std::mt19937_64& rng) {
  switch (dist) {
    case Distribution::gaussian: {
      std::normal_distribution<double> g;
      return g(rng);
    }
    case Distribution::student_t3: {
      // t(3) has standard deviation sqrt(3)
      std::student_t_distribution<double> t3(3.0);
      return t3(rng) / std::sqrt(3.0);
    }
    default: {
      std::bernoulli_distribution coin(0.5);
      return coin(rng) ? 1.0 : -1.0;
    }
  }
}

}  // namespace detail

/// Z with i.i.d. standardized entries from the configured distribution,
/// right-multiplied by the equicorrelation square root
/// sqrt(1-rho) I + ((sqrt(1+(p-1)rho) - sqrt(1-rho))/p) 11^T so that rows
/// have population covariance with unit diagonal and off-diagonal rho.
inline DesignMatrix generate_design(const ExperimentConfig& config) {
  std::mt19937_64 rng(config.seed);
  Eigen::MatrixXd Z(config.n, config.p);
  for (Eigen::Index j = 0; j < config.p; ++j)
    for (Eigen::Index i = 0; i < config.n; ++i) Z(i, j) = detail::draw_standardized(config.dist, rng);
  if (config.rho == 0.0) return DesignMatrix(std::move(Z));
  if (!(config.rho > 0.0) || !(config.rho < 1.0))
    throw std::invalid_argument("generate_design: need rho in [0, 1)");
  const double pd = static_cast<double>(config.p);
  const double c =
      (std::sqrt(1.0 + (pd - 1.0) * config.rho) - std::sqrt(1.0 - config.rho)) / pd;
  const Eigen::VectorXd row_sums = Z.rowwise().sum();
  Eigen::MatrixXd X = std::sqrt(1.0 - config.rho) * Z;
  X.colwise() += c * row_sums;
  return DesignMatrix(std::move(X));
}

/// Monte Carlo risk estimate with its standard error.
struct MonteCarloEstimate {
  double mean = 0.0;
  double std_error = 0.0;
  Eigen::Index reps = 0;
};

/// Independent sampling oracle for the closed-form risks.  Draws
/// y | beta0 ~ N(X beta0, sigma^2 I) per replicate; in Bayes mode (beta0 ==
/// nullptr) also draws beta0 ~ N(0, (r^2/p) I), and for out-of-sample risk a
/// fresh x0 ~ N(0, Sigma).  The closed forms are moment-only, so Gaussian
/// draws are just the sampling choice here.
///
/// Replicates run in fixed batches of 4096 with substream seeds derived from
/// `seed` by the splitmix64 rule; batch results merge by pairwise summation,
/// so the estimate is independent of the thread count.
inline MonteCarloEstimate monte_carlo_risk(const DesignMatrix& X, const Eigen::VectorXd* beta0,
                                           double r2, double sigma2, Estimator est,
                                           const TuningValue& tuning, const RiskFlavor& flavor,
                                           Eigen::Index reps, std::uint64_t seed,
                                           unsigned threads = 1) {
  if (reps < 100) throw std::invalid_argument("monte_carlo_risk: need at least 100 replicates");
  if (!(sigma2 >= 0.0)) throw std::invalid_argument("monte_carlo_risk: sigma2 must be >= 0");
  if (!beta0 && !(r2 > 0.0))
    throw std::invalid_argument("monte_carlo_risk: Bayes mode needs r2 > 0");
  if (beta0 && beta0->size() != X.p())
    throw std::invalid_argument("monte_carlo_risk: beta0 has wrong length");

  const SpectralData sd = decompose(X);
  const Eigen::Index n = sd.n, p = sd.p, m = sd.left_vectors.cols();

  // beta_hat = M y with M = V_1 diag(coef) U^T.
  Eigen::VectorXd coef(m);
  const double root_n = std::sqrt(static_cast<double>(n));
  for (Eigen::Index i = 0; i < m; ++i) {
    const double s = sd.eigenvalues(i);
    if (s == 0.0) {
      coef(i) = 0.0;
    } else if (est == Estimator::flow) {
      coef(i) = flowridge::detail::flow_shrink(s, tuning.value) / (root_n * std::sqrt(s));
    } else {
      if (std::isinf(tuning.value))
        coef(i) = 0.0;
      else
        coef(i) = std::sqrt(s) / (root_n * (s + tuning.value));
    }
  }
  const Eigen::MatrixXd M = sd.right_vectors.leftCols(m) * coef.asDiagonal() *
                            sd.left_vectors.transpose();

  const bool out = flavor.kind == RiskFlavor::Kind::out_of_sample;
  Eigen::MatrixXd sigma_half;
  if (out) {
    if (!flavor.population_cov)
      throw std::invalid_argument("monte_carlo_risk: out-of-sample flavor requires a covariance");
    Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> es(*flavor.population_cov);
    sigma_half = es.eigenvectors() *
                 es.eigenvalues().cwiseMax(0.0).cwiseSqrt().asDiagonal() *
                 es.eigenvectors().transpose();
  }

  const Eigen::Index batch_size = 4096;
  const Eigen::Index batches = (reps + batch_size - 1) / batch_size;
  std::vector<double> batch_sum(batches, 0.0), batch_sum_sq(batches, 0.0);

  parallel_for(static_cast<std::size_t>(batches), threads, [&](std::size_t b) {
    std::mt19937_64 rng(substream_seed(seed, b));
    std::normal_distribution<double> gauss;
    const Eigen::Index lo = static_cast<Eigen::Index>(b) * batch_size;
    const Eigen::Index hi = std::min(lo + batch_size, reps);
    Eigen::VectorXd b0(p), y(n), x0(p), raw(p);
    double sum = 0.0, sum_sq = 0.0;
    for (Eigen::Index rep = lo; rep < hi; ++rep) {
      if (beta0) {
        b0 = *beta0;
      } else {
        const double scale = std::sqrt(r2 / static_cast<double>(p));
        for (Eigen::Index i = 0; i < p; ++i) b0(i) = scale * gauss(rng);
      }
      y = X.entries() * b0;
      if (sigma2 > 0.0) {
        const double sig = std::sqrt(sigma2);
        for (Eigen::Index i = 0; i < n; ++i) y(i) += sig * gauss(rng);
      }
      const Eigen::VectorXd diff = M * y - b0;
      double loss = 0.0;
      switch (flavor.kind) {
        case RiskFlavor::Kind::estimation:
          loss = diff.squaredNorm();
          break;
        case RiskFlavor::Kind::in_sample:
          loss = (X.entries() * diff).squaredNorm() / static_cast<double>(n);
          break;
        default: {
          for (Eigen::Index i = 0; i < p; ++i) raw(i) = gauss(rng);
          x0 = sigma_half * raw;
          const double err = x0.dot(diff);
          loss = err * err;
        }
      }
      sum += loss;
      sum_sq += loss * loss;
    }
    batch_sum[b] = sum;
    batch_sum_sq[b] = sum_sq;
  });

  MonteCarloEstimate est_out;
  est_out.reps = reps;
  const double total = pairwise_sum(batch_sum);
  const double total_sq = pairwise_sum(batch_sum_sq);
  est_out.mean = total / static_cast<double>(reps);
  const double var =
      std::max(0.0, (total_sq - static_cast<double>(reps) * est_out.mean * est_out.mean) /
                        std::max<double>(1.0, static_cast<double>(reps - 1)));
  est_out.std_error = std::sqrt(var / static_cast<double>(reps));
  return est_out;
}

/// One row of the l2-calibrated comparison: flow time t paired with the
/// lambda whose expected squared l2 norm matches.
struct CalibratedPair {
  double t = 0.0;
  double lambda = 0.0;
  double norm = 0.0;  // shared sqrt(E||beta_hat||^2) of the matched pair
  double risk_flow = 0.0;
  double risk_ridge = 0.0;
  double ratio = 0.0;
  bool matched = false;
};

namespace detail {

inline double risk_total_weighted(const SpectralData& sd, const PriorModel& prior, Estimator est,
                                  double kappa, const Eigen::VectorXd& w) {
  double sum = 0.0;
  for (Eigen::Index i = 0; i < sd.p; ++i) {
    const double s = sd.eigenvalues(i);
    sum += (prior.alpha * flowridge::detail::bias_factor(est, s, kappa) +
            flowridge::detail::variance_factor(est, s, kappa)) *
           w(i);
  }
  return prior.sigma2 / static_cast<double>(sd.n) * sum;
}

}  // namespace detail

/// Pairs each flow time with the ridge lambda of equal expected squared l2
/// norm (monotone bisection to relative tolerance 1e-10) and reports the risk
/// ratio at the matched norms.  Rows whose target norm exceeds what ridge can
/// attain are flagged unmatched.
inline std::vector<CalibratedPair> calibrate_by_l2(const RiskCurve& flow_curve,
                                                   const RiskCurve& ridge_curve,
                                                   const SpectralData& sd, const PriorModel& prior,
                                                   const RiskFlavor& flavor) {
  if (flow_curve.estimator != Estimator::flow || ridge_curve.estimator != Estimator::ridge)
    throw std::invalid_argument("calibrate_by_l2: need one flow and one ridge curve");
  if (flow_curve.flavor != flavor.kind || ridge_curve.flavor != flavor.kind)
    throw std::invalid_argument("calibrate_by_l2: curve flavors do not match");
  const Eigen::VectorXd w = flowridge::detail::flavor_weights(sd, flavor);

  // The ridge norm is strictly decreasing in lambda with supremum at
  // lambda -> 0 (the min-norm least squares norm).
  const double ridge_sup = expected_l2_norm_sq(sd, prior, Estimator::ridge, TuningValue::ridge(0.0));

  std::vector<CalibratedPair> rows;
  rows.reserve(flow_curve.size());
  for (std::size_t k = 0; k < flow_curve.size(); ++k) {
    CalibratedPair row;
    row.t = flow_curve.points[k].tuning.value;
    row.risk_flow = flow_curve.points[k].total;
    const double target = expected_l2_norm_sq(sd, prior, Estimator::flow, TuningValue::flow(row.t));
    row.norm = std::sqrt(target);
    if (target == 0.0) {
      row.lambda = std::numeric_limits<double>::infinity();
      row.risk_ridge = detail::risk_total_weighted(sd, prior, Estimator::ridge, row.lambda, w);
      row.ratio = row.risk_flow / row.risk_ridge;
      row.matched = true;
      rows.push_back(row);
      continue;
    }
    if (target > ridge_sup || (target == ridge_sup && sd.rank_deficient)) {
      row.matched = false;
      rows.push_back(row);
      continue;
    }
    auto norm_at = [&](double lambda) {
      return expected_l2_norm_sq(sd, prior, Estimator::ridge, TuningValue::ridge(lambda));
    };
    const MonotoneSolveResult solved = bisect_decreasing(norm_at, target, 1.0 / 1024.0, 1024.0);
    row.matched = solved.ok;
    if (solved.ok) {
      row.lambda = solved.x;
      row.risk_ridge = detail::risk_total_weighted(sd, prior, Estimator::ridge, row.lambda, w);
      row.ratio = row.risk_flow / row.risk_ridge;
    }
    rows.push_back(row);
  }
  return rows;
}

/// Summary statistics of one experiment run: the maximum pathwise ratio under
/// lambda = 1/t, the ratio of the curve minima, and the maximum ratio over
/// l2-matched pairs.
struct RatioSummary {
  double max_pathwise_ratio = 0.0;
  double ratio_of_minima = 0.0;
  double max_l2calibrated_ratio = 0.0;
  ExperimentConfig config;
};

struct ExperimentResult {
  RatioSummary summary;
  RiskCurve flow_curve;
  RiskCurve ridge_curve;
  std::vector<CalibratedPair> l2_pairs;
  // Limiting curves (identity covariance only), on the same grid.
  std::optional<RiskCurve> flow_limit;
  std::optional<RiskCurve> ridge_limit;
};

/// Runs one configuration end to end: generates the design, evaluates both
/// Bayes risk curves, pairs them under both calibrations, and (for rho = 0)
/// attaches the Marchenko-Pastur limiting curves.
inline ExperimentResult run_experiment(const ExperimentConfig& config) {
  const DesignMatrix X = generate_design(config);
  const SpectralData sd = decompose(X);
  const PriorModel prior = PriorModel::make(config.sigma2, config.r2, config.n, config.p);

  RiskFlavor flavor;
  switch (config.flavor) {
    case RiskFlavor::Kind::estimation: flavor = RiskFlavor::estimation(); break;
    case RiskFlavor::Kind::in_sample: flavor = RiskFlavor::in_sample(); break;
    default: flavor = RiskFlavor::out_of_sample(equicorrelation(config.p, config.rho));
  }

  ExperimentResult result;
  result.summary.config = config;
  result.flow_curve = risk_curve(sd, prior, Estimator::flow, config.grid, flavor);
  result.ridge_curve = risk_curve(sd, prior, Estimator::ridge, config.grid, flavor);

  const Eigen::VectorXd w = flowridge::detail::flavor_weights(sd, flavor);
  double max_ratio = 0.0;
  for (std::size_t k = 0; k < config.grid.size(); ++k) {
    const double t = config.grid[k];
    const double denom = detail::risk_total_weighted(sd, prior, Estimator::ridge, 1.0 / t, w);
    max_ratio = std::max(max_ratio, result.flow_curve.points[k].total / denom);
  }
  result.summary.max_pathwise_ratio = max_ratio;

  auto curve_min = [](const RiskCurve& c) {
    double best = c.points.front().total;
    for (const RiskPoint& pt : c.points) best = std::min(best, pt.total);
    return best;
  };
  result.summary.ratio_of_minima = curve_min(result.flow_curve) / curve_min(result.ridge_curve);

  result.l2_pairs = calibrate_by_l2(result.flow_curve, result.ridge_curve, sd, prior, flavor);
  double max_l2 = 0.0;
  for (const CalibratedPair& row : result.l2_pairs)
    if (row.matched) max_l2 = std::max(max_l2, row.ratio);
  result.summary.max_l2calibrated_ratio = max_l2;

  if (config.rho == 0.0 && config.flavor != RiskFlavor::Kind::in_sample) {
    const double gamma = static_cast<double>(config.p) / static_cast<double>(config.n);
    const mp::MPLaw law = mp::mp_law(gamma);
    const double alpha0 = config.r2 / (config.sigma2 * gamma);
    auto limit_curve = [&](Estimator est) {
      RiskCurve curve;
      curve.estimator = est;
      curve.flavor = config.flavor;
      curve.calibration = "native";
      curve.is_limit = true;
      for (double kappa : config.grid) {
        const TuningValue tuning =
            est == Estimator::flow ? TuningValue::flow(kappa) : TuningValue::ridge(kappa);
        RiskPoint pt;
        pt.tuning = tuning;
        pt.bias_sq = config.sigma2 * gamma * alpha0 *
                     mp::integrate(law, [&](double s) {
                       return flowridge::detail::bias_factor(est, s, kappa);
                     });
        pt.variance = config.sigma2 * gamma * mp::integrate(law, [&](double s) {
                        return flowridge::detail::variance_factor(est, s, kappa);
                      });
        pt.total = pt.bias_sq + pt.variance;
        curve.points.push_back(pt);
        curve.l2_norm.push_back(std::sqrt(mp::limiting_l2_norm_sq(law, alpha0, est, tuning)));
      }
      return curve;
    };
    result.flow_limit = limit_curve(Estimator::flow);
    result.ridge_limit = limit_curve(Estimator::ridge);
  }
  return result;
}

}  // namespace flowridge::experiments
