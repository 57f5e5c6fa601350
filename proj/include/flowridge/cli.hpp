#pragma once

#include <filesystem>
#include <iostream>
#include <string>
#include <vector>

#include <CLI11.hpp>

#include "flowridge/io.hpp"

namespace flowridge::cli {

namespace detail {

struct GridFlags {
  double lo = std::pow(2.0, -10);
  double hi = std::pow(2.0, 10);
  std::size_t count = 200;

  std::vector<double> build() const { return log_spaced_grid(lo, hi, count); }

  void attach(CLI::App* cmd) {
    cmd->add_option("--grid-lo", lo, "Smallest tuning value")->capture_default_str();
    cmd->add_option("--grid-hi", hi, "Largest tuning value")->capture_default_str();
    cmd->add_option("--grid-n", count, "Number of log-spaced grid points")->capture_default_str();
  }
};

struct DesignFlags {
  std::string design_path;
  bool csv_header = false;
  std::string dist = "gaussian";
  Eigen::Index n = 100;
  Eigen::Index p = 100;
  double rho = 0.0;
  std::uint64_t seed = 1;

  void attach(CLI::App* cmd, bool generated_only = false) {
    if (!generated_only) {
      cmd->add_option("--design", design_path, "Design matrix CSV (rows are observations)");
      cmd->add_flag("--csv-header", csv_header, "Design CSV has a header row");
    }
    cmd->add_option("--dist", dist, "Design distribution: gaussian, student-t3, bernoulli-half")
        ->capture_default_str();
    cmd->add_option("--n", n, "Sample count for generated designs")->capture_default_str();
    cmd->add_option("--p", p, "Feature count for generated designs")->capture_default_str();
    cmd->add_option("--rho", rho, "Equicorrelation of the population covariance")
        ->capture_default_str();
    cmd->add_option("--seed", seed, "Seed for generated designs")->capture_default_str();
  }

  experiments::Distribution parse_dist() const {
    if (dist == "gaussian") return experiments::Distribution::gaussian;
    if (dist == "student-t3") return experiments::Distribution::student_t3;
    if (dist == "bernoulli-half") return experiments::Distribution::bernoulli_half;
    throw CLI::ValidationError("--dist", "unknown distribution '" + dist + "'");
  }

  DesignMatrix load(const std::vector<double>& grid, double sigma2, double r2,
                    RiskFlavor::Kind flavor) const {
    if (!design_path.empty()) return DesignMatrix(io::read_design_csv(design_path, csv_header));
    experiments::ExperimentConfig config;
    config.dist = parse_dist();
    config.n = n;
    config.p = p;
    config.rho = rho;
    config.sigma2 = sigma2;
    config.r2 = r2;
    config.grid = grid;
    config.seed = seed;
    config.flavor = flavor;
    return experiments::generate_design(config);
  }
};

inline RiskFlavor::Kind parse_flavor(const std::string& name) {
  if (name == "estimation") return RiskFlavor::Kind::estimation;
  if (name == "in-sample") return RiskFlavor::Kind::in_sample;
  if (name == "out-of-sample") return RiskFlavor::Kind::out_of_sample;
  throw CLI::ValidationError("--flavor", "unknown flavor '" + name + "'");
}

inline RiskFlavor build_flavor(RiskFlavor::Kind kind, Eigen::Index p, double rho,
                               const std::string& population_cov_path) {
  switch (kind) {
    case RiskFlavor::Kind::estimation: return RiskFlavor::estimation();
    case RiskFlavor::Kind::in_sample: return RiskFlavor::in_sample();
    default:
      if (!population_cov_path.empty())
        return RiskFlavor::out_of_sample(io::read_design_csv(population_cov_path, false));
      return RiskFlavor::out_of_sample(experiments::equicorrelation(p, rho));
  }
}

inline void emit(const std::string& path, const std::function<void(std::ostream&)>& writer) {
  if (path.empty()) {
    writer(std::cout);
    return;
  }
  std::ofstream out(path);
  if (!out) throw std::runtime_error("cannot open output file: " + path);
  writer(out);
}

inline std::string trim(const std::string& s) {
  const auto first = s.find_first_not_of(" \t\r");
  const auto last = s.find_last_not_of(" \t\r");
  return first == std::string::npos ? std::string() : s.substr(first, last - first + 1);
}

/// Pulls `--config FILE` out of the argument list and appends the file's
/// flat `key = value` lines as `--key=value` tokens.  Options use TakeFirst,
/// so explicit command-line flags win over config values.
inline std::vector<std::string> expand_config(int argc, const char* const* argv) {
  std::vector<std::string> args;
  std::string config_path;
  for (int i = 1; i < argc; ++i) {
    const std::string tok = argv[i];
    if (tok == "--config") {
      if (i + 1 >= argc) throw std::runtime_error("--config requires a file path");
      config_path = argv[++i];
    } else if (tok.rfind("--config=", 0) == 0) {
      config_path = tok.substr(9);
    } else {
      args.push_back(tok);
    }
  }
  if (config_path.empty()) return args;
  std::ifstream in(config_path);
  if (!in) throw std::runtime_error("cannot open config file: " + config_path);
  std::string line;
  while (std::getline(in, line)) {
    const std::string entry = trim(line);
    if (entry.empty() || entry[0] == '#') continue;
    const auto eq = entry.find('=');
    if (eq == std::string::npos)
      throw std::runtime_error("config file: expected key = value, got '" + entry + "'");
    const std::string key = trim(entry.substr(0, eq));
    const std::string value = trim(entry.substr(eq + 1));
    if (key.empty()) throw std::runtime_error("config file: empty key in '" + entry + "'");
    args.push_back("--" + key + "=" + value);
  }
  return args;
}

}  // namespace detail

/// Entry point of the command-line tool; returns the process exit status
/// (0 success, 1 input/usage error, 2 a certified bound failed).
inline int run(int argc, const char* const* argv) {
  CLI::App app{"Exact risk curves and certified relative-risk bounds for gradient flow "
               "and ridge regression on least squares"};
  app.require_subcommand(1);
  unsigned threads = 1;
  app.add_option("--threads", threads, "Worker thread cap for parallel sections")
      ->capture_default_str();

  // ---- constants ---------------------------------------------------------
  auto* cmd_constants = app.add_subcommand(
      "constants", "Recompute the relative-risk constants by numerical maximization");
  std::string constants_out;
  cmd_constants->add_option("-o,--output", constants_out, "Write the table as JSON");

  // ---- heatmap -----------------------------------------------------------
  auto* cmd_heatmap =
      app.add_subcommand("heatmap", "Shrinkage maps g(s, kappa) on a grid, ridge at lambda = 1/kappa");
  double s_lo = 0.0, s_hi = 10.0;
  std::size_t s_n = 201;
  detail::GridFlags heat_grid;
  heat_grid.count = 64;
  std::string heatmap_out;
  cmd_heatmap->add_option("--s-lo", s_lo, "Smallest eigenvalue")->capture_default_str();
  cmd_heatmap->add_option("--s-hi", s_hi, "Largest eigenvalue")->capture_default_str();
  cmd_heatmap->add_option("--s-n", s_n, "Eigenvalue grid size")->capture_default_str();
  heat_grid.attach(cmd_heatmap);
  cmd_heatmap->add_option("-o,--output", heatmap_out, "Output CSV (stdout when omitted)");

  // ---- riskcurve ---------------------------------------------------------
  auto* cmd_riskcurve = app.add_subcommand("riskcurve", "Bayes risk curves over a tuning grid");
  detail::DesignFlags rc_design;
  detail::GridFlags rc_grid;
  std::string rc_estimator = "both", rc_flavor = "estimation", rc_cov_path, rc_out;
  double rc_sigma2 = 1.0, rc_r2 = 1.0;
  rc_design.attach(cmd_riskcurve);
  rc_grid.attach(cmd_riskcurve);
  cmd_riskcurve->add_option("--estimator", rc_estimator, "flow, ridge, or both")
      ->capture_default_str();
  cmd_riskcurve->add_option("--flavor", rc_flavor, "estimation, in-sample, or out-of-sample")
      ->capture_default_str();
  cmd_riskcurve->add_option("--population-cov", rc_cov_path,
                            "Population covariance CSV for out-of-sample risk (defaults to "
                            "equicorrelation with --rho)");
  cmd_riskcurve->add_option("--sigma2", rc_sigma2, "Noise variance")->capture_default_str();
  cmd_riskcurve->add_option("--r2", rc_r2, "Signal strength E||beta0||^2")->capture_default_str();
  cmd_riskcurve->add_option("-o,--output", rc_out, "Output CSV (stdout when omitted)");

  // ---- asymptotic --------------------------------------------------------
  auto* cmd_asymptotic =
      app.add_subcommand("asymptotic", "Marchenko-Pastur limiting risk curves (identity covariance)");
  double as_gamma = 2.0, as_sigma2 = 1.0, as_r2 = 1.0;
  detail::GridFlags as_grid;
  std::string as_estimator = "both", as_out;
  cmd_asymptotic->add_option("--gamma", as_gamma, "Aspect ratio p/n limit")->capture_default_str();
  cmd_asymptotic->add_option("--sigma2", as_sigma2, "Noise variance")->capture_default_str();
  cmd_asymptotic->add_option("--r2", as_r2, "Signal strength")->capture_default_str();
  cmd_asymptotic->add_option("--estimator", as_estimator, "flow, ridge, or both")
      ->capture_default_str();
  as_grid.attach(cmd_asymptotic);
  cmd_asymptotic->add_option("-o,--output", as_out, "Output CSV (stdout when omitted)");

  // ---- bounds ------------------------------------------------------------
  auto* cmd_bounds = app.add_subcommand(
      "bounds", "Certify the pathwise / optimal-tuning bounds; exit 2 when a bound fails");
  detail::DesignFlags bd_design;
  detail::GridFlags bd_grid;
  std::string bd_curves_path, bd_beta0_path, bd_cov_path, bd_out;
  double bd_sigma2 = 1.0, bd_r2 = 1.0;
  bool bd_random_beta0 = false, bd_explore_fixed_out = false;
  bd_design.attach(cmd_bounds);
  bd_grid.attach(cmd_bounds);
  cmd_bounds->add_option("--curves", bd_curves_path,
                         "Certify a riskcurve CSV (needs one flow and one ridge curve)");
  cmd_bounds->add_option("--beta0", bd_beta0_path, "Fixed beta0 vector CSV");
  cmd_bounds->add_flag("--random-beta0", bd_random_beta0,
                       "Draw a fixed beta0 from the spherical prior");
  cmd_bounds->add_option("--population-cov", bd_cov_path,
                         "Population covariance CSV for out-of-sample certificates");
  cmd_bounds->add_option("--sigma2", bd_sigma2, "Noise variance")->capture_default_str();
  cmd_bounds->add_option("--r2", bd_r2, "Signal strength")->capture_default_str();
  cmd_bounds->add_flag("--explore-fixed-out", bd_explore_fixed_out,
                       "Print fixed-beta0 out-of-sample ratios (exploratory; the bound is an "
                       "open question and is not certified)");
  cmd_bounds->add_option("-o,--output", bd_out, "Certificate JSON (stdout when omitted)");

  // ---- simulate ----------------------------------------------------------
  auto* cmd_simulate =
      app.add_subcommand("simulate", "Run one synthetic experiment (curves, calibration, summary)");
  detail::DesignFlags sim_design;
  detail::GridFlags sim_grid;
  std::string sim_flavor = "estimation", sim_out_dir = ".";
  double sim_sigma2 = 1.0, sim_r2 = 1.0;
  sim_design.attach(cmd_simulate, /*generated_only=*/true);
  sim_grid.attach(cmd_simulate);
  cmd_simulate->add_option("--flavor", sim_flavor, "estimation, in-sample, or out-of-sample")
      ->capture_default_str();
  cmd_simulate->add_option("--sigma2", sim_sigma2, "Noise variance")->capture_default_str();
  cmd_simulate->add_option("--r2", sim_r2, "Signal strength")->capture_default_str();
  cmd_simulate->add_option("--out-dir", sim_out_dir, "Directory for curves.csv, pairs_l2.csv, summary.json")
      ->capture_default_str();

  // ---- calibrate ---------------------------------------------------------
  auto* cmd_calibrate =
      app.add_subcommand("calibrate", "l2-norm calibrated flow/ridge comparison rows");
  detail::DesignFlags cal_design;
  detail::GridFlags cal_grid;
  std::string cal_flavor = "estimation", cal_cov_path, cal_out;
  double cal_sigma2 = 1.0, cal_r2 = 1.0;
  cal_design.attach(cmd_calibrate);
  cal_grid.attach(cmd_calibrate);
  cmd_calibrate->add_option("--flavor", cal_flavor, "estimation, in-sample, or out-of-sample")
      ->capture_default_str();
  cmd_calibrate->add_option("--population-cov", cal_cov_path,
                            "Population covariance CSV for out-of-sample risk");
  cmd_calibrate->add_option("--sigma2", cal_sigma2, "Noise variance")->capture_default_str();
  cmd_calibrate->add_option("--r2", cal_r2, "Signal strength")->capture_default_str();
  cmd_calibrate->add_option("-o,--output", cal_out, "Output CSV (stdout when omitted)");

  try {
    // Values from a --config file are appended after the command line; with
    // TakeFirst, explicit flags override them.
    std::vector<std::string> args = detail::expand_config(argc, argv);
    std::reverse(args.begin(), args.end());
    for (CLI::App* sub : app.get_subcommands([](const CLI::App*) { return true; }))
      for (CLI::Option* opt : sub->get_options())
        if (opt->get_expected_min() >= 1)
          opt->multi_option_policy(CLI::MultiOptionPolicy::TakeFirst);
    for (CLI::Option* opt : app.get_options())
      if (opt->get_expected_min() >= 1)
        opt->multi_option_policy(CLI::MultiOptionPolicy::TakeFirst);
    app.parse(std::move(args));
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e);
    return code == 0 ? 0 : 1;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 1;
  }

  try {
    if (cmd_constants->parsed()) {
      const auto constants = bounds::recompute_constants();
      std::cout << "constant              recomputed        certified\n";
      std::cout << "c1                    " << io::format_double(constants.at("c1")) << "  "
                << bounds::kShrinkConstant << "\n";
      std::cout << "C                     " << io::format_double(constants.at("C")) << "  "
                << bounds::kSqrtConstant << "\n";
      std::cout << "c1^2                  " << io::format_double(constants.at("c1_squared"))
                << "  " << bounds::kPathwiseConstant << "\n";
      std::cout << "1 + C^2               " << io::format_double(constants.at("one_plus_C_squared"))
                << "  " << bounds::kOptimalConstant << "\n";
      if (!constants_out.empty()) {
        nlohmann::json doc;
        doc["meta"] = {{"version", kVersion}, {"subcommand", "constants"}};
        for (const auto& [key, value] : constants) doc[key] = value;
        std::ofstream out(constants_out);
        if (!out) throw std::runtime_error("cannot open output file: " + constants_out);
        out << doc.dump(2) << "\n";
      }
      return 0;
    }

    if (cmd_heatmap->parsed()) {
      if (!(s_hi > s_lo) || s_n < 2) throw std::invalid_argument("heatmap: need s-hi > s-lo, s-n >= 2");
      const std::vector<double> kappas = heat_grid.build();
      detail::emit(heatmap_out, [&](std::ostream& out) {
        io::write_metadata(out, {{"subcommand", "heatmap"}, {"calibration", "lambda=1/t"}});
        out << "s,kappa,g_ridge,g_flow\n";
        for (std::size_t i = 0; i < s_n; ++i) {
          const double s = s_lo + (s_hi - s_lo) * static_cast<double>(i) / static_cast<double>(s_n - 1);
          for (double kappa : kappas) {
            out << io::format_double(s) << ',' << io::format_double(kappa) << ','
                << io::format_double(shrinkage_map(Estimator::ridge, s, 1.0 / kappa)) << ','
                << io::format_double(shrinkage_map(Estimator::flow, s, kappa)) << "\n";
          }
        }
      });
      return 0;
    }

    if (cmd_riskcurve->parsed()) {
      const std::vector<double> grid = rc_grid.build();
      const RiskFlavor::Kind kind = detail::parse_flavor(rc_flavor);
      const DesignMatrix X = rc_design.load(grid, rc_sigma2, rc_r2, kind);
      const SpectralData sd = decompose(X);
      const PriorModel prior = PriorModel::make(rc_sigma2, rc_r2, sd.n, sd.p);
      const RiskFlavor flavor = detail::build_flavor(kind, sd.p, rc_design.rho, rc_cov_path);
      std::vector<RiskCurve> curves;
      if (rc_estimator == "flow" || rc_estimator == "both")
        curves.push_back(risk_curve(sd, prior, Estimator::flow, grid, flavor));
      if (rc_estimator == "ridge" || rc_estimator == "both")
        curves.push_back(risk_curve(sd, prior, Estimator::ridge, grid, flavor));
      if (curves.empty())
        throw std::invalid_argument("riskcurve: unknown estimator '" + rc_estimator + "'");
      detail::emit(rc_out, [&](std::ostream& out) {
        io::write_curves_csv(out, curves,
                             {{"subcommand", "riskcurve"},
                              {"seed", std::to_string(rc_design.seed)},
                              {"sigma2", io::format_double(rc_sigma2)},
                              {"r2", io::format_double(rc_r2)}});
      });
      return 0;
    }

    if (cmd_asymptotic->parsed()) {
      const std::vector<double> grid = as_grid.build();
      const mp::MPLaw law = mp::mp_law(as_gamma);
      const double alpha0 = as_r2 / (as_sigma2 * as_gamma);
      std::vector<RiskCurve> curves;
      auto limit_curve = [&](Estimator est) {
        RiskCurve curve;
        curve.estimator = est;
        curve.flavor = RiskFlavor::Kind::estimation;
        curve.is_limit = true;
        for (double kappa : grid) {
          const TuningValue tuning =
              est == Estimator::flow ? TuningValue::flow(kappa) : TuningValue::ridge(kappa);
          RiskPoint pt;
          pt.tuning = tuning;
          pt.bias_sq = as_sigma2 * as_gamma * alpha0 *
                       mp::integrate(law, [&](double s) { return flowridge::detail::bias_factor(est, s, kappa); });
          pt.variance = as_sigma2 * as_gamma *
                        mp::integrate(law, [&](double s) { return flowridge::detail::variance_factor(est, s, kappa); });
          pt.total = pt.bias_sq + pt.variance;
          curve.points.push_back(pt);
          curve.l2_norm.push_back(std::sqrt(mp::limiting_l2_norm_sq(law, alpha0, est, tuning)));
        }
        return curve;
      };
      if (as_estimator == "flow" || as_estimator == "both") curves.push_back(limit_curve(Estimator::flow));
      if (as_estimator == "ridge" || as_estimator == "both") curves.push_back(limit_curve(Estimator::ridge));
      if (curves.empty())
        throw std::invalid_argument("asymptotic: unknown estimator '" + as_estimator + "'");
      detail::emit(as_out, [&](std::ostream& out) {
        io::write_curves_csv(out, curves,
                             {{"subcommand", "asymptotic"},
                              {"gamma", io::format_double(as_gamma)},
                              {"alpha0", io::format_double(alpha0)},
                              {"quadrature_nodes", "2048"}},
                             /*with_limit_column=*/true);
      });
      return 0;
    }

    if (cmd_bounds->parsed()) {
      std::vector<bounds::BoundCertificate> certs;
      io::Metadata meta = {{"subcommand", "bounds"}, {"certificate_slack", "1e-9"}};
      if (!bd_curves_path.empty()) {
        const std::vector<RiskCurve> curves = io::read_curves_csv(bd_curves_path);
        const RiskCurve* flow_curve = nullptr;
        const RiskCurve* ridge_curve = nullptr;
        for (const RiskCurve& c : curves) {
          if (c.is_limit) continue;
          if (c.estimator == Estimator::flow && !flow_curve) flow_curve = &c;
          if (c.estimator == Estimator::ridge && !ridge_curve) ridge_curve = &c;
        }
        if (!flow_curve || !ridge_curve)
          throw std::invalid_argument("bounds: curves CSV must contain a flow and a ridge curve");
        certs.push_back(bounds::certificate_from_curves(*flow_curve, *ridge_curve));
        meta.emplace_back("source", bd_curves_path);
      } else {
        const std::vector<double> grid = bd_grid.build();
        const DesignMatrix X = bd_design.load(grid, bd_sigma2, bd_r2, RiskFlavor::Kind::estimation);
        const SpectralData sd = decompose(X);
        const PriorModel prior = PriorModel::make(bd_sigma2, bd_r2, sd.n, sd.p);
        const RiskFlavor out_flavor =
            detail::build_flavor(RiskFlavor::Kind::out_of_sample, sd.p, bd_design.rho, bd_cov_path);

        std::optional<Eigen::VectorXd> beta0;
        if (!bd_beta0_path.empty()) {
          beta0 = io::read_vector_csv(bd_beta0_path);
        } else if (bd_random_beta0) {
          std::mt19937_64 rng(substream_seed(bd_design.seed, 0x5eed));
          std::normal_distribution<double> gauss;
          Eigen::VectorXd b(sd.p);
          const double scale = std::sqrt(bd_r2 / static_cast<double>(sd.p));
          for (Eigen::Index i = 0; i < sd.p; ++i) b(i) = scale * gauss(rng);
          beta0 = std::move(b);
        }

        // Bayes pathwise certificates for all three flavors, fixed-beta0
        // pathwise for estimation and in-sample, optimal-tuning for all
        // three, plus the scalar-map constants.
        std::vector<std::function<bounds::BoundCertificate()>> tasks = {
            [&] { return bounds::pathwise_ratio_check(sd, prior, RiskFlavor::estimation(), grid); },
            [&] { return bounds::pathwise_ratio_check(sd, prior, RiskFlavor::in_sample(), grid); },
            [&] { return bounds::pathwise_ratio_check(sd, prior, out_flavor, grid); },
            [&] { return bounds::optimal_ratio_check(sd, prior, RiskFlavor::estimation()); },
            [&] { return bounds::optimal_ratio_check(sd, prior, RiskFlavor::in_sample()); },
            [&] { return bounds::optimal_ratio_check(sd, prior, out_flavor); },
            [&] { return bounds::scalar_constant_check(bounds::BoundName::scalar_1_2985); },
            [&] { return bounds::scalar_constant_check(bounds::BoundName::scalar_C); },
        };
        if (beta0) {
          tasks.push_back([&] {
            return bounds::pathwise_ratio_check(sd, prior, RiskFlavor::estimation(), grid, &*beta0);
          });
          tasks.push_back([&] {
            return bounds::pathwise_ratio_check(sd, prior, RiskFlavor::in_sample(), grid, &*beta0);
          });
        }
        certs.resize(tasks.size());
        parallel_for(tasks.size(), threads, [&](std::size_t i) { certs[i] = tasks[i](); });
        meta.emplace_back("seed", std::to_string(bd_design.seed));

        if (bd_explore_fixed_out) {
          if (!beta0)
            throw std::invalid_argument("bounds: --explore-fixed-out needs --beta0 or --random-beta0");
          std::cout << "# exploratory fixed-beta0 out-of-sample ratios (bound not established; "
                       "nothing is certified)\n";
          std::cout << "t,ratio\n";
          for (double t : grid) {
            const double num =
                risk_fixed(sd, *beta0, prior, Estimator::flow, TuningValue::flow(t), out_flavor)
                    .total;
            const double den = risk_fixed(sd, *beta0, prior, Estimator::ridge,
                                          TuningValue::ridge(1.0 / t), out_flavor)
                                   .total;
            std::cout << io::format_double(t) << ',' << io::format_double(num / den) << "\n";
          }
        }
      }

      detail::emit(bd_out, [&](std::ostream& out) { io::write_certificates_json(out, certs, meta); });
      bool all_hold = true;
      for (const auto& cert : certs) all_hold = all_hold && cert.holds;
      if (!all_hold) {
        std::cerr << "bounds: a certified bound FAILED\n";
        return 2;
      }
      return 0;
    }

    if (cmd_simulate->parsed() || cmd_calibrate->parsed()) {
      const bool simulate = cmd_simulate->parsed();
      detail::DesignFlags& design = simulate ? sim_design : cal_design;
      detail::GridFlags& gridf = simulate ? sim_grid : cal_grid;
      const double sigma2 = simulate ? sim_sigma2 : cal_sigma2;
      const double r2 = simulate ? sim_r2 : cal_r2;
      const RiskFlavor::Kind kind = detail::parse_flavor(simulate ? sim_flavor : cal_flavor);

      if (simulate || design.design_path.empty()) {
        experiments::ExperimentConfig config;
        config.dist = design.parse_dist();
        config.n = design.n;
        config.p = design.p;
        config.rho = design.rho;
        config.sigma2 = sigma2;
        config.r2 = r2;
        config.grid = gridf.build();
        config.seed = design.seed;
        config.flavor = kind;
        const experiments::ExperimentResult result = experiments::run_experiment(config);
        const io::Metadata meta = {{"subcommand", simulate ? "simulate" : "calibrate"},
                                   {"dist", design.dist},
                                   {"n", std::to_string(config.n)},
                                   {"p", std::to_string(config.p)},
                                   {"rho", io::format_double(config.rho)},
                                   {"seed", std::to_string(config.seed)},
                                   {"flavor", to_string(kind)},
                                   {"l2_match_rel_tol", "1e-10"}};
        if (!simulate) {
          detail::emit(cal_out,
                       [&](std::ostream& out) { io::write_pairs_csv(out, result.l2_pairs, meta); });
          return 0;
        }
        namespace fs = std::filesystem;
        fs::create_directories(sim_out_dir);
        std::vector<RiskCurve> curves = {result.flow_curve, result.ridge_curve};
        if (result.flow_limit) curves.push_back(*result.flow_limit);
        if (result.ridge_limit) curves.push_back(*result.ridge_limit);
        io::write_curves_csv((fs::path(sim_out_dir) / "curves.csv").string(), curves, meta,
                             result.flow_limit.has_value());
        io::write_pairs_csv((fs::path(sim_out_dir) / "pairs_l2.csv").string(), result.l2_pairs, meta);
        io::write_summary_json((fs::path(sim_out_dir) / "summary.json").string(), result.summary,
                               meta);
        std::cout << "max_pathwise_ratio=" << io::format_double(result.summary.max_pathwise_ratio)
                  << " ratio_of_minima=" << io::format_double(result.summary.ratio_of_minima)
                  << " max_l2calibrated_ratio="
                  << io::format_double(result.summary.max_l2calibrated_ratio) << "\n";
        return 0;
      }

      // calibrate on an externally supplied design
      const std::vector<double> grid = gridf.build();
      const DesignMatrix X = design.load(grid, sigma2, r2, kind);
      const SpectralData sd = decompose(X);
      const PriorModel prior = PriorModel::make(sigma2, r2, sd.n, sd.p);
      const RiskFlavor flavor = detail::build_flavor(kind, sd.p, design.rho, cal_cov_path);
      const RiskCurve fc = risk_curve(sd, prior, Estimator::flow, grid, flavor);
      const RiskCurve rc = risk_curve(sd, prior, Estimator::ridge, grid, flavor);
      const auto pairs = experiments::calibrate_by_l2(fc, rc, sd, prior, flavor);
      detail::emit(cal_out, [&](std::ostream& out) {
        io::write_pairs_csv(out, pairs,
                            {{"subcommand", "calibrate"},
                             {"design", design.design_path},
                             {"flavor", to_string(kind)},
                             {"l2_match_rel_tol", "1e-10"}});
      });
      return 0;
    }
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 1;
  }
  return 0;
}

}  // namespace flowridge::cli
