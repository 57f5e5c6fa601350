#include <catch2/catch_amalgamated.hpp>

#include <filesystem>
#include <fstream>

#include "flowridge/cli.hpp"

using namespace flowridge;
namespace fs = std::filesystem;

namespace {

int run_cli(std::initializer_list<std::string> args) {
  std::vector<std::string> storage = {"flowridge"};
  storage.insert(storage.end(), args.begin(), args.end());
  std::vector<const char*> argv;
  for (const auto& s : storage) argv.push_back(s.c_str());
  return cli::run(static_cast<int>(argv.size()), argv.data());
}

fs::path scratch_dir() {
  const fs::path dir = fs::temp_directory_path() / "flowridge_cli_tests";
  fs::create_directories(dir);
  return dir;
}

std::string slurp(const fs::path& path) {
  std::ifstream in(path);
  REQUIRE(in.good());
  std::ostringstream buf;
  buf << in.rdbuf();
  return buf.str();
}

}  // namespace

TEST_CASE("usage errors exit with status 1") {
  CHECK(run_cli({}) == 1);
  CHECK(run_cli({"no-such-subcommand"}) == 1);
  CHECK(run_cli({"riskcurve", "--no-such-flag"}) == 1);
  CHECK(run_cli({"--help"}) == 0);
}

TEST_CASE("constants subcommand writes the recomputed table") {
  const fs::path out = scratch_dir() / "constants.json";
  REQUIRE(run_cli({"constants", "-o", out.string()}) == 0);
  std::ifstream in(out);
  nlohmann::json doc;
  in >> doc;
  CHECK(std::abs(doc["c1"].get<double>() - 1.2985) < 1e-3);
  CHECK(std::abs(doc["C"].get<double>() - 0.4634) < 1e-3);
  CHECK(std::abs(doc["c1_squared"].get<double>() - 1.6862) < 2e-3);
  CHECK(std::abs(doc["one_plus_C_squared"].get<double>() - 1.2147) < 1e-3);
}

TEST_CASE("riskcurve rejects an empty design CSV with exit 1") {
  const fs::path csv = scratch_dir() / "empty.csv";
  std::ofstream(csv.string()) << "";
  CHECK(run_cli({"riskcurve", "--design", csv.string()}) == 1);
  const fs::path header_only = scratch_dir() / "header_only.csv";
  std::ofstream(header_only.string()) << "x1,x2\n";
  CHECK(run_cli({"riskcurve", "--design", header_only.string(), "--csv-header"}) == 1);
}

TEST_CASE("riskcurve round-trips through the CSV reader") {
  const fs::path out = scratch_dir() / "curves.csv";
  REQUIRE(run_cli({"riskcurve", "--dist", "gaussian", "--n", "30", "--p", "20", "--seed", "3",
                   "--grid-n", "50", "-o", out.string()}) == 0);
  const auto curves = io::read_curves_csv(out.string());
  REQUIRE(curves.size() == 2);
  CHECK(curves[0].estimator == Estimator::flow);
  CHECK(curves[1].estimator == Estimator::ridge);
  REQUIRE(curves[0].size() == 50);

  // the written numbers equal the in-process evaluation bit for bit
  experiments::ExperimentConfig config;
  config.n = 30;
  config.p = 20;
  config.seed = 3;
  config.grid = log_spaced_grid(std::pow(2.0, -10), std::pow(2.0, 10), 50);
  const DesignMatrix X = experiments::generate_design(config);
  const SpectralData sd = decompose(X);
  const PriorModel prior = PriorModel::make(1.0, 1.0, 30, 20);
  const RiskCurve direct =
      risk_curve(sd, prior, Estimator::flow, config.grid, RiskFlavor::estimation());
  for (std::size_t k = 0; k < direct.size(); ++k) {
    CHECK(curves[0].points[k].total == direct.points[k].total);
    CHECK(curves[0].l2_norm[k] == direct.l2_norm[k]);
  }
}

TEST_CASE("bounds --curves reproduces the in-process certificate exactly") {
  const fs::path curves_csv = scratch_dir() / "for_bounds.csv";
  REQUIRE(run_cli({"riskcurve", "--dist", "student-t3", "--n", "25", "--p", "35", "--seed", "11",
                   "--grid-n", "80", "-o", curves_csv.string()}) == 0);
  const fs::path cert_json = scratch_dir() / "cert.json";
  REQUIRE(run_cli({"bounds", "--curves", curves_csv.string(), "-o", cert_json.string()}) == 0);

  nlohmann::json doc;
  std::ifstream(cert_json.string()) >> doc;
  REQUIRE(doc["certificates"].size() == 1);
  const auto& cert = doc["certificates"][0];
  CHECK(cert["bound_name"] == "pathwise-1.6862");
  CHECK(cert["holds"].get<bool>());

  experiments::ExperimentConfig config;
  config.dist = experiments::Distribution::student_t3;
  config.n = 25;
  config.p = 35;
  config.seed = 11;
  config.grid = log_spaced_grid(std::pow(2.0, -10), std::pow(2.0, 10), 80);
  const DesignMatrix X = experiments::generate_design(config);
  const SpectralData sd = decompose(X);
  const PriorModel prior = PriorModel::make(1.0, 1.0, 25, 35);
  const auto direct =
      bounds::pathwise_ratio_check(sd, prior, RiskFlavor::estimation(), config.grid);
  CHECK(cert["max_observed_ratio"].get<double>() == direct.max_observed_ratio);
  CHECK(cert["witness"].get<double>() == direct.witness);
}

TEST_CASE("bounds exits 2 when a certified bound fails") {
  // doctor a curves file: inflate the flow totals far beyond the bound
  const fs::path curves_csv = scratch_dir() / "doctored_src.csv";
  REQUIRE(run_cli({"riskcurve", "--dist", "gaussian", "--n", "15", "--p", "10", "--seed", "2",
                   "--grid-n", "20", "-o", curves_csv.string()}) == 0);
  auto curves = io::read_curves_csv(curves_csv.string());
  REQUIRE(curves.size() == 2);
  for (auto& pt : curves[0].points) pt.total *= 10.0;
  const fs::path doctored = scratch_dir() / "doctored.csv";
  io::write_curves_csv(doctored.string(), curves, {});
  CHECK(run_cli({"bounds", "--curves", doctored.string(), "-o",
                 (scratch_dir() / "doctored_cert.json").string()}) == 2);
}

TEST_CASE("bounds certifies a generated design end to end") {
  const fs::path cert_json = scratch_dir() / "full_cert.json";
  REQUIRE(run_cli({"bounds", "--dist", "gaussian", "--n", "20", "--p", "12", "--seed", "5",
                   "--rho", "0.5", "--random-beta0", "--grid-n", "60", "-o",
                   cert_json.string()}) == 0);
  nlohmann::json doc;
  std::ifstream(cert_json.string()) >> doc;
  REQUIRE(doc["certificates"].size() == 10);
  for (const auto& cert : doc["certificates"]) CHECK(cert["holds"].get<bool>());
}

TEST_CASE("simulate writes curves, pairs, and summary deterministically") {
  const fs::path dir1 = scratch_dir() / "sim1";
  const fs::path dir2 = scratch_dir() / "sim2";
  for (const auto& dir : {dir1, dir2}) {
    REQUIRE(run_cli({"simulate", "--dist", "bernoulli-half", "--n", "30", "--p", "45", "--seed",
                     "9", "--grid-n", "40", "--out-dir", dir.string()}) == 0);
    CHECK(fs::exists(dir / "curves.csv"));
    CHECK(fs::exists(dir / "pairs_l2.csv"));
    CHECK(fs::exists(dir / "summary.json"));
  }
  CHECK(slurp(dir1 / "curves.csv") == slurp(dir2 / "curves.csv"));
  CHECK(slurp(dir1 / "pairs_l2.csv") == slurp(dir2 / "pairs_l2.csv"));
  CHECK(slurp(dir1 / "summary.json") == slurp(dir2 / "summary.json"));

  nlohmann::json summary;
  std::ifstream((dir1 / "summary.json").string()) >> summary;
  CHECK(summary["summary"]["max_pathwise_ratio"].get<double>() > 1.0);
  CHECK(summary["summary"]["ratio_of_minima"].get<double>() >= 1.0 - 1e-6);

  // the curves file carries the asymptotic overlay for rho = 0
  const auto curves = io::read_curves_csv((dir1 / "curves.csv").string());
  REQUIRE(curves.size() == 4);
  CHECK(curves[2].is_limit);
  CHECK(curves[3].is_limit);
}

TEST_CASE("calibrate emits matched rows") {
  const fs::path out = scratch_dir() / "pairs.csv";
  REQUIRE(run_cli({"calibrate", "--dist", "gaussian", "--n", "25", "--p", "15", "--seed", "13",
                   "--grid-n", "30", "-o", out.string()}) == 0);
  const std::string text = slurp(out);
  CHECK(text.find("t,lambda,norm,risk_flow,risk_ridge,ratio,matched") != std::string::npos);
  CHECK(text.find("true") != std::string::npos);
}

TEST_CASE("heatmap grid matches the shrinkage maps with lambda = 1/kappa") {
  const fs::path out = scratch_dir() / "heatmap.csv";
  REQUIRE(run_cli({"heatmap", "--s-lo", "0", "--s-hi", "4", "--s-n", "5", "--grid-lo", "0.5",
                   "--grid-hi", "2", "--grid-n", "3", "-o", out.string()}) == 0);
  std::ifstream in(out);
  std::string line;
  std::vector<std::vector<std::string>> rows;
  while (std::getline(in, line)) {
    if (line.empty() || line[0] == '#') continue;
    rows.push_back(io::split_csv_line(line));
  }
  REQUIRE(rows.size() == 1 + 5 * 3);
  CHECK(rows[0] == std::vector<std::string>{"s", "kappa", "g_ridge", "g_flow"});
  for (std::size_t r = 1; r < rows.size(); ++r) {
    const double s = io::parse_double(rows[r][0], "test");
    const double kappa = io::parse_double(rows[r][1], "test");
    CHECK(io::parse_double(rows[r][2], "test") ==
          Catch::Approx(shrinkage_map(Estimator::ridge, s, 1.0 / kappa)).margin(1e-15));
    CHECK(io::parse_double(rows[r][3], "test") ==
          Catch::Approx(shrinkage_map(Estimator::flow, s, kappa)).margin(1e-15));
  }
}

TEST_CASE("asymptotic subcommand emits limiting curves with the limit column") {
  const fs::path out = scratch_dir() / "limits.csv";
  REQUIRE(run_cli({"asymptotic", "--gamma", "2", "--grid-n", "25", "-o", out.string()}) == 0);
  const auto curves = io::read_curves_csv(out.string());
  REQUIRE(curves.size() == 2);
  CHECK(curves[0].is_limit);
  CHECK(curves[1].is_limit);
  // totals agree with the direct limiting-risk evaluation (the CLI sums the
  // bias and variance integrals separately, so allow rounding slack)
  const mp::MPLaw law = mp::mp_law(2.0);
  const double first = curves[0].points.front().total;
  const double direct = mp::limiting_bayes_risk(law, 0.5, 1.0, Estimator::flow,
                                                TuningValue::flow(curves[0].points.front().tuning.value));
  CHECK(first == Catch::Approx(direct).epsilon(1e-12));
}

TEST_CASE("config file supplies flags as flat key=value lines") {
  const fs::path cfg = scratch_dir() / "sim.cfg";
  std::ofstream(cfg.string()) << "dist = gaussian\nn = 20\np = 10\nseed = 4\ngrid-n = 15\n";
  const fs::path dir = scratch_dir() / "sim_cfg";
  REQUIRE(run_cli({"simulate", "--config", cfg.string(), "--out-dir", dir.string()}) == 0);
  const auto curves = io::read_curves_csv((dir / "curves.csv").string());
  REQUIRE(curves.front().size() == 15);

  // explicit command-line flags override config values
  const fs::path dir2 = scratch_dir() / "sim_cfg2";
  REQUIRE(run_cli({"simulate", "--config", cfg.string(), "--grid-n", "12", "--out-dir",
                   dir2.string()}) == 0);
  const auto curves2 = io::read_curves_csv((dir2 / "curves.csv").string());
  REQUIRE(curves2.front().size() == 12);

  CHECK(run_cli({"simulate", "--config", (scratch_dir() / "missing.cfg").string()}) == 1);
}
