#pragma once

#include <cstdio>
#include <fstream>
#include <map>
#include <sstream>
#include <string>
#include <utility>
#include <vector>

#include <json.hpp>

#include "flowridge/bounds.hpp"
#include "flowridge/experiments.hpp"
#include "flowridge/risk.hpp"

namespace flowridge::io {

using Metadata = std::vector<std::pair<std::string, std::string>>;

/// Doubles are printed with 17 significant digits so CSV round-trips are
/// bit-exact.
inline std::string format_double(double v) {
  char buf[40];
  std::snprintf(buf, sizeof(buf), "%.17g", v);
  return buf;
}

inline double parse_double(const std::string& field, const char* context) {
  const char* begin = field.c_str();
  char* end = nullptr;
  const double v = std::strtod(begin, &end);
  while (end && *end == ' ') ++end;
  if (end == begin || (end && *end != '\0'))
    throw std::runtime_error(std::string(context) + ": cannot parse number '" + field + "'");
  return v;
}

inline std::vector<std::string> split_csv_line(const std::string& line) {
  std::vector<std::string> fields;
  std::string field;
  std::istringstream in(line);
  while (std::getline(in, field, ',')) {
    const auto first = field.find_first_not_of(" \t\r");
    const auto last = field.find_last_not_of(" \t\r");
    fields.push_back(first == std::string::npos ? "" : field.substr(first, last - first + 1));
  }
  if (!line.empty() && line.back() == ',') fields.emplace_back();
  return fields;
}

inline void write_metadata(std::ostream& out, const Metadata& meta) {
  out << "# flowridge " << kVersion << "\n";
  for (const auto& [key, value] : meta) out << "# " << key << ": " << value << "\n";
}

/// Reads a design matrix from CSV: one row per observation, numeric fields.
/// Lines starting with '#' are skipped; `has_header` drops the first
/// remaining line.
inline Eigen::MatrixXd read_design_csv(const std::string& path, bool has_header = false) {
  std::ifstream in(path);
  if (!in) throw std::runtime_error("cannot open design CSV: " + path);
  std::vector<std::vector<double>> rows;
  std::string line;
  bool header_pending = has_header;
  while (std::getline(in, line)) {
    if (line.empty() || line[0] == '#') continue;
    if (header_pending) {
      header_pending = false;
      continue;
    }
    const std::vector<std::string> fields = split_csv_line(line);
    std::vector<double> row;
    row.reserve(fields.size());
    for (const std::string& f : fields) row.push_back(parse_double(f, "design CSV"));
    if (!rows.empty() && row.size() != rows.front().size())
      throw std::runtime_error("design CSV: ragged rows in " + path);
    rows.push_back(std::move(row));
  }
  if (rows.empty() || rows.front().empty())
    throw std::runtime_error("design CSV: no data rows in " + path);
  Eigen::MatrixXd X(static_cast<Eigen::Index>(rows.size()),
                    static_cast<Eigen::Index>(rows.front().size()));
  for (Eigen::Index i = 0; i < X.rows(); ++i)
    for (Eigen::Index j = 0; j < X.cols(); ++j) X(i, j) = rows[i][j];
  return X;
}

/// Reads a single-column (or single-row) numeric CSV as a vector.
inline Eigen::VectorXd read_vector_csv(const std::string& path) {
  const Eigen::MatrixXd m = read_design_csv(path, false);
  if (m.cols() == 1) return m.col(0);
  if (m.rows() == 1) return m.row(0).transpose();
  throw std::runtime_error("vector CSV: expected a single column in " + path);
}

/// Writes risk curves with the schema
/// estimator,flavor,calibration,tuning,bias_sq,variance,total,l2_norm[,limit].
/// The limit column appears when `with_limit_column` or any curve is a
/// limiting curve.
inline void write_curves_csv(std::ostream& out, const std::vector<RiskCurve>& curves,
                             const Metadata& meta, bool with_limit_column = false) {
  for (const RiskCurve& c : curves) with_limit_column = with_limit_column || c.is_limit;
  write_metadata(out, meta);
  out << "estimator,flavor,calibration,tuning,bias_sq,variance,total,l2_norm";
  if (with_limit_column) out << ",limit";
  out << "\n";
  for (const RiskCurve& curve : curves) {
    for (std::size_t k = 0; k < curve.size(); ++k) {
      const RiskPoint& pt = curve.points[k];
      out << to_string(curve.estimator) << ',' << to_string(curve.flavor) << ','
          << curve.calibration << ',' << format_double(pt.tuning.value) << ','
          << format_double(pt.bias_sq) << ',' << format_double(pt.variance) << ','
          << format_double(pt.total) << ','
          << format_double(k < curve.l2_norm.size() ? curve.l2_norm[k] : 0.0);
      if (with_limit_column) out << ',' << (curve.is_limit ? "true" : "false");
      out << "\n";
    }
  }
}

inline void write_curves_csv(const std::string& path, const std::vector<RiskCurve>& curves,
                             const Metadata& meta, bool with_limit_column = false) {
  std::ofstream out(path);
  if (!out) throw std::runtime_error("cannot open output file: " + path);
  write_curves_csv(out, curves, meta, with_limit_column);
}

/// Reads curves written by write_curves_csv, grouping consecutive rows that
/// share (estimator, flavor, calibration, limit).
inline std::vector<RiskCurve> read_curves_csv(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw std::runtime_error("cannot open curves CSV: " + path);
  std::string line;
  std::vector<std::string> header;
  while (std::getline(in, line)) {
    if (line.empty() || line[0] == '#') continue;
    header = split_csv_line(line);
    break;
  }
  std::map<std::string, std::size_t> col;
  for (std::size_t i = 0; i < header.size(); ++i) col[header[i]] = i;
  for (const char* required : {"estimator", "flavor", "tuning", "bias_sq", "variance", "total"})
    if (!col.count(required))
      throw std::runtime_error(std::string("curves CSV: missing column ") + required);

  std::vector<RiskCurve> curves;
  while (std::getline(in, line)) {
    if (line.empty() || line[0] == '#') continue;
    const std::vector<std::string> fields = split_csv_line(line);
    if (fields.size() != header.size())
      throw std::runtime_error("curves CSV: row width does not match header");
    const std::string& est_name = fields[col["estimator"]];
    Estimator est;
    if (est_name == "flow")
      est = Estimator::flow;
    else if (est_name == "ridge")
      est = Estimator::ridge;
    else
      throw std::runtime_error("curves CSV: unknown estimator '" + est_name + "'");
    const std::string& flavor_name = fields[col["flavor"]];
    RiskFlavor::Kind flavor;
    if (flavor_name == "estimation")
      flavor = RiskFlavor::Kind::estimation;
    else if (flavor_name == "in-sample")
      flavor = RiskFlavor::Kind::in_sample;
    else if (flavor_name == "out-of-sample")
      flavor = RiskFlavor::Kind::out_of_sample;
    else
      throw std::runtime_error("curves CSV: unknown flavor '" + flavor_name + "'");
    const std::string calibration = col.count("calibration") ? fields[col["calibration"]] : "native";
    const bool limit = col.count("limit") && fields[col["limit"]] == "true";

    RiskPoint pt;
    const double tuning = parse_double(fields[col["tuning"]], "curves CSV");
    pt.tuning = est == Estimator::flow ? TuningValue::flow(tuning) : TuningValue::ridge(tuning);
    pt.bias_sq = parse_double(fields[col["bias_sq"]], "curves CSV");
    pt.variance = parse_double(fields[col["variance"]], "curves CSV");
    pt.total = parse_double(fields[col["total"]], "curves CSV");
    const double l2 = col.count("l2_norm") ? parse_double(fields[col["l2_norm"]], "curves CSV") : 0.0;

    if (curves.empty() || curves.back().estimator != est || curves.back().flavor != flavor ||
        curves.back().calibration != calibration || curves.back().is_limit != limit) {
      RiskCurve c;
      c.estimator = est;
      c.flavor = flavor;
      c.calibration = calibration;
      c.is_limit = limit;
      curves.push_back(std::move(c));
    }
    curves.back().points.push_back(pt);
    curves.back().l2_norm.push_back(l2);
  }
  if (curves.empty()) throw std::runtime_error("curves CSV: no data rows in " + path);
  return curves;
}

/// l2-calibrated pair rows: t,lambda,norm,risk_flow,risk_ridge,ratio,matched.
inline void write_pairs_csv(std::ostream& out, const std::vector<experiments::CalibratedPair>& rows,
                            const Metadata& meta) {
  write_metadata(out, meta);
  out << "t,lambda,norm,risk_flow,risk_ridge,ratio,matched\n";
  for (const auto& row : rows) {
    out << format_double(row.t) << ',' << format_double(row.lambda) << ','
        << format_double(row.norm) << ',' << format_double(row.risk_flow) << ','
        << format_double(row.risk_ridge) << ',' << format_double(row.ratio) << ','
        << (row.matched ? "true" : "false") << "\n";
  }
}

inline void write_pairs_csv(const std::string& path,
                            const std::vector<experiments::CalibratedPair>& rows,
                            const Metadata& meta) {
  std::ofstream out(path);
  if (!out) throw std::runtime_error("cannot open output file: " + path);
  write_pairs_csv(out, rows, meta);
}

inline nlohmann::json certificate_to_json(const bounds::BoundCertificate& cert) {
  return nlohmann::json{{"bound_name", bounds::to_string(cert.name)},
                        {"constant", cert.constant},
                        {"max_observed_ratio", cert.max_observed_ratio},
                        {"witness", cert.witness},
                        {"holds", cert.holds}};
}

inline void write_certificates_json(std::ostream& out,
                                    const std::vector<bounds::BoundCertificate>& certs,
                                    const Metadata& meta) {
  nlohmann::json doc;
  doc["meta"] = {{"version", kVersion}};
  for (const auto& [key, value] : meta) doc["meta"][key] = value;
  doc["certificates"] = nlohmann::json::array();
  for (const auto& cert : certs) doc["certificates"].push_back(certificate_to_json(cert));
  out << doc.dump(2) << "\n";
}

inline void write_certificates_json(const std::string& path,
                                    const std::vector<bounds::BoundCertificate>& certs,
                                    const Metadata& meta) {
  std::ofstream out(path);
  if (!out) throw std::runtime_error("cannot open output file: " + path);
  write_certificates_json(out, certs, meta);
}

inline void write_summary_json(std::ostream& out, const experiments::RatioSummary& summary,
                               const Metadata& meta) {
  const experiments::ExperimentConfig& config = summary.config;
  nlohmann::json doc;
  doc["meta"] = {{"version", kVersion}};
  for (const auto& [key, value] : meta) doc["meta"][key] = value;
  doc["config"] = {{"dist", experiments::to_string(config.dist)},
                   {"n", config.n},
                   {"p", config.p},
                   {"rho", config.rho},
                   {"sigma2", config.sigma2},
                   {"r2", config.r2},
                   {"seed", config.seed},
                   {"flavor", to_string(config.flavor)},
                   {"grid_points", config.grid.size()},
                   {"grid_lo", config.grid.empty() ? 0.0 : config.grid.front()},
                   {"grid_hi", config.grid.empty() ? 0.0 : config.grid.back()}};
  doc["summary"] = {{"max_pathwise_ratio", summary.max_pathwise_ratio},
                    {"ratio_of_minima", summary.ratio_of_minima},
                    {"max_l2calibrated_ratio", summary.max_l2calibrated_ratio}};
  out << doc.dump(2) << "\n";
}

inline void write_summary_json(const std::string& path, const experiments::RatioSummary& summary,
                               const Metadata& meta) {
  std::ofstream out(path);
  if (!out) throw std::runtime_error("cannot open output file: " + path);
  write_summary_json(out, summary, meta);
}

}  // namespace flowridge::io
