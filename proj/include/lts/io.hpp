/**
 * @file io.hpp
 * CSV ingestion and JSON / CSV emission of fits, regions and studies.
 */
#pragma once

#include <charconv>
#include <fstream>
#include <sstream>
#include <string>
#include <string_view>
#include <vector>

#include <nlohmann/json.hpp>

#include "lts/error.hpp"
#include "lts/inference.hpp"
#include "lts/model.hpp"
#include "lts/montecarlo.hpp"
#include "lts/population.hpp"
#include "lts/solver.hpp"

namespace lts {

using Json = nlohmann::ordered_json;

namespace detail {

inline std::string_view trim_ws(std::string_view s) {
  while (!s.empty() && (s.front() == ' ' || s.front() == '\t')) s.remove_prefix(1);
  while (!s.empty() && (s.back() == ' ' || s.back() == '\t' || s.back() == '\r')) s.remove_suffix(1);
  return s;
}

inline std::vector<std::string> split_csv_line(std::string_view line) {
  std::vector<std::string> cells;
  std::size_t start = 0;
  while (true) {
    const std::size_t comma = line.find(',', start);
    std::string_view cell = trim_ws(line.substr(start, comma == std::string_view::npos ? line.npos : comma - start));
    if (cell.size() >= 2 && cell.front() == '"' && cell.back() == '"') cell = cell.substr(1, cell.size() - 2);
    cells.emplace_back(cell);
    if (comma == std::string_view::npos) break;
    start = comma + 1;
  }
  return cells;
}

}  // namespace detail

/// Parses a header-led, comma-delimited numeric table. The response column
/// becomes y, all other columns become carriers in header order, and the
/// intercept column is prepended. Requires n > 2p.
inline Dataset parse_dataset(std::istream& in, const std::string& response, const std::string& source = "<input>") {
  std::string line;
  std::size_t line_no = 0;
  std::vector<std::string> header;
  while (std::getline(in, line)) {
    ++line_no;
    if (!detail::trim_ws(line).empty()) {
      header = detail::split_csv_line(line);
      break;
    }
  }
  if (header.empty()) fail(ErrorCode::ParseError, source + ": missing header row");
  std::ptrdiff_t response_col = -1;
  for (std::size_t c = 0; c < header.size(); ++c) {
    if (header[c] == response) response_col = static_cast<std::ptrdiff_t>(c);
  }
  if (response_col < 0) fail(ErrorCode::ParseError, source + ": response column '" + response + "' not in header");

  std::vector<std::vector<double>> rows;
  while (std::getline(in, line)) {
    ++line_no;
    if (detail::trim_ws(line).empty()) continue;
    const auto cells = detail::split_csv_line(line);
    const std::size_t row_index = rows.size() + 1;
    if (cells.size() != header.size()) {
      fail(ErrorCode::ParseError, source + ": row " + std::to_string(row_index) + " (line " +
                                      std::to_string(line_no) + ") has " + std::to_string(cells.size()) +
                                      " fields, expected " + std::to_string(header.size()));
    }
    std::vector<double> values(cells.size());
    for (std::size_t c = 0; c < cells.size(); ++c) {
      const std::string& cell = cells[c];
      const auto [ptr, ec] = std::from_chars(cell.data(), cell.data() + cell.size(), values[c]);
      if (cell.empty() || ec != std::errc() || ptr != cell.data() + cell.size() || !std::isfinite(values[c])) {
        fail(ErrorCode::NonNumericCell, source + ": row " + std::to_string(row_index) + " (line " +
                                            std::to_string(line_no) + "), column '" + header[c] +
                                            "': cannot parse '" + cell + "' as a number");
      }
    }
    rows.push_back(std::move(values));
  }

  const auto n = static_cast<Index>(rows.size());
  const auto p = static_cast<Index>(header.size());  // intercept replaces the response column
  if (n <= 2 * p) {
    fail(ErrorCode::TooFewRows, source + ": n = " + std::to_string(n) + " rows but p = " + std::to_string(p) +
                                    " coefficients; need n > 2p");
  }
  Vector y(n);
  DesignMatrix w(n, p);
  for (Index i = 0; i < n; ++i) {
    const auto& r = rows[static_cast<std::size_t>(i)];
    y(i) = r[static_cast<std::size_t>(response_col)];
    w(i, 0) = 1.0;
    Index col = 1;
    for (std::size_t c = 0; c < r.size(); ++c) {
      if (static_cast<std::ptrdiff_t>(c) != response_col) w(i, col++) = r[c];
    }
  }
  return Dataset(std::move(y), std::move(w));
}

inline Dataset load_dataset(const std::string& path, const std::string& response) {
  std::ifstream in(path);
  if (!in) fail(ErrorCode::ParseError, "cannot open '" + path + "'");
  return parse_dataset(in, response, path);
}

// ---------------------------------------------------------------------------
// JSON
// ---------------------------------------------------------------------------

inline Json vector_json(const Eigen::Ref<const Vector>& v) {
  Json a = Json::array();
  for (Index i = 0; i < v.size(); ++i) a.push_back(v(i));
  return a;
}

inline Json matrix_json(const Eigen::Ref<const Matrix>& m) {
  Json a = Json::array();
  for (Index i = 0; i < m.rows(); ++i) a.push_back(vector_json(Vector(m.row(i).transpose())));
  return a;
}

inline Json to_json(const LtsFit& f) {
  Json j;
  j["beta"] = vector_json(f.beta);
  j["objective"] = f.objective_value;
  j["subset"] = f.subset.indices;
  j["boundary"] = f.subset.boundary;
  j["iterations"] = f.iterations;
  j["converged"] = f.converged;
  j["start_index"] = f.start_index;
  return j;
}

inline Json to_json(const AsymptoticConstants& k) {
  Json j;
  j["alpha"] = k.alpha;
  j["c"] = k.c;
  j["C"] = k.C;
  j["C1"] = k.C1;
  j["sigma"] = k.sigma;
  j["cov_factor"] = k.cov_factor;
  return j;
}

inline Json to_json(const NormalBallRegion& b) {
  Json j;
  j["center"] = vector_json(b.center);
  j["radius"] = b.radius;
  j["gamma"] = b.gamma;
  j["mode"] = to_string(b.mode);
  return j;
}

inline Json to_json(const DepthRegion& r) {
  Json j;
  Json cloud = Json::array();
  for (const auto& b : r.cloud) cloud.push_back(vector_json(b));
  j["gamma"] = r.gamma;
  j["n_directions"] = r.directions.rows();
  j["threshold"] = r.threshold;
  j["cloud"] = std::move(cloud);
  j["depths"] = r.depths;
  j["retained"] = r.retained;
  if (auto hull = region_hull(r)) {
    Json verts = Json::array();
    for (const auto& v : hull->vertices) verts.push_back(vector_json(v));
    j["hull"] = Json{{"method", hull->method}, {"vertices", std::move(verts)}};
  }
  return j;
}

inline Json to_json(const GenSpec& s) {
  Json j;
  j["n"] = s.n;
  j["p"] = s.p;
  j["beta0"] = vector_json(s.beta0);
  j["sigma"] = s.sigma;
  j["design"] = design_name(s.design);
  j["contamination"] = contamination_name(s.contamination);
  j["eps"] = contamination_eps(s.contamination);
  return j;
}

/// Summary document. Elapsed time is left out so identical runs serialize
/// identically.
inline Json summary_json(const StudyResult& r) {
  Json j;
  j["kind"] = r.kind;
  j["spec"] = to_json(r.spec);
  j["alpha"] = r.alpha;
  j["reps"] = r.reps;
  j["seed"] = r.seed;
  j["solver"] = Json{{"n_starts", r.solver.n_starts}, {"max_csteps", r.solver.max_csteps},
                     {"tol_objective", r.solver.tol_objective}};
  if (r.consistency) {
    const auto& c = *r.consistency;
    j["n_grid"] = c.n_grid;
    j["median_error"] = c.median_error;
    j["decreasing"] = c.decreasing;
  }
  if (r.normality) {
    const auto& s = *r.normality;
    j["n"] = s.n;
    j["mean"] = vector_json(s.mean);
    j["covariance"] = matrix_json(s.covariance);
    j["max_abs_offdiag"] = s.max_abs_offdiag;
    j["skewness"] = vector_json(s.skewness);
    j["anderson_darling"] = vector_json(s.anderson_darling);
    j["anderson_darling_critical_1pct"] = s.ad_critical_1pct;
    j["anderson_darling_pass"] = s.ad_pass;
    j["formula_constants"] = to_json(s.constants);
    j["formula_covariance_diagonal"] = s.constants.cov_factor;
    if (s.rate_ratio) {
      j["covariance_4n"] = matrix_json(*s.covariance_4n);
      j["rate_ratio"] = matrix_json(*s.rate_ratio);
    }
  }
  return j;
}

/// One row per replication: rep_id, n, beta_0..beta_{p-1}, objective, iterations.
inline void write_records_csv(std::ostream& out, const StudyResult& r) {
  out << "rep_id,n";
  for (Index k = 0; k < r.spec.p; ++k) out << ",beta_" << k;
  out << ",objective,iterations\n";
  std::ostringstream line;
  line.precision(17);
  for (const auto& rec : r.records) {
    line.str("");
    line << rec.rep << ',' << rec.n;
    for (Index k = 0; k < rec.beta.size(); ++k) line << ',' << rec.beta(k);
    line << ',' << rec.objective << ',' << rec.iterations << '\n';
    out << line.str();
  }
}

}  // namespace lts
