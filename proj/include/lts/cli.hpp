/**
 * @file cli.hpp
 * Command dispatch for the `lts` tool. Kept in the library so that the
 * dispatcher can be driven directly from tests.
 */
#pragma once

#include <chrono>
#include <ctime>
#include <fstream>
#include <iostream>
#include <optional>
#include <sstream>
#include <string>
#include <vector>

#include "lts/error.hpp"
#include "lts/inference.hpp"
#include "lts/io.hpp"
#include "lts/montecarlo.hpp"
#include "lts/population.hpp"
#include "lts/solver.hpp"

namespace lts::cli {

inline constexpr const char* kVersion = "lts-toolkit 0.1.0";

inline const std::vector<std::string>& commands() {
  static const std::vector<std::string> names = {"fit",
                                                 "enumerate",
                                                 "influence",
                                                 "constants",
                                                 "simulate-consistency",
                                                 "simulate-normality",
                                                 "ci-normal",
                                                 "ci-bootstrap"};
  return names;
}

namespace exit_code {
inline constexpr int kOk = 0;
inline constexpr int kUsage = 2;
inline constexpr int kParse = 3;
inline constexpr int kNumeric = 4;
inline constexpr int kResource = 5;
}  // namespace exit_code

inline int exit_code_for(ErrorCode code) {
  switch (code) {
    case ErrorCode::ParseError:
    case ErrorCode::NonNumericCell:
    case ErrorCode::TooFewRows:
      return exit_code::kParse;
    case ErrorCode::SingularMatrix:
    case ErrorCode::OnPieceBoundary:
    case ErrorCode::AllStartsDegenerate:
    case ErrorCode::QuadratureFailure:
    case ErrorCode::ResampleExhausted:
      return exit_code::kNumeric;
    case ErrorCode::TooManySubsets:
      return exit_code::kResource;
    case ErrorCode::DomainError:
    case ErrorCode::DimensionMismatch:
    case ErrorCode::UsageError:
      return exit_code::kUsage;
  }
  return exit_code::kUsage;
}

struct RunConfig {
  std::string command;
  std::string input;
  std::string response = "y";
  double alpha = 0.75;
  std::optional<double> sigma;
  double gamma = 0.05;
  std::uint64_t seed = 1;
  std::optional<int> n_starts;  // 500 for single fits, 50 inside studies and bootstrap
  int m = 500;
  int reps = 200;
  std::string mode = "corrected";
  std::string output;  // empty = stdout
  std::string format = "json";
  unsigned threads = 0;
  // Simulation and influence inputs.
  Index n = 1000;
  Index p = 2;
  std::vector<Index> n_grid = {100, 1000, 10000};
  std::vector<double> beta0;  // empty = zeros
  std::vector<double> point;  // (s0', t0)
  int directions = 0;         // 0 = 1000 p
  bool rate_check = false;
};

namespace detail {

inline int effective_starts(const RunConfig& c) {
  if (c.n_starts) return *c.n_starts;
  const bool study = c.command == "simulate-consistency" || c.command == "simulate-normality" ||
                     c.command == "ci-bootstrap";
  return study ? 50 : 500;
}

inline SolverConfig solver_config(const RunConfig& c) {
  SolverConfig s;
  s.n_starts = effective_starts(c);
  s.seed = c.seed;
  s.threads = c.threads;
  return s;
}

inline double require_sigma(const RunConfig& c) {
  if (!c.sigma) fail(ErrorCode::UsageError, "--sigma is required for '" + c.command + "'");
  return *c.sigma;
}

inline void require_input(const RunConfig& c) {
  if (c.input.empty()) fail(ErrorCode::UsageError, "--input is required for '" + c.command + "'");
}

inline Json config_echo(const RunConfig& c) {
  Json j;
  j["command"] = c.command;
  j["input"] = c.input;
  j["response"] = c.response;
  j["alpha"] = c.alpha;
  j["sigma"] = c.sigma ? Json(*c.sigma) : Json(nullptr);
  j["gamma"] = c.gamma;
  j["seed"] = c.seed;
  j["starts"] = effective_starts(c);
  j["m"] = c.m;
  j["reps"] = c.reps;
  j["mode"] = c.mode;
  j["format"] = c.format;
  j["n"] = c.n;
  j["p"] = c.p;
  j["n_grid"] = c.n_grid;
  j["beta0"] = c.beta0;
  j["point"] = c.point;
  j["directions"] = c.directions;
  j["rate_check"] = c.rate_check;
  return j;
}

inline std::string utc_now() {
  const auto now = std::chrono::system_clock::to_time_t(std::chrono::system_clock::now());
  std::tm tm{};
  gmtime_r(&now, &tm);
  char buf[32];
  std::strftime(buf, sizeof(buf), "%Y-%m-%dT%H:%M:%SZ", &tm);
  return buf;
}

inline GenSpec study_spec(const RunConfig& c) {
  GenSpec spec;
  spec.n = c.n;
  spec.p = c.p;
  spec.sigma = c.sigma.value_or(1.0);
  if (c.beta0.empty()) {
    spec.beta0 = Vector::Zero(c.p);
  } else {
    spec.beta0 = Eigen::Map<const Vector>(c.beta0.data(), static_cast<Index>(c.beta0.size()));
  }
  return spec;
}

struct Artifact {
  Json results;
  std::optional<std::string> csv;
};

inline Json fit_results(const Dataset& data, const TrimSpec& trim, const LtsFit& f) {
  Json j = to_json(f);
  j["n"] = data.n();
  j["p"] = data.p();
  j["h"] = trim.h;
  j["stationarity"] = check_stationarity(data, f, trim);
  j["scaled_stationarity"] = scaled_stationarity(data, f.beta, trim);
  return j;
}

inline std::string fit_csv(const LtsFit& f) {
  std::ostringstream out;
  out.precision(17);
  out << "coefficient,value\n";
  for (Index k = 0; k < f.beta.size(); ++k) out << "beta_" << k << ',' << f.beta(k) << '\n';
  out << "objective," << f.objective_value << '\n';
  return out.str();
}

inline Artifact dispatch(const RunConfig& c) {
  const bool csv = c.format == "csv";
  const auto& cmd = c.command;

  if (cmd == "fit" || cmd == "enumerate") {
    require_input(c);
    const Dataset data = load_dataset(c.input, c.response);
    const TrimSpec trim = TrimSpec::make(c.alpha, data.n());
    const LtsFit f = cmd == "fit" ? fit(data, trim, solver_config(c)) : exact_enumerate(data, trim);
    return {fit_results(data, trim, f), csv ? std::optional(fit_csv(f)) : std::nullopt};
  }

  if (csv && cmd != "simulate-consistency" && cmd != "simulate-normality" && cmd != "ci-bootstrap") {
    fail(ErrorCode::UsageError, "--format csv is not available for '" + cmd + "'");
  }

  if (cmd == "constants") {
    return {to_json(trim_constants(c.alpha, require_sigma(c))), std::nullopt};
  }

  if (cmd == "influence") {
    if (c.point.size() < 2) fail(ErrorCode::UsageError, "--point s1,...,t0 is required for 'influence'");
    InfluencePoint z0;
    z0.s0 = Eigen::Map<const Vector>(c.point.data(), static_cast<Index>(c.point.size()) - 1);
    z0.t0 = c.point.back();
    PopulationModel model;
    Json j;
    if (!c.input.empty()) {
      const Dataset data = load_dataset(c.input, c.response);
      const TrimSpec trim = TrimSpec::make(c.alpha, data.n());
      const LtsFit f = fit(data, trim, solver_config(c));
      model.beta_lts = f.beta;
      model.alpha = c.alpha;
      model.M = empirical_M(data, f, trim);
      const Vector r = residuals(data, f.beta);
      model.q = r(f.subset.indices.back()) * r(f.subset.indices.back());
      model.sigma = c.sigma.value_or(std::sqrt(model.q) / std::sqrt(chi2_quantile(1, c.alpha)));
      j["model"] = "empirical";
    } else {
      model = PopulationModel::canonical(static_cast<Index>(c.point.size()), c.alpha, require_sigma(c));
      j["model"] = "canonical";
    }
    const Vector v0 = z0.v0();
    const double r = z0.t0 - v0.dot(model.beta_lts);
    j["beta_lts"] = vector_json(model.beta_lts);
    j["M"] = matrix_json(model.M);
    j["q"] = model.q;
    j["residual"] = r;
    j["branch"] = r * r > model.q ? "outside" : "inside";
    j["influence"] = vector_json(influence_function(z0, model));
    return {j, std::nullopt};
  }

  if (cmd == "simulate-consistency") {
    GenSpec spec = study_spec(c);
    const StudyResult r = run_consistency_study(spec, c.n_grid, c.reps, c.alpha, solver_config(c), c.seed);
    std::optional<std::string> table;
    if (csv) {
      std::ostringstream out;
      write_records_csv(out, r);
      table = out.str();
    }
    return {summary_json(r), table};
  }

  if (cmd == "simulate-normality") {
    const StudyResult r =
        run_normality_study(study_spec(c), c.reps, c.alpha, solver_config(c), c.seed, c.rate_check);
    std::optional<std::string> table;
    if (csv) {
      std::ostringstream out;
      write_records_csv(out, r);
      table = out.str();
    }
    return {summary_json(r), table};
  }

  if (cmd == "ci-normal") {
    require_input(c);
    const double sigma = require_sigma(c);
    const Dataset data = load_dataset(c.input, c.response);
    const TrimSpec trim = TrimSpec::make(c.alpha, data.n());
    const LtsFit f = fit(data, trim, solver_config(c));
    const auto k = trim_constants(c.alpha, sigma);
    Json j = to_json(ci_normal_ball(f, k, data.n(), c.gamma, parse_ball_mode(c.mode)));
    j["n"] = data.n();
    j["constants"] = to_json(k);
    return {j, std::nullopt};
  }

  if (cmd == "ci-bootstrap") {
    require_input(c);
    const Dataset data = load_dataset(c.input, c.response);
    const TrimSpec trim = TrimSpec::make(c.alpha, data.n());
    const SolverConfig solver = solver_config(c);
    const LtsFit center = fit(data, trim, solver);
    auto boot = bootstrap_fits(data, trim, c.m, solver, derive_seed(c.seed, 0xb0));
    RandomStream dir_stream = make_stream(derive_seed(c.seed, 0xd1), 0);
    const int dirs = c.directions > 0 ? c.directions : static_cast<int>(1000 * data.p());
    const DepthRegion region = ci_depth_region(std::move(boot.cloud), c.gamma, dirs, dir_stream);
    Json j = to_json(region);
    j["estimate"] = vector_json(center.beta);
    j["estimate_depth"] = region.depth_of(center.beta);
    j["redraws"] = boot.redraws;
    std::optional<std::string> table;
    if (csv) {
      std::ostringstream out;
      out.precision(17);
      out << "index";
      for (Index k = 0; k < data.p(); ++k) out << ",beta_" << k;
      out << ",depth,retained\n";
      std::vector<bool> kept(region.cloud.size(), false);
      for (auto i : region.retained) kept[i] = true;
      for (std::size_t i = 0; i < region.cloud.size(); ++i) {
        out << i;
        for (Index k = 0; k < data.p(); ++k) out << ',' << region.cloud[i](k);
        out << ',' << region.depths[i] << ',' << (kept[i] ? 1 : 0) << '\n';
      }
      table = out.str();
    }
    return {j, table};
  }

  fail(ErrorCode::UsageError, "unknown command '" + cmd + "'");
}

inline void emit(const std::string& path, const std::string& text) {
  if (path.empty()) {
    std::cout << text;
    return;
  }
  std::ofstream out(path, std::ios::binary);
  if (!out) fail(ErrorCode::UsageError, "cannot write '" + path + "'");
  out << text;
}

}  // namespace detail

/// Runs one command and writes its artifact. JSON artifacts carry the
/// effective configuration, seed, version and a "timestamp" object, which
/// is the only run-dependent field. With --format csv the table goes to the
/// output path and the JSON summary to "<output>.summary.json".
/// Errors are reported on `err` as a JSON object; the return value is the
/// process exit code.
inline int run(const RunConfig& config, std::ostream& err = std::cerr) {
  const auto t0 = std::chrono::steady_clock::now();
  try {
    if (config.format != "json" && config.format != "csv") {
      fail(ErrorCode::UsageError, "--format must be json or csv");
    }
    if (!(config.alpha >= 0.5 && config.alpha <= 0.95)) {
      fail(ErrorCode::UsageError, "--alpha must lie in [0.5, 0.95]");
    }
    detail::Artifact art = detail::dispatch(config);
    Json doc;
    doc["version"] = kVersion;
    doc["command"] = config.command;
    doc["seed"] = config.seed;
    doc["config"] = detail::config_echo(config);
    doc["results"] = std::move(art.results);
    doc["timestamp"] = Json{{"utc", detail::utc_now()},
                            {"elapsed_seconds", std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count()}};
    const std::string json_text = doc.dump(2) + "\n";
    if (art.csv) {
      detail::emit(config.output, *art.csv);
      if (!config.output.empty()) detail::emit(config.output + ".summary.json", json_text);
    } else {
      detail::emit(config.output, json_text);
    }
    return exit_code::kOk;
  } catch (const Error& e) {
    const int code = exit_code_for(e.code());
    err << Json{{"error", {{"code", std::string(to_string(e.code()))}, {"message", e.what()}, {"exit_code", code}}}}.dump()
        << "\n";
    return code;
  } catch (const std::exception& e) {
    err << Json{{"error", {{"code", "Internal"}, {"message", e.what()}, {"exit_code", 1}}}}.dump() << "\n";
    return 1;
  }
}

}  // namespace lts::cli
