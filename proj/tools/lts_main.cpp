#include <iostream>
#include <string>

#include "CLI11.hpp"
#include "lts/cli.hpp"

int main(int argc, char** argv) {
  lts::cli::RunConfig config;
  CLI::App app{"Least trimmed squares regression: fits, influence, asymptotics and confidence regions"};
  app.set_version_flag("--version", std::string(lts::cli::kVersion));

  app.add_option("command", config.command, "Command to run")
      ->required()
      ->check(CLI::IsMember(lts::cli::commands()));
  app.add_option("--input", config.input, "CSV dataset with a header row");
  app.add_option("--response", config.response, "Response column name")->capture_default_str();
  app.add_option("--alpha", config.alpha, "Trimming level, h = floor(alpha n) + 1")->capture_default_str();
  app.add_option("--sigma", config.sigma, "Error standard deviation (assumed known)");
  app.add_option("--gamma", config.gamma, "Miscoverage level of confidence regions")->capture_default_str();
  app.add_option("--seed", config.seed, "Random seed")->capture_default_str();
  app.add_option("--starts", config.n_starts, "Elemental starts per fit (default 500; 50 in studies/bootstrap)");
  app.add_option("--m", config.m, "Bootstrap replicates")->capture_default_str();
  app.add_option("--reps", config.reps, "Monte Carlo replications")->capture_default_str();
  app.add_option("--mode", config.mode, "Normal-ball radius formula")
      ->check(CLI::IsMember({"paper-literal", "corrected"}))
      ->capture_default_str();
  app.add_option("--output", config.output, "Artifact path (default stdout)");
  app.add_option("--format", config.format, "Artifact format")
      ->check(CLI::IsMember({"json", "csv"}))
      ->capture_default_str();
  app.add_option("--threads", config.threads, "Worker threads (0 = auto)")->capture_default_str();
  app.add_option("--n", config.n, "Sample size for simulate-normality")->capture_default_str();
  app.add_option("--p", config.p, "Coefficients (intercept included) for simulations")->capture_default_str();
  app.add_option("--n-grid", config.n_grid, "Increasing sample sizes for simulate-consistency")->delimiter(',');
  app.add_option("--beta0", config.beta0, "True coefficients for simulations (default zeros)")->delimiter(',');
  app.add_option("--point", config.point, "Contaminating point s1,...,t0 for influence")->delimiter(',');
  app.add_option("--directions", config.directions, "Depth directions (0 = 1000 p)")->capture_default_str();
  app.add_flag("--rate-check", config.rate_check, "Also run simulate-normality at 4n");

  try {
    app.parse(argc, argv);
  } catch (const CLI::Success& e) {
    return app.exit(e);
  } catch (const CLI::ParseError& e) {
    app.exit(e);
    return lts::cli::exit_code::kUsage;
  }
  return lts::cli::run(config);
}
