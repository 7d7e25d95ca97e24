// Command-line front end: evaluate CHSH entropy rate functions, verify them
// against the matrix oracle, and compute finite-size DIQKD key lengths.

#include <cstdio>
#include <fstream>
#include <iostream>
#include <optional>
#include <string>

#include <CLI11.hpp>

#include "direnyi/entropy_oracle.hpp"
#include "direnyi/finite_size.hpp"
#include "direnyi/noisy_preprocessing.hpp"
#include "direnyi/rate_functions.hpp"
#include "direnyi/run_config.hpp"

namespace {

using namespace direnyi;

constexpr const char* kCsvHeader =
    "n,gamma,alpha,h_alpha,delta_low_perp,ell_ec,ell_key,rate,asymptotic_rate";

std::string csv_row(const KeyRateResult& r) {
  char buf[512];
  std::snprintf(buf, sizeof(buf),
                "%llu,%.17g,%.17g,%.17g,%.17g,%.17g,%.17g,%.17g,%.17g",
                static_cast<unsigned long long>(r.n), r.gamma, r.alpha, r.h_alpha,
                r.delta_low_perp, r.ell_ec, r.ell_key, r.rate, r.asymptotic_rate);
  return buf;
}

RunConfig resolve_config(const std::string& config_path) {
  if (config_path.empty()) return RunConfig{};
  return load_run_config(config_path);
}

int cmd_rate(const std::string& family_name_arg, double alpha, double score, double beta,
             double npp_q) {
  const auto family = family_from_name(family_name_arg);
  if (!family) throw std::domain_error("unknown entropy family '" + family_name_arg + "'");
  const double value = rate(BellScore{score, beta}, {*family, alpha, npp_q});
  std::printf("%.12f\n", value);
  return 0;
}

int cmd_verify(const RunConfig& cfg, const std::string& out_path, double inject_bias,
               double tolerance) {
  VerificationGrid grid = cfg.verify;
  grid.analytic_bias = inject_bias;

  std::ofstream file;
  std::ostream* out = &std::cout;
  if (!out_path.empty()) {
    file.open(out_path);
    if (!file) throw ConfigError("cannot write report to '" + out_path + "'");
    out = &file;
  }
  const TightnessReport report = verify_tightness(grid, cfg.params.workers);
  (*out) << "family,alpha,score,beta,q,analytic,oracle,abs_dev\n";
  char buf[512];
  for (const TightnessRow& row : report.rows) {
    std::snprintf(buf, sizeof(buf), "%s,%.17g,%.17g,%.17g,%.17g,%.17g,%.17g,%.17g",
                  std::string(family_name(row.family)).c_str(), row.alpha, row.score,
                  row.beta, row.q, row.analytic, row.oracle, row.abs_dev);
    (*out) << buf << '\n';
  }
  const TightnessRow& worst = report.rows[report.worst_index];
  std::snprintf(buf, sizeof(buf),
                "summary,max_abs_dev=%.17g,rows=%zu,worst=%s alpha=%g score=%.12g beta=%g q=%g",
                report.max_abs_dev, report.rows.size(),
                std::string(family_name(worst.family)).c_str(), worst.alpha, worst.score,
                worst.beta, worst.q);
  (*out) << buf << '\n';

  if (report.max_abs_dev > tolerance) {
    std::fprintf(stderr, "verify: max deviation %.3e exceeds tolerance %.1e\n",
                 report.max_abs_dev, tolerance);
    return 1;
  }
  return 0;
}

int cmd_keyrate(const RunConfig& cfg, const std::string& out_path) {
  const KeyRateResult r = key_length(cfg.params);
  std::printf("n               = %llu\n", static_cast<unsigned long long>(r.n));
  std::printf("alpha           = %.12g\n", r.alpha);
  std::printf("gamma           = %.12g\n", r.gamma);
  std::printf("h_alpha         = %.12f\n", r.h_alpha);
  std::printf("delta_low_perp  = %.12g\n", r.delta_low_perp);
  std::printf("ell_ec          = %.6f\n", r.ell_ec);
  std::printf("ell_key         = %.6f\n", r.ell_key);
  std::printf("rate            = %.12f\n", r.rate);
  std::printf("asymptotic_rate = %.12f\n", r.asymptotic_rate);
  if (!out_path.empty()) {
    std::ofstream file(out_path);
    if (!file) throw ConfigError("cannot write CSV to '" + out_path + "'");
    file << kCsvHeader << '\n' << csv_row(r) << '\n';
  }
  return 0;
}

int cmd_sweep(const RunConfig& cfg, const std::string& out_path) {
  const std::vector<std::uint64_t> grid = make_sweep_grid(cfg.sweep);

  std::ofstream file;
  std::ostream* out = &std::cout;
  if (!out_path.empty()) {
    file.open(out_path);
    if (!file) throw ConfigError("cannot write CSV to '" + out_path + "'");
    out = &file;
  }
  const std::vector<KeyRateResult> results = sweep(cfg.params, grid);
  (*out) << kCsvHeader << '\n';
  for (const KeyRateResult& r : results) (*out) << csv_row(r) << '\n';
  return 0;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Analytic Renyi entropy rates for CHSH devices and finite-size DIQKD key lengths"};
  app.require_subcommand(1);
  app.fallthrough();

  std::string config_path;
  std::string out_path;
  std::optional<std::uint64_t> seed;
  app.add_option("--config", config_path, "Run configuration file (flat key = value)");
  app.add_option("--out", out_path, "Output path (report or CSV)");
  app.add_option("--seed", seed, "Random seed override");

  auto* rate_cmd = app.add_subcommand("rate", "Evaluate one entropy rate function");
  std::string family_arg = "von-neumann";
  double alpha_arg = 2.0, score_arg = 2.0, beta_arg = 1.0, npp_q_arg = 0.0;
  rate_cmd->add_option("--family", family_arg,
                       "sandwiched-down|sandwiched-up|petz-down|petz-up|von-neumann|min-entropy");
  rate_cmd->add_option("--alpha", alpha_arg, "Renyi order (inf allowed for sandwiched families)");
  rate_cmd->add_option("--score", score_arg, "Asymmetric CHSH score")->required();
  rate_cmd->add_option("--beta", beta_arg, "CHSH weight beta");
  rate_cmd->add_option("--npp-q", npp_q_arg, "Noisy-preprocessing flip probability");

  auto* verify_cmd = app.add_subcommand("verify", "Compare analytic rates against the matrix oracle");
  double inject_bias = 0.0, tolerance = 1e-9;
  verify_cmd->add_option("--inject-bias", inject_bias,
                         "Fault-injection offset added to every analytic value (testing)");
  verify_cmd->add_option("--tolerance", tolerance, "Maximum allowed |analytic - oracle|");

  auto* keyrate_cmd = app.add_subcommand("keyrate", "Compute one finite-size key length");
  auto* sweep_cmd = app.add_subcommand("sweep", "Key rates over an n grid, written as CSV");
  bool optimize_alpha = false, optimize_gamma = false;
  for (CLI::App* cmd : {keyrate_cmd, sweep_cmd}) {
    cmd->add_flag("--optimize-alpha", optimize_alpha, "Maximize over the alpha grid");
    cmd->add_flag("--optimize-gamma", optimize_gamma, "Maximize over gamma in multiples of 1/256");
  }

  CLI11_PARSE(app, argc, argv);

  try {
    RunConfig cfg = resolve_config(config_path);
    if (seed) cfg.seed = *seed;
    if (optimize_alpha) cfg.params.optimize_alpha = true;
    if (optimize_gamma) cfg.params.optimize_gamma = true;
    if (out_path.empty()) out_path = cfg.out_path;

    if (rate_cmd->parsed()) return cmd_rate(family_arg, alpha_arg, score_arg, beta_arg, npp_q_arg);
    if (verify_cmd->parsed()) return cmd_verify(cfg, out_path, inject_bias, tolerance);
    if (keyrate_cmd->parsed()) return cmd_keyrate(cfg, out_path);
    if (sweep_cmd->parsed()) return cmd_sweep(cfg, out_path);
  } catch (const std::exception& e) {
    std::fprintf(stderr, "error: %s\n", e.what());
    return 2;
  }
  return 0;
}
