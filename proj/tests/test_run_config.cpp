#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <sstream>

#include "direnyi/run_config.hpp"

using namespace direnyi;

TEST_CASE("defaults match the reference setup") {
  const RunConfig cfg;
  CHECK(cfg.params.n == 1500000);
  CHECK(cfg.params.honest.gamma == doctest::Approx(13.0 / 256.0).epsilon(1e-15));
  CHECK(cfg.params.honest.omega_hon == 0.83);
  CHECK(cfg.params.honest.qerr_hon == 0.018);
  CHECK(cfg.params.eps_sound == 1e-10);
  CHECK(cfg.params.eps_corr == std::exp2(-61.0));
  CHECK(cfg.params.eps_com_at == 1e-3);
  CHECK(cfg.params.ell_ev == 64.0);
  CHECK(cfg.params.beta == 1.0);
  CHECK(cfg.params.npp_q == 0.0);
  CHECK(cfg.params.optimize_alpha);
  CHECK(!cfg.params.optimize_gamma);
  CHECK(cfg.params.eps_secret() > 0.0);
  CHECK(cfg.params.eps_secret() < 1e-10);
}

TEST_CASE("well-formed config parses") {
  std::istringstream in(
      "# comment line\n"
      "n = 2000000\n"
      "gamma = 0.05\n"
      "omega_hon = 0.8\n"
      "optimize_alpha = true\n"
      "sweep_spacing = linear\n"
      "n_min = 1000\n"
      "n_max = 100000\n"
      "sweep_points = 5\n"
      "verify_alphas = 1.5, 2.0\n"
      "verify_families = sandwiched-down, petz-up\n"
      "out = /tmp/out.csv\n"
      "seed = 99\n");
  const RunConfig cfg = parse_run_config(in);
  CHECK(cfg.params.n == 2000000);
  CHECK(cfg.params.honest.gamma == 0.05);
  CHECK(cfg.params.optimize_alpha);
  CHECK(!cfg.sweep.log_spacing);
  CHECK(cfg.sweep.points == 5);
  CHECK(cfg.verify.alphas == std::vector<double>{1.5, 2.0});
  REQUIRE(cfg.verify.families.size() == 2);
  CHECK(cfg.verify.families[0] == EntropyFamily::sandwiched_down);
  CHECK(cfg.verify.families[1] == EntropyFamily::petz_up);
  CHECK(cfg.out_path == "/tmp/out.csv");
  CHECK(cfg.seed == 99);
}

TEST_CASE("unknown keys are rejected") {
  std::istringstream in("gamm = 0.05\n");
  CHECK_THROWS_AS(parse_run_config(in), ConfigError);
}

TEST_CASE("malformed lines and values are rejected") {
  std::istringstream bad_syntax("n 2000\n");
  CHECK_THROWS_AS(parse_run_config(bad_syntax), ConfigError);
  std::istringstream bad_number("n = abc\n");
  CHECK_THROWS_AS(parse_run_config(bad_number), ConfigError);
  std::istringstream bad_bool("optimize_alpha = maybe\n");
  CHECK_THROWS_AS(parse_run_config(bad_bool), ConfigError);
  std::istringstream bad_family("verify_families = sandwich\n");
  CHECK_THROWS_AS(parse_run_config(bad_family), ConfigError);
  std::istringstream bad_spacing("sweep_spacing = quadratic\n");
  CHECK_THROWS_AS(parse_run_config(bad_spacing), ConfigError);
  CHECK_THROWS_AS(load_run_config("/nonexistent/path.cfg"), ConfigError);
}

TEST_CASE("sweep grid construction") {
  SweepGridSpec spec;
  spec.n_min = 100;
  spec.n_max = 100000;
  spec.points = 4;
  spec.log_spacing = true;
  const auto grid = make_sweep_grid(spec);
  REQUIRE(grid.size() == 4);
  CHECK(grid.front() == 100);
  CHECK(grid.back() == 100000);
  CHECK(grid[1] == 1000);
  CHECK(grid[2] == 10000);

  spec.log_spacing = false;
  const auto lin = make_sweep_grid(spec);
  CHECK(lin[1] == 33400);

  spec.points = 1;
  CHECK(make_sweep_grid(spec).size() == 1);

  spec.n_min = 10;
  spec.n_max = 5;
  CHECK_THROWS_AS(make_sweep_grid(spec), ConfigError);
}
