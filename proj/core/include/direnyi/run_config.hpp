#pragma once

#include <cstdint>
#include <iosfwd>
#include <string>
#include <vector>

#include "direnyi/entropy_oracle.hpp"
#include "direnyi/finite_size.hpp"

namespace direnyi {

/// Raised on malformed or unknown configuration input.
struct ConfigError : std::runtime_error {
  using std::runtime_error::runtime_error;
};

struct SweepGridSpec {
  std::uint64_t n_min = 100'000;
  std::uint64_t n_max = 10'000'000'000ULL;
  std::size_t points = 30;
  bool log_spacing = true;
};

/// Flat key/value run configuration. Defaults reproduce the reference
/// finite-size setup (n = 1.5e6, gamma = 13/256, omega_hon = 0.83,
/// qerr_hon = 0.018, eps_sound = 1e-10, eps_corr = 2^-61, eps_com_at = 1e-3,
/// ell_EV = 64, beta = 1, npp_q = 0). Unknown keys are rejected.
struct RunConfig {
  ProtocolParams params;
  SweepGridSpec sweep;
  VerificationGrid verify;
  std::string out_path;
  std::uint64_t seed = 1;
};

RunConfig parse_run_config(std::istream& in);
RunConfig load_run_config(const std::string& path);

/// Increasing n grid from the sweep spec (log- or linearly spaced,
/// deduplicated after rounding to integers).
std::vector<std::uint64_t> make_sweep_grid(const SweepGridSpec& spec);

}  // namespace direnyi
