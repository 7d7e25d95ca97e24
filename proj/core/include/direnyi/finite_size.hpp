#pragma once

#include <cstdint>
#include <vector>

#include "direnyi/numerics.hpp"
#include "direnyi/rate_functions.hpp"

namespace direnyi {

/// Honest (IID) device behavior: CHSH winning probability in test rounds,
/// disagreement rate in generation rounds, and the testing probability.
struct HonestModel {
  double omega_hon = 0.83;
  double qerr_hon = 0.018;
  double gamma = 13.0 / 256.0;

  void validate() const;
};

/// Per-round distribution of the test symbol under the honest behavior,
/// (gamma (1 - omega), gamma omega, 1 - gamma) in the fixed order (0, 1, perp).
Distribution3 honest_distribution(const HonestModel& h);

/// Box of frequency distributions around the honest one: the protocol
/// accepts iff every symbol frequency lies within [center - delta_low,
/// center + delta_upp].
struct AcceptanceSet {
  Distribution3 center;
  std::array<double, 3> delta_low{1.0, 1.0, 1.0};
  std::array<double, 3> delta_upp{1.0, 1.0, 1.0};

  double lower_bound(std::size_t i) const;
  double upper_bound(std::size_t i) const;
  bool contains(const Distribution3& q) const;
};

/// Minimal per-symbol tolerances such that each of the six one-sided
/// binomial tails at the honest distribution is at most eps_com_at / 6.
AcceptanceSet build_acceptance(const HonestModel& h, std::uint64_t n, double eps_com_at);

/// Exact minimizer of KL(q || p) + perp_cost_bits * q(perp) over the
/// acceptance box intersected with the simplex (exponential tilting followed
/// by box clipping; the simplex multiplier is solved exactly on the
/// piecewise-linear clip function). Objective in bits; +infinity when the
/// box forces mass outside the support of p.
struct InnerSolution {
  Distribution3 q;
  double objective = 0.0;
};
InnerSolution minimize_tilted_kl(const Distribution3& p, const AcceptanceSet& box,
                                 double perp_cost_bits);

/// Largest CHSH winning probability achievable by quantum devices.
double omega_max();

/// Single-round trade-off quantity: the infimum over the winning probability
/// omega in [0, omega_max] and q in the acceptance box of
///   KL(q || p_omega)/(alpha - 1) + q(perp) * f(alpha, 8 omega - 4),
/// with f the sandwiched-down rate (noisy-preprocessed when npp_q > 0) and
/// sub-classical scores contributing zero rate. Never negative; the result
/// is additionally capped by a 2048-point validation grid over omega.
double single_round_tradeoff(double alpha, const HonestModel& h, const AcceptanceSet& acc,
                             double beta = 1.0, double npp_q = 0.0);

/// Error-correction string length:
/// n ((1-gamma) h2(qerr) + gamma h2(1-omega)) + 50 sqrt(n).
double ec_length(const HonestModel& h, std::uint64_t n);

struct ProtocolParams {
  std::uint64_t n = 1'500'000;
  HonestModel honest{};
  double eps_sound = 1e-10;
  double eps_corr = 0x1p-61;  // 2^-61, exact
  double eps_com_at = 1e-3;
  double ell_ev = 64.0;
  double alpha = 1.2;          // used only when optimize_alpha is off
  bool optimize_alpha = true;  // the soft KL constraint needs alpha ~ 1 + O(KL/f)
  bool optimize_gamma = false;
  double gamma_cap = 0.25;  // optimization domain for gamma (multiples of 1/256)
  double beta = 1.0;
  double npp_q = 0.0;
  unsigned workers = 0;  // 0 = hardware concurrency

  double eps_secret() const;
  void validate() const;
};

struct KeyRateResult {
  std::uint64_t n = 0;
  double alpha = 0.0;
  double gamma = 0.0;
  double h_alpha = 0.0;
  double delta_low_perp = 0.0;
  double ell_ec = 0.0;
  double ell_key = 0.0;  // may be negative before flooring
  double rate = 0.0;     // max(ell_key, 0)/n
  double asymptotic_rate = 0.0;
};

/// Alpha optimization grid 1 + 10^linspace(-6, 1, 60).
std::vector<double> alpha_grid();
/// Gamma optimization grid: multiples of 1/256 in (0, cap].
std::vector<double> gamma_grid(double cap);

/// Asymptotic key rate f_H(8 omega_hon - 4) - h2(qerr_hon).
double asymptotic_rate(const HonestModel& h);

/// Finite-size key length
///   ell_key = n h_alpha - n (gamma + delta_low_perp) - ell_EC - ell_EV
///             - alpha/(alpha-1) log2(1/eps_secret) + 2,
/// optionally maximized over the alpha and gamma grids.
KeyRateResult key_length(const ProtocolParams& p);

/// key_length per n, parallelized over the grid; result order follows ns.
std::vector<KeyRateResult> sweep(const ProtocolParams& p, const std::vector<std::uint64_t>& ns);

/// IID abort-frequency estimate: samples n-round frequency vectors from the
/// honest distribution and counts box violations. Deterministic per seed.
double simulate_completeness(const HonestModel& h, std::uint64_t n, const AcceptanceSet& acc,
                             std::uint64_t trials, std::uint64_t seed);

}  // namespace direnyi
