#include "direnyi/finite_size.hpp"

#include <algorithm>
#include <atomic>
#include <cmath>
#include <random>
#include <thread>

#include "direnyi/noisy_preprocessing.hpp"

namespace direnyi {

namespace {

const double kInf = std::numeric_limits<double>::infinity();

void check_probability(double v, const char* what) {
  if (!(v >= 0.0 && v <= 1.0)) throw std::domain_error(std::string(what) + " outside [0,1]");
}

// Rate entering the trade-off: sandwiched-down at score 8 omega - 4, zero at
// or below the classical bound. The score is clamped into the valid range so
// the scan can cover the whole omega interval.
double tradeoff_rate(double alpha, double beta, double npp_q, double omega) {
  const double smax = 2.0 * std::sqrt(1.0 + beta * beta);
  const double score = std::clamp(8.0 * omega - 4.0, -smax, smax);
  const BellScore s{score, beta};
  if (npp_q > 0.0) return npp_rate(s, EntropyFamily::sandwiched_down, alpha, npp_q);
  return rate(s, {EntropyFamily::sandwiched_down, alpha, 0.0});
}

struct TradeoffContext {
  double alpha;
  double gamma;
  const AcceptanceSet* acc;
};

double tradeoff_objective(const TradeoffContext& ctx, double omega, double f_rate) {
  Distribution3 p;
  p[0] = ctx.gamma * (1.0 - omega);
  p[1] = ctx.gamma * omega;
  p[2] = 1.0 - ctx.gamma;
  const InnerSolution inner = minimize_tilted_kl(p, *ctx.acc, (ctx.alpha - 1.0) * f_rate);
  return inner.objective / (ctx.alpha - 1.0);
}

std::uint64_t sample_binomial(std::mt19937_64& rng, std::uint64_t n, double p) {
  if (n == 0 || p <= 0.0) return 0;
  if (p >= 1.0) return n;
  // Inverse-CDF draw; the uniform variate is built from the raw 64-bit word
  // so the sequence does not depend on the standard library.
  const double u = static_cast<double>(rng() >> 11) * 0x1.0p-53;
  std::uint64_t lo = 0, hi = n;
  while (lo < hi) {
    const std::uint64_t mid = lo + (hi - lo) / 2;
    if (binomial_tail(mid, n, p, TailSide::lower) >= u) hi = mid;
    else lo = mid + 1;
  }
  return lo;
}

unsigned resolve_workers(unsigned requested) {
  if (requested > 0) return requested;
  const unsigned hw = std::thread::hardware_concurrency();
  return hw > 0 ? hw : 1;
}

template <class F>
void parallel_for(std::size_t count, unsigned workers, F&& body) {
  workers = std::min<unsigned>(std::max(1u, workers), static_cast<unsigned>(count ? count : 1));
  if (workers <= 1) {
    for (std::size_t i = 0; i < count; ++i) body(i);
    return;
  }
  std::atomic<std::size_t> next{0};
  auto run = [&]() {
    for (std::size_t i = next.fetch_add(1); i < count; i = next.fetch_add(1)) body(i);
  };
  std::vector<std::thread> pool;
  for (unsigned w = 1; w < workers; ++w) pool.emplace_back(run);
  run();
  for (auto& th : pool) th.join();
}

}  // namespace

void HonestModel::validate() const {
  check_probability(omega_hon, "HonestModel: omega_hon");
  check_probability(qerr_hon, "HonestModel: qerr_hon");
  check_probability(gamma, "HonestModel: gamma");
}

Distribution3 honest_distribution(const HonestModel& h) {
  h.validate();
  Distribution3 q;
  q[0] = h.gamma * (1.0 - h.omega_hon);
  q[1] = h.gamma * h.omega_hon;
  q[2] = 1.0 - h.gamma;
  return q;
}

double AcceptanceSet::lower_bound(std::size_t i) const {
  return std::max(0.0, center[i] - delta_low[i]);
}

double AcceptanceSet::upper_bound(std::size_t i) const {
  return std::min(1.0, center[i] + delta_upp[i]);
}

bool AcceptanceSet::contains(const Distribution3& q) const {
  for (std::size_t i = 0; i < 3; ++i) {
    if (q[i] < center[i] - delta_low[i] || q[i] > center[i] + delta_upp[i]) return false;
  }
  return true;
}

AcceptanceSet build_acceptance(const HonestModel& h, std::uint64_t n, double eps_com_at) {
  if (n == 0) throw std::domain_error("build_acceptance: n must be positive");
  if (!(eps_com_at > 0.0 && eps_com_at < 1.0))
    throw std::domain_error("build_acceptance: eps_com_at outside (0,1)");
  AcceptanceSet acc;
  acc.center = honest_distribution(h);
  const double eps = eps_com_at / 6.0;  // six one-sided constraints
  for (std::size_t i = 0; i < 3; ++i) {
    acc.delta_low[i] = binomial_quantile_delta(n, acc.center[i], eps, TailSide::lower);
    acc.delta_upp[i] = binomial_quantile_delta(n, acc.center[i], eps, TailSide::upper);
  }
  return acc;
}

InnerSolution minimize_tilted_kl(const Distribution3& p, const AcceptanceSet& box,
                                 double perp_cost_bits) {
  if (!(perp_cost_bits >= 0.0))
    throw std::domain_error("minimize_tilted_kl: cost must be nonnegative");

  std::array<double, 3> lo{}, up{}, slope{};
  double lo_sum = 0.0, up_sum = 0.0;
  for (std::size_t i = 0; i < 3; ++i) {
    lo[i] = box.lower_bound(i);
    up[i] = box.upper_bound(i);
    lo_sum += lo[i];
    up_sum += up[i];
  }
  InnerSolution sol;
  sol.q.p = lo;
  if (lo_sum > 1.0 + 1e-12 || up_sum < 1.0 - 1e-12) {
    sol.objective = kInf;
    return sol;
  }

  const std::array<double, 3> weight{1.0, 1.0, std::exp2(-perp_cost_bits)};
  for (std::size_t i = 0; i < 3; ++i) {
    slope[i] = std::max(p[i], 0.0) * weight[i];
    if (slope[i] == 0.0 && lo[i] > 0.0) {
      sol.objective = kInf;  // forced mass outside the support of p
      return sol;
    }
  }

  // q_i(t) = clip(t * slope_i, lo_i, up_i). The total is piecewise linear and
  // nondecreasing in t; walk the breakpoints and solve the simplex constraint
  // exactly on the matching segment.
  std::vector<double> breaks;
  breaks.reserve(6);
  for (std::size_t i = 0; i < 3; ++i) {
    if (slope[i] > 0.0) {
      breaks.push_back(lo[i] / slope[i]);
      breaks.push_back(up[i] / slope[i]);
    }
  }
  std::sort(breaks.begin(), breaks.end());
  auto total_at = [&](double t) {
    double s = 0.0;
    for (std::size_t i = 0; i < 3; ++i) s += std::clamp(t * slope[i], lo[i], up[i]);
    return s;
  };

  double t_star = -1.0;
  double prev = 0.0;
  double prev_total = total_at(0.0);  // == lo_sum
  for (double b : breaks) {
    if (b <= prev) { prev = std::max(prev, b); continue; }
    const double cur_total = total_at(b);
    if (cur_total >= 1.0) {
      double seg_slope = 0.0;
      for (std::size_t i = 0; i < 3; ++i) {
        const double qa = std::clamp(prev * slope[i], lo[i], up[i]);
        const double qb = std::clamp(b * slope[i], lo[i], up[i]);
        if (qb > qa) seg_slope += slope[i];
      }
      t_star = seg_slope > 0.0 ? prev + (1.0 - prev_total) / seg_slope : prev;
      break;
    }
    prev = b;
    prev_total = cur_total;
  }
  if (t_star < 0.0) t_star = breaks.empty() ? 0.0 : breaks.back();

  for (std::size_t i = 0; i < 3; ++i) sol.q[i] = std::clamp(t_star * slope[i], lo[i], up[i]);
  // Absorb the residual rounding error into an interior coordinate.
  double resid = 1.0 - (sol.q[0] + sol.q[1] + sol.q[2]);
  for (std::size_t i = 0; i < 3 && std::abs(resid) > 0.0; ++i) {
    const double adj = std::clamp(sol.q[i] + resid, lo[i], up[i]);
    resid -= adj - sol.q[i];
    sol.q[i] = adj;
  }

  double obj = 0.0;
  for (std::size_t i = 0; i < 3; ++i) {
    if (sol.q[i] <= 0.0) continue;
    if (p[i] <= 0.0) { obj = kInf; break; }
    obj += sol.q[i] * std::log2(sol.q[i] / p[i]);
  }
  if (std::isfinite(obj)) obj += perp_cost_bits * sol.q[2];
  sol.objective = obj;
  return sol;
}

double omega_max() { return (2.0 + std::sqrt(2.0)) / 4.0; }

double single_round_tradeoff(double alpha, const HonestModel& h, const AcceptanceSet& acc,
                             double beta, double npp_q) {
  if (!(alpha > 1.0) || std::isinf(alpha))
    throw std::domain_error("single_round_tradeoff: alpha must lie in (1, inf)");
  h.validate();
  if (std::abs(beta) < 1.0)
    throw std::domain_error("single_round_tradeoff: requires |beta| >= 1");

  const TradeoffContext ctx{alpha, h.gamma, &acc};
  const double w_max = omega_max();
  auto objective = [&](double omega) {
    return tradeoff_objective(ctx, omega, tradeoff_rate(alpha, beta, npp_q, omega));
  };

  const ScalarMinimum refined = minimize_scalar(objective, 0.0, w_max, 1e-10);
  double best = refined.value;
  // Validation grid: the reported value never exceeds any of these samples.
  constexpr std::size_t kGuardPoints = 2048;
  for (std::size_t i = 0; i < kGuardPoints; ++i) {
    const double omega = w_max * static_cast<double>(i) / static_cast<double>(kGuardPoints - 1);
    best = std::min(best, objective(omega));
  }
  return std::max(0.0, best);
}

double ec_length(const HonestModel& h, std::uint64_t n) {
  if (n == 0) throw std::domain_error("ec_length: n must be positive");
  h.validate();
  const double nd = static_cast<double>(n);
  return nd * ((1.0 - h.gamma) * binary_entropy(h.qerr_hon) +
               h.gamma * binary_entropy(1.0 - h.omega_hon)) +
         50.0 * std::sqrt(nd);
}

double ProtocolParams::eps_secret() const {
  // 2^-61 is negligible against 1e-10 but is carried exactly.
  const long double secret =
      static_cast<long double>(eps_sound) - static_cast<long double>(eps_corr);
  return static_cast<double>(secret);
}

void ProtocolParams::validate() const {
  if (n == 0) throw std::domain_error("ProtocolParams: n must be positive");
  honest.validate();
  for (double e : {eps_sound, eps_corr, eps_com_at}) {
    if (!(e > 0.0 && e < 1.0)) throw std::domain_error("ProtocolParams: epsilons must lie in (0,1)");
  }
  if (!(eps_secret() > 0.0)) throw std::domain_error("ProtocolParams: eps_corr >= eps_sound");
  if (!(ell_ev >= 0.0)) throw std::domain_error("ProtocolParams: ell_ev must be nonnegative");
  if (!optimize_alpha && (!(alpha > 1.0) || std::isinf(alpha)))
    throw std::domain_error("ProtocolParams: alpha must lie in (1, inf)");
  if (!(gamma_cap > 0.0 && gamma_cap <= 1.0))
    throw std::domain_error("ProtocolParams: gamma_cap outside (0,1]");
  check_probability(npp_q, "ProtocolParams: npp_q");
  if (std::abs(beta) < 1.0) throw std::domain_error("ProtocolParams: requires |beta| >= 1");
}

std::vector<double> alpha_grid() {
  std::vector<double> grid(60);
  for (std::size_t i = 0; i < grid.size(); ++i) {
    const double expo = -6.0 + 7.0 * static_cast<double>(i) / static_cast<double>(grid.size() - 1);
    grid[i] = 1.0 + std::pow(10.0, expo);
  }
  return grid;
}

std::vector<double> gamma_grid(double cap) {
  std::vector<double> grid;
  for (int k = 1; k <= 256; ++k) {
    const double gamma = static_cast<double>(k) / 256.0;
    if (gamma > cap + 1e-12) break;
    grid.push_back(gamma);
  }
  if (grid.empty()) throw std::domain_error("gamma_grid: cap below 1/256");
  return grid;
}

double asymptotic_rate(const HonestModel& h) {
  const double score = std::min(8.0 * h.omega_hon - 4.0, 2.0 * std::sqrt(2.0));
  const double f = rate(BellScore{std::max(score, -2.0 * std::sqrt(2.0)), 1.0},
                        {EntropyFamily::von_neumann, 0.0, 0.0});
  return f - binary_entropy(h.qerr_hon);
}

KeyRateResult key_length(const ProtocolParams& p) {
  p.validate();
  const double nd = static_cast<double>(p.n);
  const double log_eps = -std::log2(p.eps_secret());

  const std::vector<double> alphas =
      p.optimize_alpha ? alpha_grid() : std::vector<double>{p.alpha};
  const std::vector<double> gammas =
      p.optimize_gamma ? gamma_grid(p.gamma_cap) : std::vector<double>{p.honest.gamma};

  struct GammaSlot {
    HonestModel honest;
    AcceptanceSet acc;
    double ell_ec;
  };
  std::vector<GammaSlot> slots(gammas.size());
  for (std::size_t gi = 0; gi < gammas.size(); ++gi) {
    HonestModel h = p.honest;
    h.gamma = gammas[gi];
    slots[gi] = {h, build_acceptance(h, p.n, p.eps_com_at), ec_length(h, p.n)};
  }

  std::vector<KeyRateResult> results(gammas.size() * alphas.size());
  parallel_for(results.size(), resolve_workers(p.workers), [&](std::size_t idx) {
    const std::size_t gi = idx / alphas.size();
    const std::size_t ai = idx % alphas.size();
    const GammaSlot& slot = slots[gi];
    const double alpha = alphas[ai];
    const double h_alpha =
        single_round_tradeoff(alpha, slot.honest, slot.acc, p.beta, p.npp_q);
    const double delta_perp = slot.acc.delta_low[2];
    const double ell_key = nd * h_alpha - nd * (gammas[gi] + delta_perp) - slot.ell_ec -
                           p.ell_ev - alpha / (alpha - 1.0) * log_eps + 2.0;
    KeyRateResult r;
    r.n = p.n;
    r.alpha = alpha;
    r.gamma = gammas[gi];
    r.h_alpha = h_alpha;
    r.delta_low_perp = delta_perp;
    r.ell_ec = slot.ell_ec;
    r.ell_key = ell_key;
    r.rate = std::max(ell_key, 0.0) / nd;
    results[idx] = r;
  });

  std::size_t best = 0;
  for (std::size_t i = 1; i < results.size(); ++i) {
    if (results[i].ell_key > results[best].ell_key) best = i;
  }
  KeyRateResult out = results[best];
  out.asymptotic_rate = asymptotic_rate(p.honest);
  return out;
}

std::vector<KeyRateResult> sweep(const ProtocolParams& p, const std::vector<std::uint64_t>& ns) {
  if (ns.empty()) throw std::domain_error("sweep: empty n sequence");
  for (std::size_t i = 1; i < ns.size(); ++i) {
    if (ns[i] <= ns[i - 1]) throw std::domain_error("sweep: n values must be increasing");
  }
  std::vector<KeyRateResult> out(ns.size());
  const unsigned workers = resolve_workers(p.workers);
  if (ns.size() == 1) {
    ProtocolParams pp = p;
    pp.n = ns[0];
    out[0] = key_length(pp);
    return out;
  }
  // Parallelize across n; each key_length call then runs single-threaded.
  parallel_for(ns.size(), workers, [&](std::size_t i) {
    ProtocolParams pp = p;
    pp.n = ns[i];
    pp.workers = 1;
    out[i] = key_length(pp);
  });
  return out;
}

double simulate_completeness(const HonestModel& h, std::uint64_t n, const AcceptanceSet& acc,
                             std::uint64_t trials, std::uint64_t seed) {
  if (trials == 0) throw std::domain_error("simulate_completeness: trials must be positive");
  if (n == 0) throw std::domain_error("simulate_completeness: n must be positive");
  const Distribution3 q_hon = honest_distribution(h);
  std::mt19937_64 rng(seed);
  const double nd = static_cast<double>(n);
  std::uint64_t aborts = 0;
  for (std::uint64_t t = 0; t < trials; ++t) {
    const std::uint64_t c0 = sample_binomial(rng, n, q_hon[0]);
    const double rest = 1.0 - q_hon[0];
    const std::uint64_t c1 =
        rest > 0.0 ? sample_binomial(rng, n - c0, std::min(1.0, q_hon[1] / rest)) : 0;
    Distribution3 freq;
    freq[0] = static_cast<double>(c0) / nd;
    freq[1] = static_cast<double>(c1) / nd;
    freq[2] = static_cast<double>(n - c0 - c1) / nd;
    if (!acc.contains(freq)) ++aborts;
  }
  return static_cast<double>(aborts) / static_cast<double>(trials);
}

}  // namespace direnyi
