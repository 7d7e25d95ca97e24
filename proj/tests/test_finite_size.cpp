#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <cmath>
#include <random>

#include "direnyi/finite_size.hpp"
#include "direnyi/numerics.hpp"
#include "direnyi/rate_functions.hpp"

using namespace direnyi;

namespace {

AcceptanceSet full_simplex_box(const HonestModel& h) {
  AcceptanceSet acc;
  acc.center = honest_distribution(h);
  acc.delta_low = {1.0, 1.0, 1.0};
  acc.delta_upp = {1.0, 1.0, 1.0};
  return acc;
}

// Dense oracle for the inner problem: scan the feasible (q0, q1) region.
// Each q0 column also samples the two points where q2 sits exactly on its
// bounds, so minima on the diagonal edges are captured at full accuracy.
double inner_by_grid(const Distribution3& p, const AcceptanceSet& box, double cost,
                     std::size_t steps = 400) {
  double best = std::numeric_limits<double>::infinity();
  const double lo0 = box.lower_bound(0), up0 = box.upper_bound(0);
  const double lo1 = box.lower_bound(1), up1 = box.upper_bound(1);
  auto consider = [&](double q0, double q1) {
    if (q0 < lo0 - 1e-15 || q0 > up0 + 1e-15) return;
    if (q1 < lo1 - 1e-15 || q1 > up1 + 1e-15) return;
    const double q2 = 1.0 - q0 - q1;
    if (q2 < box.lower_bound(2) - 1e-15 || q2 > box.upper_bound(2) + 1e-15) return;
    double obj = cost * q2;
    const double qs[3] = {q0, q1, q2};
    for (int k = 0; k < 3; ++k) {
      if (qs[k] <= 0.0) continue;
      if (p[k] <= 0.0) return;
      obj += qs[k] * std::log2(qs[k] / p[k]);
    }
    best = std::min(best, obj);
  };
  for (std::size_t i = 0; i <= steps; ++i) {
    const double q0 = lo0 + (up0 - lo0) * static_cast<double>(i) / static_cast<double>(steps);
    for (std::size_t j = 0; j <= steps; ++j) {
      consider(q0, lo1 + (up1 - lo1) * static_cast<double>(j) / static_cast<double>(steps));
    }
    consider(q0, 1.0 - q0 - box.lower_bound(2));
    consider(q0, 1.0 - q0 - box.upper_bound(2));
  }
  // Corners where the q1 and q2 bounds intersect.
  for (double q1 : {lo1, up1}) {
    consider(1.0 - q1 - box.lower_bound(2), q1);
    consider(1.0 - q1 - box.upper_bound(2), q1);
  }
  return best;
}

}  // namespace

TEST_CASE("honest distribution endpoints and defaults") {
  HonestModel h;
  h.gamma = 0.0;
  Distribution3 q = honest_distribution(h);
  CHECK(q[0] == 0.0);
  CHECK(q[1] == 0.0);
  CHECK(q[2] == 1.0);

  h.gamma = 1.0;
  h.omega_hon = 1.0;
  q = honest_distribution(h);
  CHECK(q[0] == 0.0);
  CHECK(q[1] == 1.0);
  CHECK(q[2] == 0.0);

  const HonestModel defaults{};
  q = honest_distribution(defaults);
  CHECK(q[0] == doctest::Approx(0.0086328125).epsilon(1e-12));
  CHECK(q[1] == doctest::Approx(0.0421484375).epsilon(1e-12));
  CHECK(q[2] == doctest::Approx(0.94921875).epsilon(1e-12));
  CHECK(q[0] + q[1] + q[2] == doctest::Approx(1.0).epsilon(1e-15));
}

TEST_CASE("acceptance box: probability-zero symbols get zero lower slack") {
  HonestModel h;
  h.gamma = 0.0;  // q_hon = (0, 0, 1)
  const AcceptanceSet acc = build_acceptance(h, 1000, 1e-3);
  CHECK(acc.delta_low[0] == 0.0);
  CHECK(acc.delta_low[1] == 0.0);
  CHECK(acc.delta_upp[2] == 0.0);
  CHECK(acc.contains(honest_distribution(h)));
}

TEST_CASE("acceptance box deltas match the direct quantile computation") {
  const HonestModel h{};
  const std::uint64_t n = 100000;
  const AcceptanceSet acc = build_acceptance(h, n, 1e-3);
  const Distribution3 q = honest_distribution(h);
  for (std::size_t i = 0; i < 3; ++i) {
    CHECK(acc.delta_low[i] ==
          binomial_quantile_delta(n, q[i], 1e-3 / 6.0, TailSide::lower));
    CHECK(acc.delta_upp[i] ==
          binomial_quantile_delta(n, q[i], 1e-3 / 6.0, TailSide::upper));
    CHECK(acc.delta_low[i] >= 0.0);
    CHECK(acc.delta_upp[i] >= 0.0);
  }
}

TEST_CASE("inner optimizer: analytic cases") {
  const HonestModel h{};
  const Distribution3 p = honest_distribution(h);
  // Unconstrained box, zero cost: minimizer is p itself, objective 0.
  const AcceptanceSet box = full_simplex_box(h);
  const InnerSolution sol = minimize_tilted_kl(p, box, 0.0);
  CHECK(sol.objective == doctest::Approx(0.0).epsilon(1e-12));
  for (std::size_t i = 0; i < 3; ++i) CHECK(sol.q[i] == doctest::Approx(p[i]).epsilon(1e-9));

  // With a perpendicular cost the unconstrained optimum tilts away from perp.
  const InnerSolution tilted = minimize_tilted_kl(p, box, 0.7);
  CHECK(tilted.q[2] < p[2]);
  CHECK(tilted.objective > 0.0);
  CHECK(tilted.objective <= 0.7 * p[2]);  // feasible point q = p bounds it

  // Infeasible support: p has no mass on a symbol the box requires.
  Distribution3 p0;
  p0[0] = 0.0;
  p0[1] = 0.5;
  p0[2] = 0.5;
  AcceptanceSet force;
  force.center = honest_distribution(h);
  force.delta_low = {0.001, 1.0, 1.0};
  force.delta_upp = {1.0, 1.0, 1.0};
  CHECK(std::isinf(minimize_tilted_kl(p0, force, 0.0).objective));
}

TEST_CASE("inner optimizer matches the dense grid oracle") {
  std::mt19937_64 rng(53);
  std::uniform_real_distribution<double> unif(0.0, 1.0);
  for (int it = 0; it < 30; ++it) {
    HonestModel h;
    h.gamma = 0.02 + 0.2 * unif(rng);
    h.omega_hon = 0.7 + 0.2 * unif(rng);
    const std::uint64_t n = 10000 + rng() % 1000000;
    const AcceptanceSet box = build_acceptance(h, n, 1e-3);
    const double omega = 0.6 + 0.25 * unif(rng);
    Distribution3 p;
    p[0] = h.gamma * (1.0 - omega);
    p[1] = h.gamma * omega;
    p[2] = 1.0 - h.gamma;
    const double cost = 2.0 * unif(rng);
    const double exact = minimize_tilted_kl(p, box, cost).objective;
    const double grid = inner_by_grid(p, box, cost);
    CHECK(exact <= grid + 1e-12);
    CHECK(grid - exact <= 1e-6);
  }
}

TEST_CASE("single-round trade-off: degenerate boxes") {
  const HonestModel h{};
  // Entire simplex: Eve may sit at the classical bound, value 0.
  CHECK(single_round_tradeoff(1.2, h, full_simplex_box(h)) ==
        doctest::Approx(0.0).epsilon(1e-10));
  // No testing: even a tight box certifies nothing.
  HonestModel untested = h;
  untested.gamma = 0.0;
  const AcceptanceSet acc = build_acceptance(untested, 1000000, 1e-3);
  CHECK(single_round_tradeoff(1.2, untested, acc) == doctest::Approx(0.0).epsilon(1e-10));
  CHECK_THROWS_AS(single_round_tradeoff(1.0, h, full_simplex_box(h)), std::domain_error);
}

TEST_CASE("single-round trade-off matches a dense 2-D scan at the defaults") {
  const HonestModel h{};
  const std::uint64_t n = 1500000;
  const AcceptanceSet acc = build_acceptance(h, n, 1e-3);
  const double alpha = 1.2;
  const double value = single_round_tradeoff(alpha, h, acc);
  CHECK(value > 0.0);

  // Dense scan over omega with the exact inner solve at each point. The
  // rate is hinge-shaped at the classical bound, so omega = 3/4 (a kink the
  // even grid never hits exactly) is sampled explicitly.
  double dense = std::numeric_limits<double>::infinity();
  const double w_max = omega_max();
  auto scan_at = [&](double omega) {
    const double score = std::clamp(8.0 * omega - 4.0, -2.0 * std::sqrt(2.0), 2.0 * std::sqrt(2.0));
    const double f = rate(BellScore{score, 1.0}, {EntropyFamily::sandwiched_down, alpha, 0.0});
    Distribution3 p;
    p[0] = h.gamma * (1.0 - omega);
    p[1] = h.gamma * omega;
    p[2] = 1.0 - h.gamma;
    dense = std::min(dense, minimize_tilted_kl(p, acc, (alpha - 1.0) * f).objective);
  };
  for (int i = 0; i <= 32768; ++i) scan_at(w_max * i / 32768.0);
  scan_at(0.75);
  dense /= (alpha - 1.0);
  CHECK(value <= dense + 1e-12);
  CHECK(dense - value <= 1e-6);
}

TEST_CASE("trade-off is nonincreasing in alpha and grows under shrinking boxes") {
  const HonestModel h{};
  const AcceptanceSet acc = build_acceptance(h, 1500000, 1e-3);
  double prev = std::numeric_limits<double>::infinity();
  for (double alpha : {1.05, 1.2, 1.5, 2.0, 4.0}) {
    const double v = single_round_tradeoff(alpha, h, acc);
    CHECK(v <= prev + 1e-9);
    prev = v;
  }
  // Nested boxes: shrinking the acceptance set cannot lower the infimum.
  AcceptanceSet wider = acc;
  for (std::size_t i = 0; i < 3; ++i) {
    wider.delta_low[i] = acc.delta_low[i] * 4.0;
    wider.delta_upp[i] = acc.delta_upp[i] * 4.0;
  }
  CHECK(single_round_tradeoff(1.2, h, wider) <= single_round_tradeoff(1.2, h, acc) + 1e-10);
}

TEST_CASE("error-correction length") {
  HonestModel h{};
  h.qerr_hon = 0.0;
  h.omega_hon = 1.0;
  CHECK(ec_length(h, 10000) == doctest::Approx(50.0 * 100.0).epsilon(1e-12));

  HonestModel noisy{};
  noisy.gamma = 0.0;
  noisy.qerr_hon = 0.5;
  CHECK(ec_length(noisy, 10000) == doctest::Approx(10000.0 + 5000.0).epsilon(1e-12));

  // Frozen high-precision evaluation at the defaults, n = 1.5e6.
  CHECK(ec_length(HonestModel{}, 1500000) ==
        doctest::Approx(296517.29285783364).epsilon(1e-12));
}

TEST_CASE("key length: positive at reference parameters, zero far below threshold") {
  ProtocolParams p;  // defaults optimize alpha at fixed gamma = 13/256
  const KeyRateResult r = key_length(p);
  CHECK(r.rate > 0.0);
  CHECK(r.ell_key > 0.0);
  CHECK(r.rate <= r.asymptotic_rate + 1e-6);
  CHECK(r.asymptotic_rate == doctest::Approx(0.50705950192013236).epsilon(1e-12));

  ProtocolParams tiny = p;
  tiny.n = 1000;
  const KeyRateResult rt = key_length(tiny);
  CHECK(rt.rate == 0.0);
  CHECK(rt.ell_key < 0.0);
}

TEST_CASE("optimization flags only improve the key length") {
  ProtocolParams p;
  p.n = 300000;
  p.optimize_alpha = false;
  p.alpha = 1.01;
  const KeyRateResult fixed = key_length(p);
  ProtocolParams opt = p;
  opt.optimize_alpha = true;
  const KeyRateResult better = key_length(opt);
  CHECK(better.ell_key >= fixed.ell_key - 1e-6);
  CHECK(better.rate >= fixed.rate - 1e-12);
  ProtocolParams both = opt;
  both.optimize_gamma = true;
  CHECK(key_length(both).ell_key >= better.ell_key - 1e-6);
}

TEST_CASE("sweep: ordering, threshold behavior, determinism") {
  ProtocolParams p;
  p.optimize_alpha = true;
  const std::vector<std::uint64_t> ns{50000, 3000000};
  const auto results = sweep(p, ns);
  REQUIRE(results.size() == 2);
  CHECK(results[0].n == 50000);
  CHECK(results[1].n == 3000000);
  CHECK(results[0].rate == 0.0);
  CHECK(results[1].rate > 0.0);

  const auto again = sweep(p, ns);
  CHECK(results[0].rate == again[0].rate);
  CHECK(results[1].ell_key == again[1].ell_key);
  CHECK(results[1].alpha == again[1].alpha);

  CHECK_THROWS_AS(sweep(p, {}), std::domain_error);
  CHECK_THROWS_AS(sweep(p, {100, 100}), std::domain_error);
}

TEST_CASE("completeness simulation: trivial boxes") {
  const HonestModel h{};
  const AcceptanceSet all = full_simplex_box(h);
  CHECK(simulate_completeness(h, 1000, all, 200, 7) == 0.0);

  AcceptanceSet none;
  none.center = honest_distribution(h);
  none.delta_low = {0.0, 0.0, 0.0};
  none.delta_upp = {0.0, 0.0, 0.0};
  // Zero-width box around a continuous center: essentially always aborts.
  CHECK(simulate_completeness(h, 100000, none, 200, 7) > 0.95);

  // Deterministic for a fixed seed.
  const AcceptanceSet acc = build_acceptance(h, 10000, 1e-3);
  CHECK(simulate_completeness(h, 10000, acc, 500, 42) ==
        simulate_completeness(h, 10000, acc, 500, 42));
}

TEST_CASE("parameter validation") {
  ProtocolParams p;
  p.eps_corr = 1e-9;  // exceeds eps_sound
  CHECK_THROWS_AS(p.validate(), std::domain_error);
  ProtocolParams q;
  q.n = 0;
  CHECK_THROWS_AS(q.validate(), std::domain_error);
  ProtocolParams r;
  r.optimize_alpha = false;
  r.alpha = 1.0;
  CHECK_THROWS_AS(r.validate(), std::domain_error);
  ProtocolParams s;
  s.beta = 0.5;
  CHECK_THROWS_AS(s.validate(), std::domain_error);
}

TEST_CASE("noisy preprocessing flows through the trade-off") {
  const HonestModel h{};
  const AcceptanceSet acc = build_acceptance(h, 1500000, 1e-3);
  const double plain = single_round_tradeoff(1.2, h, acc, 1.0, 0.0);
  const double npp = single_round_tradeoff(1.2, h, acc, 1.0, 0.05);
  CHECK(npp > 0.0);
  CHECK(std::isfinite(npp));
  // The noisy rate floor keeps the trade-off within [0, 1].
  CHECK(npp <= 1.0);
  CHECK(plain <= 1.0);
}
