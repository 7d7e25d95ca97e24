#include "direnyi/rate_functions.hpp"

#include <algorithm>
#include <cmath>

#include "direnyi/noisy_preprocessing.hpp"

namespace direnyi {

namespace {

constexpr double kLn2 = 0.6931471805599453;
constexpr double kAlphaOneTol = 1e-9;   // |alpha-1| below this uses the limit
constexpr double kEdgeScoreTol = 1e-12;
constexpr std::size_t kEnvelopeGridPoints = 2001;

bool is_inf(double a) { return std::isinf(a) && a > 0; }

// log2(phi_mu(g)/2) without cancellation; exact -1 at g=1 and -mu at g=0.
double log2_phi_half(double mu, double g) {
  const double e1 = std::expm1(mu * std::log(0.5 * (1.0 - g)));
  const double e2 = std::expm1(mu * std::log(0.5 * (1.0 + g)));
  return std::log1p(0.5 * (e1 + e2)) / kLn2;
}

struct Transform {
  double mu;      // exponent inside the power sum
  double prefac;  // multiplies log2(phi_mu)
};

Transform family_transform(EntropyFamily family, double alpha) {
  switch (family) {
    case EntropyFamily::sandwiched_down:
      return {1.0 / alpha, alpha / (1.0 - alpha)};
    case EntropyFamily::sandwiched_up:
      return {alpha / (2.0 * alpha - 1.0), (2.0 * alpha - 1.0) / (1.0 - alpha)};
    case EntropyFamily::petz_down:
      return {2.0 - alpha, 1.0 / (1.0 - alpha)};
    case EntropyFamily::petz_up:
      return {1.0 / alpha, alpha / (1.0 - alpha)};
    default:
      throw std::logic_error("family_transform: no power-sum form");
  }
}

void check_alpha_range(EntropyFamily family, double alpha) {
  switch (family) {
    case EntropyFamily::sandwiched_down:
    case EntropyFamily::sandwiched_up:
      if (!(alpha > 1.0 - kAlphaOneTol) || std::isnan(alpha))
        throw std::domain_error("rate: sandwiched families need alpha in (1, inf]");
      return;
    case EntropyFamily::petz_down:
    case EntropyFamily::petz_up:
      if (!(alpha > 1.0 - kAlphaOneTol) || !(alpha <= 2.0 + kEdgeScoreTol))
        throw std::domain_error("rate: Petz families need alpha in (1, 2]");
      return;
    default:
      return;  // alpha ignored
  }
}

double von_neumann_rate(double g) { return 1.0 - binary_entropy(0.5 + 0.5 * g); }

double min_entropy_rate(double g) {
  return 1.0 - std::log2(1.0 + std::sqrt(std::max(0.0, (1.0 - g) * (1.0 + g))));
}

double clamp_rate(double r) { return std::clamp(r, 0.0, 1.0); }

// Closed-form rate for |beta| >= 1 (and the power-sum core of the
// |beta| <= 1 path). Assumes alpha already range-checked, no edge case.
double power_sum_rate(EntropyFamily family, double alpha, double g) {
  const Transform t = family_transform(family, alpha);
  const double u = log2_phi_half(t.mu, g);
  return clamp_rate(1.0 + t.prefac + t.prefac * u);
}

// For |beta| <= 1 the pointwise formula loses the convexity needed for the
// mixing argument, so the rate is evaluated through the concave envelope of
// the combining bracket over the score interval.
double envelope_rate(const BellScore& s, EntropyFamily family, double alpha) {
  const double s_lo = s.classical_score();
  const double s_hi = s.max_score();

  double expo = 1.0, mu = 0.0, prefac = 0.0;
  bool von_neumann = false;
  switch (family) {
    case EntropyFamily::sandwiched_down:
      mu = 1.0 / alpha;
      expo = alpha;
      prefac = 1.0 / (1.0 - alpha);
      break;
    case EntropyFamily::sandwiched_up: {
      const double ap = 2.0 - 1.0 / alpha;
      mu = 1.0 / ap;
      expo = ap;
      prefac = 1.0 / (1.0 - ap);
      break;
    }
    case EntropyFamily::petz_down:
      mu = 2.0 - alpha;
      prefac = 1.0 / (1.0 - alpha);
      break;
    case EntropyFamily::petz_up:
      mu = 1.0 / alpha;
      prefac = alpha / (1.0 - alpha);
      break;
    case EntropyFamily::min_entropy:
      mu = 0.5;
      expo = 2.0;
      prefac = -1.0;
      break;
    case EntropyFamily::von_neumann:
      von_neumann = true;
      break;
  }

  SampledFunction bracket;
  bracket.x.resize(kEnvelopeGridPoints);
  bracket.y.resize(kEnvelopeGridPoints);
  for (std::size_t i = 0; i < kEnvelopeGridPoints; ++i) {
    const double sx = s_lo + (s_hi - s_lo) * static_cast<double>(i) /
                                static_cast<double>(kEnvelopeGridPoints - 1);
    const double g = overlap_g(BellScore{sx, s.beta});
    bracket.x[i] = sx;
    bracket.y[i] = von_neumann ? -von_neumann_rate(g) : std::pow(phi(mu, g), expo);
  }
  const SampledFunction env = concave_envelope(bracket);
  const double h = env.value_at(std::clamp(s.score, s_lo, s_hi));
  if (von_neumann) return clamp_rate(-h);
  return clamp_rate(1.0 + prefac * std::log2(h));
}

}  // namespace

std::string_view family_name(EntropyFamily family) {
  switch (family) {
    case EntropyFamily::sandwiched_down: return "sandwiched-down";
    case EntropyFamily::sandwiched_up: return "sandwiched-up";
    case EntropyFamily::petz_down: return "petz-down";
    case EntropyFamily::petz_up: return "petz-up";
    case EntropyFamily::von_neumann: return "von-neumann";
    case EntropyFamily::min_entropy: return "min-entropy";
  }
  return "unknown";
}

std::optional<EntropyFamily> family_from_name(std::string_view name) {
  if (name == "sandwiched-down") return EntropyFamily::sandwiched_down;
  if (name == "sandwiched-up") return EntropyFamily::sandwiched_up;
  if (name == "petz-down") return EntropyFamily::petz_down;
  if (name == "petz-up") return EntropyFamily::petz_up;
  if (name == "von-neumann") return EntropyFamily::von_neumann;
  if (name == "min-entropy") return EntropyFamily::min_entropy;
  return std::nullopt;
}

double BellScore::max_score() const { return 2.0 * std::sqrt(1.0 + beta * beta); }

double BellScore::classical_score() const { return 2.0 * std::max(std::abs(beta), 1.0); }

void BellScore::validate() const {
  if (!std::isfinite(score) || !std::isfinite(beta))
    throw std::domain_error("BellScore: score and beta must be finite");
  if (std::abs(score) > max_score() + kEdgeScoreTol)
    throw std::domain_error("BellScore: score outside [-2 sqrt(1+beta^2), 2 sqrt(1+beta^2)]");
}

double overlap_g(const BellScore& s) {
  s.validate();
  const double ab = std::abs(s.beta);
  const double b2 = s.beta * s.beta;

  if (ab >= 1.0) {
    if (s.score <= 2.0 * ab) return 0.0;
    const double g = std::sqrt(std::max(0.0, s.score * s.score / 4.0 - b2));
    return std::min(g, 1.0);
  }

  // |beta| <= 1: two-branch overlap, clamped to 0 at or below the classical
  // bound of 2.
  const double sc = s.score;
  if (sc <= 2.0) return 0.0;
  const double branch_point_sq = 4.0 * (1.0 + b2 - b2 * b2);
  double g;
  if (sc * sc >= branch_point_sq) {
    g = std::sqrt(std::max(0.0, sc * sc / 4.0 - b2));
  } else {
    const double inner =
        1.0 - std::sqrt(std::max(0.0, (1.0 - b2) * (sc * sc / 4.0 - 1.0))) / ab;
    g = std::sqrt(std::max(0.0, 1.0 - inner * inner));
  }
  return std::clamp(g, 0.0, 1.0);
}

double phi(double mu, double g) {
  if (!(mu > 0.0)) throw std::domain_error("phi: mu must be positive");
  if (!(g >= 0.0 && g <= 1.0)) throw std::domain_error("phi: g outside [0,1]");
  return std::pow(0.5 * (1.0 - g), mu) + std::pow(0.5 * (1.0 + g), mu);
}

double rate(const BellScore& s, const RateQuery& rq) {
  s.validate();

  if (rq.npp_q != 0.0) {
    if (!npp_supported(rq.family))
      throw std::domain_error("rate: noisy preprocessing only for sandwiched-down, petz-down, petz-up");
    return npp_rate(s, rq.family, rq.alpha, rq.npp_q);
  }

  check_alpha_range(rq.family, rq.alpha);
  const double g = overlap_g(s);

  switch (rq.family) {
    case EntropyFamily::von_neumann:
      if (std::abs(s.beta) < 1.0) return envelope_rate(s, rq.family, 0.0);
      return clamp_rate(von_neumann_rate(g));
    case EntropyFamily::min_entropy:
      if (std::abs(s.beta) < 1.0) return envelope_rate(s, rq.family, 0.0);
      return clamp_rate(min_entropy_rate(g));
    case EntropyFamily::sandwiched_down:
      if (is_inf(rq.alpha)) return rate_edge(s, RateEdge::sandwiched_down_inf);
      break;
    case EntropyFamily::sandwiched_up:
      if (is_inf(rq.alpha)) {
        if (std::abs(s.beta) < 1.0) return envelope_rate(s, EntropyFamily::min_entropy, 0.0);
        return clamp_rate(min_entropy_rate(g));
      }
      break;
    case EntropyFamily::petz_down:
      if (rq.alpha >= 2.0 - kEdgeScoreTol) return rate_edge(s, RateEdge::petz_down_two);
      break;
    case EntropyFamily::petz_up:
      break;
  }

  if (std::abs(rq.alpha - 1.0) < kAlphaOneTol) {
    if (std::abs(s.beta) < 1.0) return envelope_rate(s, EntropyFamily::von_neumann, 0.0);
    return clamp_rate(von_neumann_rate(g));
  }
  if (std::abs(s.beta) < 1.0) return envelope_rate(s, rq.family, rq.alpha);
  return power_sum_rate(rq.family, rq.alpha, g);
}

double rate_edge(const BellScore& s, RateEdge) {
  s.validate();
  return std::abs(s.score - s.max_score()) <= kEdgeScoreTol ? 1.0 : 0.0;
}

double duality_gap(const BellScore& s, double alpha) {
  if (!(alpha > 1.0) || std::isinf(alpha))
    throw std::domain_error("duality_gap: alpha must lie in (1, inf)");
  const double up = rate(s, {EntropyFamily::sandwiched_up, alpha, 0.0});
  const double down = rate(s, {EntropyFamily::sandwiched_down, 2.0 - 1.0 / alpha, 0.0});
  return up - down;
}

}  // namespace direnyi
