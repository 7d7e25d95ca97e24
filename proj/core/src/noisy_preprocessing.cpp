#include "direnyi/noisy_preprocessing.hpp"

#include <algorithm>
#include <cmath>
#include <map>
#include <memory>
#include <mutex>
#include <tuple>

namespace direnyi {

namespace {

constexpr double kDegenerateTol = 1e-12;  // |1-2q| below this needs the limit
constexpr double kTopOverlapTol = 1e-13;  // g this close to 1 is the degenerate top
constexpr double kMaxAlpha = 1024.0;      // keeps bracket values within double range

void check_npp_args(EntropyFamily family, double alpha, double q, double g) {
  if (!npp_supported(family))
    throw std::domain_error("noisy preprocessing: unsupported entropy family");
  if (family == EntropyFamily::sandwiched_down) {
    if (!(alpha > 1.0) || !(alpha <= kMaxAlpha))
      throw std::domain_error("noisy preprocessing: sandwiched-down needs alpha in (1, 1024]");
  } else {
    if (!(alpha > 1.0) || !(alpha <= 2.0 + 1e-12))
      throw std::domain_error("noisy preprocessing: Petz families need alpha in (1, 2]");
  }
  if (!(q >= 0.0 && q <= 1.0)) throw std::domain_error("noisy preprocessing: q outside [0,1]");
  if (!(g >= 0.0 && g <= 1.0)) throw std::domain_error("noisy preprocessing: g outside [0,1]");
}

double reflect_q(double q) { return q > 0.5 ? 1.0 - q : q; }

// x^mu with the support convention 0^0 = 0 (the alpha -> 2 limit of the
// petz-down bracket keeps only the nonvanishing term).
double pow_support(double x, double mu) {
  if (x == 0.0) return 0.0;
  return std::pow(x, mu);
}

double q_free_bracket(EntropyFamily family, double alpha, double g) {
  switch (family) {
    case EntropyFamily::sandwiched_down:
      return std::pow(phi(1.0 / alpha, g), alpha);
    case EntropyFamily::petz_down:
      return pow_support(0.5 * (1.0 - g), 2.0 - alpha) + pow_support(0.5 * (1.0 + g), 2.0 - alpha);
    default:
      return phi(1.0 / alpha, g);  // petz_up
  }
}

double bracket_impl(EntropyFamily family, double alpha, double q, double g);

// Petz brackets in terms of D = sqrt(g^2 + c^2 (1-g^2)), c = 1-2q, and the
// squared eigenvector components r1_j^2, r2_j^2 of the 2x2 blocks.
double petz_bracket(EntropyFamily family, double alpha, double q, double g) {
  if (std::abs(1.0 - 2.0 * q) < kDegenerateTol) {
    // Degenerate normalizers at q = 1/2: take the two-sided limit value.
    return 0.5 * (bracket_impl(family, alpha, 0.5 - 1e-9, g) +
                  bracket_impl(family, alpha, 0.5 + 1e-9, g));
  }
  const double c = 1.0 - 2.0 * q;  // q < 1/2 after reflection
  const double one_m_g2 = (1.0 - g) * (1.0 + g);
  const double t = c * c * one_m_g2;
  double d = std::sqrt(g * g + t);
  d = std::min(d, 1.0);
  const double g_minus_d = -t / (g + d);  // g - D without cancellation
  const double n1_sq = g_minus_d * g_minus_d + t;
  const double n2_sq = (g + d) * (g + d) + t;
  const double r2_sq_1 = t / n1_sq;
  const double r2_sq_2 = t / n2_sq;

  if (family == EntropyFamily::petz_down) {
    const double r1_sq_1 = g_minus_d * g_minus_d / n1_sq;
    const double r1_sq_2 = (g + d) * (g + d) / n2_sq;
    const double lo = std::pow(1.0 - g, 1.0 - alpha);
    const double hi = std::pow(1.0 + g, 1.0 - alpha);
    return 0.5 * std::pow(1.0 + d, alpha) * (lo * r1_sq_1 + hi * r2_sq_1) +
           0.5 * std::pow(1.0 - d, alpha) * (lo * r1_sq_2 + hi * r2_sq_2);
  }

  // petz_up
  const double wp = std::pow(0.5 * (1.0 + d), alpha);
  const double wm = std::pow(0.5 * (1.0 - d), alpha);
  const double mu1 = wp * (1.0 - r2_sq_1) + wm * (1.0 - r2_sq_2);
  const double mu2 = wp * r2_sq_1 + wm * r2_sq_2;
  return std::pow(mu1, 1.0 / alpha) + std::pow(mu2, 1.0 / alpha);
}

double sandwiched_bracket(double alpha, double q, double g) {
  const double a_sum = std::pow(1.0 - g, 1.0 / alpha) + std::pow(1.0 + g, 1.0 / alpha);
  const double cross = 16.0 * std::pow((1.0 - g) * (1.0 + g), 1.0 / alpha) * (q - q * q);
  const double disc = std::sqrt(std::max(0.0, a_sum * a_sum - cross));
  // Evaluated in log space; the raw powers overflow for large alpha.
  double h = std::exp2(alpha * std::log2(a_sum + disc) - (alpha + 1.0));
  if (a_sum - disc > 0.0)
    h += std::exp2(alpha * std::log2(a_sum - disc) - (alpha + 1.0));
  return h;
}

double bracket_impl(EntropyFamily family, double alpha, double q, double g) {
  if (q == 0.0) return q_free_bracket(family, alpha, g);
  if (g >= 1.0 - kTopOverlapTol) return 1.0;  // degenerate top: both blocks coincide
  if (family == EntropyFamily::sandwiched_down) return sandwiched_bracket(alpha, q, g);
  return petz_bracket(family, alpha, q, g);
}

double log_prefactor(EntropyFamily family, double alpha) {
  return family == EntropyFamily::petz_up ? alpha / (1.0 - alpha) : 1.0 / (1.0 - alpha);
}

}  // namespace

bool npp_supported(EntropyFamily family) {
  return family == EntropyFamily::sandwiched_down || family == EntropyFamily::petz_down ||
         family == EntropyFamily::petz_up;
}

double npp_bracket(EntropyFamily family, double alpha, double q, double g) {
  check_npp_args(family, alpha, q, g);
  return bracket_impl(family, alpha, reflect_q(q), g);
}

double npp_bracket_rate(EntropyFamily family, double alpha, double q, double g) {
  const double h = npp_bracket(family, alpha, q, g);
  const double r = 1.0 + log_prefactor(family, alpha) * std::log2(h);
  return std::clamp(r, 0.0, 1.0);
}

double NppBracket::rate_at(double score) const {
  const double h = envelope.value_at(score);
  const double r = 1.0 + log_prefactor(family, alpha) * std::log2(h);
  return std::clamp(r, 0.0, 1.0);
}

const NppBracket& npp_bracket_table(EntropyFamily family, double alpha, double q,
                                    double beta, std::size_t grid_points) {
  if (std::abs(beta) < 1.0)
    throw std::domain_error("noisy preprocessing: requires |beta| >= 1");
  if (grid_points < 3) throw std::invalid_argument("npp_bracket_table: grid too small");
  q = reflect_q(q);
  check_npp_args(family, alpha, q, 0.0);

  using Key = std::tuple<int, double, double, double, std::size_t>;
  static std::map<Key, std::unique_ptr<NppBracket>> cache;
  static std::mutex mutex;

  const Key key{static_cast<int>(family), alpha, q, beta, grid_points};
  std::lock_guard<std::mutex> lock(mutex);
  auto it = cache.find(key);
  if (it != cache.end()) return *it->second;

  auto entry = std::make_unique<NppBracket>();
  entry->family = family;
  entry->alpha = alpha;
  entry->q = q;
  entry->beta = beta;
  const double s_lo = 2.0 * std::abs(beta);
  const double s_hi = 2.0 * std::sqrt(1.0 + beta * beta);
  entry->grid.x.resize(grid_points);
  entry->grid.y.resize(grid_points);
  for (std::size_t i = 0; i < grid_points; ++i) {
    const double s = s_lo + (s_hi - s_lo) * static_cast<double>(i) /
                                static_cast<double>(grid_points - 1);
    entry->grid.x[i] = s;
    entry->grid.y[i] = bracket_impl(family, alpha, q, overlap_g(BellScore{s, beta}));
  }
  entry->envelope = concave_envelope(entry->grid);
  return *cache.emplace(key, std::move(entry)).first->second;
}

double npp_rate(const BellScore& s, EntropyFamily family, double alpha, double q) {
  s.validate();
  if (std::abs(s.beta) < 1.0)
    throw std::domain_error("noisy preprocessing: requires |beta| >= 1");
  q = reflect_q(q);
  check_npp_args(family, alpha, q, 0.0);
  if (q == 0.0) return rate(s, {family, alpha, 0.0});

  const NppBracket& table = npp_bracket_table(family, alpha, q, s.beta);
  return table.rate_at(std::clamp(s.score, s.classical_score(), s.max_score()));
}

}  // namespace direnyi
