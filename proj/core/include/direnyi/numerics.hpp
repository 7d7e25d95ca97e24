#pragma once

#include <array>
#include <cmath>
#include <cstdint>
#include <limits>
#include <stdexcept>
#include <utility>
#include <vector>

namespace direnyi {

inline constexpr double kDistributionTol = 1e-12;

/// Probability distribution over the fixed three-symbol alphabet (0, 1, perp).
struct Distribution3 {
  std::array<double, 3> p{0.0, 0.0, 1.0};

  double operator[](std::size_t i) const { return p[i]; }
  double& operator[](std::size_t i) { return p[i]; }

  bool is_valid() const;
  void validate() const;
};

/// Real function sampled on a strictly increasing grid, with linear
/// interpolation between samples.
struct SampledFunction {
  std::vector<double> x;
  std::vector<double> y;

  void validate() const;
  /// Linear interpolation; clamps queries to the grid range.
  double value_at(double xq) const;
};

enum class TailSide { lower, upper };

/// Binary entropy in bits, with the 0 log 0 = 0 convention.
/// Inputs within 1e-12 outside [0,1] are clamped; anything farther throws.
double binary_entropy(double x);

/// KL divergence in bits, sum_x q(x) log2(q(x)/p(x)).
/// Returns +infinity when q puts mass where p has none.
double kl_divergence(const Distribution3& q, const Distribution3& p);

/// Regularized incomplete beta function I_x(a, b), continued-fraction
/// evaluation. Accurate for a, b up to ~1e10.
double regularized_incomplete_beta(double a, double b, double x);

/// Pr[X <= k] (lower) or Pr[X >= k] (upper) for X ~ Binomial(n, p),
/// via the regularized incomplete beta function (no summation).
double binomial_tail(std::uint64_t k, std::uint64_t n, double p, TailSide side);

/// Smallest delta >= 0 such that Pr[X/n < p - delta] <= eps (lower) or
/// Pr[X/n > p + delta] <= eps (upper). Found by integer bisection on the
/// count threshold; the result is always of the form |p - k/n|.
double binomial_quantile_delta(std::uint64_t n, double p, double eps, TailSide side);

/// Pointwise-smallest concave majorant of the piecewise-linear interpolant,
/// resampled on the input grid (upper convex hull, monotone chain).
SampledFunction concave_envelope(const SampledFunction& f);

struct ScalarMinimum {
  double argmin = 0.0;
  double value = 0.0;
};

namespace detail {
ScalarMinimum golden_section(const double* xs, const double* ys, std::size_t n,
                             double lo, double hi, double tol, void* ctx,
                             double (*eval)(void*, double));
}

/// Bracketed scalar minimization: dense coarse scan (>= 512 points) followed
/// by golden-section refinement around the best bracket. Non-finite values
/// are treated as +infinity. The returned minimum never exceeds the best
/// value seen on the scan grid.
template <class F>
ScalarMinimum minimize_scalar(F&& f, double lo, double hi, double tol,
                              std::size_t scan_points = 513) {
  if (!(lo < hi)) throw std::invalid_argument("minimize_scalar: lo < hi required");
  if (!(tol > 0.0)) throw std::invalid_argument("minimize_scalar: tol must be positive");
  if (scan_points < 512) scan_points = 512;

  auto clean = [&f](double x) {
    double v = f(x);
    return std::isfinite(v) ? v : std::numeric_limits<double>::infinity();
  };

  std::vector<double> xs(scan_points), ys(scan_points);
  for (std::size_t i = 0; i < scan_points; ++i) {
    xs[i] = lo + (hi - lo) * static_cast<double>(i) / static_cast<double>(scan_points - 1);
    ys[i] = clean(xs[i]);
  }
  struct Ctx {
    decltype(clean)* fn;
  } ctx{&clean};
  return detail::golden_section(
      xs.data(), ys.data(), scan_points, lo, hi, tol, &ctx,
      [](void* c, double x) { return (*static_cast<Ctx*>(c)->fn)(x); });
}

}  // namespace direnyi
