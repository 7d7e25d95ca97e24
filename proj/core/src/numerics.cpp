#include "direnyi/numerics.hpp"

#include <algorithm>

namespace direnyi {

namespace {

constexpr double kHalfLn2Pi = 0.9189385332046727;  // 0.5*ln(2*pi)

// Stirling series remainder: lgamma(x) - [(x-0.5)ln(x) - x + 0.5 ln(2 pi)].
double stirlerr(double x) {
  if (x < 16.0) {
    return std::lgamma(x) - ((x - 0.5) * std::log(x) - x + kHalfLn2Pi);
  }
  const double x2 = x * x;
  // 1/12x - 1/360x^3 + 1/1260x^5 - 1/1680x^7 + 1/1188x^9
  return (1.0 / 12.0 - (1.0 / 360.0 - (1.0 / 1260.0 - (1.0 / 1680.0 - 1.0 / (1188.0 * x2) / x2) / x2) / x2) / x2) / x;
}

// Binomial deviance bd0(x, m) = x ln(x/m) + m - x, evaluated without
// cancellation when x is close to m (series in (x-m)/(x+m)).
double bd0(double x, double m) {
  if (x == 0.0) return m;
  if (std::abs(x - m) < 0.1 * (x + m)) {
    const double v = (x - m) / (x + m);
    double s = (x - m) * v;
    double ej = 2.0 * x * v;
    const double v2 = v * v;
    for (int j = 1; j < 1000; ++j) {
      ej *= v2;
      const double s1 = s + ej / (2.0 * j + 1.0);
      if (s1 == s) return s1;
      s = s1;
    }
    return s;
  }
  return x * std::log(x / m) + m - x;
}

// ln of x^a (1-x)^b / B(a,b), symmetric under (a,b,x) -> (b,a,1-x).
double log_beta_front(double a, double b, double x) {
  const double n = a + b;
  return -bd0(a, x * n) - bd0(b, (1.0 - x) * n) - stirlerr(a) - stirlerr(b) +
         stirlerr(n) + 0.5 * std::log(a * b / (2.0 * M_PI * n));
}

// Continued fraction for the incomplete beta function, modified Lentz.
// Near the crossover x ~ a/(a+b) convergence takes ~sqrt(max(a,b))
// iterations, so the cap scales with the arguments.
double betacf(double a, double b, double x) {
  const int kMaxIter =
      500 + static_cast<int>(4.0 * std::sqrt(std::max(a, b)) < 1.0e6
                                 ? 4.0 * std::sqrt(std::max(a, b))
                                 : 1.0e6);
  constexpr double kEps = 1e-13;
  constexpr double kFpMin = 1e-300;

  const double qab = a + b;
  const double qap = a + 1.0;
  const double qam = a - 1.0;
  double c = 1.0;
  double d = 1.0 - qab * x / qap;
  if (std::abs(d) < kFpMin) d = kFpMin;
  d = 1.0 / d;
  double h = d;
  for (int m = 1; m <= kMaxIter; ++m) {
    const double m2 = 2.0 * m;
    double aa = m * (b - m) * x / ((qam + m2) * (a + m2));
    d = 1.0 + aa * d;
    if (std::abs(d) < kFpMin) d = kFpMin;
    c = 1.0 + aa / c;
    if (std::abs(c) < kFpMin) c = kFpMin;
    d = 1.0 / d;
    h *= d * c;
    aa = -(a + m) * (qab + m) * x / ((a + m2) * (qap + m2));
    d = 1.0 + aa * d;
    if (std::abs(d) < kFpMin) d = kFpMin;
    c = 1.0 + aa / c;
    if (std::abs(c) < kFpMin) c = kFpMin;
    d = 1.0 / d;
    const double del = d * c;
    h *= del;
    if (std::abs(del - 1.0) < kEps) return h;
  }
  throw std::runtime_error("regularized_incomplete_beta: continued fraction did not converge");
}

}  // namespace

bool Distribution3::is_valid() const {
  double sum = 0.0;
  for (double v : p) {
    if (!std::isfinite(v) || v < -kDistributionTol || v > 1.0 + kDistributionTol) return false;
    sum += v;
  }
  return std::abs(sum - 1.0) <= kDistributionTol;
}

void Distribution3::validate() const {
  if (!is_valid()) throw std::domain_error("Distribution3: entries must lie in [0,1] and sum to 1");
}

void SampledFunction::validate() const {
  if (x.size() != y.size()) throw std::invalid_argument("SampledFunction: size mismatch");
  if (x.size() < 2) throw std::invalid_argument("SampledFunction: need at least 2 samples");
  for (std::size_t i = 0; i < x.size(); ++i) {
    if (!std::isfinite(x[i]) || !std::isfinite(y[i]))
      throw std::invalid_argument("SampledFunction: values must be finite");
    if (i > 0 && !(x[i] > x[i - 1]))
      throw std::invalid_argument("SampledFunction: abscissae must be strictly increasing");
  }
}

double SampledFunction::value_at(double xq) const {
  if (xq <= x.front()) return y.front();
  if (xq >= x.back()) return y.back();
  const auto it = std::upper_bound(x.begin(), x.end(), xq);
  const std::size_t hi = static_cast<std::size_t>(it - x.begin());
  const std::size_t lo = hi - 1;
  const double t = (xq - x[lo]) / (x[hi] - x[lo]);
  return y[lo] + t * (y[hi] - y[lo]);
}

double binary_entropy(double x) {
  if (!std::isfinite(x) || x < -kDistributionTol || x > 1.0 + kDistributionTol)
    throw std::domain_error("binary_entropy: argument outside [0,1]");
  x = std::clamp(x, 0.0, 1.0);
  double h = 0.0;
  if (x > 0.0) h -= x * std::log2(x);
  if (x < 1.0) h -= (1.0 - x) * std::log2(1.0 - x);
  return h;
}

double kl_divergence(const Distribution3& q, const Distribution3& p) {
  q.validate();
  p.validate();
  double sum = 0.0;
  for (std::size_t i = 0; i < 3; ++i) {
    const double qi = std::max(q[i], 0.0);
    if (qi == 0.0) continue;
    const double pi = p[i];
    if (pi <= 0.0) return std::numeric_limits<double>::infinity();
    sum += qi * std::log2(qi / pi);
  }
  return sum;
}

double regularized_incomplete_beta(double a, double b, double x) {
  if (!(a > 0.0) || !(b > 0.0)) throw std::domain_error("regularized_incomplete_beta: a, b must be positive");
  if (!(x >= 0.0 && x <= 1.0)) throw std::domain_error("regularized_incomplete_beta: x outside [0,1]");
  if (x == 0.0) return 0.0;
  if (x == 1.0) return 1.0;
  const double front = std::exp(log_beta_front(a, b, x));
  if (x < (a + 1.0) / (a + b + 2.0)) {
    return front * betacf(a, b, x) / a;
  }
  return 1.0 - front * betacf(b, a, 1.0 - x) / b;
}

double binomial_tail(std::uint64_t k, std::uint64_t n, double p, TailSide side) {
  if (k > n) throw std::domain_error("binomial_tail: k must not exceed n");
  if (!(p >= 0.0 && p <= 1.0)) throw std::domain_error("binomial_tail: p outside [0,1]");
  const double kd = static_cast<double>(k);
  const double nd = static_cast<double>(n);
  if (side == TailSide::lower) {
    if (k == n) return 1.0;
    if (p == 0.0) return 1.0;
    if (p == 1.0) return 0.0;
    return regularized_incomplete_beta(nd - kd, kd + 1.0, 1.0 - p);
  }
  if (k == 0) return 1.0;
  if (p == 0.0) return 0.0;
  if (p == 1.0) return 1.0;
  return regularized_incomplete_beta(kd, nd - kd + 1.0, p);
}

double binomial_quantile_delta(std::uint64_t n, double p, double eps, TailSide side) {
  if (n == 0) throw std::domain_error("binomial_quantile_delta: n must be positive");
  if (!(p >= 0.0 && p <= 1.0)) throw std::domain_error("binomial_quantile_delta: p outside [0,1]");
  if (!(eps > 0.0 && eps < 1.0)) throw std::domain_error("binomial_quantile_delta: eps outside (0,1)");
  const double nd = static_cast<double>(n);

  if (side == TailSide::lower) {
    // Pr[X/n < k/n] = Pr[X <= k-1]; find the largest k with that tail <= eps.
    auto ok = [&](std::uint64_t k) {
      return k == 0 || binomial_tail(k - 1, n, p, TailSide::lower) <= eps;
    };
    std::uint64_t lo = 0, hi = n;  // ok(0) always holds
    while (lo < hi) {
      const std::uint64_t mid = lo + (hi - lo + 1) / 2;
      if (ok(mid)) lo = mid; else hi = mid - 1;
    }
    return std::max(0.0, p - static_cast<double>(lo) / nd);
  }

  // Pr[X/n > k/n] = Pr[X >= k+1]; find the smallest k with that tail <= eps.
  auto ok = [&](std::uint64_t k) {
    return k == n || binomial_tail(k + 1, n, p, TailSide::upper) <= eps;
  };
  std::uint64_t lo = 0, hi = n;  // ok(n) always holds
  while (lo < hi) {
    const std::uint64_t mid = lo + (hi - lo) / 2;
    if (ok(mid)) hi = mid; else lo = mid + 1;
  }
  return std::max(0.0, static_cast<double>(lo) / nd - p);
}

SampledFunction concave_envelope(const SampledFunction& f) {
  f.validate();
  const std::size_t n = f.x.size();

  // Upper hull by monotone chain: pop while the middle point lies on or
  // below the chord of its neighbours.
  std::vector<std::size_t> hull;
  hull.reserve(n);
  auto cross = [&f](std::size_t o, std::size_t a, std::size_t b) {
    return (f.x[a] - f.x[o]) * (f.y[b] - f.y[o]) - (f.y[a] - f.y[o]) * (f.x[b] - f.x[o]);
  };
  for (std::size_t i = 0; i < n; ++i) {
    while (hull.size() >= 2 && cross(hull[hull.size() - 2], hull.back(), i) >= 0.0) {
      hull.pop_back();
    }
    hull.push_back(i);
  }

  SampledFunction env;
  env.x = f.x;
  env.y.resize(n);
  std::size_t seg = 0;
  for (std::size_t i = 0; i < n; ++i) {
    while (seg + 1 < hull.size() && f.x[hull[seg + 1]] < f.x[i]) ++seg;
    const std::size_t a = hull[seg];
    const std::size_t b = hull[std::min(seg + 1, hull.size() - 1)];
    double v;
    if (a == b || f.x[i] <= f.x[a]) {
      v = f.y[a];
    } else {
      const double t = (f.x[i] - f.x[a]) / (f.x[b] - f.x[a]);
      v = f.y[a] + t * (f.y[b] - f.y[a]);
    }
    env.y[i] = std::max(v, f.y[i]);
  }
  return env;
}

namespace detail {

ScalarMinimum golden_section(const double* xs, const double* ys, std::size_t n,
                             double lo, double hi, double tol, void* ctx,
                             double (*eval)(void*, double)) {
  std::size_t best_i = 0;
  for (std::size_t i = 1; i < n; ++i)
    if (ys[i] < ys[best_i]) best_i = i;

  ScalarMinimum best{xs[best_i], ys[best_i]};
  double a = (best_i == 0) ? lo : xs[best_i - 1];
  double b = (best_i == n - 1) ? hi : xs[best_i + 1];

  constexpr double kInvPhi = 0.6180339887498949;
  double x1 = b - kInvPhi * (b - a);
  double x2 = a + kInvPhi * (b - a);
  double f1 = eval(ctx, x1);
  double f2 = eval(ctx, x2);
  auto consider = [&best](double x, double v) {
    if (v < best.value) best = {x, v};
  };
  consider(x1, f1);
  consider(x2, f2);
  for (int it = 0; it < 400 && (b - a) > tol; ++it) {
    if (f1 <= f2) {
      b = x2;
      x2 = x1;
      f2 = f1;
      x1 = b - kInvPhi * (b - a);
      f1 = eval(ctx, x1);
      consider(x1, f1);
    } else {
      a = x1;
      x1 = x2;
      f1 = f2;
      x2 = a + kInvPhi * (b - a);
      f2 = eval(ctx, x2);
      consider(x2, f2);
    }
  }
  return best;
}

}  // namespace detail

}  // namespace direnyi
