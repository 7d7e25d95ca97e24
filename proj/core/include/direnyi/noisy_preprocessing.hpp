#pragma once

#include "direnyi/numerics.hpp"
#include "direnyi/rate_functions.hpp"

namespace direnyi {

/// Families with a noisy-preprocessing rate formula.
bool npp_supported(EntropyFamily family);

/// Combining bracket h(g) at flip probability q (pre-envelope). Strictly
/// positive; equals the q-free bracket at q = 0. q and 1-q are equivalent,
/// the public interface reflects q into [0, 1/2].
double npp_bracket(EntropyFamily family, double alpha, double q, double g);

/// Rate obtained from the pointwise bracket, 1 + prefac * log2(h(g)).
/// This is the exact entropy of the two-block attack state at overlap g; the
/// certified rate function additionally requires the concave envelope in the
/// score (see npp_rate).
double npp_bracket_rate(EntropyFamily family, double alpha, double q, double g);

/// Bracket values over the score interval together with their concave
/// envelope; immutable once built.
struct NppBracket {
  EntropyFamily family = EntropyFamily::sandwiched_down;
  double alpha = 0.0;
  double q = 0.0;
  double beta = 1.0;
  SampledFunction grid;
  SampledFunction envelope;

  /// Envelope value interpolated at the score, passed through the family's
  /// log transform. Clamped to [0,1].
  double rate_at(double score) const;
};

/// Memoized bracket/envelope table per (family, alpha, q, beta).
/// Construction is idempotent; concurrent reads are safe.
const NppBracket& npp_bracket_table(EntropyFamily family, double alpha, double q,
                                    double beta, std::size_t grid_points = 2001);

/// Noisy-preprocessing rate: concave envelope of the bracket over
/// [2|beta|, 2 sqrt(1+beta^2)], evaluated at the score, log-transformed.
/// Requires |beta| >= 1. Reduces to the q-free rate at q = 0.
double npp_rate(const BellScore& s, EntropyFamily family, double alpha, double q);

}  // namespace direnyi
