#pragma once

#include <optional>
#include <string>
#include <string_view>

#include "direnyi/numerics.hpp"

namespace direnyi {

enum class EntropyFamily {
  sandwiched_down,
  sandwiched_up,
  petz_down,
  petz_up,
  von_neumann,
  min_entropy,
};

std::string_view family_name(EntropyFamily family);
std::optional<EntropyFamily> family_from_name(std::string_view name);

/// Asymmetric CHSH score S with weight beta on the x=0 correlators.
/// Quantum scores lie in [-2 sqrt(1+beta^2), 2 sqrt(1+beta^2)]; scores at or
/// below the classical bound (2|beta| for |beta| >= 1, 2 otherwise) carry no
/// certifiable randomness and are clamped to overlap 0.
struct BellScore {
  double score = 2.0;
  double beta = 1.0;

  double max_score() const;        // 2 sqrt(1 + beta^2)
  double classical_score() const;  // 2 max(|beta|, 1)
  void validate() const;
};

/// Selects an entropy rate function: family, Renyi order, and the
/// noisy-preprocessing flip probability (0 disables).
struct RateQuery {
  EntropyFamily family = EntropyFamily::von_neumann;
  double alpha = 0.0;  // ignored by von_neumann / min_entropy
  double npp_q = 0.0;
};

/// Overlap between Eve's two conditional states in the optimal attack,
/// g = sqrt(S^2/4 - beta^2) for |beta| >= 1 and the two-branch extension for
/// |beta| <= 1. Sub-classical scores return 0.
double overlap_g(const BellScore& s);

/// Two-term power sum ((1-g)/2)^mu + ((1+g)/2)^mu, mu > 0, g in [0,1].
double phi(double mu, double g);

/// Entropy rate in bits certified at the given score. Always in [0,1].
/// For npp_q > 0 dispatches to the noisy-preprocessing rates (supported for
/// sandwiched_down, petz_down, petz_up with |beta| >= 1 only).
double rate(const BellScore& s, const RateQuery& rq);

enum class RateEdge { sandwiched_down_inf, petz_down_two };

/// The two discontinuous boundary cases (alpha = infinity for
/// sandwiched_down, alpha = 2 for petz_down): 1 exactly at the maximal
/// score (within 1e-12), 0 elsewhere.
double rate_edge(const BellScore& s, RateEdge which);

/// rate(sandwiched_up, alpha) - rate(sandwiched_down, 2 - 1/alpha); zero for
/// all valid inputs, kept as a verification helper.
double duality_gap(const BellScore& s, double alpha);

}  // namespace direnyi
