#pragma once

#include <Eigen/Dense>
#include <cstddef>
#include <vector>

#include "direnyi/rate_functions.hpp"

namespace direnyi {

using ComplexMatrix = Eigen::MatrixXcd;
using ComplexVector = Eigen::VectorXcd;

/// Finite classical-quantum state: classical label (the block index) with
/// weight and a normalized conditional density matrix on the quantum side.
/// The joint state is sum_a w_a |a><a| (x) rho_a.
struct CqState {
  struct Block {
    double weight = 0.0;
    ComplexMatrix rho;
  };
  std::vector<Block> blocks;

  Eigen::Index dim() const;
  void validate() const;
  /// Reduced state on the quantum side, sum_a w_a rho_a.
  ComplexMatrix reduced() const;
};

/// Two-qubit strategy with environment: pure state on Q_A (x) Q_B (x) E and
/// binary observables (2x2 Hermitian, squaring to the identity).
struct QubitStrategy {
  ComplexVector state;  // dimension 4 * env_dim
  ComplexMatrix alice0, alice1, bob0, bob1;

  Eigen::Index env_dim() const;
  void validate() const;
};

/// Eve's optimal two-block attack at the given asymmetric score
/// (|beta| >= 1): measures sqrt(P+)|phi+>|0> + sqrt(P-)|phi->|1> with
/// A0 = sz, A1 = sx, B_{0,1} = (beta sz +- g sx)/sqrt(beta^2 + g^2).
QubitStrategy build_attack(const BellScore& s);

/// Asymmetric CHSH score beta(<A0B0> + <A0B1>) + <A1B0> - <A1B1>.
double chsh_score(const QubitStrategy& st, double beta);

/// Winning probability of the CHSH game (A xor B = X.Y, uniform inputs),
/// computed from the measurement projectors.
double chsh_winning_probability(const QubitStrategy& st);

/// Measures alice0 projectively, traces out both qubits, and mixes the
/// outcome blocks with flip probability npp_q. Returns the two-label
/// classical-quantum post-measurement state.
CqState measure_keygen(const QubitStrategy& st, double npp_q);

/// Conditional Renyi entropy H(A|E) of a cq state in bits, by
/// eigendecomposition. alpha = 1 gives the von Neumann entropy, alpha =
/// infinity the corresponding limit. The sandwiched_up value is a numerical
/// supremum over conditioning states (derivative-free search from several
/// starting points, always at least the value at the candidate optimizer).
double renyi_entropy(const CqState& state, EntropyFamily family, double alpha);

struct VerificationGrid {
  std::vector<double> alphas{1.1, 1.5, 2.0, 3.0, 10.0};
  std::vector<double> betas{1.0, 1.2, 2.0};
  std::vector<double> npp_qs{0.0, 0.05, 0.25};
  std::size_t score_points = 11;
  std::vector<EntropyFamily> families{
      EntropyFamily::sandwiched_down, EntropyFamily::sandwiched_up,
      EntropyFamily::petz_down, EntropyFamily::petz_up};
  /// Test fixture: added to every analytic value before comparison.
  double analytic_bias = 0.0;

  bool empty() const;
};

struct TightnessRow {
  EntropyFamily family;
  double alpha, score, beta, q;
  double analytic, oracle, abs_dev;
};

struct TightnessReport {
  std::vector<TightnessRow> rows;
  double max_abs_dev = 0.0;
  std::size_t worst_index = 0;
};

/// Compares the analytic rate functions against the oracle entropy of the
/// explicit attack states over the grid. For q > 0 the comparison is against
/// the pointwise (pre-envelope) bracket transform; Petz families are capped
/// at alpha = 2 and sandwiched_up is skipped for q > 0.
TightnessReport verify_tightness(const VerificationGrid& grid, unsigned workers = 0);

}  // namespace direnyi
