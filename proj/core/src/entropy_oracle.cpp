#include "direnyi/entropy_oracle.hpp"

#include <algorithm>
#include <atomic>
#include <cmath>
#include <complex>
#include <thread>

#include "direnyi/noisy_preprocessing.hpp"

namespace direnyi {

namespace {

using Complex = std::complex<double>;

constexpr double kHermitianTol = 1e-12;
constexpr double kEigenClipTol = -1e-10;   // eigenvalues below this are an error
constexpr double kSupportRelTol = 1e-13;   // relative support cutoff
constexpr double kAlphaOneTol = 1e-9;
const double kInf = std::numeric_limits<double>::infinity();

void check_hermitian(const ComplexMatrix& m) {
  if (m.rows() != m.cols()) throw std::invalid_argument("matrix must be square");
  if ((m - m.adjoint()).cwiseAbs().maxCoeff() > kHermitianTol)
    throw std::domain_error("matrix is not Hermitian within tolerance");
}

struct EigenSystem {
  Eigen::VectorXd values;
  ComplexMatrix vectors;
};

// Eigendecomposition with PSD clipping: eigenvalues in [-1e-10, 0) are
// rounded up to 0, anything below is a numerical-degeneracy error.
EigenSystem psd_eigs(const ComplexMatrix& m) {
  check_hermitian(m);
  Eigen::SelfAdjointEigenSolver<ComplexMatrix> solver(m);
  if (solver.info() != Eigen::Success)
    throw std::runtime_error("eigendecomposition failed");
  EigenSystem sys{solver.eigenvalues(), solver.eigenvectors()};
  for (Eigen::Index i = 0; i < sys.values.size(); ++i) {
    if (sys.values[i] < kEigenClipTol)
      throw std::runtime_error("matrix has a significantly negative eigenvalue");
    if (sys.values[i] < 0.0) sys.values[i] = 0.0;
  }
  return sys;
}

double support_cutoff(const Eigen::VectorXd& values) {
  const double vmax = values.size() ? values.maxCoeff() : 0.0;
  return std::max(vmax, 1.0) * kSupportRelTol;
}

// Fractional power on the support; kernel directions map to zero.
ComplexMatrix power_on_support(const EigenSystem& sys, double expo) {
  const double cut = support_cutoff(sys.values);
  Eigen::VectorXd powered(sys.values.size());
  for (Eigen::Index i = 0; i < sys.values.size(); ++i)
    powered[i] = sys.values[i] > cut ? std::pow(sys.values[i], expo) : 0.0;
  return sys.vectors * powered.asDiagonal() * sys.vectors.adjoint();
}

ComplexMatrix support_projector(const EigenSystem& sys) {
  const double cut = support_cutoff(sys.values);
  Eigen::VectorXd mask(sys.values.size());
  for (Eigen::Index i = 0; i < sys.values.size(); ++i)
    mask[i] = sys.values[i] > cut ? 1.0 : 0.0;
  return sys.vectors * mask.asDiagonal() * sys.vectors.adjoint();
}

// log2 of sum_i lambda_i^alpha over the pooled eigenvalues, evaluated in log
// space so that large alpha (e.g. 1e6) neither overflows nor underflows.
double log2_power_sum(const std::vector<double>& eigs, double alpha) {
  double peak = -kInf;
  for (double v : eigs)
    if (v > 0.0) peak = std::max(peak, alpha * std::log2(v));
  if (!std::isfinite(peak)) return -kInf;
  double acc = 0.0;
  for (double v : eigs)
    if (v > 0.0) acc += std::exp2(alpha * std::log2(v) - peak);
  return peak + std::log2(acc);
}

std::vector<double> pooled_block_eigs(const CqState& state, const ComplexMatrix& kernel_side,
                                      bool sandwich) {
  // Eigenvalues of K (w_a rho_a) K for all blocks (sandwich), or of the raw
  // weighted blocks when kernel_side is empty.
  std::vector<double> eigs;
  for (const auto& blk : state.blocks) {
    if (blk.weight <= 0.0) continue;
    ComplexMatrix m = blk.weight * blk.rho;
    if (sandwich) m = kernel_side * m * kernel_side;
    m = 0.5 * (m + m.adjoint()).eval();
    Eigen::SelfAdjointEigenSolver<ComplexMatrix> solver(m);
    for (Eigen::Index i = 0; i < solver.eigenvalues().size(); ++i)
      eigs.push_back(std::max(0.0, solver.eigenvalues()[i]));
  }
  return eigs;
}

// Mass clipped by the conditioning state's kernel is amplified by
// 1/(alpha - 1) in the entropy, so the leak tolerance sits well below the
// target verification accuracy.
bool outside_support(const CqState& state, const EigenSystem& env) {
  const ComplexMatrix proj = support_projector(env);
  for (const auto& blk : state.blocks) {
    if (blk.weight <= 0.0) continue;
    const double leak =
        blk.weight * std::real((blk.rho - proj * blk.rho * proj).trace());
    if (leak > 1e-12) return true;
  }
  return false;
}

double von_neumann_entropy_bits(const std::vector<double>& eigs) {
  double h = 0.0;
  for (double v : eigs)
    if (v > 0.0) h -= v * std::log2(v);
  return h;
}

double von_neumann_conditional(const CqState& state, const EigenSystem& env) {
  std::vector<double> joint = pooled_block_eigs(state, ComplexMatrix(), false);
  std::vector<double> env_eigs(env.values.data(), env.values.data() + env.values.size());
  return von_neumann_entropy_bits(joint) - von_neumann_entropy_bits(env_eigs);
}

// Guessing probability for two hypotheses (Helstrom): the optimal
// discrimination of the weighted blocks.
double min_entropy_two_labels(const CqState& state) {
  if (state.blocks.size() != 2)
    throw std::domain_error("min-entropy oracle: exactly two classical labels supported");
  const ComplexMatrix diff =
      state.blocks[0].weight * state.blocks[0].rho - state.blocks[1].weight * state.blocks[1].rho;
  Eigen::SelfAdjointEigenSolver<ComplexMatrix> solver(0.5 * (diff + diff.adjoint()));
  double positive_part = 0.0;
  for (Eigen::Index i = 0; i < solver.eigenvalues().size(); ++i)
    positive_part += std::max(0.0, solver.eigenvalues()[i]);
  const double p_guess = state.blocks[1].weight + positive_part;
  return -std::log2(p_guess);
}

double sandwiched_down_entropy(const CqState& state, const EigenSystem& env, double alpha) {
  if (outside_support(state, env)) return -kInf;
  if (std::isinf(alpha)) {
    // -log2 of the largest eigenvalue across blocks of K (w rho) K, K = rho_E^{-1/2}.
    const ComplexMatrix k = power_on_support(env, -0.5);
    const std::vector<double> eigs = pooled_block_eigs(state, k, true);
    const double top = *std::max_element(eigs.begin(), eigs.end());
    return -std::log2(top);
  }
  const ComplexMatrix k = power_on_support(env, (1.0 - alpha) / (2.0 * alpha));
  const std::vector<double> eigs = pooled_block_eigs(state, k, true);
  return log2_power_sum(eigs, alpha) / (1.0 - alpha);
}

double petz_down_entropy(const CqState& state, const EigenSystem& env, double alpha) {
  if (outside_support(state, env)) return -kInf;
  const ComplexMatrix env_pow = power_on_support(env, 1.0 - alpha);
  double total = 0.0;
  for (const auto& blk : state.blocks) {
    if (blk.weight <= 0.0) continue;
    const ComplexMatrix rho_pow = power_on_support(psd_eigs(blk.rho), alpha);
    total += std::pow(blk.weight, alpha) * std::real((rho_pow * env_pow).trace());
  }
  return std::log2(total) / (1.0 - alpha);
}

double petz_up_entropy(const CqState& state, double alpha) {
  ComplexMatrix acc = ComplexMatrix::Zero(state.dim(), state.dim());
  for (const auto& blk : state.blocks) {
    if (blk.weight <= 0.0) continue;
    acc += std::pow(blk.weight, alpha) * power_on_support(psd_eigs(blk.rho), alpha);
  }
  const ComplexMatrix root = power_on_support(psd_eigs(acc), 1.0 / alpha);
  return alpha / (1.0 - alpha) * std::log2(std::real(root.trace()));
}

// ---- sandwiched_up: numerical supremum over conditioning states ----------

// sigma parameterized by a complex lower-triangular factor, sigma = LL*/tr.
ComplexMatrix params_to_state(const std::vector<double>& params, Eigen::Index d) {
  ComplexMatrix l = ComplexMatrix::Zero(d, d);
  std::size_t idx = 0;
  for (Eigen::Index i = 0; i < d; ++i) {
    l(i, i) = params[idx++];
    for (Eigen::Index j = 0; j < i; ++j) {
      const double re = params[idx++];
      const double im = params[idx++];
      l(i, j) = Complex(re, im);
    }
  }
  ComplexMatrix sigma = l * l.adjoint();
  const double tr = std::real(sigma.trace());
  if (!(tr > 1e-300)) return ComplexMatrix::Zero(d, d);
  return sigma / tr;
}

std::vector<double> state_to_params(const ComplexMatrix& sigma) {
  const Eigen::Index d = sigma.rows();
  ComplexMatrix reg = sigma + 1e-12 * ComplexMatrix::Identity(d, d);
  Eigen::LLT<ComplexMatrix> llt(reg);
  ComplexMatrix l = llt.matrixL();
  std::vector<double> params;
  params.reserve(static_cast<std::size_t>(d * d));
  for (Eigen::Index i = 0; i < d; ++i) {
    params.push_back(std::real(l(i, i)));
    for (Eigen::Index j = 0; j < i; ++j) {
      params.push_back(std::real(l(i, j)));
      params.push_back(std::imag(l(i, j)));
    }
  }
  return params;
}

double sandwiched_value_at(const CqState& state, const ComplexMatrix& sigma, double alpha) {
  EigenSystem sys;
  try {
    sys = psd_eigs(sigma);
  } catch (const std::exception&) {
    return -kInf;
  }
  if (outside_support(state, sys)) return -kInf;
  const ComplexMatrix k = power_on_support(sys, (1.0 - alpha) / (2.0 * alpha));
  const std::vector<double> eigs = pooled_block_eigs(state, k, true);
  const double lt = log2_power_sum(eigs, alpha);
  return std::isfinite(lt) ? lt / (1.0 - alpha) : -kInf;
}

// Nelder-Mead ascent (on the negated objective) over the factor parameters.
double nelder_mead_max(const CqState& state, double alpha, std::vector<double> start,
                       double* best_seen) {
  const Eigen::Index d = state.dim();
  const std::size_t n = start.size();
  auto value = [&](const std::vector<double>& p) {
    return sandwiched_value_at(state, params_to_state(p, d), alpha);
  };

  std::vector<std::vector<double>> simplex(n + 1, start);
  std::vector<double> fv(n + 1);
  for (std::size_t i = 0; i < n; ++i) {
    const double step = std::abs(start[i]) > 1e-3 ? 0.05 * std::abs(start[i]) : 5e-3;
    simplex[i + 1][i] += step;
  }
  for (std::size_t i = 0; i <= n; ++i) fv[i] = value(simplex[i]);

  const int max_iter = 400 * static_cast<int>(n);
  for (int it = 0; it < max_iter; ++it) {
    // Sort ascending so the last vertex is the best (maximization).
    std::vector<std::size_t> order(n + 1);
    for (std::size_t i = 0; i <= n; ++i) order[i] = i;
    std::sort(order.begin(), order.end(), [&](std::size_t a, std::size_t b) { return fv[a] < fv[b]; });
    const std::size_t worst = order[0], best = order[n];
    if (std::isfinite(fv[best]) && std::isfinite(fv[worst]) &&
        fv[best] - fv[worst] < 1e-13 && it > 20)
      break;

    std::vector<double> centroid(n, 0.0);
    for (std::size_t i = 0; i <= n; ++i) {
      if (i == worst) continue;
      for (std::size_t j = 0; j < n; ++j) centroid[j] += simplex[i][j];
    }
    for (double& c : centroid) c /= static_cast<double>(n);

    auto blend = [&](double coeff) {
      std::vector<double> p(n);
      for (std::size_t j = 0; j < n; ++j)
        p[j] = centroid[j] + coeff * (simplex[worst][j] - centroid[j]);
      return p;
    };

    const std::vector<double> reflected = blend(-1.0);
    const double fr = value(reflected);
    if (fr > fv[best]) {
      const std::vector<double> expanded = blend(-2.0);
      const double fe = value(expanded);
      if (fe > fr) { simplex[worst] = expanded; fv[worst] = fe; }
      else { simplex[worst] = reflected; fv[worst] = fr; }
    } else if (fr > fv[order[1]]) {
      simplex[worst] = reflected;
      fv[worst] = fr;
    } else {
      const std::vector<double> contracted = blend(0.5);
      const double fc = value(contracted);
      if (fc > fv[worst]) { simplex[worst] = contracted; fv[worst] = fc; }
      else {
        for (std::size_t i = 0; i <= n; ++i) {
          if (i == best) continue;
          for (std::size_t j = 0; j < n; ++j)
            simplex[i][j] = 0.5 * (simplex[i][j] + simplex[best][j]);
          fv[i] = value(simplex[i]);
        }
      }
    }
  }
  double out = -kInf;
  for (std::size_t i = 0; i <= n; ++i) out = std::max(out, fv[i]);
  if (best_seen) *best_seen = std::max(*best_seen, out);
  return out;
}

double sandwiched_up_entropy(const CqState& state, const EigenSystem& env, double alpha) {
  const Eigen::Index d = state.dim();
  const ComplexMatrix identity = ComplexMatrix::Identity(d, d) / static_cast<double>(d);
  const ComplexMatrix env_state = env.vectors * env.values.asDiagonal() * env.vectors.adjoint();

  // Candidate optimizer sigma ~ rho_E^{alpha/(2 alpha - 1)}.
  ComplexMatrix candidate = power_on_support(env, alpha / (2.0 * alpha - 1.0));
  candidate /= std::real(candidate.trace());

  ComplexMatrix petz_like = ComplexMatrix::Zero(d, d);
  for (const auto& blk : state.blocks)
    if (blk.weight > 0.0)
      petz_like += std::pow(blk.weight, alpha) * power_on_support(psd_eigs(blk.rho), alpha);
  petz_like = power_on_support(psd_eigs(petz_like), 1.0 / alpha);
  const double petz_tr = std::real(petz_like.trace());
  if (petz_tr > 1e-300) petz_like /= petz_tr;
  else petz_like = identity;

  const std::vector<ComplexMatrix> starts{
      candidate, env_state, identity, 0.5 * env_state + 0.5 * identity, petz_like};

  double best = -kInf;
  for (const auto& s : starts) {
    best = std::max(best, sandwiched_value_at(state, s, alpha));
    nelder_mead_max(state, alpha, state_to_params(s), &best);
  }
  return best;
}

ComplexMatrix kron2(const ComplexMatrix& a, const ComplexMatrix& b) {
  ComplexMatrix out(a.rows() * b.rows(), a.cols() * b.cols());
  for (Eigen::Index i = 0; i < a.rows(); ++i)
    for (Eigen::Index j = 0; j < a.cols(); ++j)
      out.block(i * b.rows(), j * b.cols(), b.rows(), b.cols()) = a(i, j) * b;
  return out;
}

// Reduced state on Q_A (x) Q_B from the pure tripartite state.
ComplexMatrix reduced_qubits(const QubitStrategy& st) {
  const Eigen::Index de = st.env_dim();
  ComplexMatrix psi(4, de);
  for (Eigen::Index k = 0; k < 4; ++k)
    for (Eigen::Index e = 0; e < de; ++e) psi(k, e) = st.state[k * de + e];
  return psi * psi.adjoint();
}

std::array<ComplexMatrix, 2> observable_projectors(const ComplexMatrix& obs) {
  Eigen::SelfAdjointEigenSolver<ComplexMatrix> solver(obs);
  // Outcome a = 0 for eigenvalue +1, a = 1 for eigenvalue -1.
  ComplexMatrix p_plus = ComplexMatrix::Zero(2, 2);
  ComplexMatrix p_minus = ComplexMatrix::Zero(2, 2);
  for (Eigen::Index i = 0; i < 2; ++i) {
    const ComplexMatrix proj = solver.eigenvectors().col(i) * solver.eigenvectors().col(i).adjoint();
    if (solver.eigenvalues()[i] > 0.0) p_plus += proj;
    else p_minus += proj;
  }
  return {p_plus, p_minus};
}

}  // namespace

Eigen::Index CqState::dim() const {
  return blocks.empty() ? 0 : blocks.front().rho.rows();
}

void CqState::validate() const {
  if (blocks.empty()) throw std::domain_error("CqState: no blocks");
  const Eigen::Index d = dim();
  if (d < 1 || d > 8) throw std::domain_error("CqState: dimension must be in [1,8]");
  double total = 0.0;
  for (const auto& blk : blocks) {
    if (!(blk.weight >= -kHermitianTol && blk.weight <= 1.0 + kHermitianTol))
      throw std::domain_error("CqState: weight outside [0,1]");
    if (blk.rho.rows() != d || blk.rho.cols() != d)
      throw std::domain_error("CqState: inconsistent block dimensions");
    check_hermitian(blk.rho);
    if (blk.weight > 0.0) {
      psd_eigs(blk.rho);  // throws on significantly negative eigenvalues
      if (std::abs(std::real(blk.rho.trace()) - 1.0) > 1e-10)
        throw std::domain_error("CqState: blocks must have unit trace");
    }
    total += blk.weight;
  }
  if (std::abs(total - 1.0) > kDistributionTol)
    throw std::domain_error("CqState: weights must sum to 1");
}

ComplexMatrix CqState::reduced() const {
  ComplexMatrix acc = ComplexMatrix::Zero(dim(), dim());
  for (const auto& blk : blocks)
    if (blk.weight > 0.0) acc += blk.weight * blk.rho;
  return acc;
}

Eigen::Index QubitStrategy::env_dim() const { return state.size() / 4; }

void QubitStrategy::validate() const {
  if (state.size() % 4 != 0 || env_dim() < 1 || env_dim() > 8)
    throw std::domain_error("QubitStrategy: state must live on 2x2xE with E in [1,8]");
  if (std::abs(state.squaredNorm() - 1.0) > 1e-10)
    throw std::domain_error("QubitStrategy: state must be normalized");
  for (const ComplexMatrix* obs : {&alice0, &alice1, &bob0, &bob1}) {
    if (obs->rows() != 2 || obs->cols() != 2)
      throw std::domain_error("QubitStrategy: observables must be 2x2");
    check_hermitian(*obs);
    if (((*obs) * (*obs) - ComplexMatrix::Identity(2, 2)).cwiseAbs().maxCoeff() > 1e-10)
      throw std::domain_error("QubitStrategy: observables must square to the identity");
  }
}

QubitStrategy build_attack(const BellScore& s) {
  s.validate();
  if (std::abs(s.beta) < 1.0)
    throw std::domain_error("build_attack: requires |beta| >= 1");
  if (s.score < s.classical_score() - 1e-12)
    throw std::domain_error("build_attack: score below the classical bound");

  const double g = overlap_g(s);
  const double p_plus = 0.5 * (1.0 + g);
  const double p_minus = 0.5 * (1.0 - g);

  QubitStrategy st;
  st.state = ComplexVector::Zero(8);
  // Basis ordering |a>|b>|e>: sqrt(P+)|phi+>|0> + sqrt(P-)|phi->|1>.
  const double cp = std::sqrt(p_plus / 2.0);
  const double cm = std::sqrt(p_minus / 2.0);
  st.state[0] = cp;   // |000>
  st.state[6] = cp;   // |110>
  st.state[1] = cm;   // |001>
  st.state[7] = -cm;  // |111>

  ComplexMatrix sz(2, 2), sx(2, 2);
  sz << 1, 0, 0, -1;
  sx << 0, 1, 1, 0;
  const double norm = std::sqrt(s.beta * s.beta + g * g);
  st.alice0 = sz;
  st.alice1 = sx;
  st.bob0 = (s.beta * sz + g * sx) / norm;
  st.bob1 = (s.beta * sz - g * sx) / norm;
  return st;
}

double chsh_score(const QubitStrategy& st, double beta) {
  st.validate();
  const ComplexMatrix rho = reduced_qubits(st);
  auto corr = [&](const ComplexMatrix& a, const ComplexMatrix& b) {
    return std::real((rho * kron2(a, b)).trace());
  };
  return beta * (corr(st.alice0, st.bob0) + corr(st.alice0, st.bob1)) +
         corr(st.alice1, st.bob0) - corr(st.alice1, st.bob1);
}

double chsh_winning_probability(const QubitStrategy& st) {
  st.validate();
  const ComplexMatrix rho = reduced_qubits(st);
  const std::array<std::array<ComplexMatrix, 2>, 2> alice{
      observable_projectors(st.alice0), observable_projectors(st.alice1)};
  const std::array<std::array<ComplexMatrix, 2>, 2> bob{
      observable_projectors(st.bob0), observable_projectors(st.bob1)};
  double win = 0.0;
  for (int x = 0; x < 2; ++x) {
    for (int y = 0; y < 2; ++y) {
      for (int a = 0; a < 2; ++a) {
        const int b = (a ^ (x & y)) & 1;  // winning output
        win += 0.25 * std::real((rho * kron2(alice[x][a], bob[y][b])).trace());
      }
    }
  }
  return win;
}

CqState measure_keygen(const QubitStrategy& st, double npp_q) {
  st.validate();
  if (!(npp_q >= 0.0 && npp_q <= 1.0))
    throw std::domain_error("measure_keygen: npp_q outside [0,1]");

  const Eigen::Index de = st.env_dim();
  const auto projectors = observable_projectors(st.alice0);

  std::array<double, 2> weight{};
  std::array<ComplexMatrix, 2> unnorm{ComplexMatrix::Zero(de, de), ComplexMatrix::Zero(de, de)};
  for (int a = 0; a < 2; ++a) {
    // (P_a (x) I (x) I)|psi>, then trace out both qubits.
    ComplexVector proj_state = ComplexVector::Zero(st.state.size());
    for (Eigen::Index ia = 0; ia < 2; ++ia)
      for (Eigen::Index ja = 0; ja < 2; ++ja) {
        const Complex pij = projectors[a](ia, ja);
        if (pij == Complex(0, 0)) continue;
        for (Eigen::Index ib = 0; ib < 2; ++ib)
          for (Eigen::Index e = 0; e < de; ++e)
            proj_state[(ia * 2 + ib) * de + e] += pij * st.state[(ja * 2 + ib) * de + e];
      }
    ComplexMatrix psi(4, de);
    for (Eigen::Index k = 0; k < 4; ++k)
      for (Eigen::Index e = 0; e < de; ++e) psi(k, e) = proj_state[k * de + e];
    unnorm[a] = psi.transpose() * psi.conjugate();
    weight[a] = std::real(unnorm[a].trace());
  }

  CqState out;
  out.blocks.resize(2);
  for (int a = 0; a < 2; ++a) {
    const ComplexMatrix mixed = (1.0 - npp_q) * unnorm[a] + npp_q * unnorm[a ^ 1];
    const double w = (1.0 - npp_q) * weight[a] + npp_q * weight[a ^ 1];
    out.blocks[a].weight = w;
    out.blocks[a].rho = w > 0.0 ? ComplexMatrix(mixed / w)
                                : ComplexMatrix::Identity(de, de) / static_cast<double>(de);
    out.blocks[a].rho = 0.5 * (out.blocks[a].rho + out.blocks[a].rho.adjoint()).eval();
  }
  return out;
}

double renyi_entropy(const CqState& state, EntropyFamily family, double alpha) {
  state.validate();
  const EigenSystem env = psd_eigs(state.reduced());

  if (family == EntropyFamily::von_neumann) return von_neumann_conditional(state, env);
  if (family == EntropyFamily::min_entropy) return min_entropy_two_labels(state);

  const bool alpha_inf = std::isinf(alpha) && alpha > 0;
  if (!alpha_inf && !(alpha >= 1.0 - kAlphaOneTol))
    throw std::domain_error("renyi_entropy: alpha must be >= 1");
  if (!alpha_inf && std::abs(alpha - 1.0) < kAlphaOneTol)
    return von_neumann_conditional(state, env);

  switch (family) {
    case EntropyFamily::sandwiched_down:
      return sandwiched_down_entropy(state, env, alpha);
    case EntropyFamily::sandwiched_up:
      if (alpha_inf) return min_entropy_two_labels(state);
      return sandwiched_up_entropy(state, env, alpha);
    case EntropyFamily::petz_down:
      if (alpha_inf || alpha > 2.0 + 1e-12)
        throw std::domain_error("renyi_entropy: Petz families need alpha <= 2");
      return petz_down_entropy(state, env, alpha);
    case EntropyFamily::petz_up:
      if (alpha_inf || alpha > 2.0 + 1e-12)
        throw std::domain_error("renyi_entropy: Petz families need alpha <= 2");
      return petz_up_entropy(state, alpha);
    default:
      throw std::logic_error("renyi_entropy: unreachable");
  }
}

bool VerificationGrid::empty() const {
  return alphas.empty() || betas.empty() || npp_qs.empty() || families.empty() ||
         score_points < 2;
}

TightnessReport verify_tightness(const VerificationGrid& grid, unsigned workers) {
  if (grid.empty()) throw std::domain_error("verify_tightness: empty grid");

  struct Task {
    EntropyFamily family;
    double alpha, score, beta, q;
  };
  std::vector<Task> tasks;
  for (double beta : grid.betas) {
    const BellScore probe{2.0 * std::abs(beta), beta};
    const double s_lo = probe.classical_score();
    const double s_hi = probe.max_score();
    for (std::size_t i = 0; i < grid.score_points; ++i) {
      const double score = s_lo + (s_hi - s_lo) * static_cast<double>(i) /
                                      static_cast<double>(grid.score_points - 1);
      for (double q : grid.npp_qs) {
        for (EntropyFamily family : grid.families) {
          if (q > 0.0 && !npp_supported(family)) continue;
          for (double alpha : grid.alphas) {
            const bool petz = family == EntropyFamily::petz_down || family == EntropyFamily::petz_up;
            if (petz && alpha > 2.0) continue;  // Petz capped at alpha = 2
            tasks.push_back({family, alpha, score, beta, q});
          }
        }
      }
    }
  }

  TightnessReport report;
  report.rows.resize(tasks.size());

  if (workers == 0) workers = std::max(1u, std::thread::hardware_concurrency());
  workers = std::min<unsigned>(workers, static_cast<unsigned>(tasks.size()));

  std::atomic<std::size_t> next{0};
  auto run = [&]() {
    for (std::size_t i = next.fetch_add(1); i < tasks.size(); i = next.fetch_add(1)) {
      const Task& t = tasks[i];
      const BellScore s{t.score, t.beta};
      double analytic;
      if (t.q == 0.0) {
        analytic = rate(s, {t.family, t.alpha, 0.0});
      } else {
        analytic = npp_bracket_rate(t.family, t.alpha, t.q, overlap_g(s));
      }
      analytic += grid.analytic_bias;
      const CqState state = measure_keygen(build_attack(s), t.q);
      const double oracle = renyi_entropy(state, t.family, t.alpha);
      report.rows[i] = {t.family, t.alpha, t.score, t.beta, t.q,
                        analytic, oracle, std::abs(analytic - oracle)};
    }
  };

  std::vector<std::thread> pool;
  for (unsigned w = 1; w < workers; ++w) pool.emplace_back(run);
  run();
  for (auto& th : pool) th.join();

  for (std::size_t i = 0; i < report.rows.size(); ++i) {
    if (report.rows[i].abs_dev > report.max_abs_dev) {
      report.max_abs_dev = report.rows[i].abs_dev;
      report.worst_index = i;
    }
  }
  return report;
}

}  // namespace direnyi
