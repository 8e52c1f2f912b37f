#pragma once

// H2, H-infinity, clairvoyant and minimal-regret observers in the
// prediction-error-map parametrization.
//
// Only Phi_v is a decision variable; Phi_w = (I - Phi_v C Z) K follows from
// the achievability identity, so every map pair produced here is achievable
// by construction. Costs are unnormalized sums over the T+1 stacked blocks
// and carry the stage weights W = blkdiag(Q_t^{1/2}).

#include <cmath>
#include <cstddef>
#include <utility>
#include <vector>

#include "minreg/error.hpp"
#include "minreg/linalg.hpp"
#include "minreg/model.hpp"
#include "minreg/sdp.hpp"
#include "minreg/sls.hpp"

namespace minreg {

struct SynthesisProblem {
  Dims dims;
  StackedOperators ops;
  NoiseFactors noise;
  Matrix W;    ///< blkdiag(Q_t^{1/2})
  Matrix CZK;  ///< C Z K; Phi_w = K - Phi_v CZK

  static SynthesisProblem build(const LtvSystem& sys, const NoiseModel& noise, const CostWeights& weights) {
    SynthesisProblem p;
    p.dims = sys.dims;
    p.ops = build_stacked_operators(sys);
    p.noise = stacked_noise_factors(noise, sys.dims);
    p.W = weights.stacked_sqrt(sys.dims);
    p.CZK = p.ops.CZ * p.ops.K;
    return p;
  }

  /// Default setting: H = Sigma = Q = I.
  static SynthesisProblem build(const LtvSystem& sys) {
    return build(sys, NoiseModel::scaled_identity(sys.dims), CostWeights::identity(sys.dims));
  }
};

// ---------------------------------------------------------------------------
// Costs

/// ||W e||^2.
inline double quadratic_cost(std::span<const double> e, const SynthesisProblem& prob) {
  const Vector we = prob.W * e;
  return dot(we, we);
}

/// ||W [Phi_v Sigma_v^{1/2}, Phi_w Sigma_w^{1/2}]||_F^2.
inline double h2_cost(const ErrorMaps& maps, const SynthesisProblem& prob) {
  const Matrix G = prob.W * hstack(maps.phi_v * prob.noise.Sv_half, maps.phi_w * prob.noise.Sw_half);
  const double f = frobenius_norm(G);
  return f * f;
}

/// W [Phi_v Hv^{-1}, Phi_w Hw^{-1}]: maps the normalized noise onto the
/// weighted error.
inline Matrix normalized_error_operator(const ErrorMaps& maps, const SynthesisProblem& prob) {
  return prob.W * hstack(maps.phi_v * prob.noise.Hv_inv, maps.phi_w * prob.noise.Hw_inv);
}

/// ||W [Phi_v Hv^{-1}, Phi_w Hw^{-1}]||_2^2.
inline double hinf_cost(const ErrorMaps& maps, const SynthesisProblem& prob) {
  const double s = spectral_norm(normalized_error_operator(maps, prob));
  return s * s;
}

struct RegretValue {
  double value = 0.0;  ///< lambda_max(M)
  Vector eigenvalues;  ///< of M, ascending
  Vector v;            ///< worst-case noise, physical units
  Vector w;            ///< worst-case disturbance (stacked effective convention)
};

/// M = G^T G - G_nc^T G_nc with G = W [Phi_v Hv^{-1}, Phi_w Hw^{-1}].
inline Matrix regret_matrix(const ErrorMaps& maps, const ErrorMaps& nc, const SynthesisProblem& prob) {
  const Matrix G = normalized_error_operator(maps, prob);
  const Matrix Gnc = normalized_error_operator(nc, prob);
  return symmetrize(multiply_atb(G, G) - multiply_atb(Gnc, Gnc));
}

namespace detail {

/// Unit vector with its largest-magnitude entry made positive.
inline Vector canonical_direction(Vector z) {
  std::size_t imax = 0;
  for (std::size_t i = 0; i < z.size(); ++i)
    if (std::abs(z[i]) > std::abs(z[imax])) imax = i;
  if (!z.empty() && z[imax] < 0)
    for (double& x : z) x = -x;
  return z;
}

inline std::pair<Vector, Vector> split_and_unnormalize(const Vector& z, const SynthesisProblem& prob) {
  const std::size_t mN = prob.dims.output_stack();
  const Vector zv(z.begin(), z.begin() + static_cast<std::ptrdiff_t>(mN));
  const Vector zw(z.begin() + static_cast<std::ptrdiff_t>(mN), z.end());
  return {prob.noise.Hv_inv * zv, prob.noise.Hw_inv * zw};
}

}  // namespace detail

/// Worst-case regret lambda_max(M) and the normalized noise direction that
/// attains it, mapped back through H^{-1}.
inline RegretValue regret_value(const ErrorMaps& maps, const ErrorMaps& nc, const SynthesisProblem& prob) {
  const SymEig eig = sym_eig(regret_matrix(maps, nc, prob));
  RegretValue r;
  r.value = eig.values.back();
  r.eigenvalues = eig.values;
  auto [v, w] = detail::split_and_unnormalize(detail::canonical_direction(eig.vectors.col(eig.vectors.cols() - 1)), prob);
  r.v = std::move(v);
  r.w = std::move(w);
  return r;
}

// ---------------------------------------------------------------------------
// Frobenius-norm synthesis (H2 and clairvoyant)

namespace detail {

/// Minimizes ||W [Phi_v Sv, (K - Phi_v CZK) Sw]||_F over Phi_v, either lower
/// block-triangular or dense. The objective separates over the rows of Phi_v
/// and every row of block row i shares the same free columns, so each block
/// row is one least-squares solve; W only mixes rows of a block row and so
/// does not move the minimizer.
inline Matrix frobenius_optimal_phi_v(const SynthesisProblem& prob, bool causal) {
  const Dims& d = prob.dims;
  const std::size_t N = d.blocks(), nN = d.state_stack(), mN = d.output_stack();
  const Matrix M = prob.CZK * prob.noise.Sw_half;        // mN x nN
  const Matrix P0 = prob.ops.K * prob.noise.Sw_half;      // nN x nN
  Matrix phi_v(nN, mN);
  for (std::size_t i = 0; i < N; ++i) {
    const std::size_t ncols = causal ? (i + 1) * d.m : mN;
    Matrix A(mN + nN, ncols);
    for (std::size_t r = 0; r < mN; ++r)
      for (std::size_t c = 0; c < ncols; ++c) A(r, c) = prob.noise.Sv_half(c, r);
    for (std::size_t r = 0; r < nN; ++r)
      for (std::size_t c = 0; c < ncols; ++c) A(mN + r, c) = M(c, r);
    Matrix B(mN + nN, d.n);
    for (std::size_t q = 0; q < d.n; ++q)
      for (std::size_t r = 0; r < nN; ++r) B(mN + r, q) = P0(i * d.n + q, r);
    const Matrix X = solve_least_squares(A, B);
    for (std::size_t q = 0; q < d.n; ++q)
      for (std::size_t c = 0; c < ncols; ++c) phi_v(i * d.n + q, c) = X(c, q);
  }
  return phi_v;
}

}  // namespace detail

/// Causal maps minimizing the H2 (Frobenius) cost.
inline ErrorMaps synth_h2(const SynthesisProblem& prob) {
  return complete_maps(detail::frobenius_optimal_phi_v(prob, true), prob.ops, true);
}

/// Non-causal maps minimizing the same Frobenius cost with Phi_v dense.
inline ErrorMaps synth_clairvoyant(const SynthesisProblem& prob) {
  return complete_maps(detail::frobenius_optimal_phi_v(prob, false), prob.ops, false);
}

// ---------------------------------------------------------------------------
// LMI-based synthesis (H-infinity and regret)

namespace detail {

struct CausalLmi {
  LmiProblem lmi;
  std::vector<std::pair<std::size_t, std::size_t>> entries;  ///< (row, col) of Phi_v per variable
  Matrix G0;                                                 ///< W [0, K Hw^{-1}]
};

/// Shared structure of both LMIs: D = nN + (m+n)N with
///   F(x) = [[top, G(x)], [G(x)^T, bottom]],  G(x) = G0 + W Phi_v Rho,
///   Rho  = [Hv^{-1}, -CZK Hw^{-1}].
/// Each free entry Phi_v(r, c) contributes the dyad u w^T + w u^T with
/// u = [W e_r; 0] and w = [0; Rho(c, :)^T]. The last variable is lambda.
inline CausalLmi causal_lmi_skeleton(const SynthesisProblem& prob) {
  const Dims& d = prob.dims;
  const std::size_t nN = d.state_stack(), mN = d.output_stack(), N = d.blocks();
  const std::size_t cols = mN + nN;
  const std::size_t D = nN + cols;

  CausalLmi out;
  const Matrix KHw = prob.ops.K * prob.noise.Hw_inv;
  out.G0 = prob.W * hstack(Matrix(nN, mN), KHw);
  const Matrix Rho = hstack(prob.noise.Hv_inv, -(prob.CZK * prob.noise.Hw_inv));

  out.lmi.dim = D;
  out.lmi.F0 = Matrix(D, D);
  out.lmi.F0.set_block(0, nN, out.G0);
  out.lmi.F0.set_block(nN, 0, out.G0.transpose());

  // Pool rows: [W e_r; 0] for every row r of Phi_v, then [0; Rho(c,:)].
  Matrix U(nN, D);
  for (std::size_t r = 0; r < nN; ++r)
    for (std::size_t a = 0; a < nN; ++a) U(r, a) = prob.W(a, r);
  Matrix Wr(mN, D);
  for (std::size_t c = 0; c < mN; ++c)
    for (std::size_t b = 0; b < cols; ++b) Wr(c, nN + b) = Rho(c, b);
  const std::size_t u0 = out.lmi.add_vectors(U);
  const std::size_t w0 = out.lmi.add_vectors(Wr);

  for (std::size_t i = 0; i < N; ++i) {
    for (std::size_t q = 0; q < d.n; ++q) {
      const std::size_t r = i * d.n + q;
      for (std::size_t c = 0; c < (i + 1) * d.m; ++c) {
        out.lmi.F.push_back(LmiCoefficient::symmetric_dyad(u0 + r, w0 + c));
        out.entries.emplace_back(r, c);
      }
    }
  }
  out.lmi.cost.assign(out.lmi.F.size() + 1, 0.0);
  out.lmi.cost.back() = 1.0;
  return out;
}

inline Matrix phi_v_from_solution(const CausalLmi& s, const Vector& x, const Dims& d) {
  Matrix phi_v(d.state_stack(), d.output_stack());
  for (std::size_t k = 0; k < s.entries.size(); ++k) phi_v(s.entries[k].first, s.entries[k].second) = x[k];
  return phi_v;
}

inline void require_optimal(const SdpSolution& sol, const char* what) {
  if (sol.status == SdpStatus::Infeasible) throw Error(ErrorCode::Infeasible, std::string(what) + " LMI infeasible");
  if (sol.status == SdpStatus::MaxIterations) throw Error(ErrorCode::MaxIterations, std::string(what) + " LMI hit the Newton budget");
}

}  // namespace detail

struct HinfResult {
  ErrorMaps maps;
  double lambda = 0.0;  ///< optimal squared spectral norm
  SdpSolution solution;
};

/// min lambda s.t. [[lambda I, G], [G^T, I]] >= 0 over causal Phi_v.
inline HinfResult synth_hinf_detailed(const SynthesisProblem& prob, SolverOptions opts = {}) {
  const std::size_t nN = prob.dims.state_stack();
  auto s = detail::causal_lmi_skeleton(prob);
  const std::size_t D = s.lmi.dim;
  for (std::size_t a = nN; a < D; ++a) s.lmi.F0(a, a) = 1.0;
  s.lmi.F.push_back(LmiCoefficient::pooled_diagonal(s.lmi.add_unit_vectors(0, nN), nN));
  if (!opts.initial_x) {
    Vector x0(s.lmi.num_vars(), 0.0);
    const double g = spectral_norm(s.G0);
    x0.back() = 1.1 * g * g + 1.0;
    opts.initial_x = std::move(x0);
  }
  HinfResult r;
  r.solution = solve_min_cost_lmi(s.lmi, opts);
  detail::require_optimal(r.solution, "H-infinity");
  r.lambda = r.solution.x.back();
  r.maps = complete_maps(detail::phi_v_from_solution(s, r.solution.x, prob.dims), prob.ops, true);
  return r;
}

inline ErrorMaps synth_hinf(const SynthesisProblem& prob, SolverOptions opts = {}) {
  return synth_hinf_detailed(prob, std::move(opts)).maps;
}

struct RegretCertificate {
  double lambda_star = 0.0;
  Vector M_eigs;    ///< eigenvalues of M at the optimum, ascending
  Vector worst_v;   ///< noise direction attaining lambda_max(M)
  Vector worst_w;
  SdpSolution solution;
};

/// Regret-optimal causal maps:
///   min lambda s.t. [[I, G], [G^T, lambda I + J_nc]] >= 0,
///   J_nc = G_nc^T G_nc,
/// which is lambda >= lambda_max(G^T G - J_nc) by a Schur complement.
inline std::pair<ErrorMaps, RegretCertificate> synth_regret(const SynthesisProblem& prob, const ErrorMaps& nc,
                                                            SolverOptions opts = {}) {
  if (nc.causal) throw Error(ErrorCode::NotClairvoyant, "synth_regret needs the clairvoyant maps");
  const std::size_t nN = prob.dims.state_stack();
  auto s = detail::causal_lmi_skeleton(prob);
  const std::size_t D = s.lmi.dim;
  const Matrix Gnc = normalized_error_operator(nc, prob);
  const Matrix Jnc = symmetrize(multiply_atb(Gnc, Gnc));
  for (std::size_t a = 0; a < nN; ++a) s.lmi.F0(a, a) = 1.0;
  s.lmi.F0.set_block(nN, nN, Jnc);
  s.lmi.F.push_back(LmiCoefficient::pooled_diagonal(s.lmi.add_unit_vectors(nN, D - nN), D - nN));
  if (!opts.initial_x) {
    Vector x0(s.lmi.num_vars(), 0.0);
    const double l0 = lambda_max(symmetrize(multiply_atb(s.G0, s.G0) - Jnc));
    x0.back() = l0 + std::max(1.0, 0.1 * std::abs(l0));
    opts.initial_x = std::move(x0);
  }
  RegretCertificate cert;
  cert.solution = solve_min_cost_lmi(s.lmi, opts);
  detail::require_optimal(cert.solution, "regret");
  cert.lambda_star = cert.solution.x.back();
  ErrorMaps maps = complete_maps(detail::phi_v_from_solution(s, cert.solution.x, prob.dims), prob.ops, true);
  const RegretValue rv = regret_value(maps, nc, prob);
  cert.M_eigs = rv.eigenvalues;
  cert.worst_v = rv.v;
  cert.worst_w = rv.w;
  return {std::move(maps), std::move(cert)};
}

}  // namespace minreg
