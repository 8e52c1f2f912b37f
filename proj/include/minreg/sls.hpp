#pragma once

// System-level parametrization of observers: prediction-error maps, the
// achievability identity, gain recovery and trajectory evaluation.

#include <cmath>
#include <cstddef>
#include <vector>

#include "minreg/error.hpp"
#include "minreg/linalg.hpp"
#include "minreg/model.hpp"

namespace minreg {

/// e = Phi_w w + Phi_v v.
struct ErrorMaps {
  Matrix phi_v;  ///< n(T+1) x m(T+1)
  Matrix phi_w;  ///< n(T+1) x n(T+1)
  bool causal = true;
};

/// Lower block-triangular observer gain operator; block (t, tau) is L_{tau|t}.
struct ObserverGains {
  Dims dims;
  Matrix L;  ///< n(T+1) x m(T+1)

  Matrix block(std::size_t tau, std::size_t t) const { return L.block(t * dims.n, tau * dims.m, dims.n, dims.m); }
};

/// Largest absolute entry strictly above the block diagonal.
inline double upper_block_max(const Matrix& M, std::size_t row_block, std::size_t col_block) {
  double m = 0.0;
  for (std::size_t i = 0; i < M.rows(); ++i) {
    const std::size_t bi = i / row_block;
    for (std::size_t j = (bi + 1) * col_block; j < M.cols(); ++j) m = std::max(m, std::abs(M(i, j)));
  }
  return m;
}

inline bool is_lower_block_triangular(const Matrix& M, std::size_t row_block, std::size_t col_block,
                                      double tol = 1e-10) {
  return upper_block_max(M, row_block, col_block) <= tol;
}

/// Unique Phi_w with Phi_w (I - Z A) + Phi_v C Z = I, i.e.
/// Phi_w = (I - Phi_v C Z)(I - Z A)^{-1}.
inline Matrix phi_w_from_phi_v(const Matrix& phi_v, const StackedOperators& ops) {
  const Dims& d = ops.dims;
  if (phi_v.rows() != d.state_stack() || phi_v.cols() != d.output_stack()) {
    throw Error(ErrorCode::DimensionMismatch, "Phi_v must be n(T+1) x m(T+1)");
  }
  Matrix lhs = Matrix::identity(d.state_stack()) - phi_v * ops.CZ;
  return lhs * ops.K;
}

inline ErrorMaps complete_maps(Matrix phi_v, const StackedOperators& ops, bool causal) {
  Matrix phi_w = phi_w_from_phi_v(phi_v, ops);
  return ErrorMaps{std::move(phi_v), std::move(phi_w), causal};
}

/// ||Phi_w (I - Z A) + Phi_v C Z - I||_F.
inline double achievability_residual(const ErrorMaps& maps, const StackedOperators& ops) {
  const Dims& d = ops.dims;
  if (maps.phi_w.rows() != d.state_stack() || maps.phi_w.cols() != d.state_stack() ||
      maps.phi_v.rows() != d.state_stack() || maps.phi_v.cols() != d.output_stack()) {
    throw Error(ErrorCode::DimensionMismatch, "error maps do not match the stacked operators");
  }
  const Matrix I = Matrix::identity(d.state_stack());
  Matrix R = maps.phi_w * (I - ops.ZA) + maps.phi_v * ops.CZ - I;
  return frobenius_norm(R);
}

/// L = Phi_w^{-1} Phi_v for causal maps, by forward substitution on the unit
/// lower-triangular Phi_w. Upper-block residue up to 1e-6 is treated as
/// round-off and truncated.
inline ObserverGains recover_gains(const ErrorMaps& maps, const Dims& d) {
  if (!maps.causal) throw Error(ErrorCode::NotCausal, "recover_gains needs causal maps");
  constexpr double kViolation = 1e-6;
  if (upper_block_max(maps.phi_v, d.n, d.m) > kViolation || upper_block_max(maps.phi_w, d.n, d.n) > kViolation) {
    throw Error(ErrorCode::CausalityViolation, "error maps have non-causal blocks");
  }
  Matrix L = solve_unit_lower(maps.phi_w, maps.phi_v);
  if (upper_block_max(L, d.n, d.m) > kViolation) {
    throw Error(ErrorCode::CausalityViolation, "recovered gains have non-causal blocks");
  }
  for (std::size_t i = 0; i < L.rows(); ++i) {
    const std::size_t bi = i / d.n;
    for (std::size_t j = (bi + 1) * d.m; j < L.cols(); ++j) L(i, j) = 0.0;
  }
  return ObserverGains{d, std::move(L)};
}

/// Dense L = Phi_w^{-1} Phi_v for non-causal (clairvoyant) maps.
inline ObserverGains recover_gains_noncausal(const ErrorMaps& maps, const Dims& d) {
  return ObserverGains{d, lu_solve(maps.phi_w, maps.phi_v)};
}

/// Inverse direction: Phi_w = (I - Z A + L C Z)^{-1}, Phi_v = Phi_w L.
inline ErrorMaps maps_from_gains(const ObserverGains& gains, const StackedOperators& ops, bool causal = true) {
  const Dims& d = ops.dims;
  if (gains.L.rows() != d.state_stack() || gains.L.cols() != d.output_stack()) {
    throw Error(ErrorCode::DimensionMismatch, "gain operator shape");
  }
  const Matrix I = Matrix::identity(d.state_stack());
  const Matrix closed = I - ops.ZA + gains.L * ops.CZ;
  Matrix phi_w = causal ? solve_unit_lower(closed, I) : inverse(closed);
  Matrix phi_v = phi_w * gains.L;
  return ErrorMaps{std::move(phi_v), std::move(phi_w), causal};
}

inline Vector error_trajectory(const ErrorMaps& maps, std::span<const double> v_stack,
                               std::span<const double> w_stack) {
  if (v_stack.size() != maps.phi_v.cols() || w_stack.size() != maps.phi_w.cols()) {
    throw Error(ErrorCode::DimensionMismatch, "stacked noise dimensions");
  }
  Vector e = maps.phi_w * w_stack;
  const Vector ev = maps.phi_v * v_stack;
  for (std::size_t i = 0; i < e.size(); ++i) e[i] += ev[i];
  return e;
}

struct SimulationResult {
  std::vector<Vector> xhat;  ///< xhat_1 .. xhat_{T+1}
  std::vector<Vector> x;     ///< x_1 .. x_{T+1}
  std::vector<Vector> e;     ///< e_t = xhat_t - x_t, t = 1..T+1
};

/// Runs the plant and the observer
///   xhat_{t+1} = A_t xhat_t + B_t u_t - sum_{tau<=t} L_{tau|t} (C_tau xhat_tau - y_tau)
/// side by side for t = 0..T.
inline SimulationResult simulate_observer(const LtvSystem& sys, const ObserverGains& gains, std::span<const double> x0,
                                          std::span<const double> xhat0, const std::vector<Vector>& u_seq,
                                          const std::vector<Vector>& v_seq, const std::vector<Vector>& w_seq) {
  sys.validate();
  const auto [n, m, p, T] = sys.dims;
  if (x0.size() != n || xhat0.size() != n || u_seq.size() != T + 1 || v_seq.size() != T + 1 ||
      w_seq.size() != T + 1 || !(gains.dims == sys.dims)) {
    throw Error(ErrorCode::DimensionMismatch, "simulate_observer inputs");
  }
  std::vector<Vector> x(T + 2), xh(T + 2), innov(T + 1);
  x[0].assign(x0.begin(), x0.end());
  xh[0].assign(xhat0.begin(), xhat0.end());
  for (std::size_t t = 0; t <= T; ++t) {
    if (u_seq[t].size() != p || v_seq[t].size() != m || w_seq[t].size() != n) {
      throw Error(ErrorCode::DimensionMismatch, "simulate_observer sample size");
    }
    // innovation C_t xhat_t - y_t
    const Vector y = sys.C[t] * x[t] + v_seq[t];
    innov[t] = sys.C[t] * xh[t] - y;

    x[t + 1] = sys.A[t] * x[t] + sys.B[t] * u_seq[t] + w_seq[t];
    Vector next = sys.A[t] * xh[t] + sys.B[t] * u_seq[t];
    for (std::size_t tau = 0; tau <= t; ++tau) {
      const Vector corr = gains.block(tau, t) * innov[tau];
      for (std::size_t i = 0; i < n; ++i) next[i] -= corr[i];
    }
    xh[t + 1] = std::move(next);
  }
  SimulationResult r;
  for (std::size_t t = 1; t <= T + 1; ++t) {
    r.e.push_back(xh[t] - x[t]);
    r.x.push_back(std::move(x[t]));
    r.xhat.push_back(std::move(xh[t]));
  }
  return r;
}

}  // namespace minreg
