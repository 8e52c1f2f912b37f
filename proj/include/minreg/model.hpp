#pragma once

// LTV systems, noise sets, cost weights and the stacked (time-lifted)
// operators of the prediction-error dynamics.
//
// Stacked convention, T+1 blocks throughout:
//   e       = (e_1, ..., e_{T+1})
//   v-stack = (v_0, ..., v_T)
//   w-stack = (w~_1, ..., w~_{T+1}),  w~_1 = A_0 (xhat_0 - x_0) - w_0,
//                                      w~_{k+1} = -w_k  (k >= 1)
//   Astack  = blkdiag(A_1, ..., A_T, 0)
//   Cstack  = blkdiag(0, C_1, ..., C_T)
// so that e = Z Astack e - L Cstack Z e + L v + w.

#include <cstddef>
#include <string>
#include <vector>

#include "minreg/error.hpp"
#include "minreg/linalg.hpp"

namespace minreg {

struct Dims {
  std::size_t n = 0;  ///< state
  std::size_t m = 0;  ///< output
  std::size_t p = 0;  ///< input
  std::size_t T = 0;  ///< horizon; stacked signals have T+1 blocks

  std::size_t blocks() const noexcept { return T + 1; }
  std::size_t state_stack() const noexcept { return n * (T + 1); }
  std::size_t output_stack() const noexcept { return m * (T + 1); }

  bool operator==(const Dims&) const = default;
};

/// x_{t+1} = A_t x_t + B_t u_t + w_t,  y_t = C_t x_t + v_t,  t = 0..T.
struct LtvSystem {
  Dims dims;
  std::vector<Matrix> A;  ///< T+1 matrices n x n
  std::vector<Matrix> B;  ///< T+1 matrices n x p
  std::vector<Matrix> C;  ///< T+1 matrices m x n

  static LtvSystem time_invariant(const Matrix& A, const Matrix& B, const Matrix& C, std::size_t T) {
    LtvSystem s;
    s.dims = {A.rows(), C.rows(), B.cols(), T};
    s.A.assign(T + 1, A);
    s.B.assign(T + 1, B);
    s.C.assign(T + 1, C);
    s.validate();
    return s;
  }

  void validate() const {
    const auto [n, m, p, T] = dims;
    if (n == 0) throw Error(ErrorCode::DimensionMismatch, "state dimension must be positive");
    if (A.size() != T + 1 || B.size() != T + 1 || C.size() != T + 1) {
      throw Error(ErrorCode::DimensionMismatch, "system sequences must have T+1 entries");
    }
    for (std::size_t t = 0; t <= T; ++t) {
      if (A[t].rows() != n || A[t].cols() != n) throw Error(ErrorCode::DimensionMismatch, "A_" + std::to_string(t) + " not n x n");
      if (B[t].rows() != n || B[t].cols() != p) throw Error(ErrorCode::DimensionMismatch, "B_" + std::to_string(t) + " not n x p");
      if (C[t].rows() != m || C[t].cols() != n) throw Error(ErrorCode::DimensionMismatch, "C_" + std::to_string(t) + " not m x n");
    }
  }
};

/// Ellipsoidal noise bounds {v : ||H v|| <= 1} and Gaussian covariances, one
/// block per time step.
struct NoiseModel {
  std::vector<Matrix> Hv;       ///< T+1 invertible m x m
  std::vector<Matrix> Hw;       ///< T+1 invertible n x n
  std::vector<Matrix> Sigma_v;  ///< T+1 SPD m x m
  std::vector<Matrix> Sigma_w;  ///< T+1 SPD n x n

  /// H = h I and Sigma = sigma I at every step.
  static NoiseModel scaled_identity(const Dims& d, double hv = 1.0, double hw = 1.0, double sigma_v = 1.0,
                                    double sigma_w = 1.0) {
    NoiseModel nm;
    nm.Hv.assign(d.blocks(), Matrix::identity(d.m) * hv);
    nm.Hw.assign(d.blocks(), Matrix::identity(d.n) * hw);
    nm.Sigma_v.assign(d.blocks(), Matrix::identity(d.m) * sigma_v);
    nm.Sigma_w.assign(d.blocks(), Matrix::identity(d.n) * sigma_w);
    return nm;
  }

  void validate(const Dims& d) const {
    auto check = [&](const std::vector<Matrix>& seq, std::size_t k, const char* name, bool spd) {
      if (seq.size() != d.blocks()) throw Error(ErrorCode::DimensionMismatch, std::string(name) + " needs T+1 blocks");
      for (const auto& b : seq) {
        if (b.rows() != k || b.cols() != k) throw Error(ErrorCode::DimensionMismatch, std::string(name) + " block size");
        Matrix L;
        // Invertibility of H is checked through H^T H being positive definite.
        const Matrix probe = spd ? b : multiply_atb(b, b);
        if (spd && !is_symmetric(b, 1e-12)) throw Error(ErrorCode::NotPositiveDefinite, std::string(name) + " block not symmetric");
        if (!try_cholesky(probe, L)) {
          throw Error(spd ? ErrorCode::NotPositiveDefinite : ErrorCode::SingularBlock,
                      std::string(name) + " block not " + (spd ? "positive definite" : "invertible"));
        }
      }
    };
    check(Hv, d.m, "Hv", false);
    check(Hw, d.n, "Hw", false);
    check(Sigma_v, d.m, "Sigma_v", true);
    check(Sigma_w, d.n, "Sigma_w", true);
  }
};

/// Quadratic stage losses e_t^T Q_t e_t for t = 1..T+1.
struct CostWeights {
  std::vector<Matrix> Q;

  static CostWeights identity(const Dims& d, double q = 1.0) {
    return CostWeights{std::vector<Matrix>(d.blocks(), Matrix::identity(d.n) * q)};
  }

  /// blkdiag(Q_t^{1/2}); the stacked cost of e is ||W e||^2.
  Matrix stacked_sqrt(const Dims& d) const {
    if (Q.size() != d.blocks()) throw Error(ErrorCode::DimensionMismatch, "Q needs T+1 blocks");
    std::vector<Matrix> roots;
    roots.reserve(Q.size());
    for (const auto& q : Q) {
      if (q.rows() != d.n || q.cols() != d.n) throw Error(ErrorCode::DimensionMismatch, "Q block size");
      roots.push_back(sqrtm_spd(q));
    }
    return block_diag(roots);
  }
};

struct StackedOperators {
  Dims dims;
  Matrix Z;       ///< block downshift, n(T+1) square
  Matrix Astack;  ///< blkdiag(A_1..A_T, 0)
  Matrix Cstack;  ///< blkdiag(0, C_1..C_T), m(T+1) x n(T+1)
  Matrix ZA;      ///< Z * Astack
  Matrix CZ;      ///< Cstack * Z
  Matrix K;       ///< (I - Z Astack)^{-1}
};

inline Matrix block_downshift(std::size_t block, std::size_t count) {
  Matrix Z(block * count, block * count);
  for (std::size_t k = 0; k + 1 < count; ++k)
    for (std::size_t i = 0; i < block; ++i) Z((k + 1) * block + i, k * block + i) = 1.0;
  return Z;
}

inline StackedOperators build_stacked_operators(const LtvSystem& sys) {
  sys.validate();
  const Dims d = sys.dims;
  const std::size_t N = d.blocks();
  StackedOperators ops;
  ops.dims = d;
  ops.Z = block_downshift(d.n, N);
  ops.Astack = Matrix(d.n * N, d.n * N);
  ops.Cstack = Matrix(d.m * N, d.n * N);
  for (std::size_t k = 0; k < d.T; ++k) ops.Astack.set_block(k * d.n, k * d.n, sys.A[k + 1]);
  for (std::size_t k = 1; k < N; ++k) ops.Cstack.set_block(k * d.m, k * d.n, sys.C[k]);
  ops.ZA = ops.Z * ops.Astack;
  ops.CZ = ops.Cstack * ops.Z;
  ops.K = solve_unit_lower(Matrix::identity(d.n * N) - ops.ZA, Matrix::identity(d.n * N));
  return ops;
}

struct NoiseFactors {
  Matrix Hv, Hw;          ///< stacked bounds
  Matrix Hv_inv, Hw_inv;  ///< blockwise inverses
  Matrix Sv_half, Sw_half;
};

inline NoiseFactors stacked_noise_factors(const NoiseModel& noise, const Dims& d) {
  noise.validate(d);
  auto inv_blocks = [](const std::vector<Matrix>& bs) {
    std::vector<Matrix> out;
    out.reserve(bs.size());
    for (const auto& b : bs) {
      try {
        out.push_back(inverse(b));
      } catch (const Error&) {
        throw Error(ErrorCode::SingularBlock, "noise bound block not invertible");
      }
    }
    return out;
  };
  auto sqrt_blocks = [](const std::vector<Matrix>& bs) {
    std::vector<Matrix> out;
    out.reserve(bs.size());
    for (const auto& b : bs) out.push_back(sqrtm_spd(b));
    return out;
  };
  NoiseFactors f;
  f.Hv = block_diag(noise.Hv);
  f.Hw = block_diag(noise.Hw);
  f.Hv_inv = block_diag(inv_blocks(noise.Hv));
  f.Hw_inv = block_diag(inv_blocks(noise.Hw));
  f.Sv_half = block_diag(sqrt_blocks(noise.Sigma_v));
  f.Sw_half = block_diag(sqrt_blocks(noise.Sigma_w));
  return f;
}

struct StackedNoise {
  Vector v;  ///< m(T+1)
  Vector w;  ///< n(T+1), effective disturbance w~
};

/// Maps per-step sequences (v_0..v_T, w_0..w_T) and the initial estimate
/// error delta = xhat_0 - x_0 onto stacked signals. The C_0 delta term of
/// the first innovation is folded into v_0, the A_0 delta term into w~_1.
inline StackedNoise stack_noise(const LtvSystem& sys, std::span<const double> delta,
                                const std::vector<Vector>& v_seq, const std::vector<Vector>& w_seq) {
  const Dims d = sys.dims;
  if (delta.size() != d.n || v_seq.size() != d.blocks() || w_seq.size() != d.blocks()) {
    throw Error(ErrorCode::DimensionMismatch, "stack_noise sequence lengths");
  }
  StackedNoise s{Vector(d.output_stack()), Vector(d.state_stack())};
  const Vector c0d = sys.C[0] * delta;
  const Vector a0d = sys.A[0] * delta;
  for (std::size_t t = 0; t <= d.T; ++t) {
    if (v_seq[t].size() != d.m || w_seq[t].size() != d.n) throw Error(ErrorCode::DimensionMismatch, "noise sample size");
    for (std::size_t i = 0; i < d.m; ++i) s.v[t * d.m + i] = v_seq[t][i] - (t == 0 ? c0d[i] : 0.0);
    for (std::size_t i = 0; i < d.n; ++i) s.w[t * d.n + i] = -w_seq[t][i] + (t == 0 ? a0d[i] : 0.0);
  }
  return s;
}

}  // namespace minreg
