#pragma once

// Dense real-matrix kernels: storage, products, Cholesky, Householder least
// squares, cyclic Jacobi eigensolver, Pade matrix exponential.

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <initializer_list>
#include <limits>
#include <numeric>
#include <span>
#include <string>
#include <utility>
#include <vector>

#include "minreg/error.hpp"

namespace minreg {

using Vector = std::vector<double>;

/// Row-major dense matrix of doubles.
class Matrix {
 public:
  Matrix() = default;

  Matrix(std::size_t rows, std::size_t cols, double fill = 0.0)
      : rows_(rows), cols_(cols), data_(rows * cols, fill) {}

  Matrix(std::size_t rows, std::size_t cols, std::vector<double> entries)
      : rows_(rows), cols_(cols), data_(std::move(entries)) {
    if (data_.size() != rows_ * cols_) {
      throw Error(ErrorCode::DimensionMismatch,
                  "matrix entries length " + std::to_string(data_.size()) + " != " +
                      std::to_string(rows_) + "x" + std::to_string(cols_));
    }
    check_finite();
  }

  Matrix(std::initializer_list<std::initializer_list<double>> rows) {
    rows_ = rows.size();
    cols_ = rows_ == 0 ? 0 : rows.begin()->size();
    data_.reserve(rows_ * cols_);
    for (const auto& r : rows) {
      if (r.size() != cols_) throw Error(ErrorCode::DimensionMismatch, "ragged initializer list");
      data_.insert(data_.end(), r.begin(), r.end());
    }
    check_finite();
  }

  static Matrix identity(std::size_t n) {
    Matrix I(n, n);
    for (std::size_t i = 0; i < n; ++i) I(i, i) = 1.0;
    return I;
  }

  static Matrix diagonal(std::span<const double> d) {
    Matrix D(d.size(), d.size());
    for (std::size_t i = 0; i < d.size(); ++i) D(i, i) = d[i];
    return D;
  }

  static Matrix column(std::span<const double> v) {
    return Matrix(v.size(), 1, std::vector<double>(v.begin(), v.end()));
  }

  std::size_t rows() const noexcept { return rows_; }
  std::size_t cols() const noexcept { return cols_; }
  std::size_t size() const noexcept { return data_.size(); }
  bool empty() const noexcept { return data_.empty(); }
  bool is_square() const noexcept { return rows_ == cols_; }

  double& operator()(std::size_t i, std::size_t j) noexcept { return data_[i * cols_ + j]; }
  double operator()(std::size_t i, std::size_t j) const noexcept { return data_[i * cols_ + j]; }

  double* data() noexcept { return data_.data(); }
  const double* data() const noexcept { return data_.data(); }
  std::span<const double> entries() const noexcept { return data_; }

  std::span<double> row(std::size_t i) noexcept { return {data_.data() + i * cols_, cols_}; }
  std::span<const double> row(std::size_t i) const noexcept {
    return {data_.data() + i * cols_, cols_};
  }

  Vector col(std::size_t j) const {
    Vector c(rows_);
    for (std::size_t i = 0; i < rows_; ++i) c[i] = (*this)(i, j);
    return c;
  }

  Matrix block(std::size_t r0, std::size_t c0, std::size_t nr, std::size_t nc) const {
    if (r0 + nr > rows_ || c0 + nc > cols_) {
      throw Error(ErrorCode::DimensionMismatch, "block out of range");
    }
    Matrix B(nr, nc);
    for (std::size_t i = 0; i < nr; ++i) {
      std::copy_n(data_.data() + (r0 + i) * cols_ + c0, nc, B.data() + i * nc);
    }
    return B;
  }

  void set_block(std::size_t r0, std::size_t c0, const Matrix& B) {
    if (r0 + B.rows() > rows_ || c0 + B.cols() > cols_) {
      throw Error(ErrorCode::DimensionMismatch, "set_block out of range");
    }
    for (std::size_t i = 0; i < B.rows(); ++i) {
      std::copy_n(B.data() + i * B.cols(), B.cols(), data_.data() + (r0 + i) * cols_ + c0);
    }
  }

  Matrix transpose() const {
    Matrix T(cols_, rows_);
    for (std::size_t i = 0; i < rows_; ++i)
      for (std::size_t j = 0; j < cols_; ++j) T(j, i) = (*this)(i, j);
    return T;
  }

  bool all_finite() const noexcept {
    return std::all_of(data_.begin(), data_.end(), [](double x) { return std::isfinite(x); });
  }

  Matrix& operator+=(const Matrix& o) {
    require_same_shape(o);
    for (std::size_t k = 0; k < data_.size(); ++k) data_[k] += o.data_[k];
    return *this;
  }
  Matrix& operator-=(const Matrix& o) {
    require_same_shape(o);
    for (std::size_t k = 0; k < data_.size(); ++k) data_[k] -= o.data_[k];
    return *this;
  }
  Matrix& operator*=(double s) noexcept {
    for (double& x : data_) x *= s;
    return *this;
  }

  bool operator==(const Matrix&) const = default;

 private:
  void check_finite() const {
    if (!all_finite()) throw Error(ErrorCode::NonFinite, "matrix has non-finite entries");
  }
  void require_same_shape(const Matrix& o) const {
    if (rows_ != o.rows_ || cols_ != o.cols_) {
      throw Error(ErrorCode::DimensionMismatch, "shape mismatch " + std::to_string(rows_) + "x" +
                                                    std::to_string(cols_) + " vs " +
                                                    std::to_string(o.rows_) + "x" +
                                                    std::to_string(o.cols_));
    }
  }

  std::size_t rows_ = 0;
  std::size_t cols_ = 0;
  std::vector<double> data_;
};

inline Matrix operator+(Matrix a, const Matrix& b) { return a += b; }
inline Matrix operator-(Matrix a, const Matrix& b) { return a -= b; }
inline Matrix operator*(Matrix a, double s) { return a *= s; }
inline Matrix operator*(double s, Matrix a) { return a *= s; }
inline Matrix operator-(Matrix a) { return a *= -1.0; }

namespace detail {

// Four independent partial sums so the compiler can keep the reduction in
// vector registers without reassociation flags.
inline double dot_kernel(const double* a, const double* b, std::size_t n) noexcept {
  double s0 = 0.0, s1 = 0.0, s2 = 0.0, s3 = 0.0;
  std::size_t k = 0;
  for (; k + 4 <= n; k += 4) {
    s0 += a[k] * b[k];
    s1 += a[k + 1] * b[k + 1];
    s2 += a[k + 2] * b[k + 2];
    s3 += a[k + 3] * b[k + 3];
  }
  for (; k < n; ++k) s0 += a[k] * b[k];
  return (s0 + s1) + (s2 + s3);
}

}  // namespace detail

inline Matrix operator*(const Matrix& A, const Matrix& B) {
  if (A.cols() != B.rows()) {
    throw Error(ErrorCode::DimensionMismatch, "product " + std::to_string(A.rows()) + "x" +
                                                  std::to_string(A.cols()) + " * " +
                                                  std::to_string(B.rows()) + "x" +
                                                  std::to_string(B.cols()));
  }
  Matrix C(A.rows(), B.cols());
  const std::size_t nc = B.cols();
  for (std::size_t i = 0; i < A.rows(); ++i) {
    double* __restrict crow = C.data() + i * nc;
    for (std::size_t k = 0; k < A.cols(); ++k) {
      const double a = A(i, k);
      if (a == 0.0) continue;
      const double* __restrict brow = B.data() + k * nc;
      for (std::size_t j = 0; j < nc; ++j) crow[j] += a * brow[j];
    }
  }
  return C;
}

/// A * B^T, computed as row dot products.
inline Matrix multiply_abt(const Matrix& A, const Matrix& B) {
  if (A.cols() != B.cols()) throw Error(ErrorCode::DimensionMismatch, "multiply_abt");
  Matrix C(A.rows(), B.rows());
  const std::size_t n = A.cols();
  for (std::size_t i = 0; i < A.rows(); ++i) {
    const double* a = A.data() + i * n;
    for (std::size_t j = 0; j < B.rows(); ++j) {
      C(i, j) = detail::dot_kernel(a, B.data() + j * n, n);
    }
  }
  return C;
}

/// A^T * B.
inline Matrix multiply_atb(const Matrix& A, const Matrix& B) {
  if (A.rows() != B.rows()) throw Error(ErrorCode::DimensionMismatch, "multiply_atb");
  Matrix C(A.cols(), B.cols());
  const std::size_t nc = B.cols();
  for (std::size_t k = 0; k < A.rows(); ++k) {
    const double* __restrict brow = B.data() + k * nc;
    for (std::size_t i = 0; i < A.cols(); ++i) {
      const double a = A(k, i);
      if (a == 0.0) continue;
      double* __restrict crow = C.data() + i * nc;
      for (std::size_t j = 0; j < nc; ++j) crow[j] += a * brow[j];
    }
  }
  return C;
}

inline Vector operator*(const Matrix& A, std::span<const double> x) {
  if (A.cols() != x.size()) throw Error(ErrorCode::DimensionMismatch, "matrix-vector product");
  Vector y(A.rows(), 0.0);
  for (std::size_t i = 0; i < A.rows(); ++i) {
    y[i] = detail::dot_kernel(A.row(i).data(), x.data(), x.size());
  }
  return y;
}
inline Vector operator*(const Matrix& A, const Vector& x) {
  return A * std::span<const double>(x);
}

inline double dot(std::span<const double> a, std::span<const double> b) {
  if (a.size() != b.size()) throw Error(ErrorCode::DimensionMismatch, "dot");
  return detail::dot_kernel(a.data(), b.data(), a.size());
}

inline double norm2(std::span<const double> a) { return std::sqrt(dot(a, a)); }

inline Vector operator+(Vector a, const Vector& b) {
  if (a.size() != b.size()) throw Error(ErrorCode::DimensionMismatch, "vector sum");
  for (std::size_t i = 0; i < a.size(); ++i) a[i] += b[i];
  return a;
}
inline Vector operator-(Vector a, const Vector& b) {
  if (a.size() != b.size()) throw Error(ErrorCode::DimensionMismatch, "vector difference");
  for (std::size_t i = 0; i < a.size(); ++i) a[i] -= b[i];
  return a;
}

inline double frobenius_norm(const Matrix& A) { return norm2(A.entries()); }

inline double max_abs(const Matrix& A) {
  double m = 0.0;
  for (double x : A.entries()) m = std::max(m, std::abs(x));
  return m;
}

inline double trace(const Matrix& A) {
  double t = 0.0;
  for (std::size_t i = 0; i < std::min(A.rows(), A.cols()); ++i) t += A(i, i);
  return t;
}

/// True when |S - S^T| <= rel_tol * max(1, max|S|) entrywise.
inline bool is_symmetric(const Matrix& S, double rel_tol = 1e-12) {
  if (!S.is_square()) return false;
  const double scale = std::max(1.0, max_abs(S));
  for (std::size_t i = 0; i < S.rows(); ++i)
    for (std::size_t j = i + 1; j < S.cols(); ++j)
      if (std::abs(S(i, j) - S(j, i)) > rel_tol * scale) return false;
  return true;
}

inline Matrix symmetrize(const Matrix& S) {
  Matrix R = S;
  for (std::size_t i = 0; i < S.rows(); ++i)
    for (std::size_t j = i + 1; j < S.cols(); ++j) R(i, j) = R(j, i) = 0.5 * (S(i, j) + S(j, i));
  return R;
}

inline Matrix block_diag(std::span<const Matrix> blocks) {
  std::size_t r = 0, c = 0;
  for (const auto& b : blocks) {
    r += b.rows();
    c += b.cols();
  }
  Matrix D(r, c);
  r = c = 0;
  for (const auto& b : blocks) {
    D.set_block(r, c, b);
    r += b.rows();
    c += b.cols();
  }
  return D;
}

inline Matrix hstack(const Matrix& A, const Matrix& B) {
  if (A.rows() != B.rows()) throw Error(ErrorCode::DimensionMismatch, "hstack");
  Matrix C(A.rows(), A.cols() + B.cols());
  C.set_block(0, 0, A);
  C.set_block(0, A.cols(), B);
  return C;
}

inline Matrix vstack(const Matrix& A, const Matrix& B) {
  if (A.cols() != B.cols()) throw Error(ErrorCode::DimensionMismatch, "vstack");
  Matrix C(A.rows() + B.rows(), A.cols());
  C.set_block(0, 0, A);
  C.set_block(A.rows(), 0, B);
  return C;
}

// ---------------------------------------------------------------------------
// Cholesky

/// Lower-triangular factor of an SPD matrix, or false when a pivot is not
/// positive. No exceptions; used in hot loops as a positive-definiteness test.
inline bool try_cholesky(const Matrix& S, Matrix& L) {
  const std::size_t n = S.rows();
  L = Matrix(n, n);
  double maxdiag = 0.0;
  for (std::size_t i = 0; i < n; ++i) maxdiag = std::max(maxdiag, std::abs(S(i, i)));
  const double tol = maxdiag * std::numeric_limits<double>::epsilon() * static_cast<double>(n);
  for (std::size_t j = 0; j < n; ++j) {
    const double* lj = L.data() + j * n;
    const double d = S(j, j) - detail::dot_kernel(lj, lj, j);
    if (!(d > tol) || !std::isfinite(d)) return false;
    const double ljj = std::sqrt(d);
    L(j, j) = ljj;
    for (std::size_t i = j + 1; i < n; ++i) {
      const double* li = L.data() + i * n;
      L(i, j) = (S(i, j) - detail::dot_kernel(li, lj, j)) / ljj;
    }
  }
  return true;
}

inline Matrix cholesky(const Matrix& S) {
  if (!S.is_square()) throw Error(ErrorCode::DimensionMismatch, "cholesky needs a square matrix");
  if (!is_symmetric(S, 1e-12)) throw Error(ErrorCode::NotPositiveDefinite, "matrix not symmetric");
  Matrix L;
  if (!try_cholesky(S, L)) throw Error(ErrorCode::NotPositiveDefinite, "non-positive pivot");
  return L;
}

/// Inverse of L L^T given the Cholesky factor L.
inline Matrix cholesky_inverse(const Matrix& L) {
  const std::size_t n = L.rows();
  // Linv = L^{-1}, lower triangular.
  Matrix Linv(n, n);
  for (std::size_t j = 0; j < n; ++j) {
    Linv(j, j) = 1.0 / L(j, j);
    for (std::size_t i = j + 1; i < n; ++i) {
      double s = 0.0;
      for (std::size_t k = j; k < i; ++k) s -= L(i, k) * Linv(k, j);
      Linv(i, j) = s / L(i, i);
    }
  }
  // S^{-1} = Linv^T Linv
  Matrix X(n, n);
  for (std::size_t i = 0; i < n; ++i) {
    for (std::size_t j = 0; j <= i; ++j) {
      double s = 0.0;
      for (std::size_t k = i; k < n; ++k) s += Linv(k, i) * Linv(k, j);
      X(i, j) = X(j, i) = s;
    }
  }
  return X;
}

inline double cholesky_log_det(const Matrix& L) {
  double s = 0.0;
  for (std::size_t i = 0; i < L.rows(); ++i) s += std::log(L(i, i));
  return 2.0 * s;
}

/// Solves (L L^T) X = B.
inline Matrix cholesky_solve(const Matrix& L, const Matrix& B) {
  const std::size_t n = L.rows();
  Matrix X = B;
  const std::size_t nb = B.cols();
  for (std::size_t c = 0; c < nb; ++c) {
    for (std::size_t i = 0; i < n; ++i) {
      double s = X(i, c);
      const double* li = L.data() + i * n;
      for (std::size_t k = 0; k < i; ++k) s -= li[k] * X(k, c);
      X(i, c) = s / L(i, i);
    }
    for (std::size_t ii = n; ii-- > 0;) {
      double s = X(ii, c);
      for (std::size_t k = ii + 1; k < n; ++k) s -= L(k, ii) * X(k, c);
      X(ii, c) = s / L(ii, ii);
    }
  }
  return X;
}

// ---------------------------------------------------------------------------
// General square solves

/// Solves A X = B by LU with partial pivoting.
inline Matrix lu_solve(const Matrix& A, const Matrix& B) {
  if (!A.is_square() || A.rows() != B.rows()) throw Error(ErrorCode::DimensionMismatch, "lu_solve");
  const std::size_t n = A.rows();
  Matrix M = A;
  Matrix X = B;
  const std::size_t nb = B.cols();
  const double scale = std::max(max_abs(A), std::numeric_limits<double>::min());
  for (std::size_t k = 0; k < n; ++k) {
    std::size_t p = k;
    for (std::size_t i = k + 1; i < n; ++i)
      if (std::abs(M(i, k)) > std::abs(M(p, k))) p = i;
    if (std::abs(M(p, k)) <= 1e-14 * scale) throw Error(ErrorCode::Singular, "singular matrix in lu_solve");
    if (p != k) {
      for (std::size_t j = 0; j < n; ++j) std::swap(M(k, j), M(p, j));
      for (std::size_t j = 0; j < nb; ++j) std::swap(X(k, j), X(p, j));
    }
    for (std::size_t i = k + 1; i < n; ++i) {
      const double f = M(i, k) / M(k, k);
      if (f == 0.0) continue;
      for (std::size_t j = k; j < n; ++j) M(i, j) -= f * M(k, j);
      for (std::size_t j = 0; j < nb; ++j) X(i, j) -= f * X(k, j);
    }
  }
  for (std::size_t ii = n; ii-- > 0;) {
    for (std::size_t j = 0; j < nb; ++j) {
      double s = X(ii, j);
      for (std::size_t k = ii + 1; k < n; ++k) s -= M(ii, k) * X(k, j);
      X(ii, j) = s / M(ii, ii);
    }
  }
  return X;
}

inline Matrix inverse(const Matrix& A) { return lu_solve(A, Matrix::identity(A.rows())); }

/// Solves L X = B for unit lower-triangular L (diagonal assumed one, strict
/// upper part ignored).
inline Matrix solve_unit_lower(const Matrix& L, const Matrix& B) {
  if (!L.is_square() || L.rows() != B.rows()) throw Error(ErrorCode::DimensionMismatch, "solve_unit_lower");
  const std::size_t n = L.rows();
  const std::size_t nb = B.cols();
  Matrix X = B;
  for (std::size_t i = 0; i < n; ++i) {
    double* __restrict xi = X.data() + i * nb;
    for (std::size_t k = 0; k < i; ++k) {
      const double l = L(i, k);
      if (l == 0.0) continue;
      const double* __restrict xk = X.data() + k * nb;
      for (std::size_t j = 0; j < nb; ++j) xi[j] -= l * xk[j];
    }
  }
  return X;
}

// ---------------------------------------------------------------------------
// Least squares

/// argmin_X ||A X - B||_F via Householder QR. A must have full column rank.
inline Matrix solve_least_squares(const Matrix& A, const Matrix& B) {
  if (A.rows() != B.rows()) throw Error(ErrorCode::DimensionMismatch, "least squares rows differ");
  if (A.rows() < A.cols()) throw Error(ErrorCode::RankDeficient, "more unknowns than equations");
  const std::size_t m = A.rows(), n = A.cols(), nb = B.cols();
  Matrix R = A;
  Matrix Y = B;
  Vector v(m);
  for (std::size_t j = 0; j < n; ++j) {
    double xnorm = 0.0;
    for (std::size_t i = j; i < m; ++i) xnorm += R(i, j) * R(i, j);
    xnorm = std::sqrt(xnorm);
    if (xnorm == 0.0) continue;
    const double alpha = R(j, j) > 0 ? -xnorm : xnorm;
    for (std::size_t i = j; i < m; ++i) v[i] = R(i, j);
    v[j] -= alpha;
    double vnorm2 = 0.0;
    for (std::size_t i = j; i < m; ++i) vnorm2 += v[i] * v[i];
    if (vnorm2 == 0.0) continue;
    for (std::size_t c = j; c < n; ++c) {
      double s = 0.0;
      for (std::size_t i = j; i < m; ++i) s += v[i] * R(i, c);
      s = 2.0 * s / vnorm2;
      for (std::size_t i = j; i < m; ++i) R(i, c) -= s * v[i];
    }
    for (std::size_t c = 0; c < nb; ++c) {
      double s = 0.0;
      for (std::size_t i = j; i < m; ++i) s += v[i] * Y(i, c);
      s = 2.0 * s / vnorm2;
      for (std::size_t i = j; i < m; ++i) Y(i, c) -= s * v[i];
    }
  }
  double rmax = 0.0;
  for (std::size_t j = 0; j < n; ++j) rmax = std::max(rmax, std::abs(R(j, j)));
  for (std::size_t j = 0; j < n; ++j) {
    if (!(std::abs(R(j, j)) > 1e-12 * rmax)) {
      throw Error(ErrorCode::RankDeficient, "R diagonal " + std::to_string(j) + " below tolerance");
    }
  }
  Matrix X(n, nb);
  for (std::size_t c = 0; c < nb; ++c) {
    for (std::size_t ii = n; ii-- > 0;) {
      double s = Y(ii, c);
      for (std::size_t k = ii + 1; k < n; ++k) s -= R(ii, k) * X(k, c);
      X(ii, c) = s / R(ii, ii);
    }
  }
  return X;
}

// ---------------------------------------------------------------------------
// Symmetric eigendecomposition

struct SymEig {
  Vector values;   ///< ascending
  Matrix vectors;  ///< column k pairs with values[k]
};

/// Cyclic-by-row Jacobi. Converged when the off-diagonal Frobenius norm is at
/// most 1e-12 ||S||_F; throws NoConvergence after 100 sweeps.
inline SymEig sym_eig(const Matrix& S) {
  if (!S.is_square()) throw Error(ErrorCode::DimensionMismatch, "sym_eig needs a square matrix");
  if (!is_symmetric(S, 1e-12)) throw Error(ErrorCode::InvalidArgument, "sym_eig needs a symmetric matrix");
  const std::size_t n = S.rows();
  Matrix A = symmetrize(S);
  Matrix V = Matrix::identity(n);
  const double tol = 1e-12 * frobenius_norm(S);
  constexpr int kMaxSweeps = 100;

  auto off_norm = [&] {
    double s = 0.0;
    for (std::size_t i = 0; i < n; ++i)
      for (std::size_t j = i + 1; j < n; ++j) s += 2.0 * A(i, j) * A(i, j);
    return std::sqrt(s);
  };

  int sweep = 0;
  for (; sweep <= kMaxSweeps; ++sweep) {
    if (off_norm() <= tol) break;
    if (sweep == kMaxSweeps) throw Error(ErrorCode::NoConvergence, "Jacobi sweeps exhausted");
    for (std::size_t p = 0; p + 1 < n; ++p) {
      for (std::size_t q = p + 1; q < n; ++q) {
        const double apq = A(p, q);
        if (apq == 0.0) continue;
        const double app = A(p, p), aqq = A(q, q);
        const double theta = (aqq - app) / (2.0 * apq);
        const double t = (theta >= 0 ? 1.0 : -1.0) / (std::abs(theta) + std::sqrt(theta * theta + 1.0));
        const double c = 1.0 / std::sqrt(t * t + 1.0);
        const double s = t * c;
        for (std::size_t k = 0; k < n; ++k) {
          const double akp = A(k, p), akq = A(k, q);
          A(k, p) = c * akp - s * akq;
          A(k, q) = s * akp + c * akq;
        }
        for (std::size_t k = 0; k < n; ++k) {
          const double apk = A(p, k), aqk = A(q, k);
          A(p, k) = c * apk - s * aqk;
          A(q, k) = s * apk + c * aqk;
        }
        A(p, q) = A(q, p) = 0.0;
        for (std::size_t k = 0; k < n; ++k) {
          const double vkp = V(k, p), vkq = V(k, q);
          V(k, p) = c * vkp - s * vkq;
          V(k, q) = s * vkp + c * vkq;
        }
      }
    }
  }

  std::vector<std::size_t> order(n);
  std::iota(order.begin(), order.end(), 0);
  std::stable_sort(order.begin(), order.end(), [&](std::size_t a, std::size_t b) { return A(a, a) < A(b, b); });
  SymEig out{Vector(n), Matrix(n, n)};
  for (std::size_t k = 0; k < n; ++k) {
    out.values[k] = A(order[k], order[k]);
    for (std::size_t i = 0; i < n; ++i) out.vectors(i, k) = V(i, order[k]);
  }
  return out;
}

inline double lambda_max(const Matrix& S) { return sym_eig(S).values.back(); }
inline double lambda_min(const Matrix& S) { return sym_eig(S).values.front(); }

/// Symmetric square root V diag(sqrt(lambda)) V^T of an SPD matrix.
inline Matrix sqrtm_spd(const Matrix& S) {
  const SymEig e = sym_eig(S);
  const std::size_t n = S.rows();
  const double scale = std::max(1.0, std::abs(e.values.back()));
  Matrix R(n, n);
  for (std::size_t k = 0; k < n; ++k) {
    if (!(e.values[k] > 1e-14 * scale)) throw Error(ErrorCode::NotPositiveDefinite, "sqrtm_spd of a non-SPD matrix");
    const double r = std::sqrt(e.values[k]);
    for (std::size_t i = 0; i < n; ++i)
      for (std::size_t j = 0; j < n; ++j) R(i, j) += e.vectors(i, k) * r * e.vectors(j, k);
  }
  return symmetrize(R);
}

/// Largest singular value sqrt(lambda_max(G^T G)); uses the smaller Gram matrix.
inline double spectral_norm(const Matrix& G) {
  if (G.empty()) return 0.0;
  const Matrix gram = G.rows() < G.cols() ? multiply_abt(G, G) : multiply_atb(G, G);
  return std::sqrt(std::max(0.0, lambda_max(symmetrize(gram))));
}

// ---------------------------------------------------------------------------
// Matrix exponential

inline double norm1(const Matrix& A) {
  double best = 0.0;
  for (std::size_t j = 0; j < A.cols(); ++j) {
    double s = 0.0;
    for (std::size_t i = 0; i < A.rows(); ++i) s += std::abs(A(i, j));
    best = std::max(best, s);
  }
  return best;
}

/// Scaling and squaring with the (6,6) diagonal Pade approximant, scaled so
/// that ||M / 2^s||_1 <= 0.5.
inline Matrix expm(const Matrix& M) {
  if (!M.is_square()) throw Error(ErrorCode::DimensionMismatch, "expm needs a square matrix");
  if (!M.all_finite()) throw Error(ErrorCode::NonFinite, "expm input not finite");
  constexpr int q = 6;
  const std::size_t n = M.rows();
  const double nrm = norm1(M);
  int s = 0;
  if (nrm > 0.5) s = static_cast<int>(std::ceil(std::log2(nrm / 0.5)));
  const Matrix X = M * std::ldexp(1.0, -s);

  Matrix N = Matrix::identity(n);
  Matrix D = Matrix::identity(n);
  Matrix P = Matrix::identity(n);
  double c = 1.0;
  for (int k = 1; k <= q; ++k) {
    c *= static_cast<double>(q - k + 1) / static_cast<double>(k * (2 * q - k + 1));
    P = P * X;
    N += c * P;
    D += ((k % 2) ? -c : c) * P;
  }
  Matrix E = lu_solve(D, N);
  for (int k = 0; k < s; ++k) E = E * E;
  return E;
}

}  // namespace minreg
