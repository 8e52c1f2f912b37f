#pragma once

// Dense log-det barrier solver for
//
//   minimize c^T x   subject to   F(x) = F0 + sum_i x_i F_i  >= 0.
//
// Each coefficient F_i may carry a dense part and a weighted sum of
// symmetric dyads (p_a p_b^T + p_b p_a^T) / 2 over vectors p_a drawn from a
// pool shared by the whole problem. When many coefficients reuse a few
// vectors (Schur-complement LMIs of observer synthesis) the Newton system
// costs O(pool^2 d + terms^2) to assemble instead of O(terms^2 d).

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <functional>
#include <limits>
#include <optional>
#include <ostream>
#include <span>
#include <string>
#include <vector>

#include "minreg/error.hpp"
#include "minreg/linalg.hpp"

namespace minreg {

/// weight * (p_a p_b^T + p_b p_a^T) / 2; a == b gives weight * p_a p_a^T.
struct PooledDyad {
  std::size_t a = 0;
  std::size_t b = 0;
  double weight = 1.0;
};

struct LmiCoefficient {
  Matrix dense;                    ///< d x d symmetric, or empty
  std::vector<PooledDyad> dyads;

  static LmiCoefficient from_dense(Matrix D) { return LmiCoefficient{std::move(D), {}}; }

  /// p_a p_b^T + p_b p_a^T.
  static LmiCoefficient symmetric_dyad(std::size_t a, std::size_t b) { return LmiCoefficient{{}, {{a, b, 2.0}}}; }

  /// sum_k p_{first+k} p_{first+k}^T, k < count.
  static LmiCoefficient pooled_diagonal(std::size_t first, std::size_t count) {
    LmiCoefficient c;
    for (std::size_t k = 0; k < count; ++k) c.dyads.push_back({first + k, first + k, 1.0});
    return c;
  }

  bool has_dense() const noexcept { return !dense.empty(); }

  Matrix to_dense(const Matrix& pool, std::size_t dim) const {
    Matrix D = has_dense() ? dense : Matrix(dim, dim);
    for (const auto& t : dyads) {
      const auto pa = pool.row(t.a);
      const auto pb = pool.row(t.b);
      const double h = 0.5 * t.weight;
      for (std::size_t i = 0; i < dim; ++i)
        for (std::size_t j = 0; j < dim; ++j) D(i, j) += h * (pa[i] * pb[j] + pb[i] * pa[j]);
    }
    return D;
  }
};

struct LmiProblem {
  std::size_t dim = 0;
  Vector cost;                     ///< c, length k
  Matrix F0;                       ///< d x d symmetric
  Matrix pool;                     ///< r x d; row a is p_a
  std::vector<LmiCoefficient> F;   ///< k coefficients

  std::size_t num_vars() const noexcept { return F.size(); }
  std::size_t pool_size() const noexcept { return pool.rows(); }

  /// Appends vectors to the pool; returns the index of the first one.
  std::size_t add_vectors(const Matrix& rows) {
    if (rows.cols() != dim) throw Error(ErrorCode::DimensionMismatch, "pool vectors must have length dim");
    const std::size_t first = pool.rows();
    pool = pool.empty() ? rows : vstack(pool, rows);
    return first;
  }

  std::size_t add_vector(std::span<const double> v) {
    Matrix r(1, v.size(), Vector(v.begin(), v.end()));
    return add_vectors(r);
  }

  /// Appends e_first .. e_{first+count-1}.
  std::size_t add_unit_vectors(std::size_t first, std::size_t count) {
    if (first + count > dim) throw Error(ErrorCode::DimensionMismatch, "unit vector range");
    Matrix E(count, dim);
    for (std::size_t k = 0; k < count; ++k) E(k, first + k) = 1.0;
    return add_vectors(E);
  }

  void validate() const {
    if (cost.size() != F.size()) throw Error(ErrorCode::DimensionMismatch, "cost length != number of coefficients");
    if (F0.rows() != dim || F0.cols() != dim) throw Error(ErrorCode::DimensionMismatch, "F0 dimension");
    if (!is_symmetric(F0, 1e-12)) throw Error(ErrorCode::InvalidArgument, "F0 not symmetric");
    if (!pool.empty() && pool.cols() != dim) throw Error(ErrorCode::DimensionMismatch, "pool vector length");
    for (std::size_t i = 0; i < F.size(); ++i) {
      const auto& c = F[i];
      if (c.has_dense()) {
        if (c.dense.rows() != dim || c.dense.cols() != dim) throw Error(ErrorCode::DimensionMismatch, "F_i dimension");
        if (!is_symmetric(c.dense, 1e-12)) throw Error(ErrorCode::InvalidArgument, "F_" + std::to_string(i) + " not symmetric");
      }
      for (const auto& t : c.dyads) {
        if (t.a >= pool.rows() || t.b >= pool.rows()) {
          throw Error(ErrorCode::DimensionMismatch, "F_" + std::to_string(i) + " refers past the pool");
        }
        if (!std::isfinite(t.weight)) throw Error(ErrorCode::NonFinite, "dyad weight");
      }
    }
  }

  Matrix coefficient(std::size_t i) const { return F.at(i).to_dense(pool, dim); }

  Matrix evaluate(std::span<const double> x) const {
    if (x.size() != F.size()) throw Error(ErrorCode::DimensionMismatch, "LMI point dimension");
    Matrix M = F0;
    for (std::size_t i = 0; i < F.size(); ++i) {
      if (x[i] == 0.0) continue;
      M += x[i] * coefficient(i);
    }
    return M;
  }
};

struct SolverOptions {
  double mu0 = 1.0;
  double mu_factor = 10.0;
  double alpha = 0.3;  ///< Armijo fraction
  double beta = 0.5;   ///< backtracking factor
  std::size_t max_newton = 500;
  double gap_tol = 1e-8;           ///< stop when d mu <= gap_tol (1 + |c^T x|)
  double newton_tol = 1e-9;        ///< centering stops when decrement^2 / 2 <= newton_tol
  double infeasibility_tol = 1e-8;
  std::optional<Vector> initial_x;  ///< tried first; phase 1 runs when not strictly feasible
  std::ostream* trace = nullptr;    ///< CSV: phase,iteration,mu,objective,lambda_min
};

enum class SdpStatus { Optimal, Infeasible, MaxIterations };

inline const char* to_string(SdpStatus s) {
  switch (s) {
    case SdpStatus::Optimal: return "Optimal";
    case SdpStatus::Infeasible: return "Infeasible";
    case SdpStatus::MaxIterations: return "MaxIterations";
  }
  return "?";
}

struct SdpSolution {
  Vector x;
  double objective = std::numeric_limits<double>::quiet_NaN();
  SdpStatus status = SdpStatus::MaxIterations;
  double min_eig = std::numeric_limits<double>::quiet_NaN();
  std::size_t iterations = 0;
  double gap = std::numeric_limits<double>::infinity();  ///< d mu at exit (bound on suboptimality)
  Vector path_objectives;                                 ///< c^T x at each centered point
};

namespace detail {

class BarrierKernel {
 public:
  explicit BarrierKernel(const LmiProblem& prob) : prob_(prob), d_(prob.dim), k_(prob.num_vars()) {
    for (std::size_t i = 0; i < k_; ++i) {
      for (const auto& t : prob.F[i].dyads) {
        terms_.push_back(t);
        owner_.push_back(i);
      }
      if (prob.F[i].has_dense()) dense_idx_.push_back(i);
    }
  }

  std::size_t dim() const noexcept { return d_; }

  /// sum_i x_i F_i (without F0).
  Matrix combine(std::span<const double> x) const {
    Matrix M(d_, d_);
    for (std::size_t i : dense_idx_)
      if (x[i] != 0.0) M += x[i] * prob_.F[i].dense;
    if (terms_.empty()) return M;
    const Matrix& V = prob_.pool;
    Matrix S(V.rows(), V.rows());
    for (std::size_t t = 0; t < terms_.size(); ++t) {
      const double h = 0.5 * x[owner_[t]] * terms_[t].weight;
      S(terms_[t].a, terms_[t].b) += h;
      S(terms_[t].b, terms_[t].a) += h;
    }
    M += multiply_atb(V, S * V);
    return symmetrize(M);
  }

  /// Gradient g_i = -tr(X F_i) and Hessian H_ij = tr(X F_i X F_j) of -log det F.
  void barrier_derivatives(const Matrix& X, Vector& g, Matrix& H) const {
    g.assign(k_, 0.0);
    H = Matrix(k_, k_);
    const Matrix& V = prob_.pool;
    const std::size_t T = terms_.size();
    Matrix P;
    if (T > 0) {
      P = multiply_abt(V * X, V);  // P_ab = p_a^T X p_b
      for (std::size_t t = 0; t < T; ++t) {
        const auto [a, b, wt] = terms_[t];
        g[owner_[t]] -= wt * P(a, b);
        for (std::size_t s = 0; s <= t; ++s) {
          const auto [c, e, ws] = terms_[s];
          double h = 0.5 * wt * ws * (P(a, c) * P(b, e) + P(a, e) * P(b, c));
          const std::size_t i = owner_[t], j = owner_[s];
          if (s == t) {
            H(i, i) += h;
          } else if (i == j) {
            H(i, i) += 2.0 * h;
          } else {
            H(i, j) += h;
            H(j, i) += h;
          }
        }
      }
    }
    for (std::size_t i : dense_idx_) {
      const Matrix& Di = prob_.F[i].dense;
      const Matrix XDX = X * Di * X;
      double tr = 0.0;
      for (std::size_t a = 0; a < d_ * d_; ++a) tr += X.data()[a] * Di.data()[a];
      g[i] -= tr;
      for (std::size_t j : dense_idx_) {
        double s = 0.0;
        const Matrix& Dj = prob_.F[j].dense;
        for (std::size_t a = 0; a < d_ * d_; ++a) s += XDX.data()[a] * Dj.data()[a];
        H(i, j) += s;
      }
      if (T == 0) continue;
      // cross terms with the dyads: tr(X D_i X (p_a p_b^T + p_b p_a^T)/2) = p_a^T XDX p_b
      const Matrix Q = multiply_abt(V * XDX, V);
      for (std::size_t t = 0; t < T; ++t) {
        const double h = terms_[t].weight * Q(terms_[t].a, terms_[t].b);
        H(i, owner_[t]) += h;
        H(owner_[t], i) += h;
      }
    }
  }

 private:
  const LmiProblem& prob_;
  std::size_t d_;
  std::size_t k_;
  std::vector<PooledDyad> terms_;
  std::vector<std::size_t> owner_;
  std::vector<std::size_t> dense_idx_;
};

/// Newton system solve with a small diagonal shift when H is numerically
/// singular (variables the LMI does not depend on).
inline Vector solve_newton(const Matrix& H, const Vector& g) {
  const std::size_t k = H.rows();
  double maxdiag = 0.0;
  for (std::size_t i = 0; i < k; ++i) maxdiag = std::max(maxdiag, H(i, i));
  if (maxdiag <= 0.0) maxdiag = 1.0;
  Matrix rhs(k, 1);
  for (std::size_t i = 0; i < k; ++i) rhs(i, 0) = -g[i];
  Matrix L;
  double shift = 0.0;
  for (int attempt = 0; attempt < 12; ++attempt) {
    Matrix Hs = H;
    for (std::size_t i = 0; i < k; ++i) Hs(i, i) += shift;
    if (try_cholesky(Hs, L)) return cholesky_solve(L, rhs).col(0);
    shift = shift == 0.0 ? 1e-14 * maxdiag : shift * 100.0;
  }
  throw Error(ErrorCode::NoConvergence, "Newton system could not be factored");
}

struct BarrierOutcome {
  Vector x;
  std::size_t steps = 0;
  bool converged = false;
  bool stopped = false;  ///< stop predicate fired
  double gap = std::numeric_limits<double>::infinity();
  Vector path;
};

/// Path following from a strictly feasible x. `stop` is checked after every
/// Newton step; `abandon` after every centering (receives x and the gap).
/// `max_step` caps the Newton step relative to max(1, |x|_inf); phase 1 uses
/// it because its feasible set is unbounded in x.
inline BarrierOutcome run_barrier(const LmiProblem& prob, Vector x, const SolverOptions& opts, std::size_t budget,
                                  const std::function<bool(const Vector&)>& stop,
                                  const std::function<bool(const Vector&, double)>& abandon, const char* phase,
                                  double max_step = std::numeric_limits<double>::infinity()) {
  const BarrierKernel kernel(prob);
  const std::size_t d = prob.dim;
  const std::size_t k = prob.num_vars();
  BarrierOutcome out;
  double t = 1.0 / opts.mu0;

  Matrix Fx = prob.F0 + kernel.combine(x);
  Matrix Lx;
  if (!try_cholesky(Fx, Lx)) throw Error(ErrorCode::InvalidArgument, "barrier start is not strictly feasible");

  auto trace_row = [&](const Matrix& F) {
    if (!opts.trace) return;
    *opts.trace << phase << ',' << out.steps << ',' << 1.0 / t << ',' << dot(prob.cost, x) << ','
                << lambda_min(symmetrize(F)) << '\n';
  };

  for (;;) {
    // centering
    for (;;) {
      if (out.steps >= budget) {
        out.x = std::move(x);
        return out;
      }
      const Matrix X = cholesky_inverse(Lx);
      Vector g;
      Matrix H;
      kernel.barrier_derivatives(X, g, H);
      for (std::size_t i = 0; i < k; ++i) g[i] += t * prob.cost[i];
      const Vector dx = solve_newton(H, g);
      const double slope = dot(g, dx);  // = -decrement^2
      if (-slope / 2.0 <= opts.newton_tol) break;

      const Matrix dF = kernel.combine(dx);
      const double logdet0 = cholesky_log_det(Lx);
      const double cdx = dot(prob.cost, dx);
      double s = 1.0;
      if (std::isfinite(max_step)) {
        double xn = 1.0, dn = 0.0;
        for (std::size_t i = 0; i < k; ++i) {
          xn = std::max(xn, std::abs(x[i]));
          dn = std::max(dn, std::abs(dx[i]));
        }
        if (dn > max_step * xn) s = max_step * xn / dn;
      }
      Matrix Ltrial;
      bool accepted = false;
      double dphi = 0.0;
      while (s > 1e-14) {
        Matrix Ftrial = Fx;
        for (std::size_t a = 0; a < d * d; ++a) Ftrial.data()[a] += s * dF.data()[a];
        if (try_cholesky(Ftrial, Ltrial)) {
          dphi = t * s * cdx - (cholesky_log_det(Ltrial) - logdet0);
          if (dphi <= opts.alpha * s * slope) {
            Fx = std::move(Ftrial);
            accepted = true;
            break;
          }
        }
        s *= opts.beta;
      }
      if (!accepted) break;
      // Decrease at the rounding level of the barrier value: centered as far
      // as double precision allows.
      const double floor = 64.0 * std::numeric_limits<double>::epsilon() *
                           (t * std::abs(dot(prob.cost, x)) + std::abs(logdet0) + 1.0);
      const bool stalled = -dphi <= floor;
      Lx = std::move(Ltrial);
      for (std::size_t i = 0; i < k; ++i) x[i] += s * dx[i];
      // Rebuild F(x) so rounding from the incremental update cannot
      // accumulate; keep the incremental value if the rebuilt one is not
      // numerically positive definite.
      {
        Matrix Fr = prob.F0 + kernel.combine(x);
        Matrix Lr;
        if (try_cholesky(Fr, Lr)) {
          Fx = std::move(Fr);
          Lx = std::move(Lr);
        }
      }
      ++out.steps;
      trace_row(Fx);
      if (stop && stop(x)) {
        out.stopped = true;
        out.x = std::move(x);
        return out;
      }
      if (stalled) break;
    }
    const double obj = dot(prob.cost, x);
    out.path.push_back(obj);
    out.gap = static_cast<double>(d) / t;
    if (out.gap <= opts.gap_tol * (1.0 + std::abs(obj))) {
      out.converged = true;
      out.x = std::move(x);
      return out;
    }
    if (abandon && abandon(x, out.gap)) {
      out.x = std::move(x);
      return out;
    }
    t *= opts.mu_factor;
  }
}

}  // namespace detail

/// Phase 1 (min s s.t. F(x) + s I >= 0) when the start is not strictly
/// feasible, then central-path following on the original problem.
inline SdpSolution solve_min_cost_lmi(const LmiProblem& prob, const SolverOptions& opts = {}) {
  prob.validate();
  const std::size_t k = prob.num_vars();
  const std::size_t d = prob.dim;
  SdpSolution sol;

  Vector x0 = opts.initial_x.value_or(Vector(k, 0.0));
  if (x0.size() != k) throw Error(ErrorCode::DimensionMismatch, "initial point dimension");

  Matrix L;
  std::size_t used = 0;
  if (!try_cholesky(prob.evaluate(x0), L)) {
    LmiProblem aug = prob;
    const std::size_t first = aug.add_unit_vectors(0, d);
    aug.F.push_back(LmiCoefficient::pooled_diagonal(first, d));
    aug.cost.assign(k + 1, 0.0);
    aug.cost[k] = 1.0;
    Vector z = x0;
    const double lmin = lambda_min(symmetrize(prob.evaluate(x0)));
    z.push_back(std::max(0.0, -lmin) + 1.0);

    auto feasible_found = [&](const Vector& zz) {
      if (zz[k] >= 0.0) return false;
      Matrix Lc;
      return try_cholesky(prob.evaluate(std::span<const double>(zz.data(), k)), Lc);
    };
    // The central-path value exceeds the phase-1 optimum by at most the gap.
    auto certainly_infeasible = [&](const Vector& zz, double gap) { return zz[k] - gap > opts.infeasibility_tol; };
    const auto p1 = detail::run_barrier(aug, z, opts, opts.max_newton, feasible_found, certainly_infeasible, "phase1",
                                       100.0);
    used = p1.steps;
    sol.iterations = used;
    if (!p1.stopped) {
      sol.x.assign(p1.x.begin(), p1.x.begin() + static_cast<std::ptrdiff_t>(k));
      sol.objective = dot(prob.cost, sol.x);
      sol.min_eig = -p1.x[k];
      const bool budget_hit = !p1.converged && used >= opts.max_newton;
      sol.status = budget_hit ? SdpStatus::MaxIterations : SdpStatus::Infeasible;
      return sol;
    }
    x0.assign(p1.x.begin(), p1.x.begin() + static_cast<std::ptrdiff_t>(k));
  }

  const auto p2 = detail::run_barrier(prob, std::move(x0), opts, opts.max_newton - std::min(used, opts.max_newton),
                                      nullptr, nullptr, "phase2");
  sol.x = p2.x;
  sol.objective = dot(prob.cost, sol.x);
  sol.iterations = used + p2.steps;
  sol.gap = p2.gap;
  sol.path_objectives = p2.path;
  sol.min_eig = lambda_min(symmetrize(prob.evaluate(sol.x)));
  sol.status = p2.converged ? SdpStatus::Optimal : SdpStatus::MaxIterations;
  return sol;
}

struct MinMaxEigResult {
  Vector x;
  double lambda = 0.0;
  SdpSolution solution;
};

/// min over x of lambda_max(S0 + sum_i x_i S_i), posed as
/// min lambda s.t. lambda I - S(x) >= 0 with lambda appended as the last variable.
/// Dyads in S refer to rows of `pool`.
inline MinMaxEigResult min_max_eigenvalue(const Matrix& S0, const std::vector<LmiCoefficient>& S, const Matrix& pool,
                                          SolverOptions opts = {}) {
  const std::size_t d = S0.rows();
  const std::size_t k = S.size();
  LmiProblem prob;
  prob.dim = d;
  prob.F0 = -S0;
  prob.pool = pool;
  prob.cost.assign(k + 1, 0.0);
  prob.cost[k] = 1.0;
  for (const auto& c : S) {
    LmiCoefficient neg = c;
    if (neg.has_dense()) neg.dense *= -1.0;
    for (auto& t : neg.dyads) t.weight = -t.weight;
    prob.F.push_back(std::move(neg));
  }
  const std::size_t first = prob.add_unit_vectors(0, d);
  prob.F.push_back(LmiCoefficient::pooled_diagonal(first, d));
  if (!opts.initial_x) {
    Vector x0(k + 1, 0.0);
    x0[k] = lambda_max(symmetrize(S0)) + 1.0;
    opts.initial_x = std::move(x0);
  }
  MinMaxEigResult r;
  r.solution = solve_min_cost_lmi(prob, opts);
  if (r.solution.status == SdpStatus::Infeasible) throw Error(ErrorCode::Infeasible, "min_max_eigenvalue infeasible");
  if (r.solution.status == SdpStatus::MaxIterations) throw Error(ErrorCode::MaxIterations, "min_max_eigenvalue hit the Newton budget");
  r.x.assign(r.solution.x.begin(), r.solution.x.begin() + static_cast<std::ptrdiff_t>(k));
  r.lambda = r.solution.x[k];
  return r;
}

inline MinMaxEigResult min_max_eigenvalue(const Matrix& S0, const std::vector<Matrix>& S, SolverOptions opts = {}) {
  std::vector<LmiCoefficient> coeffs;
  coeffs.reserve(S.size());
  for (const auto& m : S) coeffs.push_back(LmiCoefficient::from_dense(m));
  return min_max_eigenvalue(S0, coeffs, Matrix{}, std::move(opts));
}

}  // namespace minreg
