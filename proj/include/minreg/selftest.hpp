#pragma once

// Quick oracle and invariant checks runnable from an installed binary. The
// full suites live under tests/; this is the subset that needs no data files
// and finishes in a few seconds.

#include <cmath>
#include <functional>
#include <random>
#include <string>
#include <vector>

#include "minreg/bench.hpp"
#include "minreg/sdp.hpp"
#include "minreg/sls.hpp"
#include "minreg/synthesis.hpp"

namespace minreg {

struct SelftestResult {
  std::string name;
  bool passed = false;
  std::string detail;
};

namespace detail {

inline LtvSystem random_ltv(std::mt19937_64& rng, std::size_t n, std::size_t m, std::size_t p, std::size_t T) {
  std::normal_distribution<double> g(0.0, 1.0);
  auto rnd = [&](std::size_t r, std::size_t c, double s) {
    Matrix M(r, c);
    for (std::size_t k = 0; k < M.size(); ++k) M.data()[k] = s * g(rng);
    return M;
  };
  LtvSystem sys;
  sys.dims = {n, m, p, T};
  for (std::size_t t = 0; t <= T; ++t) {
    sys.A.push_back(rnd(n, n, 0.7 / std::sqrt(static_cast<double>(n))));
    sys.B.push_back(rnd(n, p, 1.0));
    sys.C.push_back(rnd(m, n, 1.0));
  }
  return sys;
}

inline SelftestResult check(std::string name, const std::function<std::string()>& body) {
  try {
    std::string failure = body();
    return {std::move(name), failure.empty(), failure};
  } catch (const std::exception& e) {
    return {std::move(name), false, std::string("exception: ") + e.what()};
  }
}

inline std::string expect_near(const char* what, double got, double want, double tol) {
  if (std::abs(got - want) <= tol) return {};
  char buf[160];
  std::snprintf(buf, sizeof buf, "%s = %.12g, expected %.12g (tol %.1e)", what, got, want, tol);
  return buf;
}

}  // namespace detail

inline std::vector<SelftestResult> run_selftest() {
  using detail::check;
  using detail::expect_near;
  std::vector<SelftestResult> out;

  out.push_back(check("eigensolver 2x2", [] {
    const auto e = sym_eig(Matrix{{2, 1}, {1, 2}});
    auto r = expect_near("lambda_min", e.values[0], 1.0, 1e-12);
    return r.empty() ? expect_near("lambda_max", e.values[1], 3.0, 1e-12) : r;
  }));

  out.push_back(check("expm nilpotent", [] {
    const Matrix E = expm(Matrix{{0, 1}, {0, 0}});
    return expect_near("expm(N)(0,1)", E(0, 1), 1.0, 1e-14);
  }));

  out.push_back(check("sdp [[x,1],[1,x]] >= 0", [] {
    LmiProblem p;
    p.dim = 2;
    p.F0 = Matrix{{0, 1}, {1, 0}};
    p.F.push_back(LmiCoefficient::from_dense(Matrix::identity(2)));
    p.cost = {1.0};
    SolverOptions o;
    o.initial_x = Vector{2.0};
    const auto s = solve_min_cost_lmi(p, o);
    if (s.status != SdpStatus::Optimal) return std::string("status ") + to_string(s.status);
    return expect_near("x", s.x[0], 1.0, 1e-6);
  }));

  // Closed form: with f the causal entries of Phi_v the H2 objective is
  // f1^2 + f2^2 + f3^2 + 1 + (0.5 - f3)^2 + 1, minimized at f3 = 0.25.
  out.push_back(check("scalar H2 observer", [] {
    const auto prob = SynthesisProblem::build(LtvSystem::time_invariant(Matrix{{0.5}}, Matrix{{0.0}}, Matrix{{1.0}}, 1));
    const auto maps = synth_h2(prob);
    const auto L = recover_gains(maps, prob.dims).L;
    for (auto r : {expect_near("cost", h2_cost(maps, prob), 2.125, 1e-9), expect_near("L(1,1)", L(1, 1), 0.25, 1e-9),
                   expect_near("L(0,0)", L(0, 0), 0.0, 1e-9)})
      if (!r.empty()) return r;
    return std::string();
  }));

  out.push_back(check("achievability and simulation equivalence", [] {
    std::mt19937_64 rng(7);
    std::normal_distribution<double> g(0.0, 1.0);
    for (int trial = 0; trial < 10; ++trial) {
      const LtvSystem sys = detail::random_ltv(rng, 1 + trial % 3, 1 + trial % 2, 1, 2 + trial % 3);
      const auto prob = SynthesisProblem::build(sys);
      const auto maps = synth_h2(prob);
      if (achievability_residual(maps, prob.ops) > 1e-8) return std::string("achievability residual too large");
      const auto gains = recover_gains(maps, sys.dims);
      const auto d = sys.dims;
      std::vector<Vector> u(d.blocks(), Vector(d.p)), v(d.blocks(), Vector(d.m)), w(d.blocks(), Vector(d.n));
      Vector x0(d.n), xh0(d.n), delta(d.n);
      for (auto* seq : {&u, &v, &w})
        for (auto& vec : *seq)
          for (double& x : vec) x = g(rng);
      for (std::size_t i = 0; i < d.n; ++i) {
        x0[i] = g(rng);
        xh0[i] = g(rng);
        delta[i] = xh0[i] - x0[i];
      }
      const auto sim = simulate_observer(sys, gains, x0, xh0, u, v, w);
      const auto st = stack_noise(sys, delta, v, w);
      const Vector e = error_trajectory(maps, st.v, st.w);
      double diff = 0.0, scale = 0.0;
      for (std::size_t t = 0; t < sim.e.size(); ++t)
        for (std::size_t i = 0; i < d.n; ++i) {
          diff = std::max(diff, std::abs(sim.e[t][i] - e[t * d.n + i]));
          scale = std::max(scale, std::abs(e[t * d.n + i]));
        }
      if (diff > 1e-9 * std::max(1.0, scale)) return std::string("simulation and stacked maps disagree");
    }
    return std::string();
  }));

  out.push_back(check("observer orderings on a random system", [] {
    std::mt19937_64 rng(11);
    const auto prob = SynthesisProblem::build(detail::random_ltv(rng, 2, 1, 1, 3));
    const auto set = synthesize_observers(prob, false);
    for (std::size_t o = 0; o < 3; ++o)
      if (!set.maps[o]) return "synthesis failed: " + set.errors[o];
    const auto& h2 = *set.maps[0];
    const auto& hi = *set.maps[1];
    const auto& r = *set.maps[2];
    const auto& nc = *set.clairvoyant;
    auto le = [](double a, double b) { return a <= b + 1e-6 * std::max(1.0, std::abs(b)); };
    if (!le(h2_cost(h2, prob), h2_cost(hi, prob)) || !le(h2_cost(h2, prob), h2_cost(r, prob))) return std::string("H2 ordering");
    if (!le(hinf_cost(hi, prob), hinf_cost(h2, prob)) || !le(hinf_cost(hi, prob), hinf_cost(r, prob))) return std::string("Hinf ordering");
    if (!le(regret_value(r, nc, prob).value, regret_value(h2, nc, prob).value) ||
        !le(regret_value(r, nc, prob).value, regret_value(hi, nc, prob).value))
      return std::string("regret ordering");
    return std::string();
  }));

  return out;
}

}  // namespace minreg
