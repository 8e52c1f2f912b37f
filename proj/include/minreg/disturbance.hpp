#pragma once

// Disturbance and measurement-noise patterns for benchmarking observers.
//
// Realizations are produced directly in the stacked convention of model.hpp
// (v-stack and the effective disturbance w~). Deterministic kinds apply the
// scalar signal s(k), k = 0..T, to every component of v_k and w~_{k+1}:
//
//   const     s(k) = 1
//   sin       s(k) = sin(k h)                       (radians)
//   sawtooth  s(k) = 2 (k h/P - floor(k h/P)) - 1   (P = period, default 4)
//   step      s(k) = 0 for k < onset, 1 otherwise   (onset default ceil((T+1)/2))
//   stairs    s(k) = floor(k / width) * height      (width 2, height 0.25)
//
// each multiplied by `amplitude`. h = time_step converts the sample index
// into the argument of the periodic waveforms: h = 1 evaluates them in
// samples, h = Ts in seconds of the sampled continuous-time plant. Stochastic kinds draw every scalar
// independently from N(0,1), U[0.5,1] or U[0,1] with a std::mt19937_64 seeded
// by substream_seed(seed, pattern id, realization index):
//
//   s = splitmix64(seed); s = splitmix64(s ^ pattern_id); s = splitmix64(s ^ index)
//
// v entries are drawn first, then w.

#include <array>
#include <cmath>
#include <cstdint>
#include <optional>
#include <random>
#include <string>
#include <string_view>

#include "minreg/error.hpp"
#include "minreg/linalg.hpp"
#include "minreg/model.hpp"
#include "minreg/sls.hpp"
#include "minreg/synthesis.hpp"

namespace minreg {

enum class PatternKind { Gaussian, UniformHalf, UniformFull, ConstantOne, Sine, Sawtooth, Step, Stairs, WorstCase };

inline constexpr std::array<PatternKind, 9> kAllPatterns = {
    PatternKind::Gaussian, PatternKind::UniformHalf, PatternKind::UniformFull,
    PatternKind::ConstantOne, PatternKind::Sine, PatternKind::Sawtooth,
    PatternKind::Step, PatternKind::Stairs, PatternKind::WorstCase};

constexpr std::string_view pattern_name(PatternKind k) {
  switch (k) {
    case PatternKind::Gaussian: return "gaussian";
    case PatternKind::UniformHalf: return "uniform-half";
    case PatternKind::UniformFull: return "uniform-full";
    case PatternKind::ConstantOne: return "const";
    case PatternKind::Sine: return "sin";
    case PatternKind::Sawtooth: return "sawtooth";
    case PatternKind::Step: return "step";
    case PatternKind::Stairs: return "stairs";
    case PatternKind::WorstCase: return "worst";
  }
  return "?";
}

inline std::optional<PatternKind> parse_pattern(std::string_view name) {
  for (PatternKind k : kAllPatterns)
    if (pattern_name(k) == name) return k;
  return std::nullopt;
}

constexpr bool is_stochastic(PatternKind k) {
  return k == PatternKind::Gaussian || k == PatternKind::UniformHalf || k == PatternKind::UniformFull;
}

struct PatternSpec {
  PatternKind kind = PatternKind::ConstantOne;
  double amplitude = 1.0;
  double period = 4.0;                ///< sawtooth, in the unit of k * time_step
  double time_step = 1.0;             ///< argument of sin/sawtooth per sample
  std::optional<std::size_t> onset;   ///< step; default ceil((T+1)/2)
  double stair_height = 0.25;
  std::size_t stair_width = 2;
  std::uint64_t seed = 0;

  void validate() const {
    if (!(amplitude > 0) || !(period > 0) || !(time_step > 0) || !(stair_height > 0) || stair_width == 0) {
      throw Error(ErrorCode::InvalidArgument, "pattern parameters must be positive");
    }
  }
};

struct NoiseRealization {
  Vector v_stack;
  Vector w_stack;
  PatternSpec pattern;
  std::size_t realization_index = 0;
};

constexpr std::uint64_t splitmix64(std::uint64_t x) {
  x += 0x9E3779B97F4A7C15ULL;
  x = (x ^ (x >> 30)) * 0xBF58476D1CE4E5B9ULL;
  x = (x ^ (x >> 27)) * 0x94D049BB133111EBULL;
  return x ^ (x >> 31);
}

constexpr std::uint64_t substream_seed(std::uint64_t seed, PatternKind kind, std::uint64_t index) {
  std::uint64_t s = splitmix64(seed);
  s = splitmix64(s ^ static_cast<std::uint64_t>(kind));
  return splitmix64(s ^ index);
}

/// Deterministic waveform value at sample t.
inline double signal_value(const PatternSpec& spec, std::size_t t, std::size_t T) {
  const double tt = static_cast<double>(t) * spec.time_step;
  double s = 0.0;
  switch (spec.kind) {
    case PatternKind::ConstantOne: s = 1.0; break;
    case PatternKind::Sine: s = std::sin(tt); break;
    case PatternKind::Sawtooth: {
      const double r = tt / spec.period;
      s = 2.0 * (r - std::floor(r)) - 1.0;
      break;
    }
    case PatternKind::Step: {
      const std::size_t onset = spec.onset.value_or((T + 2) / 2);
      s = t < onset ? 0.0 : 1.0;
      break;
    }
    case PatternKind::Stairs: s = static_cast<double>(t / spec.stair_width) * spec.stair_height; break;
    default: throw Error(ErrorCode::InvalidArgument, "signal_value needs a deterministic pattern");
  }
  return spec.amplitude * s;
}

inline NoiseRealization generate(const PatternSpec& spec, const Dims& d, std::size_t realization_index = 0) {
  spec.validate();
  if (spec.kind == PatternKind::WorstCase) {
    throw Error(ErrorCode::WorstCaseNeedsObserver, "worst-case noise depends on the observer; use worst_case_noise");
  }
  NoiseRealization r{Vector(d.output_stack()), Vector(d.state_stack()), spec, realization_index};
  if (is_stochastic(spec.kind)) {
    std::mt19937_64 rng(substream_seed(spec.seed, spec.kind, realization_index));
    auto fill = [&](Vector& out, auto dist) {
      for (double& x : out) x = dist(rng);
    };
    switch (spec.kind) {
      case PatternKind::Gaussian:
        fill(r.v_stack, std::normal_distribution<double>(0.0, 1.0));
        fill(r.w_stack, std::normal_distribution<double>(0.0, 1.0));
        break;
      case PatternKind::UniformHalf:
        fill(r.v_stack, std::uniform_real_distribution<double>(0.5, 1.0));
        fill(r.w_stack, std::uniform_real_distribution<double>(0.5, 1.0));
        break;
      default:
        fill(r.v_stack, std::uniform_real_distribution<double>(0.0, 1.0));
        fill(r.w_stack, std::uniform_real_distribution<double>(0.0, 1.0));
        break;
    }
    return r;
  }
  for (std::size_t t = 0; t <= d.T; ++t) {
    const double s = signal_value(spec, t, d.T);
    for (std::size_t i = 0; i < d.m; ++i) r.v_stack[t * d.m + i] = s;
    for (std::size_t i = 0; i < d.n; ++i) r.w_stack[t * d.n + i] = s;
  }
  return r;
}

/// Noise on the boundary of the ellipsoidal set that maximizes the weighted
/// error of `maps`: the top right singular vector of
/// W [Phi_v Hv^{-1}, Phi_w Hw^{-1}], mapped back through H^{-1}.
inline NoiseRealization worst_case_noise(const ErrorMaps& maps, const SynthesisProblem& prob) {
  const Matrix G = normalized_error_operator(maps, prob);
  const SymEig eig = sym_eig(symmetrize(multiply_atb(G, G)));
  const Vector z = detail::canonical_direction(eig.vectors.col(eig.vectors.cols() - 1));
  auto [v, w] = detail::split_and_unnormalize(z, prob);
  NoiseRealization r;
  r.v_stack = std::move(v);
  r.w_stack = std::move(w);
  r.pattern.kind = PatternKind::WorstCase;
  return r;
}

}  // namespace minreg
