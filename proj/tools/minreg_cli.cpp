// minreg: command-line front end for observer synthesis and benchmarking.
//
// Exit codes: 0 success, 2 solver failure (infeasible, iteration budget,
// numerical breakdown), 3 bad input.

#include <cstdio>
#include <fstream>
#include <iostream>
#include <string>
#include <vector>

#include <CLI11.hpp>
#include <json.hpp>

#include "minreg/bench.hpp"
#include "minreg/catalog.hpp"
#include "minreg/selftest.hpp"
#include "minreg/system_io.hpp"

using namespace minreg;
using nlohmann::json;

namespace {

constexpr int kSolverFailure = 2;
constexpr int kBadInput = 3;

int exit_code_for(ErrorCode c) {
  switch (c) {
    case ErrorCode::Infeasible:
    case ErrorCode::MaxIterations:
    case ErrorCode::NoConvergence:
    case ErrorCode::RankDeficient:
    case ErrorCode::Singular:
      return kSolverFailure;
    default:
      return kBadInput;
  }
}

struct SystemSource {
  std::string name;
  std::string discretization;  // empty for discrete-time files
  LtvSystem sys;
};

/// Catalog name, continuous-time file (discretized) or discrete-time file.
SystemSource resolve_system(const std::string& spec, double ts, Discretization method, std::size_t T) {
  const auto method_name = method == Discretization::ZOH ? "zoh" : "euler";
  if (in_catalog(spec)) return {spec, method_name, discretize(catalog_system(spec), ts, method, T)};
  const std::string text = read_text_file(spec);
  if (is_continuous_file(text)) {
    return {spec, method_name, discretize(parse_continuous_system(text, spec), ts, method, T)};
  }
  return {spec, "", parse_ltv_system(text)};
}

ContinuousSystem resolve_continuous(const std::string& spec) {
  if (in_catalog(spec)) return catalog_system(spec);
  return parse_continuous_system(read_text_file(spec), spec);
}

json matrix_json(const Matrix& M) {
  json rows = json::array();
  for (std::size_t i = 0; i < M.rows(); ++i) {
    const auto r = M.row(i);
    rows.push_back(std::vector<double>(r.begin(), r.end()));
  }
  return rows;
}

Matrix matrix_from_json(const json& j, std::size_t rows, std::size_t cols, const char* what) {
  if (!j.is_array() || j.size() != rows) throw Error(ErrorCode::Parse, std::string(what) + ": wrong row count");
  Matrix M(rows, cols);
  for (std::size_t i = 0; i < rows; ++i) {
    const auto r = j[i].get<std::vector<double>>();
    if (r.size() != cols) throw Error(ErrorCode::Parse, std::string(what) + ": wrong column count");
    std::copy(r.begin(), r.end(), M.row(i).begin());
  }
  return M;
}

void write_output(const std::string& path, const std::string& text) {
  if (path == "-") {
    std::cout << text;
    return;
  }
  std::ofstream out(path, std::ios::binary);
  if (!out) throw Error(ErrorCode::Io, "cannot write " + path);
  out << text;
  if (!out.flush()) throw Error(ErrorCode::Io, "write error on " + path);
}

struct NoiseArgs {
  double sigma_v = 1.0, sigma_w = 1.0, h_v = 1.0, h_w = 1.0, q = 1.0;

  void add_to(CLI::App* app) {
    app->add_option("--sigma-v", sigma_v, "measurement noise covariance scale")->check(CLI::PositiveNumber);
    app->add_option("--sigma-w", sigma_w, "disturbance covariance scale")->check(CLI::PositiveNumber);
    app->add_option("--h-v", h_v, "measurement noise bound H_v = h I")->check(CLI::PositiveNumber);
    app->add_option("--h-w", h_w, "disturbance bound H_w = h I")->check(CLI::PositiveNumber);
    app->add_option("--q", q, "stage weight Q = q I")->check(CLI::PositiveNumber);
  }

  json to_json() const { return {{"sigma_v", sigma_v}, {"sigma_w", sigma_w}, {"h_v", h_v}, {"h_w", h_w}, {"q", q}}; }

  static NoiseArgs from_json(const json& j) {
    NoiseArgs a;
    a.sigma_v = j.at("sigma_v").get<double>();
    a.sigma_w = j.at("sigma_w").get<double>();
    a.h_v = j.at("h_v").get<double>();
    a.h_w = j.at("h_w").get<double>();
    a.q = j.at("q").get<double>();
    return a;
  }

  SynthesisProblem problem(const LtvSystem& sys) const {
    return SynthesisProblem::build(sys, NoiseModel::scaled_identity(sys.dims, h_v, h_w, sigma_v, sigma_w),
                                   CostWeights::identity(sys.dims, q));
  }
};

// --- synth -----------------------------------------------------------------

struct SynthArgs {
  std::string system = "NN4";
  std::string method = "regret";
  std::size_t horizon = 10;
  double ts = 0.005;
  bool euler = false;
  std::string out = "maps.json";
  std::string trace;
  NoiseArgs noise;
};

int run_synth(const SynthArgs& a) {
  const auto src = resolve_system(a.system, a.ts, a.euler ? Discretization::Euler : Discretization::ZOH, a.horizon);
  const auto prob = a.noise.problem(src.sys);

  std::ofstream trace_file;
  SolverOptions opts;
  if (!a.trace.empty()) {
    trace_file.open(a.trace);
    if (!trace_file) throw Error(ErrorCode::Io, "cannot write " + a.trace);
    trace_file << "phase,iteration,mu,objective,lambda_min\n";
    opts.trace = &trace_file;
  }

  ErrorMaps maps;
  json extra = json::object();
  double objective = 0.0;
  std::string objective_name;
  if (a.method == "h2") {
    maps = synth_h2(prob);
    objective = h2_cost(maps, prob);
    objective_name = "h2_cost";
  } else if (a.method == "clairvoyant") {
    maps = synth_clairvoyant(prob);
    objective = h2_cost(maps, prob);
    objective_name = "h2_cost";
  } else if (a.method == "hinf") {
    auto r = synth_hinf_detailed(prob, opts);
    maps = std::move(r.maps);
    objective = r.lambda;
    objective_name = "hinf_lambda";
    extra["sdp_iterations"] = r.solution.iterations;
  } else {
    const auto nc = synth_clairvoyant(prob);
    auto [m, cert] = synth_regret(prob, nc, opts);
    maps = std::move(m);
    objective = cert.lambda_star;
    objective_name = "regret_lambda";
    extra["sdp_iterations"] = cert.solution.iterations;
    extra["M_eigs"] = cert.M_eigs;
  }
  const ObserverGains gains = maps.causal ? recover_gains(maps, prob.dims) : recover_gains_noncausal(maps, prob.dims);
  const auto d = prob.dims;
  json j = {{"method", a.method},
            {"causal", maps.causal},
            {"objective", objective},
            {"objective_name", objective_name},
            {"h2_cost", h2_cost(maps, prob)},
            {"hinf_cost", hinf_cost(maps, prob)},
            {"achievability_residual", achievability_residual(maps, prob.ops)},
            {"dims", {{"n", d.n}, {"m", d.m}, {"p", d.p}, {"T", d.T}}},
            {"system",
             {{"source", src.name},
              {"discretization", src.discretization.empty() ? json(nullptr) : json(src.discretization)},
              {"ts", src.discretization.empty() ? json(nullptr) : json(a.ts)},
              {"text", format_ltv_system(src.sys)}}},
            {"noise", a.noise.to_json()},
            {"phi_v", matrix_json(maps.phi_v)},
            {"phi_w", matrix_json(maps.phi_w)},
            {"L", matrix_json(gains.L)}};
  j.update(extra);
  write_output(a.out, j.dump(2) + "\n");
  std::fprintf(stderr, "%s %s = %.10g\n", a.method.c_str(), objective_name.c_str(), objective);
  return 0;
}

// --- eval ------------------------------------------------------------------

struct EvalArgs {
  std::string maps = "maps.json";
  std::string pattern = "gaussian";
  std::size_t realizations = 1000;
  std::uint64_t seed = 1;
  std::string clock = "seconds";
  std::string out = "-";
};

int run_eval(const EvalArgs& a) {
  json j;
  try {
    j = json::parse(read_text_file(a.maps));
  } catch (const json::exception& e) {
    throw Error(ErrorCode::Parse, std::string("maps file: ") + e.what());
  }
  const auto kind = parse_pattern(a.pattern);
  if (!kind) throw Error(ErrorCode::InvalidArgument, "unknown pattern '" + a.pattern + "'");
  try {
    const LtvSystem sys = parse_ltv_system(j.at("system").at("text").get<std::string>());
    const auto noise = NoiseArgs::from_json(j.at("noise"));
    const auto prob = noise.problem(sys);
    const auto d = sys.dims;
    ErrorMaps maps{matrix_from_json(j.at("phi_v"), d.state_stack(), d.output_stack(), "phi_v"),
                   matrix_from_json(j.at("phi_w"), d.state_stack(), d.state_stack(), "phi_w"),
                   j.at("causal").get<bool>()};

    PatternSpec spec;
    spec.kind = *kind;
    spec.seed = a.seed;
    const auto& ts = j.at("system").at("ts");
    spec.time_step = (a.clock == "seconds" && ts.is_number()) ? ts.get<double>() : 1.0;

    double avg = 0.0;
    std::size_t used = 1;
    if (*kind == PatternKind::WorstCase) {
      const auto r = worst_case_noise(maps, prob);
      avg = quadratic_cost(error_trajectory(maps, r.v_stack, r.w_stack), prob);
    } else {
      used = is_stochastic(*kind) ? a.realizations : 1;
      for (std::size_t i = 0; i < used; ++i) {
        const auto r = generate(spec, d, i);
        avg += quadratic_cost(error_trajectory(maps, r.v_stack, r.w_stack), prob);
      }
      avg /= static_cast<double>(used);
    }
    json out = {{"pattern", a.pattern},
                {"realizations", used},
                {"seed", a.seed},
                {"avg_cost", avg},
                {"h2_cost", h2_cost(maps, prob)},
                {"hinf_cost", hinf_cost(maps, prob)}};
    write_output(a.out, out.dump(2) + "\n");
  } catch (const json::exception& e) {
    throw Error(ErrorCode::Parse, std::string("maps file: ") + e.what());
  }
  return 0;
}

// --- bench -----------------------------------------------------------------

struct BenchArgs {
  std::string system;
  std::string config;
  std::string format = "csv";
  std::string out = "-";
  std::optional<std::size_t> threads, realizations;
  std::optional<std::uint64_t> seed;
  std::string clock;
};

int run_bench(const BenchArgs& a) {
  BenchConfig cfg;
  if (!a.config.empty()) cfg = parse_bench_config(read_text_file(a.config));
  if (!a.system.empty()) apply_config_entry(cfg, "system", a.system);
  if (a.threads) cfg.threads = *a.threads;
  if (a.realizations) cfg.realizations = *a.realizations;
  if (a.seed) cfg.seed = *a.seed;
  if (!a.clock.empty()) apply_config_entry(cfg, "signal_clock", a.clock);
  cfg.validate();
  const auto fmt = parse_export_format(a.format);
  if (!fmt) throw Error(ErrorCode::InvalidArgument, "format must be csv, json or markdown");

  std::vector<ContinuousSystem> systems;
  for (const auto& s : cfg.systems) systems.push_back(resolve_continuous(s));
  const ResultTable table = run_benchmark(cfg, systems);
  write_output(a.out, export_results(table, *fmt));

  bool failed = false;
  for (const auto& row : table.rows)
    for (std::size_t o = 0; o < 3; ++o)
      if (!row.cells[o].ok()) {
        failed = true;
        std::fprintf(stderr, "%s/%s: %s\n", std::string(pattern_name(row.pattern)).c_str(),
                     std::string(observer_name(kObservers[o])).c_str(), row.cells[o].error.c_str());
      }
  return failed ? kSolverFailure : 0;
}

int run_selftest_cmd() {
  int failures = 0;
  for (const auto& r : run_selftest()) {
    std::printf("%s  %s%s%s\n", r.passed ? "PASS" : "FAIL", r.name.c_str(), r.passed ? "" : ": ", r.detail.c_str());
    failures += r.passed ? 0 : 1;
  }
  return failures == 0 ? 0 : 1;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Finite-horizon H2, H-infinity, clairvoyant and minimal-regret observers"};
  app.require_subcommand(1);

  SynthArgs sa;
  auto* synth = app.add_subcommand("synth", "synthesize an observer and write its error maps");
  synth->add_option("--system", sa.system, "catalog name or system file")->capture_default_str();
  synth->add_option("--method", sa.method, "h2, hinf, regret or clairvoyant")
      ->check(CLI::IsMember({"h2", "hinf", "regret", "clairvoyant"}))
      ->capture_default_str();
  synth->add_option("--horizon,-T", sa.horizon, "horizon T")->check(CLI::PositiveNumber)->capture_default_str();
  synth->add_option("--ts", sa.ts, "sampling period in seconds")->check(CLI::PositiveNumber)->capture_default_str();
  synth->add_flag("--euler", sa.euler, "forward Euler instead of zero-order hold");
  synth->add_option("--out,-o", sa.out, "output JSON ('-' for stdout)")->capture_default_str();
  synth->add_option("--trace", sa.trace, "write the SDP iteration trace as CSV");
  sa.noise.add_to(synth);

  EvalArgs ea;
  auto* eval = app.add_subcommand("eval", "evaluate saved error maps under a disturbance pattern");
  eval->add_option("--maps", ea.maps, "maps JSON written by synth")->capture_default_str();
  eval->add_option("--pattern", ea.pattern, "gaussian, uniform-half, uniform-full, const, sin, sawtooth, step, stairs, worst")
      ->capture_default_str();
  eval->add_option("--realizations", ea.realizations)->check(CLI::PositiveNumber)->capture_default_str();
  eval->add_option("--seed", ea.seed)->capture_default_str();
  eval->add_option("--signal-clock", ea.clock, "samples or seconds")
      ->check(CLI::IsMember({"samples", "seconds"}))
      ->capture_default_str();
  eval->add_option("--out,-o", ea.out)->capture_default_str();

  BenchArgs ba;
  auto* bench = app.add_subcommand("bench", "reproduce the relative-cost table");
  bench->add_option("--system", ba.system, "comma-separated catalog names or files; several are averaged");
  bench->add_option("--config", ba.config, "key = value configuration file");
  bench->add_option("--format", ba.format, "csv, json or markdown")->capture_default_str();
  bench->add_option("--out,-o", ba.out, "output path ('-' for stdout)")->capture_default_str();
  bench->add_option("--threads", ba.threads, "worker threads (0 = all cores)");
  bench->add_option("--realizations", ba.realizations)->check(CLI::PositiveNumber);
  bench->add_option("--seed", ba.seed);
  bench->add_option("--signal-clock", ba.clock, "samples or seconds")->check(CLI::IsMember({"samples", "seconds"}));

  auto* selftest = app.add_subcommand("selftest", "run the built-in oracle and invariant checks");

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e);
    return code == 0 ? 0 : kBadInput;
  }

  try {
    if (*synth) return run_synth(sa);
    if (*eval) return run_eval(ea);
    if (*bench) return run_bench(ba);
    if (*selftest) return run_selftest_cmd();
  } catch (const Error& e) {
    std::fprintf(stderr, "error: %s\n", e.what());
    return exit_code_for(e.code());
  } catch (const std::exception& e) {
    std::fprintf(stderr, "error: %s\n", e.what());
    return kBadInput;
  }
  return 0;
}
