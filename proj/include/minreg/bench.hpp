#pragma once

// Benchmark harness: discretization of continuous-time plants, observer
// synthesis, evaluation under the disturbance patterns and result export.

#include <algorithm>
#include <array>
#include <atomic>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <future>
#include <limits>
#include <optional>
#include <sstream>
#include <string>
#include <string_view>
#include <thread>
#include <vector>

#include <json.hpp>

#include "minreg/disturbance.hpp"
#include "minreg/error.hpp"
#include "minreg/linalg.hpp"
#include "minreg/model.hpp"
#include "minreg/sls.hpp"
#include "minreg/synthesis.hpp"
#include "minreg/system_io.hpp"

namespace minreg {

enum class Discretization { ZOH, Euler };

/// Time-invariant discretization repeated over T+1 steps.
/// ZOH uses expm([[A, B], [0, 0]] Ts) = [[A_d, B_d], [0, I]].
inline LtvSystem discretize(const ContinuousSystem& cs, double ts, Discretization method, std::size_t T) {
  cs.validate();
  if (!(ts > 0) || !std::isfinite(ts)) throw Error(ErrorCode::InvalidArgument, "sampling period must be positive");
  const std::size_t n = cs.A.rows(), p = cs.B.cols();
  Matrix Ad, Bd;
  if (method == Discretization::Euler) {
    Ad = Matrix::identity(n) + ts * cs.A;
    Bd = ts * cs.B;
  } else {
    Matrix M(n + p, n + p);
    M.set_block(0, 0, ts * cs.A);
    if (p > 0) M.set_block(0, n, ts * cs.B);
    const Matrix E = expm(M);
    Ad = E.block(0, 0, n, n);
    Bd = p > 0 ? E.block(0, n, n, p) : Matrix(n, 0);
  }
  return LtvSystem::time_invariant(Ad, Bd, cs.C, T);
}

/// Argument of the periodic waveforms: sample index or physical time k Ts.
enum class SignalClock { Samples, Seconds };

struct BenchConfig {
  std::vector<std::string> systems{"NN4"};
  double ts = 0.005;
  std::size_t T = 10;
  Discretization method = Discretization::ZOH;
  std::vector<PatternKind> patterns{kAllPatterns.begin(), kAllPatterns.end()};
  std::size_t realizations = 1000;
  std::uint64_t seed = 1;
  double sigma_v = 1.0, sigma_w = 1.0;  ///< Sigma = sigma I
  double h_v = 1.0, h_w = 1.0;          ///< H = h I
  double q = 1.0;                       ///< Q = q I
  SignalClock clock = SignalClock::Seconds;
  double amplitude = 1.0;
  double sawtooth_period = 4.0;
  std::optional<std::size_t> step_onset;
  double stair_height = 0.25;
  std::size_t stair_width = 2;
  std::size_t threads = 0;  ///< 0 picks the hardware concurrency

  void validate() const {
    if (!(ts > 0)) throw Error(ErrorCode::InvalidArgument, "ts must be positive");
    if (T < 1) throw Error(ErrorCode::InvalidArgument, "horizon must be at least 1");
    if (realizations < 1) throw Error(ErrorCode::InvalidArgument, "realizations must be at least 1");
    if (systems.empty()) throw Error(ErrorCode::InvalidArgument, "no system given");
    for (double v : {sigma_v, sigma_w, h_v, h_w, q})
      if (!(v > 0) || !std::isfinite(v)) throw Error(ErrorCode::InvalidArgument, "noise and weight scales must be positive");
    pattern_spec(PatternKind::ConstantOne).validate();
  }

  NoiseModel noise_model(const Dims& d) const { return NoiseModel::scaled_identity(d, h_v, h_w, sigma_v, sigma_w); }
  CostWeights weights(const Dims& d) const { return CostWeights::identity(d, q); }

  PatternSpec pattern_spec(PatternKind kind) const {
    PatternSpec s;
    s.kind = kind;
    s.amplitude = amplitude;
    s.period = sawtooth_period;
    s.time_step = clock == SignalClock::Seconds ? ts : 1.0;
    s.onset = step_onset;
    s.stair_height = stair_height;
    s.stair_width = stair_width;
    s.seed = seed;
    return s;
  }

  std::size_t worker_count() const {
    if (threads > 0) return threads;
    return std::max<std::size_t>(1, std::thread::hardware_concurrency());
  }
};

namespace detail {

inline std::string trim(std::string_view s) {
  const auto b = s.find_first_not_of(" \t\r");
  if (b == std::string_view::npos) return {};
  const auto e = s.find_last_not_of(" \t\r");
  return std::string(s.substr(b, e - b + 1));
}

inline std::vector<std::string> split_list(std::string_view s) {
  std::vector<std::string> out;
  std::size_t pos = 0;
  while (pos <= s.size()) {
    auto end = s.find(',', pos);
    if (end == std::string_view::npos) end = s.size();
    if (auto item = trim(s.substr(pos, end - pos)); !item.empty()) out.push_back(std::move(item));
    pos = end + 1;
  }
  return out;
}

template <class T>
T config_number(const std::string& key, const std::string& value) {
  const auto v = parse_number<T>(value);
  if (!v) throw Error(ErrorCode::Parse, "config key '" + key + "': bad number '" + value + "'");
  return *v;
}

}  // namespace detail

/// Parses comma-separated pattern names; "all" selects every pattern.
inline std::vector<PatternKind> parse_pattern_list(std::string_view text) {
  std::vector<PatternKind> out;
  for (const auto& name : detail::split_list(text)) {
    if (name == "all") {
      out.assign(kAllPatterns.begin(), kAllPatterns.end());
      continue;
    }
    const auto k = parse_pattern(name);
    if (!k) throw Error(ErrorCode::Parse, "unknown pattern '" + name + "'");
    out.push_back(*k);
  }
  return out;
}

/// Applies one `key = value` setting.
inline void apply_config_entry(BenchConfig& c, const std::string& key, const std::string& value) {
  using detail::config_number;
  if (key == "system" || key == "systems") {
    c.systems = detail::split_list(value);
  } else if (key == "ts") {
    c.ts = config_number<double>(key, value);
  } else if (key == "T" || key == "horizon") {
    c.T = config_number<std::size_t>(key, value);
  } else if (key == "discretization") {
    if (value == "zoh") c.method = Discretization::ZOH;
    else if (value == "euler") c.method = Discretization::Euler;
    else throw Error(ErrorCode::Parse, "discretization must be zoh or euler");
  } else if (key == "patterns") {
    c.patterns = parse_pattern_list(value);
  } else if (key == "realizations") {
    c.realizations = config_number<std::size_t>(key, value);
  } else if (key == "seed") {
    c.seed = config_number<std::uint64_t>(key, value);
  } else if (key == "sigma_v") {
    c.sigma_v = config_number<double>(key, value);
  } else if (key == "sigma_w") {
    c.sigma_w = config_number<double>(key, value);
  } else if (key == "h_v") {
    c.h_v = config_number<double>(key, value);
  } else if (key == "h_w") {
    c.h_w = config_number<double>(key, value);
  } else if (key == "q") {
    c.q = config_number<double>(key, value);
  } else if (key == "signal_clock") {
    if (value == "samples") c.clock = SignalClock::Samples;
    else if (value == "seconds") c.clock = SignalClock::Seconds;
    else throw Error(ErrorCode::Parse, "signal_clock must be samples or seconds");
  } else if (key == "amplitude") {
    c.amplitude = config_number<double>(key, value);
  } else if (key == "sawtooth_period") {
    c.sawtooth_period = config_number<double>(key, value);
  } else if (key == "step_onset") {
    c.step_onset = config_number<std::size_t>(key, value);
  } else if (key == "stair_height") {
    c.stair_height = config_number<double>(key, value);
  } else if (key == "stair_width") {
    c.stair_width = config_number<std::size_t>(key, value);
  } else if (key == "threads") {
    c.threads = config_number<std::size_t>(key, value);
  } else {
    throw Error(ErrorCode::Parse, "unknown config key '" + key + "'");
  }
}

/// Flat `key = value` lines; '#' starts a comment. Unset keys keep defaults.
inline BenchConfig parse_bench_config(std::string_view text, BenchConfig base = {}) {
  std::size_t pos = 0, line_no = 0;
  while (pos <= text.size()) {
    auto end = text.find('\n', pos);
    if (end == std::string_view::npos) end = text.size();
    std::string_view line = text.substr(pos, end - pos);
    pos = end + 1;
    ++line_no;
    if (const auto hash = line.find('#'); hash != std::string_view::npos) line = line.substr(0, hash);
    if (detail::trim(line).empty()) continue;
    const auto eq = line.find('=');
    if (eq == std::string_view::npos) {
      throw Error(ErrorCode::Parse, "config line " + std::to_string(line_no) + ": expected key = value");
    }
    try {
      apply_config_entry(base, detail::trim(line.substr(0, eq)), detail::trim(line.substr(eq + 1)));
    } catch (const Error& e) {
      throw Error(e.code(), "config line " + std::to_string(line_no) + ": " + e.detail());
    }
  }
  base.validate();
  return base;
}

enum class Observer { H2, Hinf, Regret };
inline constexpr std::array<Observer, 3> kObservers = {Observer::H2, Observer::Hinf, Observer::Regret};

constexpr std::string_view observer_name(Observer o) {
  switch (o) {
    case Observer::H2: return "H2";
    case Observer::Hinf: return "Hinf";
    case Observer::Regret: return "R";
  }
  return "?";
}

struct Cell {
  double avg_cost = std::numeric_limits<double>::quiet_NaN();
  double relative_pct = std::numeric_limits<double>::quiet_NaN();
  bool is_best = false;
  std::string error;  ///< non-empty when the cell could not be computed

  bool ok() const noexcept { return error.empty(); }
};

struct ResultRow {
  PatternKind pattern = PatternKind::ConstantOne;
  std::array<Cell, 3> cells;  ///< indexed like kObservers
};

/// For a single system avg_cost is the average ||e||^2. For several systems
/// it is the mean over systems of cost / (row best of that system).
struct ResultTable {
  std::vector<std::string> systems;
  std::vector<ResultRow> rows;
};

/// Marks the cheapest successful cell (first on ties) and fills percentages.
inline void finalize_row(ResultRow& row) {
  std::optional<std::size_t> best;
  for (std::size_t o = 0; o < row.cells.size(); ++o) {
    auto& c = row.cells[o];
    c.is_best = false;
    if (c.ok() && (!best || c.avg_cost < row.cells[*best].avg_cost)) best = o;
  }
  for (auto& c : row.cells) {
    c.relative_pct = std::numeric_limits<double>::quiet_NaN();
    if (c.ok() && best) c.relative_pct = 100.0 * (c.avg_cost / row.cells[*best].avg_cost - 1.0);
  }
  if (best) {
    row.cells[*best].is_best = true;
    row.cells[*best].relative_pct = 0.0;
  }
}

/// The three causal observers and the clairvoyant one for a problem.
struct ObserverSet {
  SynthesisProblem prob;
  std::array<std::optional<ErrorMaps>, 3> maps;
  std::array<std::string, 3> errors;
  std::optional<ErrorMaps> clairvoyant;
};

/// H-infinity and regret synthesis run concurrently when `parallel` is set.
inline ObserverSet synthesize_observers(const SynthesisProblem& prob, bool parallel = true,
                                        const SolverOptions& opts = {}) {
  ObserverSet s{prob, {}, {}, {}};
  auto capture = [&](std::size_t slot, auto&& fn) {
    try {
      s.maps[slot] = fn();
    } catch (const std::exception& e) {
      s.errors[slot] = e.what();
    }
  };
  capture(0, [&] { return synth_h2(prob); });
  std::string nc_error;
  try {
    s.clairvoyant = synth_clairvoyant(prob);
  } catch (const std::exception& e) {
    nc_error = e.what();
  }
  auto hinf = [&] { capture(1, [&] { return synth_hinf(prob, opts); }); };
  auto regret = [&] {
    if (!s.clairvoyant) {
      s.errors[2] = "clairvoyant synthesis failed: " + nc_error;
      return;
    }
    capture(2, [&] { return synth_regret(prob, *s.clairvoyant, opts).first; });
  };
  if (parallel) {
    auto f = std::async(std::launch::async, hinf);
    regret();
    f.get();
  } else {
    hinf();
    regret();
  }
  return s;
}

namespace detail {

/// Calls fn(i) for i < count on up to `workers` threads.
template <class Fn>
void parallel_for(std::size_t count, std::size_t workers, Fn&& fn) {
  workers = std::min(workers, count);
  if (workers <= 1) {
    for (std::size_t i = 0; i < count; ++i) fn(i);
    return;
  }
  std::atomic<std::size_t> next{0};
  std::vector<std::thread> pool;
  std::vector<std::exception_ptr> failures(workers);
  for (std::size_t w = 0; w < workers; ++w) {
    pool.emplace_back([&, w] {
      try {
        for (std::size_t i = next++; i < count; i = next++) fn(i);
      } catch (...) {
        failures[w] = std::current_exception();
      }
    });
  }
  for (auto& t : pool) t.join();
  for (auto& f : failures)
    if (f) std::rethrow_exception(f);
}

}  // namespace detail

/// Average ||e||^2 of each observer for one pattern. Every observer sees the
/// same draws; per-realization costs are summed in index order so the result
/// does not depend on the worker count.
inline std::array<Cell, 3> evaluate_pattern(const ObserverSet& set, const PatternSpec& spec, std::size_t realizations,
                                            std::size_t workers) {
  std::array<Cell, 3> cells;
  for (std::size_t o = 0; o < 3; ++o)
    if (!set.maps[o]) cells[o].error = set.errors[o].empty() ? "synthesis failed" : set.errors[o];

  if (spec.kind == PatternKind::WorstCase) {
    for (std::size_t o = 0; o < 3; ++o) {
      if (!set.maps[o]) continue;
      try {
        const auto r = worst_case_noise(*set.maps[o], set.prob);
        cells[o].avg_cost = quadratic_cost(error_trajectory(*set.maps[o], r.v_stack, r.w_stack), set.prob);
      } catch (const std::exception& e) {
        cells[o].error = e.what();
      }
    }
    return cells;
  }

  const std::size_t R = is_stochastic(spec.kind) ? realizations : 1;
  std::vector<std::array<double, 3>> costs(R);
  try {
    detail::parallel_for(R, workers, [&](std::size_t i) {
      const auto r = generate(spec, set.prob.dims, i);
      for (std::size_t o = 0; o < 3; ++o) {
        costs[i][o] = set.maps[o] ? quadratic_cost(error_trajectory(*set.maps[o], r.v_stack, r.w_stack), set.prob)
                                  : 0.0;
      }
    });
  } catch (const std::exception& e) {
    for (auto& c : cells)
      if (c.ok()) c.error = e.what();
    return cells;
  }
  for (std::size_t o = 0; o < 3; ++o) {
    if (!cells[o].ok()) continue;
    double sum = 0.0;
    for (std::size_t i = 0; i < R; ++i) sum += costs[i][o];
    cells[o].avg_cost = sum / static_cast<double>(R);
  }
  return cells;
}

/// Raw per-system table (avg_cost = average ||e||^2).
inline ResultTable benchmark_system(const ObserverSet& set, const BenchConfig& config, std::string name) {
  ResultTable t;
  t.systems.push_back(std::move(name));
  for (PatternKind k : config.patterns) {
    ResultRow row;
    row.pattern = k;
    row.cells = evaluate_pattern(set, config.pattern_spec(k), config.realizations, config.worker_count());
    finalize_row(row);
    t.rows.push_back(std::move(row));
  }
  return t;
}

/// Averages per-system tables over systems using costs normalized by each
/// system's row best. A cell failing on any system fails in the average.
inline ResultTable average_tables(const std::vector<ResultTable>& tables) {
  if (tables.empty()) throw Error(ErrorCode::InvalidArgument, "nothing to average");
  if (tables.size() == 1) return tables.front();
  ResultTable out;
  for (const auto& t : tables) out.systems.insert(out.systems.end(), t.systems.begin(), t.systems.end());
  const std::size_t rows = tables.front().rows.size();
  for (std::size_t r = 0; r < rows; ++r) {
    ResultRow row;
    row.pattern = tables.front().rows[r].pattern;
    for (std::size_t o = 0; o < 3; ++o) {
      double sum = 0.0;
      for (const auto& t : tables) {
        const auto& src = t.rows.at(r);
        const auto& cell = src.cells[o];
        if (!cell.ok()) {
          row.cells[o].error = t.systems.front() + ": " + cell.error;
          break;
        }
        const auto best = std::find_if(src.cells.begin(), src.cells.end(), [](const Cell& c) { return c.is_best; });
        sum += cell.avg_cost / best->avg_cost;
      }
      if (row.cells[o].ok()) row.cells[o].avg_cost = sum / static_cast<double>(tables.size());
    }
    finalize_row(row);
    out.rows.push_back(std::move(row));
  }
  return out;
}

inline SynthesisProblem bench_problem(const LtvSystem& sys, const BenchConfig& config) {
  return SynthesisProblem::build(sys, config.noise_model(sys.dims), config.weights(sys.dims));
}

/// Full benchmark over `systems` (discretized with the config's settings).
inline ResultTable run_benchmark(const BenchConfig& config, const std::vector<ContinuousSystem>& systems) {
  config.validate();
  std::vector<ResultTable> tables;
  for (const auto& cs : systems) {
    const LtvSystem sys = discretize(cs, config.ts, config.method, config.T);
    const ObserverSet set = synthesize_observers(bench_problem(sys, config), config.worker_count() > 1);
    tables.push_back(benchmark_system(set, config, cs.name));
  }
  return average_tables(tables);
}

// ---------------------------------------------------------------------------
// Export

enum class ExportFormat { Csv, Json, Markdown };

inline std::optional<ExportFormat> parse_export_format(std::string_view s) {
  if (s == "csv") return ExportFormat::Csv;
  if (s == "json") return ExportFormat::Json;
  if (s == "markdown" || s == "md") return ExportFormat::Markdown;
  return std::nullopt;
}

namespace detail {

inline std::string format_double(double v) {
  if (std::isnan(v)) return "nan";
  char buf[32];
  std::snprintf(buf, sizeof buf, "%.17g", v);
  return buf;
}

inline nlohmann::json number_or_null(double v) { return std::isfinite(v) ? nlohmann::json(v) : nlohmann::json(nullptr); }

}  // namespace detail

inline std::string to_csv(const ResultTable& t) {
  std::string out = "pattern,observer,avg_cost,relative_pct,is_best\n";
  for (const auto& row : t.rows) {
    for (std::size_t o = 0; o < 3; ++o) {
      const auto& c = row.cells[o];
      out += std::string(pattern_name(row.pattern)) + ',' + std::string(observer_name(kObservers[o])) + ',' +
             detail::format_double(c.avg_cost) + ',' + detail::format_double(c.relative_pct) + ',' +
             (c.is_best ? "1" : "0") + '\n';
    }
  }
  return out;
}

inline nlohmann::json to_json_value(const ResultTable& t) {
  nlohmann::json rows = nlohmann::json::array();
  for (const auto& row : t.rows) {
    nlohmann::json cells = nlohmann::json::array();
    for (std::size_t o = 0; o < 3; ++o) {
      const auto& c = row.cells[o];
      cells.push_back({{"observer", observer_name(kObservers[o])},
                       {"avg_cost", detail::number_or_null(c.avg_cost)},
                       {"relative_pct", detail::number_or_null(c.relative_pct)},
                       {"is_best", c.is_best},
                       {"error", c.ok() ? nlohmann::json(nullptr) : nlohmann::json(c.error)}});
    }
    rows.push_back({{"pattern", pattern_name(row.pattern)}, {"cells", std::move(cells)}});
  }
  return {{"systems", t.systems}, {"rows", std::move(rows)}};
}

inline std::string to_json(const ResultTable& t) { return to_json_value(t).dump(2) + "\n"; }

inline ResultTable parse_results_json(std::string_view text) {
  ResultTable t;
  try {
    const auto j = nlohmann::json::parse(text);
    t.systems = j.at("systems").get<std::vector<std::string>>();
    for (const auto& r : j.at("rows")) {
      ResultRow row;
      const auto name = r.at("pattern").get<std::string>();
      const auto k = parse_pattern(name);
      if (!k) throw Error(ErrorCode::Parse, "unknown pattern '" + name + "'");
      row.pattern = *k;
      const auto& cells = r.at("cells");
      if (cells.size() != 3) throw Error(ErrorCode::Parse, "each row needs three cells");
      for (std::size_t o = 0; o < 3; ++o) {
        const auto& c = cells[o];
        auto num = [](const nlohmann::json& v) {
          return v.is_null() ? std::numeric_limits<double>::quiet_NaN() : v.get<double>();
        };
        row.cells[o].avg_cost = num(c.at("avg_cost"));
        row.cells[o].relative_pct = num(c.at("relative_pct"));
        row.cells[o].is_best = c.at("is_best").get<bool>();
        if (!c.at("error").is_null()) row.cells[o].error = c.at("error").get<std::string>();
      }
      t.rows.push_back(std::move(row));
    }
  } catch (const nlohmann::json::exception& e) {
    throw Error(ErrorCode::Parse, std::string("results JSON: ") + e.what());
  }
  return t;
}

/// Table with the row best marked **1** and the other cells as +x.xx%.
inline std::string to_markdown(const ResultTable& t) {
  std::string out = "| v, w | H2 | Hinf | R |\n|---|---|---|---|\n";
  char buf[64];
  for (const auto& row : t.rows) {
    out += "| " + std::string(pattern_name(row.pattern)) + " |";
    for (const auto& c : row.cells) {
      if (!c.ok()) {
        out += " error |";
      } else if (c.is_best) {
        out += " **1** |";
      } else {
        std::snprintf(buf, sizeof buf, " %.2f%% |", c.relative_pct);
        out += buf;
      }
    }
    out += '\n';
  }
  return out;
}

inline std::string export_results(const ResultTable& t, ExportFormat f) {
  switch (f) {
    case ExportFormat::Csv: return to_csv(t);
    case ExportFormat::Json: return to_json(t);
    case ExportFormat::Markdown: return to_markdown(t);
  }
  return {};
}

inline void export_results(const ResultTable& t, ExportFormat f, const std::string& path) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw Error(ErrorCode::Io, "cannot write " + path);
  out << export_results(t, f);
  out.flush();
  if (!out) throw Error(ErrorCode::Io, "write error on " + path);
}

}  // namespace minreg
