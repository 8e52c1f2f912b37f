#pragma once

// Plain-text system files.
//
//   # comment                      (anything after '#' is ignored)
//   n m p T                        state, output, input dimension and horizon
//   continuous                     optional: matrices are continuous-time
//   A 0                            label, then n*n reals in row-major order
//   ...
//   B *                            '*' repeats the block for every t
//   ...
//
// A block for a specific t overrides a wildcard. Every t in 0..T needs an A,
// B and C block. Continuous-time files must use wildcards only.

#include <algorithm>
#include <array>
#include <charconv>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <map>
#include <optional>
#include <sstream>
#include <string>
#include <string_view>
#include <vector>

#include "minreg/error.hpp"
#include "minreg/linalg.hpp"
#include "minreg/model.hpp"

namespace minreg {

struct ContinuousSystem {
  std::string name;
  Matrix A, B, C;
  std::string provenance;

  void validate() const {
    if (A.empty() || !A.is_square()) throw Error(ErrorCode::DimensionMismatch, name + ": A must be square");
    if (B.rows() != A.rows()) throw Error(ErrorCode::DimensionMismatch, name + ": B rows != n");
    if (C.cols() != A.rows()) throw Error(ErrorCode::DimensionMismatch, name + ": C cols != n");
  }
};

namespace detail {

struct SystemFile {
  Dims dims;
  bool continuous = false;
  // key: (label index, t) with t = -1 for the wildcard
  std::map<std::pair<int, long>, Matrix> blocks;
  std::string comments;
};

inline Error parse_error(std::size_t line, const std::string& what) {
  return Error(ErrorCode::Parse, "line " + std::to_string(line) + ": " + what);
}

inline std::vector<std::string_view> split_ws(std::string_view s) {
  std::vector<std::string_view> out;
  std::size_t i = 0;
  while (i < s.size()) {
    while (i < s.size() && (s[i] == ' ' || s[i] == '\t' || s[i] == '\r')) ++i;
    std::size_t j = i;
    while (j < s.size() && s[j] != ' ' && s[j] != '\t' && s[j] != '\r') ++j;
    if (j > i) out.push_back(s.substr(i, j - i));
    i = j;
  }
  return out;
}

template <class T>
std::optional<T> parse_number(std::string_view tok) {
  T v{};
  const char* b = tok.data();
  const char* e = b + tok.size();
  if (!tok.empty() && *b == '+') ++b;
  const auto [ptr, ec] = std::from_chars(b, e, v);
  if (ec != std::errc() || ptr != e) return std::nullopt;
  return v;
}

inline SystemFile parse_system_file(std::string_view text) {
  SystemFile f;
  std::vector<std::pair<std::size_t, std::string_view>> tokens;  // (line, token)
  std::size_t line_no = 0;
  std::size_t pos = 0;
  while (pos <= text.size()) {
    std::size_t end = text.find('\n', pos);
    if (end == std::string_view::npos) end = text.size();
    std::string_view line = text.substr(pos, end - pos);
    ++line_no;
    if (const auto hash = line.find('#'); hash != std::string_view::npos) {
      f.comments.append(line.substr(hash + 1)).push_back('\n');
      line = line.substr(0, hash);
    }
    for (auto tok : split_ws(line)) tokens.emplace_back(line_no, tok);
    pos = end + 1;
  }

  std::size_t k = 0;
  auto next = [&](const char* what) -> std::pair<std::size_t, std::string_view> {
    if (k >= tokens.size()) throw parse_error(line_no, std::string("unexpected end of file, expected ") + what);
    return tokens[k++];
  };
  std::array<std::size_t, 4> header{};
  for (std::size_t h = 0; h < 4; ++h) {
    const auto [ln, tok] = next("header 'n m p T'");
    const auto v = parse_number<std::size_t>(tok);
    if (!v) throw parse_error(ln, "header expects four non-negative integers 'n m p T'");
    header[h] = *v;
  }
  f.dims = Dims{header[0], header[1], header[2], header[3]};
  if (f.dims.n == 0) throw parse_error(tokens.empty() ? 1 : tokens[0].first, "n must be positive");

  while (k < tokens.size()) {
    const auto [ln, label] = next("block label");
    if (label == "continuous") {
      f.continuous = true;
      continue;
    }
    int which = -1;
    if (label == "A") which = 0;
    else if (label == "B") which = 1;
    else if (label == "C") which = 2;
    if (which < 0) throw parse_error(ln, "unknown block label '" + std::string(label) + "'");
    const auto [lt, ttok] = next("time index");
    long t = -1;
    if (ttok != "*") {
      const auto v = parse_number<std::size_t>(ttok);
      if (!v) throw parse_error(lt, "time index must be an integer or '*'");
      if (*v > f.dims.T) throw parse_error(lt, "time index " + std::to_string(*v) + " exceeds T");
      t = static_cast<long>(*v);
    }
    const std::size_t rows = which == 2 ? f.dims.m : f.dims.n;
    const std::size_t cols = which == 0 ? f.dims.n : which == 1 ? f.dims.p : f.dims.n;
    Matrix M(rows, cols);
    for (std::size_t e = 0; e < rows * cols; ++e) {
      const auto [lv, vt] = next("matrix entry");
      const auto v = parse_number<double>(vt);
      if (!v || !std::isfinite(*v)) throw parse_error(lv, "bad matrix entry '" + std::string(vt) + "'");
      M.data()[e] = *v;
    }
    const auto key = std::make_pair(which, t);
    if (f.blocks.count(key)) throw parse_error(ln, "duplicate block " + std::string(label) + " " + std::string(ttok));
    f.blocks.emplace(key, std::move(M));
  }
  return f;
}

inline const Matrix& lookup_block(const SystemFile& f, int which, std::size_t t) {
  static constexpr const char* names[] = {"A", "B", "C"};
  if (auto it = f.blocks.find({which, static_cast<long>(t)}); it != f.blocks.end()) return it->second;
  if (auto it = f.blocks.find({which, -1}); it != f.blocks.end()) return it->second;
  throw Error(ErrorCode::Parse, std::string("missing block ") + names[which] + " " + std::to_string(t));
}

inline void write_matrix(std::ostream& os, const Matrix& M) {
  char buf[32];
  for (std::size_t i = 0; i < M.rows(); ++i) {
    for (std::size_t j = 0; j < M.cols(); ++j) {
      std::snprintf(buf, sizeof buf, "%.17g", M(i, j));
      os << (j ? " " : "") << buf;
    }
    os << '\n';
  }
}

}  // namespace detail

inline LtvSystem parse_ltv_system(std::string_view text) {
  const auto f = detail::parse_system_file(text);
  if (f.continuous) throw Error(ErrorCode::Parse, "continuous-time file; discretize it first");
  LtvSystem sys;
  sys.dims = f.dims;
  for (std::size_t t = 0; t <= f.dims.T; ++t) {
    sys.A.push_back(detail::lookup_block(f, 0, t));
    sys.B.push_back(detail::lookup_block(f, 1, t));
    sys.C.push_back(detail::lookup_block(f, 2, t));
  }
  sys.validate();
  return sys;
}

/// The header's T is ignored; the comment text becomes the provenance note.
inline ContinuousSystem parse_continuous_system(std::string_view text, std::string name) {
  const auto f = detail::parse_system_file(text);
  if (!f.continuous) throw Error(ErrorCode::Parse, "file is not marked 'continuous'");
  for (const auto& [key, M] : f.blocks) {
    if (key.second != -1) throw Error(ErrorCode::Parse, "continuous-time blocks must use the '*' wildcard");
  }
  ContinuousSystem cs{std::move(name), detail::lookup_block(f, 0, 0), detail::lookup_block(f, 1, 0),
                      detail::lookup_block(f, 2, 0), f.comments};
  cs.validate();
  return cs;
}

inline bool is_continuous_file(std::string_view text) { return detail::parse_system_file(text).continuous; }

/// Writes `sys`, collapsing to wildcards when the system is time-invariant.
inline std::string format_ltv_system(const LtvSystem& sys) {
  sys.validate();
  std::ostringstream os;
  const auto [n, m, p, T] = sys.dims;
  os << n << ' ' << m << ' ' << p << ' ' << T << '\n';
  auto emit = [&](const char* label, const std::vector<Matrix>& seq) {
    const bool invariant = std::all_of(seq.begin(), seq.end(), [&](const Matrix& M) { return M == seq.front(); });
    if (invariant) {
      os << label << " *\n";
      detail::write_matrix(os, seq.front());
      return;
    }
    for (std::size_t t = 0; t < seq.size(); ++t) {
      os << label << ' ' << t << '\n';
      detail::write_matrix(os, seq[t]);
    }
  };
  emit("A", sys.A);
  emit("B", sys.B);
  emit("C", sys.C);
  return os.str();
}

inline std::string read_text_file(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw Error(ErrorCode::Io, "cannot open " + path);
  std::ostringstream ss;
  ss << in.rdbuf();
  if (in.bad()) throw Error(ErrorCode::Io, "read error on " + path);
  return ss.str();
}

inline LtvSystem load_ltv_system(const std::string& path) { return parse_ltv_system(read_text_file(path)); }

}  // namespace minreg
