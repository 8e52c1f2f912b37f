#pragma once

// Continuous-time benchmark plants. The text of each entry is identical to
// data/systems/<name>.sys; the test suite checks that the two stay in sync.

#include <array>
#include <string>
#include <string_view>
#include <utility>
#include <vector>

#include "minreg/error.hpp"
#include "minreg/system_io.hpp"

namespace minreg {

inline constexpr std::array<std::pair<std::string_view, std::string_view>, 4> kCatalogText = {{
    {"NN4", R"sys(# NN4: fourth-order example from the COMPleib benchmark collection
# (F. Leibfritz, "COMPleib: COnstrained Matrix-optimization Problem library").
# Continuous-time (A, B, C); the measured output is the first three states.
# Transcribed by hand without access to the original distribution files;
# check entries against COMPleib before relying on exact values.
4 3 2 10
continuous
A *
0      1      0      0
0     -2.93  -4.75  -0.78
0.086  0     -0.11  -1
0     -0.042  2.59  -0.39
B *
0      0
0     -3.91
0.035  0
-2.53  0.31
C *
1 0 0 0
0 1 0 0
0 0 1 0
)sys"},
    {"AC1", R"sys(# AC1: fifth-order aircraft model (Hung and MacFarlane) from the COMPleib
# benchmark collection (F. Leibfritz, "COMPleib: COnstrained
# Matrix-optimization Problem library"). Measured output: first three states.
# Transcribed by hand without access to the original distribution files;
# check entries against COMPleib before relying on exact values.
5 3 3 10
continuous
A *
0  0        1.132   0       -1
0 -0.0538  -0.1712  0        0.0705
0  0        0       1        0
0  0.0485   0      -0.8556  -1.013
0 -0.2909   0       1.0532  -0.6859
B *
0       0  0
-0.12   1  0
0       0  0
4.419   0 -1.665
1.575   0 -0.0732
C *
1 0 0 0 0
0 1 0 0 0
0 0 1 0 0
)sys"},
    {"AC2", R"sys(# AC2: fifth-order aircraft model from the COMPleib benchmark collection
# (F. Leibfritz, "COMPleib: COnstrained Matrix-optimization Problem library").
# In COMPleib AC2 shares A, B and the measurement matrix C with AC1 and
# differs only in the performance channels, which the observer problem does
# not use. Transcribed by hand without access to the original distribution
# files; check entries against COMPleib before relying on exact values.
5 3 3 10
continuous
A *
0  0        1.132   0       -1
0 -0.0538  -0.1712  0        0.0705
0  0        0       1        0
0  0.0485   0      -0.8556  -1.013
0 -0.2909   0       1.0532  -0.6859
B *
0       0  0
-0.12   1  0
0       0  0
4.419   0 -1.665
1.575   0 -0.0732
C *
1 0 0 0 0
0 1 0 0 0
0 0 1 0 0
)sys"},
    {"AC3", R"sys(# AC3: fifth-order L-1011 lateral-axis aircraft model from the COMPleib
# benchmark collection (F. Leibfritz, "COMPleib: COnstrained
# Matrix-optimization Problem library"). Four measured outputs.
# Transcribed by hand without access to the original distribution files;
# check entries against COMPleib before relying on exact values.
5 4 2 10
continuous
A *
0       0       1       0      0
0      -0.154  -0.0042  1.54   0
0       0.249  -1      -5.2    0
0.0386 -0.996  -0.0003 -0.117  0
0       0.5     0       0     -0.5
B *
0      0
-0.744 -0.032
0.337  -1.12
0.02    0
0       0
C *
0 1 0 0 -1
0 0 1 0 0
0 0 0 1 0
1 0 0 0 0
)sys"},
}};

inline std::vector<std::string> catalog_names() {
  std::vector<std::string> out;
  for (const auto& [name, text] : kCatalogText) out.emplace_back(name);
  return out;
}

inline bool in_catalog(std::string_view name) {
  for (const auto& [n, text] : kCatalogText)
    if (n == name) return true;
  return false;
}

inline ContinuousSystem catalog_system(std::string_view name) {
  for (const auto& [n, text] : kCatalogText)
    if (n == name) return parse_continuous_system(text, std::string(n));
  throw Error(ErrorCode::InvalidArgument, "unknown catalog system '" + std::string(name) + "'");
}

}  // namespace minreg
