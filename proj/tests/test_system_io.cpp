#include <gtest/gtest.h>

#include <random>

#include "instances.hpp"
#include "minreg/catalog.hpp"
#include "minreg/system_io.hpp"

using namespace minreg;

namespace {

ErrorCode parse_code(std::string_view text) {
  try {
    parse_ltv_system(text);
  } catch (const Error& e) {
    return e.code();
  }
  return ErrorCode::InvalidArgument;  // sentinel: no error
}

}  // namespace

TEST(SystemFile, WildcardsAndOverrides) {
  const auto sys = parse_ltv_system(R"(# scalar plant
1 1 1 2
A *
0.5
B * 0
C *   # comment after a label
1
A 1
0.25
)");
  EXPECT_EQ(sys.dims, (Dims{1, 1, 1, 2}));
  EXPECT_EQ(sys.A[0](0, 0), 0.5);
  EXPECT_EQ(sys.A[1](0, 0), 0.25);
  EXPECT_EQ(sys.A[2](0, 0), 0.5);
  EXPECT_EQ(sys.C[2](0, 0), 1.0);
}

TEST(SystemFile, Errors) {
  EXPECT_EQ(parse_code("1 1 1 1\nA *\n1\nB *\n0\n"), ErrorCode::Parse);            // missing C
  EXPECT_EQ(parse_code("1 1 1 1\nA 0\n1\nB *\n0\nC *\n1\n"), ErrorCode::Parse);    // missing A 1
  EXPECT_EQ(parse_code("1 1 1 1\nA *\n1\nA *\n2\nB *\n0\nC *\n1\n"), ErrorCode::Parse);  // duplicate
  EXPECT_EQ(parse_code("1 1 1 1\nD *\n1\n"), ErrorCode::Parse);                    // unknown label
  EXPECT_EQ(parse_code("1 1 1 1\nA 5\n1\n"), ErrorCode::Parse);                    // t > T
  EXPECT_EQ(parse_code("1 1 1\n"), ErrorCode::Parse);                              // short header
  EXPECT_EQ(parse_code("1 1 1 1\nA *\nx\n"), ErrorCode::Parse);                    // bad entry
  EXPECT_EQ(parse_code("1 1 1 1\nA *\n1\nB *\n"), ErrorCode::Parse);               // truncated
  EXPECT_EQ(parse_code("1 1 1 1\ncontinuous\nA *\n1\nB *\n0\nC *\n1\n"), ErrorCode::Parse);
  EXPECT_THROW(load_ltv_system("/nonexistent/file.sys"), Error);
}

TEST(SystemFile, FormatRoundTrip) {
  std::mt19937_64 rng(71);
  for (int trial = 0; trial < 10; ++trial) {
    const auto sys = testing_support::random_system(rng, testing_support::random_dims(rng));
    const auto back = parse_ltv_system(format_ltv_system(sys));
    EXPECT_EQ(back.dims, sys.dims);
    for (std::size_t t = 0; t <= sys.dims.T; ++t) {
      EXPECT_EQ(back.A[t], sys.A[t]);
      EXPECT_EQ(back.B[t], sys.B[t]);
      EXPECT_EQ(back.C[t], sys.C[t]);
    }
  }
  const auto ti = LtvSystem::time_invariant(Matrix{{0.1, 0.2}, {0.3, 0.4}}, Matrix{{1}, {0}}, Matrix{{1, 0}}, 4);
  const std::string text = format_ltv_system(ti);
  EXPECT_NE(text.find("A *"), std::string::npos);
  EXPECT_EQ(text.find("A 0"), std::string::npos);
}

TEST(ContinuousFile, Parse) {
  const auto cs = parse_continuous_system("# from somewhere\n2 1 1 0\ncontinuous\nA *\n0 1\n-1 0\nB *\n0\n1\nC *\n1 0\n", "osc");
  EXPECT_EQ(cs.name, "osc");
  EXPECT_EQ(cs.A, (Matrix{{0, 1}, {-1, 0}}));
  EXPECT_NE(cs.provenance.find("from somewhere"), std::string::npos);
  EXPECT_THROW(parse_continuous_system("1 1 1 0\ncontinuous\nA 0\n1\nB *\n0\nC *\n1\n", "x"), Error);
  EXPECT_THROW(parse_continuous_system("1 1 1 0\nA *\n1\nB *\n0\nC *\n1\n", "x"), Error);
}

TEST(Catalog, MatchesDataFiles) {
  const auto names = catalog_names();
  EXPECT_EQ(names, (std::vector<std::string>{"NN4", "AC1", "AC2", "AC3"}));
  for (const auto& [name, text] : kCatalogText) {
    const std::string path = std::string(MINREG_SOURCE_DIR) + "/data/systems/" + std::string(name) + ".sys";
    EXPECT_EQ(read_text_file(path), text) << path;
  }
}

TEST(Catalog, SystemsParse) {
  for (const auto& name : catalog_names()) {
    const auto cs = catalog_system(name);
    EXPECT_EQ(cs.name, name);
    EXPECT_FALSE(cs.provenance.empty());
    EXPECT_TRUE(cs.A.is_square());
  }
  const auto nn4 = catalog_system("NN4");
  EXPECT_EQ(nn4.A.rows(), 4u);
  EXPECT_TRUE(in_catalog("AC3"));
  EXPECT_FALSE(in_catalog("XYZ"));
  EXPECT_THROW(catalog_system("XYZ"), Error);
}
