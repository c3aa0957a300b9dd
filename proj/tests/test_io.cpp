#include <gtest/gtest.h>

#include <filesystem>

#include "qmi/matrix_io.hpp"
#include "qmi/random.hpp"
#include "qmi/suites.hpp"

using namespace qmi;

TEST(MatrixIo, RoundTrip) {
  InstanceGenerator g(1);
  const TaggedMatrix t{{2, 3}, g.complex_gaussian(6, 6)};
  const TaggedMatrix back = tagged_matrix_from_json(json::parse(to_json(t).dump()));
  EXPECT_EQ(back.dims, t.dims);
  EXPECT_EQ(back.value, t.value);
}

TEST(MatrixIo, Rejections) {
  EXPECT_THROW(parse_json_text("{\"dims\": [2], ", "x"), InvalidInput);
  EXPECT_THROW(tagged_matrix_from_json(json::parse(R"({"dims": [2]})")), InvalidInput);
  EXPECT_THROW(tagged_matrix_from_json(json::parse(R"({"dims": [0], "entries": []})")), InvalidInput);
  EXPECT_THROW(tagged_matrix_from_json(json::parse(R"({"dims": [2], "entries": [[[1,0],[0,0]]]})")), InvalidInput);
  EXPECT_THROW(tagged_matrix_from_json(json::parse(R"({"dims": [1], "entries": [[[1]]]})")), InvalidInput);
  EXPECT_THROW(tagged_matrix_from_json(json::parse(R"({"dims": [1], "entries": [[["a", 0]]]})")), InvalidInput);
}

TEST(MatrixIo, NonHermitianRejected) {
  const json j = json::parse(R"({"dims": [2], "entries": [[[1,0],[1,0]],[[0,0],[1,0]]]})");
  EXPECT_THROW(hermitian_from_json(j), InvalidInput);
}

TEST(StateIo, RoundTripAndValidation) {
  const TripartiteState st = random_state(1, {2, 2, 2});
  const TripartiteState back = state_from_json(json::parse(to_json(st).dump()));
  EXPECT_EQ(back.dims, st.dims);
  EXPECT_LE((back.rho.mat() - st.rho.mat()).cwiseAbs().maxCoeff(), 0.0);

  json bad = to_json(st);
  bad["dims"] = {2, 4};
  EXPECT_THROW(state_from_json(bad), InvalidInput);
  TaggedMatrix unnormalized{{2, 2, 2}, Matrix::Identity(8, 8)};
  EXPECT_THROW(state_from_json(to_json(unnormalized)), InvalidInput);
}

TEST(StateIo, ReadFromFile) {
  const auto path = std::filesystem::temp_directory_path() / "qmi_test_state.json";
  write_atomically(path, to_json(random_state(5, {1, 2, 3})).dump());
  const TripartiteState st = read_state(path);
  EXPECT_EQ(st.dims, (std::array<int, 3>{1, 2, 3}));
  std::filesystem::remove(path);
  EXPECT_THROW(read_state(path), InvalidInput);
}

TEST(MeanPairIo, RoundTrip) {
  InstanceGenerator g(2);
  const MeanPair p(g.positive_definite(4), g.positive_definite(4));
  const MeanPair back = mean_pair_from_json(json::parse(to_json(p).dump()));
  EXPECT_GT(back.A.min_eigenvalue(), 0.0);
  EXPECT_GT(back.B.min_eigenvalue(), 0.0);
  EXPECT_EQ(back.A.mat(), p.A.mat());
}

TEST(Reports, StripTimingIsRecursive) {
  const json j = json::parse(R"({"a": 1, "wall_seconds": 2, "b": [{"wall_seconds": 3, "c": 4}]})");
  EXPECT_EQ(strip_timing(j).dump(), R"({"a":1,"b":[{"c":4}]})");
}

TEST(Reports, VerificationReportFields) {
  VerificationReport r;
  r.check = "x";
  r.property = "y";
  r.seed = 7;
  const json j = to_json(r);
  for (const char* k : {"check", "property", "quantities", "discrepancy", "tolerance", "pass", "seed", "wall_seconds"})
    EXPECT_TRUE(j.contains(k)) << k;
}

TEST(Suites, FittedRatioOfGeometricSequence) {
  std::vector<double> inc;
  for (int i = 0; i < 10; ++i) inc.push_back(std::pow(0.5, i));
  EXPECT_NEAR(fitted_increment_ratio(inc, 0.0), 0.5, 1e-12);
  EXPECT_NEAR(loglog_slope({1, 2, 4}, {1, 4, 16}), 2.0, 1e-12);
}
