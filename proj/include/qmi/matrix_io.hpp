#pragma once

#include <filesystem>
#include <fstream>
#include <sstream>
#include <string>
#include <vector>

#include "json.hpp"
#include "qmi/errors.hpp"
#include "qmi/linalg.hpp"
#include "qmi/report.hpp"
#include "qmi/ssa.hpp"

namespace qmi {

/// A square matrix together with the tensor factorization of its row space.
/// File form: {"dims": [d1, ..., dm], "entries": [[[re, im], ...], ...]},
/// row-major, side length d1·...·dm.
struct TaggedMatrix {
  std::vector<int> dims;
  Matrix value;
};

inline json to_json(const TaggedMatrix& t) {
  json j;
  j["dims"] = t.dims;
  j["entries"] = matrix_to_json(t.value);
  return j;
}

inline TaggedMatrix tagged_matrix_from_json(const json& j) {
  if (!j.is_object() || !j.contains("dims") || !j.contains("entries"))
    throw InvalidInput("matrix: expected an object with \"dims\" and \"entries\"");
  const json& jd = j.at("dims");
  if (!jd.is_array() || jd.empty()) throw InvalidInput("matrix: \"dims\" must be a nonempty array");
  TaggedMatrix t;
  long n = 1;
  for (const auto& d : jd) {
    if (!d.is_number_integer() || d.get<long>() < 1) throw InvalidInput("matrix: dims must be positive integers");
    t.dims.push_back(d.get<int>());
    n *= d.get<long>();
    if (n > 4096) throw InvalidInput("matrix: dimension too large");
  }
  const json& rows = j.at("entries");
  if (!rows.is_array() || static_cast<long>(rows.size()) != n)
    throw InvalidInput("matrix: \"entries\" must have one row per basis vector");
  t.value.resize(n, n);
  for (long i = 0; i < n; ++i) {
    const json& row = rows[i];
    if (!row.is_array() || static_cast<long>(row.size()) != n) throw InvalidInput("matrix: ragged row");
    for (long k = 0; k < n; ++k) {
      const json& e = row[k];
      if (!e.is_array() || e.size() != 2 || !e[0].is_number() || !e[1].is_number())
        throw InvalidInput("matrix: entries must be [re, im] pairs");
      t.value(i, k) = cplx(e[0].get<double>(), e[1].get<double>());
    }
  }
  if (!all_finite(t.value)) throw InvalidInput("matrix: non-finite entry");
  return t;
}

inline json parse_json_text(const std::string& text, const std::string& what) {
  try {
    return json::parse(text);
  } catch (const json::parse_error& e) {
    throw InvalidInput(what + ": malformed JSON (" + e.what() + ")");
  }
}

inline json read_json_file(const std::filesystem::path& path) {
  std::ifstream is(path, std::ios::binary);
  if (!is) throw InvalidInput("cannot open " + path.string());
  std::ostringstream ss;
  ss << is.rdbuf();
  return parse_json_text(ss.str(), path.string());
}

/// Hermitian within the linalg tolerance, or InvalidInput.
inline HermitianMatrix hermitian_from_json(const json& j) {
  return HermitianMatrix(tagged_matrix_from_json(j).value);
}

inline TripartiteState state_from_json(const json& j) {
  const TaggedMatrix t = tagged_matrix_from_json(j);
  if (t.dims.size() != 3) throw InvalidInput("state: \"dims\" must be [d_A, d_B, d_C]");
  return TripartiteState(PositiveDefiniteMatrix(HermitianMatrix(t.value)), {t.dims[0], t.dims[1], t.dims[2]});
}

inline json to_json(const TripartiteState& st) {
  return to_json(TaggedMatrix{{st.dims[0], st.dims[1], st.dims[2]}, st.rho.mat()});
}

inline TripartiteState read_state(const std::filesystem::path& path) { return state_from_json(read_json_file(path)); }

inline MeanPair mean_pair_from_json(const json& j) {
  if (!j.is_object() || !j.contains("A") || !j.contains("B"))
    throw InvalidInput("mean-pair: expected an object with \"A\" and \"B\"");
  return MeanPair(PositiveDefiniteMatrix(hermitian_from_json(j.at("A"))),
                  PositiveDefiniteMatrix(hermitian_from_json(j.at("B"))));
}

inline json to_json(const MeanPair& p) {
  const int n = static_cast<int>(p.dim());
  return {{"A", to_json(TaggedMatrix{{n}, p.A.mat()})}, {"B", to_json(TaggedMatrix{{n}, p.B.mat()})}};
}

}  // namespace qmi
