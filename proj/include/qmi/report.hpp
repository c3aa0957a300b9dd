#pragma once

#include <chrono>
#include <cstdint>
#include <filesystem>
#include <fstream>
#include <optional>
#include <string>
#include <vector>

#include "json.hpp"
#include "qmi/errors.hpp"
#include "qmi/linalg.hpp"

namespace qmi {

using json = nlohmann::ordered_json;

/// One certified identity: what was compared, how far apart, against what tolerance.
struct VerificationReport {
  std::string check;
  std::string property;  // the identity or inequality being certified, in words
  json quantities = json::object();
  double discrepancy = 0.0;
  double tolerance = 0.0;
  bool pass = false;
  std::optional<std::uint64_t> seed;
  double wall_seconds = 0.0;  // excluded from determinism comparisons
};

inline json to_json(const VerificationReport& r) {
  json j;
  j["check"] = r.check;
  j["property"] = r.property;
  j["quantities"] = r.quantities;
  j["discrepancy"] = r.discrepancy;
  j["tolerance"] = r.tolerance;
  j["pass"] = r.pass;
  if (r.seed) j["seed"] = *r.seed;
  else j["seed"] = nullptr;
  j["wall_seconds"] = r.wall_seconds;
  return j;
}

inline json matrix_to_json(const Matrix& m) {
  json rows = json::array();
  for (Eigen::Index i = 0; i < m.rows(); ++i) {
    json row = json::array();
    for (Eigen::Index k = 0; k < m.cols(); ++k) row.push_back({m(i, k).real(), m(i, k).imag()});
    rows.push_back(row);
  }
  return rows;
}

inline json real_vector_to_json(const RealVector& v) {
  json a = json::array();
  for (Eigen::Index i = 0; i < v.size(); ++i) a.push_back(v(i));
  return a;
}

/// Removes every "wall_seconds" field, recursively. Two runs with equal
/// configuration must agree byte for byte after this.
inline json strip_timing(json j) {
  if (j.is_object()) {
    json out = json::object();
    for (auto it = j.begin(); it != j.end(); ++it)
      if (it.key() != "wall_seconds") out[it.key()] = strip_timing(it.value());
    return out;
  }
  if (j.is_array()) {
    json out = json::array();
    for (auto& e : j) out.push_back(strip_timing(e));
    return out;
  }
  return j;
}

/// Write to a sibling temporary file and rename over the target.
inline void write_atomically(const std::filesystem::path& path, const std::string& content) {
  std::filesystem::path tmp = path;
  tmp += ".tmp";
  {
    std::ofstream os(tmp, std::ios::binary | std::ios::trunc);
    if (!os) throw InvalidInput("cannot open report file " + tmp.string());
    os << content;
    if (!os) throw InvalidInput("failed writing report file " + tmp.string());
  }
  std::filesystem::rename(tmp, path);
}

class Stopwatch {
 public:
  Stopwatch() : start_(std::chrono::steady_clock::now()) {}
  double seconds() const {
    return std::chrono::duration<double>(std::chrono::steady_clock::now() - start_).count();
  }

 private:
  std::chrono::steady_clock::time_point start_;
};

}  // namespace qmi
