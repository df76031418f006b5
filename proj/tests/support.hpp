#pragma once

#include <filesystem>
#include <fstream>
#include <initializer_list>
#include <optional>
#include <random>
#include <sstream>
#include <string>
#include <vector>

#include "l2c/cohort.hpp"

namespace support {

/// Fresh directory under the system temp dir, removed on destruction.
class TempDir {
 public:
  TempDir() {
    std::random_device rd;
    path_ = std::filesystem::temp_directory_path() / ("l2c_test_" + std::to_string(rd()) + std::to_string(rd()));
    std::filesystem::create_directories(path_);
  }
  ~TempDir() {
    std::error_code ec;
    std::filesystem::remove_all(path_, ec);
  }
  TempDir(const TempDir&) = delete;
  TempDir& operator=(const TempDir&) = delete;

  std::string file(const std::string& name) const { return (path_ / name).string(); }
  const std::filesystem::path& path() const { return path_; }

 private:
  std::filesystem::path path_;
};

inline std::string slurp(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  std::stringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

inline std::size_t data_lines(const std::string& path) {
  std::ifstream in(path);
  std::string line;
  std::size_t n = 0;
  while (std::getline(in, line)) {
    if (!line.empty()) ++n;
  }
  return n > 0 ? n - 1 : 0;
}

using Opt = std::optional<double>;

/// Visit with one value per cohort feature.
inline l2c::Visit visit(double month, std::optional<l2c::Diagnosis> dx, std::vector<Opt> values) {
  return l2c::Visit{month, dx, std::move(values)};
}

/// Single-feature cohort ("ADAS13") whose patients carry the given visits.
inline l2c::Cohort adas_cohort(std::initializer_list<std::vector<l2c::Visit>> histories) {
  l2c::Cohort c;
  c.features = {"ADAS13"};
  int id = 1;
  for (const auto& visits : histories) {
    l2c::PatientHistory p;
    p.id = std::to_string(id++);
    p.visits = visits;
    p.in_d1 = true;
    p.in_d2 = true;
    p.demographics.baseline_age = 70.0;
    c.patients.push_back(std::move(p));
  }
  return c;
}

/// Patient with n visits six months apart, all outcomes present.
inline std::vector<l2c::Visit> regular_visits(std::size_t n) {
  std::vector<l2c::Visit> v;
  for (std::size_t i = 0; i < n; ++i) {
    v.push_back(visit(6.0 * static_cast<double>(i), l2c::Diagnosis::MCI, {10.0 + static_cast<double>(i)}));
  }
  return v;
}

}  // namespace support
