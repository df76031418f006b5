#pragma once

#include <array>
#include <iosfwd>
#include <string>
#include <variant>
#include <vector>

#include "l2c/cohort.hpp"

namespace l2c {

/// (p_CN, p_MCI, p_AD)
using ClassProbabilities = std::array<double, kDiagnosisCount>;

inline constexpr double kProbabilityTolerance = 1e-9;

/// True when every probability lies in [0, 1] and the sum is within 1e-9 of 1.
bool is_normalized(const ClassProbabilities& p) noexcept;

/// Index of the largest probability; ties go to the lower class.
int argmax(const ClassProbabilities& p) noexcept;

struct PredictionRecord {
  std::string patient_id;
  double target_month = 0.0;
  std::variant<ClassProbabilities, double> value;

  bool has_probabilities() const noexcept { return value.index() == 0; }
  const ClassProbabilities& probabilities() const { return std::get<ClassProbabilities>(value); }
  double estimate() const { return std::get<double>(value); }

  bool operator==(const PredictionRecord&) const = default;
};

/// Columns: patient_id, target_month, then p_CN,p_MCI,p_AD (DX) or estimate.
void write_predictions(std::ostream& out, Task task, const std::vector<PredictionRecord>& records);
void write_predictions(const std::string& path, Task task, const std::vector<PredictionRecord>& records);

}  // namespace l2c
