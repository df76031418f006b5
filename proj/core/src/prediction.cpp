#include "l2c/prediction.hpp"

#include <cmath>
#include <fstream>

#include "l2c/csv.hpp"
#include "l2c/error.hpp"

namespace l2c {

bool is_normalized(const ClassProbabilities& p) noexcept {
  double sum = 0.0;
  for (double v : p) {
    if (!std::isfinite(v) || v < 0.0 || v > 1.0) return false;
    sum += v;
  }
  return std::abs(sum - 1.0) <= kProbabilityTolerance;
}

int argmax(const ClassProbabilities& p) noexcept {
  int best = 0;
  for (int k = 1; k < kDiagnosisCount; ++k) {
    if (p[k] > p[best]) best = k;
  }
  return best;
}

void write_predictions(std::ostream& out, Task task, const std::vector<PredictionRecord>& records) {
  if (is_classification(task)) {
    csv::write_record(out, {"patient_id", "target_month", "p_CN", "p_MCI", "p_AD"});
  } else {
    csv::write_record(out, {"patient_id", "target_month", "estimate"});
  }
  std::vector<std::string> fields;
  for (const auto& r : records) {
    require(r.has_probabilities() == is_classification(task), "prediction kind does not match task");
    fields = {r.patient_id, csv::format_number(r.target_month)};
    if (r.has_probabilities()) {
      for (double p : r.probabilities()) fields.push_back(csv::format_number(p));
    } else {
      fields.push_back(csv::format_number(r.estimate()));
    }
    csv::write_record(out, fields);
  }
}

void write_predictions(const std::string& path, Task task, const std::vector<PredictionRecord>& records) {
  std::ofstream out(path);
  if (!out) fail(ErrorKind::Io, "cannot write '" + path + "'");
  write_predictions(out, task, records);
}

}  // namespace l2c
