#pragma once

#include <cstdint>
#include <functional>
#include <iosfwd>
#include <map>
#include <optional>
#include <span>
#include <string>
#include <string_view>
#include <vector>

namespace l2c {

/// Clinical diagnosis on the ordinal scale CN < MCI < AD.
enum class Diagnosis : std::uint8_t { CN = 0, MCI = 1, AD = 2 };

inline constexpr int kDiagnosisCount = 3;

constexpr int code(Diagnosis dx) noexcept { return static_cast<int>(dx); }

/// Maps a source diagnosis label to its state. Transition labels such as
/// "NL to MCI" map to their endpoint. Empty input means missing.
/// Throws Error(Encoding) for unrecognized labels.
std::optional<Diagnosis> encode_diagnosis(std::string_view raw);

/// Canonical source label ("NL", "MCI", "Dementia").
std::string_view diagnosis_label(Diagnosis dx) noexcept;

enum class Task { DX, ADAS, Ventricles };

/// Accepts DX, ADAS, ADAS13, Ventricles, VENT (case-insensitive).
Task parse_task(std::string_view name);
std::string_view task_name(Task task) noexcept;
/// Name used on the model bridge wire ("DX", "ADAS", "VENT").
std::string_view task_wire_name(Task task) noexcept;
inline constexpr bool is_classification(Task task) noexcept { return task == Task::DX; }

/// Derived feature holding Ventricles / ICV (times a configurable scale).
inline constexpr std::string_view kVentriclesIcv = "Ventricles_ICV";

struct Visit {
  double month = 0.0;  // months since baseline
  std::optional<Diagnosis> dx;
  std::vector<std::optional<double>> values;  // indexed like Cohort::features

  bool operator==(const Visit&) const = default;
};

/// Declared marital status vocabulary; the code is the index into this list.
inline constexpr std::string_view kMaritalVocabulary[] = {"Married", "Widowed", "Divorced",
                                                          "Never married", "Unknown"};

struct Demographics {
  std::optional<int> apoe4;  // 0, 1 or 2 alleles
  std::optional<bool> is_male;
  std::optional<double> educ;  // years
  std::optional<int> marital;  // index into kMaritalVocabulary
  std::optional<double> baseline_age;

  bool operator==(const Demographics&) const = default;
};

struct PatientHistory {
  std::string id;
  Demographics demographics;
  std::vector<Visit> visits;  // strictly increasing by month
  bool in_d1 = false;
  bool in_d2 = false;

  bool operator==(const PatientHistory&) const = default;
};

/// Ordering on patient ids: numeric ids compare numerically, otherwise lexicographically.
bool id_less(std::string_view a, std::string_view b) noexcept;

struct Cohort {
  std::vector<std::string> features;      // numeric feature names, derived ones last
  std::vector<PatientHistory> patients;   // sorted by id_less, ids unique

  std::optional<std::size_t> feature_index(std::string_view name) const;
  const PatientHistory* find(std::string_view id) const;

  bool operator==(const Cohort&) const = default;
};

enum class Membership { D1, D2, All };
Membership parse_membership(std::string_view name);
bool selected(const PatientHistory& patient, Membership membership) noexcept;

/// Reads the outcome of a task at one visit. For Ventricles this is the
/// ICV-normalized volume, missing whenever either volume is missing.
class OutcomeReader {
 public:
  OutcomeReader(const Cohort& cohort, Task task);

  std::optional<double> operator()(const Visit& visit) const;
  Task task() const noexcept { return task_; }
  /// Feature carrying the outcome, if it is a numeric feature.
  std::optional<std::size_t> column() const noexcept { return column_; }

 private:
  Task task_;
  std::optional<std::size_t> column_;
};

struct ParseOptions {
  /// Semantic field -> source column. Semantic keys: id, month, dx, apoe4, sex,
  /// educ, marital, age, d1, d2 and each numeric feature name. Unlisted keys
  /// use the TADPOLE default column names. Header matching is case-insensitive.
  std::map<std::string, std::string> columns;
  std::vector<std::string> numeric_features = {"MMSE",     "CDRSB",       "ADAS13",
                                               "Ventricles", "WholeBrain", "Hippocampus",
                                               "Fusiform", "MidTemp",     "ICV"};
  std::vector<std::string> missing_sentinels = {"", "NA", "NaN", "-4"};
  bool strict = false;
  char delimiter = ',';
  double ventricles_scale = 1.0;
  std::function<void(const std::string&)> warn;  // defaults to stderr

  std::string column_for(const std::string& semantic) const;
};

/// Parses delimited cohort text. Visits are sorted by month per patient; no
/// imputation takes place.
Cohort parse_cohort(std::istream& source, const ParseOptions& options = {});
Cohort read_cohort(const std::string& path, const ParseOptions& options = {});

/// Canonical dump in the default column layout; parse_cohort reads it back identically.
void write_cohort(std::ostream& out, const Cohort& cohort);
void write_cohort(const std::string& path, const Cohort& cohort);

}  // namespace l2c
