#include "l2c/cohort.hpp"

#include <algorithm>
#include <cctype>
#include <charconv>
#include <cmath>
#include <fstream>
#include <iostream>
#include <unordered_map>

#include "l2c/csv.hpp"
#include "l2c/error.hpp"

namespace l2c {
namespace {

std::string lower(std::string_view s) {
  std::string out(s);
  for (char& c : out) c = static_cast<char>(std::tolower(static_cast<unsigned char>(c)));
  return out;
}

bool iequals(std::string_view a, std::string_view b) {
  return a.size() == b.size() &&
         std::equal(a.begin(), a.end(), b.begin(), [](char x, char y) {
           return std::tolower(static_cast<unsigned char>(x)) ==
                  std::tolower(static_cast<unsigned char>(y));
         });
}

std::optional<Diagnosis> stable_label(std::string_view label) {
  const std::string l = lower(label);
  if (l == "nl" || l == "cn" || l == "smc") return Diagnosis::CN;
  if (l == "mci" || l == "emci" || l == "lmci") return Diagnosis::MCI;
  if (l == "dementia" || l == "ad") return Diagnosis::AD;
  return std::nullopt;
}

const std::map<std::string, std::string>& default_columns() {
  static const std::map<std::string, std::string> defaults = {
      {"id", "RID"},       {"month", "month_bl"}, {"dx", "DX"},    {"apoe4", "APOE4"},
      {"sex", "PTGENDER"}, {"educ", "PTEDUCAT"},  {"marital", "PTMARRY"},
      {"age", "AGE"},      {"d1", "D1"},          {"d2", "D2"},
  };
  return defaults;
}

enum class Range { Any, NonNegative, Positive, Mmse, Cdrsb };

Range range_of(std::string_view feature) {
  static const std::unordered_map<std::string, Range> ranges = {
      {"MMSE", Range::Mmse},           {"CDRSB", Range::Cdrsb},
      {"ADAS13", Range::NonNegative},  {"Ventricles", Range::Positive},
      {"WholeBrain", Range::Positive}, {"Hippocampus", Range::Positive},
      {"Fusiform", Range::Positive},   {"MidTemp", Range::Positive},
      {"ICV", Range::Positive},
  };
  auto it = ranges.find(std::string(feature));
  return it == ranges.end() ? Range::Any : it->second;
}

bool in_range(Range range, double v) {
  switch (range) {
    case Range::Any: return true;
    case Range::NonNegative: return v >= 0.0;
    case Range::Positive: return v > 0.0;
    case Range::Mmse: return v >= 0.0 && v <= 30.0;
    case Range::Cdrsb: return v >= 0.0 && v <= 18.0;
  }
  return true;
}

struct Row {
  std::size_t line = 0;
  Visit visit;
  Demographics demographics;
  bool d1 = false;
  bool d2 = false;
};

class CohortParser {
 public:
  explicit CohortParser(const ParseOptions& options) : options_(options) {}

  Cohort run(std::istream& source) {
    csv::Reader reader(source, options_.delimiter);
    csv::Record record;
    if (!reader.next(record)) fail(ErrorKind::Parse, "line 1: missing header row");
    bind_header(record);

    std::map<std::string, std::map<double, Row>, bool (*)(std::string_view, std::string_view) noexcept>
        by_patient(&id_less);
    while (reader.next(record)) {
      if (record.fields.size() != header_size_) {
        fail(ErrorKind::Parse, "line " + std::to_string(record.line) + ": expected " +
                                   std::to_string(header_size_) + " columns, found " +
                                   std::to_string(record.fields.size()));
      }
      current_line_ = record.line;
      fields_ = &record.fields;
      auto id = std::string(csv::trim(record.fields[id_col_]));
      if (is_missing(id)) {
        reject("missing patient id");
        continue;
      }
      auto month = number_at(month_col_, "month");
      if (!month || *month < 0.0) {
        reject(month ? "negative month" : "missing month");
        continue;
      }
      Row row = read_row(record, *month);
      auto& visits = by_patient[id];
      auto [it, inserted] = visits.try_emplace(*month, row);
      if (!inserted) {
        if (options_.strict) {
          fail(ErrorKind::Schema, "line " + std::to_string(record.line) +
                                      ": duplicate visit for patient " + id + " at month " +
                                      csv::format_number(*month));
        }
        ++duplicates_;
        it->second = std::move(row);
      }
    }

    Cohort cohort;
    cohort.features = features_;
    if (derive_ventricles_) cohort.features.emplace_back(kVentriclesIcv);
    for (auto& [id, visits] : by_patient) {
      PatientHistory patient;
      patient.id = id;
      for (auto& [month, row] : visits) {
        merge(patient.demographics, row.demographics);
        patient.in_d1 = patient.in_d1 || row.d1;
        patient.in_d2 = patient.in_d2 || row.d2;
        if (derive_ventricles_) {
          const auto& v = row.visit.values;
          std::optional<double> ratio;
          if (v[*ventricles_idx_] && v[*icv_idx_]) {
            ratio = *v[*ventricles_idx_] / *v[*icv_idx_] * options_.ventricles_scale;
          }
          row.visit.values.push_back(ratio);
        }
        patient.visits.push_back(std::move(row.visit));
      }
      cohort.patients.push_back(std::move(patient));
    }
    report();
    return cohort;
  }

 private:
  void bind_header(const csv::Record& header) {
    header_size_ = header.fields.size();
    auto find = [&](const std::string& semantic) -> std::optional<std::size_t> {
      const std::string wanted = options_.column_for(semantic);
      for (std::size_t i = 0; i < header.fields.size(); ++i) {
        if (iequals(csv::trim(header.fields[i]), wanted)) return i;
      }
      return std::nullopt;
    };
    auto required = [&](const std::string& semantic) {
      auto col = find(semantic);
      if (!col) {
        fail(ErrorKind::Schema, "header has no column '" + options_.column_for(semantic) +
                                    "' for field " + semantic);
      }
      return *col;
    };
    id_col_ = required("id");
    month_col_ = required("month");
    dx_col_ = find("dx");
    apoe4_col_ = find("apoe4");
    sex_col_ = find("sex");
    educ_col_ = find("educ");
    marital_col_ = find("marital");
    age_col_ = find("age");
    d1_col_ = find("d1");
    d2_col_ = find("d2");
    for (const auto& name : options_.numeric_features) {
      if (name == kVentriclesIcv) {
        fail(ErrorKind::Config, std::string(kVentriclesIcv) + " is derived and cannot be declared");
      }
      if (auto col = find(name)) {
        features_.push_back(name);
        feature_cols_.push_back(*col);
        ranges_.push_back(range_of(name));
      }
    }
    auto index_of = [&](std::string_view name) -> std::optional<std::size_t> {
      auto it = std::find(features_.begin(), features_.end(), name);
      if (it == features_.end()) return std::nullopt;
      return static_cast<std::size_t>(it - features_.begin());
    };
    ventricles_idx_ = index_of("Ventricles");
    icv_idx_ = index_of("ICV");
    derive_ventricles_ = ventricles_idx_ && icv_idx_;
  }

  bool is_missing(std::string_view text) const {
    text = csv::trim(text);
    return std::any_of(options_.missing_sentinels.begin(), options_.missing_sentinels.end(),
                       [&](const std::string& s) { return text == csv::trim(s); });
  }

  std::string_view cell(std::size_t col) const { return csv::trim((*fields_)[col]); }

  std::optional<double> number_at(std::size_t col, std::string_view what) {
    const auto text = cell(col);
    if (is_missing(text)) return std::nullopt;
    auto value = csv::parse_number(text);
    if (!value) {
      if (options_.strict) {
        fail(ErrorKind::Parse, "line " + std::to_string(current_line_) + ": non-numeric " +
                                   std::string(what) + " value '" + std::string(text) + "'");
      }
      ++nulled_;
    }
    return value;
  }

  std::optional<double> checked(std::optional<double> value, bool ok, std::string_view what) {
    if (!value || ok) return value;
    if (options_.strict) {
      fail(ErrorKind::Schema, "line " + std::to_string(current_line_) + ": " + std::string(what) +
                                  " out of range: " + csv::format_number(*value));
    }
    ++nulled_;
    return std::nullopt;
  }

  std::optional<std::string_view> text_at(const std::optional<std::size_t>& col) const {
    if (!col) return std::nullopt;
    const auto text = cell(*col);
    if (is_missing(text)) return std::nullopt;
    return text;
  }

  std::optional<double> number_opt(const std::optional<std::size_t>& col, std::string_view what) {
    if (!col) return std::nullopt;
    return number_at(*col, what);
  }

  Row read_row(const csv::Record& record, double month) {
    fields_ = &record.fields;
    Row row;
    row.line = record.line;
    row.visit.month = month;
    if (auto label = text_at(dx_col_)) {
      try {
        row.visit.dx = encode_diagnosis(*label);
      } catch (const Error& e) {
        fail(ErrorKind::Encoding, "line " + std::to_string(record.line) + ": " +
                                      std::string(e.what()).substr(to_string(e.kind()).size() + 2));
      }
    }
    row.visit.values.reserve(features_.size() + 1);
    for (std::size_t f = 0; f < features_.size(); ++f) {
      auto v = number_at(feature_cols_[f], features_[f]);
      row.visit.values.push_back(checked(v, v && in_range(ranges_[f], *v), features_[f]));
    }

    auto& demo = row.demographics;
    if (auto apoe = checked(number_opt(apoe4_col_, "APOE4"), true, "APOE4")) {
      const bool ok = *apoe == 0.0 || *apoe == 1.0 || *apoe == 2.0;
      if (checked(apoe, ok, "APOE4")) demo.apoe4 = static_cast<int>(*apoe);
    }
    if (auto sex = text_at(sex_col_)) {
      if (iequals(*sex, "Male")) {
        demo.is_male = true;
      } else if (iequals(*sex, "Female")) {
        demo.is_male = false;
      } else {
        fail(ErrorKind::Encoding, "line " + std::to_string(record.line) +
                                      ": unknown sex label '" + std::string(*sex) + "'");
      }
    }
    auto educ = number_opt(educ_col_, "education");
    demo.educ = checked(educ, educ && *educ >= 0.0, "education");
    auto age = number_opt(age_col_, "age");
    demo.baseline_age = checked(age, age && *age >= 0.0, "age");
    if (auto marital = text_at(marital_col_)) {
      const auto* begin = std::begin(kMaritalVocabulary);
      const auto* end = std::end(kMaritalVocabulary);
      const auto* it = std::find_if(begin, end, [&](std::string_view v) { return iequals(v, *marital); });
      if (it == end) {
        fail(ErrorKind::Encoding, "line " + std::to_string(record.line) +
                                      ": unknown marital status '" + std::string(*marital) + "'");
      }
      demo.marital = static_cast<int>(it - begin);
    }
    row.d1 = flag(d1_col_);
    row.d2 = flag(d2_col_);
    if (!d1_col_) row.d1 = true;
    return row;
  }

  bool flag(const std::optional<std::size_t>& col) {
    auto v = number_opt(col, "membership flag");
    return v && *v != 0.0;
  }

  static void merge(Demographics& into, const Demographics& from) {
    if (!into.apoe4) into.apoe4 = from.apoe4;
    if (!into.is_male) into.is_male = from.is_male;
    if (!into.educ) into.educ = from.educ;
    if (!into.marital) into.marital = from.marital;
    if (!into.baseline_age) into.baseline_age = from.baseline_age;
  }

  void reject(const std::string& why) {
    if (options_.strict) {
      fail(ErrorKind::Schema, "line " + std::to_string(current_line_) + ": " + why);
    }
    ++skipped_;
  }

  void warn(const std::string& message) const {
    if (options_.warn) {
      options_.warn(message);
    } else {
      std::cerr << "warning: " << message << '\n';
    }
  }

  void report() const {
    if (duplicates_) {
      warn(std::to_string(duplicates_) + " duplicate (patient, month) rows; kept the last row read");
    }
    if (nulled_) warn(std::to_string(nulled_) + " invalid or out-of-range values set to missing");
    if (skipped_) warn(std::to_string(skipped_) + " rows without patient id or valid month skipped");
  }

  const ParseOptions& options_;
  std::size_t header_size_ = 0;
  std::size_t id_col_ = 0;
  std::size_t month_col_ = 0;
  std::optional<std::size_t> dx_col_, apoe4_col_, sex_col_, educ_col_, marital_col_, age_col_,
      d1_col_, d2_col_;
  std::vector<std::string> features_;
  std::vector<std::size_t> feature_cols_;
  std::vector<Range> ranges_;
  std::optional<std::size_t> ventricles_idx_, icv_idx_;
  bool derive_ventricles_ = false;

  const std::vector<std::string>* fields_ = nullptr;
  std::size_t current_line_ = 0;
  std::size_t duplicates_ = 0;
  std::size_t nulled_ = 0;
  std::size_t skipped_ = 0;
};

}  // namespace

std::optional<Diagnosis> encode_diagnosis(std::string_view raw) {
  const auto text = csv::trim(raw);
  if (text.empty()) return std::nullopt;
  if (auto dx = stable_label(text)) return dx;
  // transition labels: "<from> to <to>"
  const std::string l = lower(text);
  if (auto pos = l.find(" to "); pos != std::string::npos) {
    if (stable_label(csv::trim(std::string_view(l).substr(0, pos)))) {
      if (auto dx = stable_label(csv::trim(std::string_view(l).substr(pos + 4)))) return dx;
    }
  }
  fail(ErrorKind::Encoding, "unknown diagnosis label '" + std::string(text) + "'");
}

std::string_view diagnosis_label(Diagnosis dx) noexcept {
  switch (dx) {
    case Diagnosis::CN: return "NL";
    case Diagnosis::MCI: return "MCI";
    case Diagnosis::AD: return "Dementia";
  }
  return "";
}

Task parse_task(std::string_view name) {
  const std::string l = lower(csv::trim(name));
  if (l == "dx") return Task::DX;
  if (l == "adas" || l == "adas13" || l == "adas-cog") return Task::ADAS;
  if (l == "ventricles" || l == "vent") return Task::Ventricles;
  fail(ErrorKind::Config, "unknown task '" + std::string(name) + "' (expected DX, ADAS or Ventricles)");
}

std::string_view task_name(Task task) noexcept {
  switch (task) {
    case Task::DX: return "DX";
    case Task::ADAS: return "ADAS";
    case Task::Ventricles: return "Ventricles";
  }
  return "";
}

std::string_view task_wire_name(Task task) noexcept {
  return task == Task::Ventricles ? "VENT" : task_name(task);
}

bool id_less(std::string_view a, std::string_view b) noexcept {
  auto as_integer = [](std::string_view s) -> std::optional<long long> {
    long long v = 0;
    auto [ptr, ec] = std::from_chars(s.data(), s.data() + s.size(), v);
    if (s.empty() || ec != std::errc{} || ptr != s.data() + s.size()) return std::nullopt;
    return v;
  };
  auto ia = as_integer(a);
  auto ib = as_integer(b);
  if (ia && ib) {
    if (*ia != *ib) return *ia < *ib;
    return a < b;  // "007" vs "7"
  }
  if (ia != ib) return ia.has_value();  // numeric ids first
  return a < b;
}

std::optional<std::size_t> Cohort::feature_index(std::string_view name) const {
  auto it = std::find(features.begin(), features.end(), name);
  if (it == features.end()) return std::nullopt;
  return static_cast<std::size_t>(it - features.begin());
}

const PatientHistory* Cohort::find(std::string_view id) const {
  auto it = std::lower_bound(patients.begin(), patients.end(), id,
                             [](const PatientHistory& p, std::string_view v) { return id_less(p.id, v); });
  if (it == patients.end() || it->id != id) return nullptr;
  return &*it;
}

Membership parse_membership(std::string_view name) {
  const std::string l = lower(csv::trim(name));
  if (l == "d1") return Membership::D1;
  if (l == "d2") return Membership::D2;
  if (l == "all") return Membership::All;
  fail(ErrorKind::Config, "unknown membership '" + std::string(name) + "' (expected D1, D2 or all)");
}

bool selected(const PatientHistory& patient, Membership membership) noexcept {
  switch (membership) {
    case Membership::D1: return patient.in_d1;
    case Membership::D2: return patient.in_d2;
    case Membership::All: return true;
  }
  return false;
}

OutcomeReader::OutcomeReader(const Cohort& cohort, Task task) : task_(task) {
  if (task == Task::DX) return;
  const std::string_view feature = task == Task::ADAS ? std::string_view("ADAS13") : kVentriclesIcv;
  column_ = cohort.feature_index(feature);
  if (!column_) {
    fail(ErrorKind::Schema, "cohort has no '" + std::string(feature) + "' feature required by task " +
                                std::string(task_name(task)));
  }
}

std::optional<double> OutcomeReader::operator()(const Visit& visit) const {
  if (task_ == Task::DX) {
    if (!visit.dx) return std::nullopt;
    return static_cast<double>(code(*visit.dx));
  }
  return visit.values[*column_];
}

std::string ParseOptions::column_for(const std::string& semantic) const {
  if (auto it = columns.find(semantic); it != columns.end()) return it->second;
  if (auto it = default_columns().find(semantic); it != default_columns().end()) return it->second;
  return semantic;
}

Cohort parse_cohort(std::istream& source, const ParseOptions& options) {
  return CohortParser(options).run(source);
}

Cohort read_cohort(const std::string& path, const ParseOptions& options) {
  std::ifstream in(path);
  if (!in) fail(ErrorKind::Io, "cannot open '" + path + "'");
  return parse_cohort(in, options);
}

void write_cohort(std::ostream& out, const Cohort& cohort) {
  std::vector<std::size_t> raw;
  std::vector<std::string> header = {"RID", "month_bl", "DX"};
  for (std::size_t f = 0; f < cohort.features.size(); ++f) {
    if (cohort.features[f] == kVentriclesIcv) continue;
    raw.push_back(f);
    header.push_back(cohort.features[f]);
  }
  for (const char* c : {"APOE4", "PTGENDER", "PTEDUCAT", "PTMARRY", "AGE", "D1", "D2"}) {
    header.emplace_back(c);
  }
  csv::write_record(out, header);

  std::vector<std::string> fields;
  for (const auto& p : cohort.patients) {
    const auto& d = p.demographics;
    for (const auto& v : p.visits) {
      fields.clear();
      fields.push_back(p.id);
      fields.push_back(csv::format_number(v.month));
      fields.emplace_back(v.dx ? diagnosis_label(*v.dx) : "");
      for (auto f : raw) fields.push_back(csv::format_optional(v.values[f]));
      fields.push_back(d.apoe4 ? std::to_string(*d.apoe4) : "");
      fields.emplace_back(d.is_male ? (*d.is_male ? "Male" : "Female") : "");
      fields.push_back(csv::format_optional(d.educ));
      fields.emplace_back(d.marital ? kMaritalVocabulary[*d.marital] : "");
      fields.push_back(csv::format_optional(d.baseline_age));
      fields.emplace_back(p.in_d1 ? "1" : "0");
      fields.emplace_back(p.in_d2 ? "1" : "0");
      csv::write_record(out, fields);
    }
  }
}

void write_cohort(const std::string& path, const Cohort& cohort) {
  std::ofstream out(path);
  if (!out) fail(ErrorKind::Io, "cannot write '" + path + "'");
  write_cohort(out, cohort);
}

}  // namespace l2c
