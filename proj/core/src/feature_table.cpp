#include "l2c/feature_table.hpp"

#include <algorithm>
#include <filesystem>
#include <fstream>

#include "l2c/csv.hpp"
#include "l2c/error.hpp"

namespace l2c {
namespace {

bool starts_with(std::string_view s, std::string_view prefix) { return s.substr(0, prefix.size()) == prefix; }
bool ends_with(std::string_view s, std::string_view suffix) {
  return s.size() >= suffix.size() && s.substr(s.size() - suffix.size()) == suffix;
}

const std::vector<std::string> kProvenance = {"patient_id", "cutoff_month", "target_month"};

}  // namespace

TableRow to_table_row(const L2CRow& row) {
  return TableRow{row.patient_id, row.cutoff_month, row.target_month, flatten(row), row.target};
}

FeatureTable FeatureTable::from_rows(Task task, std::span<const std::string> features,
                                     std::span<const L2CRow> rows) {
  FeatureTable table;
  table.task = task;
  table.columns = row_columns(features);
  table.rows.reserve(rows.size());
  for (const auto& r : rows) {
    require(r.features.size() == features.size(), "row feature count does not match schema");
    table.rows.push_back(to_table_row(r));
  }
  return table;
}

std::vector<std::string> FeatureTable::column_names() const {
  std::vector<std::string> names;
  names.reserve(columns.size());
  for (const auto& c : columns) names.push_back(c.name);
  return names;
}

std::optional<std::size_t> FeatureTable::column_index(std::string_view name) const {
  auto it = std::find_if(columns.begin(), columns.end(), [&](const Column& c) { return c.name == name; });
  if (it == columns.end()) return std::nullopt;
  return static_cast<std::size_t>(it - columns.begin());
}

ColumnRole infer_role(std::string_view name) {
  using enum ColumnRole;
  if (name == "horizon") return Horizon;
  if (name == "current_age") return Age;
  if (name == "apoe4" || name == "is_male" || name == "educ" || name == "marital") return Demographic;
  if (name == "milder_DX") return DxFlag;
  if (name == "mr_DX" || name == "best_DX" || name == "worst_DX") return DxState;
  if (starts_with(name, "time_since_")) return ends_with(name, "_DX") ? DxTimeDelta : TimeDelta;
  return Value;
}

nlohmann::ordered_json manifest(const FeatureTable& table) {
  nlohmann::ordered_json cols = nlohmann::ordered_json::array();
  cols.push_back({{"name", "patient_id"}, {"role", "id"}});
  cols.push_back({{"name", "cutoff_month"}, {"role", "provenance"}});
  cols.push_back({{"name", "target_month"}, {"role", "provenance"}});
  for (const auto& c : table.columns) cols.push_back({{"name", c.name}, {"role", to_string(c.role)}});
  cols.push_back({{"name", "target"}, {"role", "target"}});
  return {{"task", task_name(table.task)}, {"rows", table.rows.size()}, {"columns", cols}};
}

void write_table(std::ostream& out, const FeatureTable& table) {
  std::vector<std::string> fields = kProvenance;
  for (const auto& c : table.columns) fields.push_back(c.name);
  fields.emplace_back("target");
  csv::write_record(out, fields);
  for (const auto& r : table.rows) {
    fields.clear();
    fields.push_back(r.patient_id);
    fields.push_back(csv::format_number(r.cutoff_month));
    fields.push_back(csv::format_number(r.target_month));
    for (const auto& v : r.x) fields.push_back(csv::format_optional(v));
    fields.push_back(csv::format_optional(r.y));
    csv::write_record(out, fields);
  }
}

FeatureTable parse_table(std::istream& in, Task task) {
  csv::Reader reader(in);
  csv::Record rec;
  if (!reader.next(rec)) fail(ErrorKind::Parse, "line 1: missing header row");
  const auto& h = rec.fields;
  if (h.size() < 5 || !std::equal(kProvenance.begin(), kProvenance.end(), h.begin()) || h.back() != "target") {
    fail(ErrorKind::Schema, "table header must be patient_id,cutoff_month,target_month,<features>,target");
  }
  FeatureTable table;
  table.task = task;
  for (std::size_t i = 3; i + 1 < h.size(); ++i) table.columns.push_back({h[i], infer_role(h[i])});
  if (table.columns.front().name != "horizon") fail(ErrorKind::Schema, "first feature column must be horizon");

  auto number = [&](const std::string& text, std::size_t col) -> std::optional<double> {
    if (csv::trim(text).empty()) return std::nullopt;
    auto v = csv::parse_number(text);
    if (!v) {
      fail(ErrorKind::Parse, "line " + std::to_string(rec.line) + ": column " + h[col] +
                                 ": not a number: '" + text + "'");
    }
    return v;
  };
  while (reader.next(rec)) {
    if (rec.fields.size() != h.size()) {
      fail(ErrorKind::Parse, "line " + std::to_string(rec.line) + ": expected " + std::to_string(h.size()) +
                                 " columns, found " + std::to_string(rec.fields.size()));
    }
    TableRow row;
    row.patient_id = rec.fields[0];
    auto cutoff = number(rec.fields[1], 1);
    auto target = number(rec.fields[2], 2);
    if (!cutoff || !target) fail(ErrorKind::Schema, "line " + std::to_string(rec.line) + ": missing month");
    row.cutoff_month = *cutoff;
    row.target_month = *target;
    row.x.reserve(table.columns.size());
    for (std::size_t i = 3; i + 1 < h.size(); ++i) row.x.push_back(number(rec.fields[i], i));
    row.y = number(rec.fields.back(), h.size() - 1);
    if (!row.x.front() || !(*row.x.front() > 0.0)) {
      fail(ErrorKind::Schema, "line " + std::to_string(rec.line) + ": horizon must be positive");
    }
    if (task == Task::DX && row.y && !(*row.y == 0.0 || *row.y == 1.0 || *row.y == 2.0)) {
      fail(ErrorKind::Schema, "line " + std::to_string(rec.line) + ": DX target must be 0, 1 or 2");
    }
    table.rows.push_back(std::move(row));
  }
  return table;
}

void write_table(const std::string& path, const FeatureTable& table) {
  {
    std::ofstream out(path);
    if (!out) fail(ErrorKind::Io, "cannot write '" + path + "'");
    write_table(out, table);
  }
  std::ofstream schema(path + ".schema.json");
  if (!schema) fail(ErrorKind::Io, "cannot write '" + path + ".schema.json'");
  schema << manifest(table).dump(2) << '\n';
}

FeatureTable read_table(const std::string& path, Task task) {
  std::ifstream in(path);
  if (!in) fail(ErrorKind::Io, "cannot open '" + path + "'");
  auto table = parse_table(in, task);
  const auto schema_path = path + ".schema.json";
  if (std::filesystem::exists(schema_path)) {
    std::ifstream s(schema_path);
    nlohmann::json m;
    try {
      m = nlohmann::json::parse(s);
    } catch (const nlohmann::json::exception& e) {
      fail(ErrorKind::Parse, schema_path + ": " + e.what());
    }
    if (m.contains("task") && parse_task(m["task"].get<std::string>()) != task) {
      fail(ErrorKind::Schema, path + " was built for task " + m["task"].get<std::string>() +
                                  ", not " + std::string(task_name(task)));
    }
  }
  return table;
}

}  // namespace l2c
