#pragma once

#include <iosfwd>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include <nlohmann/json.hpp>

#include "l2c/cohort.hpp"
#include "l2c/l2c.hpp"

namespace l2c {

/// A flattened L2C row as seen by models, plus its provenance.
struct TableRow {
  std::string patient_id;
  double cutoff_month = 0.0;
  double target_month = 0.0;
  std::vector<std::optional<double>> x;  // aligned with FeatureTable::columns
  std::optional<double> y;

  bool operator==(const TableRow&) const = default;
};

struct FeatureTable {
  Task task = Task::DX;
  std::vector<Column> columns;
  std::vector<TableRow> rows;

  static FeatureTable from_rows(Task task, std::span<const std::string> features,
                                std::span<const L2CRow> rows);

  std::vector<std::string> column_names() const;
  std::optional<std::size_t> column_index(std::string_view name) const;
  bool same_schema(const FeatureTable& other) const {
    return task == other.task && columns == other.columns;
  }

  bool operator==(const FeatureTable&) const = default;
};

TableRow to_table_row(const L2CRow& row);

/// Role of a column inferred from its name, as produced by row_columns().
ColumnRole infer_role(std::string_view name);

/// Column manifest: {"task": ..., "columns": [{"name": ..., "role": ...}, ...]}.
/// Provenance and target columns are listed with roles "id", "provenance", "target".
nlohmann::ordered_json manifest(const FeatureTable& table);

/// Delimited table: patient_id, cutoff_month, target_month, feature columns..., target.
/// Missing values are empty cells.
void write_table(std::ostream& out, const FeatureTable& table);
FeatureTable parse_table(std::istream& in, Task task);

/// File variants also write/check "<path>.schema.json".
void write_table(const std::string& path, const FeatureTable& table);
FeatureTable read_table(const std::string& path, Task task);

}  // namespace l2c
