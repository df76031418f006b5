#pragma once

#include <cstddef>
#include <iosfwd>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

namespace l2c::csv {

struct Record {
  std::size_t line = 0;  // 1-based line number of the record's first line
  std::vector<std::string> fields;
};

/// Streaming reader for RFC 4180 style delimited text. Quoted fields may contain
/// delimiters, doubled quotes and line breaks.
class Reader {
 public:
  explicit Reader(std::istream& in, char delimiter = ',');

  /// Reads the next record; returns false at end of input. Blank lines are skipped.
  bool next(Record& record);

 private:
  std::istream& in_;
  char delimiter_;
  std::size_t line_ = 0;
};

/// Writes one record, quoting fields that need it.
void write_record(std::ostream& out, const std::vector<std::string>& fields, char delimiter = ',');

/// Shortest decimal text that parses back to the identical double.
std::string format_number(double value);
std::string format_optional(const std::optional<double>& value);

/// Strict decimal parse of the whole field; nullopt if it is not a finite number.
std::optional<double> parse_number(std::string_view text);

std::string_view trim(std::string_view text);

}  // namespace l2c::csv
