#pragma once

#include <cstddef>
#include <filesystem>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

#include "jobtext/error.hpp"
#include "jobtext/text.hpp"

namespace jobtext::csv {

/// RFC 4180 parser. Quoted fields may contain separators, doubled quotes and
/// line breaks. Returns rows together with the 1-based line each row starts on.
struct Row {
  std::size_t line = 0;
  std::vector<std::string> fields;
};

inline std::vector<Row> parse(std::string_view text, char sep = ',') {
  std::vector<Row> rows;
  if (text.size() >= 3 && text.substr(0, 3) == "\xEF\xBB\xBF") text.remove_prefix(3);

  Row row;
  std::string field;
  std::size_t line = 1;
  row.line = 1;
  bool in_quotes = false;
  bool field_started = false;
  bool row_has_content = false;

  auto end_field = [&] {
    row.fields.push_back(std::move(field));
    field.clear();
    field_started = false;
  };
  auto end_row = [&] {
    end_field();
    // A line holding nothing at all is not a row.
    if (row_has_content || row.fields.size() > 1 || !row.fields.front().empty()) rows.push_back(std::move(row));
    row = Row{};
    row_has_content = false;
  };

  for (std::size_t i = 0; i < text.size(); ++i) {
    const char c = text[i];
    if (in_quotes) {
      if (c == '"') {
        if (i + 1 < text.size() && text[i + 1] == '"') {
          field += '"';
          ++i;
        } else {
          in_quotes = false;
        }
      } else {
        if (c == '\n') ++line;
        field += c;
      }
      continue;
    }
    if (c == '"' && !field_started) {
      in_quotes = true;
      field_started = true;
      row_has_content = true;
    } else if (c == sep) {
      end_field();
      row_has_content = true;
    } else if (c == '\r' && i + 1 < text.size() && text[i + 1] == '\n') {
      continue;
    } else if (c == '\n') {
      end_row();
      ++line;
      row.line = line;
    } else {
      field += c;
      field_started = true;
      row_has_content = true;
    }
  }
  if (in_quotes) throw InputError("unterminated quoted field starting near line " + std::to_string(row.line));
  if (field_started || !row.fields.empty() || row_has_content) end_row();
  return rows;
}

inline std::string escape(std::string_view value) {
  bool needs = value.find_first_of(",\"\r\n") != std::string_view::npos;
  if (!needs) return std::string(value);
  std::string out = "\"";
  for (char c : value) {
    if (c == '"') out += '"';
    out += c;
  }
  out += '"';
  return out;
}

inline std::string format_row(const std::vector<std::string>& fields) {
  std::string out;
  for (std::size_t i = 0; i < fields.size(); ++i) {
    if (i) out += ',';
    out += escape(fields[i]);
  }
  out += '\n';
  return out;
}

/// A parsed CSV with a header row and case-insensitive column lookup.
class Table {
 public:
  Table() = default;

  static Table parse_text(std::string_view text, std::string source = "<csv>") {
    Table t;
    t.source_ = std::move(source);
    auto rows = csv::parse(text);
    if (rows.empty()) throw InputError(t.source_ + ": missing header row");
    for (auto& h : rows.front().fields) t.header_.push_back(to_lower(trim(h)));
    rows.erase(rows.begin());
    t.rows_ = std::move(rows);
    return t;
  }

  static Table load(const std::filesystem::path& path) { return parse_text(read_file(path), path.string()); }

  [[nodiscard]] std::optional<std::size_t> find(std::string_view name) const {
    const auto key = to_lower(name);
    for (std::size_t i = 0; i < header_.size(); ++i)
      if (header_[i] == key) return i;
    return std::nullopt;
  }

  /// Column index or InputError naming the missing column.
  [[nodiscard]] std::size_t require(std::string_view name) const {
    auto idx = find(name);
    if (!idx) throw InputError(source_ + ": missing required column '" + std::string(name) + "'");
    return *idx;
  }

  /// Field value, empty when the row is short.
  [[nodiscard]] static std::string_view cell(const Row& row, std::size_t col) {
    return col < row.fields.size() ? std::string_view(row.fields[col]) : std::string_view{};
  }

  [[nodiscard]] const std::vector<std::string>& header() const { return header_; }
  [[nodiscard]] const std::vector<Row>& rows() const { return rows_; }
  [[nodiscard]] const std::string& source() const { return source_; }

 private:
  std::string source_;
  std::vector<std::string> header_;
  std::vector<Row> rows_;
};

}  // namespace jobtext::csv
