#ifndef CARLEMAN_LAB_REPORT_HPP
#define CARLEMAN_LAB_REPORT_HPP

#include <cmath>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <optional>
#include <string>
#include <vector>

#include <json.hpp>

#include "carleman_lab/error.hpp"

namespace carleman_lab {

/// 17 significant digits ("%.17g"), so every double round-trips.
/// NaN becomes an empty cell, infinities "inf" / "-inf".
inline std::string csv_number(double v) {
  if (std::isnan(v)) return "";
  if (std::isinf(v)) return v > 0 ? "inf" : "-inf";
  char buf[40];
  std::snprintf(buf, sizeof buf, "%.17g", v);
  return buf;
}

inline std::string csv_number(const std::optional<double>& v) { return v ? csv_number(*v) : ""; }

/// Quotes a text cell when it contains a separator, quote or newline.
inline std::string csv_text(const std::string& s) {
  if (s.find_first_of(",\"\n\r") == std::string::npos) return s;
  std::string out = "\"";
  for (char c : s) {
    if (c == '"') out += '"';
    out += c;
  }
  return out + "\"";
}

class CsvTable {
 public:
  explicit CsvTable(std::vector<std::string> header) : header_(std::move(header)) {}

  class Row {
   public:
    Row& operator<<(double v) { return add(csv_number(v)); }
    Row& operator<<(const std::optional<double>& v) { return add(csv_number(v)); }
    Row& operator<<(int v) { return add(std::to_string(v)); }
    Row& operator<<(std::size_t v) { return add(std::to_string(v)); }
    Row& operator<<(bool v) { return add(v ? "true" : "false"); }
    Row& operator<<(const std::string& v) { return add(csv_text(v)); }
    Row& operator<<(const char* v) { return add(csv_text(v)); }

   private:
    friend class CsvTable;
    explicit Row(std::vector<std::string>& cells) : cells_(cells) {}
    Row& add(std::string s) {
      cells_.push_back(std::move(s));
      return *this;
    }
    std::vector<std::string>& cells_;
  };

  Row row() {
    rows_.emplace_back();
    return Row(rows_.back());
  }

  const std::vector<std::string>& header() const { return header_; }
  const std::vector<std::vector<std::string>>& rows() const { return rows_; }

  /// Version line, column header, then one line per row; LF endings throughout.
  std::string render(const std::string& version_line) const {
    std::string out = "# " + version_line + "\n";
    auto line = [&](const std::vector<std::string>& cells) {
      for (std::size_t i = 0; i < cells.size(); ++i) {
        if (i) out += ',';
        out += cells[i];
      }
      out += '\n';
    };
    line(header_);
    for (const auto& r : rows_) {
      if (r.size() != header_.size()) {
        throw Error(ErrorKind::invalid_argument, "CsvTable", "row width does not match the header");
      }
      line(r);
    }
    return out;
  }

 private:
  std::vector<std::string> header_;
  std::vector<std::vector<std::string>> rows_;
};

inline void write_text(const std::filesystem::path& path, const std::string& text) {
  std::error_code ec;
  if (path.has_parent_path()) std::filesystem::create_directories(path.parent_path(), ec);
  if (ec) throw Error(ErrorKind::io, path.parent_path().string(), "cannot create directory: " + ec.message());
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) throw Error(ErrorKind::io, path.string(), "cannot open for writing");
  out << text;
  out.flush();
  if (!out) throw Error(ErrorKind::io, path.string(), "write failed");
}

inline std::filesystem::path write_csv(const std::filesystem::path& path, const CsvTable& table,
                                       const std::string& version_line) {
  write_text(path, table.render(version_line));
  return path;
}

/// Keys are sorted by the object type; NaN and infinities are emitted as null.
inline std::filesystem::path write_json(const std::filesystem::path& path, const nlohmann::json& value) {
  if (!value.is_object()) throw Error(ErrorKind::invalid_argument, path.string(), "top level must be an object");
  write_text(path, value.dump(2) + "\n");
  return path;
}

inline nlohmann::json json_number(double v) { return std::isfinite(v) ? nlohmann::json(v) : nlohmann::json(nullptr); }

inline nlohmann::json json_number(const std::optional<double>& v) {
  return v ? json_number(*v) : nlohmann::json(nullptr);
}

}  // namespace carleman_lab

#endif  // CARLEMAN_LAB_REPORT_HPP
