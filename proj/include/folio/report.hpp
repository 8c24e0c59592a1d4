#pragma once

// Report serialization: every command's output is a set of named tables,
// written as CSV (with the resolved config echoed in '#' comment lines) or
// JSON (with the config embedded as an object). Files are written to a
// temporary name in the target directory and atomically renamed, so a failed
// run never leaves partial files behind.

#include <cstdio>
#include <filesystem>
#include <fstream>
#include <string>
#include <utility>
#include <variant>
#include <vector>

#include <json.hpp>

#include <folio/common.hpp>
#include <folio/config.hpp>

namespace folio {

using Cell = std::variant<std::string, double>;

struct Table {
  std::string name;  // file stem, e.g. "performance"
  std::vector<std::string> columns;
  std::vector<std::vector<Cell>> rows;
};

namespace detail {

inline std::string csv_escape(const std::string& s) {
  if (s.find_first_of(",\"\n") == std::string::npos) return s;
  std::string out = "\"";
  for (char c : s) {
    if (c == '"') out += '"';
    out += c;
  }
  out += "\"";
  return out;
}

inline std::string cell_to_csv(const Cell& cell) {
  if (std::holds_alternative<double>(cell))
    return format_double(std::get<double>(cell));
  return csv_escape(std::get<std::string>(cell));
}

}  // namespace detail

/// Writes `content` to `path` via a sibling temp file plus atomic rename.
inline void write_text_atomic(const std::filesystem::path& path,
                              const std::string& content) {
  const std::filesystem::path tmp = path.string() + ".tmp";
  {
    std::ofstream out(tmp, std::ios::binary | std::ios::trunc);
    if (!out) throw ValidationError("cannot write file: " + tmp.string());
    out.write(content.data(),
              static_cast<std::streamsize>(content.size()));
    out.flush();
    if (!out) {
      out.close();
      std::error_code ec;
      std::filesystem::remove(tmp, ec);
      throw ValidationError("failed writing file: " + tmp.string());
    }
  }
  std::error_code ec;
  std::filesystem::rename(tmp, path, ec);
  if (ec) {
    std::filesystem::remove(tmp, ec);
    throw ValidationError("failed to move report into place: " +
                          path.string());
  }
}

inline std::string render_csv(
    const Table& table,
    const std::vector<std::pair<std::string, std::string>>& config_echo) {
  std::string out;
  out += "# config\n";
  for (const auto& [key, value] : config_echo)
    out += "# " + key + " = " + value + "\n";
  for (std::size_t c = 0; c < table.columns.size(); ++c) {
    if (c) out += ",";
    out += detail::csv_escape(table.columns[c]);
  }
  out += "\n";
  for (const auto& row : table.rows) {
    for (std::size_t c = 0; c < row.size(); ++c) {
      if (c) out += ",";
      out += detail::cell_to_csv(row[c]);
    }
    out += "\n";
  }
  return out;
}

inline std::string render_json(
    const Table& table,
    const std::vector<std::pair<std::string, std::string>>& config_echo) {
  nlohmann::ordered_json doc;
  nlohmann::ordered_json config = nlohmann::ordered_json::object();
  for (const auto& [key, value] : config_echo) config[key] = value;
  doc["config"] = std::move(config);
  doc["table"] = table.name;
  doc["columns"] = table.columns;
  nlohmann::ordered_json rows = nlohmann::ordered_json::array();
  for (const auto& row : table.rows) {
    nlohmann::ordered_json jrow = nlohmann::ordered_json::array();
    for (const Cell& cell : row) {
      if (std::holds_alternative<double>(cell))
        jrow.push_back(std::get<double>(cell));  // non-finite dumps as null
      else
        jrow.push_back(std::get<std::string>(cell));
    }
    rows.push_back(std::move(jrow));
  }
  doc["rows"] = std::move(rows);
  return doc.dump(2) + "\n";
}

/// Renders and atomically writes one table; returns the file path.
inline std::filesystem::path write_table(
    const Table& table, const RunConfig& cfg,
    const std::vector<std::pair<std::string, std::string>>& config_echo) {
  std::filesystem::create_directories(cfg.output_dir);
  const char* ext = cfg.format == OutputFormat::csv ? ".csv" : ".json";
  const std::filesystem::path path = cfg.output_dir / (table.name + ext);
  const std::string content = cfg.format == OutputFormat::csv
                                  ? render_csv(table, config_echo)
                                  : render_json(table, config_echo);
  write_text_atomic(path, content);
  return path;
}

}  // namespace folio
