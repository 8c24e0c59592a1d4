#pragma once

// Data module: loading, validating, and describing daily return/volume panels.
//
// CSV layout (UTF-8, comma-separated):
//   date,BTC,ETH,SPX
//   2020-01-02,0.012,-0.004,0.0021
// First column holds ISO-8601 dates in strictly increasing order; remaining
// columns hold daily natural-log returns (or daily USD volumes for a volume
// panel). Every cell must parse as a finite number unless the caller opts
// into dropping incomplete asset columns.

#include <algorithm>
#include <cctype>
#include <cmath>
#include <cstddef>
#include <filesystem>
#include <fstream>
#include <optional>
#include <set>
#include <sstream>
#include <string>
#include <string_view>
#include <vector>

#include "folio/common.hpp"

namespace folio {

enum class AssetClass { traditional, crypto };

struct AssetInfo {
  std::string name;
  AssetClass asset_class = AssetClass::traditional;
  /// Always-liquid assets keep a cap of 1.0 under liquidity constraints.
  bool always_liquid = false;
};

/// P×N panel of daily log returns with date and asset metadata.
struct ReturnsPanel {
  std::vector<std::string> dates;  // ISO-8601, strictly increasing
  std::vector<AssetInfo> assets;
  MatrixXd values;  // rows = dates, cols = assets

  Eigen::Index rows() const { return values.rows(); }
  Eigen::Index cols() const { return values.cols(); }
};

/// P×N panel of daily traded USD volume, aligned with a companion ReturnsPanel.
struct VolumePanel {
  std::vector<std::string> dates;
  std::vector<std::string> assets;
  MatrixXd values;
};

/// Per-asset sample statistics over the full panel.
struct DescriptiveStats {
  std::vector<std::string> assets;
  VectorXd mean;
  VectorXd sd;              // sample standard deviation, 1/(P-1)
  VectorXd skewness;        // population form m3 / m2^(3/2)
  VectorXd excess_kurtosis; // population form m4 / m2^2 - 3
  VectorXd minimum;
  VectorXd maximum;
};

struct LoadOptions {
  /// When true, columns with missing or non-numeric cells are dropped instead
  /// of raising; dropped names are reported in LoadResult.
  bool drop_incomplete_assets = false;
};

struct LoadResult {
  ReturnsPanel returns;
  std::optional<VolumePanel> volumes;
  std::vector<std::string> dropped_assets;
};

namespace detail {

inline bool is_iso_date(std::string_view s) {
  if (s.size() != 10 || s[4] != '-' || s[7] != '-') return false;
  for (std::size_t i : {0u, 1u, 2u, 3u, 5u, 6u, 8u, 9u})
    if (!std::isdigit(static_cast<unsigned char>(s[i]))) return false;
  const int month = (s[5] - '0') * 10 + (s[6] - '0');
  const int day = (s[8] - '0') * 10 + (s[9] - '0');
  return month >= 1 && month <= 12 && day >= 1 && day <= 31;
}

inline std::vector<std::string> split_csv_line(const std::string& line) {
  std::vector<std::string> fields;
  std::size_t start = 0;
  while (true) {
    const std::size_t comma = line.find(',', start);
    if (comma == std::string::npos) {
      fields.push_back(line.substr(start));
      break;
    }
    fields.push_back(line.substr(start, comma - start));
    start = comma + 1;
  }
  // Tolerate trailing carriage returns from CRLF files.
  if (!fields.empty() && !fields.back().empty() && fields.back().back() == '\r')
    fields.back().pop_back();
  return fields;
}

struct RawCsv {
  std::vector<std::string> header;  // asset names (date column stripped)
  std::vector<std::string> dates;
  std::vector<std::vector<std::string>> cells;  // cells[row][col]
};

inline RawCsv read_csv_table(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw ValidationError("cannot open file: " + path.string());
  RawCsv raw;
  std::string line;
  if (!std::getline(in, line)) throw ValidationError("empty file: " + path.string());
  raw.header = split_csv_line(line);
  if (raw.header.size() < 2 || raw.header[0] != "date")
    throw ValidationError(path.string() + ": header must start with 'date' followed by asset names");
  raw.header.erase(raw.header.begin());  // keep asset names only
  std::size_t lineno = 1;
  while (std::getline(in, line)) {
    ++lineno;
    if (line.empty() || line == "\r") continue;
    auto fields = split_csv_line(line);
    if (fields.size() != raw.header.size() + 1)
      throw ValidationError(path.string() + " line " + std::to_string(lineno) + ": expected " +
                            std::to_string(raw.header.size() + 1) + " fields, got " +
                            std::to_string(fields.size()));
    raw.dates.push_back(fields[0]);
    fields.erase(fields.begin());
    raw.cells.push_back(std::move(fields));
  }
  return raw;
}

inline void check_dates(const std::vector<std::string>& dates, const std::string& file) {
  for (std::size_t i = 0; i < dates.size(); ++i) {
    if (!is_iso_date(dates[i]))
      throw ValidationError(file + ": invalid ISO-8601 date '" + dates[i] + "'");
    // Fixed-width ISO dates order correctly under lexicographic comparison.
    if (i > 0 && !(dates[i - 1] < dates[i]))
      throw ValidationError(file + ": dates not strictly increasing at '" + dates[i] +
                            "' (previous '" + dates[i - 1] + "')");
  }
}

inline void check_unique_assets(const std::vector<std::string>& names, const std::string& file) {
  std::set<std::string> seen;
  for (const auto& name : names) {
    if (name.empty()) throw ValidationError(file + ": empty asset name in header");
    if (!seen.insert(name).second)
      throw ValidationError(file + ": duplicate asset '" + name + "'");
  }
}

}  // namespace detail

/// Parses one panel file into names/dates/values; `kind` only affects error
/// text and the nonnegativity rule ("volume" panels reject negative cells).
inline void parse_panel_csv(const std::filesystem::path& path, const LoadOptions& opts,
                            bool is_volume, std::vector<std::string>& names_out,
                            std::vector<std::string>& dates_out, MatrixXd& values_out,
                            std::vector<std::string>* dropped_out) {
  auto raw = detail::read_csv_table(path);
  const std::string file = path.filename().string();
  detail::check_unique_assets(raw.header, file);
  detail::check_dates(raw.dates, file);

  const std::size_t rows = raw.dates.size();
  const std::size_t cols = raw.header.size();
  MatrixXd values(rows, cols);
  std::vector<bool> bad_col(cols, false);
  for (std::size_t r = 0; r < rows; ++r) {
    for (std::size_t c = 0; c < cols; ++c) {
      const std::string& cell = raw.cells[r][c];
      const auto parsed = parse_double(cell);
      const bool ok = parsed.has_value() && std::isfinite(*parsed) &&
                      (!is_volume || *parsed >= 0.0);
      if (!ok) {
        if (opts.drop_incomplete_assets && !is_volume) {
          bad_col[c] = true;
          continue;
        }
        const char* what = cell.empty() ? "missing value" : "invalid value";
        throw ValidationError(file + ": " + what + (cell.empty() ? "" : " '" + cell + "'") +
                              " at date " + raw.dates[r] + ", asset " + raw.header[c]);
      }
      values(static_cast<Eigen::Index>(r), static_cast<Eigen::Index>(c)) = *parsed;
    }
  }

  std::vector<std::string> kept_names;
  std::vector<Eigen::Index> kept_idx;
  for (std::size_t c = 0; c < cols; ++c) {
    if (bad_col[c]) {
      if (dropped_out) dropped_out->push_back(raw.header[c]);
    } else {
      kept_names.push_back(raw.header[c]);
      kept_idx.push_back(static_cast<Eigen::Index>(c));
    }
  }
  MatrixXd kept(rows, static_cast<Eigen::Index>(kept_idx.size()));
  for (std::size_t c = 0; c < kept_idx.size(); ++c)
    kept.col(static_cast<Eigen::Index>(c)) = values.col(kept_idx[c]);

  names_out = std::move(kept_names);
  dates_out = std::move(raw.dates);
  values_out = std::move(kept);
}

/// Loads a returns panel and, when given, an exactly aligned volume panel.
inline LoadResult load_panel(const std::filesystem::path& returns_path,
                             const std::optional<std::filesystem::path>& volumes_path = {},
                             const LoadOptions& opts = {}) {
  LoadResult result;
  std::vector<std::string> names;
  parse_panel_csv(returns_path, opts, /*is_volume=*/false, names, result.returns.dates,
                  result.returns.values, &result.dropped_assets);
  if (result.returns.values.cols() < 2)
    throw ValidationError(returns_path.filename().string() +
                          ": panel needs at least 2 assets after validation");
  if (result.returns.values.rows() < 2)
    throw ValidationError(returns_path.filename().string() + ": panel needs at least 2 dates");
  result.returns.assets.reserve(names.size());
  for (auto& name : names) result.returns.assets.push_back(AssetInfo{std::move(name)});

  if (volumes_path) {
    VolumePanel vol;
    parse_panel_csv(*volumes_path, LoadOptions{}, /*is_volume=*/true, vol.assets, vol.dates,
                    vol.values, nullptr);
    const std::string vfile = volumes_path->filename().string();
    for (const auto& asset : result.returns.assets) {
      if (std::find(vol.assets.begin(), vol.assets.end(), asset.name) == vol.assets.end())
        throw ValidationError(vfile + ": asset '" + asset.name +
                              "' present in returns but missing from volumes");
    }
    if (vol.dates != result.returns.dates)
      throw ValidationError(vfile + ": volume dates do not align with returns dates");
    // Reorder (and subset) volume columns to match the returns panel order.
    MatrixXd aligned(vol.values.rows(), result.returns.cols());
    std::vector<std::string> aligned_names;
    for (Eigen::Index j = 0; j < result.returns.cols(); ++j) {
      const auto& name = result.returns.assets[static_cast<std::size_t>(j)].name;
      const auto it = std::find(vol.assets.begin(), vol.assets.end(), name);
      aligned.col(j) = vol.values.col(it - vol.assets.begin());
      aligned_names.push_back(name);
    }
    vol.assets = std::move(aligned_names);
    vol.values = std::move(aligned);
    vol.dates = result.returns.dates;
    result.volumes = std::move(vol);
  }
  return result;
}

/// Serializes a panel back to CSV with shortest-round-trip doubles, so that
/// load → save → load reproduces bit-identical values.
inline void save_panel(const ReturnsPanel& panel, const std::filesystem::path& path) {
  std::ofstream out(path);
  if (!out) throw ValidationError("cannot write file: " + path.string());
  out << "date";
  for (const auto& asset : panel.assets) out << ',' << asset.name;
  out << '\n';
  for (Eigen::Index r = 0; r < panel.rows(); ++r) {
    out << panel.dates[static_cast<std::size_t>(r)];
    for (Eigen::Index c = 0; c < panel.cols(); ++c) out << ',' << format_double(panel.values(r, c));
    out << '\n';
  }
}

/// Sample mean/sd/skewness/excess-kurtosis/min/max per asset. Skewness and
/// kurtosis use the population (1/P) form so they feed the ASR formula
/// directly; zero-variance assets report sd = 0 and skew = kurt = 0.
inline DescriptiveStats descriptive_stats(const ReturnsPanel& panel) {
  const Eigen::Index P = panel.rows();
  const Eigen::Index N = panel.cols();
  if (P < 4) throw ValidationError("descriptive_stats requires at least 4 observations");
  DescriptiveStats stats;
  for (const auto& asset : panel.assets) stats.assets.push_back(asset.name);
  stats.mean.resize(N);
  stats.sd.resize(N);
  stats.skewness.resize(N);
  stats.excess_kurtosis.resize(N);
  stats.minimum.resize(N);
  stats.maximum.resize(N);
  for (Eigen::Index j = 0; j < N; ++j) {
    const auto col = panel.values.col(j);
    const double mean = col.mean();
    const VectorXd centered = col.array() - mean;
    const double m2 = centered.squaredNorm() / static_cast<double>(P);
    const double m3 = centered.array().cube().sum() / static_cast<double>(P);
    const double m4 = centered.array().pow(4).sum() / static_cast<double>(P);
    stats.mean[j] = mean;
    stats.sd[j] = std::sqrt(centered.squaredNorm() / static_cast<double>(P - 1));
    if (m2 > 0.0) {
      stats.skewness[j] = m3 / std::pow(m2, 1.5);
      stats.excess_kurtosis[j] = m4 / (m2 * m2) - 3.0;
    } else {
      stats.skewness[j] = 0.0;
      stats.excess_kurtosis[j] = 0.0;
    }
    stats.minimum[j] = col.minCoeff();
    stats.maximum[j] = col.maxCoeff();
  }
  return stats;
}

}  // namespace folio
