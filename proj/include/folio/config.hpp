#pragma once

// Run configuration: a small INI-style file (sections, key = value pairs,
// '#'/';' comments) resolved against defaults and command-line overrides into
// a typed RunConfig. The resolved configuration echoes back into every report
// so any output is reproducible from its own header.

#include <algorithm>
#include <cctype>
#include <cstdint>
#include <filesystem>
#include <fstream>
#include <map>
#include <optional>
#include <sstream>
#include <string>
#include <string_view>
#include <utility>
#include <vector>

#include <folio/backtest.hpp>
#include <folio/common.hpp>
#include <folio/inference.hpp>
#include <folio/strategies.hpp>

namespace folio {

enum class OutputFormat { csv, json };

inline const char* format_name(OutputFormat f) {
  return f == OutputFormat::csv ? "csv" : "json";
}

/// Everything a CLI run needs, fully resolved (defaults applied, overrides
/// folded in). `backtest.libro` is engaged iff `libro_enabled`.
struct RunConfig {
  std::filesystem::path returns_path;
  std::optional<std::filesystem::path> volumes_path;
  bool drop_incomplete_assets = false;

  BacktestConfig backtest;
  bool compound_wealth = false;

  bool libro_enabled = false;
  LiquiditySpec libro;

  HacOptions hac;  // bandwidth 0 = automatic

  RiskMeasure frontier_measure = RiskMeasure::variance;
  int frontier_grid = 50;
  std::vector<std::string> frontier_universes = {"traditional", "full",
                                                 "libro"};
  /// True when [frontier] universes came from the config file rather than the
  /// defaults; explicit requests that cannot be honored become errors instead
  /// of being dropped.
  bool frontier_universes_explicit = false;

  std::vector<std::string> crypto_assets;
  std::vector<std::string> always_liquid_assets;

  std::filesystem::path output_dir = "out";
  OutputFormat format = OutputFormat::csv;
};

/// Command-line values that take precedence over the config file.
struct CliOverrides {
  std::optional<std::uint64_t> seed;
  std::optional<std::string> rebalance;  // daily | weekly | monthly
  bool libro = false;
  bool drop_incomplete = false;
  std::optional<std::string> format;  // csv | json
};

namespace detail {

inline std::string trim(std::string_view s) {
  std::size_t b = 0;
  std::size_t e = s.size();
  while (b < e && std::isspace(static_cast<unsigned char>(s[b]))) ++b;
  while (e > b && std::isspace(static_cast<unsigned char>(s[e - 1]))) --e;
  return std::string(s.substr(b, e - b));
}

inline std::vector<std::string> split_list(const std::string& value) {
  std::vector<std::string> out;
  std::string item;
  std::stringstream ss(value);
  while (std::getline(ss, item, ',')) {
    item = trim(item);
    if (!item.empty()) out.push_back(item);
  }
  return out;
}

}  // namespace detail

/// Parsed INI file: "section.key" -> raw value string. Later duplicates are
/// rejected to catch copy-paste mistakes.
using IniMap = std::map<std::string, std::string>;

inline IniMap parse_ini(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw ConfigError("cannot open config file: " + path.string());
  IniMap out;
  std::string line;
  std::string section;
  int lineno = 0;
  while (std::getline(in, line)) {
    ++lineno;
    const std::string text = detail::trim(line);
    if (text.empty() || text[0] == '#' || text[0] == ';') continue;
    const std::string where =
        path.filename().string() + ":" + std::to_string(lineno);
    if (text.front() == '[') {
      if (text.back() != ']')
        throw ConfigError(where + ": malformed section header '" + text + "'");
      section = detail::trim(std::string_view(text).substr(1, text.size() - 2));
      if (section.empty())
        throw ConfigError(where + ": empty section name");
      continue;
    }
    const std::size_t eq = text.find('=');
    if (eq == std::string::npos)
      throw ConfigError(where + ": expected 'key = value', got '" + text + "'");
    const std::string key = detail::trim(std::string_view(text).substr(0, eq));
    const std::string value = detail::trim(std::string_view(text).substr(eq + 1));
    if (key.empty()) throw ConfigError(where + ": empty key");
    if (section.empty())
      throw ConfigError(where + ": key '" + key + "' outside any section");
    const std::string full = section + "." + key;
    if (!out.emplace(full, value).second)
      throw ConfigError(where + ": duplicate key '" + full + "'");
  }
  return out;
}

namespace detail {

/// Pulls keys out of an IniMap with typed conversions, tracking consumption
/// so unknown keys can be reported as errors.
class IniReader {
 public:
  explicit IniReader(IniMap ini) : ini_(std::move(ini)) {}

  std::optional<std::string> raw(const std::string& key) {
    auto it = ini_.find(key);
    if (it == ini_.end()) return std::nullopt;
    consumed_.push_back(key);
    return it->second;
  }

  std::string get_string(const std::string& key, const std::string& fallback) {
    return raw(key).value_or(fallback);
  }

  double get_double(const std::string& key, double fallback) {
    const auto v = raw(key);
    if (!v) return fallback;
    const auto parsed = parse_double(*v);
    if (!parsed) throw ConfigError(key + ": expected a number, got '" + *v + "'");
    return *parsed;
  }

  long long get_int(const std::string& key, long long fallback) {
    const auto v = raw(key);
    if (!v) return fallback;
    try {
      std::size_t used = 0;
      const long long parsed = std::stoll(*v, &used);
      if (used != v->size()) throw std::invalid_argument(*v);
      return parsed;
    } catch (const std::exception&) {
      throw ConfigError(key + ": expected an integer, got '" + *v + "'");
    }
  }

  std::uint64_t get_u64(const std::string& key, std::uint64_t fallback) {
    const auto v = raw(key);
    if (!v) return fallback;
    try {
      std::size_t used = 0;
      const unsigned long long parsed = std::stoull(*v, &used);
      if (used != v->size() || v->front() == '-')
        throw std::invalid_argument(*v);
      return parsed;
    } catch (const std::exception&) {
      throw ConfigError(key + ": expected an unsigned integer, got '" + *v +
                        "'");
    }
  }

  bool get_bool(const std::string& key, bool fallback) {
    const auto v = raw(key);
    if (!v) return fallback;
    if (*v == "true" || *v == "1" || *v == "yes") return true;
    if (*v == "false" || *v == "0" || *v == "no") return false;
    throw ConfigError(key + ": expected true/false, got '" + *v + "'");
  }

  std::vector<std::string> get_list(const std::string& key) {
    const auto v = raw(key);
    if (!v) return {};
    return split_list(*v);
  }

  /// Throws if any key was never consumed (typo protection).
  void finish() const {
    for (const auto& [key, value] : ini_) {
      (void)value;
      if (std::find(consumed_.begin(), consumed_.end(), key) ==
          consumed_.end())
        throw ConfigError("unknown config key '" + key + "'");
    }
  }

 private:
  IniMap ini_;
  std::vector<std::string> consumed_;
};

inline int rebalance_days_from_name(const std::string& name) {
  if (name == "daily") return 1;
  if (name == "weekly") return 5;
  if (name == "monthly") return 21;
  throw ConfigError("rebalance: expected daily, weekly, or monthly, got '" +
                    name + "'");
}

}  // namespace detail

/// Builds the typed RunConfig from a parsed INI map plus CLI overrides.
/// Throws ConfigError on unknown keys, malformed values, or contradictions
/// that can be detected without touching the data files.
inline RunConfig resolve_config(IniMap ini, const CliOverrides& overrides = {}) {
  detail::IniReader r(std::move(ini));
  RunConfig cfg;

  // [data]
  {
    const std::string returns = r.get_string("data.returns", "");
    if (returns.empty())
      throw ConfigError("data.returns: a returns CSV path is required");
    cfg.returns_path = returns;
    const std::string volumes = r.get_string("data.volumes", "");
    if (!volumes.empty()) cfg.volumes_path = volumes;
    cfg.drop_incomplete_assets =
        r.get_bool("data.drop_incomplete_assets", false) ||
        overrides.drop_incomplete;
  }

  // [backtest]
  {
    cfg.backtest.window_k_days =
        static_cast<int>(r.get_int("backtest.window_days", 252));
    cfg.backtest.allow_any_k = r.get_bool("backtest.allow_any_k", false);
    const auto rebalance_name = r.raw("backtest.rebalance");
    const auto rebalance_days = r.raw("backtest.rebalance_days");
    if (rebalance_name && rebalance_days)
      throw ConfigError(
          "backtest.rebalance and backtest.rebalance_days are mutually "
          "exclusive");
    if (rebalance_name)
      cfg.backtest.rebalance_days =
          detail::rebalance_days_from_name(*rebalance_name);
    else if (rebalance_days) {
      const auto parsed = parse_double(*rebalance_days);
      if (!parsed || *parsed != static_cast<int>(*parsed) || *parsed < 1)
        throw ConfigError("backtest.rebalance_days: expected a positive integer");
      cfg.backtest.rebalance_days = static_cast<int>(*parsed);
    }
    if (overrides.rebalance)
      cfg.backtest.rebalance_days =
          detail::rebalance_days_from_name(*overrides.rebalance);

    const std::string strategies = r.get_string(
        "backtest.strategies",
        "EW,MinVar,MV-S,RR-MaxRet,MinCVaR,ERC,MD,Comb-Naive,Comb-Boot");
    for (const std::string& name : detail::split_list(strategies)) {
      const auto choice = parse_choice(name);
      if (!choice)
        throw ConfigError("backtest.strategies: unknown strategy '" + name +
                          "'");
      cfg.backtest.strategies.push_back(*choice);
    }

    cfg.backtest.gamma = r.get_double("backtest.gamma", 1.0);
    cfg.backtest.alpha = r.get_double("backtest.alpha", 0.05);
    cfg.backtest.seed = r.get_u64("backtest.seed", 0);
    if (overrides.seed) cfg.backtest.seed = *overrides.seed;

    const std::string mode =
        r.get_string("backtest.return_mode", "target_log");
    if (mode == "target_log")
      cfg.backtest.return_mode = ReturnMode::target_log;
    else if (mode == "drifted_log")
      cfg.backtest.return_mode = ReturnMode::drifted_log;
    else if (mode == "compound")
      cfg.backtest.return_mode = ReturnMode::compound;
    else
      throw ConfigError(
          "backtest.return_mode: expected target_log, drifted_log, or "
          "compound, got '" +
          mode + "'");
    cfg.compound_wealth = r.get_bool("backtest.compound_wealth", false);

    cfg.backtest.pdi.restarts =
        static_cast<int>(r.get_int("backtest.md_restarts", 10));
    cfg.backtest.erc.max_sweeps =
        static_cast<int>(r.get_int("backtest.erc_max_sweeps", 10000));
  }

  // [libro]
  {
    cfg.libro_enabled = r.get_bool("libro.enabled", false) || overrides.libro;
    cfg.libro.investment_sum =
        r.get_double("libro.investment_sum_usd", cfg.libro.investment_sum);
    cfg.libro.volume_fraction =
        r.get_double("libro.volume_fraction", cfg.libro.volume_fraction);
    cfg.libro.lookback =
        static_cast<int>(r.get_int("libro.lookback_days", cfg.libro.lookback));
    validate_liquidity_spec(cfg.libro);
    if (cfg.libro_enabled) cfg.backtest.libro = cfg.libro;
  }

  // [comb]
  {
    cfg.backtest.comb.B = static_cast<int>(r.get_int("comb.B", 100));
    cfg.backtest.comb.seed = r.get_u64("comb.seed", 0);
    cfg.backtest.comb.gamma = r.get_double("comb.gamma", 1.0);
    const std::string block = r.get_string("comb.block", "auto");
    if (block != "auto") {
      const auto parsed = parse_double(block);
      if (!parsed || !(*parsed >= 1.0))
        throw ConfigError("comb.block: expected 'auto' or a number >= 1");
      cfg.backtest.comb.fixed_block = *parsed;
    }
  }

  // [inference]
  {
    const std::string bw = r.get_string("inference.bandwidth", "auto");
    if (bw != "auto") {
      const auto parsed = parse_double(bw);
      if (!parsed || !(*parsed > 0.0))
        throw ConfigError(
            "inference.bandwidth: expected 'auto' or a positive number");
      cfg.hac.bandwidth = *parsed;
    }
  }

  // [frontier]
  {
    const std::string measure =
        r.get_string("frontier.risk_measure", "variance");
    if (measure == "variance")
      cfg.frontier_measure = RiskMeasure::variance;
    else if (measure == "cvar")
      cfg.frontier_measure = RiskMeasure::cvar;
    else
      throw ConfigError("frontier.risk_measure: expected variance or cvar, got '" +
                        measure + "'");
    cfg.frontier_grid = static_cast<int>(r.get_int("frontier.grid_size", 50));
    if (cfg.frontier_grid < 2)
      throw ConfigError("frontier.grid_size: must be at least 2");
    const auto universes = r.get_list("frontier.universes");
    if (!universes.empty()) {
      for (const std::string& u : universes)
        if (u != "traditional" && u != "full" && u != "libro")
          throw ConfigError(
              "frontier.universes: expected traditional, full, or libro, got '" +
              u + "'");
      cfg.frontier_universes = universes;
      cfg.frontier_universes_explicit = true;
    }
  }

  // [assets]
  cfg.crypto_assets = r.get_list("assets.crypto");
  cfg.always_liquid_assets = r.get_list("assets.always_liquid");

  // [output]
  {
    cfg.output_dir = r.get_string("output.directory", "out");
    std::string format = r.get_string("output.format", "csv");
    if (overrides.format) format = *overrides.format;
    if (format == "csv")
      cfg.format = OutputFormat::csv;
    else if (format == "json")
      cfg.format = OutputFormat::json;
    else
      throw ConfigError("output.format: expected csv or json, got '" + format +
                        "'");
  }

  r.finish();
  return cfg;
}

inline RunConfig load_config(const std::filesystem::path& path,
                             const CliOverrides& overrides = {}) {
  return resolve_config(parse_ini(path), overrides);
}

/// The fully resolved configuration as ordered (key, value) pairs — the
/// single source for the config echo embedded in every report.
inline std::vector<std::pair<std::string, std::string>> echo_config(
    const RunConfig& cfg) {
  std::vector<std::pair<std::string, std::string>> out;
  auto add = [&out](std::string key, std::string value) {
    out.emplace_back(std::move(key), std::move(value));
  };
  auto join = [](const std::vector<std::string>& items) {
    std::string s;
    for (std::size_t i = 0; i < items.size(); ++i) {
      if (i) s += ",";
      s += items[i];
    }
    return s;
  };

  add("data.returns", cfg.returns_path.string());
  add("data.volumes", cfg.volumes_path ? cfg.volumes_path->string() : "");
  add("data.drop_incomplete_assets",
      cfg.drop_incomplete_assets ? "true" : "false");

  add("backtest.window_days", std::to_string(cfg.backtest.window_k_days));
  add("backtest.rebalance_days", std::to_string(cfg.backtest.rebalance_days));
  add("backtest.allow_any_k", cfg.backtest.allow_any_k ? "true" : "false");
  {
    std::vector<std::string> names;
    names.reserve(cfg.backtest.strategies.size());
    for (const StrategyChoice& choice : cfg.backtest.strategies)
      names.emplace_back(choice_name(choice));
    add("backtest.strategies", join(names));
  }
  add("backtest.gamma", format_double(cfg.backtest.gamma));
  add("backtest.alpha", format_double(cfg.backtest.alpha));
  add("backtest.seed", std::to_string(cfg.backtest.seed));
  add("backtest.return_mode",
      cfg.backtest.return_mode == ReturnMode::target_log    ? "target_log"
      : cfg.backtest.return_mode == ReturnMode::drifted_log ? "drifted_log"
                                                            : "compound");
  add("backtest.compound_wealth", cfg.compound_wealth ? "true" : "false");
  add("backtest.md_restarts", std::to_string(cfg.backtest.pdi.restarts));
  add("backtest.erc_max_sweeps", std::to_string(cfg.backtest.erc.max_sweeps));

  add("libro.enabled", cfg.libro_enabled ? "true" : "false");
  add("libro.investment_sum_usd", format_double(cfg.libro.investment_sum));
  add("libro.volume_fraction", format_double(cfg.libro.volume_fraction));
  add("libro.lookback_days", std::to_string(cfg.libro.lookback));

  add("comb.B", std::to_string(cfg.backtest.comb.B));
  add("comb.seed", std::to_string(cfg.backtest.comb.seed));
  add("comb.gamma", format_double(cfg.backtest.comb.gamma));
  add("comb.block", cfg.backtest.comb.fixed_block
                        ? format_double(*cfg.backtest.comb.fixed_block)
                        : "auto");

  add("inference.bandwidth",
      cfg.hac.bandwidth > 0.0 ? format_double(cfg.hac.bandwidth) : "auto");

  add("frontier.risk_measure",
      cfg.frontier_measure == RiskMeasure::variance ? "variance" : "cvar");
  add("frontier.grid_size", std::to_string(cfg.frontier_grid));
  add("frontier.universes", join(cfg.frontier_universes));

  add("assets.crypto", join(cfg.crypto_assets));
  add("assets.always_liquid", join(cfg.always_liquid_assets));

  add("output.directory", cfg.output_dir.string());
  add("output.format", format_name(cfg.format));
  return out;
}

/// Applies [assets] metadata to a loaded panel: marks configured names as
/// crypto-class and/or always-liquid. Unknown names are an error so typos
/// cannot silently leave an asset unclassified.
inline void apply_asset_metadata(ReturnsPanel& panel, const RunConfig& cfg) {
  auto find_asset = [&panel](const std::string& name) -> AssetInfo* {
    for (AssetInfo& info : panel.assets)
      if (info.name == name) return &info;
    return nullptr;
  };
  for (const std::string& name : cfg.crypto_assets) {
    AssetInfo* info = find_asset(name);
    if (!info)
      throw ConfigError("assets.crypto: unknown asset '" + name + "'");
    info->asset_class = AssetClass::crypto;
  }
  for (const std::string& name : cfg.always_liquid_assets) {
    AssetInfo* info = find_asset(name);
    if (!info)
      throw ConfigError("assets.always_liquid: unknown asset '" + name + "'");
    info->always_liquid = true;
  }
}

}  // namespace folio
