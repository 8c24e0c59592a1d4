// folio command-line entry point.
//
// Subcommands: backtest, frontier, spanning, describe, combine. Every
// subcommand reads an INI config file; a few common settings can be
// overridden on the command line. Exit codes: 0 success, 1 configuration or
// input error, 2 compute error.

#include <cstdio>
#include <exception>
#include <optional>
#include <string>

#include <CLI11.hpp>

#include <folio/cli.hpp>
#include <folio/config.hpp>

namespace {

struct Args {
  std::string config_path;
  folio::CliOverrides overrides;
  bool allow_any_k = false;
};

int dispatch(const std::string& command, const Args& args) {
  folio::RunConfig cfg;
  try {
    cfg = folio::load_config(args.config_path, args.overrides);
    if (args.allow_any_k) cfg.backtest.allow_any_k = true;
  } catch (const folio::Error& e) {
    std::fprintf(stderr, "config error: %s\n", e.what());
    return 1;
  }

  try {
    folio::CommandResult result;
    if (command == "backtest")
      result = folio::run_backtest_command(cfg);
    else if (command == "frontier")
      result = folio::run_frontier_command(cfg);
    else if (command == "spanning")
      result = folio::run_spanning_command(cfg);
    else if (command == "describe")
      result = folio::run_describe_command(cfg);
    else
      result = folio::run_combine_command(cfg);
    for (const auto& path : result.files)
      std::printf("wrote %s\n", path.string().c_str());
    return 0;
  } catch (const folio::ConfigError& e) {
    std::fprintf(stderr, "config error: %s\n", e.what());
    return 1;
  } catch (const folio::ValidationError& e) {
    std::fprintf(stderr, "input error: %s\n", e.what());
    return 1;
  } catch (const folio::Error& e) {
    std::fprintf(stderr, "compute error: %s\n", e.what());
    return 2;
  } catch (const std::exception& e) {
    std::fprintf(stderr, "compute error: %s\n", e.what());
    return 2;
  }
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"folio: portfolio-allocation backtesting engine"};
  app.require_subcommand(1);

  Args args;
  const char* names[] = {"backtest", "frontier", "spanning", "describe",
                         "combine"};
  const char* briefs[] = {
      "Rolling-window out-of-sample backtest with reports",
      "Efficient-frontier surfaces per rebalance date and universe",
      "Mean-variance spanning tests of crypto assets on benchmarks",
      "Descriptive statistics of the returns panel",
      "One-shot model combination on the latest window"};
  for (int i = 0; i < 5; ++i) {
    CLI::App* sub = app.add_subcommand(names[i], briefs[i]);
    sub->add_option("--config", args.config_path,
                    "Path to the INI configuration file")
        ->required();
    sub->add_option("--seed", args.overrides.seed,
                    "Override the master random seed");
    sub->add_option("--rebalance", args.overrides.rebalance,
                    "Rebalance cadence: daily, weekly, or monthly")
        ->check(CLI::IsMember({"daily", "weekly", "monthly"}));
    sub->add_flag("--libro", args.overrides.libro,
                  "Enable LIBRO liquidity caps");
    sub->add_flag("--drop-incomplete-assets", args.overrides.drop_incomplete,
                  "Drop asset columns with missing cells instead of failing");
    sub->add_flag("--allow-any-k", args.allow_any_k,
                  "Permit rebalance periods other than 1, 5, or 21 days");
    sub->add_option("--format", args.overrides.format,
                    "Report format: csv or json")
        ->check(CLI::IsMember({"csv", "json"}));
  }

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e);
    return code == 0 ? 0 : 1;
  }

  for (const char* name : names)
    if (app.got_subcommand(name)) return dispatch(name, args);
  return 1;
}
