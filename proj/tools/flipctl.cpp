// flipctl command-line front end. Talks to the library only through the C API.
//
//   flipctl kernels   --config <path> [--seed S] [--out DIR]
//   flipctl policy    --config <path> [--seed S] [--out DIR]
//   flipctl oracle    --config <path> [--out DIR]
//   flipctl replicate <example2|example3> [--config <path>] [--seed S] [--out DIR]
//
// Exit codes: 0 success, 1 usage or configuration error, 2 target unreachable,
// 3 replication assertion failure. FLIPCTL_LOG=quiet suppresses the report,
// FLIPCTL_LOG=debug adds status names to diagnostics.

#include <cstdint>
#include <cstdlib>
#include <iostream>
#include <optional>
#include <string>

#include "CLI11.hpp"
#include "flipctl/flipctl.h"

namespace {

enum class Verbosity { Quiet, Normal, Debug };

Verbosity verbosity_from_env() {
  const char* v = std::getenv("FLIPCTL_LOG");
  if (!v) return Verbosity::Normal;
  const std::string s = v;
  if (s == "quiet" || s == "error" || s == "0") return Verbosity::Quiet;
  if (s == "debug" || s == "verbose" || s == "2") return Verbosity::Debug;
  return Verbosity::Normal;
}

int exit_code(flipctl_status s) {
  switch (s) {
    case FLIPCTL_OK: return 0;
    case FLIPCTL_UNREACHABLE: return 2;
    case FLIPCTL_ASSERTION_FAILED: return 3;
    default: return 1;
  }
}

struct Options {
  std::string command;
  std::string example;
  std::string config;
  std::optional<std::uint64_t> seed;
  std::optional<std::string> out;
};

int run(const Options& opt, Verbosity verbosity) {
  flipctl_config* cfg = nullptr;
  flipctl_status s = opt.config.empty() ? flipctl_config_parse("", nullptr, &cfg)
                                        : flipctl_config_load(opt.config.c_str(), &cfg);
  if (s == FLIPCTL_OK && opt.seed) s = flipctl_config_set_seed(cfg, *opt.seed);
  if (s == FLIPCTL_OK && opt.out) s = flipctl_config_set_out(cfg, opt.out->c_str());
  char* report = nullptr;
  if (s == FLIPCTL_OK) {
    s = opt.command == "replicate" ? flipctl_replicate(opt.example.c_str(), cfg, &report)
                                   : flipctl_run(opt.command.c_str(), cfg, &report);
  }
  if (report && verbosity != Verbosity::Quiet) std::cout << report;
  if (s != FLIPCTL_OK && s != FLIPCTL_UNREACHABLE && s != FLIPCTL_ASSERTION_FAILED) {
    std::cerr << "flipctl: ";
    if (verbosity == Verbosity::Debug) std::cerr << '[' << flipctl_status_name(s) << "] ";
    std::cerr << flipctl_last_error() << '\n';
  } else if (s != FLIPCTL_OK) {
    std::cerr << "flipctl: " << flipctl_status_name(s) << '\n';
  }
  flipctl_string_free(report);
  flipctl_config_free(cfg);
  return exit_code(s);
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Learn minimal flip kernels and minimum-flip control policies for Boolean control networks"};
  app.require_subcommand(1);
  Options opt;

  auto add_common = [&](CLI::App* sub, bool config_required) {
    auto* c = sub->add_option("--config,-c", opt.config, "Experiment config file");
    if (config_required) c->required();
    sub->add_option("--seed,-s", opt.seed, "Run a single seed instead of the configured list");
    sub->add_option("--out,-o", opt.out, "Output directory (overrides the config)");
  };
  add_common(app.add_subcommand("kernels", "Search minimal flip kernels"), true);
  add_common(app.add_subcommand("policy", "Learn a minimum-flip policy for one flip set"), true);
  add_common(app.add_subcommand("oracle", "Exact reachability and minimum-flip plans"), true);
  auto* rep = app.add_subcommand("replicate", "Run a bundled example end to end with checks");
  rep->add_option("example", opt.example, "example2 or example3")->required();
  add_common(rep, false);

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e);
    return code == 0 ? 0 : 1;
  }
  opt.command = app.get_subcommands().front()->get_name();
  return run(opt, verbosity_from_env());
}
