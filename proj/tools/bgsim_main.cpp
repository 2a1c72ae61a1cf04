// Command-line front end.
//
//   bgsim run --scenario <file-or-preset> [--trace OUT] [--report OUT]
//             [--seed N] [--mitigation on|off]
//   bgsim replay --trace IN [--report OUT]
//   bgsim presets list
//   bgsim validate --scenario <file>
//
// Exit codes: 0 success, 1 bad input (unreadable/invalid scenario or trace,
// bad flags), 2 internal invariant violation.

#include <cstdint>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <optional>
#include <string>
#include <vector>

#include <CLI11.hpp>

#include "bgsim/presets.hpp"
#include "bgsim/runner.hpp"
#include "bgsim/scenario.hpp"
#include "bgsim/types.hpp"

namespace {

// A scenario argument is a path when the file exists, a preset name
// otherwise.
bgsim::Expected<bgsim::Scenario> resolve_scenario(
    const std::string& arg, std::vector<std::string>* errors) {
  if (std::filesystem::exists(arg)) {
    std::ifstream in(arg);
    if (!in) {
      if (errors != nullptr) errors->push_back("cannot open " + arg);
      return bgsim::Err::parse_error;
    }
    return bgsim::load_scenario(in, errors);
  }
  if (std::optional<bgsim::Scenario> preset = bgsim::make_preset(arg)) {
    return *preset;
  }
  if (errors != nullptr) {
    errors->push_back("no such file or preset: " + arg);
  }
  return bgsim::Err::parse_error;
}

bool write_file(const std::string& path, const std::string& contents) {
  std::ofstream out(path, std::ios::binary);
  if (!out) return false;
  out << contents;
  return static_cast<bool>(out);
}

void print_errors(const std::vector<std::string>& errors) {
  for (const std::string& e : errors) std::cerr << "error: " << e << "\n";
}

int do_run(const std::string& scenario_arg, const std::string& trace_path,
           const std::string& report_path,
           std::optional<std::uint64_t> seed,
           std::optional<bool> mitigation) {
  std::vector<std::string> errors;
  bgsim::Expected<bgsim::Scenario> scenario =
      resolve_scenario(scenario_arg, &errors);
  if (!scenario) {
    print_errors(errors);
    return 1;
  }
  bgsim::RunResult result =
      bgsim::run_scenario(std::move(scenario.value()), mitigation, seed);
  if (!trace_path.empty() && !write_file(trace_path, result.trace_text)) {
    std::cerr << "error: cannot write " << trace_path << "\n";
    return 1;
  }
  if (!report_path.empty() &&
      !write_file(report_path, result.report.dump(2) + "\n")) {
    std::cerr << "error: cannot write " << report_path << "\n";
    return 1;
  }
  std::cout << result.summary;
  return 0;
}

int do_replay(const std::string& trace_path, const std::string& report_path) {
  std::ifstream in(trace_path, std::ios::binary);
  if (!in) {
    std::cerr << "error: cannot open " << trace_path << "\n";
    return 1;
  }
  bgsim::Expected<nlohmann::ordered_json> report = bgsim::replay_trace(in);
  if (!report) {
    std::cerr << "error: unreadable trace (" << to_string(report.error())
              << ")\n";
    return 1;
  }
  if (report.value().value("truncated", false)) {
    std::cerr << "warning: trace ends mid-record; replaying the complete "
                 "prefix\n";
  }
  const std::string text = report.value().dump(2) + "\n";
  if (!report_path.empty()) {
    if (!write_file(report_path, text)) {
      std::cerr << "error: cannot write " << report_path << "\n";
      return 1;
    }
  } else {
    std::cout << text;
  }
  return 0;
}

int do_validate(const std::string& scenario_arg) {
  std::vector<std::string> errors;
  bgsim::Expected<bgsim::Scenario> scenario =
      resolve_scenario(scenario_arg, &errors);
  if (!scenario) {
    print_errors(errors);
    return 1;
  }
  std::cout << "ok: " << scenario.value().name << "\n";
  return 0;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Deterministic simulator of background-execution abuse on "
               "mobile platforms"};
  app.require_subcommand(1);

  std::string scenario_arg;
  std::string trace_path;
  std::string report_path;
  std::optional<std::uint64_t> seed;
  std::string mitigation_arg;

  CLI::App* run_cmd = app.add_subcommand("run", "Simulate a scenario");
  run_cmd->add_option("--scenario", scenario_arg,
                      "Scenario file or preset name")
      ->required();
  run_cmd->add_option("--trace", trace_path, "Write the event trace here");
  run_cmd->add_option("--report", report_path, "Write the run report here");
  run_cmd->add_option("--seed", seed, "Override the scenario seed");
  run_cmd->add_option("--mitigation", mitigation_arg,
                      "Override monitor-driven mitigation (on|off)")
      ->check(CLI::IsMember({"on", "off"}));

  CLI::App* replay_cmd =
      app.add_subcommand("replay", "Re-run the monitor over a stored trace");
  replay_cmd->add_option("--trace", trace_path, "Trace file to replay")
      ->required();
  replay_cmd->add_option("--report", report_path,
                         "Write the monitor report here");

  CLI::App* presets_cmd =
      app.add_subcommand("presets", "Built-in scenario operations");
  presets_cmd->require_subcommand(1);
  CLI::App* list_cmd =
      presets_cmd->add_subcommand("list", "List built-in scenarios");

  CLI::App* validate_cmd =
      app.add_subcommand("validate", "Check a scenario file");
  validate_cmd
      ->add_option("--scenario", scenario_arg, "Scenario file or preset name")
      ->required();

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e);
    return code == 0 ? 0 : 1;
  }

  try {
    if (*run_cmd) {
      std::optional<bool> mitigation;
      if (!mitigation_arg.empty()) mitigation = (mitigation_arg == "on");
      return do_run(scenario_arg, trace_path, report_path, seed, mitigation);
    }
    if (*replay_cmd) return do_replay(trace_path, report_path);
    if (*list_cmd) {
      for (const std::string& name : bgsim::preset_names()) {
        std::cout << name << "\n";
      }
      return 0;
    }
    if (*validate_cmd) return do_validate(scenario_arg);
  } catch (const bgsim::SimError& e) {
    std::cerr << "invariant violation: " << e.what() << "\n";
    return 2;
  } catch (const std::exception& e) {
    std::cerr << "internal error: " << e.what() << "\n";
    return 2;
  }
  return 1;
}
