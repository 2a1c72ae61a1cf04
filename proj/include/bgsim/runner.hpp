#pragma once
// One-call entry points shared by the CLI and the tests: run a scenario to
// completion (trace + report + human summary), and replay a stored trace
// through a fresh monitor configured from the trace header. Because the
// header carries the monitor configuration, a replayed report's monitor
// section is byte-identical to the live one.

#include <cstdint>
#include <istream>
#include <optional>
#include <sstream>
#include <string>
#include <utility>

#include <nlohmann/json.hpp>

#include "bgsim/monitor.hpp"
#include "bgsim/scenario.hpp"
#include "bgsim/trace.hpp"
#include "bgsim/types.hpp"
#include "bgsim/world.hpp"

namespace bgsim {

struct RunResult {
  std::string trace_text;        // JSON Lines: header line + one per record
  nlohmann::ordered_json report;
  std::string summary;           // short human-readable digest
};

inline std::string summarize_report(const nlohmann::ordered_json& report) {
  std::ostringstream out;
  out << "scenario " << report.value("scenario", std::string{"?"}) << " seed "
      << report.value("seed", std::uint64_t{0}) << " horizon "
      << report.value("horizon_ms", std::int64_t{0}) << " ms, mitigation "
      << (report.value("mitigation", false) ? "on" : "off") << "\n";
  for (const auto& s :
       report.value("strategies", nlohmann::ordered_json::array())) {
    out << "  strategy " << s.value("name", std::string{"?"}) << " ("
        << s.value("app", std::string{"?"}) << "): "
        << s.value("cycles_executed", std::uint64_t{0}) << " cycles, "
        << s.value("notifications_leaked", std::uint64_t{0})
        << " notifications leaked, " << s.value("total_collected",
                                                std::uint64_t{0})
        << " items collected, " << s.value("uploaded_bytes", std::uint64_t{0})
        << " bytes uploaded\n";
  }
  std::uint64_t findings = 0;
  std::uint64_t abusive = 0;
  std::uint64_t recommendations = 0;
  if (report.contains("monitor")) {
    for (const auto& app :
         report["monitor"].value("apps", nlohmann::ordered_json::array())) {
      for (const auto& f :
           app.value("findings", nlohmann::ordered_json::array())) {
        ++findings;
        if (f.value("severity", std::string{}) == "abusive") ++abusive;
      }
      recommendations +=
          app.value("recommendations", nlohmann::ordered_json::array()).size();
    }
  }
  out << "  monitor: " << findings << " findings (" << abusive
      << " abusive), " << recommendations << " recommendations\n";
  return out.str();
}

inline RunResult run_scenario(Scenario scenario,
                              std::optional<bool> mitigation = std::nullopt,
                              std::optional<std::uint64_t> seed =
                                  std::nullopt) {
  World world(std::move(scenario), mitigation, seed);
  world.run();
  RunResult result;
  result.trace_text = world.trace().to_string();
  result.report = world.report();
  result.summary = summarize_report(result.report);
  return result;
}

// Rebuilds monitor findings from a stored trace alone. A truncated final
// line (interrupted write) is tolerated and flagged in the output.
inline Expected<nlohmann::ordered_json> replay_trace(std::istream& in) {
  Expected<ParsedTrace> parsed = parse_trace(in);
  if (!parsed) return parsed.error();
  const ParsedTrace& pt = parsed.value();
  Monitor monitor(detail::monitor_from_json(pt.header.monitor));
  for (const TraceRecord& rec : pt.records) {
    Status st = monitor.ingest(rec);
    if (!st) return st.error();
  }
  monitor.finish();
  nlohmann::ordered_json j;
  j["schema"] = "bgsim-monitor-report/1";
  j["scenario"] = pt.header.scenario;
  j["seed"] = pt.header.seed;
  j["horizon_ms"] = pt.header.horizon_ms;
  j["mitigation"] = pt.header.mitigation;
  if (pt.truncated) j["truncated"] = true;
  j["monitor"] = monitor.report().to_json();
  return j;
}

}  // namespace bgsim
