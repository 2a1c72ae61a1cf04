#include <sstream>
#include <string>

#include "doctest.h"

#include "bgsim/presets.hpp"
#include "bgsim/runner.hpp"

using bgsim::Expected;
using bgsim::make_preset;
using bgsim::replay_trace;
using bgsim::RunResult;
using bgsim::run_scenario;

TEST_CASE("replaying a trace rebuilds the exact monitor verdict") {
  RunResult live = run_scenario(*make_preset("combined"));
  std::istringstream in(live.trace_text);
  Expected<nlohmann::ordered_json> replayed = replay_trace(in);
  REQUIRE(replayed);
  CHECK(replayed.value()["schema"] == "bgsim-monitor-report/1");
  CHECK(replayed.value()["scenario"] == "combined");
  CHECK(replayed.value()["seed"] == 42);
  CHECK_FALSE(replayed.value().contains("truncated"));
  // Byte-identical monitor sections: the trace alone determines the verdict.
  CHECK(replayed.value()["monitor"].dump() == live.report["monitor"].dump());
}

TEST_CASE("a torn-off tail is reported but still analyzable") {
  RunResult live = run_scenario(*make_preset("camera-spy"));
  std::string text = live.trace_text;
  text.resize(text.size() - 25);  // mid-record cut
  std::istringstream in(text);
  Expected<nlohmann::ordered_json> replayed = replay_trace(in);
  REQUIRE(replayed);
  CHECK(replayed.value()["truncated"] == true);
  CHECK(replayed.value()["monitor"].contains("apps"));
}

TEST_CASE("garbage input is a parse error, not a crash") {
  std::istringstream in("this is not a trace\n");
  CHECK(replay_trace(in).error() == bgsim::Err::parse_error);
  std::istringstream empty("");
  CHECK_FALSE(replay_trace(empty));
}

TEST_CASE("the summary names the scenario and the headline numbers") {
  RunResult r = run_scenario(*make_preset("exfil"));
  CHECK(r.summary.find("exfil") != std::string::npos);
  CHECK(r.summary.find("cycles") != std::string::npos);
  CHECK(r.summary.find("findings") != std::string::npos);
  CHECK(r.report["strategies"][0]["uploaded_bytes"].get<std::uint64_t>() >
        0);
}

TEST_CASE("runner overrides shadow the scenario fields") {
  RunResult r = run_scenario(*make_preset("mic-spy"), true, 5);
  CHECK(r.report["seed"] == 5);
  CHECK(r.report["mitigation"] == true);
}
