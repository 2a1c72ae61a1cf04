#include <fstream>
#include <sstream>
#include <string>

#include "doctest.h"

#include "bgsim/presets.hpp"
#include "bgsim/scenario.hpp"

using bgsim::make_preset;
using bgsim::preset_names;
using bgsim::Scenario;

namespace {

std::string read_file(const std::string& path) {
  std::ifstream in(path);
  REQUIRE(in.good());
  std::ostringstream buf;
  buf << in.rdbuf();
  return buf.str();
}

}  // namespace

TEST_CASE("every preset is a valid scenario") {
  REQUIRE_FALSE(preset_names().empty());
  for (const std::string& name : preset_names()) {
    CAPTURE(name);
    std::optional<Scenario> sc = make_preset(name);
    REQUIRE(sc.has_value());
    CHECK(sc->name == name);
    CHECK(bgsim::validate_scenario(*sc).empty());
    CHECK(sc->horizon_ms > 0);
    REQUIRE_FALSE(sc->strategies.empty());
  }
}

TEST_CASE("unknown preset names return nothing") {
  CHECK_FALSE(make_preset("no-such-preset").has_value());
  CHECK_FALSE(make_preset("").has_value());
}

TEST_CASE("the expected preset lineup is present") {
  const auto names = preset_names();
  for (const char* expected :
       {"camera-spy", "mic-spy", "location-spy", "exfil", "combined"}) {
    CAPTURE(expected);
    CHECK(std::find(names.begin(), names.end(), expected) != names.end());
  }
}

TEST_CASE("the combined preset carries the full attack inventory") {
  std::optional<Scenario> sc = make_preset("combined");
  REQUIRE(sc.has_value());
  REQUIRE(sc->strategies.size() == 1);
  CHECK(sc->strategies[0].actions.size() == 5);
  CHECK(sc->apps.size() == 2);      // the spy plus a benign companion
  CHECK(sc->files.size() == 24);
  CHECK(sc->horizon_ms == 7'200'000);
}

TEST_CASE("checked-in scenario files mirror the built-in presets") {
  for (const std::string& name : preset_names()) {
    CAPTURE(name);
    const std::string path =
        std::string(BGSIM_SOURCE_DIR) + "/scenarios/" + name + ".json";
    const std::string on_disk = read_file(path);
    const std::string generated =
        bgsim::scenario_to_json(*make_preset(name)).dump(2) + "\n";
    CHECK(on_disk == generated);
  }
}
