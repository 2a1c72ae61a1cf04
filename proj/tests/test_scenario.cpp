#include <algorithm>
#include <string>
#include <vector>

#include "doctest.h"

#include "bgsim/scenario.hpp"
#include "bgsim/types.hpp"

using bgsim::AppSpec;
using bgsim::DeviceChange;
using bgsim::Err;
using bgsim::Expected;
using bgsim::GrantLevel;
using bgsim::GrantSpec;
using bgsim::NetworkType;
using bgsim::Permission;
using bgsim::PlatformName;
using bgsim::RevocationPolicy;
using bgsim::Scenario;
using bgsim::StrategyAction;
using bgsim::StrategySpec;
using bgsim::TimedDeviceChange;
using bgsim::TimedService;
using bgsim::UiEvent;
using bgsim::load_scenario_string;
using bgsim::scenario_to_json;
using bgsim::validate_scenario;

namespace {

bool mentions(const std::vector<std::string>& errors,
              const std::string& needle) {
  return std::any_of(errors.begin(), errors.end(),
                     [&](const std::string& e) {
                       return e.find(needle) != std::string::npos;
                     });
}

// A scenario exercising every serializable field at least once.
Scenario full_scenario() {
  Scenario sc;
  sc.name = "everything";
  sc.seed = 99;
  sc.horizon_ms = 7'200'000;
  sc.platform = PlatformName::ten;
  sc.profile.notification_grace_ms = 4'000;
  sc.profile.black_image_probability = 0.25;
  sc.profile.location_icon_always_visible = true;
  sc.profile.doze_maintenance_interval_ms = 600'000;
  sc.profile.battery_budget_sensor_actions = 25;
  sc.profile.battery_budget_fgs_runtime_ms = 80'000;
  sc.profile.battery_budget_window_ms = 1'800'000;
  sc.initial_device.battery_pct = 80;
  sc.initial_device.charging = true;
  sc.initial_device.network = NetworkType::cellular;
  sc.initial_device.idle = false;
  sc.sensor_config.wifi_bytes_per_ms = 1'500.0;
  sc.sensor_config.cellular_bytes_per_ms = 400.0;
  sc.sensor_config.background_location_cap_per_hour = 2;
  sc.files.push_back({"DCIM/x.jpg", 4'000'000, true});
  sc.files.push_back({"Music/y.mp3", 9'000'000, false});

  AppSpec spy;
  spy.id = "spy-app";
  spy.grants.push_back({Permission::camera, GrantLevel::granted, 0});
  spy.grants.push_back({Permission::location, GrantLevel::while_in_use, 0});
  spy.grants.push_back(
      {Permission::record_audio, GrantLevel::time_boxed, 600'000});
  sc.apps.push_back(spy);

  AppSpec music;
  music.id = "music-app";
  music.ui_schedule.push_back(UiEvent{0, true});
  music.ui_schedule.push_back(UiEvent{120'000, false});
  music.services.push_back(TimedService{0, 3'600'000, "Now playing"});
  music.notifications_disabled = true;
  sc.apps.push_back(music);

  TimedDeviceChange idle;
  idle.t = 600'000;
  idle.change.kind = DeviceChange::Kind::idle;
  idle.change.flag = true;
  sc.device_timeline.push_back(idle);
  TimedDeviceChange net;
  net.t = 900'000;
  net.change.kind = DeviceChange::Kind::network;
  net.change.network = NetworkType::none;
  sc.device_timeline.push_back(net);
  TimedDeviceChange drain;
  drain.t = 1'200'000;
  drain.change.kind = DeviceChange::Kind::battery_delta;
  drain.change.delta = -30;
  sc.device_timeline.push_back(drain);
  TimedDeviceChange plug;
  plug.t = 1'500'000;
  plug.change.kind = DeviceChange::Kind::charging;
  plug.change.flag = true;
  sc.device_timeline.push_back(plug);

  StrategySpec st;
  st.name = "grab-everything";
  st.app = "spy-app";
  st.start_ms = 1'000;
  st.chain_delay_ms = 30'000;
  st.fgs_budget_ms = 5'000;
  st.notification_content = "Sync";
  st.service_type = bgsim::ServiceType::location;
  StrategyAction cap;
  cap.kind = StrategyAction::Kind::capture_image;
  StrategyAction mic;
  mic.kind = StrategyAction::Kind::mic_toggle;
  mic.start_cycle = 0;
  mic.stop_cycle = 4;
  StrategyAction burst;
  burst.kind = StrategyAction::Kind::location_burst;
  burst.cadence_ms = 500;
  burst.duration_ms = 3'000;
  StrategyAction list;
  list.kind = StrategyAction::Kind::list_files;
  StrategyAction up;
  up.kind = StrategyAction::Kind::upload;
  up.path = "DCIM/x.jpg";
  up.max_size_bytes = 8'000'000;
  st.actions = {cap, mic, burst, list, up};
  st.constraints.requires_charging = true;
  st.constraints.required_network = bgsim::RequiredNetwork::unmetered;
  st.constraints.persisted = true;
  sc.strategies.push_back(st);

  sc.monitor.window_ms = 600'000;
  sc.monitor.suspicious_invisible_fgs = 2;
  sc.monitor.abusive_invisible_fgs = 8;
  sc.monitor.abusive_hidden_accesses = 9;
  sc.monitor.suspicious_exfil_bytes = 500'000;
  sc.monitor.abusive_exfil_bytes = 5'000'000;
  sc.monitor.dormant_windows = 3;
  sc.monitor.spike_hidden_accesses = 7;
  sc.revocation = RevocationPolicy::time_boxed_default(600'000);
  sc.mitigation = true;
  return sc;
}

}  // namespace

TEST_CASE("a minimal document fills in every default") {
  Expected<Scenario> sc = load_scenario_string(R"({"horizon_ms": 60000})");
  REQUIRE(sc);
  CHECK(sc.value().name == "unnamed");
  CHECK(sc.value().seed == 1);
  CHECK(sc.value().horizon_ms == 60'000);
  CHECK(sc.value().platform == PlatformName::pie);
  CHECK(sc.value().profile.notification_grace_ms == 5'000);
  CHECK(sc.value().initial_device.battery_pct == 100);
  CHECK(sc.value().initial_device.network == NetworkType::wifi);
  CHECK(sc.value().monitor.window_ms == 900'000);
  CHECK(sc.value().revocation.mode == RevocationPolicy::Mode::off);
  CHECK_FALSE(sc.value().mitigation);
  CHECK(sc.value().apps.empty());
  CHECK(sc.value().strategies.empty());
}

TEST_CASE("a full document round-trips to identical json") {
  const Scenario original = full_scenario();
  CHECK(validate_scenario(original).empty());
  const std::string dumped = scenario_to_json(original).dump(2);
  Expected<Scenario> reloaded = load_scenario_string(dumped);
  REQUIRE(reloaded);
  CHECK(scenario_to_json(reloaded.value()).dump(2) == dumped);
}

TEST_CASE("reloading preserves the awkward optional fields") {
  Expected<Scenario> sc =
      load_scenario_string(scenario_to_json(full_scenario()).dump());
  REQUIRE(sc);
  const Scenario& v = sc.value();
  REQUIRE(v.apps.size() == 2);
  CHECK(v.apps[0].grants[2].level == GrantLevel::time_boxed);
  CHECK(v.apps[0].grants[2].expiry == 600'000);
  CHECK(v.apps[1].notifications_disabled);
  REQUIRE(v.strategies.size() == 1);
  const StrategySpec& st = v.strategies[0];
  REQUIRE(st.service_type.has_value());
  CHECK(*st.service_type == bgsim::ServiceType::location);
  REQUIRE(st.actions.size() == 5);
  CHECK(st.actions[1].start_cycle == 0);
  CHECK(st.actions[1].stop_cycle == 4);
  CHECK(st.actions[4].max_size_bytes == 8'000'000);
  REQUIRE(st.constraints.required_network.has_value());
  CHECK(*st.constraints.required_network ==
        bgsim::RequiredNetwork::unmetered);
  CHECK(st.constraints.persisted);
  REQUIRE(v.device_timeline.size() == 4);
  CHECK(v.device_timeline[2].change.delta == -30);
}

TEST_CASE("malformed json is an input error with a message") {
  std::vector<std::string> errors;
  Expected<Scenario> sc = load_scenario_string("{не json", &errors);
  REQUIRE_FALSE(sc);
  CHECK(sc.error() == Err::parse_error);
  CHECK_FALSE(errors.empty());
}

TEST_CASE("unknown enum strings are parse errors, not guesses") {
  std::vector<std::string> errors;
  Expected<Scenario> sc = load_scenario_string(
      R"({"horizon_ms": 1000, "platform": "quux"})", &errors);
  REQUIRE_FALSE(sc);
  CHECK(sc.error() == Err::parse_error);
  CHECK(mentions(errors, "unknown platform: quux"));

  errors.clear();
  sc = load_scenario_string(
      R"({"horizon_ms": 1000,
          "apps": [{"id": "a", "grants": [{"permission": "telepathy"}]}]})",
      &errors);
  REQUIRE_FALSE(sc);
  CHECK(mentions(errors, "unknown permission"));

  errors.clear();
  sc = load_scenario_string(
      R"({"horizon_ms": 1000, "apps": [{"id": "a"}],
          "strategies": [{"name": "s", "app": "a",
                          "actions": [{"kind": "teleport"}]}]})",
      &errors);
  REQUIRE_FALSE(sc);
  CHECK(mentions(errors, "unknown action: teleport"));

  errors.clear();
  sc = load_scenario_string(
      R"({"horizon_ms": 1000, "revocation_policy": {"mode": "sometimes"}})",
      &errors);
  REQUIRE_FALSE(sc);
  CHECK(mentions(errors, "unknown revocation mode"));
}

TEST_CASE("semantic problems surface as validation errors") {
  std::vector<std::string> errors;
  Expected<Scenario> sc = load_scenario_string(
      R"({"horizon_ms": 1000,
          "strategies": [{"name": "s", "app": "ghost",
                          "actions": [{"kind": "capture-image"}]}]})",
      &errors);
  REQUIRE_FALSE(sc);
  CHECK(sc.error() == Err::validation_error);
  CHECK(mentions(errors, "undeclared app: ghost"));
}

TEST_CASE("every structural rule rejects its bad input") {
  Scenario sc = full_scenario();
  sc.horizon_ms = 0;
  CHECK(mentions(validate_scenario(sc), "horizon_ms must be positive"));

  sc = full_scenario();
  sc.monitor.window_ms = 0;
  CHECK(mentions(validate_scenario(sc), "monitor.window_ms"));

  sc = full_scenario();
  sc.profile.notification_grace_ms = -1;
  CHECK(mentions(validate_scenario(sc), "notification_grace_ms"));

  sc = full_scenario();
  sc.profile.black_image_probability = 1.5;
  CHECK(mentions(validate_scenario(sc), "black_image_probability"));

  sc = full_scenario();
  sc.revocation = RevocationPolicy::auto_unused(0);
  CHECK(mentions(validate_scenario(sc), "ttl_ms must be positive"));

  sc = full_scenario();
  sc.apps.push_back(sc.apps[0]);
  CHECK(mentions(validate_scenario(sc), "duplicate app id: spy-app"));

  sc = full_scenario();
  sc.apps[0].id = "";
  CHECK(mentions(validate_scenario(sc), "app id must be non-empty"));

  sc = full_scenario();
  sc.apps[0].grants[1].permission = Permission::camera;  // while-in-use
  CHECK(mentions(validate_scenario(sc), "only legal for location"));

  sc = full_scenario();
  sc.platform = PlatformName::pie;  // still has a while-in-use grant
  CHECK(mentions(validate_scenario(sc), "requires platform ten"));

  sc = full_scenario();
  sc.apps[0].grants[2].expiry = 0;  // time-boxed
  CHECK(mentions(validate_scenario(sc), "needs expiry > 0"));

  sc = full_scenario();
  sc.apps[1].ui_schedule[0].t = -5;
  CHECK(mentions(validate_scenario(sc), "ui_schedule times"));

  sc = full_scenario();
  sc.apps[1].services[0].duration_ms = -1;
  CHECK(mentions(validate_scenario(sc), "service times"));

  sc = full_scenario();
  sc.strategies.push_back(sc.strategies[0]);
  CHECK(mentions(validate_scenario(sc),
                 "duplicate strategy name: grab-everything"));

  sc = full_scenario();
  sc.strategies[0].name = "";
  CHECK(mentions(validate_scenario(sc), "strategy name must be non-empty"));

  sc = full_scenario();
  sc.strategies[0].actions.clear();
  CHECK(mentions(validate_scenario(sc), "has no actions"));

  sc = full_scenario();
  sc.strategies[0].fgs_budget_ms = -1;
  CHECK(mentions(validate_scenario(sc), "fgs_budget_ms"));

  sc = full_scenario();
  sc.strategies[0].chain_delay_ms = 0;
  CHECK(mentions(validate_scenario(sc), "chain_delay_ms"));

  sc = full_scenario();
  sc.strategies[0].start_ms = -1;
  CHECK(mentions(validate_scenario(sc), "start_ms"));

  sc = full_scenario();
  sc.strategies[0].actions[2].cadence_ms = 0;  // the location burst
  CHECK(mentions(validate_scenario(sc), "location-burst cadence"));
}
