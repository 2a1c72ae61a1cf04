#include <string>

#include "doctest.h"

#include "bgsim/presets.hpp"
#include "bgsim/world.hpp"
#include "test_util.hpp"

using bgsim::AppSpec;
using bgsim::GrantLevel;
using bgsim::make_preset;
using bgsim::Permission;
using bgsim::PlatformName;
using bgsim::Scenario;
using bgsim::StrategyAction;
using bgsim::StrategySpec;
using bgsim::TimedService;
using bgsim::UiEvent;
using bgsim::World;
using testutil::count_records;

namespace {

// A one-capture-per-minute chain against a deliberately tiny battery budget,
// so the watchdog escalates within a twenty-minute horizon.
Scenario tiny_budget_scenario() {
  Scenario sc;
  sc.name = "tiny-budget";
  sc.seed = 7;
  sc.horizon_ms = 1'200'000;
  sc.platform = PlatformName::pie;
  sc.profile.battery_budget_sensor_actions = 3;
  sc.profile.battery_budget_window_ms = 300'000;
  sc.profile.battery_budget_fgs_runtime_ms = 1'000'000;
  AppSpec spy;
  spy.id = "spy-app";
  spy.grants.push_back({Permission::camera, GrantLevel::granted, 0});
  sc.apps.push_back(spy);
  StrategySpec st;
  st.name = "snap";
  st.app = "spy-app";
  st.chain_delay_ms = 60'000;
  st.fgs_budget_ms = 4'000;
  StrategyAction cap;
  cap.kind = StrategyAction::Kind::capture_image;
  st.actions = {cap};
  sc.strategies.push_back(st);
  return sc;
}

}  // namespace

TEST_CASE("the same scenario and seed reproduce the trace byte for byte") {
  World a(*make_preset("combined"));
  World b(*make_preset("combined"));
  a.run();
  b.run();
  const std::string ta = a.trace().to_string();
  CHECK(ta == b.trace().to_string());
  CHECK(ta.find("\"seed\":42") != std::string::npos);
  // A different seed reshuffles the black frames, so the bytes diverge.
  World c(*make_preset("combined"), std::nullopt, 43);
  c.run();
  CHECK(c.trace().to_string() != ta);
}

TEST_CASE("a world refuses to run twice") {
  World w(*make_preset("mic-spy"));
  w.run();
  CHECK_THROWS_AS(w.run(), bgsim::SimError);
}

TEST_CASE("ui schedules and timed services play out on the clock") {
  Scenario sc;
  sc.name = "foreground-app";
  sc.horizon_ms = 100'000;
  AppSpec app;
  app.id = "fg-app";
  app.ui_schedule.push_back(UiEvent{1'000, true});
  app.ui_schedule.push_back(UiEvent{50'000, false});
  app.services.push_back(TimedService{2'000, 20'000, "Working"});
  sc.apps.push_back(app);
  World w(sc);
  w.run();
  CHECK(count_records(w.trace(), "ui-change", "ui", "visible") == 1);
  CHECK(count_records(w.trace(), "ui-change", "ui", "hidden") == 1);
  CHECK(count_records(w.trace(), "service-start", "foreground") == 1);
  CHECK(count_records(w.trace(), "notification-posted", "notification") == 1);
  const bgsim::TraceRecord* stop =
      testutil::find_last(w.trace(), "service-stop");
  REQUIRE(stop != nullptr);
  CHECK(stop->t == 22'000);
  CHECK(stop->detail.at("was_visible") == true);
}

TEST_CASE("the battery watchdog warns, then stops the app for good") {
  World w(tiny_budget_scenario());
  w.run();
  CHECK(count_records(w.trace(), "notification-posted", "spy-app",
                      "battery-warning") == 1);
  CHECK(count_records(w.trace(), "app-stopped", "spy-app") == 1);
  CHECK(w.device().app_stopped("spy-app"));
  // Budget of 3 per 5-minute window: warned on the 4th capture, stopped on
  // the 4th of the next window, after which the chain is dead.
  nlohmann::ordered_json rep = w.report();
  const auto cycles = rep["strategies"][0]["cycles_executed"]
                          .get<std::uint64_t>();
  CHECK(cycles >= 8);
  CHECK(cycles <= 10);
  const bgsim::TraceRecord* last_start =
      testutil::find_last(w.trace(), "service-start");
  REQUIRE(last_start != nullptr);
  CHECK(last_start->t < 600'000);
}

TEST_CASE("mitigation off only watches; on actually revokes") {
  World off(*make_preset("camera-spy"), false);
  off.run();
  CHECK(count_records(off.trace(), "permission-revoked") == 0);
  World on(*make_preset("camera-spy"), true);
  on.run();
  CHECK(count_records(on.trace(), "permission-revoked", "camera",
                      "monitor") >= 1);
  CHECK(count_records(on.trace(), "notification-posted", "monitor-warning") >=
        1);
  const auto collected = [](const World& w) {
    return w.report()["strategies"][0]["total_collected"]
        .get<std::uint64_t>();
  };
  CHECK(collected(on) < collected(off));
}

TEST_CASE("the report carries scenario identity and per-strategy stats") {
  World w(*make_preset("mic-spy"));
  w.run();
  nlohmann::ordered_json rep = w.report();
  CHECK(rep["schema"] == "bgsim-report/1");
  CHECK(rep["scenario"] == "mic-spy");
  CHECK(rep["seed"] == 42);
  CHECK(rep["mitigation"] == false);
  REQUIRE(rep["strategies"].size() == 1);
  const auto& st = rep["strategies"][0];
  CHECK(st["app"] == "spy-app");
  CHECK(st["cycles_executed"].get<std::uint64_t>() > 0);
  CHECK(st["recorded_ms"].get<std::uint64_t>() > 0);
  CHECK(rep["monitor"].contains("apps"));
}

TEST_CASE("overrides replace the scenario's own seed and mitigation") {
  World w(*make_preset("mic-spy"), true, 1234);
  CHECK(w.scenario().mitigation);
  CHECK(w.scenario().seed == 1234);
  w.run();
  CHECK(w.trace().to_string().find("\"seed\":1234") != std::string::npos);
  CHECK(w.trace().to_string().find("\"mitigation\":true") !=
        std::string::npos);
}
