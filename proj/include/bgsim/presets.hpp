#pragma once
// Built-in scenarios. Each returns a fully-populated Scenario that the CLI
// can run by name; the JSON mirrors under scenarios/ are kept in sync by a
// test. All presets share one attacker app ("spy-app") driven by a job
// chain of short foreground-service bursts, differing in which sensors the
// strategy touches. "combined" adds a benign, visibly-notifying music app
// for contrast.

#include <cstdint>
#include <cstdio>
#include <optional>
#include <string>
#include <vector>

#include "bgsim/scenario.hpp"

namespace bgsim {

namespace detail {

inline AppSpec spy_app(std::vector<Permission> permissions,
                       GrantLevel level = GrantLevel::granted,
                       SimTime expiry = 0) {
  AppSpec app;
  app.id = "spy-app";
  for (Permission p : permissions) {
    app.grants.push_back(GrantSpec{p, level, expiry});
  }
  return app;
}

inline std::vector<StoredFile> photo_library(int count) {
  std::vector<StoredFile> files;
  for (int i = 0; i < count; ++i) {
    StoredFile f;
    char name[32];
    std::snprintf(name, sizeof(name), "DCIM/IMG_%04d.jpg", i + 1);
    f.path = name;
    f.size_bytes = 4'000'000 + static_cast<std::uint64_t>(i) * 50'000;
    f.location_metadata = (i % 3) == 0;
    files.push_back(std::move(f));
  }
  return files;
}

inline StrategySpec chain_strategy(std::string name,
                                   std::vector<StrategyAction> actions) {
  StrategySpec st;
  st.name = std::move(name);
  st.app = "spy-app";
  st.start_ms = 0;
  st.chain_delay_ms = 60'000;
  st.fgs_budget_ms = 4'000;
  st.notification_content = "Synchronizing...";
  st.actions = std::move(actions);
  return st;
}

}  // namespace detail

// Camera bursts every minute for two hours on a device that yields black
// frames 10% of the time when capturing without a visible preview.
inline Scenario preset_camera_spy() {
  Scenario sc;
  sc.name = "camera-spy";
  sc.seed = 42;
  sc.horizon_ms = 7'200'000;
  sc.platform = PlatformName::pie;
  sc.profile.black_image_probability = 0.1;
  sc.apps.push_back(detail::spy_app({Permission::camera}));
  StrategyAction capture;
  capture.kind = StrategyAction::Kind::capture_image;
  sc.strategies.push_back(
      detail::chain_strategy("camera-chain", {capture}));
  return sc;
}

// One long microphone recording spanning several chain cycles: the session
// outlives each carrier service because recording runs in the media server.
inline Scenario preset_mic_spy() {
  Scenario sc;
  sc.name = "mic-spy";
  sc.seed = 42;
  sc.horizon_ms = 3'600'000;
  sc.platform = PlatformName::pie;
  sc.apps.push_back(detail::spy_app({Permission::record_audio}));
  StrategyAction mic;
  mic.kind = StrategyAction::Kind::mic_toggle;
  mic.start_cycle = 0;
  mic.stop_cycle = 5;
  sc.strategies.push_back(detail::chain_strategy("mic-chain", {mic}));
  return sc;
}

// Typed location foreground service on the newest platform: while-in-use
// grant plus a declared location service type unlocks per-second updates.
inline Scenario preset_location_spy() {
  Scenario sc;
  sc.name = "location-spy";
  sc.seed = 42;
  sc.horizon_ms = 3'600'000;
  sc.platform = PlatformName::ten;
  sc.apps.push_back(
      detail::spy_app({Permission::location}, GrantLevel::while_in_use));
  StrategyAction burst;
  burst.kind = StrategyAction::Kind::location_burst;
  burst.cadence_ms = 1'000;
  StrategySpec st = detail::chain_strategy("location-chain", {burst});
  st.service_type = ServiceType::location;
  sc.strategies.push_back(std::move(st));
  return sc;
}

// Enumerate external storage and drain it over wifi, one file per cycle.
inline Scenario preset_exfil() {
  Scenario sc;
  sc.name = "exfil";
  sc.seed = 42;
  sc.horizon_ms = 7'200'000;
  sc.platform = PlatformName::pie;
  sc.files = detail::photo_library(24);
  sc.apps.push_back(detail::spy_app({Permission::file_storage}));
  StrategyAction list;
  list.kind = StrategyAction::Kind::list_files;
  StrategyAction upload;
  upload.kind = StrategyAction::Kind::upload;
  sc.strategies.push_back(
      detail::chain_strategy("exfil-chain", {list, upload}));
  return sc;
}

// Full campaign: camera, microphone, location, and storage drain in every
// cycle, next to a legitimate music app whose service keeps its
// notification. This is the scenario the monitor thresholds are aimed at.
inline Scenario preset_combined() {
  Scenario sc;
  sc.name = "combined";
  sc.seed = 42;
  sc.horizon_ms = 7'200'000;
  sc.platform = PlatformName::pie;
  sc.profile.black_image_probability = 0.1;
  sc.files = detail::photo_library(24);
  sc.apps.push_back(detail::spy_app({Permission::camera,
                                     Permission::record_audio,
                                     Permission::location,
                                     Permission::file_storage}));
  AppSpec music;
  music.id = "music-app";
  music.ui_schedule.push_back(UiEvent{0, true});
  music.ui_schedule.push_back(UiEvent{60'000, false});
  music.services.push_back(TimedService{0, 7'200'000, "Now playing"});
  sc.apps.push_back(std::move(music));
  StrategyAction capture;
  capture.kind = StrategyAction::Kind::capture_image;
  StrategyAction mic;
  mic.kind = StrategyAction::Kind::mic_toggle;
  StrategyAction burst;
  burst.kind = StrategyAction::Kind::location_burst;
  burst.cadence_ms = 1'000;
  StrategyAction list;
  list.kind = StrategyAction::Kind::list_files;
  StrategyAction upload;
  upload.kind = StrategyAction::Kind::upload;
  sc.strategies.push_back(detail::chain_strategy(
      "combined-chain", {capture, mic, burst, list, upload}));
  return sc;
}

inline std::vector<std::string> preset_names() {
  return {"camera-spy", "mic-spy", "location-spy", "exfil", "combined"};
}

inline std::optional<Scenario> make_preset(const std::string& name) {
  if (name == "camera-spy") return preset_camera_spy();
  if (name == "mic-spy") return preset_mic_spy();
  if (name == "location-spy") return preset_location_spy();
  if (name == "exfil") return preset_exfil();
  if (name == "combined") return preset_combined();
  return std::nullopt;
}

}  // namespace bgsim
