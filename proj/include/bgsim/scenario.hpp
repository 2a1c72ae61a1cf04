#pragma once
// Scenario files: one JSON document describing the device, the installed
// apps with their grants and UI activity, the attacker strategies, the
// monitor configuration, and the run parameters. load_scenario validates
// semantics up front so the simulation itself never sees an inconsistent
// world; every rule the core enforces at runtime is also rejected here.

#include <cstdint>
#include <istream>
#include <optional>
#include <set>
#include <sstream>
#include <string>
#include <vector>

#include <nlohmann/json.hpp>

#include "bgsim/device.hpp"
#include "bgsim/monitor.hpp"
#include "bgsim/permissions.hpp"
#include "bgsim/sensors.hpp"
#include "bgsim/strategies.hpp"
#include "bgsim/types.hpp"

namespace bgsim {

struct GrantSpec {
  Permission permission = Permission::camera;
  GrantLevel level = GrantLevel::granted;
  SimTime expiry = 0;  // time-boxed only
};

struct UiEvent {
  SimTime t = 0;
  bool visible = false;
};

// A plain, honest foreground-service run (music player, navigation): starts
// at start_ms, stops duration_ms later, keeps its notification.
struct TimedService {
  SimTime start_ms = 0;
  SimTime duration_ms = 0;
  std::string content = "Running";
};

struct AppSpec {
  AppId id;
  std::vector<GrantSpec> grants;
  std::vector<UiEvent> ui_schedule;
  std::vector<TimedService> services;
  bool notifications_disabled = false;
};

struct TimedDeviceChange {
  SimTime t = 0;
  DeviceChange change;
};

struct Scenario {
  std::string name = "unnamed";
  std::uint64_t seed = 1;
  SimTime horizon_ms = 0;
  PlatformName platform = PlatformName::pie;
  DeviceProfile profile;
  DeviceState initial_device;
  SensorConfig sensor_config;
  std::vector<StoredFile> files;
  std::vector<AppSpec> apps;
  std::vector<TimedDeviceChange> device_timeline;
  std::vector<StrategySpec> strategies;
  MonitorConfig monitor;
  RevocationPolicy revocation;
  bool mitigation = false;

  bool app_declared(const AppId& id) const {
    for (const AppSpec& a : apps) {
      if (a.id == id) return true;
    }
    return false;
  }
};

// ---- validation -----------------------------------------------------------

// Semantic checks after structural parsing. Returns human-readable messages;
// empty means valid.
inline std::vector<std::string> validate_scenario(const Scenario& sc) {
  std::vector<std::string> errors;
  auto fail = [&errors](std::string msg) { errors.push_back(std::move(msg)); };

  if (sc.horizon_ms <= 0) fail("horizon_ms must be positive");
  if (sc.monitor.window_ms <= 0) fail("monitor.window_ms must be positive");
  if (sc.profile.notification_grace_ms < 0) {
    fail("profile.notification_grace_ms must be non-negative");
  }
  if (sc.profile.black_image_probability < 0.0 ||
      sc.profile.black_image_probability > 1.0) {
    fail("profile.black_image_probability must be within [0,1]");
  }
  if ((sc.revocation.mode == RevocationPolicy::Mode::auto_unused ||
       sc.revocation.mode == RevocationPolicy::Mode::time_boxed_default) &&
      sc.revocation.ttl_ms <= 0) {
    fail("revocation_policy.ttl_ms must be positive for mode " +
         std::string(to_string(sc.revocation.mode)));
  }

  std::set<AppId> ids;
  for (const AppSpec& app : sc.apps) {
    if (app.id.empty()) fail("app id must be non-empty");
    if (!ids.insert(app.id).second) fail("duplicate app id: " + app.id);
    for (const GrantSpec& g : app.grants) {
      if (g.level == GrantLevel::while_in_use) {
        if (g.permission != Permission::location) {
          fail("app " + app.id + ": while-in-use is only legal for location");
        }
        if (sc.platform != PlatformName::ten) {
          fail("app " + app.id +
               ": while-in-use location requires platform ten");
        }
      }
      if (g.level == GrantLevel::time_boxed && g.expiry <= 0) {
        fail("app " + app.id + ": time-boxed grant needs expiry > 0");
      }
    }
    for (const UiEvent& e : app.ui_schedule) {
      if (e.t < 0) fail("app " + app.id + ": ui_schedule times must be >= 0");
    }
    for (const TimedService& s : app.services) {
      if (s.start_ms < 0 || s.duration_ms < 0) {
        fail("app " + app.id + ": service times must be >= 0");
      }
    }
  }

  std::set<std::string> strategy_names;
  for (const StrategySpec& st : sc.strategies) {
    if (st.name.empty()) fail("strategy name must be non-empty");
    if (!strategy_names.insert(st.name).second) {
      fail("duplicate strategy name: " + st.name);
    }
    if (!sc.app_declared(st.app)) {
      fail("strategy " + st.name + " references undeclared app: " + st.app);
    }
    if (st.actions.empty()) fail("strategy " + st.name + " has no actions");
    if (st.fgs_budget_ms < 0) {
      fail("strategy " + st.name + ": fgs_budget_ms must be >= 0");
    }
    if (st.chain_delay_ms <= 0) {
      fail("strategy " + st.name + ": chain_delay_ms must be positive");
    }
    if (st.start_ms < 0) {
      fail("strategy " + st.name + ": start_ms must be >= 0");
    }
    for (const StrategyAction& a : st.actions) {
      if (a.kind == StrategyAction::Kind::location_burst &&
          a.cadence_ms <= 0) {
        fail("strategy " + st.name + ": location-burst cadence must be > 0");
      }
    }
  }

  for (const TimedDeviceChange& c : sc.device_timeline) {
    if (c.t < 0) fail("device_timeline times must be >= 0");
  }
  return errors;
}

// ---- JSON (de)serialization ----------------------------------------------

namespace detail {

inline nlohmann::ordered_json profile_to_json(const DeviceProfile& p) {
  nlohmann::ordered_json j;
  j["name"] = p.name;
  j["notification_grace_ms"] = p.notification_grace_ms;
  j["black_image_probability"] = p.black_image_probability;
  j["location_icon_always_visible"] = p.location_icon_always_visible;
  j["doze_maintenance_interval_ms"] = p.doze_maintenance_interval_ms;
  j["battery_budget_sensor_actions"] = p.battery_budget_sensor_actions;
  j["battery_budget_fgs_runtime_ms"] = p.battery_budget_fgs_runtime_ms;
  j["battery_budget_window_ms"] = p.battery_budget_window_ms;
  return j;
}

inline DeviceProfile profile_from_json(const nlohmann::ordered_json& j) {
  DeviceProfile p;
  p.name = j.value("name", p.name);
  p.notification_grace_ms =
      j.value("notification_grace_ms", p.notification_grace_ms);
  p.black_image_probability =
      j.value("black_image_probability", p.black_image_probability);
  p.location_icon_always_visible =
      j.value("location_icon_always_visible", p.location_icon_always_visible);
  p.doze_maintenance_interval_ms =
      j.value("doze_maintenance_interval_ms", p.doze_maintenance_interval_ms);
  p.battery_budget_sensor_actions =
      j.value("battery_budget_sensor_actions", p.battery_budget_sensor_actions);
  p.battery_budget_fgs_runtime_ms =
      j.value("battery_budget_fgs_runtime_ms", p.battery_budget_fgs_runtime_ms);
  p.battery_budget_window_ms =
      j.value("battery_budget_window_ms", p.battery_budget_window_ms);
  return p;
}

inline nlohmann::ordered_json monitor_to_json(const MonitorConfig& m) {
  nlohmann::ordered_json j;
  j["window_ms"] = m.window_ms;
  j["suspicious_invisible_fgs"] = m.suspicious_invisible_fgs;
  j["abusive_invisible_fgs"] = m.abusive_invisible_fgs;
  j["abusive_hidden_accesses"] = m.abusive_hidden_accesses;
  j["suspicious_exfil_bytes"] = m.suspicious_exfil_bytes;
  j["abusive_exfil_bytes"] = m.abusive_exfil_bytes;
  j["dormant_windows"] = m.dormant_windows;
  j["spike_hidden_accesses"] = m.spike_hidden_accesses;
  return j;
}

inline MonitorConfig monitor_from_json(const nlohmann::ordered_json& j) {
  MonitorConfig m;
  m.window_ms = j.value("window_ms", m.window_ms);
  m.suspicious_invisible_fgs =
      j.value("suspicious_invisible_fgs", m.suspicious_invisible_fgs);
  m.abusive_invisible_fgs =
      j.value("abusive_invisible_fgs", m.abusive_invisible_fgs);
  m.abusive_hidden_accesses =
      j.value("abusive_hidden_accesses", m.abusive_hidden_accesses);
  m.suspicious_exfil_bytes =
      j.value("suspicious_exfil_bytes", m.suspicious_exfil_bytes);
  m.abusive_exfil_bytes = j.value("abusive_exfil_bytes", m.abusive_exfil_bytes);
  m.dormant_windows = j.value("dormant_windows", m.dormant_windows);
  m.spike_hidden_accesses =
      j.value("spike_hidden_accesses", m.spike_hidden_accesses);
  return m;
}

// Throws json exceptions / SimError(parse_error); load_scenario catches.
inline Scenario scenario_from_json_impl(const nlohmann::ordered_json& j) {
  auto bad = [](const std::string& what) -> SimError {
    return SimError(Err::parse_error, what);
  };
  Scenario sc;
  sc.name = j.value("name", sc.name);
  sc.seed = j.value("seed", sc.seed);
  sc.horizon_ms = j.value("horizon_ms", SimTime{0});
  if (j.contains("platform")) {
    auto p = platform_from_string(j["platform"].get<std::string>());
    if (!p) throw bad("unknown platform: " + j["platform"].get<std::string>());
    sc.platform = *p;
  }
  if (j.contains("profile")) sc.profile = profile_from_json(j["profile"]);
  if (j.contains("device")) {
    const auto& d = j["device"];
    sc.initial_device.battery_pct =
        d.value("battery_pct", sc.initial_device.battery_pct);
    sc.initial_device.charging =
        d.value("charging", sc.initial_device.charging);
    sc.initial_device.idle = d.value("idle", sc.initial_device.idle);
    if (d.contains("network")) {
      auto n = network_from_string(d["network"].get<std::string>());
      if (!n) throw bad("unknown network: " + d["network"].get<std::string>());
      sc.initial_device.network = *n;
    }
  }
  if (j.contains("sensor_config")) {
    const auto& s = j["sensor_config"];
    sc.sensor_config.wifi_bytes_per_ms =
        s.value("wifi_bytes_per_ms", sc.sensor_config.wifi_bytes_per_ms);
    sc.sensor_config.cellular_bytes_per_ms = s.value(
        "cellular_bytes_per_ms", sc.sensor_config.cellular_bytes_per_ms);
    sc.sensor_config.background_location_cap_per_hour =
        s.value("background_location_cap_per_hour",
                sc.sensor_config.background_location_cap_per_hour);
  }
  for (const auto& f : j.value("files", nlohmann::ordered_json::array())) {
    StoredFile file;
    file.path = f.at("path").get<std::string>();
    file.size_bytes = f.value("size_bytes", std::uint64_t{0});
    file.location_metadata = f.value("location_metadata", false);
    sc.files.push_back(std::move(file));
  }
  for (const auto& a : j.value("apps", nlohmann::ordered_json::array())) {
    AppSpec app;
    app.id = a.at("id").get<std::string>();
    app.notifications_disabled = a.value("notifications_disabled", false);
    for (const auto& g :
         a.value("grants", nlohmann::ordered_json::array())) {
      GrantSpec grant;
      auto perm = permission_from_string(g.at("permission").get<std::string>());
      if (!perm) {
        throw bad("unknown permission: " +
                  g.at("permission").get<std::string>());
      }
      grant.permission = *perm;
      auto level = grant_level_from_string(g.value("level", "granted"));
      if (!level) throw bad("unknown grant level: " + g.value("level", ""));
      grant.level = *level;
      grant.expiry = g.value("expiry", SimTime{0});
      app.grants.push_back(grant);
    }
    for (const auto& u :
         a.value("ui_schedule", nlohmann::ordered_json::array())) {
      app.ui_schedule.push_back(
          UiEvent{u.at("t").get<SimTime>(), u.at("visible").get<bool>()});
    }
    for (const auto& s :
         a.value("services", nlohmann::ordered_json::array())) {
      TimedService svc;
      svc.start_ms = s.at("start_ms").get<SimTime>();
      svc.duration_ms = s.at("duration_ms").get<SimTime>();
      svc.content = s.value("content", svc.content);
      app.services.push_back(std::move(svc));
    }
    sc.apps.push_back(std::move(app));
  }
  for (const auto& c :
       j.value("device_timeline", nlohmann::ordered_json::array())) {
    TimedDeviceChange tc;
    tc.t = c.at("t").get<SimTime>();
    const std::string kind = c.at("change").get<std::string>();
    if (kind == "charging") {
      tc.change.kind = DeviceChange::Kind::charging;
      tc.change.flag = c.at("value").get<bool>();
    } else if (kind == "idle") {
      tc.change.kind = DeviceChange::Kind::idle;
      tc.change.flag = c.at("value").get<bool>();
    } else if (kind == "network") {
      tc.change.kind = DeviceChange::Kind::network;
      auto n = network_from_string(c.at("network").get<std::string>());
      if (!n) throw bad("unknown network: " + c.at("network").get<std::string>());
      tc.change.network = *n;
    } else if (kind == "battery_delta") {
      tc.change.kind = DeviceChange::Kind::battery_delta;
      tc.change.delta = c.at("delta").get<int>();
    } else {
      throw bad("unknown device change: " + kind);
    }
    sc.device_timeline.push_back(tc);
  }
  for (const auto& s :
       j.value("strategies", nlohmann::ordered_json::array())) {
    StrategySpec st;
    st.name = s.at("name").get<std::string>();
    st.app = s.at("app").get<std::string>();
    st.start_ms = s.value("start_ms", st.start_ms);
    st.chain_delay_ms = s.value("chain_delay_ms", st.chain_delay_ms);
    st.fgs_budget_ms = s.value("fgs_budget_ms", st.fgs_budget_ms);
    st.notification_content =
        s.value("notification_content", st.notification_content);
    if (s.contains("service_type")) {
      const std::string t = s["service_type"].get<std::string>();
      st.service_type =
          t == "location" ? ServiceType::location : ServiceType::none;
    }
    for (const auto& a : s.value("actions", nlohmann::ordered_json::array())) {
      StrategyAction action;
      auto kind = strategy_action_from_string(a.at("kind").get<std::string>());
      if (!kind) throw bad("unknown action: " + a.at("kind").get<std::string>());
      action.kind = *kind;
      action.cadence_ms = a.value("cadence_ms", action.cadence_ms);
      action.duration_ms = a.value("duration_ms", action.duration_ms);
      if (a.contains("start_cycle")) {
        action.start_cycle = a["start_cycle"].get<std::uint64_t>();
      }
      if (a.contains("stop_cycle")) {
        action.stop_cycle = a["stop_cycle"].get<std::uint64_t>();
      }
      action.path = a.value("path", action.path);
      action.max_size_bytes = a.value("max_size_bytes", action.max_size_bytes);
      st.actions.push_back(std::move(action));
    }
    if (s.contains("constraints")) {
      const auto& c = s["constraints"];
      st.constraints.requires_charging = c.value("requires_charging", false);
      st.constraints.requires_battery_not_low =
          c.value("requires_battery_not_low", false);
      st.constraints.requires_device_idle =
          c.value("requires_device_idle", false);
      if (c.contains("required_network")) {
        auto n = required_network_from_string(
            c["required_network"].get<std::string>());
        if (!n) {
          throw bad("unknown required_network: " +
                    c["required_network"].get<std::string>());
        }
        st.constraints.required_network = *n;
      }
      st.constraints.persisted = c.value("persisted", false);
    }
    sc.strategies.push_back(std::move(st));
  }
  if (j.contains("monitor")) sc.monitor = monitor_from_json(j["monitor"]);
  if (j.contains("revocation_policy")) {
    const auto& r = j["revocation_policy"];
    const std::string mode = r.value("mode", "off");
    if (mode == "off") {
      sc.revocation.mode = RevocationPolicy::Mode::off;
    } else if (mode == "auto-unused") {
      sc.revocation.mode = RevocationPolicy::Mode::auto_unused;
    } else if (mode == "one-time-default") {
      sc.revocation.mode = RevocationPolicy::Mode::one_time_default;
    } else if (mode == "time-boxed-default") {
      sc.revocation.mode = RevocationPolicy::Mode::time_boxed_default;
    } else {
      throw bad("unknown revocation mode: " + mode);
    }
    sc.revocation.ttl_ms = r.value("ttl_ms", SimTime{0});
  }
  sc.mitigation = j.value("mitigation", false);
  return sc;
}

}  // namespace detail

inline nlohmann::ordered_json scenario_to_json(const Scenario& sc) {
  nlohmann::ordered_json j;
  j["schema"] = "bgsim-scenario/1";
  j["name"] = sc.name;
  j["seed"] = sc.seed;
  j["horizon_ms"] = sc.horizon_ms;
  j["platform"] = std::string(to_string(sc.platform));
  j["profile"] = detail::profile_to_json(sc.profile);
  j["device"] = {{"battery_pct", sc.initial_device.battery_pct},
                 {"charging", sc.initial_device.charging},
                 {"network", std::string(to_string(sc.initial_device.network))},
                 {"idle", sc.initial_device.idle}};
  j["sensor_config"] = {
      {"wifi_bytes_per_ms", sc.sensor_config.wifi_bytes_per_ms},
      {"cellular_bytes_per_ms", sc.sensor_config.cellular_bytes_per_ms},
      {"background_location_cap_per_hour",
       sc.sensor_config.background_location_cap_per_hour}};
  nlohmann::ordered_json files = nlohmann::ordered_json::array();
  for (const StoredFile& f : sc.files) {
    files.push_back({{"path", f.path},
                     {"size_bytes", f.size_bytes},
                     {"location_metadata", f.location_metadata}});
  }
  j["files"] = std::move(files);
  nlohmann::ordered_json apps = nlohmann::ordered_json::array();
  for (const AppSpec& app : sc.apps) {
    nlohmann::ordered_json aj;
    aj["id"] = app.id;
    nlohmann::ordered_json grants = nlohmann::ordered_json::array();
    for (const GrantSpec& g : app.grants) {
      nlohmann::ordered_json gj;
      gj["permission"] = std::string(to_string(g.permission));
      gj["level"] = std::string(to_string(g.level));
      if (g.level == GrantLevel::time_boxed) gj["expiry"] = g.expiry;
      grants.push_back(std::move(gj));
    }
    aj["grants"] = std::move(grants);
    nlohmann::ordered_json ui = nlohmann::ordered_json::array();
    for (const UiEvent& e : app.ui_schedule) {
      ui.push_back({{"t", e.t}, {"visible", e.visible}});
    }
    aj["ui_schedule"] = std::move(ui);
    if (!app.services.empty()) {
      nlohmann::ordered_json svcs = nlohmann::ordered_json::array();
      for (const TimedService& s : app.services) {
        svcs.push_back({{"start_ms", s.start_ms},
                        {"duration_ms", s.duration_ms},
                        {"content", s.content}});
      }
      aj["services"] = std::move(svcs);
    }
    if (app.notifications_disabled) aj["notifications_disabled"] = true;
    apps.push_back(std::move(aj));
  }
  j["apps"] = std::move(apps);
  nlohmann::ordered_json timeline = nlohmann::ordered_json::array();
  for (const TimedDeviceChange& c : sc.device_timeline) {
    nlohmann::ordered_json cj;
    cj["t"] = c.t;
    switch (c.change.kind) {
      case DeviceChange::Kind::charging:
        cj["change"] = "charging";
        cj["value"] = c.change.flag;
        break;
      case DeviceChange::Kind::idle:
        cj["change"] = "idle";
        cj["value"] = c.change.flag;
        break;
      case DeviceChange::Kind::network:
        cj["change"] = "network";
        cj["network"] = std::string(to_string(c.change.network));
        break;
      case DeviceChange::Kind::battery_delta:
        cj["change"] = "battery_delta";
        cj["delta"] = c.change.delta;
        break;
    }
    timeline.push_back(std::move(cj));
  }
  j["device_timeline"] = std::move(timeline);
  nlohmann::ordered_json strategies = nlohmann::ordered_json::array();
  for (const StrategySpec& st : sc.strategies) {
    nlohmann::ordered_json sj;
    sj["name"] = st.name;
    sj["app"] = st.app;
    sj["start_ms"] = st.start_ms;
    sj["chain_delay_ms"] = st.chain_delay_ms;
    sj["fgs_budget_ms"] = st.fgs_budget_ms;
    sj["notification_content"] = st.notification_content;
    if (st.service_type) {
      sj["service_type"] = std::string(to_string(*st.service_type));
    }
    nlohmann::ordered_json actions = nlohmann::ordered_json::array();
    for (const StrategyAction& a : st.actions) {
      nlohmann::ordered_json aj;
      aj["kind"] = std::string(to_string(a.kind));
      if (a.kind == StrategyAction::Kind::location_burst) {
        aj["cadence_ms"] = a.cadence_ms;
        if (a.duration_ms > 0) aj["duration_ms"] = a.duration_ms;
      }
      if (a.start_cycle) aj["start_cycle"] = *a.start_cycle;
      if (a.stop_cycle) aj["stop_cycle"] = *a.stop_cycle;
      if (!a.path.empty()) aj["path"] = a.path;
      if (a.max_size_bytes > 0) aj["max_size_bytes"] = a.max_size_bytes;
      actions.push_back(std::move(aj));
    }
    sj["actions"] = std::move(actions);
    nlohmann::ordered_json cj;
    cj["requires_charging"] = st.constraints.requires_charging;
    cj["requires_battery_not_low"] = st.constraints.requires_battery_not_low;
    cj["requires_device_idle"] = st.constraints.requires_device_idle;
    if (st.constraints.required_network) {
      cj["required_network"] =
          std::string(to_string(*st.constraints.required_network));
    }
    cj["persisted"] = st.constraints.persisted;
    sj["constraints"] = std::move(cj);
    strategies.push_back(std::move(sj));
  }
  j["strategies"] = std::move(strategies);
  j["monitor"] = detail::monitor_to_json(sc.monitor);
  nlohmann::ordered_json rj;
  rj["mode"] = std::string(to_string(sc.revocation.mode));
  if (sc.revocation.ttl_ms > 0) rj["ttl_ms"] = sc.revocation.ttl_ms;
  j["revocation_policy"] = std::move(rj);
  j["mitigation"] = sc.mitigation;
  return j;
}

// Parses and validates. On validation failure, messages land in *errors
// (when provided) and the result is Err::validation_error; malformed JSON
// or structure is Err::parse_error.
inline Expected<Scenario> load_scenario(std::istream& in,
                                        std::vector<std::string>* errors =
                                            nullptr) {
  nlohmann::ordered_json j;
  try {
    j = nlohmann::ordered_json::parse(in);
  } catch (const nlohmann::json::exception& e) {
    if (errors != nullptr) errors->push_back(e.what());
    return Err::parse_error;
  }
  Scenario sc;
  try {
    sc = detail::scenario_from_json_impl(j);
  } catch (const nlohmann::json::exception& e) {
    if (errors != nullptr) errors->push_back(e.what());
    return Err::parse_error;
  } catch (const SimError& e) {
    if (errors != nullptr) errors->push_back(e.what());
    return Err::parse_error;
  }
  std::vector<std::string> problems = validate_scenario(sc);
  if (!problems.empty()) {
    if (errors != nullptr) *errors = std::move(problems);
    return Err::validation_error;
  }
  return sc;
}

inline Expected<Scenario> load_scenario_string(const std::string& text,
                                               std::vector<std::string>*
                                                   errors = nullptr) {
  std::istringstream in(text);
  return load_scenario(in, errors);
}

}  // namespace bgsim
