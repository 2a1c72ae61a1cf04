// The phone: platform restriction flags, per-device behavior profile, battery
// and connectivity state, doze maintenance windows, and the battery-usage
// watchdog that can notify the user or stop an app outright.

#pragma once

#include <algorithm>
#include <cstdint>
#include <functional>
#include <map>
#include <optional>
#include <set>
#include <string>
#include <vector>

#include "bgsim/kernel.hpp"
#include "bgsim/trace.hpp"
#include "bgsim/types.hpp"

namespace bgsim {

enum class PlatformName { oreo, pie, ten };

inline std::string_view to_string(PlatformName p) {
  switch (p) {
    case PlatformName::oreo: return "oreo";
    case PlatformName::pie: return "pie";
    case PlatformName::ten: return "ten";
  }
  return "oreo";
}

inline std::optional<PlatformName> platform_from_string(std::string_view s) {
  if (s == "oreo") return PlatformName::oreo;
  if (s == "pie") return PlatformName::pie;
  if (s == "ten") return PlatformName::ten;
  return std::nullopt;
}

// Restriction flags are monotone across releases: ten implies pie implies
// oreo restrictions.
struct PlatformVersion {
  PlatformName name = PlatformName::pie;
  bool bg_service_restriction = true;   // oreo+
  bool bg_sensor_restriction = true;    // pie+
  bool while_in_use_location = false;   // ten only
  SimTime periodic_floor_ms = 900'000;

  static PlatformVersion make(PlatformName name) {
    PlatformVersion v;
    v.name = name;
    v.bg_service_restriction = true;
    v.bg_sensor_restriction = name != PlatformName::oreo;
    v.while_in_use_location = name == PlatformName::ten;
    return v;
  }
};

// Knobs that vary phone to phone: the notification grace window, flaky-camera
// probability, vendor location-icon behavior, doze cadence, and the battery
// watchdog budget.
struct DeviceProfile {
  std::string name = "default";
  SimTime notification_grace_ms = 5000;
  double black_image_probability = 0.0;
  bool location_icon_always_visible = false;
  SimTime doze_maintenance_interval_ms = 900'000;
  int battery_budget_sensor_actions = 30;
  SimTime battery_budget_fgs_runtime_ms = 90'000;
  SimTime battery_budget_window_ms = 3'600'000;
};

struct DeviceState {
  int battery_pct = 100;
  bool charging = false;
  NetworkType network = NetworkType::wifi;
  bool idle = false;
};

struct DeviceChange {
  enum class Kind { charging, network, idle, battery_delta };
  Kind kind = Kind::charging;
  bool flag = false;          // charging / idle
  NetworkType network = NetworkType::none;
  int delta = 0;              // battery_delta
};

enum class BatteryVerdict { none, notify_user, stop_app };

inline std::string_view to_string(BatteryVerdict v) {
  switch (v) {
    case BatteryVerdict::none: return "none";
    case BatteryVerdict::notify_user: return "notify-user";
    case BatteryVerdict::stop_app: return "stop-app";
  }
  return "none";
}

// Per-app usage inside one battery-budget window.
struct UsageStats {
  int sensor_actions = 0;
  SimTime fgs_runtime_ms = 0;
};

class DeviceModel {
 public:
  DeviceModel(Kernel& kernel, TraceLog& trace, PlatformVersion version, DeviceProfile profile,
              DeviceState initial = {})
      : kernel_(kernel), trace_(trace), version_(version), profile_(std::move(profile)),
        state_(initial) {}

  const DeviceState& state() const { return state_; }
  const DeviceProfile& profile() const { return profile_; }
  const PlatformVersion& version() const { return version_; }

  // Battery predicate is pure over DeviceState: "not low" means strictly
  // above 15 percent.
  bool is_battery_not_low() const { return state_.battery_pct > 15; }

  // Applies one timed change, emits a device-change record, and triggers
  // constraint re-evaluation in whoever subscribed. Battery deltas that leave
  // [0,100] are clamped with a warning record.
  DeviceState apply_device_change(const DeviceChange& change) {
    const SimTime now = kernel_.now();
    switch (change.kind) {
      case DeviceChange::Kind::charging:
        state_.charging = change.flag;
        trace_.append("system", "device-change", "charging",
                      change.flag ? "true" : "false");
        break;
      case DeviceChange::Kind::network:
        state_.network = change.network;
        trace_.append("system", "device-change", "network",
                      std::string(to_string(change.network)));
        break;
      case DeviceChange::Kind::idle:
        set_idle_(change.flag);
        break;
      case DeviceChange::Kind::battery_delta: {
        const int raw = state_.battery_pct + change.delta;
        const int clamped = std::clamp(raw, 0, 100);
        state_.battery_pct = clamped;
        trace_.append("system", "device-change", "battery",
                      std::to_string(clamped));
        if (raw != clamped) {
          nlohmann::ordered_json detail;
          detail["requested_pct"] = raw;
          trace_.append("system", "device-change", "battery", "battery-range",
                        Visibility::na, detail);
        }
        break;
      }
    }
    if (on_change_) {
      // Re-evaluation runs as its own event at the current time so it
      // observes the finished state and stays ordered after this record.
      kernel_.schedule(now, EventKind::device_change, on_change_);
    }
    return state_;
  }

  // Clearing idle through the UI path (someone uses the phone).
  void exit_idle_if_needed() {
    if (state_.idle) {
      set_idle_(false);
      if (on_change_) {
        kernel_.schedule(kernel_.now(), EventKind::device_change, on_change_);
      }
    }
  }

  // Pure budget arithmetic plus escalation history: first crossing in a
  // window notifies, a crossing in a later window after a notify stops the
  // app. The verdict is recorded in the trace.
  BatteryVerdict check_battery_optimization(const AppId& app, const UsageStats& stats) {
    const bool over = stats.sensor_actions > profile_.battery_budget_sensor_actions ||
                      stats.fgs_runtime_ms > profile_.battery_budget_fgs_runtime_ms;
    BatteryVerdict verdict = BatteryVerdict::none;
    if (over) {
      verdict = prior_notify_.count(app) > 0 ? BatteryVerdict::stop_app
                                             : BatteryVerdict::notify_user;
    }
    nlohmann::ordered_json detail;
    detail["sensor_actions"] = stats.sensor_actions;
    detail["fgs_runtime_ms"] = stats.fgs_runtime_ms;
    trace_.append("system", "battery-verdict", app,
                  std::string(to_string(verdict)), Visibility::na, detail);
    if (verdict == BatteryVerdict::notify_user) {
      trace_.append("system", "notification-posted", app, "battery-warning",
                    Visibility::visible);
    }
    if (verdict == BatteryVerdict::stop_app) {
      stop_app_(app);
    }
    return verdict;
  }

  // Accumulation hooks; escalate at most once per budget window.
  void note_sensor_action(const AppId& app) {
    auto& w = window_for_(app);
    w.stats.sensor_actions += 1;
    maybe_escalate_(app, w);
  }

  void note_fgs_runtime(const AppId& app, SimTime runtime_ms) {
    auto& w = window_for_(app);
    w.stats.fgs_runtime_ms += runtime_ms;
    maybe_escalate_(app, w);
  }

  bool app_stopped(const AppId& app) const { return stopped_.count(app) > 0; }

  // Also the injection point for tests and scenario timelines.
  void force_stop_app(const AppId& app) { stop_app_(app); }

  void reenable_app(const AppId& app) { stopped_.erase(app); }

  void set_on_change(std::function<void()> fn) { on_change_ = std::move(fn); }
  void set_on_maintenance_window(std::function<void()> fn) { on_maintenance_ = std::move(fn); }
  void set_on_stop_app(std::function<void(const AppId&)> fn) { on_stop_app_ = std::move(fn); }
  void set_on_idle_forces_ui_hidden(std::function<void()> fn) {
    on_idle_forces_ui_hidden_ = std::move(fn);
  }

 private:
  struct BudgetWindow {
    std::int64_t index = -1;
    UsageStats stats;
    bool escalated = false;
  };

  void set_idle_(bool idle) {
    if (state_.idle == idle) {
      trace_.append("system", "device-change", "idle", idle ? "true" : "false");
      return;
    }
    state_.idle = idle;
    trace_.append("system", "device-change", "idle", idle ? "true" : "false");
    if (idle) {
      if (on_idle_forces_ui_hidden_) {
        on_idle_forces_ui_hidden_();
      }
      schedule_maintenance_();
    } else if (maintenance_event_ != 0) {
      kernel_.cancel(maintenance_event_);
      maintenance_event_ = 0;
    }
  }

  void schedule_maintenance_() {
    maintenance_event_ = kernel_.schedule(
        kernel_.now() + profile_.doze_maintenance_interval_ms, EventKind::device_change, [this] {
          maintenance_event_ = 0;
          if (!state_.idle) {
            return;
          }
          trace_.append("system", "device-change", "maintenance-window",
                        "open");
          if (on_maintenance_) {
            on_maintenance_();
          }
          schedule_maintenance_();
        });
  }

  BudgetWindow& window_for_(const AppId& app) {
    const std::int64_t index = kernel_.now() / profile_.battery_budget_window_ms;
    auto& w = budget_[app];
    if (w.index != index) {
      if (w.escalated) {
        prior_notify_.insert(app);
      }
      w = BudgetWindow{index, UsageStats{}, false};
    }
    return w;
  }

  void maybe_escalate_(const AppId& app, BudgetWindow& w) {
    if (w.escalated || stopped_.count(app) > 0) {
      return;
    }
    const bool over = w.stats.sensor_actions > profile_.battery_budget_sensor_actions ||
                      w.stats.fgs_runtime_ms > profile_.battery_budget_fgs_runtime_ms;
    if (over) {
      w.escalated = true;
      check_battery_optimization(app, w.stats);
    }
  }

  void stop_app_(const AppId& app) {
    if (!stopped_.insert(app).second) {
      return;
    }
    trace_.append("system", "app-stopped", app, "battery-optimization");
    if (on_stop_app_) {
      on_stop_app_(app);
    }
  }

  Kernel& kernel_;
  TraceLog& trace_;
  PlatformVersion version_;
  DeviceProfile profile_;
  DeviceState state_;
  std::map<AppId, BudgetWindow> budget_;
  std::set<AppId> prior_notify_;
  std::set<AppId> stopped_;
  EventId maintenance_event_ = 0;
  std::function<void()> on_change_;
  std::function<void()> on_maintenance_;
  std::function<void(const AppId&)> on_stop_app_;
  std::function<void()> on_idle_forces_ui_hidden_;
};

}  // namespace bgsim
