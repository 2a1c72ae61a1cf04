#pragma once
// World: composition root. Owns the kernel, the trace, every OS subsystem,
// the attacker strategies, and the monitor, wired so that:
//   - every trace record is fed to the monitor as it is appended;
//   - device changes re-evaluate waiting jobs;
//   - doze maintenance windows release deferred work;
//   - entering idle hides all app UIs;
//   - a battery stop-app verdict tears down the app's services and jobs;
//   - with mitigation on, monitor recommendations are applied between events
//     (notify-user posts a visible system notification, revoke drops grants).
// Construction performs all scenario setup; run() advances to the horizon.

#include <cstdint>
#include <memory>
#include <optional>
#include <string>
#include <utility>

#include <nlohmann/json.hpp>

#include "bgsim/apps.hpp"
#include "bgsim/device.hpp"
#include "bgsim/kernel.hpp"
#include "bgsim/lifecycle.hpp"
#include "bgsim/monitor.hpp"
#include "bgsim/permissions.hpp"
#include "bgsim/rng.hpp"
#include "bgsim/scenario.hpp"
#include "bgsim/schedulers.hpp"
#include "bgsim/sensors.hpp"
#include "bgsim/strategies.hpp"
#include "bgsim/trace.hpp"
#include "bgsim/types.hpp"

namespace bgsim {

class World {
 public:
  explicit World(Scenario scenario,
                 std::optional<bool> mitigation_override = std::nullopt,
                 std::optional<std::uint64_t> seed_override = std::nullopt)
      : scenario_(apply_overrides_(std::move(scenario), mitigation_override,
                                   seed_override)),
        rng_(scenario_.seed),
        trace_(make_header_(scenario_), [this] { return kernel_.now(); }),
        device_(kernel_, trace_, PlatformVersion::make(scenario_.platform),
                scenario_.profile, scenario_.initial_device),
        permissions_(kernel_, trace_, scenario_.revocation),
        lifecycle_(kernel_, trace_, apps_, device_),
        scheduler_(kernel_, trace_, device_, permissions_),
        sensors_(kernel_, trace_, device_, permissions_, lifecycle_, rng_,
                 scenario_.sensor_config),
        engine_(kernel_, trace_, lifecycle_, scheduler_, sensors_, device_),
        monitor_(scenario_.monitor) {
    wire_();
    setup_();
  }

  World(const World&) = delete;
  World& operator=(const World&) = delete;

  // Dispatches everything up to the horizon, then closes monitor windows.
  std::uint64_t run() {
    if (finished_) throw SimError(Err::illegal_state, "world already ran");
    std::uint64_t dispatched = kernel_.run_until(scenario_.horizon_ms);
    monitor_.finish();
    finished_ = true;
    return dispatched;
  }

  nlohmann::ordered_json report() const {
    nlohmann::ordered_json j;
    j["schema"] = "bgsim-report/1";
    j["scenario"] = scenario_.name;
    j["seed"] = scenario_.seed;
    j["horizon_ms"] = scenario_.horizon_ms;
    j["mitigation"] = scenario_.mitigation;
    nlohmann::ordered_json strategies = nlohmann::ordered_json::array();
    for (std::size_t i = 0; i < engine_.size(); ++i) {
      const StrategySpec& sp = engine_.spec(i);
      const StrategyRunStats st = engine_.stats(i);
      nlohmann::ordered_json sj;
      sj["name"] = sp.name;
      sj["app"] = sp.app;
      sj["cycles_executed"] = st.cycles_executed;
      sj["notifications_leaked"] = st.notifications_leaked;
      sj["black_frames"] = st.black_frames;
      sj["recorded_ms"] = st.recorded_ms;
      sj["uploaded_bytes"] = st.uploaded_bytes;
      nlohmann::ordered_json items = nlohmann::ordered_json::object();
      for (const auto& [kind, count] : st.data_items_collected) {
        items[kind] = count;
      }
      sj["data_items_collected"] = std::move(items);
      nlohmann::ordered_json errs = nlohmann::ordered_json::object();
      for (const auto& [code, count] : st.errors_encountered) {
        errs[code] = count;
      }
      sj["errors_encountered"] = std::move(errs);
      sj["total_collected"] = st.total_collected();
      strategies.push_back(std::move(sj));
    }
    j["strategies"] = std::move(strategies);
    j["monitor"] = monitor_.report().to_json();
    return j;
  }

  const Scenario& scenario() const { return scenario_; }
  Kernel& kernel() { return kernel_; }
  TraceLog& trace() { return trace_; }
  AppRegistry& app_registry() { return apps_; }
  DeviceModel& device() { return device_; }
  PermissionTable& permissions() { return permissions_; }
  Lifecycle& lifecycle() { return lifecycle_; }
  JobScheduler& scheduler() { return scheduler_; }
  Sensors& sensors() { return sensors_; }
  StrategyEngine& engine() { return engine_; }
  Monitor& monitor() { return monitor_; }

 private:
  static Scenario apply_overrides_(Scenario sc,
                                   std::optional<bool> mitigation,
                                   std::optional<std::uint64_t> seed) {
    if (mitigation) sc.mitigation = *mitigation;
    if (seed) sc.seed = *seed;
    return sc;
  }

  static TraceHeader make_header_(const Scenario& sc) {
    TraceHeader h;
    h.seed = sc.seed;
    h.scenario = sc.name;
    h.horizon_ms = sc.horizon_ms;
    h.mitigation = sc.mitigation;
    h.monitor = detail::monitor_to_json(sc.monitor);
    return h;
  }

  void wire_() {
    trace_.add_listener([this](const TraceRecord& rec) {
      Status st = monitor_.ingest(rec);
      if (!st) {
        throw SimError(st.error(), "monitor rejected a trace record");
      }
    });
    device_.set_on_change([this] { scheduler_.re_evaluate(); });
    device_.set_on_maintenance_window(
        [this] { scheduler_.maintenance_release(); });
    device_.set_on_idle_forces_ui_hidden(
        [this] { lifecycle_.force_all_ui_hidden(); });
    device_.set_on_stop_app([this](const AppId& app) {
      lifecycle_.stop_all_services(app, "battery");
      scheduler_.cancel_app(app);
    });
    kernel_.set_post_dispatch([this] { drain_recommendations_(); });
  }

  // Applied between events so a revocation takes effect before the next
  // scheduled sensor access; with mitigation off the queue keeps pending
  // entries but the report is unaffected (it reads the issued history).
  void drain_recommendations_() {
    if (!scenario_.mitigation) return;
    for (const Recommendation& rec : monitor_.take_recommendations()) {
      switch (rec.action) {
        case Recommendation::Action::notify_user:
          trace_.append("system", "notification-posted", "monitor-warning",
                        "ok", Visibility::visible, {{"app", rec.app}});
          break;
        case Recommendation::Action::revoke:
          if (rec.permission) {
            permissions_.revoke(rec.app, *rec.permission, "monitor");
          }
          break;
        case Recommendation::Action::none:
          break;
      }
    }
  }

  void setup_() {
    for (const AppSpec& app : scenario_.apps) {
      apps_.install(app.id);
      for (const GrantSpec& g : app.grants) {
        Status st = permissions_.grant(app.id, g.permission, g.level, g.expiry);
        if (!st) {
          throw SimError(Err::validation_error,
                         "initial grant rejected for app " + app.id);
        }
      }
      if (app.notifications_disabled) {
        lifecycle_.user_disable_notifications(app.id);
      }
      for (const UiEvent& e : app.ui_schedule) {
        kernel_.schedule(e.t, EventKind::device_change,
                         [this, id = app.id, visible = e.visible] {
                           lifecycle_.set_ui_visible(id, visible, "user");
                         });
      }
      for (const TimedService& svc : app.services) {
        auto sid = std::make_shared<ServiceId>(0);
        kernel_.schedule(svc.start_ms, EventKind::service_start,
                         [this, id = app.id, content = svc.content, sid] {
                           auto started =
                               lifecycle_.start_foreground_service(id, content);
                           if (started) *sid = started.value();
                         });
        kernel_.schedule(svc.start_ms + svc.duration_ms,
                         EventKind::service_stop, [this, sid] {
                           if (*sid != 0) {
                             // May already be gone (battery stop); ignore.
                             (void)lifecycle_.stop_foreground(*sid, true,
                                                              "app");
                           }
                         });
      }
    }
    for (const StoredFile& f : scenario_.files) sensors_.add_file(f);
    for (const TimedDeviceChange& c : scenario_.device_timeline) {
      kernel_.schedule(c.t, EventKind::device_change, [this, ch = c.change] {
        device_.apply_device_change(ch);
      });
    }
    for (const StrategySpec& st : scenario_.strategies) {
      Status s = engine_.install(st);
      if (!s) {
        throw SimError(Err::validation_error,
                       "strategy install rejected: " + st.name);
      }
    }
  }

  Scenario scenario_;
  Kernel kernel_;
  Rng rng_;
  TraceLog trace_;
  AppRegistry apps_;
  DeviceModel device_;
  PermissionTable permissions_;
  Lifecycle lifecycle_;
  JobScheduler scheduler_;
  Sensors sensors_;
  StrategyEngine engine_;
  Monitor monitor_;
  bool finished_ = false;
};

}  // namespace bgsim
