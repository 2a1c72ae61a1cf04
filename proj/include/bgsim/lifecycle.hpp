#pragma once
// Service lifecycle state machine plus the notification-manager model.
//
// The core mechanic is the grace-window race: a foreground service gets
// profile.notification_grace_ms of runtime before its sticky notification
// is posted. The expiry is a real queued event, not a check at stop time,
// so a stop racing the deadline is decided by event order: at the exact
// boundary the expiry event fires first (it was enqueued earlier) and the
// notification becomes visible. Runtime >= grace means the user saw it.

#include <functional>
#include <map>
#include <optional>
#include <set>
#include <string>
#include <utility>
#include <vector>

#include "bgsim/apps.hpp"
#include "bgsim/device.hpp"
#include "bgsim/kernel.hpp"
#include "bgsim/trace.hpp"
#include "bgsim/types.hpp"

namespace bgsim {

enum class ServiceKind { background, foreground };

inline std::string_view to_string(ServiceKind k) {
  return k == ServiceKind::foreground ? "foreground" : "background";
}

enum class ServiceState { created, started, foregrounded, stopped };

struct ServiceRecord {
  ServiceId id = 0;
  AppId app;
  ServiceKind kind = ServiceKind::background;
  ServiceType declared_type = ServiceType::none;
  ServiceState state = ServiceState::created;
  SimTime started_at = 0;
  SimTime stopped_at = 0;
  std::optional<SimTime> grace_deadline;  // set while the race is still open
  EventId grace_event = 0;
  NotificationId notification = 0;  // 0 until posted
  bool sticky = true;
};

struct NotificationRecord {
  NotificationId id = 0;
  AppId app;
  ServiceId service = 0;  // owning foreground service, 0 for none
  SimTime posted_at = 0;
  bool sticky = false;
  bool removed = false;
  Visibility visibility = Visibility::visible;
  std::string content;
};

struct StopReport {
  bool was_visible = false;  // user ever saw the sticky notification
  SimTime runtime_ms = 0;
};

class Lifecycle {
 public:
  Lifecycle(Kernel& kernel, TraceLog& trace, AppRegistry& apps,
            DeviceModel& device)
      : kernel_(kernel), trace_(trace), apps_(apps), device_(device) {}

  // ---- app UI state -------------------------------------------------------

  bool ui_visible(const AppId& app) const {
    auto it = ui_visible_.find(app);
    return it != ui_visible_.end() && it->second;
  }

  // Opening an app's UI also wakes the device from idle; closing it emits
  // the matching trace record only when the state actually flips.
  void set_ui_visible(const AppId& app, bool visible,
                      std::string_view cause = "user") {
    bool current = ui_visible(app);
    if (current == visible) return;
    ui_visible_[app] = visible;
    nlohmann::ordered_json detail;
    detail["cause"] = std::string(cause);
    trace_.append(app, "ui-change", "ui", visible ? "visible" : "hidden",
                  Visibility::na, detail);
    if (visible) device_.exit_idle_if_needed();
  }

  // Idle onset pushes every open UI off screen.
  void force_all_ui_hidden() {
    std::vector<AppId> open;
    for (const auto& [app, vis] : ui_visible_) {
      if (vis) open.push_back(app);
    }
    for (const auto& app : open) set_ui_visible(app, false, "idle");
  }

  // An app is visible to the user if its UI is open or it owns a live,
  // unsuppressed notification. Everything else it does is hidden.
  Visibility visibility_for(const AppId& app) const {
    if (ui_visible(app)) return Visibility::visible;
    for (const auto& [id, n] : notifications_) {
      if (n.app == app && !n.removed && n.visibility == Visibility::visible) {
        return Visibility::visible;
      }
    }
    return Visibility::hidden;
  }

  // ---- services -----------------------------------------------------------

  // Plain background start. Restricted platforms reject it whenever the
  // app's UI is closed, regardless of the calling context.
  Expected<ServiceId> start_background_service(const AppId& app,
                                               const ExecutionContext& ctx) {
    if (!apps_.installed(app)) return Err::unknown_app;
    if (device_.version().bg_service_restriction && !ui_visible(app)) {
      nlohmann::ordered_json detail;
      detail["kind"] = "background";
      detail["ctx"] = std::string(to_string(ctx.kind));
      trace_.append(app, "illegal-state", "service", "rejected",
                    Visibility::na, detail);
      return Err::illegal_state;
    }
    ServiceRecord rec;
    rec.id = next_service_id_++;
    rec.app = app;
    rec.kind = ServiceKind::background;
    rec.state = ServiceState::started;
    rec.started_at = kernel_.now();
    rec.sticky = false;
    services_[rec.id] = rec;
    nlohmann::ordered_json detail;
    detail["service"] = rec.id;
    trace_.append(app, "service-start", "background", "ok",
                  visibility_for(app), detail);
    return rec.id;
  }

  // Foreground start. Legal from any context, UI open or not; the price is
  // the sticky notification once the grace window lapses.
  Expected<ServiceId> start_foreground_service(
      const AppId& app, std::string notification_content,
      ServiceType declared_type = ServiceType::none) {
    if (!apps_.installed(app)) return Err::unknown_app;
    ServiceRecord rec;
    rec.id = next_service_id_++;
    rec.app = app;
    rec.kind = ServiceKind::foreground;
    rec.declared_type = declared_type;
    rec.state = ServiceState::foregrounded;
    rec.started_at = kernel_.now();
    rec.sticky = true;
    const SimTime deadline =
        kernel_.now() + device_.profile().notification_grace_ms;
    rec.grace_deadline = deadline;
    const ServiceId sid = rec.id;
    rec.grace_event =
        kernel_.schedule(deadline, EventKind::notification_grace_expiry,
                         [this, sid, content = std::move(notification_content)] {
                           on_grace_expiry_(sid, content);
                         });
    services_[rec.id] = rec;
    nlohmann::ordered_json detail;
    detail["service"] = rec.id;
    if (declared_type != ServiceType::none) {
      detail["service_type"] = std::string(to_string(declared_type));
    }
    trace_.append(app, "service-start", "foreground", "ok",
                  visibility_for(app), detail);
    return rec.id;
  }

  // Stop before the grace event fired and the notification never exists;
  // suppressed notifications also count as never seen.
  Expected<StopReport> stop_foreground(ServiceId service,
                                       bool remove_notification,
                                       std::string_view cause = "app") {
    auto it = services_.find(service);
    if (it == services_.end() ||
        it->second.state != ServiceState::foregrounded) {
      return Err::not_foregrounded;
    }
    ServiceRecord& rec = it->second;
    rec.state = ServiceState::stopped;
    rec.stopped_at = kernel_.now();
    if (rec.grace_event != 0) {
      kernel_.cancel(rec.grace_event);
      rec.grace_event = 0;
      rec.grace_deadline.reset();
    }
    StopReport report;
    report.runtime_ms = rec.stopped_at - rec.started_at;
    bool removed = false;
    if (rec.notification != 0) {
      auto& n = notifications_.at(rec.notification);
      report.was_visible = n.visibility == Visibility::visible;
      if (remove_notification && !n.removed) {
        n.removed = true;
        removed = true;
      }
    }
    device_.note_fgs_runtime(rec.app, report.runtime_ms);
    nlohmann::ordered_json detail;
    detail["service"] = rec.id;
    detail["kind"] = "foreground";
    detail["runtime_ms"] = report.runtime_ms;
    detail["was_visible"] = report.was_visible;
    if (removed) detail["notification_removed"] = true;
    if (cause != "app") detail["cause"] = std::string(cause);
    trace_.append(rec.app, "service-stop", "foreground", "ok",
                  visibility_for(rec.app), detail);
    if (on_service_stopped_) on_service_stopped_(rec.id);
    return report;
  }

  Status stop_background(ServiceId service) {
    auto it = services_.find(service);
    if (it == services_.end() || it->second.state != ServiceState::started) {
      return Err::not_running;
    }
    ServiceRecord& rec = it->second;
    rec.state = ServiceState::stopped;
    rec.stopped_at = kernel_.now();
    nlohmann::ordered_json detail;
    detail["service"] = rec.id;
    detail["kind"] = "background";
    trace_.append(rec.app, "service-stop", "background", "ok",
                  visibility_for(rec.app), detail);
    if (on_service_stopped_) on_service_stopped_(rec.id);
    return ok_status();
  }

  // Force-stop path (battery watchdog, user): kills every live service and
  // clears the app's notifications.
  void stop_all_services(const AppId& app, std::string_view cause) {
    std::vector<ServiceId> live;
    for (const auto& [id, rec] : services_) {
      if (rec.app != app) continue;
      if (rec.state == ServiceState::started ||
          rec.state == ServiceState::foregrounded) {
        live.push_back(id);
      }
    }
    for (ServiceId id : live) {
      const ServiceRecord& rec = services_.at(id);
      if (rec.state == ServiceState::foregrounded) {
        (void)stop_foreground(id, /*remove_notification=*/true, cause);
      } else {
        (void)stop_background(id);
      }
    }
  }

  // ---- notifications ------------------------------------------------------

  // The notification manager refuses to drop a sticky notification while
  // its service is still foregrounded; anything else is removable.
  bool app_cancel_notification(const AppId& app, NotificationId id) {
    auto it = notifications_.find(id);
    if (it == notifications_.end()) return false;
    NotificationRecord& n = it->second;
    if (n.app != app || n.removed) return false;
    if (n.sticky && n.service != 0) {
      auto sit = services_.find(n.service);
      if (sit != services_.end() &&
          sit->second.state == ServiceState::foregrounded) {
        return false;
      }
    }
    n.removed = true;
    return true;
  }

  void user_disable_notifications(const AppId& app) {
    notifications_disabled_.insert(app);
  }

  void user_enable_notifications(const AppId& app) {
    notifications_disabled_.erase(app);
  }

  bool notifications_disabled(const AppId& app) const {
    return notifications_disabled_.count(app) > 0;
  }

  // ---- queries ------------------------------------------------------------

  const ServiceRecord* find_service(ServiceId id) const {
    auto it = services_.find(id);
    return it == services_.end() ? nullptr : &it->second;
  }

  const NotificationRecord* find_notification(NotificationId id) const {
    auto it = notifications_.find(id);
    return it == notifications_.end() ? nullptr : &it->second;
  }

  bool service_live(ServiceId id) const {
    const ServiceRecord* rec = find_service(id);
    return rec != nullptr && (rec->state == ServiceState::started ||
                              rec->state == ServiceState::foregrounded);
  }

  std::vector<const ServiceRecord*> services_of(const AppId& app) const {
    std::vector<const ServiceRecord*> out;
    for (const auto& [id, rec] : services_) {
      if (rec.app == app) out.push_back(&rec);
    }
    return out;
  }

  // Execution context for code running inside a live foreground service.
  Expected<ExecutionContext> context_for(ServiceId id) const {
    const ServiceRecord* rec = find_service(id);
    if (rec == nullptr || rec->state != ServiceState::foregrounded) {
      return Err::not_foregrounded;
    }
    return ExecutionContext::foreground_service(rec->app, rec->id,
                                                rec->declared_type);
  }

  void set_on_service_stopped(std::function<void(ServiceId)> fn) {
    on_service_stopped_ = std::move(fn);
  }

 private:
  void on_grace_expiry_(ServiceId sid, const std::string& content) {
    auto it = services_.find(sid);
    if (it == services_.end() ||
        it->second.state != ServiceState::foregrounded) {
      return;  // lost the race: the notification is never created
    }
    ServiceRecord& rec = it->second;
    rec.grace_event = 0;
    rec.grace_deadline.reset();
    NotificationRecord n;
    n.id = next_notification_id_++;
    n.app = rec.app;
    n.service = rec.id;
    n.posted_at = kernel_.now();
    n.sticky = true;
    n.content = content;
    n.visibility = notifications_disabled(rec.app) ? Visibility::suppressed
                                                   : Visibility::visible;
    rec.notification = n.id;
    nlohmann::ordered_json detail;
    detail["service"] = rec.id;
    detail["notification"] = n.id;
    detail["content"] = n.content;
    const bool suppressed = n.visibility == Visibility::suppressed;
    trace_.append(rec.app,
                  suppressed ? "notification-suppressed" : "notification-posted",
                  "notification", "sticky", n.visibility, detail);
    notifications_[n.id] = std::move(n);
  }

  Kernel& kernel_;
  TraceLog& trace_;
  AppRegistry& apps_;
  DeviceModel& device_;

  std::map<ServiceId, ServiceRecord> services_;
  std::map<NotificationId, NotificationRecord> notifications_;
  std::map<AppId, bool> ui_visible_;
  std::set<AppId> notifications_disabled_;
  ServiceId next_service_id_ = 1;
  NotificationId next_notification_id_ = 1;
  std::function<void(ServiceId)> on_service_stopped_;
};

}  // namespace bgsim
