#pragma once
// Camera, microphone, location, and external-storage models.
//
// Camera: one exclusive lease; background contexts are rejected outright on
// restricted platforms, and captures can come back as black frames.
// Microphone: recordings are owned by the media-server actor, so a session
// started inside a four-second service keeps recording long after the
// service is gone. Location: background subscriptions are delivery-rate
// capped; a location-typed foreground service gets the full cadence.
// Storage: any holder of the file permission can enumerate and upload;
// transfer size is bandwidth times window.

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <functional>
#include <map>
#include <optional>
#include <string>
#include <string_view>
#include <utility>
#include <vector>

#include "bgsim/device.hpp"
#include "bgsim/kernel.hpp"
#include "bgsim/lifecycle.hpp"
#include "bgsim/permissions.hpp"
#include "bgsim/rng.hpp"
#include "bgsim/trace.hpp"
#include "bgsim/types.hpp"

namespace bgsim {

enum class CaptureResult { ok, black_frame };

inline std::string_view to_string(CaptureResult r) {
  return r == CaptureResult::black_frame ? "black-frame" : "ok";
}

struct CameraLease {
  LeaseId id = 0;
  std::string holder;  // app id, or a system actor like "face-unlock"
  bool system = false;
  SimTime acquired_at = 0;
  bool live = true;
};

struct RecordingSession {
  SessionId id = 0;
  AppId app;
  SimTime started_at = 0;
  std::optional<SimTime> stopped_at;  // open until mic_stop
};

struct LocationSubscriptionRecord {
  SubscriptionId id = 0;
  AppId app;
  ExecutionContext ctx;
  SimTime cadence_ms = 0;
  SimTime effective_cadence_ms = 0;
  bool foreground_typed = false;
  bool live = true;
  std::uint64_t delivered = 0;
};

struct StoredFile {
  std::string path;
  std::uint64_t size_bytes = 0;
  bool location_metadata = false;
};

struct UploadResult {
  std::uint64_t bytes = 0;
  bool complete = false;
};

// Network bandwidth and the background-location delivery cap. The cap value
// reads as "updates per hour"; a capped subscription's effective cadence is
// stretched so it cannot exceed it.
struct SensorConfig {
  double wifi_bytes_per_ms = 2000.0;      // 2 MB/s
  double cellular_bytes_per_ms = 500.0;   // 0.5 MB/s
  std::int64_t background_location_cap_per_hour = 4;
};

class Sensors {
 public:
  Sensors(Kernel& kernel, TraceLog& trace, DeviceModel& device,
          PermissionTable& permissions, Lifecycle& lifecycle, Rng& rng,
          SensorConfig config = {})
      : kernel_(kernel),
        trace_(trace),
        device_(device),
        permissions_(permissions),
        lifecycle_(lifecycle),
        rng_(rng),
        config_(config) {
    lifecycle_.set_on_service_stopped(
        [this](ServiceId id) { on_service_stopped_(id); });
  }

  const SensorConfig& config() const { return config_; }

  // ---- camera -------------------------------------------------------------

  // Lease granted iff (foreground-service context OR the platform has no
  // background sensor restriction) AND nobody else holds the camera.
  Expected<LeaseId> acquire_camera(const AppId& app,
                                   const ExecutionContext& ctx) {
    if (device_.version().bg_sensor_restriction &&
        !ctx.is_foreground_service()) {
      return deny_camera_(app, Err::illegal_state);
    }
    if (!permissions_.check_access(app, Permission::camera, ctx).allowed) {
      return deny_camera_(app, Err::permission_denied);
    }
    if (holder_ != 0) {
      return deny_camera_(app, Err::sensor_busy);
    }
    return grant_camera_(app, /*system=*/false);
  }

  // System actors (face unlock, the camera app's own preview) skip the
  // permission model but still contend for the one lease.
  Expected<LeaseId> system_acquire_camera(const std::string& actor) {
    if (holder_ != 0) {
      nlohmann::ordered_json detail;
      detail["error"] = std::string(to_string(Err::sensor_busy));
      trace_.append(actor, "sensor-deny", "camera",
                    std::string(to_string(Err::sensor_busy)), Visibility::na,
                    detail);
      return Err::sensor_busy;
    }
    return grant_camera_(actor, /*system=*/true);
  }

  Status release_camera(LeaseId id) {
    auto it = leases_.find(id);
    if (it == leases_.end() || !it->second.live) return Err::stale_lease;
    it->second.live = false;
    if (holder_ == id) holder_ = 0;
    return ok_status();
  }

  Expected<CaptureResult> capture_image(LeaseId id) {
    auto it = leases_.find(id);
    if (it == leases_.end() || !it->second.live) return Err::stale_lease;
    const CameraLease& lease = it->second;
    const CaptureResult result =
        rng_.bernoulli(device_.profile().black_image_probability)
            ? CaptureResult::black_frame
            : CaptureResult::ok;
    nlohmann::ordered_json detail;
    detail["lease"] = lease.id;
    trace_.append(lease.holder, "image-captured", "camera",
                  std::string(to_string(result)),
                  lease.system ? Visibility::na
                               : lifecycle_.visibility_for(lease.holder),
                  detail);
    if (!lease.system) device_.note_sensor_action(lease.holder);
    return result;
  }

  const CameraLease* camera_holder() const {
    if (holder_ == 0) return nullptr;
    return &leases_.at(holder_);
  }

  // ---- microphone ---------------------------------------------------------

  // Recording is handed to the media server, which does not care whether the
  // service that asked is still alive.
  Expected<SessionId> mic_start(const AppId& app,
                                const ExecutionContext& ctx) {
    if (device_.version().bg_sensor_restriction &&
        !ctx.is_foreground_service()) {
      return deny_(app, "microphone", Err::illegal_state);
    }
    if (!permissions_.check_access(app, Permission::record_audio, ctx)
             .allowed) {
      return deny_(app, "microphone", Err::permission_denied);
    }
    RecordingSession s;
    s.id = next_session_id_++;
    s.app = app;
    s.started_at = kernel_.now();
    nlohmann::ordered_json detail;
    detail["session"] = s.id;
    detail["owner"] = "media-server";
    trace_.append(app, "recording-start", "microphone", "ok",
                  lifecycle_.visibility_for(app), detail);
    device_.note_sensor_action(app);
    sessions_[s.id] = s;
    return s.id;
  }

  Expected<SimTime> mic_stop(SessionId id) {
    auto it = sessions_.find(id);
    if (it == sessions_.end() || it->second.stopped_at) {
      return Err::unknown_session;
    }
    RecordingSession& s = it->second;
    s.stopped_at = kernel_.now();
    const SimTime duration = *s.stopped_at - s.started_at;
    nlohmann::ordered_json detail;
    detail["session"] = s.id;
    detail["duration_ms"] = duration;
    trace_.append(s.app, "recording-stop", "microphone", "ok",
                  lifecycle_.visibility_for(s.app), detail);
    return duration;
  }

  std::vector<const RecordingSession*> open_sessions() const {
    std::vector<const RecordingSession*> out;
    for (const auto& [id, s] : sessions_) {
      if (!s.stopped_at) out.push_back(&s);
    }
    return out;
  }

  const RecordingSession* find_session(SessionId id) const {
    auto it = sessions_.find(id);
    return it == sessions_.end() ? nullptr : &it->second;
  }

  // ---- location -----------------------------------------------------------

  // Foreground-typed subscriptions get a fix at subscribe time and then one
  // per requested cadence; rate-capped ones start a full interval later so
  // the hourly budget holds from the first hour. Each delivery re-checks the
  // permission, so while-in-use grants go quiet the moment the context stops
  // qualifying, and revocations cut the stream mid-run.
  Expected<SubscriptionId> request_location_updates(
      const AppId& app, const ExecutionContext& ctx, SimTime cadence_ms) {
    auto level = permissions_.level_of(app, Permission::location);
    if (!level || *level == GrantLevel::denied) {
      return deny_(app, "location", Err::permission_denied);
    }
    if (device_.version().while_in_use_location &&
        ctx.is_foreground_service() &&
        ctx.service_type != ServiceType::location) {
      return deny_(app, "location", Err::missing_service_type);
    }
    LocationSubscriptionRecord sub;
    sub.id = next_subscription_id_++;
    sub.app = app;
    sub.ctx = ctx;
    sub.cadence_ms = std::max<SimTime>(cadence_ms, 1);
    sub.foreground_typed = ctx.is_foreground_service() &&
                           ctx.service_type == ServiceType::location;
    sub.effective_cadence_ms = sub.cadence_ms;
    if (!sub.foreground_typed) {
      const SimTime cap_interval =
          3'600'000 / std::max<std::int64_t>(
                          config_.background_location_cap_per_hour, 1);
      sub.effective_cadence_ms =
          std::max(sub.effective_cadence_ms, cap_interval);
    }
    const SubscriptionId sid = sub.id;
    const bool immediate = sub.foreground_typed;
    subscriptions_[sid] = std::move(sub);
    if (immediate) {
      // Uncapped subscriptions get their first fix at subscribe time.
      deliver_location_(sid);
    } else {
      // Capped ones wait a full interval so no hour ever exceeds the cap.
      kernel_.schedule(kernel_.now() + subscriptions_[sid].effective_cadence_ms,
                       EventKind::sensor_op,
                       [this, sid] { deliver_location_(sid); });
    }
    return sid;
  }

  bool cancel_location_updates(SubscriptionId id) {
    auto it = subscriptions_.find(id);
    if (it == subscriptions_.end() || !it->second.live) return false;
    it->second.live = false;
    return true;
  }

  const LocationSubscriptionRecord* find_subscription(
      SubscriptionId id) const {
    auto it = subscriptions_.find(id);
    return it == subscriptions_.end() ? nullptr : &it->second;
  }

  // ---- external storage ---------------------------------------------------

  void add_file(StoredFile file) { files_.push_back(std::move(file)); }

  Expected<std::vector<StoredFile>> list_external_files(
      const AppId& app, const ExecutionContext& ctx) {
    if (!permissions_.check_access(app, Permission::file_storage, ctx)
             .allowed) {
      return deny_<std::vector<StoredFile>>(app, "storage",
                                            Err::permission_denied);
    }
    nlohmann::ordered_json detail;
    detail["count"] = files_.size();
    trace_.append(app, "file-read", "storage", "ok",
                  lifecycle_.visibility_for(app), detail);
    return files_;
  }

  // Transfers min(size, bandwidth x window) bytes; only a live service
  // context may upload.
  Expected<UploadResult> upload_file(const AppId& app,
                                     const ExecutionContext& ctx,
                                     const StoredFile& file,
                                     SimTime window_ms) {
    if (!live_service_ctx_(ctx)) {
      return deny_<UploadResult>(app, "network", Err::illegal_state);
    }
    if (!permissions_.check_access(app, Permission::file_storage, ctx)
             .allowed) {
      return deny_<UploadResult>(app, "network", Err::permission_denied);
    }
    const NetworkType net = device_.state().network;
    if (net == NetworkType::none) {
      return deny_<UploadResult>(app, "network", Err::no_network);
    }
    const double rate = net == NetworkType::wifi ? config_.wifi_bytes_per_ms
                                                 : config_.cellular_bytes_per_ms;
    const auto capacity = static_cast<std::uint64_t>(
        rate * static_cast<double>(std::max<SimTime>(window_ms, 0)));
    UploadResult result;
    result.bytes = std::min<std::uint64_t>(file.size_bytes, capacity);
    result.complete = result.bytes == file.size_bytes;
    nlohmann::ordered_json detail;
    detail["path"] = file.path;
    detail["bytes"] = result.bytes;
    detail["size_bytes"] = file.size_bytes;
    trace_.append(app, "upload", "network",
                  result.complete ? "complete" : "partial",
                  lifecycle_.visibility_for(app), detail);
    device_.note_sensor_action(app);
    return result;
  }

 private:
  template <typename T = LeaseId>
  Expected<T> deny_camera_(const AppId& app, Err err) {
    return deny_<T>(app, "camera", err);
  }

  template <typename T = LeaseId>
  Expected<T> deny_(const AppId& app, std::string_view resource, Err err) {
    nlohmann::ordered_json detail;
    detail["error"] = std::string(to_string(err));
    trace_.append(app, "sensor-deny", std::string(resource),
                  std::string(to_string(err)),
                  lifecycle_.visibility_for(app), detail);
    return err;
  }

  Expected<LeaseId> grant_camera_(const std::string& holder, bool system) {
    CameraLease lease;
    lease.id = next_lease_id_++;
    lease.holder = holder;
    lease.system = system;
    lease.acquired_at = kernel_.now();
    holder_ = lease.id;
    nlohmann::ordered_json detail;
    detail["lease"] = lease.id;
    trace_.append(holder, "sensor-acquire", "camera", "ok",
                  system ? Visibility::na : lifecycle_.visibility_for(holder),
                  detail);
    leases_[lease.id] = lease;
    return lease.id;
  }

  void deliver_location_(SubscriptionId sid) {
    auto it = subscriptions_.find(sid);
    if (it == subscriptions_.end() || !it->second.live) return;
    LocationSubscriptionRecord& sub = it->second;
    if (permissions_.check_access(sub.app, Permission::location, sub.ctx)
            .allowed) {
      ++sub.delivered;
      // A vendor status icon makes every fix user-visible regardless of
      // the app's own visibility.
      const Visibility vis = device_.profile().location_icon_always_visible
                                 ? Visibility::visible
                                 : lifecycle_.visibility_for(sub.app);
      nlohmann::ordered_json detail;
      detail["subscription"] = sub.id;
      detail["n"] = sub.delivered;
      trace_.append(sub.app, "location-update", "location", "ok", vis,
                    detail);
      device_.note_sensor_action(sub.app);
    }
    const SubscriptionId id = sub.id;
    kernel_.schedule(kernel_.now() + sub.effective_cadence_ms,
                     EventKind::sensor_op,
                     [this, id] { deliver_location_(id); });
  }

  bool live_service_ctx_(const ExecutionContext& ctx) const {
    if (!ctx.is_foreground_service()) return false;
    return lifecycle_.service_live(ctx.service);
  }

  // A subscription bound to a foreground service dies with it.
  void on_service_stopped_(ServiceId service) {
    for (auto& [id, sub] : subscriptions_) {
      if (sub.live && sub.ctx.is_foreground_service() &&
          sub.ctx.service == service) {
        sub.live = false;
      }
    }
  }

  Kernel& kernel_;
  TraceLog& trace_;
  DeviceModel& device_;
  PermissionTable& permissions_;
  Lifecycle& lifecycle_;
  Rng& rng_;
  SensorConfig config_;

  std::map<LeaseId, CameraLease> leases_;
  LeaseId holder_ = 0;
  LeaseId next_lease_id_ = 1;
  std::map<SessionId, RecordingSession> sessions_;
  SessionId next_session_id_ = 1;
  std::map<SubscriptionId, LocationSubscriptionRecord> subscriptions_;
  SubscriptionId next_subscription_id_ = 1;
  std::vector<StoredFile> files_;
};

}  // namespace bgsim
