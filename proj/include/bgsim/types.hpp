// Shared domain vocabulary: virtual time, ids, error codes, execution contexts.

#pragma once

#include <cstdint>
#include <optional>
#include <stdexcept>
#include <string>
#include <string_view>
#include <variant>

namespace bgsim {

// Virtual time in integer milliseconds. Never wall-clock.
using SimTime = std::int64_t;

using EventId = std::uint64_t;
using ServiceId = std::uint64_t;
using NotificationId = std::uint64_t;
using JobId = std::uint64_t;
using AlarmId = std::uint64_t;
using LeaseId = std::uint64_t;
using SessionId = std::uint64_t;
using SubscriptionId = std::uint64_t;

using AppId = std::string;

enum class Err {
  time_regression,
  illegal_state,
  sensor_busy,
  permission_denied,
  stale_lease,
  unknown_session,
  no_network,
  missing_service_type,
  not_foregrounded,
  unknown_app,
  conflicting_spec,
  missing_boot_permission,
  not_running,
  illegal_level,
  out_of_order,
  parse_error,
  validation_error,
};

inline std::string_view to_string(Err e) {
  switch (e) {
    case Err::time_regression: return "time-regression";
    case Err::illegal_state: return "illegal-state";
    case Err::sensor_busy: return "sensor-busy";
    case Err::permission_denied: return "permission-denied";
    case Err::stale_lease: return "stale-lease";
    case Err::unknown_session: return "unknown-session";
    case Err::no_network: return "no-network";
    case Err::missing_service_type: return "missing-service-type";
    case Err::not_foregrounded: return "not-foregrounded";
    case Err::unknown_app: return "unknown-app";
    case Err::conflicting_spec: return "conflicting-spec";
    case Err::missing_boot_permission: return "missing-boot-permission";
    case Err::not_running: return "not-running";
    case Err::illegal_level: return "illegal-level";
    case Err::out_of_order: return "out-of-order";
    case Err::parse_error: return "parse-error";
    case Err::validation_error: return "validation-error";
  }
  return "unknown";
}

// Hard contract violation inside the simulator itself. Distinct from modeled
// OS rejections, which are Expected errors the strategies absorb.
class SimError : public std::runtime_error {
 public:
  SimError(Err code, const std::string& what)
      : std::runtime_error(std::string(to_string(code)) + ": " + what), code_(code) {}

  Err code() const { return code_; }

 private:
  Err code_;
};

// Minimal value-or-error carrier for modeled OS rejections.
template <typename T>
class Expected {
 public:
  Expected(T value) : v_(std::move(value)) {}
  Expected(Err err) : v_(err) {}

  bool ok() const { return std::holds_alternative<T>(v_); }
  explicit operator bool() const { return ok(); }

  const T& value() const {
    if (!ok()) {
      throw SimError(std::get<Err>(v_), "Expected::value on error");
    }
    return std::get<T>(v_);
  }

  T& value() {
    if (!ok()) {
      throw SimError(std::get<Err>(v_), "Expected::value on error");
    }
    return std::get<T>(v_);
  }

  Err error() const {
    if (ok()) {
      throw SimError(Err::illegal_state, "Expected::error on value");
    }
    return std::get<Err>(v_);
  }

 private:
  std::variant<T, Err> v_;
};

struct Unit {};
using Status = Expected<Unit>;

inline Status ok_status() { return Status(Unit{}); }

enum class Visibility { visible, hidden, suppressed, na };

inline std::string_view to_string(Visibility v) {
  switch (v) {
    case Visibility::visible: return "visible";
    case Visibility::hidden: return "hidden";
    case Visibility::suppressed: return "suppressed";
    case Visibility::na: return "n/a";
  }
  return "n/a";
}

enum class NetworkType { none, cellular, wifi };

inline std::string_view to_string(NetworkType n) {
  switch (n) {
    case NetworkType::none: return "none";
    case NetworkType::cellular: return "cellular";
    case NetworkType::wifi: return "wifi";
  }
  return "none";
}

inline std::optional<NetworkType> network_from_string(std::string_view s) {
  if (s == "none") return NetworkType::none;
  if (s == "cellular") return NetworkType::cellular;
  if (s == "wifi") return NetworkType::wifi;
  return std::nullopt;
}

enum class ServiceType { none, location };

inline std::string_view to_string(ServiceType t) {
  return t == ServiceType::location ? "location" : "none";
}

enum class Permission { camera, record_audio, location, file_storage, boot_completed };

inline std::string_view to_string(Permission p) {
  switch (p) {
    case Permission::camera: return "camera";
    case Permission::record_audio: return "record-audio";
    case Permission::location: return "location";
    case Permission::file_storage: return "file-storage";
    case Permission::boot_completed: return "boot-completed";
  }
  return "camera";
}

inline std::optional<Permission> permission_from_string(std::string_view s) {
  if (s == "camera") return Permission::camera;
  if (s == "record-audio") return Permission::record_audio;
  if (s == "location") return Permission::location;
  if (s == "file-storage") return Permission::file_storage;
  if (s == "boot-completed") return Permission::boot_completed;
  return std::nullopt;
}

// Who is running the code that touches an OS surface. Foreground-service
// contexts carry the service identity so liveness and declared type can be
// checked at the point of use.
struct ExecutionContext {
  enum class Kind { ui, scheduler, foreground_service };

  Kind kind = Kind::ui;
  AppId app;
  ServiceId service = 0;
  ServiceType service_type = ServiceType::none;

  static ExecutionContext ui(AppId app) {
    return ExecutionContext{Kind::ui, std::move(app), 0, ServiceType::none};
  }
  static ExecutionContext scheduler(AppId app) {
    return ExecutionContext{Kind::scheduler, std::move(app), 0, ServiceType::none};
  }
  static ExecutionContext foreground_service(AppId app, ServiceId service,
                                             ServiceType type = ServiceType::none) {
    return ExecutionContext{Kind::foreground_service, std::move(app), service, type};
  }

  bool is_foreground_service() const { return kind == Kind::foreground_service; }
};

inline std::string_view to_string(ExecutionContext::Kind k) {
  switch (k) {
    case ExecutionContext::Kind::ui: return "ui";
    case ExecutionContext::Kind::scheduler: return "scheduler";
    case ExecutionContext::Kind::foreground_service: return "foreground-service";
  }
  return "ui";
}

}  // namespace bgsim
