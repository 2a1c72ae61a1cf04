#pragma once
// Runtime-permission model: per-app grants with levels, context-sensitive
// access checks, and automatic revocation policies (auto-unused TTL,
// one-time grants, time-boxed grants).
//
// Deny is a value, not a fault: check_access always returns a decision.
// Revocation is immediate; once a grant is gone no later check can allow.

#include <functional>
#include <map>
#include <optional>
#include <string>
#include <string_view>
#include <utility>
#include <vector>

#include "bgsim/kernel.hpp"
#include "bgsim/trace.hpp"
#include "bgsim/types.hpp"

namespace bgsim {

enum class GrantLevel { granted, while_in_use, one_time, time_boxed, denied };

inline std::string_view to_string(GrantLevel l) {
  switch (l) {
    case GrantLevel::granted: return "granted";
    case GrantLevel::while_in_use: return "while-in-use";
    case GrantLevel::one_time: return "one-time";
    case GrantLevel::time_boxed: return "time-boxed";
    case GrantLevel::denied: return "denied";
  }
  return "?";
}

inline std::optional<GrantLevel> grant_level_from_string(std::string_view s) {
  if (s == "granted") return GrantLevel::granted;
  if (s == "while-in-use") return GrantLevel::while_in_use;
  if (s == "one-time") return GrantLevel::one_time;
  if (s == "time-boxed") return GrantLevel::time_boxed;
  if (s == "denied") return GrantLevel::denied;
  return std::nullopt;
}

enum class DenyReason { not_granted, expired, consumed, wrong_context };

inline std::string_view to_string(DenyReason r) {
  switch (r) {
    case DenyReason::not_granted: return "not-granted";
    case DenyReason::expired: return "expired";
    case DenyReason::consumed: return "consumed";
    case DenyReason::wrong_context: return "wrong-context";
  }
  return "?";
}

struct PermissionGrant {
  AppId app;
  Permission permission = Permission::camera;
  GrantLevel level = GrantLevel::denied;
  SimTime granted_at = 0;
  SimTime expiry = 0;  // meaningful only for time_boxed; must exceed granted_at
  bool consumed = false;  // one_time: flipped by the first allow
  std::optional<SimTime> last_used_at;
};

// Mitigation policy applied on top of explicit grants. auto_unused revokes
// grants idle longer than ttl_ms; the *_default modes downgrade plain
// "granted" levels at grant time.
struct RevocationPolicy {
  enum class Mode { off, auto_unused, one_time_default, time_boxed_default };
  Mode mode = Mode::off;
  SimTime ttl_ms = 0;  // auto_unused and time_boxed_default; must be > 0 there

  static RevocationPolicy off() { return {}; }
  static RevocationPolicy auto_unused(SimTime ttl_ms) {
    return {Mode::auto_unused, ttl_ms};
  }
  static RevocationPolicy one_time_default() {
    return {Mode::one_time_default, 0};
  }
  static RevocationPolicy time_boxed_default(SimTime ttl_ms) {
    return {Mode::time_boxed_default, ttl_ms};
  }
};

inline std::string_view to_string(RevocationPolicy::Mode m) {
  switch (m) {
    case RevocationPolicy::Mode::off: return "off";
    case RevocationPolicy::Mode::auto_unused: return "auto-unused";
    case RevocationPolicy::Mode::one_time_default: return "one-time-default";
    case RevocationPolicy::Mode::time_boxed_default: return "time-boxed-default";
  }
  return "?";
}

struct AccessDecision {
  bool allowed = false;
  DenyReason reason = DenyReason::not_granted;  // valid only when !allowed

  static AccessDecision allow() { return {true, DenyReason::not_granted}; }
  static AccessDecision deny(DenyReason r) { return {false, r}; }
};

class PermissionTable {
 public:
  PermissionTable(Kernel& kernel, TraceLog& trace,
                  RevocationPolicy policy = RevocationPolicy::off())
      : kernel_(kernel), trace_(trace), policy_(policy) {}

  const RevocationPolicy& policy() const { return policy_; }
  void set_policy(RevocationPolicy p) { policy_ = p; }

  // Records or replaces a grant. while_in_use is legal for location only;
  // time_boxed needs expiry > now. The *_default policy modes downgrade
  // plain "granted" here, so later checks see the restricted level.
  Status grant(const AppId& app, Permission permission, GrantLevel level,
               SimTime expiry = 0) {
    if (level == GrantLevel::while_in_use &&
        permission != Permission::location) {
      return Err::illegal_level;
    }
    const SimTime now = kernel_.now();
    if (level == GrantLevel::granted) {
      if (policy_.mode == RevocationPolicy::Mode::one_time_default) {
        level = GrantLevel::one_time;
      } else if (policy_.mode == RevocationPolicy::Mode::time_boxed_default) {
        level = GrantLevel::time_boxed;
        expiry = now + policy_.ttl_ms;
      }
    }
    if (level == GrantLevel::time_boxed && expiry <= now) {
      return Err::illegal_level;
    }
    PermissionGrant g;
    g.app = app;
    g.permission = permission;
    g.level = level;
    g.granted_at = now;
    g.expiry = level == GrantLevel::time_boxed ? expiry : 0;
    grants_[{app, permission}] = g;
    nlohmann::ordered_json detail;
    if (level == GrantLevel::time_boxed) detail["expiry"] = g.expiry;
    trace_.append(app, "permission-grant", std::string(to_string(permission)),
                  std::string(to_string(level)), Visibility::na, detail);
    return ok_status();
  }

  // Explicit removal ("cause" names who pulled it: user, monitor, a policy).
  // Revoking an absent grant is a no-op.
  bool revoke(const AppId& app, Permission permission,
              std::string_view cause = "revoke") {
    auto it = grants_.find({app, permission});
    if (it == grants_.end()) return false;
    grants_.erase(it);
    trace_.append(app, "permission-revoked",
                  std::string(to_string(permission)), std::string(cause),
                  Visibility::na, {});
    return true;
  }

  // The single gate all sensor paths go through. An allow refreshes
  // last_used_at and emits the usage record; denies never refresh it.
  // Expired or idle-past-ttl grants are revoked lazily here, so outcomes
  // do not depend on sweep cadence.
  AccessDecision check_access(const AppId& app, Permission permission,
                              const ExecutionContext& ctx) {
    const SimTime now = kernel_.now();
    auto it = grants_.find({app, permission});
    AccessDecision d = AccessDecision::allow();
    if (it == grants_.end() || it->second.level == GrantLevel::denied) {
      d = AccessDecision::deny(DenyReason::not_granted);
    } else if (expired_(it->second, now)) {
      grants_.erase(it);
      trace_.append(app, "permission-revoked",
                    std::string(to_string(permission)), "time-boxed",
                    Visibility::na, {});
      d = AccessDecision::deny(DenyReason::expired);
    } else if (idle_past_ttl_(it->second, now)) {
      grants_.erase(it);
      trace_.append(app, "permission-revoked",
                    std::string(to_string(permission)), "auto-unused",
                    Visibility::na, {});
      d = AccessDecision::deny(DenyReason::not_granted);
    } else if (it->second.level == GrantLevel::one_time &&
               it->second.consumed) {
      d = AccessDecision::deny(DenyReason::consumed);
    } else if (it->second.level == GrantLevel::while_in_use &&
               !in_use_context_(ctx)) {
      d = AccessDecision::deny(DenyReason::wrong_context);
    }
    nlohmann::ordered_json detail;
    detail["ctx"] = std::string(to_string(ctx.kind));
    if (d.allowed) {
      it->second.last_used_at = now;
      if (it->second.level == GrantLevel::one_time) it->second.consumed = true;
    } else {
      detail["reason"] = std::string(to_string(d.reason));
    }
    trace_.append(app, "permission-check", std::string(to_string(permission)),
                  d.allowed ? "allow" : "deny", Visibility::na, detail);
    return d;
  }

  // Non-mutating hold test for prerequisites (e.g. scheduling a persisted
  // job requires boot-completed). Does not consume one-time grants and
  // emits no usage record.
  bool holds(const AppId& app, Permission permission) const {
    auto it = grants_.find({app, permission});
    if (it == grants_.end()) return false;
    const PermissionGrant& g = it->second;
    if (g.level == GrantLevel::denied) return false;
    if (expired_(g, kernel_.now())) return false;
    if (idle_past_ttl_(g, kernel_.now())) return false;
    if (g.level == GrantLevel::one_time && g.consumed) return false;
    return true;
  }

  std::optional<GrantLevel> level_of(const AppId& app,
                                     Permission permission) const {
    auto it = grants_.find({app, permission});
    if (it == grants_.end()) return std::nullopt;
    return it->second.level;
  }

  const PermissionGrant* find(const AppId& app, Permission permission) const {
    auto it = grants_.find({app, permission});
    return it == grants_.end() ? nullptr : &it->second;
  }

  // Periodic sweep. Revokes auto-unused grants idle past ttl and time-boxed
  // grants past expiry; returns what was pulled. Keyed iteration keeps the
  // revocation order deterministic.
  std::vector<std::pair<AppId, Permission>> apply_revocation_policy(
      SimTime now) {
    std::vector<std::pair<AppId, Permission>> revoked;
    for (auto it = grants_.begin(); it != grants_.end();) {
      const PermissionGrant& g = it->second;
      std::string_view cause;
      if (expired_(g, now)) {
        cause = "time-boxed";
      } else if (idle_past_ttl_(g, now)) {
        cause = "auto-unused";
      } else {
        ++it;
        continue;
      }
      revoked.push_back(it->first);
      trace_.append(g.app, "permission-revoked",
                    std::string(to_string(g.permission)), std::string(cause),
                    Visibility::na, {});
      it = grants_.erase(it);
    }
    return revoked;
  }

 private:
  static bool expired_(const PermissionGrant& g, SimTime now) {
    return g.level == GrantLevel::time_boxed && now >= g.expiry;
  }

  bool idle_past_ttl_(const PermissionGrant& g, SimTime now) const {
    if (policy_.mode != RevocationPolicy::Mode::auto_unused) return false;
    const SimTime anchor = g.last_used_at.value_or(g.granted_at);
    return now - anchor > policy_.ttl_ms;
  }

  // "While in use" means the app is literally in use: its UI is visible or
  // it runs a foreground service declared with the location type.
  static bool in_use_context_(const ExecutionContext& ctx) {
    if (ctx.kind == ExecutionContext::Kind::ui) return true;
    return ctx.is_foreground_service() &&
           ctx.service_type == ServiceType::location;
  }

  Kernel& kernel_;
  TraceLog& trace_;
  RevocationPolicy policy_;
  std::map<std::pair<AppId, Permission>, PermissionGrant> grants_;
};

}  // namespace bgsim
