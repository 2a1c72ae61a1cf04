#pragma once
// Job scheduler and alarm manager.
//
// Periodic jobs are clamped to the platform's 15-minute floor. One-shot
// minimum-latency jobs have no floor, which is exactly the loophole the
// chaining strategies exploit: each payload reschedules itself with a short
// delay and the result is a de-facto periodic job far below the floor.
//
// Constraints (charging, battery, idle, network) gate execution; a job whose
// constraints fail at its due time parks in constrained-waiting until a
// device change satisfies them or its override deadline forces it. Doze
// defers everything except requires_device_idle jobs to the next
// maintenance window. Jobs run instantaneously in sim time; any duration is
// the payload's business via follow-up events.

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
#include "bgsim/permissions.hpp"
#include "bgsim/trace.hpp"
#include "bgsim/types.hpp"

namespace bgsim {

enum class RequiredNetwork { any, unmetered, cellular };

inline std::string_view to_string(RequiredNetwork n) {
  switch (n) {
    case RequiredNetwork::any: return "any";
    case RequiredNetwork::unmetered: return "unmetered";
    case RequiredNetwork::cellular: return "cellular";
  }
  return "any";
}

inline std::optional<RequiredNetwork> required_network_from_string(
    std::string_view s) {
  if (s == "any") return RequiredNetwork::any;
  if (s == "unmetered" || s == "wifi") return RequiredNetwork::unmetered;
  if (s == "cellular") return RequiredNetwork::cellular;
  return std::nullopt;
}

struct JobSpec {
  JobId id = 0;  // assigned by schedule_job
  AppId app;
  std::optional<SimTime> periodic_ms;
  std::optional<SimTime> minimum_latency_ms;
  std::optional<SimTime> override_deadline_ms;
  bool requires_charging = false;
  bool requires_battery_not_low = false;
  bool requires_device_idle = false;
  std::optional<RequiredNetwork> required_network;
  bool persisted = false;
  std::string payload;  // callback id dispatched by the registered runner
};

enum class JobState { pending, constrained_waiting, running, done, cancelled };

inline std::string_view to_string(JobState s) {
  switch (s) {
    case JobState::pending: return "pending";
    case JobState::constrained_waiting: return "constrained-waiting";
    case JobState::running: return "running";
    case JobState::done: return "done";
    case JobState::cancelled: return "cancelled";
  }
  return "?";
}

struct JobRecord {
  JobSpec spec;
  JobState state = JobState::pending;
  SimTime scheduled_at = 0;
  SimTime next_due = 0;
  SimTime effective_period = 0;          // periodic jobs, after clamping
  std::optional<SimTime> forced_at;      // scheduled_at + override deadline
  std::string waiting_reason;            // last deferral reason traced
  std::uint64_t executions = 0;
};

struct AlarmSpec {
  AlarmId id = 0;  // assigned by set_alarm
  AppId app;
  SimTime fire_at = 0;
  std::optional<SimTime> repeat_ms;
  std::string payload;
};

class JobScheduler {
 public:
  JobScheduler(Kernel& kernel, TraceLog& trace, DeviceModel& device,
               PermissionTable& permissions)
      : kernel_(kernel),
        trace_(trace),
        device_(device),
        permissions_(permissions) {}

  // Payload dispatcher: strategies register one handler and switch on
  // spec.payload. The job is in state running for the duration of the call,
  // which is what legalises chain_next from inside it.
  void set_on_job_run(std::function<void(const JobRecord&)> fn) {
    on_job_run_ = std::move(fn);
  }
  void set_on_alarm_fire(std::function<void(const AlarmSpec&)> fn) {
    on_alarm_fire_ = std::move(fn);
  }

  // ---- jobs ---------------------------------------------------------------

  Expected<JobId> schedule_job(JobSpec spec) {
    if (spec.periodic_ms && spec.minimum_latency_ms) {
      return Err::conflicting_spec;
    }
    if (spec.persisted &&
        !permissions_.holds(spec.app, Permission::boot_completed)) {
      return Err::missing_boot_permission;
    }
    const SimTime now = kernel_.now();
    JobRecord rec;
    spec.id = next_job_id_++;
    rec.spec = std::move(spec);
    rec.scheduled_at = now;
    if (rec.spec.periodic_ms) {
      const SimTime requested = *rec.spec.periodic_ms;
      const SimTime floor = device_.version().periodic_floor_ms;
      rec.effective_period = std::max(requested, floor);
      if (requested < floor) {
        nlohmann::ordered_json detail;
        detail["job"] = rec.spec.id;
        detail["requested_ms"] = requested;
        detail["effective_ms"] = rec.effective_period;
        trace_.append(rec.spec.app, "job-clamped", "job", "clamped",
                      Visibility::na, detail);
      }
      rec.next_due = now + rec.effective_period;
    } else {
      rec.next_due = now + rec.spec.minimum_latency_ms.value_or(0);
    }
    if (rec.spec.override_deadline_ms) {
      // The deadline can never beat the job's own due time.
      rec.forced_at =
          std::max(rec.next_due, now + *rec.spec.override_deadline_ms);
    }
    const JobId id = rec.spec.id;
    nlohmann::ordered_json detail;
    detail["job"] = id;
    detail["payload"] = rec.spec.payload;
    if (rec.spec.periodic_ms) detail["periodic_ms"] = rec.effective_period;
    if (rec.spec.minimum_latency_ms) {
      detail["minimum_latency_ms"] = *rec.spec.minimum_latency_ms;
    }
    if (rec.spec.persisted) detail["persisted"] = true;
    trace_.append(rec.spec.app, "job-scheduled", "job", "ok", Visibility::na,
                  detail);
    jobs_[id] = std::move(rec);
    schedule_due_event_(jobs_[id]);
    return id;
  }

  // Runs every due job whose constraints hold; parks the rest. Idempotent
  // per timestamp, so overlapping due events are harmless.
  int fire_due_jobs(SimTime now) {
    int fired = 0;
    for (JobId id : due_job_ids_(now)) {
      auto it = jobs_.find(id);
      if (it == jobs_.end()) continue;
      JobRecord& job = it->second;
      if (!due_(job, now)) continue;
      if (try_run_(job, /*ignore_doze=*/false)) ++fired;
    }
    return fired;
  }

  // Only legal from inside the running payload of `job`: clones the JobSpec
  // as a one-shot minimum-latency job. Back-to-back chaining is the custom
  // periodic scheduler the floor cannot touch.
  Expected<JobId> chain_next(JobId job, SimTime delay_ms) {
    auto it = jobs_.find(job);
    if (it == jobs_.end() || it->second.state != JobState::running) {
      return Err::not_running;
    }
    JobSpec next = it->second.spec;
    next.id = 0;
    next.periodic_ms.reset();
    next.minimum_latency_ms = delay_ms;
    next.override_deadline_ms.reset();
    if (next.persisted &&
        !permissions_.holds(next.app, Permission::boot_completed)) {
      next.persisted = false;
    }
    return schedule_job(std::move(next));
  }

  bool cancel_job(JobId id) {
    auto it = jobs_.find(id);
    if (it == jobs_.end()) return false;
    JobState s = it->second.state;
    if (s == JobState::done || s == JobState::cancelled) return false;
    it->second.state = JobState::cancelled;
    return true;
  }

  // ---- alarms -------------------------------------------------------------

  Expected<AlarmId> set_alarm(AlarmSpec spec) {
    if (spec.fire_at < kernel_.now()) return Err::time_regression;
    spec.id = next_alarm_id_++;
    AlarmRecord rec;
    rec.spec = std::move(spec);
    rec.next_fire = rec.spec.fire_at;
    const AlarmId id = rec.spec.id;
    alarms_[id] = std::move(rec);
    schedule_alarm_event_(alarms_[id]);
    return id;
  }

  bool cancel_alarm(AlarmId id) {
    auto it = alarms_.find(id);
    if (it == alarms_.end() || !it->second.live) return false;
    it->second.live = false;
    if (it->second.event != 0) kernel_.cancel(it->second.event);
    return true;
  }

  // ---- device hooks -------------------------------------------------------

  // Re-check parked jobs after any device change. Doze stays a blocker for
  // jobs (only maintenance windows lift it), but alarms held back by doze
  // deliver as soon as the device wakes.
  void re_evaluate() {
    run_waiting_(/*ignore_doze=*/false);
    if (!device_.state().idle) {
      std::vector<AlarmId> held;
      for (auto& [id, rec] : alarms_) {
        if (rec.live && rec.deferred) held.push_back(id);
      }
      for (AlarmId id : held) fire_alarm_(alarms_[id]);
    }
  }

  // Doze maintenance window: deferred jobs and alarms get their shot.
  void maintenance_release() {
    run_waiting_(/*ignore_doze=*/true);
    std::vector<AlarmId> due;
    for (auto& [id, rec] : alarms_) {
      if (rec.live && rec.deferred) due.push_back(id);
    }
    for (AlarmId id : due) fire_alarm_(alarms_[id]);
  }

  // Simulated reboot: alarms vanish, non-persisted jobs vanish, persisted
  // jobs re-enter pending with their timing restarted from now.
  int on_reboot(bool honor_persisted = true) {
    for (auto& [id, rec] : alarms_) {
      if (rec.live) {
        rec.live = false;
        if (rec.event != 0) kernel_.cancel(rec.event);
      }
    }
    int survivors = 0;
    const SimTime now = kernel_.now();
    for (auto& [id, job] : jobs_) {
      if (job.state == JobState::done || job.state == JobState::cancelled) {
        continue;
      }
      if (honor_persisted && job.spec.persisted) {
        ++survivors;
        job.state = JobState::pending;
        job.waiting_reason.clear();
        if (job.spec.periodic_ms) {
          job.next_due = now + job.effective_period;
        } else {
          job.next_due = now + job.spec.minimum_latency_ms.value_or(0);
        }
        schedule_due_event_(job);
      } else {
        job.state = JobState::cancelled;
      }
    }
    nlohmann::ordered_json detail;
    detail["surviving_jobs"] = survivors;
    trace_.append("system", "reboot", "device", "ok", Visibility::na, detail);
    return survivors;
  }

  // stop-app verdict: every pending job and live alarm of the app dies.
  void cancel_app(const AppId& app) {
    for (auto& [id, job] : jobs_) {
      if (job.spec.app != app) continue;
      if (job.state == JobState::pending ||
          job.state == JobState::constrained_waiting) {
        job.state = JobState::cancelled;
      }
    }
    for (auto& [id, rec] : alarms_) {
      if (rec.spec.app == app && rec.live) {
        rec.live = false;
        if (rec.event != 0) kernel_.cancel(rec.event);
      }
    }
  }

  // ---- queries ------------------------------------------------------------

  const JobRecord* find_job(JobId id) const {
    auto it = jobs_.find(id);
    return it == jobs_.end() ? nullptr : &it->second;
  }

  std::uint64_t executions_of(JobId id) const {
    const JobRecord* job = find_job(id);
    return job == nullptr ? 0 : job->executions;
  }

 private:
  struct AlarmRecord {
    AlarmSpec spec;
    SimTime next_fire = 0;
    EventId event = 0;
    bool live = true;
    bool deferred = false;
  };

  static bool due_(const JobRecord& job, SimTime now) {
    return (job.state == JobState::pending ||
            job.state == JobState::constrained_waiting) &&
           job.next_due <= now;
  }

  std::vector<JobId> due_job_ids_(SimTime now) const {
    std::vector<JobId> out;
    for (const auto& [id, job] : jobs_) {
      if (due_(job, now)) out.push_back(id);
    }
    return out;
  }

  // First failing constraint, as the reason string used in trace records.
  // Empty means runnable.
  std::string blocked_reason_(const JobSpec& spec, bool ignore_doze) const {
    const DeviceState& dev = device_.state();
    if (dev.idle && !spec.requires_device_idle && !ignore_doze) return "doze";
    if (spec.requires_charging && !dev.charging) return "charging";
    if (spec.requires_battery_not_low && !device_.is_battery_not_low()) {
      return "battery-low";
    }
    if (spec.requires_device_idle && !dev.idle) return "idle";
    if (spec.required_network) {
      switch (*spec.required_network) {
        case RequiredNetwork::any:
          if (dev.network == NetworkType::none) return "network";
          break;
        case RequiredNetwork::unmetered:
          if (dev.network != NetworkType::wifi) return "network";
          break;
        case RequiredNetwork::cellular:
          if (dev.network != NetworkType::cellular) return "network";
          break;
      }
    }
    return {};
  }

  bool try_run_(JobRecord& job, bool ignore_doze) {
    const SimTime now = kernel_.now();
    std::string reason = blocked_reason_(job.spec, ignore_doze);
    const bool forced = !reason.empty() && job.forced_at && now >= *job.forced_at;
    if (!reason.empty() && !forced) {
      if (job.state != JobState::constrained_waiting ||
          job.waiting_reason != reason) {
        job.state = JobState::constrained_waiting;
        job.waiting_reason = reason;
        nlohmann::ordered_json detail;
        detail["job"] = job.spec.id;
        detail["reason"] = reason;
        trace_.append(job.spec.app, "job-deferred", "job", "deferred",
                      Visibility::na, detail);
      }
      return false;
    }
    run_(job, forced);
    return true;
  }

  void run_(JobRecord& job, bool forced) {
    const SimTime now = kernel_.now();
    job.state = JobState::running;
    job.waiting_reason.clear();
    ++job.executions;
    nlohmann::ordered_json detail;
    detail["job"] = job.spec.id;
    detail["payload"] = job.spec.payload;
    if (forced) {
      detail["deadline"] = *job.forced_at;
      trace_.append(job.spec.app, "job-forced", "job", "forced",
                    Visibility::na, detail);
    } else {
      trace_.append(job.spec.app, "job-fired", "job", "ok", Visibility::na,
                    detail);
    }
    if (on_job_run_) on_job_run_(job);
    // The payload may have cancelled its own job (stop-app mid-run).
    if (job.state != JobState::running) return;
    if (job.spec.periodic_ms) {
      job.state = JobState::pending;
      job.next_due = now + job.effective_period;
      schedule_due_event_(job);
    } else {
      job.state = JobState::done;
    }
  }

  void run_waiting_(bool ignore_doze) {
    const SimTime now = kernel_.now();
    std::vector<JobId> waiting;
    for (const auto& [id, job] : jobs_) {
      if (job.state == JobState::constrained_waiting && job.next_due <= now) {
        waiting.push_back(id);
      }
    }
    for (JobId id : waiting) {
      auto it = jobs_.find(id);
      if (it == jobs_.end()) continue;
      if (it->second.state != JobState::constrained_waiting) continue;
      (void)try_run_(it->second, ignore_doze);
    }
  }

  void schedule_due_event_(JobRecord& job) {
    kernel_.schedule(job.next_due, EventKind::job_due,
                     [this] { fire_due_jobs(kernel_.now()); });
    if (job.forced_at && *job.forced_at > job.next_due) {
      const JobId id = job.spec.id;
      kernel_.schedule(*job.forced_at, EventKind::job_due, [this, id] {
        auto it = jobs_.find(id);
        if (it == jobs_.end()) return;
        if (it->second.state == JobState::constrained_waiting) {
          (void)try_run_(it->second, /*ignore_doze=*/false);
        }
      });
    }
  }

  void schedule_alarm_event_(AlarmRecord& rec) {
    const AlarmId id = rec.spec.id;
    rec.event = kernel_.schedule(rec.next_fire, EventKind::alarm_due,
                                 [this, id] { on_alarm_due_(id); });
  }

  void on_alarm_due_(AlarmId id) {
    auto it = alarms_.find(id);
    if (it == alarms_.end() || !it->second.live) return;
    AlarmRecord& rec = it->second;
    rec.event = 0;
    if (device_.state().idle) {
      rec.deferred = true;  // held until the next maintenance window
      return;
    }
    fire_alarm_(rec);
  }

  void fire_alarm_(AlarmRecord& rec) {
    rec.deferred = false;
    nlohmann::ordered_json detail;
    detail["alarm"] = rec.spec.id;
    detail["payload"] = rec.spec.payload;
    trace_.append(rec.spec.app, "alarm-fired", "alarm", "ok", Visibility::na,
                  detail);
    if (on_alarm_fire_) on_alarm_fire_(rec.spec);
    if (!rec.live) return;  // payload cancelled it
    if (rec.spec.repeat_ms) {
      rec.next_fire += *rec.spec.repeat_ms;
      // Nominal cadence: deferred firings do not shift the schedule.
      while (rec.next_fire <= kernel_.now()) {
        rec.next_fire += *rec.spec.repeat_ms;
      }
      schedule_alarm_event_(rec);
    } else {
      rec.live = false;
    }
  }

  Kernel& kernel_;
  TraceLog& trace_;
  DeviceModel& device_;
  PermissionTable& permissions_;

  std::map<JobId, JobRecord> jobs_;
  std::map<AlarmId, AlarmRecord> alarms_;
  JobId next_job_id_ = 1;
  AlarmId next_alarm_id_ = 1;
  std::function<void(const JobRecord&)> on_job_run_;
  std::function<void(const AlarmSpec&)> on_alarm_fire_;
};

}  // namespace bgsim
