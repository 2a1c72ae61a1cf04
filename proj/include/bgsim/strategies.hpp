#pragma once
// Attacker agents: the invisible-foreground-service data-collection loop.
//
// One cycle = job fires (scheduler context) -> start a foreground service
// with decoy notification content -> run the action list inside it -> stop
// the service after fgs_budget_ms (under the grace window, so nothing is
// ever shown) -> chain the next one-shot job chain_delay_ms out. Errors from
// sensors or permissions are absorbed into per-kind counters; nothing breaks
// the chain except a stop-app verdict or a reboot, because the chain is the
// persistence mechanism.

#include <cstdint>
#include <map>
#include <memory>
#include <optional>
#include <set>
#include <string>
#include <string_view>
#include <utility>
#include <vector>

#include "bgsim/device.hpp"
#include "bgsim/kernel.hpp"
#include "bgsim/lifecycle.hpp"
#include "bgsim/schedulers.hpp"
#include "bgsim/sensors.hpp"
#include "bgsim/trace.hpp"
#include "bgsim/types.hpp"

namespace bgsim {

struct StrategyAction {
  enum class Kind { capture_image, mic_toggle, location_burst, list_files, upload };

  Kind kind = Kind::capture_image;
  // location-burst
  SimTime cadence_ms = 1000;
  SimTime duration_ms = 0;  // 0: run until the service stops
  // mic-toggle: with indices set, act only on those cycles; otherwise
  // alternate start/stop every cycle
  std::optional<std::uint64_t> start_cycle;
  std::optional<std::uint64_t> stop_cycle;
  // upload
  std::string path;                    // empty: next file not yet exfiltrated
  std::uint64_t max_size_bytes = 0;    // 0: no ceiling
};

inline std::string_view to_string(StrategyAction::Kind k) {
  switch (k) {
    case StrategyAction::Kind::capture_image: return "capture-image";
    case StrategyAction::Kind::mic_toggle: return "mic-toggle";
    case StrategyAction::Kind::location_burst: return "location-burst";
    case StrategyAction::Kind::list_files: return "list-files";
    case StrategyAction::Kind::upload: return "upload";
  }
  return "?";
}

inline std::optional<StrategyAction::Kind> strategy_action_from_string(
    std::string_view s) {
  if (s == "capture-image") return StrategyAction::Kind::capture_image;
  if (s == "mic-toggle") return StrategyAction::Kind::mic_toggle;
  if (s == "location-burst") return StrategyAction::Kind::location_burst;
  if (s == "list-files") return StrategyAction::Kind::list_files;
  if (s == "upload") return StrategyAction::Kind::upload;
  return std::nullopt;
}

// Scheduler constraints a strategy may put on its chain jobs.
struct StrategyConstraints {
  bool requires_charging = false;
  bool requires_battery_not_low = false;
  bool requires_device_idle = false;
  std::optional<RequiredNetwork> required_network;
  bool persisted = false;
};

struct StrategySpec {
  std::string name;
  AppId app;
  SimTime start_ms = 0;         // initial job scheduled here...
  SimTime chain_delay_ms = 60'000;  // ...with this latency, so cycle k runs
                                    // at start_ms + k * chain_delay_ms
  SimTime fgs_budget_ms = 4'000;    // under the default 5 s grace
  std::string notification_content = "Synchronizing...";
  std::optional<ServiceType> service_type;  // default: location iff the
                                            // action list needs it
  std::vector<StrategyAction> actions;
  StrategyConstraints constraints;

  ServiceType effective_service_type() const {
    if (service_type) return *service_type;
    for (const StrategyAction& a : actions) {
      if (a.kind == StrategyAction::Kind::location_burst) {
        return ServiceType::location;
      }
    }
    return ServiceType::none;
  }
};

struct StrategyRunStats {
  std::uint64_t cycles_executed = 0;
  std::uint64_t notifications_leaked = 0;  // user-visible posts we caused
  std::uint64_t black_frames = 0;
  std::uint64_t recorded_ms = 0;
  std::uint64_t uploaded_bytes = 0;
  std::map<std::string, std::uint64_t> data_items_collected;
  std::map<std::string, std::uint64_t> errors_encountered;

  std::uint64_t total_collected() const {
    std::uint64_t sum = 0;
    for (const auto& [kind, n] : data_items_collected) sum += n;
    return sum;
  }
};

class StrategyEngine {
 public:
  StrategyEngine(Kernel& kernel, TraceLog& trace, Lifecycle& lifecycle,
                 JobScheduler& scheduler, Sensors& sensors,
                 DeviceModel& device)
      : kernel_(kernel),
        trace_(trace),
        lifecycle_(lifecycle),
        scheduler_(scheduler),
        sensors_(sensors),
        device_(device) {
    scheduler_.set_on_job_run(
        [this](const JobRecord& job) { dispatch_(job); });
  }

  // Registers the strategy and schedules its first chain job. The payload
  // id is the strategy name, so names must be unique per run.
  Status install(StrategySpec spec) {
    if (spec.actions.empty() || spec.fgs_budget_ms < 0) {
      return Err::validation_error;
    }
    for (const auto& s : strategies_) {
      if (s->spec.name == spec.name) return Err::validation_error;
    }
    auto st = std::make_unique<Strategy>();
    st->spec = std::move(spec);
    Strategy& ref = *st;
    strategies_.push_back(std::move(st));
    const SimTime due = ref.spec.start_ms + ref.spec.chain_delay_ms;
    kernel_.schedule(ref.spec.start_ms, EventKind::strategy_step,
                     [this, &ref, due] {
                       JobSpec job;
                       job.app = ref.spec.app;
                       job.payload = ref.spec.name;
                       job.minimum_latency_ms = due - kernel_.now();
                       apply_constraints_(ref.spec.constraints, job);
                       auto r = scheduler_.schedule_job(std::move(job));
                       if (!r.ok()) {
                         ++ref.stats.errors_encountered[std::string(
                             to_string(r.error()))];
                       }
                     });
    return ok_status();
  }

  std::size_t size() const { return strategies_.size(); }

  const StrategySpec& spec(std::size_t i) const {
    return strategies_.at(i)->spec;
  }

  // Stats snapshot; location deliveries are summed from the live
  // subscription counters at query time.
  StrategyRunStats stats(std::size_t i) const {
    const Strategy& s = *strategies_.at(i);
    StrategyRunStats out = s.stats;
    std::uint64_t locations = 0;
    for (SubscriptionId id : s.subscriptions) {
      if (const auto* sub = sensors_.find_subscription(id)) {
        locations += sub->delivered;
      }
    }
    if (locations > 0) out.data_items_collected["location"] = locations;
    return out;
  }

  std::optional<std::size_t> index_of(std::string_view name) const {
    for (std::size_t i = 0; i < strategies_.size(); ++i) {
      if (strategies_[i]->spec.name == name) return i;
    }
    return std::nullopt;
  }

 private:
  struct Strategy {
    StrategySpec spec;
    StrategyRunStats stats;
    std::optional<SessionId> open_session;
    std::vector<SubscriptionId> subscriptions;
    std::set<std::string> exfiltrated;  // paths completely uploaded
  };

  static void apply_constraints_(const StrategyConstraints& c, JobSpec& job) {
    job.requires_charging = c.requires_charging;
    job.requires_battery_not_low = c.requires_battery_not_low;
    job.requires_device_idle = c.requires_device_idle;
    job.required_network = c.required_network;
    job.persisted = c.persisted;
  }

  void dispatch_(const JobRecord& job) {
    for (auto& st : strategies_) {
      if (st->spec.name == job.spec.payload) {
        run_cycle_(*st, job);
        return;
      }
    }
  }

  void run_cycle_(Strategy& s, const JobRecord& job) {
    if (device_.app_stopped(s.spec.app)) return;
    const std::uint64_t cycle = s.stats.cycles_executed++;
    auto sid_or = lifecycle_.start_foreground_service(
        s.spec.app, s.spec.notification_content,
        s.spec.effective_service_type());
    if (!sid_or.ok()) {
      note_error_(s, sid_or.error());
      chain_(s, job);
      return;
    }
    const ServiceId sid = sid_or.value();
    const ExecutionContext ctx = ExecutionContext::foreground_service(
        s.spec.app, sid, s.spec.effective_service_type());
    for (const StrategyAction& action : s.spec.actions) {
      run_action_(s, ctx, action, cycle);
    }
    Strategy* sp = &s;
    kernel_.schedule(kernel_.now() + s.spec.fgs_budget_ms,
                     EventKind::service_stop, [this, sp, sid] {
                       auto rep = lifecycle_.stop_foreground(
                           sid, /*remove_notification=*/true);
                       if (rep.ok() && rep.value().was_visible) {
                         ++sp->stats.notifications_leaked;
                       }
                     });
    chain_(s, job);
  }

  void chain_(Strategy& s, const JobRecord& job) {
    auto next = scheduler_.chain_next(job.spec.id, s.spec.chain_delay_ms);
    if (!next.ok()) note_error_(s, next.error());
  }

  void note_error_(Strategy& s, Err err) {
    ++s.stats.errors_encountered[std::string(to_string(err))];
  }

  void run_action_(Strategy& s, const ExecutionContext& ctx,
                   const StrategyAction& action, std::uint64_t cycle) {
    switch (action.kind) {
      case StrategyAction::Kind::capture_image: {
        auto lease = sensors_.acquire_camera(s.spec.app, ctx);
        if (!lease.ok()) {
          note_error_(s, lease.error());
          return;
        }
        auto shot = sensors_.capture_image(lease.value());
        if (!shot.ok()) {
          note_error_(s, shot.error());
        } else if (shot.value() == CaptureResult::black_frame) {
          ++s.stats.black_frames;
        } else {
          ++s.stats.data_items_collected["image"];
        }
        (void)sensors_.release_camera(lease.value());
        return;
      }
      case StrategyAction::Kind::mic_toggle: {
        const bool indexed = action.start_cycle || action.stop_cycle;
        if (indexed) {
          if (action.start_cycle && cycle == *action.start_cycle) {
            mic_start_(s, ctx);
          }
          if (action.stop_cycle && cycle == *action.stop_cycle) {
            mic_stop_(s);
          }
          return;
        }
        if (s.open_session) {
          mic_stop_(s);
        } else {
          mic_start_(s, ctx);
        }
        return;
      }
      case StrategyAction::Kind::location_burst: {
        auto sub = sensors_.request_location_updates(s.spec.app, ctx,
                                                     action.cadence_ms);
        if (!sub.ok()) {
          note_error_(s, sub.error());
          return;
        }
        s.subscriptions.push_back(sub.value());
        if (action.duration_ms > 0 &&
            action.duration_ms < s.spec.fgs_budget_ms) {
          const SubscriptionId id = sub.value();
          kernel_.schedule(kernel_.now() + action.duration_ms,
                           EventKind::sensor_op, [this, id] {
                             (void)sensors_.cancel_location_updates(id);
                           });
        }
        return;
      }
      case StrategyAction::Kind::list_files: {
        auto files = sensors_.list_external_files(s.spec.app, ctx);
        if (!files.ok()) {
          note_error_(s, files.error());
          return;
        }
        s.stats.data_items_collected["file-list"] += files.value().size();
        return;
      }
      case StrategyAction::Kind::upload: {
        const StoredFile* target = pick_upload_(s, ctx, action);
        if (target == nullptr) return;
        auto up = sensors_.upload_file(s.spec.app, ctx, *target,
                                       s.spec.fgs_budget_ms);
        if (!up.ok()) {
          note_error_(s, up.error());
          return;
        }
        s.stats.uploaded_bytes += up.value().bytes;
        if (up.value().complete) {
          s.exfiltrated.insert(target->path);
          ++s.stats.data_items_collected["upload"];
        }
        return;
      }
    }
  }

  void mic_start_(Strategy& s, const ExecutionContext& ctx) {
    auto session = sensors_.mic_start(s.spec.app, ctx);
    if (!session.ok()) {
      note_error_(s, session.error());
      return;
    }
    s.open_session = session.value();
  }

  void mic_stop_(Strategy& s) {
    if (!s.open_session) return;
    auto duration = sensors_.mic_stop(*s.open_session);
    s.open_session.reset();
    if (!duration.ok()) {
      note_error_(s, duration.error());
      return;
    }
    s.stats.recorded_ms += static_cast<std::uint64_t>(duration.value());
    ++s.stats.data_items_collected["recording"];
  }

  // Enumerate storage, then choose: the named path, or the first file under
  // the ceiling this strategy has not completely uploaded yet. Returns a
  // pointer into the listing cache so it survives the call.
  const StoredFile* pick_upload_(Strategy& s, const ExecutionContext& ctx,
                                 const StrategyAction& action) {
    auto files = sensors_.list_external_files(s.spec.app, ctx);
    if (!files.ok()) {
      note_error_(s, files.error());
      return nullptr;
    }
    listing_cache_ = std::move(files.value());
    for (const StoredFile& f : listing_cache_) {
      if (!action.path.empty()) {
        if (f.path == action.path && s.exfiltrated.count(f.path) == 0) {
          return &f;
        }
        continue;
      }
      if (action.max_size_bytes > 0 && f.size_bytes > action.max_size_bytes) {
        continue;
      }
      if (s.exfiltrated.count(f.path) == 0) return &f;
    }
    return nullptr;
  }

  Kernel& kernel_;
  TraceLog& trace_;
  Lifecycle& lifecycle_;
  JobScheduler& scheduler_;
  Sensors& sensors_;
  DeviceModel& device_;

  std::vector<std::unique_ptr<Strategy>> strategies_;
  std::vector<StoredFile> listing_cache_;
};

}  // namespace bgsim
