#pragma once
// Permission-usage monitor: the defender side of the simulation.
//
// The monitor is a pure function of the trace stream. It buckets counted
// records into tumbling windows (default 15 min, matching the periodic
// floor so a clamped periodic job lands exactly once per window), closes a
// window when the first record at or past its end arrives, and scores each
// closed window against four rules:
//
//   invisible-fgs-chain   completed foreground-service cycles the user
//                         never saw (threshold 3 suspicious / 10 abusive)
//   hidden-sensor-access  sensor use while the app had no UI and no
//                         visible notification
//   exfil-volume          upload bytes per window (1 MB / 10 MB)
//   dormant-spike         several quiet windows followed by a burst of
//                         hidden accesses
//
// Because it consumes only records, replaying a trace file yields the very
// report the live run produced. All thresholds are one concrete rule set;
// a strategy that paces itself under them simply is not seen.

#include <cstdint>
#include <map>
#include <optional>
#include <set>
#include <string>
#include <string_view>
#include <vector>

#include <nlohmann/json.hpp>

#include "bgsim/trace.hpp"
#include "bgsim/types.hpp"

namespace bgsim {

enum class Severity { info, suspicious, abusive };

inline std::string_view to_string(Severity s) {
  switch (s) {
    case Severity::info: return "info";
    case Severity::suspicious: return "suspicious";
    case Severity::abusive: return "abusive";
  }
  return "info";
}

enum class Rule {
  invisible_fgs_chain,
  hidden_sensor_access,
  exfil_volume,
  dormant_spike,
};

inline std::string_view to_string(Rule r) {
  switch (r) {
    case Rule::invisible_fgs_chain: return "invisible-fgs-chain";
    case Rule::hidden_sensor_access: return "hidden-sensor-access";
    case Rule::exfil_volume: return "exfil-volume";
    case Rule::dormant_spike: return "dormant-spike";
  }
  return "?";
}

struct MonitorConfig {
  SimTime window_ms = 900'000;
  int suspicious_invisible_fgs = 3;
  int abusive_invisible_fgs = 10;
  int abusive_hidden_accesses = 10;
  std::uint64_t suspicious_exfil_bytes = 1'000'000;
  std::uint64_t abusive_exfil_bytes = 10'000'000;
  int dormant_windows = 4;
  int spike_hidden_accesses = 10;
};

// Per-app counters over one half-open window [start, end).
struct UsageWindow {
  AppId app;
  SimTime start = 0;
  SimTime end = 0;
  std::uint64_t fgs_starts = 0;
  std::uint64_t invisible_fgs = 0;  // counted at the stop that proves it
  std::uint64_t sensor_accesses = 0;
  std::uint64_t hidden_sensor_accesses = 0;
  std::uint64_t uploads = 0;
  std::uint64_t upload_bytes = 0;
  std::uint64_t location_updates = 0;
  std::uint64_t prior_dormant_windows = 0;  // consecutive quiet windows before
  std::vector<std::uint64_t> invisible_fgs_seqs;
  std::vector<std::uint64_t> hidden_access_seqs;
  std::vector<std::uint64_t> upload_seqs;
  std::set<Permission> hidden_implicated;

  bool dormant() const {
    return fgs_starts == 0 && sensor_accesses == 0 && uploads == 0 &&
           location_updates == 0;
  }
};

struct Finding {
  AppId app;
  Rule rule = Rule::invisible_fgs_chain;
  Severity severity = Severity::info;
  SimTime window_start = 0;
  SimTime window_end = 0;
  std::uint64_t count = 0;  // rule magnitude: cycles, accesses, or bytes
  std::vector<std::uint64_t> evidence;  // trace seq numbers inside the window
};

struct Recommendation {
  enum class Action { none, notify_user, revoke };
  AppId app;
  Action action = Action::none;
  std::optional<Permission> permission;  // set for revoke
};

inline std::string_view to_string(Recommendation::Action a) {
  switch (a) {
    case Recommendation::Action::none: return "none";
    case Recommendation::Action::notify_user: return "notify-user";
    case Recommendation::Action::revoke: return "revoke";
  }
  return "none";
}

struct AppSummary {
  AppId app;
  std::uint64_t fgs_starts = 0;
  std::uint64_t invisible_fgs = 0;
  std::uint64_t sensor_accesses = 0;
  std::uint64_t hidden_sensor_accesses = 0;
  std::uint64_t uploads = 0;
  std::uint64_t upload_bytes = 0;
  std::uint64_t location_updates = 0;
  std::uint64_t open_recording_sessions = 0;
  std::vector<Finding> findings;
  std::vector<Recommendation> recommendations;
};

struct MonitorReport {
  std::vector<AppSummary> apps;  // sorted by app id

  nlohmann::ordered_json to_json() const {
    nlohmann::ordered_json apps_json = nlohmann::ordered_json::array();
    for (const AppSummary& a : apps) {
      nlohmann::ordered_json findings = nlohmann::ordered_json::array();
      for (const Finding& f : a.findings) {
        nlohmann::ordered_json fj;
        fj["rule"] = std::string(to_string(f.rule));
        fj["severity"] = std::string(to_string(f.severity));
        fj["window_start"] = f.window_start;
        fj["window_end"] = f.window_end;
        fj["count"] = f.count;
        fj["evidence"] = f.evidence;
        findings.push_back(std::move(fj));
      }
      nlohmann::ordered_json recs = nlohmann::ordered_json::array();
      for (const Recommendation& r : a.recommendations) {
        nlohmann::ordered_json rj;
        rj["action"] = std::string(to_string(r.action));
        if (r.permission) {
          rj["permission"] = std::string(to_string(*r.permission));
        }
        recs.push_back(std::move(rj));
      }
      nlohmann::ordered_json aj;
      aj["app"] = a.app;
      aj["counters"] = {{"fgs_starts", a.fgs_starts},
                        {"invisible_fgs", a.invisible_fgs},
                        {"sensor_accesses", a.sensor_accesses},
                        {"hidden_sensor_accesses", a.hidden_sensor_accesses},
                        {"uploads", a.uploads},
                        {"upload_bytes", a.upload_bytes},
                        {"location_updates", a.location_updates}};
      aj["open_recording_sessions"] = a.open_recording_sessions;
      aj["findings"] = std::move(findings);
      aj["recommendations"] = std::move(recs);
      apps_json.push_back(std::move(aj));
    }
    nlohmann::ordered_json out;
    out["apps"] = std::move(apps_json);
    return out;
  }
};

class Monitor {
 public:
  explicit Monitor(MonitorConfig config = {}) : config_(config) {}

  const MonitorConfig& config() const { return config_; }

  // Feed one record, in (t, seq) order. Rolls windows forward when the
  // record is past the current window's end.
  Status ingest(const TraceRecord& rec) {
    if (started_ &&
        (rec.t < last_t_ || (rec.t == last_t_ && rec.seq <= last_seq_))) {
      return Err::out_of_order;
    }
    started_ = true;
    last_t_ = rec.t;
    last_seq_ = rec.seq;
    roll_to_(rec.t);
    count_(rec);
    return ok_status();
  }

  // Close whatever window is still open. Call once at end of run; further
  // ingest is undefined.
  void finish() {
    for (auto& [app, w] : current_) {
      close_window_(w);
    }
    current_.clear();
  }

  // Pure rule evaluation over one closed window; also used directly by
  // tests with hand-built windows.
  std::vector<Finding> evaluate(const UsageWindow& w) const {
    std::vector<Finding> out;
    if (w.invisible_fgs > 0) {
      Finding f;
      f.app = w.app;
      f.rule = Rule::invisible_fgs_chain;
      f.count = w.invisible_fgs;
      f.evidence = w.invisible_fgs_seqs;
      f.window_start = w.start;
      f.window_end = w.end;
      if (w.invisible_fgs >=
          static_cast<std::uint64_t>(config_.abusive_invisible_fgs)) {
        f.severity = Severity::abusive;
      } else if (w.invisible_fgs >=
                 static_cast<std::uint64_t>(config_.suspicious_invisible_fgs)) {
        f.severity = Severity::suspicious;
      } else {
        f.severity = Severity::info;
      }
      out.push_back(std::move(f));
    }
    if (w.hidden_sensor_accesses > 0) {
      Finding f;
      f.app = w.app;
      f.rule = Rule::hidden_sensor_access;
      f.count = w.hidden_sensor_accesses;
      f.evidence = w.hidden_access_seqs;
      f.window_start = w.start;
      f.window_end = w.end;
      f.severity = w.hidden_sensor_accesses >=
                           static_cast<std::uint64_t>(
                               config_.abusive_hidden_accesses)
                       ? Severity::abusive
                       : Severity::suspicious;
      out.push_back(std::move(f));
    }
    if (w.upload_bytes >= config_.suspicious_exfil_bytes && w.uploads > 0) {
      Finding f;
      f.app = w.app;
      f.rule = Rule::exfil_volume;
      f.count = w.upload_bytes;
      f.evidence = w.upload_seqs;
      f.window_start = w.start;
      f.window_end = w.end;
      f.severity = w.upload_bytes >= config_.abusive_exfil_bytes
                       ? Severity::abusive
                       : Severity::suspicious;
      out.push_back(std::move(f));
    }
    if (w.prior_dormant_windows >=
            static_cast<std::uint64_t>(config_.dormant_windows) &&
        w.hidden_sensor_accesses >=
            static_cast<std::uint64_t>(config_.spike_hidden_accesses)) {
      Finding f;
      f.app = w.app;
      f.rule = Rule::dormant_spike;
      f.count = w.hidden_sensor_accesses;
      f.evidence = w.hidden_access_seqs;
      f.window_start = w.start;
      f.window_end = w.end;
      f.severity = Severity::abusive;
      out.push_back(std::move(f));
    }
    return out;
  }

  const std::vector<Finding>& findings() const { return findings_; }

  // Drains recommendations produced since the last call. The mitigation
  // loop polls this between events; with mitigation off nobody ever does,
  // and the run is untouched.
  std::vector<Recommendation> take_recommendations() {
    std::vector<Recommendation> out;
    out.swap(pending_);
    return out;
  }

  MonitorReport report() const {
    MonitorReport rep;
    for (const auto& [app, totals] : totals_) {
      AppSummary s;
      s.app = app;
      s.fgs_starts = totals.fgs_starts;
      s.invisible_fgs = totals.invisible_fgs;
      s.sensor_accesses = totals.sensor_accesses;
      s.hidden_sensor_accesses = totals.hidden_sensor_accesses;
      s.uploads = totals.uploads;
      s.upload_bytes = totals.upload_bytes;
      s.location_updates = totals.location_updates;
      auto open = open_sessions_.find(app);
      s.open_recording_sessions =
          open == open_sessions_.end() ? 0 : open->second.size();
      for (const Finding& f : findings_) {
        if (f.app == app) s.findings.push_back(f);
      }
      for (const Recommendation& r : issued_order_) {
        if (r.app == app) s.recommendations.push_back(r);
      }
      rep.apps.push_back(std::move(s));
    }
    return rep;
  }

 private:
  struct Totals {
    std::uint64_t fgs_starts = 0;
    std::uint64_t invisible_fgs = 0;
    std::uint64_t sensor_accesses = 0;
    std::uint64_t hidden_sensor_accesses = 0;
    std::uint64_t uploads = 0;
    std::uint64_t upload_bytes = 0;
    std::uint64_t location_updates = 0;
  };

  static std::optional<Permission> permission_for_action_(
      const std::string& action) {
    if (action == "image-captured") return Permission::camera;
    if (action == "recording-start") return Permission::record_audio;
    if (action == "location-update") return Permission::location;
    if (action == "upload" || action == "file-read") {
      return Permission::file_storage;
    }
    return std::nullopt;
  }

  static bool sensor_action_(const std::string& action) {
    return action == "image-captured" || action == "recording-start" ||
           action == "location-update" || action == "upload" ||
           action == "file-read";
  }

  SimTime window_index_(SimTime t) const { return t / config_.window_ms; }

  // Close every open window that ends at or before the one containing t,
  // crediting skipped empty windows to each app's dormant streak.
  void roll_to_(SimTime t) {
    const SimTime target = window_index_(t);
    if (!window_open_) {
      window_index_open_ = target;
      window_open_ = true;
      return;
    }
    if (target == window_index_open_) return;
    for (auto& [app, w] : current_) {
      close_window_(w);
    }
    current_.clear();
    const SimTime skipped = target - window_index_open_ - 1;
    if (skipped > 0) {
      for (auto& [app, streak] : dormant_streak_) {
        streak += static_cast<std::uint64_t>(skipped);
      }
    }
    window_index_open_ = target;
  }

  void close_window_(UsageWindow& w) {
    w.prior_dormant_windows = dormant_streak_[w.app];
    if (w.dormant()) {
      ++dormant_streak_[w.app];
      return;
    }
    std::vector<Finding> found = evaluate(w);
    dormant_streak_[w.app] = 0;
    for (Finding& f : found) {
      recommend_for_(f, w);
      findings_.push_back(std::move(f));
    }
  }

  void recommend_for_(const Finding& f, const UsageWindow& w) {
    if (f.severity == Severity::info) return;
    if (f.severity == Severity::suspicious) {
      push_recommendation_({Recommendation{
          f.app, Recommendation::Action::notify_user, std::nullopt}});
      return;
    }
    // Abusive: revoke what the evidence implicates; a pure service-cycling
    // finding has no permission to pull, so the user gets told instead.
    std::vector<Recommendation> recs;
    switch (f.rule) {
      case Rule::invisible_fgs_chain:
        recs.push_back({f.app, Recommendation::Action::notify_user,
                        std::nullopt});
        break;
      case Rule::exfil_volume:
        recs.push_back({f.app, Recommendation::Action::revoke,
                        Permission::file_storage});
        break;
      case Rule::hidden_sensor_access:
      case Rule::dormant_spike:
        for (Permission p : w.hidden_implicated) {
          recs.push_back({f.app, Recommendation::Action::revoke, p});
        }
        break;
    }
    push_recommendation_(recs);
  }

  void push_recommendation_(const std::vector<Recommendation>& recs) {
    for (const Recommendation& r : recs) {
      std::string key = r.app + "|" + std::string(to_string(r.action));
      if (r.permission) key += "|" + std::string(to_string(*r.permission));
      if (!issued_keys_.insert(key).second) continue;
      issued_order_.push_back(r);
      pending_.push_back(r);
    }
  }

  UsageWindow& window_for_(const AppId& app) {
    auto it = current_.find(app);
    if (it != current_.end()) return it->second;
    UsageWindow w;
    w.app = app;
    w.start = window_index_open_ * config_.window_ms;
    w.end = w.start + config_.window_ms;
    dormant_streak_.try_emplace(app, 0);
    return current_.emplace(app, std::move(w)).first->second;
  }

  void count_(const TraceRecord& rec) {
    const std::string& action = rec.action;
    if (action == "recording-stop") {
      // Session bookkeeping only; the start was the counted access.
      open_sessions_[rec.actor].erase(
          rec.detail.value("session", std::uint64_t{0}));
      return;
    }
    const bool fgs_start =
        action == "service-start" && rec.resource == "foreground";
    const bool fgs_stop =
        action == "service-stop" && rec.resource == "foreground";
    if (!fgs_start && !fgs_stop && !sensor_action_(action)) return;
    Totals& t = totals_[rec.actor];
    UsageWindow& w = window_for_(rec.actor);
    if (fgs_start) {
      ++t.fgs_starts;
      ++w.fgs_starts;
      return;
    }
    if (fgs_stop) {
      const bool was_visible = rec.detail.value("was_visible", false);
      if (!was_visible) {
        ++t.invisible_fgs;
        ++w.invisible_fgs;
        w.invisible_fgs_seqs.push_back(rec.seq);
      }
      return;
    }
    ++t.sensor_accesses;
    ++w.sensor_accesses;
    if (action == "upload") {
      ++t.uploads;
      ++w.uploads;
      const auto bytes = rec.detail.value("bytes", std::uint64_t{0});
      t.upload_bytes += bytes;
      w.upload_bytes += bytes;
      w.upload_seqs.push_back(rec.seq);
    }
    if (action == "location-update") {
      ++t.location_updates;
      ++w.location_updates;
    }
    if (action == "recording-start") {
      open_sessions_[rec.actor].insert(
          rec.detail.value("session", std::uint64_t{0}));
    }
    if (rec.vis == Visibility::hidden) {
      ++t.hidden_sensor_accesses;
      ++w.hidden_sensor_accesses;
      w.hidden_access_seqs.push_back(rec.seq);
      if (auto p = permission_for_action_(action)) {
        w.hidden_implicated.insert(*p);
      }
    }
  }

  MonitorConfig config_;
  bool started_ = false;
  bool window_open_ = false;
  SimTime last_t_ = 0;
  std::uint64_t last_seq_ = 0;
  SimTime window_index_open_ = 0;
  std::map<AppId, UsageWindow> current_;
  std::map<AppId, std::uint64_t> dormant_streak_;
  std::map<AppId, Totals> totals_;
  std::map<AppId, std::set<std::uint64_t>> open_sessions_;
  std::vector<Finding> findings_;
  std::vector<Recommendation> pending_;
  std::vector<Recommendation> issued_order_;
  std::set<std::string> issued_keys_;
};

}  // namespace bgsim
