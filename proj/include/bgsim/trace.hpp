// Append-only audit log. One record per line on disk; the same stream feeds
// the in-run monitor and the replay path, so the trace is the single source of
// truth for everything the defender is allowed to see.

#pragma once

#include <cstdint>
#include <functional>
#include <istream>
#include <ostream>
#include <string>
#include <utility>
#include <vector>

#include <nlohmann/json.hpp>

#include "bgsim/types.hpp"

namespace bgsim {

struct TraceRecord {
  SimTime t = 0;
  std::uint64_t seq = 0;  // strictly increasing, assigned at append
  std::string actor;      // app id or system actor (system, media-server, face-unlock)
  std::string action;
  std::string resource;
  std::string outcome;
  Visibility vis = Visibility::na;
  nlohmann::ordered_json detail = nlohmann::ordered_json::object();
};

// The header line carries everything replay needs to reproduce the live
// monitor verdicts: seed and scenario for provenance, plus the exact monitor
// configuration the run used.
struct TraceHeader {
  std::string schema = "bgsim-trace/1";
  std::uint64_t seed = 0;
  std::string scenario;
  SimTime horizon_ms = 0;
  bool mitigation = false;
  nlohmann::ordered_json monitor = nlohmann::ordered_json::object();
};

class TraceLog {
 public:
  using Listener = std::function<void(const TraceRecord&)>;
  using Clock = std::function<SimTime()>;

  explicit TraceLog(TraceHeader header = {}, Clock clock = {})
      : header_(std::move(header)), clock_(std::move(clock)) {}

  const TraceHeader& header() const { return header_; }
  void set_header(TraceHeader h) { header_ = std::move(h); }
  void set_clock(Clock clock) { clock_ = std::move(clock); }

  const TraceRecord& append(
      std::string actor, std::string action, std::string resource,
      std::string outcome, Visibility vis = Visibility::na,
      nlohmann::ordered_json detail = nlohmann::ordered_json::object()) {
    TraceRecord rec;
    rec.t = clock_ ? clock_() : 0;
    rec.seq = next_seq_++;
    rec.actor = std::move(actor);
    rec.action = std::move(action);
    rec.resource = std::move(resource);
    rec.outcome = std::move(outcome);
    rec.vis = vis;
    // Producers build details incrementally; an untouched json is null, and
    // the on-disk contract wants an object either way.
    rec.detail = detail.is_null() ? nlohmann::ordered_json::object()
                                  : std::move(detail);
    records_.push_back(std::move(rec));
    const TraceRecord& stored = records_.back();
    for (const auto& listener : listeners_) {
      listener(stored);
    }
    return stored;
  }

  void add_listener(Listener fn) { listeners_.push_back(std::move(fn)); }

  const std::vector<TraceRecord>& records() const { return records_; }

  void write(std::ostream& out) const {
    out << header_line(header_) << "\n";
    for (const auto& rec : records_) {
      out << record_line(rec) << "\n";
    }
  }

  std::string to_string() const {
    std::string out = header_line(header_) + "\n";
    for (const auto& rec : records_) {
      out += record_line(rec);
      out += '\n';
    }
    return out;
  }

  static std::string header_line(const TraceHeader& h) {
    nlohmann::ordered_json j;
    j["schema"] = h.schema;
    j["seed"] = h.seed;
    j["scenario"] = h.scenario;
    j["horizon_ms"] = h.horizon_ms;
    j["mitigation"] = h.mitigation;
    j["monitor"] = h.monitor;
    return j.dump();
  }

  // Field order is fixed so identical runs produce identical bytes.
  static std::string record_line(const TraceRecord& rec) {
    nlohmann::ordered_json j;
    j["t"] = rec.t;
    j["seq"] = rec.seq;
    j["actor"] = rec.actor;
    j["action"] = rec.action;
    j["resource"] = rec.resource;
    j["outcome"] = rec.outcome;
    j["vis"] = std::string(bgsim::to_string(rec.vis));
    j["detail"] = rec.detail;
    return j.dump();
  }

 private:
  TraceHeader header_;
  Clock clock_;
  std::vector<TraceRecord> records_;
  std::vector<Listener> listeners_;
  std::uint64_t next_seq_ = 1;
};

struct ParsedTrace {
  TraceHeader header;
  std::vector<TraceRecord> records;
  bool truncated = false;  // file ended mid-record; report covers the prefix
};

inline Visibility visibility_from_string(const std::string& s) {
  if (s == "visible") return Visibility::visible;
  if (s == "hidden") return Visibility::hidden;
  if (s == "suppressed") return Visibility::suppressed;
  return Visibility::na;
}

// Parses a trace stream. Bad header or a malformed record mid-file is a
// parse error; a malformed final record is reported as truncation instead so
// partial logs stay analyzable. Ordering violations are the monitor's call,
// not the parser's.
inline Expected<ParsedTrace> parse_trace(std::istream& in) {
  ParsedTrace out;
  std::string line;
  if (!std::getline(in, line)) {
    return Err::parse_error;
  }
  try {
    auto j = nlohmann::ordered_json::parse(line);
    if (j.value("schema", std::string{}) != "bgsim-trace/1") {
      return Err::parse_error;
    }
    out.header.schema = j["schema"].get<std::string>();
    out.header.seed = j.value("seed", std::uint64_t{0});
    out.header.scenario = j.value("scenario", std::string{});
    out.header.horizon_ms = j.value("horizon_ms", SimTime{0});
    out.header.mitigation = j.value("mitigation", false);
    if (j.contains("monitor") && j["monitor"].is_object()) {
      out.header.monitor = j["monitor"];
    }
  } catch (const nlohmann::json::exception&) {
    return Err::parse_error;
  }

  std::vector<std::string> lines;
  while (std::getline(in, line)) {
    if (!line.empty()) {
      lines.push_back(line);
    }
  }
  for (std::size_t i = 0; i < lines.size(); ++i) {
    try {
      auto j = nlohmann::ordered_json::parse(lines[i]);
      TraceRecord rec;
      rec.t = j.at("t").get<SimTime>();
      rec.seq = j.at("seq").get<std::uint64_t>();
      rec.actor = j.at("actor").get<std::string>();
      rec.action = j.at("action").get<std::string>();
      rec.resource = j.at("resource").get<std::string>();
      rec.outcome = j.at("outcome").get<std::string>();
      rec.vis = visibility_from_string(j.at("vis").get<std::string>());
      rec.detail = j.at("detail");
      if (!rec.detail.is_object()) {
        throw nlohmann::json::type_error::create(302, "detail not an object",
                                                 &j);
      }
      out.records.push_back(std::move(rec));
    } catch (const nlohmann::json::exception&) {
      if (i + 1 == lines.size()) {
        out.truncated = true;
        break;
      }
      return Err::parse_error;
    }
  }
  return out;
}

}  // namespace bgsim
