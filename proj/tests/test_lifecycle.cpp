#include <string>
#include <vector>

#include "doctest.h"

#include "bgsim/apps.hpp"
#include "bgsim/device.hpp"
#include "bgsim/lifecycle.hpp"
#include "bgsim/types.hpp"
#include "test_util.hpp"

using bgsim::AppRegistry;
using bgsim::DeviceModel;
using bgsim::DeviceProfile;
using bgsim::Err;
using bgsim::ExecutionContext;
using bgsim::Expected;
using bgsim::Lifecycle;
using bgsim::PlatformName;
using bgsim::PlatformVersion;
using bgsim::ServiceId;
using bgsim::StopReport;
using bgsim::Visibility;
using testutil::count_records;
using testutil::SimFixture;

namespace {

struct LifeFixture : SimFixture {
  AppRegistry apps;
  DeviceModel device;
  Lifecycle lifecycle;

  explicit LifeFixture(PlatformName platform = PlatformName::pie)
      : device(kernel, trace, PlatformVersion::make(platform),
               DeviceProfile{}, {}),
        lifecycle(kernel, trace, apps, device) {
    apps.install("app");
  }
};

}  // namespace

TEST_CASE("background services need a visible UI on restricted platforms") {
  LifeFixture f;
  Expected<ServiceId> closed = f.lifecycle.start_background_service(
      "app", ExecutionContext::scheduler("app"));
  REQUIRE_FALSE(closed);
  CHECK(closed.error() == Err::illegal_state);
  CHECK(count_records(f.trace, "illegal-state", "service", "rejected") == 1);

  f.lifecycle.set_ui_visible("app", true);
  Expected<ServiceId> open = f.lifecycle.start_background_service(
      "app", ExecutionContext::ui("app"));
  REQUIRE(open);
  CHECK(f.lifecycle.service_live(open.value()));
  CHECK(f.lifecycle.stop_background(open.value()));
}

TEST_CASE("unknown apps cannot start services") {
  LifeFixture f;
  Expected<ServiceId> r = f.lifecycle.start_foreground_service("ghost", "x");
  REQUIRE_FALSE(r);
  CHECK(r.error() == Err::unknown_app);
}

TEST_CASE("notification visibility depends on outliving the grace window") {
  // Sweep stop times around the 5000 ms default grace; the notification
  // exists afterwards iff the service survived to the deadline.
  for (bgsim::SimTime d = 0; d <= 10'000; d += 500) {
    LifeFixture f;
    Expected<ServiceId> sid = f.lifecycle.start_foreground_service("app", "s");
    REQUIRE(sid);
    Expected<StopReport> report = Err::illegal_state;
    f.kernel.schedule(d, bgsim::EventKind::service_stop, [&, s = sid.value()] {
      report = f.lifecycle.stop_foreground(s, true);
    });
    f.kernel.run_until(d);
    REQUIRE(report);
    CAPTURE(d);
    CHECK(report.value().was_visible == (d >= 5'000));
    CHECK(report.value().runtime_ms == d);
    CHECK(count_records(f.trace, "notification-posted") ==
          (d >= 5'000 ? 1 : 0));
  }
}

TEST_CASE("a stop racing the grace deadline loses to it") {
  LifeFixture f;
  Expected<ServiceId> sid = f.lifecycle.start_foreground_service("app", "s");
  REQUIRE(sid);
  // Same timestamp as the grace expiry: the grace event was scheduled
  // first, so it fires first and the notification becomes visible.
  bool visible = false;
  f.kernel.schedule(5'000, bgsim::EventKind::service_stop,
                    [&, s = sid.value()] {
                      visible = f.lifecycle.stop_foreground(s, true)
                                    .value()
                                    .was_visible;
                    });
  f.kernel.run_until(5'000);
  CHECK(visible);
}

TEST_CASE("suppressed notifications keep the service invisible") {
  LifeFixture f;
  f.lifecycle.user_disable_notifications("app");
  Expected<ServiceId> sid = f.lifecycle.start_foreground_service("app", "s");
  REQUIRE(sid);
  f.advance_to(8'000);
  CHECK(count_records(f.trace, "notification-suppressed") == 1);
  CHECK(count_records(f.trace, "notification-posted") == 0);
  CHECK(f.lifecycle.visibility_for("app") == Visibility::hidden);
  Expected<StopReport> report =
      f.lifecycle.stop_foreground(sid.value(), true);
  REQUIRE(report);
  CHECK_FALSE(report.value().was_visible);
}

TEST_CASE("re-enabled notifications show up for later services") {
  LifeFixture f;
  f.lifecycle.user_disable_notifications("app");
  f.lifecycle.user_enable_notifications("app");
  Expected<ServiceId> sid = f.lifecycle.start_foreground_service("app", "s");
  REQUIRE(sid);
  f.advance_to(6'000);
  CHECK(count_records(f.trace, "notification-posted") == 1);
  CHECK(f.lifecycle.visibility_for("app") == Visibility::visible);
}

TEST_CASE("apps cannot cancel the sticky notification of a live service") {
  LifeFixture f;
  Expected<ServiceId> sid = f.lifecycle.start_foreground_service("app", "s");
  REQUIRE(sid);
  f.advance_to(6'000);
  const bgsim::ServiceRecord* svc = f.lifecycle.find_service(sid.value());
  REQUIRE(svc != nullptr);
  REQUIRE(svc->notification != 0);
  CHECK_FALSE(f.lifecycle.app_cancel_notification("app", svc->notification));
  CHECK(f.lifecycle.visibility_for("app") == Visibility::visible);
  // After the service stops the notification can be dropped.
  REQUIRE(f.lifecycle.stop_foreground(sid.value(), false));
  CHECK(f.lifecycle.app_cancel_notification("app", svc->notification));
  CHECK(f.lifecycle.visibility_for("app") == Visibility::hidden);
}

TEST_CASE("stopping with removal clears the notification immediately") {
  LifeFixture f;
  Expected<ServiceId> sid = f.lifecycle.start_foreground_service("app", "s");
  REQUIRE(sid);
  f.advance_to(6'000);
  REQUIRE(f.lifecycle.stop_foreground(sid.value(), true));
  CHECK(f.lifecycle.visibility_for("app") == Visibility::hidden);
}

TEST_CASE("double stop and foreign stops are contract errors by value") {
  LifeFixture f;
  Expected<ServiceId> sid = f.lifecycle.start_foreground_service("app", "s");
  REQUIRE(sid);
  REQUIRE(f.lifecycle.stop_foreground(sid.value(), true));
  Expected<StopReport> again = f.lifecycle.stop_foreground(sid.value(), true);
  REQUIRE_FALSE(again);
  CHECK(again.error() == Err::not_foregrounded);
  CHECK_FALSE(f.lifecycle.stop_background(sid.value()));
}

TEST_CASE("stop-all kills every service with the given cause") {
  LifeFixture f;
  f.lifecycle.set_ui_visible("app", true);
  Expected<ServiceId> bg = f.lifecycle.start_background_service(
      "app", ExecutionContext::ui("app"));
  Expected<ServiceId> fg = f.lifecycle.start_foreground_service("app", "s");
  REQUIRE(bg);
  REQUIRE(fg);
  f.lifecycle.stop_all_services("app", "battery");
  CHECK_FALSE(f.lifecycle.service_live(bg.value()));
  CHECK_FALSE(f.lifecycle.service_live(fg.value()));
  const bgsim::TraceRecord* last =
      testutil::find_last(f.trace, "service-stop");
  REQUIRE(last != nullptr);
  CHECK(last->detail.value("cause", std::string{}) == "battery");
}

TEST_CASE("stopped-service callbacks fire for both kinds") {
  LifeFixture f;
  std::vector<ServiceId> stopped;
  f.lifecycle.set_on_service_stopped(
      [&](ServiceId s) { stopped.push_back(s); });
  f.lifecycle.set_ui_visible("app", true);
  ServiceId bg = f.lifecycle
                     .start_background_service("app",
                                               ExecutionContext::ui("app"))
                     .value();
  ServiceId fg = f.lifecycle.start_foreground_service("app", "s").value();
  f.lifecycle.stop_background(bg);
  f.lifecycle.stop_foreground(fg, true);
  CHECK(stopped == std::vector<ServiceId>{bg, fg});
}

TEST_CASE("context lookup only works for live foreground services") {
  LifeFixture f;
  ServiceId fg = f.lifecycle
                     .start_foreground_service("app", "s",
                                               bgsim::ServiceType::location)
                     .value();
  Expected<ExecutionContext> ctx = f.lifecycle.context_for(fg);
  REQUIRE(ctx);
  CHECK(ctx.value().is_foreground_service());
  CHECK(ctx.value().service_type == bgsim::ServiceType::location);
  f.lifecycle.stop_foreground(fg, true);
  CHECK_FALSE(f.lifecycle.context_for(fg));
}

TEST_CASE("ui changes are deduplicated and recorded with their cause") {
  LifeFixture f;
  f.lifecycle.set_ui_visible("app", true);
  f.lifecycle.set_ui_visible("app", true);
  CHECK(count_records(f.trace, "ui-change") == 1);
  f.lifecycle.force_all_ui_hidden();
  CHECK(count_records(f.trace, "ui-change") == 2);
  const bgsim::TraceRecord* last = testutil::find_last(f.trace, "ui-change");
  REQUIRE(last != nullptr);
  CHECK(last->detail.value("cause", std::string{}) == "idle");
  CHECK_FALSE(f.lifecycle.ui_visible("app"));
}
