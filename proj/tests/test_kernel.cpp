#include <vector>

#include "doctest.h"

#include "bgsim/kernel.hpp"
#include "bgsim/rng.hpp"
#include "bgsim/types.hpp"
#include "script_runner.hpp"

using bgsim::EventKind;
using bgsim::Kernel;

TEST_CASE("kernel dispatches by time with first-scheduled-first ties") {
  Kernel k;
  std::vector<int> order;
  k.schedule(100, EventKind::device_change, [&] { order.push_back(1); });
  k.schedule(50, EventKind::device_change, [&] { order.push_back(2); });
  k.schedule(100, EventKind::device_change, [&] { order.push_back(3); });
  CHECK(k.run_until(200) == 3);
  CHECK(order == std::vector<int>{2, 1, 3});
}

TEST_CASE("run_until is inclusive and leaves the clock at the last dispatch") {
  Kernel k;
  k.schedule(100, EventKind::device_change, [] {});
  k.schedule(200, EventKind::device_change, [] {});
  k.schedule(201, EventKind::device_change, [] {});
  CHECK(k.run_until(200) == 2);
  CHECK(k.now() == 200);
  CHECK(k.run_until(300) == 1);
  CHECK(k.now() == 201);
  CHECK(k.run_until(400) == 0);
  CHECK(k.now() == 201);
}

TEST_CASE("cancel removes a pending event exactly once") {
  Kernel k;
  std::vector<int> order;
  bgsim::EventId a =
      k.schedule(10, EventKind::device_change, [&] { order.push_back(1); });
  bgsim::EventId b =
      k.schedule(20, EventKind::device_change, [&] { order.push_back(2); });
  CHECK(k.cancel(a));
  CHECK_FALSE(k.cancel(a));
  CHECK(k.run_until(100) == 1);
  CHECK(order == std::vector<int>{2});
  CHECK_FALSE(k.cancel(b));  // already fired
}

TEST_CASE("events scheduled during dispatch join the same run") {
  Kernel k;
  std::vector<int> order;
  k.schedule(10, EventKind::device_change, [&] {
    order.push_back(1);
    k.schedule(k.now(), EventKind::device_change, [&] { order.push_back(3); });
  });
  k.schedule(10, EventKind::device_change, [&] { order.push_back(2); });
  CHECK(k.run_until(10) == 3);
  // The nested event shares t=10 but was scheduled last, so it fires last.
  CHECK(order == std::vector<int>{1, 2, 3});
}

TEST_CASE("scheduling into the past is a contract violation") {
  Kernel k;
  k.schedule(100, EventKind::device_change, [] {});
  k.run_until(100);
  CHECK_THROWS_AS(k.schedule(50, EventKind::device_change, [] {}),
                  bgsim::SimError);
  CHECK_NOTHROW(k.schedule(100, EventKind::device_change, [] {}));
}

TEST_CASE("post-dispatch hook runs once per event") {
  Kernel k;
  int hooks = 0;
  k.set_post_dispatch([&] { ++hooks; });
  k.schedule(1, EventKind::device_change, [] {});
  k.schedule(2, EventKind::device_change, [] {});
  k.schedule(3, EventKind::device_change, [] {});
  k.run_until(10);
  CHECK(hooks == 3);
}

TEST_CASE("post-dispatch hook sees work scheduled by the dispatched event") {
  Kernel k;
  std::vector<int> order;
  k.set_post_dispatch([&] { order.push_back(-1); });
  k.schedule(10, EventKind::device_change, [&] {
    order.push_back(1);
    k.schedule(20, EventKind::device_change, [&] { order.push_back(2); });
  });
  k.run_until(30);
  CHECK(order == std::vector<int>{1, -1, 2, -1});
}

TEST_CASE("kernel matches the brute-force reference on random schedules") {
  bgsim::Rng rng(2026);
  for (int i = 0; i < 25; ++i) {
    const refexec::Script script = testutil::random_script(rng);
    const testutil::ScriptResult sim = testutil::run_on_kernel(script);
    const testutil::ScriptResult ref = testutil::run_on_reference(script);
    CAPTURE(i);
    CHECK(sim.order == ref.order);
    CHECK(sim.dispatched == ref.dispatched);
    if (sim.dispatched > 0) CHECK(sim.final_now == ref.final_now);
  }
}
