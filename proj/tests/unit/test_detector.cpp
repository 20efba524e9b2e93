/*
 * Copyright (c) 2026, The sessmon Authors
 *
 * Licensed under the Apache License, Version 2.0 (the "License");
 * you may not use this file except in compliance with the License.
 * You may obtain a copy of the License at
 *
 *     http://www.apache.org/licenses/LICENSE-2.0
 *
 * Unless required by applicable law or agreed to in writing, software
 * distributed under the License is distributed on an "AS IS" BASIS,
 * WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
 * See the License for the specific language governing permissions and
 * limitations under the License.
*/

#include <algorithm>
#include <atomic>
#include <chrono>
#include <random>
#include <thread>
#include <vector>

#include "doctest.h"
#include "detector_schedules.hpp"
#include "sessmon/detector.hpp"

using namespace sessmon;
using namespace std::chrono_literals;

using namespace sessmon::testing;

TEST_SUITE("detector") {

TEST_CASE("a lone thread with a disabled action is a total deadlock") {
  std::vector<DeadlockSite> seen;
  DetectorOptions opt;
  opt.on_deadlock = [&](DeadlockSite s) { seen.push_back(s); };
  Detector d(1, opt);
  Channel mock(1, "mock");
  try {
    d.detect(1, one(ChannelAction::receive(mock)), {});
    FAIL("expected a deadlock");
  } catch (const DeadlockException& e) {
    CHECK(e.site() == DeadlockSite::LastThread);
    CHECK(e.live() == 1);
    CHECK(std::string(e.what()).find("deadlock!") == 0);
  }
  CHECK(seen == std::vector<DeadlockSite>{DeadlockSite::LastThread});
  CHECK(d.suspended() == 0);
  CHECK(d.barrier_count() == 0);
}

TEST_CASE("enabled actions take the fast path") {
  Detector d(2);
  Channel mock(1, "mock");
  auto out = d.detect(1, one(ChannelAction::send(mock, Token{TypeTag::String})), {});
  CHECK(std::holds_alternative<Ack>(out.value));
  CHECK(d.suspended() == 0);
  auto got = d.detect(1, one(ChannelAction::receive(mock)), {});
  CHECK(got.value == Value(Token{TypeTag::String}));
  CHECK(d.stats().acquisitions == 2);
}

TEST_CASE("simultaneous misses are serialised by the semaphore") {
  auto s = simultaneous_miss(true);
  CHECK(s.alice_first == Ending::Returned);
  CHECK(s.bob_first == Ending::Returned);
  CHECK(s.stats.max_occupancy == 1);
  CHECK(s.stats.invariant_failures == 0);
}

TEST_CASE("without the semaphore the same schedule throws spuriously") {
  auto s = simultaneous_miss(false);
  CHECK(s.alice_first == Ending::Deadlock);
  CHECK(s.bob_first == Ending::Aborted);
  CHECK(s.stats.max_occupancy == 2);
}

TEST_CASE("the barrier holds the resumer until the resumed thread has decremented") {
  auto s = resumption_race(true);
  CHECK(s.alice_first == Ending::Returned);
  CHECK(s.bob_first == Ending::Returned);
  CHECK(s.bob_second == Ending::Returned);
  CHECK(s.alice_second == Ending::Returned);
  CHECK(s.stats.invariant_failures == 0);
  CHECK(s.stats.resumption_failures == 0);
  CHECK(s.stats.barrier_exchanges >= 1);
}

TEST_CASE("without barriers the resumer sees a stale count and throws") {
  auto s = resumption_race(false);
  CHECK(s.alice_first == Ending::Returned);
  CHECK(s.bob_first == Ending::Returned);
  CHECK(s.bob_second == Ending::Deadlock);
  CHECK(s.alice_second == Ending::Aborted);
  CHECK(s.stats.invariant_failures >= 1);
}

TEST_CASE("three threads in a receive cycle") {
  Channel ab(0, "ab"), bc(0, "bc"), ca(0, "ca");
  std::atomic<int> reported{0};
  std::atomic<DeadlockSite> site{DeadlockSite::Unregister};
  DetectorOptions opt;
  opt.on_deadlock = [&](DeadlockSite s) {
    site = s;
    ++reported;
  };
  Detector d(3, opt);
  std::vector<Ending> end(3, Ending::Other);
  std::vector<std::thread> ts;
  ts.emplace_back([&] { end[0] = attempt(d, 1, one(ChannelAction::receive(ca))); });
  ts.emplace_back([&] { end[1] = attempt(d, 2, one(ChannelAction::receive(ab))); });
  ts.emplace_back([&] { end[2] = attempt(d, 3, one(ChannelAction::receive(bc))); });
  // Exactly one of them is last and throws; the other two stay suspended.
  for (int spin = 0; spin < 2000 && reported == 0; ++spin) std::this_thread::sleep_for(1ms);
  REQUIRE(reported.load() == 1);
  CHECK(site.load() == DeadlockSite::LastThread);
  std::this_thread::sleep_for(20ms);
  CHECK(d.suspended() == 2);
  halt(d);
  for (auto& t : ts) t.join();
  CHECK(std::count(end.begin(), end.end(), Ending::Deadlock) == 1);
  CHECK(std::count(end.begin(), end.end(), Ending::Aborted) == 2);
  CHECK(d.suspended() == 0);
  CHECK(d.barrier_count() == 0);
  CHECK(d.stats().invariant_failures == 0);
}

TEST_CASE("propagation delivers the deadlock to every suspended thread") {
  Channel ab(0, "ab"), bc(0, "bc"), ca(0, "ca");
  DetectorOptions opt;
  opt.propagate_deadlock = true;
  Detector d(3, opt);
  std::vector<Ending> end(3, Ending::Other);
  std::vector<std::thread> ts;
  ts.emplace_back([&] { end[0] = attempt(d, 1, one(ChannelAction::receive(ca))); });
  ts.emplace_back([&] { end[1] = attempt(d, 2, one(ChannelAction::receive(ab))); });
  ts.emplace_back([&] { end[2] = attempt(d, 3, one(ChannelAction::receive(bc))); });
  for (auto& t : ts) t.join();
  CHECK(std::count(end.begin(), end.end(), Ending::Deadlock) == 3);
  CHECK(d.suspended() == 0);
}

TEST_CASE("retiring the last runnable thread signals the suspended ones") {
  Detector d(2);
  Channel m(1, "m");
  Ending e = Ending::Other;
  std::thread waiter([&] { e = attempt(d, 1, one(ChannelAction::receive(m))); });
  while (d.suspended() != 1) std::this_thread::sleep_for(1ms);
  {
    auto g = d.enter();
    d.retire_locked();
  }
  waiter.join();
  CHECK(e == Ending::Deadlock);
  CHECK(d.live_total() == 1);
  CHECK(d.suspended() == 0);
}

TEST_CASE("retiring with nobody suspended is quiet") {
  Detector d(2);
  {
    auto g = d.enter();
    d.retire_locked();
    d.retire_locked();
  }
  CHECK(d.live_total() == 0);
  CHECK_FALSE(d.halted());
}

TEST_CASE("a halted detector refuses further work") {
  Detector d(2);
  halt(d);
  Channel m(1, "m");
  CHECK(attempt(d, 1, one(ChannelAction::send(m, Token{}))) == Ending::Aborted);
  CHECK(snapshot(m).buffer.empty());
}

TEST_CASE("completion checks run inside the critical section") {
  Detector d(2);
  Channel m(0, "m");
  std::atomic<int> checked{0};
  std::atomic<bool> held{false};
  CompletionCheck check = [&](const SelectOutcome&) -> std::exception_ptr {
    ++checked;
    held = d.holds_semaphore();
    return nullptr;
  };
  std::thread t([&] { d.detect(1, one(ChannelAction::receive(m)), check); });
  while (d.suspended() != 1) std::this_thread::sleep_for(1ms);
  d.detect(2, one(ChannelAction::send(m, Token{})), check);
  t.join();
  CHECK(checked.load() == 2);
  CHECK(held.load());
}

TEST_CASE("a failing check halts the session") {
  Detector d(3);
  Channel m(1, "m"), idle(1, "idle");
  Ending other = Ending::Other;
  std::thread t([&] { other = attempt(d, 3, one(ChannelAction::receive(idle))); });
  while (d.suspended() != 1) std::this_thread::sleep_for(1ms);
  CompletionCheck bad = [](const SelectOutcome&) {
    return std::make_exception_ptr(std::runtime_error("bad event"));
  };
  CHECK_THROWS_WITH(d.detect(1, one(ChannelAction::send(m, Token{})), bad), "bad event");
  t.join();
  CHECK(other == Ending::Aborted);
  CHECK(d.halted());
}

TEST_CASE("barrier map bookkeeping") {
  Detector d(4);
  Channel mc1(0, "mc1"), mc2(0, "mc2"), mc3(0, "mc3");
  auto g = d.enter();

  CHECK_FALSE(d.uninstall_barrier(mc1));

  auto b1 = d.install_barrier(one(ChannelAction::send(mc1, Token{})));
  CHECK(d.barrier_count() == 1);
  auto got = d.uninstall_barrier(mc1);
  REQUIRE(got);
  CHECK(*got == b1);
  CHECK(d.barrier_count() == 0);

  std::vector<ChannelAction> alts{ChannelAction::receive(mc2), ChannelAction::receive(mc3)};
  auto b2 = d.install_barrier(alts);
  auto b3 = d.install_barrier(one(ChannelAction::receive(mc1)));
  CHECK(d.barrier_count() == 2);
  auto via_second = d.uninstall_barrier(mc3);
  REQUIRE(via_second);
  CHECK(*via_second == b2);
  CHECK(d.barrier_count() == 1);
  CHECK(*d.uninstall_barrier(mc1) == b3);

  d.install_barrier(one(ChannelAction::receive(mc2)));
  d.install_barrier(one(ChannelAction::send(mc2, Token{})));
  CHECK_THROWS_AS(d.uninstall_barrier(mc2), InternalError);
  CHECK(d.barrier_count() == 0);
}

TEST_CASE("stress: paired rendezvous threads never deadlock spuriously") {
  for (int round = 0; round < 20; ++round) {
    Detector d(4);
    std::vector<Channel> chans{Channel(0, "p0"), Channel(0, "p1")};
    std::atomic<int> spurious{0};
    std::vector<std::thread> ts;
    for (int t = 0; t < 4; ++t) {
      ts.emplace_back([&, t] {
        const Channel& ch = chans[t / 2];
        const bool sender = t % 2 == 0;
        std::mt19937 rng(static_cast<unsigned>(round * 4 + t));
        for (int k = 0; k < 100; ++k) {
          if (rng() % 4 == 0) std::this_thread::yield();
          auto act = sender ? ChannelAction::send(ch, Token{TypeTag::Long}) : ChannelAction::receive(ch);
          if (attempt(d, static_cast<ThreadKey>(t + 1), one(act)) != Ending::Returned) ++spurious;
        }
        auto g = d.enter();
        d.retire_locked();
      });
    }
    for (auto& t : ts) t.join();
    CHECK(spurious.load() == 0);
    auto st = d.stats();
    CHECK(st.invariant_failures == 0);
    CHECK(st.max_occupancy == 1);
    CHECK(st.resumption_failures == 0);
    CHECK(d.barrier_count() == 0);
    CHECK(d.suspended() == 0);
  }
}

}  // TEST_SUITE
