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

#include <chrono>
#include <latch>
#include <thread>
#include <vector>

#include "doctest.h"
#include "sessmon/monitor.hpp"

using namespace sessmon;
using namespace std::chrono_literals;

namespace {

const Role b1{"buyer1"}, b2{"buyer2"}, sel{"seller"};

SessionSpec two_buyer() {
  using namespace spec;
  return cat({async(TypeTag::String, b1, sel),
              par({cat({async(TypeTag::Double, sel, b1), async(TypeTag::Double, b1, b2)}),
                   async(TypeTag::Double, sel, b2)}),
              async(TypeTag::Boolean, b2, sel)});
}

void wait_suspended(const Monitor& m, std::size_t k) {
  for (int spin = 0; spin < 5000 && m.detector().suspended() != k; ++spin) {
    std::this_thread::sleep_for(1ms);
  }
  REQUIRE(m.detector().suspended() == k);
}

}  // namespace

TEST_SUITE("monitor") {

TEST_CASE("a monitor needs at least one thread") {
  CHECK_THROWS_AS(Monitor(two_buyer(), 0), UsageError);
  Monitor m(two_buyer(), 3);
  CHECK(m.residual() == initial(two_buyer()));
  CHECK(m.detector().live_total() == 3);
  CHECK(m.detector().suspended() == 0);
}

TEST_CASE("linking") {
  Monitor m(two_buyer(), 3);
  Channel c5(1, "c5"), c1(0, "c1");
  m.link(c5, sel, b1);
  m.link(c1, b1, sel);
  CHECK_THROWS_AS(m.link(c5, sel, b1), UsageError);
  CHECK_THROWS_AS(m.link(Channel(1, "cx"), b1, b1), UsageError);
  auto snap = m.snapshot();
  REQUIRE(snap.links.size() == 2);
  for (const auto& l : snap.links) {
    CHECK(l.mock.capacity() == l.real.capacity());
    CHECK_FALSE(l.mock == l.real);
  }
}

TEST_CASE("registration is bounded by n") {
  Monitor m(two_buyer(), 3);
  m.register_thread(b1);
  CHECK_THROWS_AS(m.register_thread(b2), UsageError);
  std::vector<std::thread> ts;
  ts.emplace_back([&] { m.register_thread(b2); });
  ts.emplace_back([&] { m.register_thread(sel); });
  for (auto& t : ts) t.join();
  bool refused = false;
  std::thread fourth([&] {
    try {
      m.register_thread(Role{"extra"});
    } catch (const UsageError&) {
      refused = true;
    }
  });
  fourth.join();
  CHECK(refused);
}

TEST_CASE("a thread may register after the session has started") {
  const Role a{"a"}, b{"b"};
  Monitor m(spec::async(TypeTag::Long, a, b), 2);
  Channel ab(0, "ab");
  m.link(ab, a, b);
  std::thread ta([&] {
    m.register_thread(a);
    m.guarded_send(ab, std::int64_t{7});
    m.unregister_thread();
  });
  // a is suspended on the rendezvous; b is counted live though not yet here.
  wait_suspended(m, 1);
  m.register_thread(b);
  CHECK(m.guarded_receive(ab) == Value{std::int64_t{7}});
  m.unregister_thread();
  ta.join();
  CHECK(is_terminated(m.residual()));
  CHECK_THROWS_AS(m.link(Channel(1, "late"), a, b), UsageError);
}

TEST_CASE("a guarded send advances the residual past the first exchange") {
  Monitor m(two_buyer(), 3);
  Channel c1(1, "c1");
  m.link(c1, b1, sel);
  m.register_thread(b1);
  m.guarded_send(c1, std::string("book"));
  auto expect = step(initial(two_buyer()), {EventKind::Send, b1, sel, TypeTag::String});
  REQUIRE(expect);
  CHECK(m.residual() == *expect);
  CHECK(snapshot(c1).buffer.size() == 1);
  CHECK(m.lockstep_ok());
  REQUIRE(m.trace().size() == 1);
  CHECK(to_string(m.trace()[0]) == "send buyer1->seller String");
  CHECK_THROWS_AS(m.link(Channel(1), b1, b2), UsageError);
}

TEST_CASE("sending a Long where a String is due is a safety violation") {
  Monitor m(two_buyer(), 3);
  Channel c1(1, "c1");
  m.link(c1, b1, sel);
  m.register_thread(b1);
  try {
    m.guarded_send(c1, std::int64_t{42});
    FAIL("expected a safety violation");
  } catch (const SafetyViolation& e) {
    CHECK(to_string(e.event()) == "send buyer1->seller Long");
    REQUIRE(e.expected().size() == 1);
    CHECK(e.expected()[0].type == TypeTag::String);
    CHECK(e.channel() == "c1");
    CHECK(std::string(e.what()).find("send buyer1->seller Long") != std::string::npos);
  }
  CHECK(m.poisoned());
  CHECK(snapshot(c1).buffer.empty());
  CHECK(m.residual() == initial(two_buyer()));
  CHECK_THROWS_AS(m.guarded_send(c1, std::string("book")), SessionAborted);
}

TEST_CASE("the End protocol allows nothing") {
  Role a{"a"}, b{"b"};
  Monitor m(spec::end(), 1);
  Channel ch(1, "ch");
  m.link(ch, a, b);
  m.register_thread(a);
  CHECK_THROWS_AS(m.guarded_send(ch, std::int64_t{1}), SafetyViolation);
}

TEST_CASE("unregistered threads and unlinked channels are role violations") {
  Monitor m(two_buyer(), 3);
  Channel c1(1, "c1"), stray(1, "stray");
  m.link(c1, b1, sel);
  CHECK_THROWS_AS(m.guarded_send(c1, std::string("book")), RoleViolation);
  m.register_thread(b1);
  CHECK_THROWS_AS(m.guarded_send(stray, std::string("book")), RoleViolation);
  CHECK_FALSE(m.poisoned());
}

TEST_CASE("completing an action against the link direction is a role violation") {
  Role a{"a"}, b{"b"};
  Monitor m(spec::async(TypeTag::Long, a, b), 2);
  Channel ab(1, "ab");
  m.link(ab, a, b);
  m.register_thread(a);
  m.guarded_send(ab, std::int64_t{1});
  try {
    m.guarded_receive(ab);
    FAIL("expected a role violation");
  } catch (const RoleViolation& e) {
    CHECK(e.role() == "a");
    CHECK(e.channel() == "ab");
  }
  CHECK(m.poisoned());
}

TEST_CASE("a rendezvous is recorded once, as a synchronous event") {
  Role a{"a"}, b{"b"};
  Monitor m(spec::cat({spec::sync(TypeTag::Long, a, b), spec::sync(TypeTag::Long, b, a)}), 2);
  Channel ab(0, "ab"), ba(0, "ba");
  m.link(ab, a, b);
  m.link(ba, b, a);
  std::int64_t got_b = 0, got_a = 0;
  std::latch ready(2);
  std::thread tb([&] {
    m.register_thread(b);
    ready.arrive_and_wait();
    got_b = std::get<std::int64_t>(m.guarded_receive(ab));
    m.guarded_send(ba, got_b + 1);
    m.unregister_thread();
  });
  m.register_thread(a);
  ready.arrive_and_wait();
  m.guarded_send(ab, std::int64_t{41});
  got_a = std::get<std::int64_t>(m.guarded_receive(ba));
  m.unregister_thread();
  tb.join();
  CHECK(got_b == 41);
  CHECK(got_a == 42);
  auto tr = m.trace();
  REQUIRE(tr.size() == 2);
  CHECK(to_string(tr[0]) == "sync a->b Long");
  CHECK(to_string(tr[1]) == "sync b->a Long");
  CHECK(is_terminated(m.residual()));
  CHECK(m.unguarded_updates() == 0);
  CHECK(m.detector().live_total() == 0);
}

TEST_CASE("threads leaving while one server waits end in a deadlock") {
  Role c{"c"}, b{"b"}, s1{"s1"}, s2{"s2"};
  using namespace spec;
  auto lb = cat({async(TypeTag::Long, c, b),
                 alt({cat({async(TypeTag::Long, b, s1), sync(TypeTag::Long, s1, c)}),
                      cat({async(TypeTag::Long, b, s2), sync(TypeTag::Long, s2, c)})})});
  std::vector<DeadlockSite> seen;
  MonitorOptions opt;
  opt.on_deadlock = [&](const Monitor&, DeadlockSite s) { seen.push_back(s); };
  Monitor m(lb, 4, opt);
  Channel c5(1024, "c5");
  m.link(c5, b, s2);

  bool got_deadlock = false;
  std::latch ready(4);
  std::thread server([&] {
    m.register_thread(s2);
    ready.arrive_and_wait();
    try {
      m.guarded_receive(c5);
    } catch (const DeadlockException& e) {
      got_deadlock = e.site() == DeadlockSite::Unregister;
    }
    m.unregister_thread();
  });
  std::vector<std::thread> others;
  for (const Role& r : {c, b, s1}) {
    others.emplace_back([&, r] {
      m.register_thread(r);
      ready.arrive_and_wait();
      wait_suspended(m, 1);
      m.unregister_thread();
    });
  }
  for (auto& t : others) t.join();
  server.join();
  CHECK(got_deadlock);
  CHECK(seen == std::vector<DeadlockSite>{DeadlockSite::Unregister});
  CHECK(m.detector().live_total() == 0);
}

TEST_CASE("abort wakes suspended threads") {
  Role a{"a"}, b{"b"};
  Monitor m(spec::async(TypeTag::Long, a, b), 2);
  Channel ab(1, "ab");
  m.link(ab, a, b);
  bool aborted = false;
  std::thread tb([&] {
    m.register_thread(b);
    try {
      m.guarded_receive(ab);
    } catch (const SessionAborted&) {
      aborted = true;
    }
  });
  wait_suspended(m, 1);
  auto snap = m.snapshot();
  REQUIRE(snap.participants.size() == 1);
  CHECK(snap.participants[0].phase == Phase::Checking);
  m.abort("test");
  tb.join();
  CHECK(aborted);
  CHECK(m.detector().suspended() == 0);
}

}  // TEST_SUITE
