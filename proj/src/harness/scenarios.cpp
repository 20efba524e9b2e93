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
#include <stdexcept>
#include <string>

#include "sessmon/bundled_specs.hpp"
#include "sessmon/harness.hpp"

namespace sessmon::harness {

namespace {

std::int64_t as_long(const Value& v) { return std::get<std::int64_t>(v); }
double as_double(const Value& v) { return std::get<double>(v); }

// Two buyers and a seller over six buffered channels of size one.
//
//   c1 buyer1 -> seller   title
//   c2 buyer1 -> buyer2   buyer1's share
//   c3 buyer2 -> buyer1   (unused by the correct program)
//   c4 buyer2 -> seller   decision
//   c5 seller -> buyer1   quote
//   c6 seller -> buyer2   quote
Scenario two_buyer(std::string_view variant) {
  Scenario s;
  s.name = "two-buyer";
  s.variant = std::string(variant);
  s.protocol_text = std::string(bundled::two_buyer);
  s.session = "two-buyer";
  s.threads = 3;
  s.channels = {{"c1", 1, "buyer1", "seller"}, {"c2", 1, "buyer1", "buyer2"},
                {"c3", 1, "buyer2", "buyer1"}, {"c4", 1, "buyer2", "seller"},
                {"c5", 1, "seller", "buyer1"}, {"c6", 1, "seller", "buyer2"}};

  const bool wrong_channel = variant == "wrong-channel";
  const bool wrong_type = variant == "wrong-type";
  s.bodies.emplace_back("buyer1", [=](Actor& a) {
    if (wrong_type) {
      a.send("c1", std::int64_t{42});
    } else {
      a.send("c1", std::string("book"));
    }
    const double x = as_double(a.receive(wrong_channel ? "c3" : "c5"));
    const double y = x / 2;
    a.send("c2", y);
  });
  s.bodies.emplace_back("buyer2", [](Actor& a) {
    const double x = as_double(a.receive("c6"));
    const double y = as_double(a.receive("c2"));
    const bool z = x == y;
    a.send("c4", z);
  });
  s.bodies.emplace_back("seller", [](Actor& a) {
    a.receive("c1");
    a.send("c5", 20.00);
    a.send("c6", 20.00);
    a.print(to_string(a.receive("c4")));
  });
  return s;
}

// Client, balancer and two servers. The client's request and the replies go
// over rendezvous channels, the forwarded requests over large buffers.
//
//   c1 c  -> b    request
//   c2 s1 -> c    reply
//   c3 s2 -> c    reply
//   c4 b  -> s1   forwarded request (512)
//   c5 b  -> s2   forwarded request (1024)
//
// As written, each server waits for its request on its own reply channel.
// The fixed variant has them read c4/c5 instead, which leaves the server
// that was not chosen waiting after everybody else has finished.
Scenario load_balancer(std::string_view variant) {
  Scenario s;
  s.name = "load-balancer";
  s.variant = std::string(variant);
  s.protocol_text = std::string(bundled::load_balancer);
  s.session = "load-balancer";
  s.threads = 4;
  s.channels = {{"c1", 0, "c", "b"},
                {"c2", 0, "s1", "c"},
                {"c3", 0, "s2", "c"},
                {"c4", 512, "b", "s1"},
                {"c5", 1024, "b", "s2"}};

  const bool fixed = variant == "fixed";
  s.bodies.emplace_back("b", [](Actor& a) {
    const Value x = a.receive("c1");
    a.select({{"c4", x}, {"c5", x}});
  });
  s.bodies.emplace_back("c", [](Actor& a) {
    a.send("c1", std::int64_t{5});
    const SelectOutcome got = a.select({{"c2", std::nullopt}, {"c3", std::nullopt}});
    a.print(to_string(got.value) + " from " + a.channel_name(got.channel));
  });
  s.bodies.emplace_back("s1", [=](Actor& a) {
    const std::int64_t x = as_long(a.receive(fixed ? "c4" : "c2"));
    a.send("c2", x + 1);
  });
  s.bodies.emplace_back("s2", [=](Actor& a) {
    const std::int64_t x = as_long(a.receive(fixed ? "c5" : "c3"));
    a.send("c3", x + 1);
  });
  return s;
}

// Every thread first waits for its left neighbour: a receive cycle.
Scenario three_cycle(std::string_view variant) {
  Scenario s;
  s.name = "three-cycle";
  s.variant = std::string(variant);
  s.protocol_text = std::string(bundled::three_cycle);
  s.session = "three-cycle";
  s.threads = 3;
  s.channels = {{"ab", 0, "a", "b"}, {"bc", 0, "b", "c"}, {"ca", 0, "c", "a"}};
  auto body = [](const char* in, const char* out) {
    return [in, out](Actor& a) {
      const std::int64_t x = as_long(a.receive(in));
      a.send(out, x + 1);
    };
  };
  s.bodies.emplace_back("a", body("ca", "ab"));
  s.bodies.emplace_back("b", body("ab", "bc"));
  s.bodies.emplace_back("c", body("bc", "ca"));
  return s;
}

// Matched rendezvous in both directions; never deadlocks.
Scenario ping_pong(std::string_view variant) {
  Scenario s;
  s.name = "ping-pong";
  s.variant = std::string(variant);
  s.protocol_text = std::string(bundled::ping_pong);
  s.session = "ping-pong";
  s.threads = 2;
  s.channels = {{"ab", 0, "alice", "bob"}, {"ba", 0, "bob", "alice"}};
  s.bodies.emplace_back("alice", [](Actor& a) {
    a.send("ab", std::int64_t{1});
    const std::int64_t x = as_long(a.receive("ba"));
    a.send("ab", x + 1);
    a.print(std::to_string(as_long(a.receive("ba"))));
  });
  s.bodies.emplace_back("bob", [](Actor& a) {
    const std::int64_t x = as_long(a.receive("ab"));
    a.send("ba", x + 1);
    const std::int64_t y = as_long(a.receive("ab"));
    a.send("ba", y + 1);
  });
  return s;
}

}  // namespace

std::vector<std::string> scenario_names() {
  return {"two-buyer", "load-balancer", "three-cycle", "ping-pong"};
}

std::vector<std::string> variant_names(std::string_view scenario) {
  if (scenario == "two-buyer") return {"faithful", "wrong-channel", "wrong-type"};
  if (scenario == "load-balancer") return {"faithful", "fixed"};
  if (scenario == "three-cycle" || scenario == "ping-pong") return {"faithful"};
  throw std::invalid_argument("unknown scenario '" + std::string(scenario) + "'");
}

Scenario make_scenario(std::string_view name, std::string_view variant) {
  const auto known = variant_names(name);
  if (std::find(known.begin(), known.end(), variant) == known.end()) {
    throw std::invalid_argument("scenario '" + std::string(name) + "' has no variant '" +
                                std::string(variant) + "'");
  }
  if (name == "two-buyer") return two_buyer(variant);
  if (name == "load-balancer") return load_balancer(variant);
  if (name == "three-cycle") return three_cycle(variant);
  return ping_pong(variant);
}

std::string_view bundled_protocol(std::string_view scenario) {
  if (scenario == "two-buyer") return bundled::two_buyer;
  if (scenario == "load-balancer") return bundled::load_balancer;
  if (scenario == "three-cycle") return bundled::three_cycle;
  if (scenario == "ping-pong") return bundled::ping_pong;
  throw std::invalid_argument("unknown scenario '" + std::string(scenario) + "'");
}

}  // namespace sessmon::harness
