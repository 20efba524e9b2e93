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

#include "sessmon/errors.hpp"

#include <utility>

namespace sessmon {

namespace {

std::string deadlock_message(DeadlockSite site, std::size_t live) {
  std::string msg = "deadlock! all " + std::to_string(live) + " live thread(s) suspended";
  if (site == DeadlockSite::Unregister) msg += " after a thread left the session";
  return msg;
}

std::string safety_message(const CommEvent& event, const std::vector<CommEvent>& expected,
                           const std::string& channel) {
  std::string msg = "protocol violation on " + channel + ": " + to_string(event) + " not allowed";
  msg += "; expected one of {";
  for (std::size_t i = 0; i < expected.size(); ++i) {
    if (i) msg += ", ";
    msg += to_string(expected[i]);
  }
  return msg + "}";
}

}  // namespace

DeadlockException::DeadlockException(DeadlockSite site, std::size_t live,
                                     std::size_t initial_total)
    : MonitorError(deadlock_message(site, live)),
      site_(site),
      live_(live),
      initial_total_(initial_total) {}

SafetyViolation::SafetyViolation(CommEvent event, std::vector<CommEvent> expected,
                                 std::string channel)
    : MonitorError(safety_message(event, expected, channel)),
      event_(std::move(event)),
      expected_(std::move(expected)),
      channel_(std::move(channel)) {}

RoleViolation::RoleViolation(const std::string& what, std::string role, std::string channel)
    : MonitorError(what), role_(std::move(role)), channel_(std::move(channel)) {}

}  // namespace sessmon
