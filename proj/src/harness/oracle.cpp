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
#include <functional>
#include <map>
#include <set>
#include <sstream>

#include "sessmon/harness.hpp"

namespace sessmon::harness {

namespace {

bool waiter_from_other(const ChannelSnapshot& ch, ActionKind kind, ThreadKey self) {
  for (const auto& w : ch.waiters) {
    if (w.kind == kind && w.owner != self) return true;
  }
  return false;
}

// Enabledness straight from the channel rules, on the snapshot only.
bool enabled(const ChannelSnapshot& ch, ActionKind kind, ThreadKey self) {
  if (ch.capacity > 0) {
    return kind == ActionKind::Send ? ch.buffer.size() < ch.capacity : !ch.buffer.empty();
  }
  return waiter_from_other(ch, kind == ActionKind::Send ? ActionKind::Receive : ActionKind::Send,
                           self);
}

}  // namespace

OracleVerdict oracle_check(const MonitorSnapshot& snap) {
  OracleVerdict v;
  if (snap.participants.empty()) {
    v.reason = "no live threads";
    return v;
  }
  std::map<std::uint64_t, std::size_t> by_mock;
  for (std::size_t k = 0; k < snap.links.size(); ++k) by_mock[snap.links[k].mock.id()] = k;

  std::set<std::string> live;
  for (const auto& p : snap.participants) live.insert(p.role.name);

  std::map<std::string, std::set<std::string>> waits_for;
  std::vector<std::string> parts;
  std::set<std::string> departed;
  for (const auto& p : snap.participants) {
    if (p.phase != Phase::Checking || p.mock_actions.empty()) {
      v.reason = ":" + p.role.name + " is not blocked in a guarded operation";
      return v;
    }
    std::ostringstream blocked;
    blocked << ":" << p.role.name << " on";
    for (const auto& a : p.mock_actions) {
      auto it = by_mock.find(a.channel.id());
      if (it == by_mock.end()) {
        v.reason = ":" + p.role.name + " waits on a channel outside the session";
        return v;
      }
      const LinkEntry& link = snap.links[it->second];
      const ChannelSnapshot& ch = snap.mocks[it->second];
      const bool send = a.kind == ActionKind::Send;
      if (enabled(ch, a.kind, p.key)) {
        v.reason = ":" + p.role.name + " can " + (send ? "send on " : "receive on ") +
                   link.real.name();
        return v;
      }
      blocked << (send ? " send " : " receive ") << link.real.name();
      const std::string& other = send ? link.receiver.name : link.sender.name;
      if (other == p.role.name) continue;
      if (live.count(other)) {
        waits_for[p.role.name].insert(other);
      } else {
        departed.insert(other);
      }
    }
    parts.push_back(blocked.str());
  }

  v.confirmed = true;
  for (const auto& d : departed) parts.push_back("waits on departed :" + d);
  v.reason = "all " + std::to_string(snap.participants.size()) + " live thread(s) blocked: ";
  for (std::size_t k = 0; k < parts.size(); ++k) v.reason += (k ? "; " : "") + parts[k];

  // Wait-for cycle, if there is one.
  std::map<std::string, int> color;  // 0 new, 1 on stack, 2 done
  std::vector<std::string> stack;
  std::function<bool(const std::string&)> dfs = [&](const std::string& r) {
    color[r] = 1;
    stack.push_back(r);
    for (const auto& n : waits_for[r]) {
      if (color[n] == 1) {
        auto from = std::find(stack.begin(), stack.end(), n);
        v.cycle.assign(from, stack.end());
        v.cycle.push_back(n);
        return true;
      }
      if (color[n] == 0 && dfs(n)) return true;
    }
    stack.pop_back();
    color[r] = 2;
    return false;
  };
  for (const auto& r : live) {
    if (color[r] == 0 && dfs(r)) break;
  }
  if (!v.cycle.empty()) {
    v.reason += "; cycle";
    for (std::size_t k = 0; k < v.cycle.size(); ++k) v.reason += (k ? " -> :" : " :") + v.cycle[k];
  }
  return v;
}

}  // namespace sessmon::harness
