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

#include "sessmon/channel.hpp"

#include <algorithm>
#include <atomic>
#include <deque>
#include <mutex>
#include <stdexcept>
#include <utility>

#include "sessmon/result_cell.hpp"

namespace sessmon {
namespace detail {

struct Waiter {
  std::shared_ptr<SelectionState> sel;
  std::size_t index;
};

struct ChannelState {
  std::uint64_t id = 0;
  std::size_t capacity = 0;
  std::string name;
  std::deque<Value> buffer;
  // Registration order is service order.
  std::deque<Waiter> senders;
  std::deque<Waiter> receivers;
};

struct SelectionState {
  std::vector<ChannelAction> actions;
  Sink sink;
  std::uint64_t owner = 0;
  bool claimed = false;
};

}  // namespace detail

struct ChannelAccess {
  static detail::ChannelState& state(const Channel& c) { return *c.state_; }
};

namespace {

using detail::SelectionState;
using detail::Waiter;

std::mutex& engine_mutex() {
  static std::mutex mu;
  return mu;
}

std::atomic<std::uint64_t> next_channel_id{1};

using Fired = std::vector<std::pair<std::shared_ptr<SelectionState>, SelectOutcome>>;

detail::ChannelState& state_of(const Channel& c) { return ChannelAccess::state(c); }

void claim(const std::shared_ptr<SelectionState>& sel) {
  sel->claimed = true;
  for (const auto& a : sel->actions) {
    auto& st = state_of(a.channel);
    auto& queue = a.kind == ActionKind::Send ? st.senders : st.receivers;
    std::erase_if(queue, [&](const Waiter& w) { return w.sel == sel; });
  }
}

// Restores the buffered-channel invariant that no pending waiter is enabled.
void pump(const Channel& ch, Fired& fired) {
  auto& st = state_of(ch);
  if (st.capacity == 0) return;
  bool progress = true;
  while (progress) {
    progress = false;
    if (!st.buffer.empty() && !st.receivers.empty()) {
      Waiter w = st.receivers.front();
      claim(w.sel);
      Value v = std::move(st.buffer.front());
      st.buffer.pop_front();
      fired.emplace_back(w.sel, SelectOutcome{std::move(v), ch, w.index});
      progress = true;
    }
    if (st.buffer.size() < st.capacity && !st.senders.empty()) {
      Waiter w = st.senders.front();
      claim(w.sel);
      st.buffer.push_back(w.sel->actions[w.index].value);
      fired.emplace_back(w.sel, SelectOutcome{Ack{}, ch, w.index});
      progress = true;
    }
  }
}

bool enabled_locked(const ChannelAction& a) {
  const auto& st = state_of(a.channel);
  if (st.capacity > 0) {
    return a.kind == ActionKind::Send ? st.buffer.size() < st.capacity : !st.buffer.empty();
  }
  return a.kind == ActionKind::Send ? !st.receivers.empty() : !st.senders.empty();
}

SelectOutcome complete_locked(const ChannelAction& a, std::size_t index, Fired& fired) {
  auto& st = state_of(a.channel);
  if (st.capacity > 0) {
    if (a.kind == ActionKind::Send) {
      st.buffer.push_back(a.value);
      pump(a.channel, fired);
      return {Ack{}, a.channel, index};
    }
    Value v = std::move(st.buffer.front());
    st.buffer.pop_front();
    pump(a.channel, fired);
    return {std::move(v), a.channel, index};
  }
  if (a.kind == ActionKind::Send) {
    Waiter w = st.receivers.front();
    claim(w.sel);
    fired.emplace_back(w.sel, SelectOutcome{a.value, a.channel, w.index});
    return {Ack{}, a.channel, index};
  }
  Waiter w = st.senders.front();
  claim(w.sel);
  fired.emplace_back(w.sel, SelectOutcome{Ack{}, a.channel, w.index});
  return {w.sel->actions[w.index].value, a.channel, index};
}

std::optional<SelectOutcome> try_locked(std::span<const ChannelAction> actions, Fired& fired) {
  for (std::size_t i = 0; i < actions.size(); ++i) {
    if (enabled_locked(actions[i])) return complete_locked(actions[i], i, fired);
  }
  return std::nullopt;
}

void fire(const Fired& fired) {
  for (const auto& [sel, outcome] : fired) {
    if (sel->sink) sel->sink(outcome);
  }
}

void require_actions(std::span<const ChannelAction> actions) {
  if (actions.empty()) throw std::invalid_argument("select: empty action list");
}

}  // namespace

Channel::Channel(std::size_t capacity, std::string name)
    : state_(std::make_shared<detail::ChannelState>()) {
  state_->id = next_channel_id.fetch_add(1);
  state_->capacity = capacity;
  state_->name = name.empty() ? "ch" + std::to_string(state_->id) : std::move(name);
}

std::uint64_t Channel::id() const { return state_->id; }
std::size_t Channel::capacity() const { return state_->capacity; }
const std::string& Channel::name() const { return state_->name; }

bool SelectionHandle::cancel() {
  if (!state_) return false;
  std::lock_guard<std::mutex> lk(engine_mutex());
  if (state_->claimed) return false;
  claim(state_);
  return true;
}

bool SelectionHandle::completed() const {
  if (!state_) return false;
  std::lock_guard<std::mutex> lk(engine_mutex());
  return state_->claimed;
}

bool is_enabled(const ChannelAction& action) {
  std::lock_guard<std::mutex> lk(engine_mutex());
  return enabled_locked(action);
}

std::optional<SelectOutcome> try_select(std::span<const ChannelAction> actions,
                                        const Sink& on_complete) {
  require_actions(actions);
  Fired fired;
  std::optional<SelectOutcome> outcome;
  {
    std::lock_guard<std::mutex> lk(engine_mutex());
    outcome = try_locked(actions, fired);
  }
  if (outcome && on_complete) on_complete(*outcome);
  fire(fired);
  return outcome;
}

SelectionHandle submit_select(std::span<const ChannelAction> actions, Sink sink,
                              std::uint64_t owner) {
  require_actions(actions);
  auto sel = std::make_shared<SelectionState>();
  sel->actions.assign(actions.begin(), actions.end());
  sel->sink = std::move(sink);
  sel->owner = owner;

  Fired fired;
  {
    std::lock_guard<std::mutex> lk(engine_mutex());
    if (auto outcome = try_locked(sel->actions, fired)) {
      sel->claimed = true;
      fired.insert(fired.begin(), {sel, std::move(*outcome)});
    } else {
      for (std::size_t i = 0; i < sel->actions.size(); ++i) {
        auto& st = state_of(sel->actions[i].channel);
        auto& queue = sel->actions[i].kind == ActionKind::Send ? st.senders : st.receivers;
        queue.push_back({sel, i});
      }
    }
  }
  fire(fired);
  return SelectionHandle(sel);
}

SelectOutcome blocking_select(std::span<const ChannelAction> actions) {
  auto cell = std::make_shared<ResultCell<SelectOutcome>>();
  submit_select(actions, [cell](const SelectOutcome& o) { cell->try_set(o); });
  return cell->get();
}

void blocking_send(const Channel& ch, Value v) {
  ChannelAction a = ChannelAction::send(ch, std::move(v));
  blocking_select(std::span<const ChannelAction>(&a, 1));
}

Value blocking_receive(const Channel& ch) {
  ChannelAction a = ChannelAction::receive(ch);
  return blocking_select(std::span<const ChannelAction>(&a, 1)).value;
}

namespace {
ChannelSnapshot snapshot_locked(const Channel& ch) {
  const auto& st = state_of(ch);
  ChannelSnapshot s;
  s.id = st.id;
  s.capacity = st.capacity;
  s.buffer.assign(st.buffer.begin(), st.buffer.end());
  for (const auto& w : st.senders) s.waiters.push_back({ActionKind::Send, w.sel->owner});
  for (const auto& w : st.receivers) s.waiters.push_back({ActionKind::Receive, w.sel->owner});
  return s;
}
}  // namespace

std::vector<ChannelSnapshot> snapshot(std::span<const Channel> channels) {
  std::lock_guard<std::mutex> lk(engine_mutex());
  std::vector<ChannelSnapshot> out;
  out.reserve(channels.size());
  for (const auto& ch : channels) out.push_back(snapshot_locked(ch));
  return out;
}

ChannelSnapshot snapshot(const Channel& ch) {
  std::lock_guard<std::mutex> lk(engine_mutex());
  return snapshot_locked(ch);
}

}  // namespace sessmon
