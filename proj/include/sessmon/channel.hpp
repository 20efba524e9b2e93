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

#ifndef SESSMON_CHANNEL_HPP_
#define SESSMON_CHANNEL_HPP_

#include <cstddef>
#include <cstdint>
#include <functional>
#include <initializer_list>
#include <memory>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "sessmon/value.hpp"

namespace sessmon {

namespace detail {
struct ChannelState;
struct SelectionState;
}  // namespace detail

/**
 * CSP-style channel. Capacity 0 is a rendezvous channel; capacity k >= 1 is a
 * FIFO buffer of k values. Copies share the same underlying channel.
 *
 * All channels live in one engine guarded by a single lock, so an
 * enabledness check, its effect, and the claim of a waiting selection happen
 * atomically with respect to every other channel operation.
 */
class Channel {
 public:
  explicit Channel(std::size_t capacity = 0, std::string name = {});

  std::uint64_t id() const;
  std::size_t capacity() const;
  bool buffered() const { return capacity() > 0; }
  const std::string& name() const;

  friend bool operator==(const Channel& a, const Channel& b) { return a.state_ == b.state_; }

 private:
  friend struct ChannelAccess;
  std::shared_ptr<detail::ChannelState> state_;
};

inline Channel create_channel(std::size_t capacity, std::string name = {}) {
  return Channel(capacity, std::move(name));
}

enum class ActionKind { Send, Receive };

/// A send `[ch v]` or a receive `ch`.
struct ChannelAction {
  ActionKind kind = ActionKind::Receive;
  Channel channel;
  Value value;  // only meaningful for sends

  static ChannelAction send(Channel ch, Value v) {
    return {ActionKind::Send, std::move(ch), std::move(v)};
  }
  static ChannelAction receive(Channel ch) { return {ActionKind::Receive, std::move(ch), {}}; }
};

/// `[v ch]`: the value sent or received and the channel it happened on.
/// `index` is the position of the completed action in the submitted list.
struct SelectOutcome {
  Value value;
  Channel channel;
  std::size_t index = 0;
};

using Sink = std::function<void(const SelectOutcome&)>;

/// Handle on a submitted selection. `cancel` makes all pending registrations
/// inert provided no action has completed yet.
class SelectionHandle {
 public:
  SelectionHandle() = default;
  explicit SelectionHandle(std::shared_ptr<detail::SelectionState> s) : state_(std::move(s)) {}

  bool cancel();
  bool completed() const;
  bool valid() const { return state_ != nullptr; }

 private:
  std::shared_ptr<detail::SelectionState> state_;
};

bool is_enabled(const ChannelAction& action);

/**
 * Completes the first enabled action in list order, or returns nullopt
 * (would block) without side effects. `on_complete` runs with the outcome
 * before the sinks of any waiters this completion resumed; all of them run in
 * the calling thread.
 */
std::optional<SelectOutcome> try_select(std::span<const ChannelAction> actions,
                                        const Sink& on_complete = {});

/**
 * Asynchronous select: never parks the caller. Completes immediately when
 * possible; otherwise registers every action as a pending waiter and the sink
 * later fires, exactly once, in whichever thread enables one of them.
 * `owner` is an opaque tag visible in snapshots.
 */
SelectionHandle submit_select(std::span<const ChannelAction> actions, Sink sink,
                              std::uint64_t owner = 0);

SelectOutcome blocking_select(std::span<const ChannelAction> actions);
inline SelectOutcome blocking_select(std::initializer_list<ChannelAction> actions) {
  return blocking_select(std::span<const ChannelAction>(actions.begin(), actions.size()));
}
void blocking_send(const Channel& ch, Value v);
Value blocking_receive(const Channel& ch);

struct PendingWaiter {
  ActionKind kind;
  std::uint64_t owner;
};

struct ChannelSnapshot {
  std::uint64_t id = 0;
  std::size_t capacity = 0;
  std::vector<Value> buffer;
  std::vector<PendingWaiter> waiters;
};

/// Consistent view of several channels taken under one engine lock.
std::vector<ChannelSnapshot> snapshot(std::span<const Channel> channels);
ChannelSnapshot snapshot(const Channel& ch);

}  // namespace sessmon

#endif  // SESSMON_CHANNEL_HPP_
