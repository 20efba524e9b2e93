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

#ifndef SESSMON_MONITOR_HPP_
#define SESSMON_MONITOR_HPP_

#include <atomic>
#include <cstddef>
#include <cstdint>
#include <functional>
#include <initializer_list>
#include <map>
#include <memory>
#include <mutex>
#include <span>
#include <string>
#include <thread>
#include <variant>
#include <vector>

#include "sessmon/channel.hpp"
#include "sessmon/detector.hpp"
#include "sessmon/errors.hpp"
#include "sessmon/spec.hpp"

namespace sessmon {

class Monitor;

struct MonitorOptions {
  DetectorOptions detector;
  /// Called with the detector semaphore held right before a deadlock is
  /// reported, so the session can be inspected in a quiescent state.
  std::function<void(const Monitor&, DeadlockSite)> on_deadlock;
};

/// A real channel linked to the session, with its mock and intended roles.
struct LinkEntry {
  Channel real;
  Channel mock;  // same capacity; carries Tokens only
  Role sender;
  Role receiver;
};

enum class Phase {
  Idle,          // running its own code
  Checking,      // inside the detector (waiting for the semaphore, or suspended)
  Transferring,  // mock action done, performing the real one
};

struct ParticipantView {
  ThreadKey key = 0;
  Role role;
  Phase phase = Phase::Idle;
  std::vector<ChannelAction> mock_actions;  // of the current guarded call
  std::uint64_t completed = 0;              // guarded calls finished so far
};

struct MonitorSnapshot {
  std::vector<ParticipantView> participants;  // live (registered) threads
  std::vector<LinkEntry> links;
  std::vector<ChannelSnapshot> mocks;  // parallel to `links`
};

/**
 * Runtime monitor of one session.
 *
 * Every guarded channel action is first tried on the mock of its channel
 * through the deadlock detector. When the mock action completes, the
 * communication is checked against the protocol and the residual protocol
 * advances; only then is the real action performed on the real channel.
 */
class Monitor {
 public:
  Monitor(SessionSpec spec, std::size_t n, MonitorOptions options = {});
  Monitor(const Monitor&) = delete;
  Monitor& operator=(const Monitor&) = delete;

  /// Must happen before the first guarded action.
  void link(const Channel& ch, const Role& sender, const Role& receiver);
  /// Binds the calling thread to `role`. Threads may join late: all `n` count
  /// as live from construction on.
  void register_thread(const Role& role);

  /// The calling thread leaves the session.
  void unregister_thread();

  SelectOutcome guarded_select(std::span<const ChannelAction> actions);
  SelectOutcome guarded_select(std::initializer_list<ChannelAction> actions) {
    return guarded_select(std::span<const ChannelAction>(actions.begin(), actions.size()));
  }
  void guarded_send(const Channel& ch, Value v);
  Value guarded_receive(const Channel& ch);

  /// Stops the session from outside: suspended and transferring threads
  /// wake with SessionAborted.
  void abort(const std::string& reason);

  const SessionSpec& spec() const { return spec_; }
  ResidualSet residual() const;
  std::vector<CommEvent> trace() const;
  MonitorSnapshot snapshot() const;
  /// Mock buffers mirror real buffers (length and value types). Meaningful
  /// only at quiescence.
  bool lockstep_ok(std::string* why = nullptr) const;
  /// Residual updates observed without the detector semaphore held.
  std::uint64_t unguarded_updates() const { return unguarded_updates_.load(); }
  bool poisoned() const { return poisoned_.load(); }

  Detector& detector() { return detector_; }
  const Detector& detector() const { return detector_; }

 private:
  struct RealWait {
    SelectionHandle handle;
    std::shared_ptr<ResultCell<std::variant<SelectOutcome, std::exception_ptr>>> cell;
  };
  struct Participant {
    ThreadKey key = 0;
    Role role;
    std::atomic<Phase> phase{Phase::Idle};
    std::atomic<std::uint64_t> completed{0};
    mutable std::mutex mu;
    std::vector<ChannelAction> mock_actions;
    RealWait real;
  };

  std::shared_ptr<Participant> self() const;
  const LinkEntry& link_of(const Channel& real, const Participant& p) const;
  std::exception_ptr verify_and_advance(const Participant& p, const ChannelAction& mock_action,
                                        const LinkEntry& link);
  SelectOutcome transfer(Participant& p, const ChannelAction& real_action, std::size_t index);
  static DetectorOptions wire(Monitor* self, MonitorOptions& options);

  SessionSpec spec_;
  const std::size_t n_;
  MonitorOptions options_;
  Detector detector_;

  std::map<std::uint64_t, LinkEntry> links_;  // by real channel id
  std::map<std::uint64_t, std::uint64_t> mock_to_real_;
  std::atomic<bool> frozen_{false};

  mutable std::mutex registry_mu_;
  std::map<std::thread::id, std::shared_ptr<Participant>> registry_;
  std::size_t registered_ever_ = 0;
  ThreadKey next_key_ = 1;

  // Mutated only with the detector semaphore held; the mutex makes outside
  // reads safe.
  mutable std::mutex state_mu_;
  ResidualSet residual_;
  std::vector<CommEvent> trace_;
  std::atomic<bool> poisoned_{false};
  std::atomic<std::uint64_t> unguarded_updates_{0};
};

}  // namespace sessmon

#endif  // SESSMON_MONITOR_HPP_
