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

#ifndef SESSMON_DETECTOR_HPP_
#define SESSMON_DETECTOR_HPP_

#include <atomic>
#include <cstddef>
#include <cstdint>
#include <exception>
#include <functional>
#include <map>
#include <memory>
#include <mutex>
#include <optional>
#include <set>
#include <span>
#include <thread>
#include <vector>

#include "sessmon/channel.hpp"
#include "sessmon/errors.hpp"
#include "sessmon/result_cell.hpp"

namespace sessmon {

using ThreadKey = std::uint64_t;

/// Places in `Detector::detect` where a test scheduler may intervene.
enum class SchedulePoint {
  Entered,       // before acquiring the semaphore
  Acquired,      // inside the critical section
  FastPathMiss,  // no mock action was enabled
  Suspending,    // mock actions registered, semaphore about to be released
  Woke,          // resumed, suspended count not yet decremented
  Decremented,   // resumed and decremented, barrier exchange pending
  Exiting,       // fast path about to release the semaphore
};

struct DetectorOptions {
  /// Also deliver the deadlock to every suspended thread, not just the last one.
  bool propagate_deadlock = false;
  /// Shadow bookkeeping that checks the critical-section invariant.
  bool instrument = true;
  /// Ablation switches; only tests turn these off.
  bool use_semaphore = true;
  bool use_barriers = true;

  std::function<void(SchedulePoint, ThreadKey)> schedule_hook;
  /// Called with the semaphore held, just before a deadlock is reported.
  std::function<void(DeadlockSite)> on_deadlock;
};

struct DetectorStats {
  std::uint64_t acquisitions = 0;
  std::uint64_t invariant_checks = 0;
  std::uint64_t invariant_failures = 0;   // shadow suspended count != i at acquisition
  std::uint64_t max_occupancy = 0;        // threads inside the critical section at once
  std::uint64_t resumption_failures = 0;  // resumed by a thread not holding the semaphore
  std::uint64_t barrier_exchanges = 0;
};

/// Checks a completed mock action against the session; a non-null result is
/// fatal for the session and is rethrown in the thread that owned the action.
using CompletionCheck = std::function<std::exception_ptr(const SelectOutcome&)>;

/**
 * Total communication deadlock detector over mock channels.
 *
 * A thread that is about to suspend first enters a critical section guarded
 * by a channel-based semaphore. If one of its mock actions is enabled it
 * completes it and leaves; otherwise it counts itself as suspended, and if it
 * is the last live thread to do so it throws instead of suspending. A thread
 * that resumes another waits on a barrier channel until the resumed thread
 * has decremented the suspended count, so the count is exact whenever the
 * semaphore is acquired.
 */
class Detector {
 public:
  explicit Detector(std::size_t total, DetectorOptions options = {});
  Detector(const Detector&) = delete;
  Detector& operator=(const Detector&) = delete;

  /// Completes exactly one of `mock` (possibly after suspending) or throws
  /// DeadlockException. `check` runs at completion time inside the
  /// critical section of whichever thread completed the action.
  SelectOutcome detect(ThreadKey key, std::span<const ChannelAction> mock,
                       const CompletionCheck& check);

  /// Holds the semaphore for session bookkeeping.
  class Guard {
   public:
    Guard(Guard&&) = delete;
    ~Guard() { owner_.release(); }

   private:
    friend class Detector;
    explicit Guard(Detector& d) : owner_(d) { owner_.acquire(); }
    Detector& owner_;
  };
  [[nodiscard]] Guard enter() { return Guard(*this); }

  // The following require the semaphore.

  /// One live thread left the session. Signals a deadlock to the suspended
  /// threads when all remaining live threads are suspended.
  void retire_locked();
  /// Stops the session: every suspended thread wakes with `reason`, and later
  /// `detect` calls rethrow it.
  void halt_locked(std::exception_ptr reason);

  Channel install_barrier(std::span<const ChannelAction> mock);
  std::optional<Channel> uninstall_barrier(const Channel& ch);

  std::size_t barrier_count() const;
  std::size_t suspended() const { return suspended_.load(); }
  std::size_t live_total() const { return live_.load(); }
  std::size_t initial_total() const { return initial_total_; }
  bool halted() const { return halted_flag_.load(); }
  bool holds_semaphore() const { return cs_owner_.load() == std::this_thread::get_id(); }
  DetectorStats stats() const;

 private:
  struct Wakeup {
    std::optional<SelectOutcome> outcome;  // absent when woken by halt/deadlock delivery
    std::exception_ptr error;
  };
  struct Suspension {
    SelectionHandle handle;
    std::shared_ptr<ResultCell<Wakeup>> cell;
    std::optional<Channel> barrier;
  };
  struct BarrierEntry {
    Channel barrier;
    std::vector<std::uint64_t> channels;
  };
  using BarrierList = std::vector<BarrierEntry>;

  void acquire();
  void release();
  void hook(SchedulePoint p, ThreadKey key) const;
  void resume(ThreadKey key, const std::shared_ptr<ResultCell<Wakeup>>& cell,
              const CompletionCheck& check, const SelectOutcome& outcome);
  void deliver_locked(const std::exception_ptr& error);
  void remove_barrier(const Channel& barrier);

  const std::size_t initial_total_;
  DetectorOptions options_;

  std::atomic<std::size_t> live_;           // n
  std::atomic<std::size_t> suspended_{0};   // i
  Channel semaphore_{1, "semaphore"};
  std::shared_ptr<const BarrierList> barriers_;  // swapped with atomic CAS

  std::mutex suspensions_mu_;
  std::map<ThreadKey, Suspension> suspensions_;

  // Semaphore-protected.
  std::exception_ptr halted_;
  bool cs_fatal_ = false;
  std::atomic<bool> halted_flag_{false};

  // Instrumentation.
  std::atomic<std::thread::id> cs_owner_{};
  std::atomic<int> occupancy_{0};
  mutable std::mutex shadow_mu_;
  std::set<ThreadKey> shadow_;  // threads suspended or about to be, per resumption events
  std::atomic<std::uint64_t> acquisitions_{0};
  std::atomic<std::uint64_t> invariant_checks_{0};
  std::atomic<std::uint64_t> invariant_failures_{0};
  std::atomic<std::uint64_t> max_occupancy_{0};
  std::atomic<std::uint64_t> resumption_failures_{0};
  std::atomic<std::uint64_t> barrier_exchanges_{0};
};

}  // namespace sessmon

#endif  // SESSMON_DETECTOR_HPP_
