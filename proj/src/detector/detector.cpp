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

#include "sessmon/detector.hpp"

#include <algorithm>
#include <utility>

namespace sessmon {

namespace {

const Value kPermit = std::string{};

void raise_max(std::atomic<std::uint64_t>& target, std::uint64_t v) {
  auto cur = target.load();
  while (v > cur && !target.compare_exchange_weak(cur, v)) {
  }
}

}  // namespace

Detector::Detector(std::size_t total, DetectorOptions options)
    : initial_total_(total),
      options_(std::move(options)),
      live_(total),
      barriers_(std::make_shared<const BarrierList>()) {
  if (total == 0) throw UsageError("detector needs at least one thread");
  blocking_send(semaphore_, kPermit);
}

void Detector::hook(SchedulePoint p, ThreadKey key) const {
  if (options_.schedule_hook) options_.schedule_hook(p, key);
}

void Detector::acquire() {
  if (options_.use_semaphore) blocking_receive(semaphore_);
  // --- begin critical section ---
  const int occ = ++occupancy_;
  raise_max(max_occupancy_, static_cast<std::uint64_t>(occ));
  cs_owner_.store(std::this_thread::get_id());
  ++acquisitions_;
  if (options_.instrument) {
    std::lock_guard<std::mutex> lk(shadow_mu_);
    ++invariant_checks_;
    if (shadow_.size() != suspended_.load()) ++invariant_failures_;
  }
}

void Detector::release() {
  cs_owner_.store(std::thread::id{});
  --occupancy_;
  // --- end critical section ---
  if (options_.use_semaphore) blocking_send(semaphore_, kPermit);
}

SelectOutcome Detector::detect(ThreadKey key, std::span<const ChannelAction> mock,
                               const CompletionCheck& check) {
  if (mock.empty()) throw std::invalid_argument("detect: empty action list");
  hook(SchedulePoint::Entered, key);
  acquire();
  hook(SchedulePoint::Acquired, key);

  if (halted_) {
    auto reason = halted_;
    release();
    std::rethrow_exception(reason);
  }

  // Fast path: one of the actions is enabled right now.
  std::optional<SelectOutcome> fast;
  std::exception_ptr own_error;
  bool fatal = false;
  try {
    cs_fatal_ = false;
    fast = try_select(mock, [&](const SelectOutcome& o) {
      if (check) own_error = check(o);
      if (own_error) cs_fatal_ = true;
    });
    if (fast) {
      if (options_.use_barriers) {
        if (auto barrier = uninstall_barrier(fast->channel)) {
          // Wait until the thread this completion resumed has decremented i.
          blocking_receive(*barrier);
          ++barrier_exchanges_;
        }
      }
      fatal = cs_fatal_;
      if (fatal) {
        halt_locked(std::make_exception_ptr(
            SessionAborted("session stopped after a violation in another thread")));
      }
      hook(SchedulePoint::Exiting, key);
    }
  } catch (...) {
    release();
    throw;
  }
  if (fast) {
    auto reason = halted_;
    release();
    if (own_error) std::rethrow_exception(own_error);
    if (fatal) std::rethrow_exception(reason);
    return *fast;
  }

  hook(SchedulePoint::FastPathMiss, key);
  const std::size_t now = ++suspended_;
  if (now < live_.load()) {
    // Slow path: suspend until another thread completes one of the actions.
    if (options_.instrument) {
      std::lock_guard<std::mutex> lk(shadow_mu_);
      shadow_.insert(key);
    }
    auto cell = std::make_shared<ResultCell<Wakeup>>();
    std::optional<Channel> barrier;
    if (options_.use_barriers) barrier = install_barrier(mock);
    {
      std::lock_guard<std::mutex> lk(suspensions_mu_);
      suspensions_[key] = Suspension{{}, cell, barrier};
    }
    CompletionCheck on_complete = check;
    auto handle = submit_select(
        mock,
        [this, key, cell, on_complete](const SelectOutcome& o) {
          resume(key, cell, on_complete, o);
        },
        key);
    {
      std::lock_guard<std::mutex> lk(suspensions_mu_);
      if (auto it = suspensions_.find(key); it != suspensions_.end()) it->second.handle = handle;
    }
    hook(SchedulePoint::Suspending, key);
    release();

    Wakeup w = cell->get();
    hook(SchedulePoint::Woke, key);
    if (!w.outcome) std::rethrow_exception(w.error);  // i already adjusted by the deliverer
    --suspended_;
    hook(SchedulePoint::Decremented, key);
    if (barrier) blocking_send(*barrier, kPermit);
    if (w.error) std::rethrow_exception(w.error);
    return *w.outcome;
  }

  // Last live thread about to suspend: total deadlock. It does not suspend,
  // so it takes itself back out of the count.
  --suspended_;
  if (options_.on_deadlock) options_.on_deadlock(DeadlockSite::LastThread);
  DeadlockException error(DeadlockSite::LastThread, live_.load(), initial_total_);
  if (options_.propagate_deadlock) deliver_locked(std::make_exception_ptr(error));
  release();
  throw error;
}

void Detector::resume(ThreadKey key, const std::shared_ptr<ResultCell<Wakeup>>& cell,
                      const CompletionCheck& check, const SelectOutcome& outcome) {
  if (options_.instrument) {
    if (!holds_semaphore() && options_.use_semaphore) ++resumption_failures_;
    std::lock_guard<std::mutex> lk(shadow_mu_);
    shadow_.erase(key);
  }
  std::exception_ptr error = check ? check(outcome) : nullptr;
  if (error) cs_fatal_ = true;
  {
    std::lock_guard<std::mutex> lk(suspensions_mu_);
    suspensions_.erase(key);
  }
  cell->try_set(Wakeup{outcome, error});
}

void Detector::deliver_locked(const std::exception_ptr& error) {
  std::map<ThreadKey, Suspension> victims;
  {
    std::lock_guard<std::mutex> lk(suspensions_mu_);
    victims.swap(suspensions_);
  }
  for (auto& [key, s] : victims) {
    if (!s.handle.cancel()) continue;  // already resumed
    if (s.barrier) remove_barrier(*s.barrier);
    if (options_.instrument) {
      std::lock_guard<std::mutex> lk(shadow_mu_);
      shadow_.erase(key);
    }
    --suspended_;
    s.cell->try_set(Wakeup{std::nullopt, error});
  }
}

void Detector::retire_locked() {
  if (live_.load() == 0) throw UsageError("no live thread left to retire");
  const std::size_t live = --live_;
  if (halted_ || live == 0 || suspended_.load() != live) return;
  if (options_.on_deadlock) options_.on_deadlock(DeadlockSite::Unregister);
  deliver_locked(
      std::make_exception_ptr(DeadlockException(DeadlockSite::Unregister, live, initial_total_)));
}

void Detector::halt_locked(std::exception_ptr reason) {
  if (!halted_) {
    halted_ = reason;
    halted_flag_.store(true);
  }
  deliver_locked(reason);
}

Channel Detector::install_barrier(std::span<const ChannelAction> mock) {
  BarrierEntry entry{Channel(0, "barrier"), {}};
  for (const auto& a : mock) entry.channels.push_back(a.channel.id());
  auto old = std::atomic_load(&barriers_);
  for (;;) {
    auto next = std::make_shared<BarrierList>(*old);
    next->push_back(entry);
    std::shared_ptr<const BarrierList> desired = std::move(next);
    if (std::atomic_compare_exchange_strong(&barriers_, &old, desired)) break;
  }
  return entry.barrier;
}

std::optional<Channel> Detector::uninstall_barrier(const Channel& ch) {
  auto old = std::atomic_load(&barriers_);
  for (;;) {
    auto rest = std::make_shared<BarrierList>();
    std::vector<Channel> matches;
    for (const auto& e : *old) {
      if (std::find(e.channels.begin(), e.channels.end(), ch.id()) != e.channels.end()) {
        matches.push_back(e.barrier);
      } else {
        rest->push_back(e);
      }
    }
    std::shared_ptr<const BarrierList> desired = std::move(rest);
    if (!std::atomic_compare_exchange_strong(&barriers_, &old, desired)) continue;
    if (matches.size() > 1) {
      throw InternalError("more than one suspended thread waits on channel " + ch.name());
    }
    if (matches.empty()) return std::nullopt;
    return matches.front();
  }
}

void Detector::remove_barrier(const Channel& barrier) {
  auto old = std::atomic_load(&barriers_);
  for (;;) {
    auto rest = std::make_shared<BarrierList>();
    for (const auto& e : *old) {
      if (!(e.barrier == barrier)) rest->push_back(e);
    }
    std::shared_ptr<const BarrierList> desired = std::move(rest);
    if (std::atomic_compare_exchange_strong(&barriers_, &old, desired)) return;
  }
}

std::size_t Detector::barrier_count() const { return std::atomic_load(&barriers_)->size(); }

DetectorStats Detector::stats() const {
  DetectorStats s;
  s.acquisitions = acquisitions_.load();
  s.invariant_checks = invariant_checks_.load();
  s.invariant_failures = invariant_failures_.load();
  s.max_occupancy = max_occupancy_.load();
  s.resumption_failures = resumption_failures_.load();
  s.barrier_exchanges = barrier_exchanges_.load();
  return s;
}

}  // namespace sessmon
