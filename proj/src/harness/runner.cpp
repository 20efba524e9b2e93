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
#include <condition_variable>
#include <latch>
#include <mutex>
#include <stdexcept>
#include <thread>

#include "sessmon/harness.hpp"

namespace sessmon::harness {

using Clock = std::chrono::steady_clock;

// --- Actor ----------------------------------------------------------------------

Actor::Actor(Monitor& m, std::string role, const std::map<std::string, Channel>& channels,
             std::uint64_t seed, std::chrono::microseconds jitter)
    : monitor_(m), role_(std::move(role)), channels_(channels), rng_(seed), jitter_(jitter) {}

const Channel& Actor::channel(std::string_view name) const {
  auto it = channels_.find(std::string(name));
  if (it == channels_.end()) throw std::invalid_argument("no channel named " + std::string(name));
  return it->second;
}

std::string Actor::channel_name(const Channel& ch) const {
  for (const auto& [name, c] : channels_) {
    if (c == ch) return name;
  }
  return ch.name();
}

void Actor::pause() {
  if (jitter_.count() <= 0) return;
  std::uniform_int_distribution<std::int64_t> d(0, jitter_.count());
  std::this_thread::sleep_for(std::chrono::microseconds(d(rng_)));
}

void Actor::send(std::string_view ch, Value v) {
  pause();
  monitor_.guarded_send(channel(ch), std::move(v));
}

Value Actor::receive(std::string_view ch) {
  pause();
  return monitor_.guarded_receive(channel(ch));
}

SelectOutcome Actor::select(
    const std::vector<std::pair<std::string, std::optional<Value>>>& alts) {
  std::vector<ChannelAction> acts;
  for (const auto& [name, v] : alts) {
    acts.push_back(v ? ChannelAction::send(channel(name), *v) : ChannelAction::receive(channel(name)));
  }
  pause();
  return monitor_.guarded_select(acts);
}

void Actor::print(std::string line) { output_.push_back(std::move(line)); }

// --- runs -----------------------------------------------------------------------

std::string_view to_string(Outcome o) {
  switch (o) {
    case Outcome::Completed: return "completed";
    case Outcome::Deadlock: return "deadlock-exception";
    case Outcome::Safety: return "safety-exception";
    case Outcome::Role: return "role-exception";
    case Outcome::Aborted: return "aborted";
  }
  return "?";
}

std::uint64_t run_seed(std::uint64_t seed, std::uint64_t index) {
  // splitmix64 step over the pair
  std::uint64_t z = seed + 0x9E3779B97F4A7C15ull * (index + 1);
  z = (z ^ (z >> 30)) * 0xBF58476D1CE4E5B9ull;
  z = (z ^ (z >> 27)) * 0x94D049BB133111EBull;
  return z ^ (z >> 31);
}

namespace {

enum class Ending { None, Deadlock, Safety, Role, Aborted, Other };

struct RoleEnd {
  Ending kind = Ending::None;
  std::string message;
  std::vector<std::string> output;
};

const char* label(Ending e) {
  switch (e) {
    case Ending::Deadlock: return "DeadlockException";
    case Ending::Safety: return "SafetyViolation";
    case Ending::Role: return "RoleViolation";
    case Ending::Aborted: return "SessionAborted";
    case Ending::Other: return "error";
    case Ending::None: break;
  }
  return "";
}

}  // namespace

RunResult run_scenario(const Scenario& s, const RunOptions& opt) {
  const ProtocolFile file = parse_spec(s.protocol_text);
  const SessionDef* def = file.find(s.session);
  if (!def) throw std::invalid_argument("protocol has no session :" + s.session);
  if (s.bodies.size() != s.threads) {
    throw std::invalid_argument("scenario " + s.name + " declares " + std::to_string(s.threads) +
                                " threads but has " + std::to_string(s.bodies.size()) + " bodies");
  }
  for (const auto& r : file.roles) {
    bool found = false;
    for (const auto& b : s.bodies) found = found || b.first == r.name;
    if (!found) throw std::invalid_argument("scenario " + s.name + " has no body for :" + r.name);
  }

  RunResult r;
  std::mutex mu;
  std::atomic<int> reports{0};
  MonitorOptions mo;
  mo.detector.propagate_deadlock = opt.propagate_deadlock;
  mo.on_deadlock = [&](const Monitor& m, DeadlockSite site) {
    OracleVerdict v = oracle_check(m.snapshot());
    std::lock_guard<std::mutex> lk(mu);
    if (reports++ == 0) {
      r.deadlock_site = site;
      r.live_at_deadlock = m.detector().live_total();
      r.oracle = std::move(v);
    }
  };
  Monitor m(def->body, s.threads + opt.phantom_threads, mo);
  std::map<std::string, Channel> chans;
  for (const auto& d : s.channels) {
    Channel ch(d.capacity, d.name);
    m.link(ch, Role{d.sender}, Role{d.receiver});
    chans.emplace(d.name, ch);
  }

  const std::size_t n = s.bodies.size();
  std::vector<RoleEnd> ends(n);
  std::latch ready(static_cast<std::ptrdiff_t>(n + 1));
  std::atomic<std::size_t> finished{0};
  std::atomic<std::int64_t> first_us{-1};
  Clock::time_point start = Clock::now();

  std::vector<std::thread> workers;
  for (std::size_t k = 0; k < n; ++k) {
    workers.emplace_back([&, k] {
      const auto& [role, body] = s.bodies[k];
      m.register_thread(Role{role});
      ready.arrive_and_wait();
      Actor actor(m, role, chans, run_seed(opt.seed, k), opt.jitter);
      RoleEnd& end = ends[k];
      try {
        body(actor);
      } catch (const DeadlockException& e) {
        end = {Ending::Deadlock, e.what(), {}};
      } catch (const SafetyViolation& e) {
        end = {Ending::Safety, e.what(), {}};
      } catch (const RoleViolation& e) {
        end = {Ending::Role, e.what(), {}};
      } catch (const SessionAborted& e) {
        end = {Ending::Aborted, e.what(), {}};
      } catch (const std::exception& e) {
        end = {Ending::Other, e.what(), {}};
      }
      if (end.kind != Ending::None) {
        const auto us = std::chrono::duration_cast<std::chrono::microseconds>(Clock::now() - start);
        std::int64_t none = -1;
        first_us.compare_exchange_strong(none, us.count());
      }
      end.output = actor.output();
      m.unregister_thread();
      ++finished;
    });
  }

  // Samples thread states; a session whose live threads all sit in guarded
  // operations without progress for longer than the timeout, and that has
  // not raised anything, is a deadlock the detector missed.
  std::mutex stop_mu;
  std::condition_variable stop_cv;
  bool stop = false;
  std::string watchdog_note;
  std::thread watchdog([&] {
    std::uint64_t last = ~std::uint64_t{0};
    std::optional<Clock::time_point> stalled_since;
    const auto hard_limit = start + opt.timeout * 5 + std::chrono::seconds(10);
    for (;;) {
      {
        std::unique_lock<std::mutex> lk(stop_mu);
        if (stop_cv.wait_for(lk, opt.sample, [&] { return stop; })) return;
      }
      if (finished == n) return;
      const auto now = Clock::now();
      const MonitorSnapshot snap = m.snapshot();
      bool all_blocked = !snap.participants.empty();
      std::uint64_t progress = 0;
      for (const auto& p : snap.participants) {
        if (p.phase == Phase::Idle) all_blocked = false;
        progress = progress * 31 + p.completed * 3 + static_cast<std::uint64_t>(p.phase);
      }
      if (!all_blocked || progress != last) {
        last = progress;
        stalled_since.reset();
        if (now > hard_limit) {
          watchdog_note = "run exceeded its time limit";
          m.abort(watchdog_note);
          return;
        }
        continue;
      }
      if (!stalled_since) stalled_since = now;
      if (now - *stalled_since < opt.timeout) continue;
      if (first_us.load() < 0) {
        std::lock_guard<std::mutex> lk(mu);
        r.missed_deadlock = true;
        if (!r.oracle) r.oracle = oracle_check(snap);
        watchdog_note = "watchdog: all live threads blocked without an exception";
      } else {
        watchdog_note = "watchdog: threads still blocked after an exception";
      }
      m.abort(watchdog_note);
      return;
    }
  });

  ready.arrive_and_wait();
  for (auto& w : workers) w.join();
  {
    std::lock_guard<std::mutex> lk(stop_mu);
    stop = true;
  }
  stop_cv.notify_all();
  watchdog.join();
  r.wall = std::chrono::duration_cast<std::chrono::microseconds>(Clock::now() - start);

  // Outcome, most severe first.
  bool seen[6] = {};
  for (const auto& e : ends) seen[static_cast<int>(e.kind)] = true;
  Ending top = Ending::None;
  for (Ending e : {Ending::Safety, Ending::Role, Ending::Deadlock, Ending::Other, Ending::Aborted}) {
    if (seen[static_cast<int>(e)]) {
      top = e;
      break;
    }
  }
  switch (top) {
    case Ending::Safety: r.outcome = Outcome::Safety; break;
    case Ending::Role: r.outcome = Outcome::Role; break;
    case Ending::Deadlock: r.outcome = Outcome::Deadlock; break;
    case Ending::Other:
    case Ending::Aborted: r.outcome = Outcome::Aborted; break;
    case Ending::None: r.outcome = Outcome::Completed; break;
  }
  for (std::size_t k = 0; k < n; ++k) {
    const auto& e = ends[k];
    r.output.insert(r.output.end(), e.output.begin(), e.output.end());
    if (e.kind == Ending::None) continue;
    r.errors.push_back(s.bodies[k].first + ": " + label(e.kind) + ": " + e.message);
    if (e.kind == top && r.detail.empty()) r.detail = e.message;
  }
  if (!watchdog_note.empty()) {
    r.errors.push_back("harness: " + watchdog_note);
    if (r.detail.empty()) r.detail = watchdog_note;
  }
  if (first_us >= 0) r.first_exception = std::chrono::microseconds(first_us.load());

  // Every reported deadlock must be confirmed by the oracle, and every
  // deadlock exception must come from a report.
  const bool raised = seen[static_cast<int>(Ending::Deadlock)];
  if (raised || r.deadlock_site) {
    r.oracle_disagreement = !(raised && r.deadlock_site && r.oracle && r.oracle->confirmed);
  }

  // The monitor trace must replay through the protocol.
  ResidualSet rs = initial(def->body);
  for (const auto& e : m.trace()) {
    auto next = step(rs, e);
    if (!next) {
      r.trace_accepted = false;
      break;
    }
    rs = *next;
  }
  r.terminated = is_terminated(m.residual());
  if (r.outcome == Outcome::Completed || r.outcome == Outcome::Deadlock) {
    r.lockstep = m.lockstep_ok(&r.lockstep_detail);
  }
  r.unguarded_updates = m.unguarded_updates();
  r.barriers_left = m.detector().barrier_count();
  r.stats = m.detector().stats();
  return r;
}

RunReport fuzz(const Scenario& s, std::uint64_t runs, std::uint64_t seed, RunOptions options,
               const Progress& progress) {
  if (runs == 0) throw std::invalid_argument("fuzz needs at least one run");
  RunReport rep;
  rep.scenario = s.name;
  rep.variant = s.variant;
  rep.seed = seed;
  const auto t0 = Clock::now();
  for (std::uint64_t i = 0; i < runs; ++i) {
    options.seed = run_seed(seed, i);
    const RunResult r = run_scenario(s, options);
    ++rep.runs;
    switch (r.outcome) {
      case Outcome::Completed: ++rep.completed; break;
      case Outcome::Deadlock: ++rep.deadlock; break;
      case Outcome::Safety: ++rep.safety; break;
      case Outcome::Role: ++rep.role; break;
      case Outcome::Aborted: ++rep.aborted; break;
    }
    rep.missed_deadlocks += r.missed_deadlock;
    rep.oracle_disagreements += r.oracle_disagreement;
    if (r.deadlock_site == DeadlockSite::LastThread) ++rep.deadlock_last_thread;
    if (r.deadlock_site == DeadlockSite::Unregister) ++rep.deadlock_unregister;
    if (r.deadlock_site && r.live_at_deadlock < s.threads + options.phantom_threads) {
      ++rep.deadlock_after_termination;
    }
    if (r.oracle && !r.oracle->cycle.empty()) ++rep.cycles_reported;
    rep.trace_rejections += !r.trace_accepted;
    rep.lockstep_failures += !r.lockstep;
    rep.unguarded_updates += r.unguarded_updates;
    rep.invariant_checks += r.stats.invariant_checks;
    rep.invariant_failures += r.stats.invariant_failures;
    rep.resumption_failures += r.stats.resumption_failures;
    rep.max_occupancy = std::max(rep.max_occupancy, r.stats.max_occupancy);
    rep.barrier_leaks += r.barriers_left;
    if (r.first_exception.count() > 0) {
      rep.max_exception_ms = std::max(rep.max_exception_ms, r.first_exception.count() / 1000.0);
    }
    for (const auto& line : r.output) ++rep.outputs[line];
    for (const auto& line : r.errors) ++rep.errors[line];
    if (progress) progress(i, r);
  }
  rep.wall_ms = std::chrono::duration<double, std::milli>(Clock::now() - t0).count();
  return rep;
}

RunReport combine(const std::vector<RunReport>& reports, const std::string& name) {
  RunReport t;
  t.scenario = name;
  t.variant = "all";
  for (const auto& r : reports) {
    t.seed = r.seed;
    t.runs += r.runs;
    t.completed += r.completed;
    t.deadlock += r.deadlock;
    t.safety += r.safety;
    t.role += r.role;
    t.aborted += r.aborted;
    t.missed_deadlocks += r.missed_deadlocks;
    t.oracle_disagreements += r.oracle_disagreements;
    t.deadlock_last_thread += r.deadlock_last_thread;
    t.deadlock_unregister += r.deadlock_unregister;
    t.deadlock_after_termination += r.deadlock_after_termination;
    t.cycles_reported += r.cycles_reported;
    t.trace_rejections += r.trace_rejections;
    t.lockstep_failures += r.lockstep_failures;
    t.unguarded_updates += r.unguarded_updates;
    t.invariant_checks += r.invariant_checks;
    t.invariant_failures += r.invariant_failures;
    t.resumption_failures += r.resumption_failures;
    t.max_occupancy = std::max(t.max_occupancy, r.max_occupancy);
    t.barrier_leaks += r.barrier_leaks;
    t.max_exception_ms = std::max(t.max_exception_ms, r.max_exception_ms);
    t.wall_ms += r.wall_ms;
    for (const auto& [k, v] : r.outputs) t.outputs[r.scenario + "/" + r.variant + ": " + k] += v;
    for (const auto& [k, v] : r.errors) t.errors[r.scenario + "/" + r.variant + ": " + k] += v;
  }
  return t;
}

}  // namespace sessmon::harness
