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

#ifndef SESSMON_HARNESS_HPP_
#define SESSMON_HARNESS_HPP_

#include <chrono>
#include <cstdint>
#include <functional>
#include <map>
#include <optional>
#include <random>
#include <string>
#include <string_view>
#include <vector>

#include "sessmon/monitor.hpp"

namespace sessmon::harness {

// --- scenarios ----------------------------------------------------------------

struct ChannelDecl {
  std::string name;
  std::size_t capacity = 0;
  std::string sender;
  std::string receiver;
};

class Actor;
using Body = std::function<void(Actor&)>;

/// A bundled session program: protocol text, channels with their roles, and
/// one scripted body per role.
struct Scenario {
  std::string name;
  std::string variant;  // "faithful", a mutation name, or "fixed"
  std::string protocol_text;
  std::string session;
  std::size_t threads = 0;
  std::vector<ChannelDecl> channels;
  std::vector<std::pair<std::string, Body>> bodies;  // role name -> body
};

std::vector<std::string> scenario_names();
/// Variants accepted by `make_scenario` for a scenario, "faithful" first.
std::vector<std::string> variant_names(std::string_view scenario);
/// Throws std::invalid_argument for unknown names.
Scenario make_scenario(std::string_view name, std::string_view variant = "faithful");
/// Protocol text shipped with a bundled scenario.
std::string_view bundled_protocol(std::string_view scenario);

/// What a role body sees: its channels by name, guarded operations with
/// seeded jitter in front of each, and an output line sink.
class Actor {
 public:
  Actor(Monitor& m, std::string role, const std::map<std::string, Channel>& channels,
        std::uint64_t seed, std::chrono::microseconds jitter);

  void send(std::string_view channel, Value v);
  Value receive(std::string_view channel);
  /// `(alts!! ...)`: a send is {name, value}, a receive is {name, nullopt}.
  SelectOutcome select(const std::vector<std::pair<std::string, std::optional<Value>>>& alts);
  void print(std::string line);

  const std::string& role() const { return role_; }
  const std::vector<std::string>& output() const { return output_; }
  std::string channel_name(const Channel& ch) const;

 private:
  const Channel& channel(std::string_view name) const;
  void pause();

  Monitor& monitor_;
  std::string role_;
  const std::map<std::string, Channel>& channels_;
  std::mt19937_64 rng_;
  std::chrono::microseconds jitter_;
  std::vector<std::string> output_;
};

// --- oracle -------------------------------------------------------------------

struct OracleVerdict {
  bool confirmed = false;
  std::string reason;               // why not, or a description of the deadlock
  std::vector<std::string> cycle;   // roles of a wait-for cycle, first repeated at the end
};

/**
 * Independent deadlock check on a monitor snapshot: confirmed iff every live
 * thread is inside a guarded operation and none of its pending mock actions
 * is enabled. Also reports a wait-for cycle among the blocked roles, if any.
 */
OracleVerdict oracle_check(const MonitorSnapshot& snap);

// --- runs ---------------------------------------------------------------------

enum class Outcome { Completed, Deadlock, Safety, Role, Aborted };
std::string_view to_string(Outcome o);

struct RunOptions {
  std::uint64_t seed = 0;
  std::chrono::microseconds jitter{2000};
  std::chrono::milliseconds timeout{2000};
  std::chrono::milliseconds sample{10};
  /// Deliver a detected deadlock to all suspended threads so runs end.
  bool propagate_deadlock = true;
  /// Threads the monitor is told about that never start. The detector then
  /// cannot see a total deadlock; used to exercise the watchdog.
  std::size_t phantom_threads = 0;
};

struct RunResult {
  Outcome outcome = Outcome::Completed;
  std::vector<std::string> output;   // print lines, in role order
  std::vector<std::string> errors;   // one line per exception seen by a role
  std::string detail;                // first violation message

  std::optional<DeadlockSite> deadlock_site;
  std::size_t live_at_deadlock = 0;
  std::optional<OracleVerdict> oracle;  // taken when the detector reported
  bool missed_deadlock = false;         // watchdog fired without an exception
  bool oracle_disagreement = false;
  std::chrono::microseconds first_exception{0};  // since the bodies started

  bool trace_accepted = true;   // replay of the monitor trace through the protocol
  bool terminated = false;      // residual protocol finished
  bool lockstep = true;         // mock and real buffers agree at the end
  std::string lockstep_detail;
  std::uint64_t unguarded_updates = 0;
  std::size_t barriers_left = 0;
  DetectorStats stats;
  std::chrono::microseconds wall{0};
};

RunResult run_scenario(const Scenario& s, const RunOptions& options);

struct RunReport {
  std::string scenario;
  std::string variant;
  std::uint64_t runs = 0;
  std::uint64_t seed = 0;
  std::uint64_t completed = 0;
  std::uint64_t deadlock = 0;
  std::uint64_t safety = 0;
  std::uint64_t role = 0;
  std::uint64_t aborted = 0;
  std::uint64_t missed_deadlocks = 0;
  std::uint64_t oracle_disagreements = 0;

  std::uint64_t deadlock_last_thread = 0;
  std::uint64_t deadlock_unregister = 0;
  std::uint64_t deadlock_after_termination = 0;  // fewer live threads than n
  std::uint64_t cycles_reported = 0;
  std::uint64_t trace_rejections = 0;
  std::uint64_t lockstep_failures = 0;
  std::uint64_t unguarded_updates = 0;
  std::uint64_t invariant_checks = 0;
  std::uint64_t invariant_failures = 0;
  std::uint64_t resumption_failures = 0;
  std::uint64_t max_occupancy = 0;
  std::uint64_t barrier_leaks = 0;
  double max_exception_ms = 0;
  double wall_ms = 0;

  std::map<std::string, std::uint64_t> outputs;  // print line -> runs
  std::map<std::string, std::uint64_t> errors;   // error line -> occurrences
};

/// Derived seed of run `index` in a fuzz campaign.
std::uint64_t run_seed(std::uint64_t seed, std::uint64_t index);

using Progress = std::function<void(std::uint64_t index, const RunResult&)>;

RunReport fuzz(const Scenario& s, std::uint64_t runs, std::uint64_t seed, RunOptions options = {},
               const Progress& progress = {});

/// Merge counts of several reports (scenario name becomes `name`).
RunReport combine(const std::vector<RunReport>& reports, const std::string& name);

std::string report_json(const RunReport& r);
std::string report_text(const RunReport& r);

}  // namespace sessmon::harness

#endif  // SESSMON_HARNESS_HPP_
