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

#include <iomanip>
#include <sstream>

#include "json.hpp"
#include "sessmon/harness.hpp"

namespace sessmon::harness {

std::string report_json(const RunReport& r) {
  nlohmann::ordered_json j;
  j["scenario"] = r.scenario;
  j["variant"] = r.variant;
  j["runs"] = r.runs;
  j["seed"] = r.seed;
  j["outcomes"] = {{"completed", r.completed},
                   {"deadlock-exception", r.deadlock},
                   {"safety-exception", r.safety},
                   {"role-exception", r.role},
                   {"aborted", r.aborted}};
  j["missed_deadlocks"] = r.missed_deadlocks;
  j["oracle_disagreements"] = r.oracle_disagreements;
  j["wall_time_ms"] = r.wall_ms;
  j["deadlock_sites"] = {{"last-thread", r.deadlock_last_thread},
                         {"unregister", r.deadlock_unregister},
                         {"after-termination", r.deadlock_after_termination}};
  j["wait_for_cycles"] = r.cycles_reported;
  j["max_exception_ms"] = r.max_exception_ms;
  j["checks"] = {{"trace_rejections", r.trace_rejections},
                 {"lockstep_failures", r.lockstep_failures},
                 {"unguarded_updates", r.unguarded_updates},
                 {"invariant_checks", r.invariant_checks},
                 {"invariant_failures", r.invariant_failures},
                 {"resumption_failures", r.resumption_failures},
                 {"max_occupancy", r.max_occupancy},
                 {"barrier_leaks", r.barrier_leaks}};
  j["outputs"] = r.outputs;
  j["errors"] = r.errors;
  return j.dump(2);
}

std::string report_text(const RunReport& r) {
  std::ostringstream os;
  os << r.scenario << " (" << r.variant << "): " << r.runs << " run(s), seed " << r.seed << ", "
     << std::fixed << std::setprecision(0) << r.wall_ms << " ms\n";
  os << "  completed " << r.completed << ", deadlock " << r.deadlock << ", safety " << r.safety
     << ", role " << r.role << ", aborted " << r.aborted << "\n";
  os << "  missed deadlocks " << r.missed_deadlocks << ", oracle disagreements "
     << r.oracle_disagreements << "\n";
  if (r.deadlock > 0) {
    os << "  detected by last thread " << r.deadlock_last_thread << ", on unregister "
       << r.deadlock_unregister << ", after termination " << r.deadlock_after_termination
       << ", wait-for cycles " << r.cycles_reported << ", slowest " << std::setprecision(1)
       << r.max_exception_ms << " ms\n";
  }
  os << "  invariant " << r.invariant_failures << "/" << r.invariant_checks
     << " failed, max occupancy " << r.max_occupancy << ", trace rejections "
     << r.trace_rejections << ", lockstep failures " << r.lockstep_failures << "\n";
  for (const auto& [line, count] : r.outputs) os << "  printed \"" << line << "\" x" << count << "\n";
  std::size_t shown = 0;
  for (const auto& [line, count] : r.errors) {
    if (++shown > 8) {
      os << "  ...\n";
      break;
    }
    os << "  " << line << " x" << count << "\n";
  }
  return os.str();
}

}  // namespace sessmon::harness
