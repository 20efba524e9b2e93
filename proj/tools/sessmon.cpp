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

// sessmon: run, fuzz and check session protocols.

#include <cmath>
#include <fstream>
#include <iostream>
#include <sstream>

#include "CLI11.hpp"
#include "sessmon/harness.hpp"

using namespace sessmon;
using namespace sessmon::harness;

namespace {

struct Common {
  double jitter_ms = 2.0;
  long timeout_ms = 2000;
  std::uint64_t seed = 42;
  std::string json;
  bool no_propagate = false;
};

RunOptions options_of(const Common& c) {
  RunOptions o;
  o.seed = c.seed;
  o.jitter = std::chrono::microseconds(std::llround(c.jitter_ms * 1000.0));
  o.timeout = std::chrono::milliseconds(c.timeout_ms);
  o.propagate_deadlock = !c.no_propagate;
  return o;
}

void add_common(CLI::App* cmd, Common& c) {
  cmd->add_option("--seed", c.seed, "random seed")->capture_default_str();
  cmd->add_option("--jitter", c.jitter_ms, "upper bound of the delay before each guarded call, ms")
      ->capture_default_str()
      ->check(CLI::NonNegativeNumber);
  cmd->add_option("--timeout", c.timeout_ms, "watchdog limit, ms")
      ->capture_default_str()
      ->check(CLI::PositiveNumber);
  cmd->add_option("--json", c.json, "write the report as JSON to this path");
  cmd->add_flag("--no-propagate", c.no_propagate,
                "only the last thread throws on deadlock; the watchdog ends the run");
}

std::string variant_of(const std::string& mutate, bool fixed) {
  if (fixed && !mutate.empty()) throw CLI::ValidationError("--fixed and --mutate exclude each other");
  if (fixed) return "fixed";
  return mutate.empty() ? "faithful" : mutate;
}

bool write_json(const std::string& path, const std::string& text) {
  if (path.empty()) return true;
  std::ofstream out(path);
  out << text << "\n";
  if (!out) {
    std::cerr << "cannot write " << path << "\n";
    return false;
  }
  return true;
}

int exit_code(const RunReport& r) {
  return r.missed_deadlocks == 0 && r.oracle_disagreements == 0 ? 0 : 1;
}

int cmd_run(const std::string& name, const std::string& variant, const Common& c) {
  const Scenario s = make_scenario(name, variant);
  const RunOptions opt = options_of(c);
  RunReport rep = fuzz(s, 1, c.seed, opt, [&](std::uint64_t, const RunResult& r) {
    std::cout << s.name << " (" << s.variant << "): " << to_string(r.outcome) << " in "
              << r.wall.count() / 1000.0 << " ms\n";
    for (const auto& line : r.output) std::cout << "  printed: " << line << "\n";
    for (const auto& e : r.errors) std::cout << "  " << e << "\n";
    if (r.oracle) {
      std::cout << "  oracle: " << (r.oracle->confirmed ? "confirmed, " : "refuted, ")
                << r.oracle->reason << "\n";
    }
    if (r.missed_deadlock) std::cout << "  MISSED DEADLOCK\n";
    if (r.oracle_disagreement) std::cout << "  ORACLE DISAGREEMENT\n";
    if (!r.trace_accepted) std::cout << "  trace rejected on replay\n";
    if (!r.lockstep) std::cout << "  lockstep: " << r.lockstep_detail << "\n";
  });
  if (!write_json(c.json, report_json(rep))) return 2;
  return exit_code(rep);
}

int cmd_fuzz(const std::string& name, const std::string& variant, bool all_variants,
             std::uint64_t runs, bool verbose, const Common& c) {
  std::vector<std::pair<std::string, std::string>> plan;
  const auto names = name == "all" ? scenario_names() : std::vector<std::string>{name};
  for (const auto& n : names) {
    if (name == "all" || all_variants) {
      for (const auto& v : variant_names(n)) plan.emplace_back(n, v);
    } else {
      plan.emplace_back(n, variant);
    }
  }
  std::vector<RunReport> reports;
  for (const auto& [n, v] : plan) {
    const Scenario s = make_scenario(n, v);
    Progress progress;
    if (verbose) {
      progress = [](std::uint64_t i, const RunResult& r) {
        std::cout << "  run " << i << ": " << to_string(r.outcome);
        if (!r.detail.empty()) std::cout << " (" << r.detail << ")";
        std::cout << "\n";
      };
    }
    reports.push_back(fuzz(s, runs, c.seed, options_of(c), progress));
    std::cout << report_text(reports.back());
  }
  const RunReport total = reports.size() == 1 ? reports.front() : combine(reports, name);
  if (reports.size() > 1) {
    std::cout << "total: " << total.runs << " run(s), missed deadlocks " << total.missed_deadlocks
              << ", oracle disagreements " << total.oracle_disagreements << "\n";
  }
  if (!write_json(c.json, report_json(total))) return 2;
  return exit_code(total);
}

int cmd_check(const std::string& path) {
  std::ifstream in(path);
  if (!in) {
    std::cerr << "cannot open " << path << "\n";
    return 2;
  }
  std::stringstream buf;
  buf << in.rdbuf();
  try {
    const ProtocolFile file = parse_spec(buf.str());
    std::cout << print_protocol(file);
    return 0;
  } catch (const ParseError& e) {
    std::cerr << path << ":" << e.what() << "\n";
    return 2;
  }
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Runtime monitor for channel-based sessions: run, fuzz and check protocols"};
  app.require_subcommand(1);

  std::string scenario, mutate;
  bool fixed = false;
  Common run_opts;
  auto* run = app.add_subcommand("run", "run a bundled scenario once");
  run->add_option("scenario", scenario, "two-buyer, load-balancer, three-cycle or ping-pong")
      ->required();
  run->add_option("--mutate", mutate, "wrong-channel or wrong-type (two-buyer)");
  run->add_flag("--fixed", fixed, "load-balancer with the servers reading their request channels");
  add_common(run, run_opts);

  std::string fuzz_target, fuzz_mutate;
  bool fuzz_fixed = false, all_variants = false, verbose = false;
  std::uint64_t runs = 100;
  Common fuzz_opts;
  auto* fz = app.add_subcommand("fuzz", "run a scenario many times with jittered schedules");
  fz->add_option("scenario", fuzz_target, "scenario name, or all")->required();
  fz->add_option("--runs", runs, "number of runs")->capture_default_str()->check(CLI::PositiveNumber);
  fz->add_option("--mutate", fuzz_mutate, "wrong-channel or wrong-type (two-buyer)");
  fz->add_flag("--fixed", fuzz_fixed, "load-balancer with the servers reading their request channels");
  fz->add_flag("--all-variants", all_variants, "every variant of the scenario");
  fz->add_flag("-v,--verbose", verbose, "one line per run");
  add_common(fz, fuzz_opts);

  std::string spec_path;
  auto* check = app.add_subcommand("check", "parse a protocol file and print it back");
  check->add_option("specfile", spec_path, "protocol file")->required()->check(CLI::ExistingFile);

  CLI11_PARSE(app, argc, argv);

  try {
    if (*run) return cmd_run(scenario, variant_of(mutate, fixed), run_opts);
    if (*fz) {
      return cmd_fuzz(fuzz_target, variant_of(fuzz_mutate, fuzz_fixed), all_variants, runs, verbose,
                      fuzz_opts);
    }
    return cmd_check(spec_path);
  } catch (const std::invalid_argument& e) {
    std::cerr << e.what() << "\n";
    return 2;
  } catch (const CLI::Error& e) {
    return app.exit(e);
  }
}
