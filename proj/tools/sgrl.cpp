/*
 Copyright 2026 The sgrl Authors

 Licensed under the Apache License, Version 2.0 (the "License");
 you may not use this file except in compliance with the License.
 You may obtain a copy of the License at

      https://www.apache.org/licenses/LICENSE-2.0

 Unless required by applicable law or agreed to in writing, software
 distributed under the License is distributed on an "AS IS" BASIS,
 WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
 See the License for the specific language governing permissions and
 limitations under the License.
*/

// Command-line front end: run, sweep and compare scenarios, list and
// validate configurations. Exit status: 0 ok, 1 error, 2 a safeguarded run
// violated one of its enforced constraints.

#include "sgrl/config.hpp"
#include "sgrl/sgrl.hpp"

#include <CLI11.hpp>

#include <algorithm>
#include <atomic>
#include <filesystem>
#include <functional>
#include <iomanip>
#include <iostream>
#include <mutex>
#include <optional>
#include <sstream>
#include <string>
#include <thread>
#include <vector>

namespace fs = std::filesystem;
using namespace sgrl;

namespace {

constexpr int kExitOk = 0;
constexpr int kExitError = 1;
constexpr int kExitViolation = 2;

struct CommonOptions {
  std::string config_path;
  std::vector<std::string> sets;
  std::string out = "out";
  std::optional<std::uint64_t> seed;
  std::optional<double> dt;
  std::optional<double> fc;
};

void add_common(CLI::App *cmd, CommonOptions &o) {
  cmd->add_option("--config", o.config_path, "YAML scenario file (overrides the named scenario)");
  cmd->add_option("--set", o.sets, "override key=value (repeatable)");
  cmd->add_option("--out", o.out, "output directory")->capture_default_str();
  cmd->add_option("--seed", o.seed, "random seed for obstacle placement");
  cmd->add_option("--dt", o.dt, "integration step [s]");
  cmd->add_option("--fc", o.fc, "control update frequency [Hz]");
}

std::string canonical_scenario(const std::string &name) {
  if (name == "robot-ks") return "example1-ks";
  return name;
}

ScenarioConfig build_config(const std::string &scenario, const CommonOptions &o) {
  ScenarioConfig cfg;
  if (!scenario.empty()) {
    const auto *entry = find_scenario(canonical_scenario(scenario));
    if (!entry) throw ConfigError("unknown scenario '" + scenario + "' (see 'list')");
    cfg = entry->build();
  }
  if (!o.config_path.empty()) cfg = load_config(o.config_path, std::move(cfg));
  else if (scenario.empty()) throw ConfigError("give a scenario name or --config");
  cfg = apply_overrides(std::move(cfg), o.sets);
  if (o.seed) cfg.seed = *o.seed;
  if (o.dt) cfg.dt = *o.dt;
  if (o.fc) cfg.control_frequency = *o.fc;
  return cfg;
}

std::string slug(std::string s) {
  for (auto &c : s)
    if (!(std::isalnum(static_cast<unsigned char>(c)) || c == '-' || c == '.' || c == '=' || c == '_'))
      c = '_';
  return s;
}

struct RunOutcome {
  ScenarioConfig cfg;
  MetricReport report;
  fs::path dir;
};

/// Resolves, simulates and writes config.yaml, trajectory.csv and metrics.txt into `dir`.
RunOutcome execute(const ScenarioConfig &cfg, const fs::path &dir) {
  RunOutcome r;
  r.cfg = resolve(cfg);
  r.dir = dir;
  fs::create_directories(dir);
  save_config(r.cfg, (dir / "config.yaml").string());
  const Trajectory traj = run_scenario(r.cfg);
  r.report = metrics(traj, r.cfg);
  write_csv(traj, (dir / "trajectory.csv").string());
  std::ofstream os(dir / "metrics.txt", std::ios::binary);
  if (!os) throw Error("cannot write metrics in '" + dir.string() + "'");
  write_metrics(r.report, os);
  return r;
}

/// Runs jobs on a small thread pool; the first exception is rethrown.
void parallel_for(std::size_t count, const std::function<void(std::size_t)> &job) {
  const std::size_t workers =
      std::max<std::size_t>(1, std::min<std::size_t>(count, std::thread::hardware_concurrency()));
  std::atomic<std::size_t> next{0};
  std::exception_ptr failure;
  std::mutex m;
  std::vector<std::thread> pool;
  for (std::size_t w = 0; w < workers; ++w)
    pool.emplace_back([&] {
      for (std::size_t i = next++; i < count; i = next++) {
        try {
          job(i);
        } catch (...) {
          std::lock_guard lock(m);
          if (!failure) failure = std::current_exception();
        }
      }
    });
  for (auto &t : pool) t.join();
  if (failure) std::rethrow_exception(failure);
}

void print_summary(const RunOutcome &r) {
  std::cout << r.cfg.name << " [" << r.report.mode << "]  J = " << format_number(r.report.cost)
            << "  violation = " << (r.report.violation ? "true" : "false");
  if (r.report.failure) std::cout << "  failure: " << *r.report.failure;
  std::cout << "  -> " << r.dir.string() << '\n';
}

std::vector<double> parse_values(const std::string &text) {
  std::vector<double> out;
  std::stringstream ss(text);
  std::string item;
  while (std::getline(ss, item, ',')) {
    if (item.empty()) continue;
    try {
      std::size_t used = 0;
      out.push_back(std::stod(item, &used));
      if (used != item.size()) throw std::invalid_argument(item);
    } catch (const std::exception &) {
      throw ConfigError("'" + item + "' is not a number");
    }
  }
  if (out.empty()) throw ConfigError("the value list is empty");
  return out;
}

int cmd_list() {
  for (const auto &e : scenario_registry())
    std::cout << std::left << std::setw(26) << e.name << e.description << "  (" << e.provenance
              << ")\n";
  std::cout << std::left << std::setw(26) << "robot-ks" << "alias of example1-ks\n";
  return kExitOk;
}

int cmd_validate(const std::string &scenario, const CommonOptions &o) {
  const ScenarioConfig cfg = resolve(build_config(scenario, o));
  const SystemModel sys = cfg.system.build();
  bool ok = true;
  for (const auto &d : cfg.constraints) {
    const PsiChain chain = build_chain(d.to_spec(sys.state_dim()), sys);
    const auto rep = initial_feasibility(chain, cfg.x0);
    std::cout << d.label << ": " << (rep.feasible ? "feasible" : "infeasible");
    if (!rep.feasible) std::cout << " at level " << *rep.first_failing_level;
    std::cout << (d.enforced ? "" : " (not enforced)") << '\n';
    if (d.enforced && !rep.feasible && cfg.mode != ControllerMode::classical_rl) ok = false;
  }
  std::cout << cfg.name << ": " << (ok ? "valid" : "initial state infeasible") << '\n';
  return ok ? kExitOk : kExitError;
}

int cmd_run(const std::string &scenario, const CommonOptions &o) {
  const ScenarioConfig cfg = build_config(scenario, o);
  const auto r = execute(cfg, fs::path(o.out) / slug(cfg.name));
  print_summary(r);
  return r.report.safeguarded_violation ? kExitViolation : kExitOk;
}

int cmd_sweep(const std::string &scenario, const std::string &parameter, const std::string &values,
              const CommonOptions &o) {
  const auto vals = parse_values(values);
  const ScenarioConfig base = build_config(scenario, o);
  const fs::path root = fs::path(o.out) / slug(base.name + "-sweep-" + parameter);
  std::vector<RunOutcome> results(vals.size());
  std::vector<ScenarioConfig> cfgs;
  for (double v : vals) {
    ScenarioConfig c = apply_override(base, parameter + "=" + format_number(v));
    cfgs.push_back(std::move(c));
  }
  parallel_for(vals.size(), [&](std::size_t i) {
    results[i] = execute(cfgs[i], root / slug(parameter + "=" + format_number(vals[i])));
  });

  std::ofstream os(root / "summary.csv", std::ios::binary);
  if (!os) throw Error("cannot write sweep summary");
  os << "value,J";
  for (const auto &c : results.front().report.constraints) os << ",min_psi0_" << c.label;
  os << ",violation,oscillation_count\n";
  bool regress = false;
  for (std::size_t i = 0; i < vals.size(); ++i) {
    const auto &m = results[i].report;
    os << format_number(vals[i]) << ',' << format_number(m.cost);
    for (const auto &c : m.constraints) os << ',' << format_number(c.min_psi0);
    os << ',' << (m.violation ? "true" : "false") << ',' << m.oscillation_count << '\n';
    print_summary(results[i]);
    regress = regress || m.safeguarded_violation;
  }
  std::cout << "summary: " << (root / "summary.csv").string() << '\n';
  return regress ? kExitViolation : kExitOk;
}

int cmd_compare(const std::string &family, const std::vector<std::string> &modes,
                const std::vector<std::string> &starts, const CommonOptions &o) {
  if (modes.empty()) throw ConfigError("compare needs at least one mode");
  struct Job {
    std::string mode;
    std::string x0;
    ScenarioConfig cfg;
  };
  std::vector<Job> jobs;
  for (const auto &mode : modes) {
    const ScenarioConfig base = build_config(family + "-" + mode, o);
    if (starts.empty()) {
      std::ostringstream x0;
      for (Eigen::Index i = 0; i < base.x0.size(); ++i) x0 << (i ? " " : "") << format_number(base.x0(i));
      jobs.push_back({mode, x0.str(), base});
    }
    for (const auto &s : starts) jobs.push_back({mode, s, apply_override(base, "x0=" + s)});
  }
  const fs::path root = fs::path(o.out) / slug(family + "-compare");
  std::vector<RunOutcome> results(jobs.size());
  parallel_for(jobs.size(), [&](std::size_t i) {
    results[i] = execute(jobs[i].cfg, root / slug(jobs[i].mode + "_x0=" + jobs[i].x0));
  });

  std::ofstream os(root / "comparison.csv", std::ios::binary);
  if (!os) throw Error("cannot write comparison table");
  os << "mode,x0,J,violation,safeguarded_violation,violated_constraints\n";
  bool regress = false;
  std::cout << std::left << std::setw(14) << "mode" << std::setw(18) << "x0" << std::setw(16) << "J"
            << "violated\n";
  for (std::size_t i = 0; i < jobs.size(); ++i) {
    const auto &m = results[i].report;
    std::string violated;
    for (const auto &c : m.constraints)
      if (c.violated) violated += (violated.empty() ? "" : ";") + c.label;
    os << jobs[i].mode << ",\"" << jobs[i].x0 << "\"," << format_number(m.cost) << ','
       << (m.violation ? "true" : "false") << ',' << (m.safeguarded_violation ? "true" : "false")
       << ',' << violated << '\n';
    std::cout << std::left << std::setw(14) << jobs[i].mode << std::setw(18) << jobs[i].x0
              << std::setw(16) << format_number(m.cost) << (violated.empty() ? "-" : violated) << '\n';
    regress = regress || m.safeguarded_violation;
  }
  std::cout << "table: " << (root / "comparison.csv").string() << '\n';
  return regress ? kExitViolation : kExitOk;
}

} // namespace

int main(int argc, char **argv) {
  CLI::App app{"Safeguarded reinforcement-learning control simulator"};
  app.require_subcommand(1);

  CommonOptions run_opts, sweep_opts, cmp_opts, val_opts;
  std::string run_name, sweep_name, sweep_param, sweep_values, cmp_family, val_name;
  std::vector<std::string> cmp_modes, cmp_starts;

  app.add_subcommand("list", "list built-in scenarios");

  auto *run = app.add_subcommand("run", "simulate one scenario");
  run->add_option("scenario", run_name, "built-in scenario name");
  add_common(run, run_opts);

  auto *sweep = app.add_subcommand("sweep", "simulate one scenario over a list of parameter values");
  sweep->add_option("scenario", sweep_name, "built-in scenario name")->required();
  sweep->add_option("parameter", sweep_param, "override key, e.g. Ks")->required();
  sweep->add_option("values", sweep_values, "comma-separated values")->required();
  add_common(sweep, sweep_opts);

  auto *cmp = app.add_subcommand("compare", "cross-product of modes and initial states");
  cmp->add_option("family", cmp_family, "scenario family, e.g. robot-case2")->required();
  cmp->add_option("--modes", cmp_modes, "family members, e.g. fixed,adaptive")
      ->delimiter(',')
      ->required();
  cmp->add_option("--x0", cmp_starts, "leading initial-state entries, e.g. -3,-2 (repeatable)")
      ->allow_extra_args(false);
  add_common(cmp, cmp_opts);

  auto *val = app.add_subcommand("validate", "check a configuration and its initial feasibility");
  val->add_option("scenario", val_name, "built-in scenario name");
  add_common(val, val_opts);

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError &e) {
    const int code = app.exit(e);
    return code == 0 ? kExitOk : kExitError;
  }

  try {
    if (app.got_subcommand("list")) return cmd_list();
    if (*run) return cmd_run(run_name, run_opts);
    if (*sweep) return cmd_sweep(sweep_name, sweep_param, sweep_values, sweep_opts);
    if (*cmp) return cmd_compare(cmp_family, cmp_modes, cmp_starts, cmp_opts);
    if (*val) return cmd_validate(val_name, val_opts);
  } catch (const std::exception &e) {
    std::cerr << "error: " << e.what() << '\n';
    return kExitError;
  }
  return kExitError;
}
