// Copyright 2026 The spdelab Authors.
//
// Licensed under the Apache License, Version 2.0 (the "License");
// you may not use this file except in compliance with the License.
// You may obtain a copy of the License at
//
//     http://www.apache.org/licenses/LICENSE-2.0
//
// Unless required by applicable law or agreed to in writing, software
// distributed under the License is distributed on an "AS IS" BASIS,
// WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
// See the License for the specific language governing permissions and
// limitations under the License.

// spdelab: command-line front-end for convergence studies and checks.
//
// Exit codes: 0 ok, 2 invalid configuration, 3 hypothesis violated,
// 4 runtime failure, 5 acceptance check failed.

#include <cstdio>
#include <exception>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <optional>
#include <string>

#include "CLI11.hpp"
#include "spdelab/study.hpp"

namespace fs = std::filesystem;
using namespace spdelab;

namespace {

constexpr int kOk = 0;
constexpr int kConfigInvalid = 2;
constexpr int kHypothesisViolated = 3;
constexpr int kRuntimeFailure = 4;
constexpr int kAcceptanceFailure = 5;

struct Overrides {
  std::string config;
  std::optional<std::uint64_t> seed;
  std::optional<std::size_t> paths;
  std::optional<std::string> out;
  std::optional<unsigned> workers;
  bool deterministic = false;
  bool trajectories = false;
};

StudyConfig resolve(const Overrides& o, const std::string& kind) {
  StudyConfig c = load_config(o.config);
  c.study.kind = kind;
  if (o.seed) c.noise.seed = *o.seed;
  if (o.paths) c.study.paths = *o.paths;
  if (o.out) c.output_dir = *o.out;
  if (o.workers) c.study.workers = *o.workers;
  if (o.deterministic) c.study.deterministic = true;
  check_study_shape(c);
  return c;
}

void write_file(const fs::path& p, const std::string& text) {
  std::ofstream f(p);
  if (!f) throw std::runtime_error("cannot write " + p.string());
  f << text;
}

fs::path prepare_out(const StudyConfig& c) {
  fs::path dir(c.output_dir);
  fs::create_directories(dir);
  write_file(dir / "config.json", to_json(c).dump(2) + "\n");
  return dir;
}

int emit_convergence(const StudyConfig& c, const ConvergenceReport& r) {
  const fs::path dir = prepare_out(c);
  std::ostringstream csv;
  write_convergence_csv(csv, r);
  write_file(dir / "report.csv", csv.str());
  write_file(dir / "summary.json", convergence_summary(r).dump(2) + "\n");
  write_file(dir / "plot.gp", plot_script(r));
  std::cout << csv.str();
  std::printf("slope %.6f  intercept %.6f  r2 %.6f  nu %.6f\n", r.fit.slope, r.fit.intercept, r.fit.r2, r.nu_theory);
  for (const auto& f : r.flags) std::printf("[%s] %s: %s\n", f.pass ? "PASS" : "FAIL", f.name.c_str(), f.detail.c_str());
  return r.pass() ? kOk : kAcceptanceFailure;
}

int run_simulate(const StudyConfig& c, bool trajectories) {
  const fs::path dir = prepare_out(c);
  const SchemeConfig cfg = base_scheme(c);
  const NoiseLattice lattice = make_lattice(c);
  std::ostringstream csv;
  csv << "path,final_norm,max_norm\n" << std::setprecision(17);
  for (std::size_t p = 0; p < c.study.paths; ++p) {
    const Trajectory tr = simulate_path(cfg, lattice, p);
    double max_norm = 0.0;
    for (const auto& v : tr.values) max_norm = std::max(max_norm, v.norm());
    csv << p << ',' << tr.values.back().norm() << ',' << max_norm << '\n';
    if (trajectories) {
      std::ofstream f(dir / ("trajectory_" + std::to_string(p) + ".csv"));
      write_trajectory_csv(f, tr);
    }
  }
  write_file(dir / "report.csv", csv.str());
  write_file(dir / "summary.json", json{{"paths", c.study.paths}, {"steps", cfg.steps()}, {"n_modes", cfg.n}}.dump(2) + "\n");
  std::cout << csv.str();
  return kOk;
}

int run_validate(const StudyConfig& c) {
  const fs::path dir = prepare_out(c);
  const DriftValidation v =
      validate_drift(c.drift, c.op.build(), c.study.validation_trials, c.noise.seed, c.study.horizon);
  std::ostringstream csv;
  csv << "check,trials,max_ratio,constant,pass\n" << std::setprecision(17);
  json checks = json::array();
  for (const auto& r : v.reports) {
    csv << r.name << ',' << r.trials << ',' << r.max_ratio << ',' << r.constant << ',' << (r.pass ? 1 : 0) << '\n';
    checks.push_back({{"name", r.name}, {"max_ratio", r.max_ratio}, {"constant", r.constant}, {"pass", r.pass},
                      {"worst_case", r.worst_case}});
    std::printf("[%s] %s: max ratio %.6f (constant %.6g)\n", r.pass ? "PASS" : "FAIL", r.name.c_str(), r.max_ratio,
                r.constant);
  }
  write_file(dir / "report.csv", csv.str());
  write_file(dir / "summary.json", json{{"pass", v.pass()}, {"checks", checks}}.dump(2) + "\n");
  return v.pass() ? kOk : kAcceptanceFailure;
}

int run_kolmogorov(const StudyConfig& c) {
  const fs::path dir = prepare_out(c);
  const auto& k = c.study.kolmogorov;
  const SpectralOperator op = c.op.build();
  const ParallelOptions par = c.parallel();
  std::vector<CheckLine> lines;

  std::size_t d = 0;
  for (std::size_t m : k.decay_modes) d = std::max(d, m);
  const ModeVector x = c.initial.project(d);
  for (auto& l : ou_exactness_check(op.truncated(d), x, k.t, k.decay_modes, k.ou_draws, c.noise.seed)) lines.push_back(l);
  for (auto& l : bismut_check(op, k.bismut_dims, k.t, k.gradient_draws, k.fd_step, c.noise.seed + 1, par))
    lines.push_back(l);

  // gradient decay of P_t applied to a drift component, per mode
  MonteCarloOptions mc;
  mc.samples = k.gradient_draws;
  mc.seed = c.noise.seed + 2;
  mc.parallel = par;
  const SpectralOperator op_d = op.truncated(d);
  ModeVector w(d);
  for (std::size_t i = 0; i < d; ++i) w[i] = 1.0;
  const auto f = TestFunction::bounded_smooth(w, ModeVector::unit(d, 0));
  const GradientDecayReport decay = gradient_decay_check(f, op_d, k.t, x, k.decay_modes, mc);
  lines.push_back({"gradient_decay_bounded", decay.uniformly_bounded,
                   "max ratio to envelope " + std::to_string(decay.max_ratio)});

  const auto sweep = picard_sweep(c, c.initial.project(k.picard_dims));
  for (auto& l : picard_trend_check(sweep)) lines.push_back(l);

  std::ostringstream csv;
  csv << "i,estimate,stderr,bound_ratio\n" << std::setprecision(17);
  for (const auto& r : decay.rows) csv << r.mode << ',' << r.estimate << ',' << r.std_error << ',' << r.bound_ratio << '\n';
  write_file(dir / "report.csv", csv.str());

  bool pass = true;
  json checks = json::array();
  for (const auto& l : lines) {
    pass = pass && l.pass;
    checks.push_back({{"name", l.name}, {"pass", l.pass}, {"detail", l.detail}});
    std::printf("[%s] %s: %s\n", l.pass ? "PASS" : "FAIL", l.name.c_str(), l.detail.c_str());
  }
  json picard = json::array();
  for (const auto& r : sweep) {
    picard.push_back({{"lambda", r.lambda}, {"norm", r.result.norm}, {"norm_std_error", r.result.norm_std_error},
                      {"completed_depth", r.result.completed_depth}, {"budget_exhausted", r.result.budget_exhausted},
                      {"depth_one_bound", r.result.depth_one_bound}});
  }
  write_file(dir / "summary.json", json{{"pass", pass}, {"checks", checks}, {"picard", picard}}.dump(2) + "\n");
  return pass ? kOk : kAcceptanceFailure;
}

void add_common(CLI::App* sub, Overrides& o, bool with_paths = true) {
  sub->add_option("--config", o.config, "study configuration (JSON)")->required()->check(CLI::ExistingFile);
  sub->add_option("--seed", o.seed, "override noise seed");
  if (with_paths) sub->add_option("--paths", o.paths, "override number of Monte Carlo paths M");
  sub->add_option("--out", o.out, "override output directory");
  sub->add_option("--workers", o.workers, "worker threads (0 = hardware concurrency)");
  sub->add_flag("--deterministic", o.deterministic, "merge partial results in unit order");
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"spdelab: exponential-integrator convergence lab for SPDEs with Hoelder drift"};
  app.require_subcommand(1);
  Overrides o;

  auto* simulate = app.add_subcommand("simulate", "simulate paths and optionally export trajectories");
  add_common(simulate, o);
  simulate->add_flag("--trajectories", o.trajectories, "write one CSV per path");
  auto* temporal = app.add_subcommand("temporal-study", "strong error against a fine-step reference");
  add_common(temporal, o);
  auto* spatial = app.add_subcommand("spatial-study", "strong error against a many-mode reference");
  add_common(spatial, o);
  auto* increment = app.add_subcommand("increment-study", "time-increment statistic across step sizes");
  add_common(increment, o);
  auto* kolmo = app.add_subcommand("kolmogorov-check", "O-U, Bismut and Picard checks");
  add_common(kolmo, o, false);
  auto* validate = app.add_subcommand("validate-drift", "empirical Hoelder and boundedness checks");
  add_common(validate, o, false);
  auto* hyp = app.add_subcommand("hypotheses", "print the hypothesis table for a configuration");
  hyp->add_option("--config", o.config, "study configuration (JSON)")->required()->check(CLI::ExistingFile);

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e);
    return code == 0 ? kOk : kConfigInvalid;
  }

  try {
    if (hyp->parsed()) {
      const StudyConfig c = load_config(o.config);
      // verdicts are reported in the table; a failing row is not an error here
      print_hypotheses(c, std::cout);
      return kOk;
    }
    std::string kind;
    if (simulate->parsed()) kind = "simulate";
    if (temporal->parsed()) kind = "temporal";
    if (spatial->parsed()) kind = "spatial";
    if (increment->parsed()) kind = "increment";
    if (kolmo->parsed()) kind = "kolmogorov";
    if (validate->parsed()) kind = "validate";
    const StudyConfig c = resolve(o, kind);
    const double nu = check_hypotheses(c);

    if (kind == "simulate") return run_simulate(c, o.trajectories);
    if (kind == "temporal") return emit_convergence(c, run_temporal(c, nu));
    if (kind == "spatial") return emit_convergence(c, run_spatial(c, nu));
    if (kind == "increment") return emit_convergence(c, increment_as_convergence(run_increment(c), c.study.n, c.study.paths));
    if (kind == "kolmogorov") return run_kolmogorov(c);
    return run_validate(c);
  } catch (const ConfigError& e) {
    std::cerr << "config-invalid: " << e.what() << '\n';
    return kConfigInvalid;
  } catch (const HypothesisViolation& e) {
    std::cerr << "hypothesis-violated: " << e.what() << '\n';
    return kHypothesisViolated;
  } catch (const std::exception& e) {
    std::cerr << "runtime-failure: " << e.what() << '\n';
    return kRuntimeFailure;
  }
}
