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

// Acceptance run on the canonical configuration: one PASS/FAIL line per
// criterion, non-zero exit if any fails.

#include <chrono>
#include <cmath>
#include <cstdio>
#include <string>
#include <vector>

#include "spdelab/study.hpp"

using namespace spdelab;

namespace {

struct Line {
  int id;
  std::string name;
  bool pass;
  std::string detail;
};

std::vector<Line> lines;

void report(int id, const std::string& name, bool pass, const std::string& detail) {
  lines.push_back({id, name, pass, detail});
  std::printf("[%s] %d %s: %s\n", pass ? "PASS" : "FAIL", id, name.c_str(), detail.c_str());
  std::fflush(stdout);
}

std::string fmt(const char* f, double a, double b = 0.0, double c = 0.0) {
  char buf[256];
  std::snprintf(buf, sizeof buf, f, a, b, c);
  return buf;
}

std::string rows_text(const ConvergenceReport& r) {
  std::string s;
  for (const auto& row : r.rows) s += fmt("%.6g(%.2g) ", row.err2_mean, row.err2_stderr);
  return s;
}

bool all_pass(const std::vector<CheckLine>& v, std::string& detail) {
  bool ok = true;
  for (const auto& l : v) {
    if (!l.pass) detail += l.name + " [" + l.detail + "] ";
    ok = ok && l.pass;
  }
  if (ok) detail = std::to_string(v.size()) + " sub-checks pass";
  return ok;
}

// Structural suite: returns failures as text, empty when all hold.
std::string structural(const StudyConfig& c) {
  std::string fail;
  auto need = [&](bool ok, const std::string& what) {
    if (!ok) fail += what + "; ";
  };
  const SpectralOperator op = c.op.build();

  // semigroup laws
  ModeVector v(16);
  for (std::size_t i = 0; i < 16; ++i) v[i] = std::sin(1.0 + static_cast<double>(i));
  const SpectralOperator op16 = op.truncated(16);
  bool laws = semigroup_apply(op16, 0.0, v) == v;
  for (double s : {0.01, 0.2}) {
    for (double t : {0.03, 0.5}) {
      const auto a = semigroup_apply(op16, s, semigroup_apply(op16, t, v));
      const auto b = semigroup_apply(op16, s + t, v);
      for (std::size_t i = 0; i < 16; ++i) laws = laws && std::abs(a[i] - b[i]) <= 1e-14 * (1.0 + std::abs(b[i]));
    }
  }
  need(laws, "semigroup laws");

  // smoothing and increment inequalities with their scalar constants
  bool ineq = true;
  for (double gamma : {0.2, 0.45, 0.9}) {
    for (double t : {1e-3, 1e-2, 0.1, 1.0}) {
      ineq = ineq && smoothing_norm(op, gamma, t) <= std::pow(gamma / (std::exp(1.0) * t), gamma) * (1.0 + 1e-12);
      ineq = ineq && increment_norm(op, gamma, t) <= std::pow(t, gamma) * (1.0 + 1e-12);
    }
  }
  need(ineq, "smoothing/increment inequalities");

  // coupling-sum exactness, grid-point equality, determinism, projection
  const NoiseLattice lat = make_lattice(c);
  SchemeConfig base = base_scheme(c);
  bool coupling = true;
  for (std::uint64_t p : {0u, 7u}) {
    for (int level : {0, 4, 9}) {
      for (std::size_t j = 0; j < lat.steps(level); j += std::max<std::size_t>(1, lat.steps(level) / 5)) {
        const std::size_t ratio = std::size_t{1} << (lat.fine_level() - level);
        double s = 0.0;
        for (std::size_t k = j * ratio; k < (j + 1) * ratio; ++k) s += lat.increment(p, 3, k);
        coupling = coupling && lat.coarse_increment(p, 3, level, j) == s;
      }
    }
  }
  need(coupling, "coupling sums");

  std::vector<SchemeConfig> cfgs;
  for (int level : {4, 7, 10}) {
    SchemeConfig s = base;
    s.level = level;
    s.n = 32;
    cfgs.push_back(s);
  }
  const auto coupled = simulate_coupled(cfgs, lat, 3);
  bool bitwise = true;
  for (std::size_t j = 0; j < cfgs.size(); ++j) bitwise = bitwise && simulate_path(cfgs[j], lat, 3).values == coupled[j].values;
  need(bitwise, "coupled equals standalone");
  need(simulate_path(cfgs[1], lat, 5).values == simulate_path(cfgs[1], lat, 5).values, "determinism");

  SchemeConfig small = cfgs[1], large = cfgs[1];
  small.n = 8;
  large.n = 64;
  const auto ts = simulate_path(small, lat, 2), tl = simulate_path(large, lat, 2);
  bool proj = true;
  for (std::size_t k = 0; k < ts.values.size(); ++k) proj = proj && tl.values[k].projected(8) == ts.values[k];
  need(proj, "projection consistency");

  const auto& tr = coupled[0];
  const std::size_t k = 5;
  ModeVector dw = lat.coarse_increments(3, tr.config.level, k, tr.config.n);
  need(interpolate_substep(tr.config, k, tr.values[k], tr.config.step(), dw) == tr.values[k + 1], "grid-point equality");

  const auto dv = validate_drift(c.drift, op, c.study.validation_trials, c.noise.seed, c.study.horizon);
  for (const auto& r : dv.reports) need(r.pass, "drift validator " + r.name);

  // deterministic reduction across worker counts
  TemporalStudy st{base, {3, 4, 5}, 7, 16};
  st.base.n = 16;
  const auto r1 = temporal_convergence(st, lat, 0.08225, {1, true});
  const auto r3 = temporal_convergence(st, lat, 0.08225, {3, true});
  bool same = true;
  for (std::size_t j = 0; j < r1.rows.size(); ++j) same = same && r1.rows[j].err2_mean == r3.rows[j].err2_mean;
  need(same, "worker-count reproducibility");
  return fail;
}

std::string hypothesis_gate(const StudyConfig& canon) {
  std::string fail;
  StudyConfig c = canon;
  c.drift.epsilon = c.rate.epsilon = 0.7;
  try {
    check_hypotheses(c);
    fail += "eps=0.7 accepted; ";
  } catch (const HypothesisViolation& e) {
    if (e.which() != Hypothesis::kNuPositive || std::string(e.what()).find("nu <= 0") == std::string::npos) {
      fail += std::string("eps=0.7 wrong verdict: ") + e.what() + "; ";
    }
  }
  // zero crossing of nu for alpha = beta = 1/2 sits at sqrt(3) - 1
  const double eps0 = std::sqrt(3.0) - 1.0;
  if (!(nu_formula({0.5, 0.5, eps0 - 1e-6}) < 0.0 && nu_formula({0.5, 0.5, eps0 + 1e-6}) > 0.0)) {
    fail += "threshold not at 0.732; ";
  }
  if (!(nu_formula({0.5, 0.5, 0.7}) <= 0.0)) fail += "eps=0.7 positive at alpha=1/2; ";
  c = canon;
  c.initial.q = 2.0;
  try {
    check_hypotheses(c);
    fail += "q=2 accepted; ";
  } catch (const HypothesisViolation& e) {
    if (e.which() != Hypothesis::kInitialInDomain) fail += "q=2 wrong verdict; ";
  }
  c = canon;
  c.rate.alpha = 0.5;
  try {
    check_hypotheses(c);
    fail += "alpha=0.5 accepted; ";
  } catch (const HypothesisViolation& e) {
    if (e.which() != Hypothesis::kTraceCondition) fail += "alpha=0.5 wrong verdict; ";
  }
  return fail;
}

}  // namespace

int main() {
  const auto start = std::chrono::steady_clock::now();
  StudyConfig c;
  try {
    c = load_config(std::string(SPDELAB_SOURCE_DIR) + "/configs/acceptance.json");
  } catch (const std::exception& e) {
    std::printf("[FAIL] 0 configuration: %s\n", e.what());
    return 1;
  }
  const double nu = check_hypotheses(c);
  std::printf("canonical nu = %.5f, seed = %llu\n", nu, static_cast<unsigned long long>(c.noise.seed));

  {
    StudyConfig t = c;
    t.study.n = 64;
    t.study.levels = {4, 5, 6, 7, 8, 9};
    t.study.reference_level = 12;
    t.study.paths = 200;
    const auto r = run_temporal(t, nu);
    report(1, "temporal rate", r.pass(),
           fmt("slope %.4f (gate %.4f), R2 %.4f; err2 ", r.fit.slope, nu - 0.05, r.fit.r2) + rows_text(r));
  }
  {
    StudyConfig s = c;
    s.study.level = 10;
    s.study.modes = {4, 8, 16, 32};
    s.study.reference_modes = 128;
    s.study.paths = 200;
    const auto r = run_spatial(s, nu);
    report(2, "spatial rate", r.pass(), fmt("slope vs log lambda_n %.4f (gate %.4f); err2 ", r.fit.slope, -(nu - 0.05)) + rows_text(r));
  }
  {
    StudyConfig s = c;
    s.study.levels = {5, 6, 7, 8, 9};
    s.study.paths = 200;
    const auto r = run_increment(s);
    report(3, "increment bound", r.pass, fmt("slope %.4f (gate %.4f), R2 %.4f", r.fit.slope, c.rate.alpha - 0.1, r.fit.r2));
  }
  {
    const SpectralOperator op = c.op.build().truncated(16);
    const auto v = ou_exactness_check(op, c.initial.project(16), 0.5, {1, 4, 16}, 100000, c.noise.seed);
    std::string d;
    const bool ok = all_pass(v, d);
    report(4, "O-U exactness", ok, d + " (" + v.back().detail + ")");
  }
  {
    const auto v = bismut_check(c.op.build(), 4, 0.5, 100000, 1e-3, c.noise.seed + 1, c.parallel());
    std::string d;
    const bool ok = all_pass(v, d);
    report(5, "Bismut estimator", ok, d + " (" + v[v.size() - 2].detail + ")");
  }
  {
    StudyConfig p = c;
    p.study.kolmogorov.picard_depth = 1;
    p.study.kolmogorov.picard_dims = 3;
    p.study.kolmogorov.picard_lambdas = {1.0, 10.0, 100.0};
    const auto sweep = picard_sweep(p, c.initial.project(3));
    const auto v = picard_trend_check(sweep);
    std::string d;
    const bool ok = all_pass(v, d);
    report(6, "Picard smallness trend", ok, d + " (" + v.front().detail + ")");
  }
  {
    const std::string s = structural(c);
    const std::string g = hypothesis_gate(c);
    report(7, "structural suites and hypothesis gate", s.empty() && g.empty(),
           s.empty() && g.empty() ? "all structural checks pass; eps=0.7, q=2, alpha=0.5 rejected" : s + g);
  }

  const double secs = std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
  int failed = 0;
  for (const auto& l : lines) failed += l.pass ? 0 : 1;
  std::printf("%zu criteria, %d failed, %.1f s\n", lines.size(), failed, secs);
  return failed == 0 ? 0 : 1;
}
