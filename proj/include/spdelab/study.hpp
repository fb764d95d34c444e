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

// JSON study configuration, hypothesis gate, and the canned checks that the
// command-line front-end and the acceptance suite share.

#pragma once

#include <cmath>
#include <cstdint>
#include <fstream>
#include <iomanip>
#include <ostream>
#include <sstream>
#include <stdexcept>
#include <string>
#include <vector>

#include "json.hpp"
#include "spdelab/analysis.hpp"
#include "spdelab/drift.hpp"
#include "spdelab/errors.hpp"
#include "spdelab/kolmogorov.hpp"
#include "spdelab/noise.hpp"
#include "spdelab/scheme.hpp"
#include "spdelab/spectral.hpp"

namespace spdelab {

using json = nlohmann::json;

/// Malformed or inconsistent configuration (as opposed to a violated hypothesis).
class ConfigError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

struct OperatorConfig {
  std::string kind = "heat";  // heat | power_law | explicit
  double exponent = 2.0;
  std::size_t n_max = 128;
  std::vector<double> eigenvalues;

  SpectralOperator build() const {
    if (kind == "heat") return make_heat_operator(n_max);
    if (kind == "power_law") return SpectralOperator::power_law(n_max, exponent);
    if (kind == "explicit") return SpectralOperator::from_eigenvalues(eigenvalues);
    throw ConfigError("operator.kind must be heat, power_law or explicit");
  }
  friend bool operator==(const OperatorConfig&, const OperatorConfig&) = default;
};

struct NoiseConfig {
  std::uint64_t seed = 20180724;
  int fine_level = 12;
  std::size_t n_modes = 128;
  friend bool operator==(const NoiseConfig&, const NoiseConfig&) = default;
};

struct KolmogorovConfig {
  double t = 0.5;
  std::vector<std::size_t> decay_modes{1, 4, 16};
  std::size_t ou_draws = 100000;
  std::size_t gradient_draws = 100000;
  std::size_t bismut_dims = 4;
  double fd_step = 1e-3;
  std::vector<double> picard_lambdas{1.0, 10.0, 100.0};
  std::size_t picard_dims = 3;
  int picard_depth = 1;
  double picard_t = 0.0;
  std::size_t picard_outer = 20000;
  std::size_t picard_inner = 200;
  std::size_t picard_nodes = 16;
  friend bool operator==(const KolmogorovConfig&, const KolmogorovConfig&) = default;
};

struct StudySettings {
  std::string kind = "temporal";  // temporal | spatial | increment | kolmogorov | validate | simulate
  double horizon = 1.0;
  std::vector<int> levels;
  std::vector<std::size_t> modes;
  std::size_t n = 64;
  int level = 10;
  std::size_t paths = 200;
  int reference_level = 12;
  std::size_t reference_modes = 128;
  std::vector<double> sample_points{0.1, 0.3, 0.5, 0.7, 0.9};
  std::size_t validation_trials = 10000;
  unsigned workers = 0;
  bool deterministic = true;
  KolmogorovConfig kolmogorov;
  friend bool operator==(const StudySettings&, const StudySettings&) = default;
};

struct StudyConfig {
  OperatorConfig op;
  HolderDriftSpec drift;
  RateParams rate;
  InitialData initial;
  NoiseConfig noise;
  StudySettings study;
  std::string output_dir = "out";

  ParallelOptions parallel() const { return {study.workers, study.deterministic}; }
  friend bool operator==(const StudyConfig&, const StudyConfig&) = default;
};

// ---------------------------------------------------------------------------
// JSON mapping.

namespace detail {

template <class T>
T get_or(const json& j, const char* key, T fallback) {
  if (!j.contains(key)) return fallback;
  try {
    return j.at(key).get<T>();
  } catch (const json::exception& e) {
    throw ConfigError(std::string("field '") + key + "': " + e.what());
  }
}

inline const json& section(const json& root, const char* name) {
  static const json empty = json::object();
  if (!root.contains(name)) return empty;
  if (!root.at(name).is_object()) throw ConfigError(std::string("section '") + name + "' must be an object");
  return root.at(name);
}

inline DriftKind drift_kind_from(const std::string& s) {
  if (s == "diagonal") return DriftKind::kDiagonal;
  if (s == "rank_one") return DriftKind::kRankOne;
  if (s == "smooth_baseline") return DriftKind::kSmoothBaseline;
  throw ConfigError("drift.kind must be diagonal, rank_one or smooth_baseline");
}

inline const char* drift_kind_name(DriftKind k) {
  switch (k) {
    case DriftKind::kDiagonal: return "diagonal";
    case DriftKind::kRankOne: return "rank_one";
    case DriftKind::kSmoothBaseline: return "smooth_baseline";
  }
  return "diagonal";
}

}  // namespace detail

inline json to_json(const StudyConfig& c) {
  json j;
  j["operator"] = {{"kind", c.op.kind}, {"n_max", c.op.n_max}};
  if (c.op.kind == "power_law") j["operator"]["exponent"] = c.op.exponent;
  if (c.op.kind == "explicit") j["operator"]["eigenvalues"] = c.op.eigenvalues;
  j["drift"] = {{"kind", detail::drift_kind_name(c.drift.kind)},
                {"beta", c.drift.beta},
                {"epsilon", c.drift.epsilon},
                {"amplitude", c.drift.amplitude},
                {"time_mod", c.drift.time_mod == TimeModulation::kCosine ? "cosine" : "constant"},
                {"period", c.drift.period},
                {"cap", c.drift.cap}};
  j["rate_params"] = {{"alpha", c.rate.alpha}, {"beta", c.rate.beta}, {"epsilon", c.rate.epsilon}};
  if (c.initial.profile == InitialData::Profile::kPowerDecay) {
    j["initial"] = {{"profile", "power_decay"}, {"q", c.initial.q}};
  } else {
    j["initial"] = {{"profile", "explicit"}, {"values", c.initial.values}};
  }
  j["noise"] = {{"seed", c.noise.seed}, {"L", c.noise.fine_level}, {"n_modes", c.noise.n_modes}};
  const auto& s = c.study;
  const auto& k = s.kolmogorov;
  j["study"] = {{"kind", s.kind},
                {"horizon", s.horizon},
                {"levels", s.levels},
                {"modes", s.modes},
                {"n", s.n},
                {"level", s.level},
                {"M", s.paths},
                {"reference_level", s.reference_level},
                {"reference_modes", s.reference_modes},
                {"sample_points", s.sample_points},
                {"validation_trials", s.validation_trials},
                {"workers", s.workers},
                {"deterministic", s.deterministic},
                {"kolmogorov",
                 {{"t", k.t},
                  {"decay_modes", k.decay_modes},
                  {"ou_draws", k.ou_draws},
                  {"gradient_draws", k.gradient_draws},
                  {"bismut_dims", k.bismut_dims},
                  {"fd_step", k.fd_step},
                  {"picard_lambdas", k.picard_lambdas},
                  {"picard_dims", k.picard_dims},
                  {"picard_depth", k.picard_depth},
                  {"picard_t", k.picard_t},
                  {"picard_outer", k.picard_outer},
                  {"picard_inner", k.picard_inner},
                  {"picard_nodes", k.picard_nodes}}}};
  j["output"] = {{"directory", c.output_dir}};
  return j;
}

/// Parses and structurally validates a configuration. Convergence
/// hypotheses are checked separately by check_hypotheses().
inline StudyConfig config_from_json(const json& root) {
  if (!root.is_object()) throw ConfigError("configuration must be a JSON object");
  StudyConfig c;
  const json& op = detail::section(root, "operator");
  c.op.kind = detail::get_or<std::string>(op, "kind", c.op.kind);
  c.op.n_max = detail::get_or<std::size_t>(op, "n_max", c.op.n_max);
  c.op.exponent = detail::get_or<double>(op, "exponent", c.op.exponent);
  c.op.eigenvalues = detail::get_or<std::vector<double>>(op, "eigenvalues", {});
  if (c.op.kind == "explicit") c.op.n_max = c.op.eigenvalues.size();

  const json& dr = detail::section(root, "drift");
  c.drift.kind = detail::drift_kind_from(detail::get_or<std::string>(dr, "kind", "diagonal"));
  c.drift.beta = detail::get_or<double>(dr, "beta", c.drift.beta);
  c.drift.epsilon = detail::get_or<double>(dr, "epsilon", c.drift.epsilon);
  c.drift.amplitude = detail::get_or<double>(dr, "amplitude", c.drift.amplitude);
  const std::string tm = detail::get_or<std::string>(dr, "time_mod", "constant");
  if (tm != "constant" && tm != "cosine") throw ConfigError("drift.time_mod must be constant or cosine");
  c.drift.time_mod = tm == "cosine" ? TimeModulation::kCosine : TimeModulation::kConstant;
  c.drift.period = detail::get_or<double>(dr, "period", c.drift.period);
  c.drift.cap = detail::get_or<double>(dr, "cap", c.drift.cap);

  const json& rp = detail::section(root, "rate_params");
  c.rate.alpha = detail::get_or<double>(rp, "alpha", c.rate.alpha);
  c.rate.beta = detail::get_or<double>(rp, "beta", c.drift.beta);
  c.rate.epsilon = detail::get_or<double>(rp, "epsilon", c.drift.epsilon);

  const json& in = detail::section(root, "initial");
  const std::string profile = detail::get_or<std::string>(in, "profile", "power_decay");
  if (profile == "power_decay") {
    c.initial = InitialData::power_decay(detail::get_or<double>(in, "q", 3.0));
  } else if (profile == "explicit") {
    c.initial = InitialData::explicit_values(detail::get_or<std::vector<double>>(in, "values", {}));
  } else {
    throw ConfigError("initial.profile must be power_decay or explicit");
  }

  const json& nz = detail::section(root, "noise");
  c.noise.seed = detail::get_or<std::uint64_t>(nz, "seed", c.noise.seed);
  c.noise.fine_level = detail::get_or<int>(nz, "L", c.noise.fine_level);
  c.noise.n_modes = detail::get_or<std::size_t>(nz, "n_modes", c.noise.n_modes);

  const json& st = detail::section(root, "study");
  auto& s = c.study;
  s.kind = detail::get_or<std::string>(st, "kind", s.kind);
  s.horizon = detail::get_or<double>(st, "horizon", s.horizon);
  s.levels = detail::get_or<std::vector<int>>(st, "levels", s.levels);
  s.modes = detail::get_or<std::vector<std::size_t>>(st, "modes", s.modes);
  s.n = detail::get_or<std::size_t>(st, "n", s.n);
  s.level = detail::get_or<int>(st, "level", s.level);
  s.paths = detail::get_or<std::size_t>(st, "M", s.paths);
  s.reference_level = detail::get_or<int>(st, "reference_level", s.reference_level);
  s.reference_modes = detail::get_or<std::size_t>(st, "reference_modes", s.reference_modes);
  s.sample_points = detail::get_or<std::vector<double>>(st, "sample_points", s.sample_points);
  s.validation_trials = detail::get_or<std::size_t>(st, "validation_trials", s.validation_trials);
  s.workers = detail::get_or<unsigned>(st, "workers", s.workers);
  s.deterministic = detail::get_or<bool>(st, "deterministic", s.deterministic);
  const json& kj = detail::section(st, "kolmogorov");
  auto& k = s.kolmogorov;
  k.t = detail::get_or<double>(kj, "t", k.t);
  k.decay_modes = detail::get_or<std::vector<std::size_t>>(kj, "decay_modes", k.decay_modes);
  k.ou_draws = detail::get_or<std::size_t>(kj, "ou_draws", k.ou_draws);
  k.gradient_draws = detail::get_or<std::size_t>(kj, "gradient_draws", k.gradient_draws);
  k.bismut_dims = detail::get_or<std::size_t>(kj, "bismut_dims", k.bismut_dims);
  k.fd_step = detail::get_or<double>(kj, "fd_step", k.fd_step);
  k.picard_lambdas = detail::get_or<std::vector<double>>(kj, "picard_lambdas", k.picard_lambdas);
  k.picard_dims = detail::get_or<std::size_t>(kj, "picard_dims", k.picard_dims);
  k.picard_depth = detail::get_or<int>(kj, "picard_depth", k.picard_depth);
  k.picard_t = detail::get_or<double>(kj, "picard_t", k.picard_t);
  k.picard_outer = detail::get_or<std::size_t>(kj, "picard_outer", k.picard_outer);
  k.picard_inner = detail::get_or<std::size_t>(kj, "picard_inner", k.picard_inner);
  k.picard_nodes = detail::get_or<std::size_t>(kj, "picard_nodes", k.picard_nodes);

  const json& out = detail::section(root, "output");
  c.output_dir = detail::get_or<std::string>(out, "directory", c.output_dir);

  // structural checks
  try {
    c.op.build();
    c.drift.validate();
    c.rate.validate();
  } catch (const std::invalid_argument& e) {
    throw ConfigError(e.what());
  }
  if (c.rate.beta != c.drift.beta || c.rate.epsilon != c.drift.epsilon) {
    throw ConfigError("rate_params.beta/epsilon must equal drift.beta/epsilon");
  }
  if (c.noise.fine_level < 0 || c.noise.fine_level > 24) throw ConfigError("noise.L must lie in [0, 24]");
  if (c.noise.n_modes == 0 || c.noise.n_modes > c.op.n_max) throw ConfigError("noise.n_modes must lie in [1, operator.n_max]");
  if (!(s.horizon > 0.0)) throw ConfigError("study.horizon must be positive");
  if (s.paths < 1) throw ConfigError("study.M must be >= 1");
  const auto& kinds = {"temporal", "spatial", "increment", "kolmogorov", "validate", "simulate"};
  if (std::find(kinds.begin(), kinds.end(), s.kind) == kinds.end()) throw ConfigError("unknown study.kind '" + s.kind + "'");
  return c;
}

/// Checks ladder presence and resolution bounds required by the study kind.
inline void check_study_shape(const StudyConfig& c) {
  const auto& s = c.study;
  if (s.kind == "temporal" || s.kind == "increment") {
    if (s.levels.empty()) throw ConfigError("study.levels: empty ladder");
    for (int l : s.levels) {
      if (l < 0 || l > c.noise.fine_level) throw ConfigError("study.levels: level outside [0, L]");
    }
    if (s.n == 0 || s.n > c.noise.n_modes) throw ConfigError("study.n must lie in [1, noise.n_modes]");
    if (s.kind == "temporal" && s.reference_level > c.noise.fine_level) throw ConfigError("study.reference_level exceeds noise.L");
    if (s.paths < 2) throw ConfigError("study.M must be >= 2");
  } else if (s.kind == "spatial") {
    if (s.modes.empty()) throw ConfigError("study.modes: empty ladder");
    if (s.reference_modes > c.noise.n_modes) throw ConfigError("study.reference_modes exceeds noise.n_modes");
    for (std::size_t n : s.modes) {
      if (n == 0 || n >= s.reference_modes) throw ConfigError("study.modes: entries must lie in [1, reference_modes)");
    }
    if (s.level < 0 || s.level > c.noise.fine_level) throw ConfigError("study.level outside [0, L]");
    if (s.paths < 2) throw ConfigError("study.M must be >= 2");
  } else if (s.kind == "simulate") {
    if (s.n == 0 || s.n > c.noise.n_modes) throw ConfigError("study.n must lie in [1, noise.n_modes]");
    if (s.level < 0 || s.level > c.noise.fine_level) throw ConfigError("study.level outside [0, L]");
  }
}

inline StudyConfig load_config(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw ConfigError("cannot read configuration '" + path + "'");
  json j;
  try {
    in >> j;
  } catch (const json::exception& e) {
    throw ConfigError(std::string("malformed JSON: ") + e.what());
  }
  return config_from_json(j);
}

// ---------------------------------------------------------------------------
// Hypothesis gate.

struct HypothesisLine {
  std::string name;
  std::string value;
  bool holds = false;
  std::string verdict;
};

inline std::vector<HypothesisLine> hypothesis_table(const StudyConfig& c) {
  std::vector<HypothesisLine> rows;
  const SpectralOperator op = c.op.build();
  const TraceReport tr = check_trace_condition(op, c.rate.alpha);
  {
    std::ostringstream v;
    v << "partial sum " << tr.partial_sum << ", tail bound " << tr.tail_bound;
    const bool ok = tr.determined ? tr.converges : std::isfinite(tr.partial_sum);
    rows.push_back({"trace sum lambda_i^-(1-alpha) < inf", v.str(), ok,
                    !tr.determined ? "undetermined beyond truncation" : (ok ? "holds" : "trace condition fails")});
  }
  {
    const double lhs = 2.0 * c.rate.beta / (2.0 - c.rate.epsilon);
    std::ostringstream v;
    v << lhs << " vs " << 1.0 - c.rate.alpha;
    const bool ok = weight_constraint_holds(c.rate);
    rows.push_back({"2*beta/(2-eps) >= 1-alpha", v.str(), ok, ok ? "holds" : "fails"});
  }
  {
    const double nu = nu_formula(c.rate);
    std::ostringstream v;
    v << "nu = " << std::setprecision(6) << nu;
    const bool ok = nu > 0.0 && nu < 0.5;
    rows.push_back({"0 < nu < 1/2", v.str(), ok, ok ? "holds" : (nu <= 0.0 ? "nu <= 0" : "nu >= 1/2")});
  }
  {
    const DomainReport dr = check_initial_domain(c.initial, op);
    std::ostringstream v;
    v << "sum lambda_i^2 x_i^2 (truncated) = " << dr.partial_sum;
    rows.push_back({"x in D(A)", v.str(), dr.in_domain,
                    dr.in_domain ? (dr.determined ? "x in D(A)" : "x in D(A) on truncation") : "x not in D(A)"});
  }
  return rows;
}

/// Throws HypothesisViolation for the first failed hypothesis; returns nu.
inline double check_hypotheses(const StudyConfig& c) {
  const SpectralOperator op = c.op.build();
  const TraceReport tr = check_trace_condition(op, c.rate.alpha);
  if (tr.determined && !tr.converges) {
    throw HypothesisViolation(Hypothesis::kTraceCondition, "trace condition fails for alpha = " + std::to_string(c.rate.alpha));
  }
  const double nu = theoretical_nu(c.rate);
  const DomainReport dr = check_initial_domain(c.initial, op);
  if (!dr.in_domain) throw HypothesisViolation(Hypothesis::kInitialInDomain, "sum lambda_i^2 x_i^2 diverges");
  return nu;
}

inline void print_hypotheses(const StudyConfig& c, std::ostream& os) {
  os << std::left << std::setw(40) << "hypothesis" << std::setw(52) << "value" << "verdict\n";
  for (const auto& r : hypothesis_table(c)) os << std::setw(40) << r.name << std::setw(52) << r.value << r.verdict << '\n';
}

// ---------------------------------------------------------------------------
// Study construction from configuration.

inline SchemeConfig base_scheme(const StudyConfig& c) {
  SchemeConfig s;
  s.op = c.op.build();
  s.drift = c.drift;
  s.horizon = c.study.horizon;
  s.level = c.study.level;
  s.n = c.study.n;
  s.x0 = c.initial;
  return s;
}

inline NoiseLattice make_lattice(const StudyConfig& c) {
  return NoiseLattice(c.noise.seed, c.study.horizon, c.noise.fine_level, c.noise.n_modes);
}

inline ConvergenceReport run_temporal(const StudyConfig& c, double nu) {
  TemporalStudy st{base_scheme(c), c.study.levels, c.study.reference_level, c.study.paths};
  return temporal_convergence(st, make_lattice(c), nu, c.parallel());
}

inline ConvergenceReport run_spatial(const StudyConfig& c, double nu) {
  SpatialStudy st{base_scheme(c), c.study.modes, c.study.reference_modes, c.study.paths};
  return spatial_convergence(st, make_lattice(c), nu, c.parallel());
}

inline IncrementReport run_increment(const StudyConfig& c) {
  IncrementStudy st;
  st.base = base_scheme(c);
  st.levels = c.study.levels;
  st.sample_points = c.study.sample_points;
  st.paths = c.study.paths;
  return increment_statistic(st, make_lattice(c), c.rate.alpha, c.parallel());
}

/// Increment ladder in the ConvergenceReport layout (err2 columns hold S(delta)).
inline ConvergenceReport increment_as_convergence(const IncrementReport& r, std::size_t n, std::size_t paths) {
  ConvergenceReport rep;
  rep.study = "increment";
  rep.fit_against = "delta";
  rep.fit = r.fit;
  rep.nu_theory = 0.0;
  for (const auto& row : r.rows) rep.rows.push_back({static_cast<double>(row.level), row.delta, n, paths, row.statistic, row.std_error});
  rep.flags.push_back({"slope_at_least_alpha_minus_0.1", r.pass,
                       "slope " + std::to_string(r.fit.slope) + " vs " + std::to_string(r.alpha - 0.1)});
  return rep;
}

// ---------------------------------------------------------------------------
// Drift validation suite.

struct DriftValidation {
  std::vector<ValidationReport> reports;
  bool pass() const {
    return std::all_of(reports.begin(), reports.end(), [](const ValidationReport& r) { return r.pass; });
  }
};

inline DriftValidation validate_drift(const HolderDriftSpec& spec, const SpectralOperator& op, std::size_t trials,
                                      std::uint64_t seed, double horizon) {
  DriftValidation v;
  v.reports.push_back(verify_mode_holder(spec, op, trials, seed, horizon));
  v.reports.push_back(verify_time_holder(spec, op, trials, seed + 1, horizon));
  v.reports.push_back(verify_global_holder(spec, op, trials, seed + 2, horizon));
  v.reports.push_back(verify_boundedness(spec, op, trials, seed + 3, horizon));
  return v;
}

// ---------------------------------------------------------------------------
// Kolmogorov checks.

struct CheckLine {
  std::string name;
  bool pass = false;
  std::string detail;
};

/// Sample variance of exact O-U fluctuations per mode against the closed
/// form, and E||Z_t - e^{tA}x||^2 against the truncated variance sum.
inline std::vector<CheckLine> ou_exactness_check(const SpectralOperator& op, const ModeVector& x, double t,
                                                 const std::vector<std::size_t>& modes, std::size_t draws,
                                                 std::uint64_t seed) {
  const std::size_t n = x.size();
  std::vector<MomentAccumulator> per_mode(n);
  MomentAccumulator total;
  NormalStream rng(seed, 0x0u);
  const ModeVector mean = semigroup_apply(op, t, x);
  for (std::size_t k = 0; k < draws; ++k) {
    const OUState z = ou_exact_step(op, OUState{x, 0.0}, t, rng);
    double sq = 0.0;
    for (std::size_t i = 0; i < n; ++i) {
      const double f = z.modes[i] - mean[i];
      per_mode[i].add(f);
      sq += f * f;
    }
    total.add(sq);
  }
  std::vector<CheckLine> out;
  const double m = static_cast<double>(draws);
  for (std::size_t i : modes) {
    if (i == 0 || i > n) throw std::invalid_argument("ou_exactness_check: mode outside H_n");
    const double v = ou_variance(op.eigenvalue(i - 1), t);
    const double sample = per_mode[i - 1].variance();
    const double se = v * std::sqrt(2.0 / (m - 1.0));
    std::ostringstream d;
    d << "mode " << i << ": sample var " << sample << ", exact " << v << ", |diff|/se " << std::abs(sample - v) / se;
    out.push_back({"ou_variance_mode_" + std::to_string(i), std::abs(sample - v) <= 3.0 * se, d.str()});
  }
  double expected = 0.0;
  for (std::size_t i = 0; i < n; ++i) expected += ou_variance(op.eigenvalue(i), t);
  const double se = total.stderr_of_mean();
  std::ostringstream d;
  d << "E||Z-e^{tA}x||^2 " << total.mean() << " vs sum " << expected << ", |diff|/se " << std::abs(total.mean() - expected) / se;
  out.push_back({"ou_total_variance", std::abs(total.mean() - expected) <= 3.0 * se, d.str()});
  return out;
}

/// Bismut gradient against (a) the closed form for coordinate test functions
/// and (b) central finite differences with common random numbers for a
/// bounded smooth test function.
inline std::vector<CheckLine> bismut_check(const SpectralOperator& op, std::size_t d, double t, std::size_t draws,
                                           double fd_step, std::uint64_t seed, const ParallelOptions& par = {}) {
  const SpectralOperator op_d = op.truncated(d);
  ModeVector x(d), w(d), u(d), mixed(d);
  for (std::size_t i = 0; i < d; ++i) {
    x[i] = 0.3 / static_cast<double>(i + 1) * (i % 2 == 0 ? 1.0 : -1.0);
    w[i] = i == 0 ? 1.0 : 0.5;
    u[i] = 1.0 / std::sqrt(static_cast<double>(d));
    mixed[i] = 1.0 / std::sqrt(static_cast<double>(d));
  }
  MonteCarloOptions mc;
  mc.samples = draws;
  mc.seed = seed;
  mc.parallel = par;
  std::vector<CheckLine> out;

  // closed form for linear f: grad_eta P_t f(x) = e^{-lambda_j t} eta_j u
  for (std::size_t j = 0; j < d; ++j) {
    const auto f = TestFunction::coordinate(j, u);
    for (const ModeVector& eta : {ModeVector::unit(d, j), mixed}) {
      const VectorEstimate g = bismut_gradient(f, op_d, t, x, eta, mc);
      const double scale = std::exp(-op_d.eigenvalue(j) * t) * eta[j];
      bool ok = true;
      double worst = 0.0;
      for (std::size_t k = 0; k < d; ++k) {
        const double z = std::abs(g.mean[k] - scale * u[k]) / g.std_error[k];
        worst = std::max(worst, z);
        ok = ok && z <= 3.0;
      }
      std::ostringstream dd;
      dd << "coordinate f j=" << j + 1 << (eta == mixed ? " eta=mixed" : " eta=e_j") << ": max |diff|/se " << worst;
      out.push_back({"bismut_closed_form_j" + std::to_string(j + 1) + (eta == mixed ? "_mixed" : "_unit"), ok, dd.str()});
    }
  }

  const auto f = TestFunction::bounded_smooth(w, u);
  for (const ModeVector& eta : {ModeVector::unit(d, 0), mixed}) {
    const VectorEstimate b = bismut_gradient(f, op_d, t, x, eta, mc);
    const VectorEstimate fd = fd_gradient(f, op_d, t, x, eta, fd_step, mc);
    bool ok = true;
    std::size_t compared = 0;
    double worst = 0.0;
    for (std::size_t k = 0; k < d; ++k) {
      if (!(std::abs(b.mean[k]) > 10.0 * b.std_error[k])) continue;
      ++compared;
      const double rel = std::abs(b.mean[k] - fd.mean[k]) / std::abs(fd.mean[k]);
      worst = std::max(worst, rel);
      ok = ok && rel < 0.05;
    }
    std::ostringstream dd;
    dd << "bounded smooth f" << (eta == mixed ? " eta=mixed" : " eta=e_1") << ": " << compared
       << " coordinates compared, max relative disagreement " << worst;
    out.push_back({std::string("bismut_vs_fd") + (eta == mixed ? "_mixed" : "_e1"), ok && compared > 0, dd.str()});
  }
  return out;
}

struct PicardSweepRow {
  double lambda = 0.0;
  PicardResult result;
};

inline std::vector<PicardSweepRow> picard_sweep(const StudyConfig& c, const ModeVector& x) {
  const auto& k = c.study.kolmogorov;
  std::vector<PicardSweepRow> rows;
  for (double lam : k.picard_lambdas) {
    PicardConfig pc;
    pc.lambda = lam;
    pc.depth = k.picard_depth;
    pc.dims = k.picard_dims;
    pc.horizon = c.study.horizon;
    pc.time_nodes = k.picard_nodes;
    pc.outer_samples = k.picard_outer;
    pc.inner_samples = k.picard_inner;
    pc.fd_step = k.fd_step;
    pc.seed = c.noise.seed;
    rows.push_back({lam, picard_u_lambda(pc, c.drift, c.op.build(), k.picard_t, x)});
  }
  return rows;
}

/// Norms decrease in lambda, and each depth-1 norm sits below its envelope.
inline std::vector<CheckLine> picard_trend_check(const std::vector<PicardSweepRow>& rows) {
  std::vector<CheckLine> out;
  bool monotone = true;
  std::ostringstream md;
  for (std::size_t j = 0; j < rows.size(); ++j) {
    md << "lambda=" << rows[j].lambda << " |u|=" << rows[j].result.norm << "; ";
    if (j > 0 && !(rows[j].result.norm < rows[j - 1].result.norm)) monotone = false;
  }
  out.push_back({"picard_monotone_in_lambda", monotone, md.str()});
  for (const auto& r : rows) {
    const bool depth_one = r.result.completed_depth == 1;
    const bool ok = !depth_one || r.result.norm <= r.result.depth_one_bound + 3.0 * r.result.norm_std_error;
    std::ostringstream d;
    d << "|u| " << r.result.norm << " <= " << r.result.depth_one_bound << " + 3*" << r.result.norm_std_error;
    out.push_back({"picard_bound_lambda_" + std::to_string(static_cast<long long>(r.lambda)), ok, d.str()});
  }
  return out;
}

// ---------------------------------------------------------------------------
// Output writers.

inline void write_convergence_csv(std::ostream& os, const ConvergenceReport& r) {
  os << "resolution,delta,n_modes,m_paths,err2_mean,err2_stderr\n";
  os << std::setprecision(17);
  for (const auto& row : r.rows) {
    os << row.resolution << ',' << row.delta << ',' << row.n_modes << ',' << row.m_paths << ',' << row.err2_mean << ','
       << row.err2_stderr << '\n';
  }
}

inline json convergence_summary(const ConvergenceReport& r) {
  json flags = json::array();
  for (const auto& f : r.flags) flags.push_back({{"name", f.name}, {"pass", f.pass}, {"detail", f.detail}});
  return {{"slope", r.fit.slope},
          {"intercept", r.fit.intercept},
          {"r2", r.fit.r2},
          {"nu_theory", r.nu_theory},
          {"pass", r.pass()},
          {"study", r.study},
          {"fit_against", r.fit_against},
          {"flags", flags},
          {"off_grid_rule", r.off_grid_rule}};
}

/// gnuplot commands for a log-log plot of report.csv.
inline std::string plot_script(const ConvergenceReport& r) {
  std::ostringstream os;
  const bool spatial = r.study == "spatial";
  os << "set datafile separator ','\n"
     << "set logscale xy\n"
     << "set xlabel '" << (spatial ? "n" : "delta") << "'\n"
     << "set ylabel 'err2'\n"
     << "set key top left\n"
     << "set terminal pngcairo size 800,600\n"
     << "set output 'convergence.png'\n"
     << "plot 'report.csv' every ::1 using " << (spatial ? 1 : 2) << ":5:6 with yerrorbars title '" << r.study
     << " (slope " << r.fit.slope << ")'\n";
  return os.str();
}

}  // namespace spdelab
