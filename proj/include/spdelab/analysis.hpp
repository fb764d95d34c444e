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

#pragma once

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <cstdint>
#include <limits>
#include <span>
#include <stdexcept>
#include <string>
#include <utility>
#include <vector>

#include "spdelab/errors.hpp"
#include "spdelab/parallel.hpp"
#include "spdelab/scheme.hpp"

namespace spdelab {

// ---------------------------------------------------------------------------
// Theoretical rate.

struct RateParams {
  double alpha = 0.45;
  double beta = 0.5;
  double epsilon = 0.9;

  void validate() const {
    if (!(alpha > 0.0 && alpha < 1.0)) throw std::invalid_argument("RateParams: alpha must lie in (0,1)");
    if (!(epsilon > 0.0 && epsilon < 1.0)) throw std::invalid_argument("RateParams: epsilon must lie in (0,1)");
    if (!(beta > 0.0)) throw std::invalid_argument("RateParams: beta must be positive");
  }

  friend bool operator==(const RateParams&, const RateParams&) = default;
};

/// nu = (eps + min(2 beta, alpha eps^2)) / 2 + alpha - 1, without hypothesis checks.
inline double nu_formula(const RateParams& p) noexcept {
  return (p.epsilon + std::min(2.0 * p.beta, p.alpha * p.epsilon * p.epsilon)) / 2.0 + p.alpha - 1.0;
}

/// 2 beta / (2 - eps) >= 1 - alpha.
inline bool weight_constraint_holds(const RateParams& p) noexcept {
  return 2.0 * p.beta / (2.0 - p.epsilon) >= 1.0 - p.alpha;
}

/// Strong-rate exponent nu; throws HypothesisViolation naming the failed
/// hypothesis when nu is not in (0, 1/2) or the weight constraint fails.
inline double theoretical_nu(const RateParams& p) {
  p.validate();
  if (!weight_constraint_holds(p)) {
    throw HypothesisViolation(Hypothesis::kWeightConstraint,
                              "2*beta/(2-eps) = " + std::to_string(2.0 * p.beta / (2.0 - p.epsilon)) +
                                  " < 1-alpha = " + std::to_string(1.0 - p.alpha));
  }
  const double nu = nu_formula(p);
  if (!(nu > 0.0)) throw HypothesisViolation(Hypothesis::kNuPositive, "nu = " + std::to_string(nu));
  if (!(nu < 0.5)) throw HypothesisViolation(Hypothesis::kNuBelowHalf, "nu = " + std::to_string(nu));
  return nu;
}

// ---------------------------------------------------------------------------
// Strong error functional int_0^T E||X_t - Y_t||^2 dt, per path.

/// Left Riemann sum over the reference grid of ||ref(t) - approx(t)||^2.
/// Off-grid values of approx use the closed-form sub-step solution driven by
/// the same path increments; modes beyond approx.n count as zeros.
inline double path_strong_error(const Trajectory& ref, const Trajectory& approx, const PathIncrements& noise) {
  const SchemeConfig& rc = ref.config;
  const SchemeConfig& ac = approx.config;
  if (rc.horizon != ac.horizon) throw std::invalid_argument("strong_error: horizons differ");
  if (ac.level > rc.level) throw std::invalid_argument("strong_error: reference step must divide approximation step");
  if (ac.n > rc.n) throw std::invalid_argument("strong_error: approximation has more modes than reference");
  if (ref.values.size() != rc.steps() + 1 || approx.values.size() != ac.steps() + 1) {
    throw std::invalid_argument("strong_error: trajectory length does not match its grid");
  }
  const NoiseLattice& lattice = noise.lattice();
  if (rc.level > lattice.fine_level() || ac.n > noise.n_modes() || rc.horizon != lattice.horizon()) {
    throw std::invalid_argument("strong_error: trajectories incompatible with lattice");
  }

  const std::size_t ratio = std::size_t{1} << (rc.level - ac.level);
  const std::size_t fine_per_ref = std::size_t{1} << (lattice.fine_level() - rc.level);
  const double dref = rc.step();
  const std::size_t n = ac.n;
  const SpectralOperator op = ac.op.truncated(n);
  const DriftField field(ac.drift, op);

  // e^{-lambda_i m dref}, m = 0..ratio-1
  std::vector<double> decay(ratio * n);
  for (std::size_t m = 0; m < ratio; ++m) {
    const double tau = static_cast<double>(m) * dref;
    for (std::size_t i = 0; i < n; ++i) decay[m * n + i] = std::exp(-op.eigenvalue(i) * tau);
  }

  std::vector<double> drift(n), partial(n), value(n);
  double total = 0.0;
  for (std::size_t j = 0; j < ac.steps(); ++j) {
    const auto y = approx.values[j].coeffs();
    field.evaluate_into(static_cast<double>(j) * ac.step(), y, drift);
    std::fill(partial.begin(), partial.end(), 0.0);
    for (std::size_t m = 0; m < ratio; ++m) {
      const std::size_t k = j * ratio + m;
      if (m == 0) {
        total += padded_squared_distance(ref.values[k].coeffs(), y);
      } else {
        const double tau = static_cast<double>(m) * dref;
        for (std::size_t i = 0; i < n; ++i) value[i] = decay[m * n + i] * (y[i] + drift[i] * tau + partial[i]);
        total += padded_squared_distance(ref.values[k].coeffs(), value);
      }
      for (std::size_t f = k * fine_per_ref; f < (k + 1) * fine_per_ref; ++f) {
        const auto inc = noise.fine(f);
        for (std::size_t i = 0; i < n; ++i) partial[i] += inc[i];
      }
    }
  }
  return total * dref;
}

inline double path_strong_error(const Trajectory& ref, const Trajectory& approx, const NoiseLattice& lattice,
                                std::uint64_t path_id) {
  return path_strong_error(ref, approx, PathIncrements(lattice, path_id, approx.config.n));
}

struct ErrorEstimate {
  double mean = 0.0;
  double std_error = 0.0;
};

inline ErrorEstimate estimate_from(const MomentAccumulator& acc) { return {acc.mean(), acc.stderr_of_mean()}; }

// ---------------------------------------------------------------------------
// Rate fitting.

struct RateFit {
  double slope = 0.0;
  double intercept = 0.0;
  double r2 = 0.0;
};

/// Ordinary least squares of log(err2) on log(h).
inline RateFit fit_rate(std::span<const std::pair<double, double>> points) {
  if (points.size() < 2) throw std::invalid_argument("fit_rate: need at least two points");
  double sx = 0.0, sy = 0.0;
  std::vector<double> lx, ly;
  for (const auto& [h, e] : points) {
    if (!(h > 0.0) || !(e > 0.0)) throw std::invalid_argument("fit_rate: resolutions and errors must be positive");
    lx.push_back(std::log(h));
    ly.push_back(std::log(e));
    sx += lx.back();
    sy += ly.back();
  }
  const double m = static_cast<double>(points.size());
  const double mx = sx / m, my = sy / m;
  double sxx = 0.0, sxy = 0.0, syy = 0.0;
  for (std::size_t i = 0; i < lx.size(); ++i) {
    sxx += (lx[i] - mx) * (lx[i] - mx);
    sxy += (lx[i] - mx) * (ly[i] - my);
    syy += (ly[i] - my) * (ly[i] - my);
  }
  if (sxx == 0.0) throw std::invalid_argument("fit_rate: resolutions must not all coincide");
  RateFit f;
  f.slope = sxy / sxx;
  f.intercept = my - f.slope * mx;
  f.r2 = syy == 0.0 ? 1.0 : (sxy * sxy) / (sxx * syy);
  return f;
}

// ---------------------------------------------------------------------------
// Convergence studies.

struct ConvergenceRow {
  /// Level ell for temporal ladders, Galerkin dimension for spatial ones.
  double resolution = 0.0;
  double delta = 0.0;
  std::size_t n_modes = 0;
  std::size_t m_paths = 0;
  double err2_mean = 0.0;
  double err2_stderr = 0.0;
};

struct PassFlag {
  std::string name;
  bool pass = false;
  std::string detail;
};

struct ConvergenceReport {
  std::string study;
  std::vector<ConvergenceRow> rows;
  /// Abscissa used for the fit (delta, lambda_n, ...).
  std::string fit_against;
  RateFit fit;
  double nu_theory = 0.0;
  std::vector<PassFlag> flags;
  std::string off_grid_rule =
      "off-grid values use the closed-form sub-step solution e^{(t-t_d)A}(Y_{t_d} + b(Y_{t_d})(t-t_d) + W_t - W_{t_d})";

  bool pass() const noexcept {
    return std::all_of(flags.begin(), flags.end(), [](const PassFlag& f) { return f.pass; });
  }
};

/// Adjacent rows decrease by more than `sigmas` combined standard errors.
inline PassFlag strictly_decreasing(std::span<const ConvergenceRow> rows, double sigmas) {
  PassFlag f{"err2_strictly_decreasing", true, ""};
  for (std::size_t j = 0; j + 1 < rows.size(); ++j) {
    const double gap = rows[j].err2_mean - rows[j + 1].err2_mean;
    const double se = std::hypot(rows[j].err2_stderr, rows[j + 1].err2_stderr);
    if (!(gap > sigmas * se)) {
      f.pass = false;
      f.detail += "rows " + std::to_string(j) + "," + std::to_string(j + 1) + " gap " + std::to_string(gap) +
                  " <= " + std::to_string(sigmas) + "*" + std::to_string(se) + "; ";
    }
  }
  return f;
}

struct TemporalStudy {
  SchemeConfig base;  // n and operator; level is ignored
  std::vector<int> levels;
  int reference_level = 12;
  std::size_t paths = 200;
};

/// Fixed n, ladder of step sizes against a reference at the finest step.
inline ConvergenceReport temporal_convergence(const TemporalStudy& study, const NoiseLattice& lattice, double nu_theory,
                                              const ParallelOptions& par = {}) {
  if (study.levels.empty()) throw std::invalid_argument("temporal study: empty ladder");
  std::vector<int> levels = study.levels;
  std::sort(levels.begin(), levels.end());
  if (levels.back() >= study.reference_level) throw std::invalid_argument("temporal study: ladder must be coarser than reference");
  if (study.paths < 2) throw std::invalid_argument("temporal study: need at least two paths");

  std::vector<SchemeConfig> configs;
  SchemeConfig ref = study.base;
  ref.level = study.reference_level;
  configs.push_back(ref);
  for (int l : levels) {
    SchemeConfig c = study.base;
    c.level = l;
    configs.push_back(c);
  }
  for (const auto& c : configs) c.check_lattice(lattice);

  const AccumulatorBank bank = reduce_units<AccumulatorBank>(study.paths, par, [&](std::uint64_t path) {
    const PathIncrements noise(lattice, path, study.base.n);
    const auto trajs = simulate_coupled(configs, noise);
    AccumulatorBank b(levels.size());
    for (std::size_t j = 0; j < levels.size(); ++j) b.items[j].add(path_strong_error(trajs[0], trajs[j + 1], noise));
    return b;
  });

  ConvergenceReport rep;
  rep.study = "temporal";
  rep.fit_against = "delta";
  rep.nu_theory = nu_theory;
  std::vector<std::pair<double, double>> pts;
  for (std::size_t j = 0; j < levels.size(); ++j) {
    ConvergenceRow row{static_cast<double>(levels[j]), configs[j + 1].step(), study.base.n, study.paths,
                       bank.items[j].mean(), bank.items[j].stderr_of_mean()};
    rep.rows.push_back(row);
    pts.emplace_back(row.delta, row.err2_mean);
  }
  rep.fit = fit_rate(pts);
  rep.flags.push_back(strictly_decreasing(rep.rows, 2.0));
  rep.flags.push_back({"slope_at_least_nu_minus_0.05", rep.fit.slope >= nu_theory - 0.05,
                       "slope " + std::to_string(rep.fit.slope) + " vs " + std::to_string(nu_theory - 0.05)});
  rep.flags.push_back({"r2_at_least_0.9", rep.fit.r2 >= 0.9, "R2 " + std::to_string(rep.fit.r2)});
  return rep;
}

struct SpatialStudy {
  SchemeConfig base;  // level fixed at the reference step
  std::vector<std::size_t> modes;
  std::size_t reference_modes = 128;
  std::size_t paths = 200;
};

/// Fixed step, ladder of Galerkin dimensions against a reference dimension.
/// The fit is log err2 against log lambda_n.
inline ConvergenceReport spatial_convergence(const SpatialStudy& study, const NoiseLattice& lattice, double nu_theory,
                                             const ParallelOptions& par = {}) {
  if (study.modes.empty()) throw std::invalid_argument("spatial study: empty ladder");
  std::vector<std::size_t> modes = study.modes;
  std::sort(modes.begin(), modes.end());
  if (modes.back() >= study.reference_modes) throw std::invalid_argument("spatial study: ladder must be below reference modes");
  if (study.paths < 2) throw std::invalid_argument("spatial study: need at least two paths");

  std::vector<SchemeConfig> configs;
  SchemeConfig ref = study.base;
  ref.n = study.reference_modes;
  configs.push_back(ref);
  for (std::size_t n : modes) {
    SchemeConfig c = study.base;
    c.n = n;
    configs.push_back(c);
  }
  for (const auto& c : configs) {
    c.validate();
    c.check_lattice(lattice);
  }

  const AccumulatorBank bank = reduce_units<AccumulatorBank>(study.paths, par, [&](std::uint64_t path) {
    const PathIncrements noise(lattice, path, study.reference_modes);
    const auto trajs = simulate_coupled(configs, noise);
    AccumulatorBank b(modes.size());
    for (std::size_t j = 0; j < modes.size(); ++j) b.items[j].add(path_strong_error(trajs[0], trajs[j + 1], noise));
    return b;
  });

  ConvergenceReport rep;
  rep.study = "spatial";
  rep.fit_against = "lambda_n";
  rep.nu_theory = nu_theory;
  std::vector<std::pair<double, double>> pts;
  for (std::size_t j = 0; j < modes.size(); ++j) {
    ConvergenceRow row{static_cast<double>(modes[j]), study.base.step(), modes[j], study.paths, bank.items[j].mean(),
                       bank.items[j].stderr_of_mean()};
    rep.rows.push_back(row);
    pts.emplace_back(study.base.op.eigenvalue(modes[j] - 1), row.err2_mean);
  }
  rep.fit = fit_rate(pts);
  PassFlag dec{"err2_decreasing_in_n", true, ""};
  for (std::size_t j = 0; j + 1 < rep.rows.size(); ++j) {
    if (!(rep.rows[j + 1].err2_mean < rep.rows[j].err2_mean)) {
      dec.pass = false;
      dec.detail += "rows " + std::to_string(j) + "," + std::to_string(j + 1) + "; ";
    }
  }
  rep.flags.push_back(dec);
  rep.flags.push_back({"slope_at_most_minus_nu_plus_0.05", rep.fit.slope <= -(nu_theory - 0.05),
                       "slope " + std::to_string(rep.fit.slope) + " vs " + std::to_string(-(nu_theory - 0.05))});
  return rep;
}

// ---------------------------------------------------------------------------
// Sub-step increment statistic S(delta) = max_t E||Y_t - Y_{t_delta}||^2.

struct IncrementStudy {
  SchemeConfig base;
  std::vector<int> levels;
  /// Each point p in [0, T) selects the step containing p at every level.
  std::vector<double> sample_points{0.1, 0.3, 0.5, 0.7, 0.9};
  /// Sampled time is t_delta + offset_fraction * delta. Must be a multiple of
  /// the lattice fine step at every level; 0 samples the grid itself.
  double offset_fraction = 0.5;
  std::size_t paths = 200;
};

struct IncrementRow {
  int level = 0;
  double delta = 0.0;
  double statistic = 0.0;
  double std_error = 0.0;
  /// Time at which the maximum was attained.
  double argmax_t = 0.0;
};

struct IncrementReport {
  std::vector<IncrementRow> rows;
  RateFit fit;
  double alpha = 0.0;
  bool pass = false;
};

inline IncrementReport increment_statistic(const IncrementStudy& study, const NoiseLattice& lattice, double alpha,
                                           const ParallelOptions& par = {}) {
  if (study.levels.empty()) throw std::invalid_argument("increment study: empty ladder");
  if (study.sample_points.empty()) throw std::invalid_argument("increment study: no sample points");
  if (!(study.offset_fraction >= 0.0 && study.offset_fraction < 1.0)) {
    throw std::invalid_argument("increment study: offset fraction must lie in [0,1)");
  }
  std::vector<int> levels = study.levels;
  std::sort(levels.begin(), levels.end());
  const double T = study.base.horizon;
  std::vector<SchemeConfig> configs;
  struct Probe {
    std::size_t step;
    std::size_t fine_count;
  };
  std::vector<std::vector<Probe>> probes;
  for (int l : levels) {
    SchemeConfig c = study.base;
    c.level = l;
    c.validate();
    c.check_lattice(lattice);
    const std::size_t fine_per_step = std::size_t{1} << (lattice.fine_level() - l);
    const double fine_offset = study.offset_fraction * static_cast<double>(fine_per_step);
    if (fine_offset != std::floor(fine_offset)) {
      throw std::invalid_argument("increment study: offset is not on the lattice fine grid at level " + std::to_string(l));
    }
    std::vector<Probe> ps;
    for (double p : study.sample_points) {
      if (!(p >= 0.0 && p < T)) throw std::invalid_argument("increment study: sample point outside [0,T)");
      ps.push_back({static_cast<std::size_t>(std::floor(p / c.step())), static_cast<std::size_t>(fine_offset)});
    }
    configs.push_back(c);
    probes.push_back(std::move(ps));
  }
  const std::size_t n = study.base.n;
  const std::size_t n_points = study.sample_points.size();

  const AccumulatorBank bank = reduce_units<AccumulatorBank>(study.paths, par, [&](std::uint64_t path) {
    const PathIncrements noise(lattice, path, n);
    const auto trajs = simulate_coupled(configs, noise);
    AccumulatorBank b(levels.size() * n_points);
    std::vector<double> drift(n), partial(n), value(n);
    for (std::size_t l = 0; l < levels.size(); ++l) {
      const SchemeConfig& c = configs[l];
      const SpectralOperator op = c.op.truncated(n);
      const DriftField field(c.drift, op);
      const std::size_t fine_per_step = std::size_t{1} << (lattice.fine_level() - c.level);
      for (std::size_t p = 0; p < n_points; ++p) {
        const Probe pr = probes[l][p];
        const auto y = trajs[l].values[pr.step].coeffs();
        field.evaluate_into(static_cast<double>(pr.step) * c.step(), y, drift);
        std::fill(partial.begin(), partial.end(), 0.0);
        for (std::size_t f = 0; f < pr.fine_count; ++f) {
          const auto inc = noise.fine(pr.step * fine_per_step + f);
          for (std::size_t i = 0; i < n; ++i) partial[i] += inc[i];
        }
        const double tau = static_cast<double>(pr.fine_count) * lattice.fine_step();
        interpolate_substep_into(op, y, drift, tau, partial, value);
        b.items[l * n_points + p].add(padded_squared_distance(value, y));
      }
    }
    return b;
  });

  IncrementReport rep;
  rep.alpha = alpha;
  std::vector<std::pair<double, double>> pts;
  for (std::size_t l = 0; l < levels.size(); ++l) {
    IncrementRow row{levels[l], configs[l].step(), -1.0, 0.0, 0.0};
    for (std::size_t p = 0; p < n_points; ++p) {
      const auto& acc = bank.items[l * n_points + p];
      if (acc.mean() > row.statistic) {
        row.statistic = acc.mean();
        row.std_error = acc.stderr_of_mean();
        row.argmax_t = static_cast<double>(probes[l][p].step) * configs[l].step() +
                       static_cast<double>(probes[l][p].fine_count) * lattice.fine_step();
      }
    }
    rep.rows.push_back(row);
    pts.emplace_back(row.delta, row.statistic);
  }
  const bool positive = std::all_of(pts.begin(), pts.end(), [](const auto& q) { return q.second > 0.0; });
  if (positive && pts.size() >= 2) {
    rep.fit = fit_rate(pts);
    rep.pass = rep.fit.slope >= alpha - 0.1;
  }
  return rep;
}

}  // namespace spdelab
