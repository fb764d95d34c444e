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

#include <cmath>
#include <cstddef>
#include <cstdint>
#include <ostream>
#include <span>
#include <stdexcept>
#include <string>
#include <vector>

#include "spdelab/drift.hpp"
#include "spdelab/errors.hpp"
#include "spdelab/mode_vector.hpp"
#include "spdelab/noise.hpp"
#include "spdelab/spectral.hpp"

namespace spdelab {

/// Initial value x, either x_i = i^{-q} or an explicit coefficient list.
struct InitialData {
  enum class Profile { kPowerDecay, kExplicit };

  Profile profile = Profile::kPowerDecay;
  double q = 3.0;
  std::vector<double> values;

  static InitialData power_decay(double q) { return {Profile::kPowerDecay, q, {}}; }
  static InitialData explicit_values(std::vector<double> v) { return {Profile::kExplicit, 0.0, std::move(v)}; }

  /// x_n = pi_n x.
  ModeVector project(std::size_t n) const {
    ModeVector x(n);
    for (std::size_t i = 0; i < n; ++i) {
      if (profile == Profile::kPowerDecay) {
        x[i] = std::pow(static_cast<double>(i + 1), -q);
      } else {
        x[i] = i < values.size() ? values[i] : 0.0;
      }
    }
    return x;
  }

  friend bool operator==(const InitialData&, const InitialData&) = default;
};

/// Membership of x in D(A): sum_i lambda_i^2 x_i^2 < inf.
struct DomainReport {
  double partial_sum = 0.0;
  bool in_domain = false;
  /// False when the verdict rests on the truncation alone.
  bool determined = false;
};

inline DomainReport check_initial_domain(const InitialData& x0, const SpectralOperator& op) {
  DomainReport r;
  const ModeVector x = x0.project(op.n_max());
  for (std::size_t i = 0; i < x.size(); ++i) {
    const double ax = op.eigenvalue(i) * x[i];
    r.partial_sum += ax * ax;
  }
  if (x0.profile == InitialData::Profile::kPowerDecay && op.kind() == SpectralOperator::Kind::kPowerLaw) {
    // sum_i i^{2p - 2q} converges iff 2q - 2p > 1
    r.determined = true;
    r.in_domain = 2.0 * x0.q - 2.0 * op.exponent() > 1.0;
  } else if (x0.profile == InitialData::Profile::kExplicit) {
    // finitely many nonzero coordinates
    r.determined = x0.values.size() <= op.n_max();
    r.in_domain = std::isfinite(r.partial_sum);
  } else {
    r.in_domain = std::isfinite(r.partial_sum);
  }
  return r;
}

/// One resolution (level ell, Galerkin dimension n) of the EI scheme.
struct SchemeConfig {
  SpectralOperator op = make_heat_operator(1);
  HolderDriftSpec drift;
  double horizon = 1.0;
  int level = 0;
  std::size_t n = 1;
  InitialData x0;

  double step() const noexcept { return horizon / static_cast<double>(steps()); }
  std::size_t steps() const noexcept { return std::size_t{1} << level; }

  void validate() const {
    if (n == 0 || n > op.n_max()) throw std::invalid_argument("SchemeConfig: n must lie in [1, n_max]");
    if (level < 0 || level > 30) throw std::invalid_argument("SchemeConfig: level must lie in [0, 30]");
    if (!(horizon > 0.0)) throw std::invalid_argument("SchemeConfig: horizon must be positive");
    drift.validate();
  }

  void check_lattice(const NoiseLattice& lattice) const {
    if (level > lattice.fine_level()) throw std::invalid_argument("SchemeConfig: level exceeds lattice fine level");
    if (n > lattice.n_modes()) throw std::invalid_argument("SchemeConfig: n exceeds lattice mode count");
    if (horizon != lattice.horizon()) throw std::invalid_argument("SchemeConfig: horizon differs from lattice horizon");
  }
};

/// Grid values Y_{k delta}, k = 0..2^ell.
struct Trajectory {
  SchemeConfig config;
  std::vector<ModeVector> values;

  double time(std::size_t k) const noexcept { return static_cast<double>(k) * config.step(); }
};

/// Cached per-resolution data: the projected drift and e^{-lambda_i delta}.
class EIStepper {
 public:
  explicit EIStepper(const SchemeConfig& cfg)
      : cfg_(cfg), op_(cfg.op.truncated(cfg.n)), field_(cfg.drift, op_), decay_(cfg.n), drift_buf_(cfg.n) {
    cfg_.validate();
    const double delta = cfg_.step();
    for (std::size_t i = 0; i < cfg_.n; ++i) decay_[i] = std::exp(-op_.eigenvalue(i) * delta);
  }

  const SchemeConfig& config() const noexcept { return cfg_; }
  const DriftField& field() const noexcept { return field_; }
  const SpectralOperator& op() const noexcept { return op_; }

  /// y <- e^{delta A_n}(y + b_{k delta}(y) delta + dW), in place.
  void step(std::size_t k, std::span<double> y, std::span<const double> dw) {
    if (y.size() != cfg_.n || dw.size() != cfg_.n) throw std::invalid_argument("ei_step: length mismatch");
    const double delta = cfg_.step();
    field_.evaluate_into(static_cast<double>(k) * delta, y, drift_buf_);
    for (std::size_t i = 0; i < cfg_.n; ++i) y[i] = decay_[i] * (y[i] + drift_buf_[i] * delta + dw[i]);
  }

 private:
  SchemeConfig cfg_;
  SpectralOperator op_;
  DriftField field_;
  std::vector<double> decay_;
  std::vector<double> drift_buf_;
};

inline ModeVector ei_step(const SchemeConfig& cfg, std::size_t k, const ModeVector& y, const ModeVector& dw) {
  if (y.size() != cfg.n || dw.size() != cfg.n) throw std::invalid_argument("ei_step: length mismatch");
  EIStepper stepper(cfg);
  ModeVector out = y;
  stepper.step(k, out.coeffs(), dw.coeffs());
  return out;
}

/// Sub-step solution inside step k at offset tau in [0, delta]:
///   Y_{t_k + tau} = e^{tau A}(Y_{t_k} + b_{t_k}(Y_{t_k}) tau + (W_{t_k + tau} - W_{t_k})).
/// drift_at_y must be b_{t_k}(y). At tau = delta with the full increment
/// this is the grid step, bit for bit.
inline void interpolate_substep_into(const SpectralOperator& op, std::span<const double> y,
                                     std::span<const double> drift_at_y, double tau,
                                     std::span<const double> partial_noise, std::span<double> out) {
  for (std::size_t i = 0; i < y.size(); ++i) {
    out[i] = std::exp(-op.eigenvalue(i) * tau) * (y[i] + drift_at_y[i] * tau + partial_noise[i]);
  }
}

/// Interpolated value at t = k delta + tau, tau in [0, delta]. The time is
/// passed as (step index, offset) so grid points are hit exactly.
inline ModeVector interpolate_substep(const SchemeConfig& cfg, std::size_t k, const ModeVector& y, double tau,
                                     const ModeVector& partial_noise) {
  cfg.validate();
  if (y.size() != cfg.n || partial_noise.size() != cfg.n) throw std::invalid_argument("interpolate_substep: length mismatch");
  if (!(tau >= 0.0 && tau <= cfg.step())) throw std::invalid_argument("interpolate_substep: t outside the step");
  if (k >= cfg.steps()) throw std::invalid_argument("interpolate_substep: step index out of range");
  const SpectralOperator op = cfg.op.truncated(cfg.n);
  const DriftField field(cfg.drift, op);
  ModeVector drift(cfg.n);
  field.evaluate_into(static_cast<double>(k) * cfg.step(), y.coeffs(), drift.coeffs());
  ModeVector out(cfg.n);
  interpolate_substep_into(op, y.coeffs(), drift.coeffs(), tau, partial_noise.coeffs(), out.coeffs());
  return out;
}

/// All resolutions advanced in a single pass over the fine grid; each one
/// steps at its own grid points with increments accumulated from the same
/// fine increments, left to right.
inline std::vector<Trajectory> simulate_coupled(std::span<const SchemeConfig> configs, const PathIncrements& noise) {
  if (configs.empty()) return {};
  const NoiseLattice& lattice = noise.lattice();
  std::vector<EIStepper> steppers;
  steppers.reserve(configs.size());
  for (const SchemeConfig& cfg : configs) {
    cfg.validate();
    cfg.check_lattice(lattice);
    if (cfg.n > noise.n_modes()) throw std::invalid_argument("simulate_coupled: n exceeds materialized modes");
    if (cfg.horizon != configs.front().horizon) throw std::invalid_argument("simulate_coupled: incompatible horizons");
    steppers.emplace_back(cfg);
  }
  const int fine_level = lattice.fine_level();

  std::vector<Trajectory> out;
  std::vector<std::vector<double>> state;
  std::vector<std::vector<double>> acc;
  std::vector<std::size_t> ratio;
  for (const SchemeConfig& cfg : configs) {
    Trajectory tr{cfg, {}};
    tr.values.reserve(cfg.steps() + 1);
    tr.values.push_back(cfg.x0.project(cfg.n));
    state.push_back(tr.values.back().values());
    acc.emplace_back(cfg.n, 0.0);
    ratio.push_back(std::size_t{1} << (fine_level - cfg.level));
    out.push_back(std::move(tr));
  }

  for (std::size_t k = 0; k < noise.fine_steps(); ++k) {
    const auto fine = noise.fine(k);
    for (std::size_t c = 0; c < configs.size(); ++c) {
      auto& a = acc[c];
      for (std::size_t i = 0; i < a.size(); ++i) a[i] += fine[i];
      if ((k + 1) % ratio[c] != 0) continue;
      const std::size_t j = k / ratio[c];
      steppers[c].step(j, state[c], a);
      std::fill(a.begin(), a.end(), 0.0);
      ModeVector y(state[c]);
      if (!y.all_finite()) throw NonFiniteState(j + 1, "simulate_path");
      out[c].values.push_back(std::move(y));
    }
  }
  return out;
}

inline std::vector<Trajectory> simulate_coupled(std::span<const SchemeConfig> configs, const NoiseLattice& lattice,
                                                std::uint64_t path_id) {
  if (configs.empty()) return {};
  std::size_t n_max = 0;
  for (const SchemeConfig& cfg : configs) n_max = std::max(n_max, cfg.n);
  if (n_max > lattice.n_modes()) throw std::invalid_argument("simulate_coupled: n exceeds lattice mode count");
  return simulate_coupled(configs, PathIncrements(lattice, path_id, n_max));
}

/// Y_{k delta} for k = 0..2^ell on one lattice path.
inline Trajectory simulate_path(const SchemeConfig& cfg, const NoiseLattice& lattice, std::uint64_t path_id) {
  cfg.validate();
  cfg.check_lattice(lattice);
  EIStepper stepper(cfg);
  Trajectory tr{cfg, {}};
  tr.values.reserve(cfg.steps() + 1);
  tr.values.push_back(cfg.x0.project(cfg.n));
  std::vector<double> y = tr.values.back().values();
  std::vector<double> dw(cfg.n);
  for (std::size_t j = 0; j < cfg.steps(); ++j) {
    for (std::size_t i = 0; i < cfg.n; ++i) dw[i] = lattice.coarse_increment(path_id, i, cfg.level, j);
    stepper.step(j, y, dw);
    ModeVector v(y);
    if (!v.all_finite()) throw NonFiniteState(j + 1, "simulate_path");
    tr.values.push_back(std::move(v));
  }
  return tr;
}

/// CSV with columns t, mode_1..mode_n.
inline void write_trajectory_csv(std::ostream& os, const Trajectory& tr) {
  os << "t";
  for (std::size_t i = 0; i < tr.config.n; ++i) os << ",mode_" << (i + 1);
  os << '\n';
  const auto old_precision = os.precision(17);
  for (std::size_t k = 0; k < tr.values.size(); ++k) {
    os << tr.time(k);
    for (double c : tr.values[k]) os << ',' << c;
    os << '\n';
  }
  os.precision(old_precision);
}

}  // namespace spdelab
