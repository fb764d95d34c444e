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
#include <cstdint>
#include <numbers>
#include <random>
#include <span>
#include <stdexcept>
#include <string>
#include <vector>

#include "spdelab/mode_vector.hpp"
#include "spdelab/spectral.hpp"

namespace spdelab {

enum class DriftKind { kDiagonal, kRankOne, kSmoothBaseline };
enum class TimeModulation { kConstant, kCosine };

/// Parametric drift family with analytic Hoelder constants.
///
///   diagonal:         b_t(x) = a h(t) sum_i lambda_i^{-beta} psi(x_i) e_i
///   rank_one:         b_t(x) = a h(t) (sum_i lambda_i^{-beta} psi(x_i)) e_1
///   smooth_baseline:  b_t(x) = a h(t) sum_i lambda_i^{-beta} tanh(x_i) e_i
///
/// with psi(u) = sign(u) min(|u|^eps, cap), h = 1 or h(t) = cos(2 pi t / period).
struct HolderDriftSpec {
  DriftKind kind = DriftKind::kDiagonal;
  double beta = 0.5;
  double epsilon = 0.9;
  double amplitude = 1.0;
  TimeModulation time_mod = TimeModulation::kConstant;
  double period = 2.0 * std::numbers::pi;
  double cap = 1.0;

  /// amplitude = 0 is accepted as the degenerate zero drift.
  void validate() const {
    if (!(epsilon > 0.0 && epsilon < 1.0)) throw std::invalid_argument("HolderDriftSpec: epsilon must lie in (0,1)");
    if (!(beta > 0.0)) throw std::invalid_argument("HolderDriftSpec: beta must be positive");
    if (!(amplitude >= 0.0) || !std::isfinite(amplitude)) throw std::invalid_argument("HolderDriftSpec: amplitude must be nonnegative");
    if (!(cap > 0.0)) throw std::invalid_argument("HolderDriftSpec: cap must be positive");
    if (time_mod == TimeModulation::kCosine && !(period > 0.0)) {
      throw std::invalid_argument("HolderDriftSpec: cosine period must be positive");
    }
  }

  friend bool operator==(const HolderDriftSpec&, const HolderDriftSpec&) = default;
};

inline double psi(double u, double epsilon, double cap) noexcept {
  if (u == 0.0) return 0.0;
  const double mag = std::min(std::pow(std::abs(u), epsilon), cap);
  return u > 0.0 ? mag : -mag;
}

/// Hoelder constant of psi: |psi(u) - psi(v)| <= 2^{1-eps} |u - v|^eps.
/// Also valid for tanh (1-Lipschitz, bounded by 1).
inline double psi_holder_constant(double epsilon) noexcept { return std::pow(2.0, 1.0 - epsilon); }

inline double time_factor(const HolderDriftSpec& spec, double t) noexcept {
  if (spec.time_mod == TimeModulation::kConstant) return 1.0;
  return std::cos(2.0 * std::numbers::pi * t / spec.period);
}

inline double time_factor_sup(const HolderDriftSpec&) noexcept { return 1.0; }

inline double time_factor_lipschitz(const HolderDriftSpec& spec) noexcept {
  return spec.time_mod == TimeModulation::kConstant ? 0.0 : 2.0 * std::numbers::pi / spec.period;
}

/// A drift spec bound to an operator, with the lambda_i^{-beta} weights cached.
class DriftField {
 public:
  DriftField(HolderDriftSpec spec, const SpectralOperator& op) : spec_(spec) {
    spec_.validate();
    weights_.resize(op.n_max());
    for (std::size_t i = 0; i < op.n_max(); ++i) weights_[i] = std::pow(op.eigenvalue(i), -spec_.beta);
  }

  const HolderDriftSpec& spec() const noexcept { return spec_; }
  std::size_t capacity() const noexcept { return weights_.size(); }
  std::span<const double> weights() const noexcept { return weights_; }

  /// Writes b_t(x) into out (same length as x).
  void evaluate_into(double t, std::span<const double> x, std::span<double> out) const {
    if (x.size() > weights_.size()) throw std::invalid_argument("drift_eval: vector exceeds operator capacity");
    if (out.size() != x.size()) throw std::invalid_argument("drift_eval: output length mismatch");
    const double scale = spec_.amplitude * time_factor(spec_, t);
    switch (spec_.kind) {
      case DriftKind::kDiagonal:
        for (std::size_t i = 0; i < x.size(); ++i) out[i] = scale * weights_[i] * psi(x[i], spec_.epsilon, spec_.cap);
        break;
      case DriftKind::kSmoothBaseline:
        for (std::size_t i = 0; i < x.size(); ++i) out[i] = scale * weights_[i] * std::tanh(x[i]);
        break;
      case DriftKind::kRankOne: {
        double s = 0.0;
        for (std::size_t i = 0; i < x.size(); ++i) s += weights_[i] * psi(x[i], spec_.epsilon, spec_.cap);
        std::fill(out.begin(), out.end(), 0.0);
        if (!out.empty()) out[0] = scale * s;
        break;
      }
    }
  }

  ModeVector evaluate(double t, const ModeVector& x) const {
    ModeVector out(x.size());
    evaluate_into(t, x.coeffs(), out.coeffs());
    return out;
  }

  /// sup_{t,x} ||b_t(x)|| over the cached modes.
  double bound() const noexcept {
    const double level = spec_.kind == DriftKind::kSmoothBaseline ? 1.0 : spec_.cap;
    const double scale = spec_.amplitude * time_factor_sup(spec_) * level;
    if (spec_.kind == DriftKind::kRankOne) {
      double s = 0.0;
      for (double w : weights_) s += w;
      return scale * s;
    }
    double s = 0.0;
    for (double w : weights_) s += w * w;
    return scale * std::sqrt(s);
  }

  /// c in ||b_t(x) - b_t(x + (y_i - x_i) e_i)|| <= c lambda_i^{-beta} |x_i - y_i|^eps.
  double mode_holder_constant() const noexcept {
    return spec_.amplitude * time_factor_sup(spec_) * psi_holder_constant(spec_.epsilon);
  }

  /// c_0 in ||b_t(x) - b_t(y)|| <= c_0 ||x - y||^eps, from Hoelder's inequality
  /// with exponents 2/eps and 2/(2-eps) applied to the componentwise bound.
  double global_holder_constant() const noexcept {
    const double q = 2.0 / (2.0 - spec_.epsilon);
    double s = 0.0;
    for (double w : weights_) s += std::pow(w, q);
    return mode_holder_constant() * std::pow(s, 1.0 / q);
  }

  /// c_time in ||b_s(x) - b_t(x)|| <= c_time |s - t|^eps on [0, horizon].
  double time_holder_constant(double horizon) const noexcept {
    const double unmodulated = bound() / time_factor_sup(spec_);
    return unmodulated * time_factor_lipschitz(spec_) * std::pow(horizon, 1.0 - spec_.epsilon);
  }

 private:
  HolderDriftSpec spec_;
  std::vector<double> weights_;
};

inline ModeVector drift_eval(const HolderDriftSpec& spec, const SpectralOperator& op, double t, const ModeVector& x) {
  return DriftField(spec, op).evaluate(t, x);
}

inline double drift_bound(const HolderDriftSpec& spec, const SpectralOperator& op) {
  return DriftField(spec, op).bound();
}

// ---------------------------------------------------------------------------
// Empirical validators. A failed check is a report, not an exception.

struct ValidationReport {
  std::string name;
  std::size_t trials = 0;
  double max_ratio = 0.0;
  double constant = 0.0;
  bool pass = true;
  std::string worst_case;
};

namespace detail {

// Random state with a mix of scales so that both the |u|^eps regime and the
// capped regime of psi are visited.
inline double sample_coordinate(std::mt19937_64& rng) {
  std::uniform_int_distribution<int> regime(0, 2);
  std::normal_distribution<double> normal(0.0, 1.0);
  switch (regime(rng)) {
    case 0: return 0.05 * normal(rng);
    case 1: return normal(rng);
    default: return 3.0 * normal(rng);
  }
}

inline ModeVector sample_state(std::mt19937_64& rng, std::size_t n) {
  ModeVector x(n);
  for (std::size_t i = 0; i < n; ++i) x[i] = sample_coordinate(rng);
  return x;
}

inline void record(ValidationReport& r, double ratio, const std::string& where) {
  if (ratio > r.max_ratio) {
    r.max_ratio = ratio;
    r.worst_case = where;
  }
}

// Admits last-bit rounding in the compared quantities.
constexpr double kRoundingSlack = 1e-12;

}  // namespace detail

/// Componentwise Hoelder check: perturb one mode and compare against
/// c lambda_i^{-beta} |x_i - y_i|^eps. constant_scale < 1 deliberately
/// weakens the constant to demonstrate that the check can fail.
inline ValidationReport verify_mode_holder(const HolderDriftSpec& spec, const SpectralOperator& op, std::size_t trials,
                                           std::uint64_t seed, double horizon = 1.0, double constant_scale = 1.0) {
  if (trials == 0) throw std::invalid_argument("verify_mode_holder: trials must be >= 1");
  const DriftField field(spec, op);
  const std::size_t n = op.n_max();
  const double c = field.mode_holder_constant() * constant_scale;
  ValidationReport r{"mode_holder", trials, 0.0, c, true, ""};
  std::mt19937_64 rng(seed);
  std::uniform_real_distribution<double> unit(0.0, 1.0);
  std::uniform_int_distribution<std::size_t> pick(0, n - 1);
  for (std::size_t k = 0; k < trials; ++k) {
    const double t = horizon * unit(rng);
    ModeVector x = detail::sample_state(rng, n);
    const std::size_t i = pick(rng);
    double yi = detail::sample_coordinate(rng);
    // every fourth trial straddles the origin, where psi is least regular
    if (k % 4 == 3) yi = -x[i] * (0.5 + unit(rng));
    ModeVector y = x;
    y[i] = yi;
    const double diff = (field.evaluate(t, x) - field.evaluate(t, y)).norm();
    const double gap = std::abs(x[i] - yi);
    if (gap == 0.0) continue;
    const double rhs = c * field.weights()[i] * std::pow(gap, spec.epsilon);
    if (rhs == 0.0) {
      if (diff > 0.0) {
        r.pass = false;
        detail::record(r, std::numeric_limits<double>::infinity(), "zero constant, nonzero difference");
      }
      continue;
    }
    const double ratio = diff / rhs;
    detail::record(r, ratio, "mode " + std::to_string(i + 1) + " gap " + std::to_string(gap));
  }
  r.pass = r.pass && r.max_ratio <= 1.0 + detail::kRoundingSlack;
  return r;
}

/// Temporal Hoelder check ||b_s(x) - b_t(x)|| <= c_time |s - t|^eps on [0, horizon].
inline ValidationReport verify_time_holder(const HolderDriftSpec& spec, const SpectralOperator& op, std::size_t trials,
                                           std::uint64_t seed, double horizon = 1.0, double constant_scale = 1.0) {
  if (trials == 0) throw std::invalid_argument("verify_time_holder: trials must be >= 1");
  const DriftField field(spec, op);
  const double c = field.time_holder_constant(horizon) * constant_scale;
  ValidationReport r{"time_holder", trials, 0.0, c, true, ""};
  std::mt19937_64 rng(seed);
  std::uniform_real_distribution<double> unit(0.0, 1.0);
  for (std::size_t k = 0; k < trials; ++k) {
    const double s = horizon * unit(rng);
    const double t = horizon * unit(rng);
    const ModeVector x = detail::sample_state(rng, op.n_max());
    const double diff = (field.evaluate(s, x) - field.evaluate(t, x)).norm();
    if (diff == 0.0) continue;
    const double rhs = c * std::pow(std::abs(s - t), spec.epsilon);
    const double ratio = rhs > 0.0 ? diff / rhs : std::numeric_limits<double>::infinity();
    detail::record(r, ratio, "s=" + std::to_string(s) + " t=" + std::to_string(t));
  }
  r.pass = r.max_ratio <= 1.0 + detail::kRoundingSlack;
  return r;
}

/// Global Hoelder check ||b_t(x) - b_t(y)|| <= c_0 ||x - y||^eps.
inline ValidationReport verify_global_holder(const HolderDriftSpec& spec, const SpectralOperator& op, std::size_t trials,
                                             std::uint64_t seed, double horizon = 1.0) {
  if (trials == 0) throw std::invalid_argument("verify_global_holder: trials must be >= 1");
  const DriftField field(spec, op);
  const double c0 = field.global_holder_constant();
  ValidationReport r{"global_holder", trials, 0.0, c0, true, ""};
  std::mt19937_64 rng(seed);
  std::uniform_real_distribution<double> unit(0.0, 1.0);
  for (std::size_t k = 0; k < trials; ++k) {
    const double t = horizon * unit(rng);
    const ModeVector x = detail::sample_state(rng, op.n_max());
    ModeVector y = x;
    // small, large and sign-flipping perturbations
    const double scale = std::pow(10.0, -3.0 + 4.0 * unit(rng));
    for (std::size_t i = 0; i < y.size(); ++i) y[i] += scale * detail::sample_coordinate(rng);
    if (k % 5 == 4) y *= -1.0;
    const double gap = (x - y).norm();
    if (gap == 0.0) continue;
    const double diff = (field.evaluate(t, x) - field.evaluate(t, y)).norm();
    if (c0 == 0.0) continue;
    detail::record(r, diff / (c0 * std::pow(gap, spec.epsilon)), "gap " + std::to_string(gap));
  }
  r.pass = r.max_ratio <= 1.0 + detail::kRoundingSlack;
  return r;
}

/// ||b_t(x)|| <= drift_bound on random (t, x).
inline ValidationReport verify_boundedness(const HolderDriftSpec& spec, const SpectralOperator& op, std::size_t trials,
                                           std::uint64_t seed, double horizon = 1.0) {
  if (trials == 0) throw std::invalid_argument("verify_boundedness: trials must be >= 1");
  const DriftField field(spec, op);
  const double bound = field.bound();
  ValidationReport r{"boundedness", trials, 0.0, bound, true, ""};
  std::mt19937_64 rng(seed);
  std::uniform_real_distribution<double> unit(0.0, 1.0);
  ModeVector out(op.n_max());
  for (std::size_t k = 0; k < trials; ++k) {
    const double t = horizon * unit(rng);
    ModeVector x = detail::sample_state(rng, op.n_max());
    if (k % 3 == 0) x *= 100.0;  // saturate the cap
    field.evaluate_into(t, x.coeffs(), out.coeffs());
    const double nrm = out.norm();
    if (bound == 0.0) {
      if (nrm > 0.0) r.pass = false;
      continue;
    }
    detail::record(r, nrm / bound, "t=" + std::to_string(t));
  }
  r.pass = r.pass && r.max_ratio <= 1.0 + detail::kRoundingSlack;
  return r;
}

}  // namespace spdelab
