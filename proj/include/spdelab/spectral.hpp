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
#include <limits>
#include <numbers>
#include <optional>
#include <span>
#include <stdexcept>
#include <string>
#include <vector>

#include "spdelab/mode_vector.hpp"

namespace spdelab {

/// Diagonalized -A: ascending positive eigenvalues lambda_1 <= lambda_2 <= ...
/// All operator actions in the library are mode-diagonal, so the basis is
/// never materialized outside render_sine_basis().
class SpectralOperator {
 public:
  enum class Kind { kPowerLaw, kExplicit };

  /// lambda_i = i^p for i = 1..n_max.
  static SpectralOperator power_law(std::size_t n_max, double exponent) {
    if (n_max == 0) throw std::invalid_argument("SpectralOperator: n_max must be >= 1");
    if (!(exponent > 0.0) || !std::isfinite(exponent)) {
      throw std::invalid_argument("SpectralOperator: power-law exponent must be positive");
    }
    std::vector<double> ev(n_max);
    for (std::size_t i = 0; i < n_max; ++i) ev[i] = std::pow(static_cast<double>(i + 1), exponent);
    return SpectralOperator(std::move(ev), Kind::kPowerLaw, exponent);
  }

  static SpectralOperator from_eigenvalues(std::vector<double> eigenvalues) {
    if (eigenvalues.empty()) throw std::invalid_argument("SpectralOperator: empty spectrum");
    for (std::size_t i = 0; i < eigenvalues.size(); ++i) {
      if (!(eigenvalues[i] > 0.0) || !std::isfinite(eigenvalues[i])) {
        throw std::invalid_argument("SpectralOperator: eigenvalues must be finite and positive");
      }
      if (i > 0 && eigenvalues[i] < eigenvalues[i - 1]) {
        throw std::invalid_argument("SpectralOperator: eigenvalues must be non-decreasing");
      }
    }
    return SpectralOperator(std::move(eigenvalues), Kind::kExplicit, 0.0);
  }

  std::size_t n_max() const noexcept { return eigenvalues_.size(); }
  Kind kind() const noexcept { return kind_; }
  /// Exponent p of a power-law spectrum; meaningless for explicit spectra.
  double exponent() const noexcept { return exponent_; }
  std::span<const double> eigenvalues() const noexcept { return eigenvalues_; }
  /// lambda_{mode+1}.
  double eigenvalue(std::size_t mode) const { return eigenvalues_.at(mode); }

  /// Same spectrum restricted to the first n modes.
  SpectralOperator truncated(std::size_t n) const {
    if (n == 0 || n > n_max()) throw std::invalid_argument("SpectralOperator::truncated: bad size");
    std::vector<double> ev = eigenvalues_;
    ev.resize(n);
    return SpectralOperator(std::move(ev), kind_, exponent_);
  }

  friend bool operator==(const SpectralOperator&, const SpectralOperator&) = default;

 private:
  SpectralOperator(std::vector<double> ev, Kind kind, double exponent)
      : eigenvalues_(std::move(ev)), kind_(kind), exponent_(exponent) {}

  std::vector<double> eigenvalues_;
  Kind kind_;
  double exponent_;
};

/// Dirichlet Laplacian on (0, pi): lambda_i = i^2.
inline SpectralOperator make_heat_operator(std::size_t n_max) {
  return SpectralOperator::power_law(n_max, 2.0);
}

// ---------------------------------------------------------------------------
// Stable per-mode scalars.

/// (1 - e^{-x}) / x, continuous at x = 0.
inline double one_minus_exp_over(double x) noexcept {
  if (std::abs(x) < 1e-4) return 1.0 - x / 2.0 + x * x / 6.0 - x * x * x / 24.0;
  return -std::expm1(-x) / x;
}

/// int_0^t e^{-2 lambda s} ds = (1 - e^{-2 lambda t}) / (2 lambda); tends to t as lambda -> 0.
inline double ou_variance(double lambda, double t) noexcept {
  return t * one_minus_exp_over(2.0 * lambda * t);
}

/// int_0^t e^{-lambda (t-s)} e^{-lambda s} ds = t e^{-lambda t}.
inline double ou_weight_covariance(double lambda, double t) noexcept {
  return t * std::exp(-lambda * t);
}

/// sinh(x)/x - 1, accurate for small x.
inline double sinhc_minus_one(double x) noexcept {
  const double ax = std::abs(x);
  if (ax < 1e-2) {
    const double x2 = x * x;
    return x2 / 6.0 * (1.0 + x2 / 20.0 * (1.0 + x2 / 42.0));
  }
  if (ax > 700.0) return std::numeric_limits<double>::infinity();
  return std::sinh(x) / x - 1.0;
}

// ---------------------------------------------------------------------------
// Trace condition.

struct TraceReport {
  double alpha = 0.0;
  double partial_sum = 0.0;
  /// Bound on sum_{i > n_max}; +inf when unknown or divergent.
  double tail_bound = std::numeric_limits<double>::infinity();
  bool converges = false;
  /// False for explicit spectra: no verdict is possible from finitely many terms.
  bool determined = false;
};

inline TraceReport check_trace_condition(const SpectralOperator& op, double alpha) {
  if (!(alpha > 0.0 && alpha < 1.0)) {
    throw std::invalid_argument("check_trace_condition: alpha must lie in (0,1)");
  }
  TraceReport r;
  r.alpha = alpha;
  for (double lam : op.eigenvalues()) r.partial_sum += std::pow(lam, -(1.0 - alpha));
  if (op.kind() == SpectralOperator::Kind::kPowerLaw) {
    const double s = op.exponent() * (1.0 - alpha);
    r.determined = true;
    r.converges = s > 1.0;
    if (r.converges) {
      // integral test: sum_{i>N} i^{-s} <= int_N^inf x^{-s} dx
      const double n = static_cast<double>(op.n_max());
      r.tail_bound = std::pow(n, 1.0 - s) / (s - 1.0);
    }
  }
  return r;
}

// ---------------------------------------------------------------------------
// Diagonal operator actions.

/// e^{tA} v, i.e. coefficient i scaled by e^{-lambda_i t}.
inline ModeVector semigroup_apply(const SpectralOperator& op, double t, const ModeVector& v) {
  if (!(t >= 0.0)) throw std::invalid_argument("semigroup_apply: t must be nonnegative");
  if (v.size() > op.n_max()) throw std::invalid_argument("semigroup_apply: vector exceeds operator capacity");
  ModeVector out = v;
  for (std::size_t i = 0; i < v.size(); ++i) out[i] *= std::exp(-op.eigenvalue(i) * t);
  return out;
}

/// (-A)^gamma v, i.e. coefficient i scaled by lambda_i^gamma.
inline ModeVector frac_power_apply(const SpectralOperator& op, double gamma, const ModeVector& v) {
  if (v.size() > op.n_max()) throw std::invalid_argument("frac_power_apply: vector exceeds operator capacity");
  ModeVector out = v;
  if (gamma == 0.0) return out;
  for (std::size_t i = 0; i < v.size(); ++i) out[i] *= std::pow(op.eigenvalue(i), gamma);
  return out;
}

/// Operator norm of (-A)^gamma e^{tA} over the stored modes.
inline double smoothing_norm(const SpectralOperator& op, double gamma, double t) {
  double m = 0.0;
  for (double lam : op.eigenvalues()) m = std::max(m, std::pow(lam, gamma) * std::exp(-lam * t));
  return m;
}

/// Operator norm of (-A)^{-gamma} (e^{tA} - I) over the stored modes.
inline double increment_norm(const SpectralOperator& op, double gamma, double t) {
  double m = 0.0;
  for (double lam : op.eigenvalues()) m = std::max(m, std::pow(lam, -gamma) * -std::expm1(-lam * t));
  return m;
}

/// Constant c_theta with |e^{-x} - e^{-y}| <= c_theta |x - y|^theta on x, y >= 0.
/// |e^{-x} - e^{-y}| <= min(1, |x - y|) <= |x - y|^theta, so c_theta = 1.
inline double exp_holder_constant(double theta) {
  if (!(theta >= 0.0 && theta <= 1.0)) throw std::invalid_argument("exp_holder_constant: theta outside [0,1]");
  return 1.0;
}

/// Physical-space rendering on (0, pi) with e_i(xi) = sqrt(2/pi) sin(i xi).
inline std::vector<double> render_sine_basis(const ModeVector& v, std::span<const double> xi) {
  const double norm = std::sqrt(2.0 / std::numbers::pi);
  std::vector<double> out(xi.size(), 0.0);
  for (std::size_t k = 0; k < xi.size(); ++k) {
    double s = 0.0;
    for (std::size_t i = 0; i < v.size(); ++i) s += v[i] * std::sin(static_cast<double>(i + 1) * xi[k]);
    out[k] = norm * s;
  }
  return out;
}

}  // namespace spdelab
