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

// Monte Carlo probes of the O-U semigroup P_t^0, its gradient, and the
// resolvent-type integral equation
//   u_t(x) = int_t^T e^{-lambda (s-t)} P_{s-t}^0 (grad_{b_s} u_s + b_s)(x) ds.

#pragma once

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <cstdint>
#include <optional>
#include <stdexcept>
#include <string>
#include <vector>

#include "spdelab/drift.hpp"
#include "spdelab/mode_vector.hpp"
#include "spdelab/noise.hpp"
#include "spdelab/parallel.hpp"
#include "spdelab/spectral.hpp"

namespace spdelab {

/// f : H_d -> H_d used to probe P_t^0.
class TestFunction {
 public:
  enum class Kind { kCoordinate, kBoundedSmooth, kDriftFunction };

  /// f(z) = <z, e_{mode+1}> u.
  static TestFunction coordinate(std::size_t mode, ModeVector u) {
    if (mode >= u.size()) throw std::invalid_argument("TestFunction::coordinate: mode outside output space");
    TestFunction f(Kind::kCoordinate, std::move(u));
    f.mode_ = mode;
    return f;
  }

  /// f(z) = tanh(<z, w>) u, bounded by ||u||.
  static TestFunction bounded_smooth(ModeVector w, ModeVector u) {
    if (w.size() != u.size()) throw std::invalid_argument("TestFunction::bounded_smooth: w and u lengths differ");
    TestFunction f(Kind::kBoundedSmooth, std::move(u));
    f.w_ = std::move(w);
    return f;
  }

  /// f = b_t on H_d for op restricted to d modes.
  static TestFunction drift_function(const HolderDriftSpec& spec, const SpectralOperator& op_d, double t) {
    TestFunction f(Kind::kDriftFunction, ModeVector(op_d.n_max()));
    f.field_.emplace(spec, op_d);
    f.t_ = t;
    return f;
  }

  Kind kind() const noexcept { return kind_; }
  std::size_t dim() const noexcept { return u_.size(); }

  /// Declared sup-norm; empty for unbounded f.
  std::optional<double> bound() const {
    switch (kind_) {
      case Kind::kCoordinate: return std::nullopt;
      case Kind::kBoundedSmooth: return u_.norm();
      case Kind::kDriftFunction: return field_->bound();
    }
    return std::nullopt;
  }

  void evaluate_into(std::span<const double> z, std::span<double> out) const {
    switch (kind_) {
      case Kind::kCoordinate:
        for (std::size_t j = 0; j < out.size(); ++j) out[j] = z[mode_] * u_[j];
        break;
      case Kind::kBoundedSmooth: {
        double s = 0.0;
        for (std::size_t j = 0; j < z.size(); ++j) s += z[j] * w_[j];
        const double g = std::tanh(s);
        for (std::size_t j = 0; j < out.size(); ++j) out[j] = g * u_[j];
        break;
      }
      case Kind::kDriftFunction:
        field_->evaluate_into(t_, z, out);
        break;
    }
  }

  ModeVector operator()(const ModeVector& z) const {
    if (z.size() != dim()) throw std::invalid_argument("TestFunction: argument dimension mismatch");
    ModeVector out(dim());
    evaluate_into(z.coeffs(), out.coeffs());
    return out;
  }

 private:
  TestFunction(Kind kind, ModeVector u) : kind_(kind), u_(std::move(u)) {}

  Kind kind_;
  ModeVector u_;
  ModeVector w_;
  std::size_t mode_ = 0;
  std::optional<DriftField> field_;
  double t_ = 0.0;
};

/// Per-coordinate Monte Carlo mean with its standard error.
struct VectorEstimate {
  ModeVector mean;
  ModeVector std_error;

  /// Delta-method standard error of ||mean||.
  double norm_std_error() const {
    const double nrm = mean.norm();
    double s = 0.0;
    for (std::size_t j = 0; j < mean.size(); ++j) {
      const double w = nrm > 0.0 ? mean[j] / nrm : 1.0;
      s += w * w * std_error[j] * std_error[j];
    }
    return std::sqrt(s);
  }
};

struct MonteCarloOptions {
  std::size_t samples = 100000;
  std::uint64_t seed = 1;
  /// Samples per parallel unit; each unit owns one NormalStream.
  std::size_t batch = 2048;
  ParallelOptions parallel;
};

namespace detail {

inline VectorEstimate to_estimate(const AccumulatorBank& bank, std::size_t dim) {
  VectorEstimate e{ModeVector(dim), ModeVector(dim)};
  for (std::size_t j = 0; j < dim; ++j) {
    e.mean[j] = bank.items[j].mean();
    e.std_error[j] = bank.items[j].stderr_of_mean();
  }
  return e;
}

/// Runs body(stream, sample_index, bank) for every sample, split into batches.
template <class Body>
AccumulatorBank batched(const MonteCarloOptions& mc, std::uint64_t stream_base, std::size_t slots, Body body) {
  if (mc.samples < 2) throw std::invalid_argument("Monte Carlo: need at least two samples");
  const std::size_t batch = std::max<std::size_t>(mc.batch, 1);
  const std::size_t units = (mc.samples + batch - 1) / batch;
  return reduce_units<AccumulatorBank>(units, mc.parallel, [&](std::uint64_t u) {
    AccumulatorBank bank(slots);
    NormalStream rng(mc.seed, stream_base + u);
    const std::size_t end = std::min(mc.samples, static_cast<std::size_t>(u + 1) * batch);
    for (std::size_t s = static_cast<std::size_t>(u) * batch; s < end; ++s) body(rng, bank);
    return bank;
  });
}

inline std::uint64_t mix64(std::uint64_t x) noexcept {
  x += 0x9E3779B97F4A7C15ull;
  x = (x ^ (x >> 30)) * 0xBF58476D1CE4E5B9ull;
  x = (x ^ (x >> 27)) * 0x94D049BB133111EBull;
  return x ^ (x >> 31);
}

inline void check_point(const TestFunction& f, const SpectralOperator& op, const ModeVector& x) {
  if (x.size() != f.dim()) throw std::invalid_argument("Kolmogorov probe: x dimension differs from test function");
  if (x.size() > op.n_max()) throw std::invalid_argument("Kolmogorov probe: x exceeds operator capacity");
}

}  // namespace detail

/// P_t^0 f(x) = E f(Z_t^x), one exact O-U jump per sample.
inline VectorEstimate ou_semigroup_estimate(const TestFunction& f, const SpectralOperator& op, double t,
                                            const ModeVector& x, const MonteCarloOptions& mc) {
  if (!(t > 0.0)) throw std::invalid_argument("ou_semigroup_estimate: t must be positive");
  detail::check_point(f, op, x);
  const std::size_t d = x.size();
  const AccumulatorBank bank = detail::batched(mc, 0, d, [&](NormalStream& rng, AccumulatorBank& b) {
    const OUState z = ou_exact_step(op, OUState{x, 0.0}, t, rng);
    const ModeVector fz = f(z.modes);
    for (std::size_t j = 0; j < d; ++j) b.items[j].add(fz[j]);
  });
  return detail::to_estimate(bank, d);
}

/// grad_eta P_t^0 f(x) = E[ f(Z_t^x) t^{-1} int_0^t <e^{sA} eta, dW_s> ].
inline VectorEstimate bismut_gradient(const TestFunction& f, const SpectralOperator& op, double t, const ModeVector& x,
                                      const ModeVector& eta, const MonteCarloOptions& mc) {
  if (!(t > 0.0)) throw std::invalid_argument("bismut_gradient: t must be positive");
  detail::check_point(f, op, x);
  const std::size_t d = x.size();
  const AccumulatorBank bank = detail::batched(mc, 0, d, [&](NormalStream& rng, AccumulatorBank& b) {
    const OUWeightedSample s = ou_joint_with_weight(op, x, t, eta, rng);
    const ModeVector fz = f(s.z);
    const double w = s.weight / t;
    for (std::size_t j = 0; j < d; ++j) b.items[j].add(fz[j] * w);
  });
  return detail::to_estimate(bank, d);
}

/// Central difference (P_t f(x + h eta) - P_t f(x - h eta)) / 2h with common
/// random numbers. Uses the same streams as bismut_gradient for equal options,
/// so the two estimators share their O-U fluctuations.
inline VectorEstimate fd_gradient(const TestFunction& f, const SpectralOperator& op, double t, const ModeVector& x,
                                  const ModeVector& eta, double h, const MonteCarloOptions& mc) {
  if (!(t > 0.0)) throw std::invalid_argument("fd_gradient: t must be positive");
  if (!(h > 0.0)) throw std::invalid_argument("fd_gradient: step must be positive");
  detail::check_point(f, op, x);
  if (eta.size() != x.size()) throw std::invalid_argument("fd_gradient: eta dimension mismatch");
  const std::size_t d = x.size();
  const auto ev = op.eigenvalues().first(d);
  const AccumulatorBank bank = detail::batched(mc, 0, d, [&](NormalStream& rng, AccumulatorBank& b) {
    const OUJointDraw draw = draw_ou_joint(ev, t, rng);
    ModeVector zp(d), zm(d);
    for (std::size_t i = 0; i < d; ++i) {
      const double decay = std::exp(-ev[i] * t);
      zp[i] = decay * (x[i] + h * eta[i]) + draw.fluctuation[i];
      zm[i] = decay * (x[i] - h * eta[i]) + draw.fluctuation[i];
    }
    const ModeVector fp = f(zp), fm = f(zm);
    for (std::size_t j = 0; j < d; ++j) b.items[j].add((fp[j] - fm[j]) / (2.0 * h));
  });
  return detail::to_estimate(bank, d);
}

// ---------------------------------------------------------------------------
// Gradient decay along eigendirections.

struct GradientDecayRow {
  std::size_t mode = 0;  // 1-based i
  double estimate = 0.0;  // ||grad_{e_i} P_t f(x)||
  double std_error = 0.0;
  /// Cauchy-Schwarz envelope  bound * sqrt((1 - e^{-2 lambda_i t}) / (2 lambda_i)) / t.
  double envelope = 0.0;
  double bound_ratio = 0.0;
};

struct GradientDecayReport {
  std::vector<GradientDecayRow> rows;
  double max_ratio = 0.0;
  /// Every ratio is <= 1 within 3 standard errors.
  bool uniformly_bounded = false;
  /// Estimates are non-increasing in i within 3 standard errors.
  bool decreasing = false;
};

inline GradientDecayReport gradient_decay_check(const TestFunction& f, const SpectralOperator& op, double t,
                                                const ModeVector& x, const std::vector<std::size_t>& modes,
                                                const MonteCarloOptions& mc) {
  const auto bound = f.bound();
  if (!bound) throw std::invalid_argument("gradient_decay_check: test function must be bounded");
  detail::check_point(f, op, x);
  GradientDecayReport rep;
  rep.uniformly_bounded = true;
  rep.decreasing = true;
  for (std::size_t i : modes) {
    if (i == 0 || i > x.size()) throw std::invalid_argument("gradient_decay_check: mode outside H_d");
    const VectorEstimate g = bismut_gradient(f, op, t, x, ModeVector::unit(x.size(), i - 1), mc);
    GradientDecayRow row;
    row.mode = i;
    row.estimate = g.mean.norm();
    row.std_error = g.norm_std_error();
    row.envelope = *bound * std::sqrt(ou_variance(op.eigenvalue(i - 1), t)) / t;
    row.bound_ratio = row.envelope > 0.0 ? row.estimate / row.envelope : 0.0;
    rep.max_ratio = std::max(rep.max_ratio, row.bound_ratio);
    if (row.envelope > 0.0 && (row.estimate - 3.0 * row.std_error) / row.envelope > 1.0) rep.uniformly_bounded = false;
    if (!rep.rows.empty()) {
      const auto& prev = rep.rows.back();
      if (row.estimate - prev.estimate > 3.0 * std::hypot(row.std_error, prev.std_error)) rep.decreasing = false;
    }
    rep.rows.push_back(row);
  }
  return rep;
}

// ---------------------------------------------------------------------------
// Depth-limited Picard evaluation of the integral equation at one point.

struct PicardConfig {
  double lambda = 1.0;
  int depth = 1;
  std::size_t dims = 3;
  double horizon = 1.0;
  /// Midpoint-rule nodes on [t, T].
  std::size_t time_nodes = 16;
  std::size_t outer_samples = 20000;
  std::size_t inner_samples = 200;
  double fd_step = 1e-3;
  /// Maximum number of O-U draws across all nesting levels.
  std::size_t budget = 200'000'000;
  std::uint64_t seed = 7;

  void validate(const SpectralOperator& op) const {
    if (!(lambda > 0.0)) throw std::invalid_argument("PicardConfig: lambda must be positive");
    if (depth < 1) throw std::invalid_argument("PicardConfig: depth must be >= 1");
    if (depth > 2) throw std::invalid_argument("PicardConfig: depth above 2 is not supported (exponential cost)");
    if (dims == 0 || dims > 4 || dims > op.n_max()) throw std::invalid_argument("PicardConfig: dims must lie in [1, min(4, n_max)]");
    if (!(horizon > 0.0)) throw std::invalid_argument("PicardConfig: horizon must be positive");
    if (time_nodes == 0 || outer_samples < 2 || inner_samples < 1) throw std::invalid_argument("PicardConfig: bad sizes");
    if (!(fd_step > 0.0)) throw std::invalid_argument("PicardConfig: fd step must be positive");
  }
};

struct PicardResult {
  VectorEstimate estimate;
  double norm = 0.0;
  double norm_std_error = 0.0;
  int completed_depth = 0;
  bool budget_exhausted = false;
  std::size_t draws = 0;
  /// ||b||_{T,inf} (1 - e^{-lambda (T-t)}) / lambda, the depth-1 envelope.
  double depth_one_bound = 0.0;
};

namespace detail {

class PicardEvaluator {
 public:
  PicardEvaluator(const PicardConfig& cfg, const HolderDriftSpec& spec, const SpectralOperator& op)
      : cfg_(cfg), op_(op.truncated(cfg.dims)), field_(spec, op_) {}

  const DriftField& field() const noexcept { return field_; }

  static std::size_t cost(const PicardConfig& cfg, int depth) {
    // draws for one evaluation of u^{(depth)} with M samples at the top
    auto nested = [&](auto&& self, int k, std::size_t m) -> double {
      if (k == 0) return 0.0;
      return static_cast<double>(cfg.time_nodes) * static_cast<double>(m) *
             (1.0 + 2.0 * self(self, k - 1, cfg.inner_samples));
    };
    const double c = nested(nested, depth, cfg.outer_samples);
    return c > 1e18 ? static_cast<std::size_t>(1e18) : static_cast<std::size_t>(c);
  }

  /// Top-level estimate of u^{(depth)}_t(x) with per-coordinate errors.
  VectorEstimate top(int depth, double t, const ModeVector& x) {
    const std::size_t d = cfg_.dims;
    VectorEstimate e{ModeVector(d), ModeVector(d)};
    if (t >= cfg_.horizon) return e;
    const double w = (cfg_.horizon - t) / static_cast<double>(cfg_.time_nodes);
    std::vector<double> var(d, 0.0);
    for (std::size_t m = 0; m < cfg_.time_nodes; ++m) {
      const double s = t + (static_cast<double>(m) + 0.5) * w;
      const double weight = w * std::exp(-cfg_.lambda * (s - t));
      AccumulatorBank bank(d);
      NormalStream rng(cfg_.seed, stream_id(0x5eedu, depth, m));
      std::vector<double> g(d);
      for (std::size_t k = 0; k < cfg_.outer_samples; ++k) {
        const ModeVector z = jump(x, s - t, rng);
        integrand(depth, s, z, g, mix64(rng_tag(depth, m, k)));
        for (std::size_t j = 0; j < d; ++j) bank.items[j].add(g[j]);
      }
      for (std::size_t j = 0; j < d; ++j) {
        e.mean[j] += weight * bank.items[j].mean();
        var[j] += weight * weight * bank.items[j].variance() / static_cast<double>(bank.items[j].count());
      }
    }
    for (std::size_t j = 0; j < d; ++j) e.std_error[j] = std::sqrt(var[j]);
    return e;
  }

  std::size_t draws() const noexcept { return draws_; }

 private:
  static std::uint64_t stream_id(std::uint64_t tag, int depth, std::size_t m) {
    return mix64(tag ^ (static_cast<std::uint64_t>(depth) << 40) ^ m) >> 1;
  }
  static std::uint64_t rng_tag(int depth, std::size_t m, std::size_t k) {
    return (static_cast<std::uint64_t>(depth) << 56) ^ (static_cast<std::uint64_t>(m) << 32) ^ k;
  }

  ModeVector jump(const ModeVector& x, double dt, NormalStream& rng) {
    ++draws_;
    return ou_exact_step(op_, OUState{x, 0.0}, dt, rng).modes;
  }

  /// g = b_s(z) + (u^{(depth-1)}_s(z + h b_s(z)) - u^{(depth-1)}_s(z)) / h.
  void integrand(int depth, double s, const ModeVector& z, std::vector<double>& g, std::uint64_t key) {
    field_.evaluate_into(s, z.coeffs(), g);
    if (depth <= 1) return;
    ModeVector shifted = z;
    for (std::size_t j = 0; j < g.size(); ++j) shifted[j] += cfg_.fd_step * g[j];
    // identical key: common random numbers for the difference quotient
    const ModeVector up = inner(depth - 1, s, shifted, key);
    const ModeVector u0 = inner(depth - 1, s, z, key);
    for (std::size_t j = 0; j < g.size(); ++j) g[j] += (up[j] - u0[j]) / cfg_.fd_step;
  }

  /// Plain Monte Carlo estimate of u^{(depth)}_t(x) with inner sample size.
  ModeVector inner(int depth, double t, const ModeVector& x, std::uint64_t key) {
    const std::size_t d = cfg_.dims;
    ModeVector out(d);
    if (depth == 0 || t >= cfg_.horizon) return out;
    const double w = (cfg_.horizon - t) / static_cast<double>(cfg_.time_nodes);
    std::vector<double> g(d);
    for (std::size_t m = 0; m < cfg_.time_nodes; ++m) {
      const double s = t + (static_cast<double>(m) + 0.5) * w;
      const double weight = w * std::exp(-cfg_.lambda * (s - t));
      NormalStream rng(cfg_.seed, mix64(key ^ (m + 1)) >> 1);
      std::vector<double> sum(d, 0.0);
      for (std::size_t k = 0; k < cfg_.inner_samples; ++k) {
        const ModeVector z = jump(x, s - t, rng);
        integrand(depth, s, z, g, mix64(key ^ rng_tag(depth, m, k)));
        for (std::size_t j = 0; j < d; ++j) sum[j] += g[j];
      }
      for (std::size_t j = 0; j < d; ++j) out[j] += weight * sum[j] / static_cast<double>(cfg_.inner_samples);
    }
    return out;
  }

  PicardConfig cfg_;
  SpectralOperator op_;
  DriftField field_;
  std::size_t draws_ = 0;
};

}  // namespace detail

/// u^{(K)}_t(x) with u^{(0)} = 0. When the nested cost of depth K exceeds
/// the budget, the deepest affordable iterate is returned and flagged.
inline PicardResult picard_u_lambda(const PicardConfig& cfg, const HolderDriftSpec& spec, const SpectralOperator& op,
                                    double t, const ModeVector& x) {
  cfg.validate(op);
  if (x.size() != cfg.dims) throw std::invalid_argument("picard_u_lambda: x dimension differs from dims");
  if (!(t >= 0.0 && t <= cfg.horizon)) throw std::invalid_argument("picard_u_lambda: t outside [0, T]");
  detail::PicardEvaluator eval(cfg, spec, op);
  PicardResult r;
  r.estimate = {ModeVector(cfg.dims), ModeVector(cfg.dims)};
  r.depth_one_bound = eval.field().bound() * -std::expm1(-cfg.lambda * (cfg.horizon - t)) / cfg.lambda;
  int depth = cfg.depth;
  while (depth > 0 && detail::PicardEvaluator::cost(cfg, depth) > cfg.budget) --depth;
  r.budget_exhausted = depth < cfg.depth;
  r.completed_depth = depth;
  if (depth == 0) return r;
  r.estimate = eval.top(depth, t, x);
  r.norm = r.estimate.mean.norm();
  r.norm_std_error = r.estimate.norm_std_error();
  r.draws = eval.draws();
  return r;
}

/// Partial sums S_n = sum_{i<=n} lambda_i^theta ||grad_{e_i} u^{(1)}_t(x)||^2 for
/// the requested n, with the gradient of the depth-1 iterate obtained by
/// Bismut estimates at each midpoint node. Squared norms are debiased by the
/// Monte Carlo variance.
struct SummabilityReport {
  std::vector<std::size_t> n_values;
  std::vector<double> partial_sums;
  std::vector<double> squared_gradients;  // per mode, i = 1..max n
  /// Last increment S_{n_k} - S_{n_{k-1}} is at most a quarter of S_{n_{k-1}}.
  bool non_exploding = false;
};

inline SummabilityReport gradient_summability_probe(const PicardConfig& cfg, const HolderDriftSpec& spec,
                                                    const SpectralOperator& op, double t, const ModeVector& x,
                                                    double theta, std::vector<std::size_t> n_values,
                                                    const MonteCarloOptions& mc) {
  if (n_values.empty()) throw std::invalid_argument("gradient_summability_probe: no n values");
  std::sort(n_values.begin(), n_values.end());
  const std::size_t d = n_values.back();
  if (x.size() != d || d > op.n_max()) throw std::invalid_argument("gradient_summability_probe: x must have max(n) modes");
  if (!(t >= 0.0 && t < cfg.horizon)) throw std::invalid_argument("gradient_summability_probe: t outside [0, T)");
  const SpectralOperator op_d = op.truncated(d);
  SummabilityReport rep;
  rep.n_values = n_values;
  const double w = (cfg.horizon - t) / static_cast<double>(cfg.time_nodes);
  for (std::size_t i = 0; i < d; ++i) {
    ModeVector grad(d);
    ModeVector var(d);
    for (std::size_t m = 0; m < cfg.time_nodes; ++m) {
      const double s = t + (static_cast<double>(m) + 0.5) * w;
      const double weight = w * std::exp(-cfg.lambda * (s - t));
      MonteCarloOptions node = mc;
      node.seed = detail::mix64(mc.seed ^ (i << 20) ^ m);
      const auto f = TestFunction::drift_function(spec, op_d, s);
      const VectorEstimate g = bismut_gradient(f, op_d, s - t, x, ModeVector::unit(d, i), node);
      for (std::size_t j = 0; j < d; ++j) {
        grad[j] += weight * g.mean[j];
        var[j] += weight * weight * g.std_error[j] * g.std_error[j];
      }
    }
    double sq = 0.0;
    for (std::size_t j = 0; j < d; ++j) sq += grad[j] * grad[j] - var[j];
    rep.squared_gradients.push_back(std::max(0.0, sq));
  }
  double running = 0.0;
  std::size_t next = 0;
  for (std::size_t i = 0; i < d; ++i) {
    running += std::pow(op.eigenvalue(i), theta) * rep.squared_gradients[i];
    while (next < n_values.size() && n_values[next] == i + 1) {
      rep.partial_sums.push_back(running);
      ++next;
    }
  }
  if (rep.partial_sums.size() >= 2) {
    const double prev = rep.partial_sums[rep.partial_sums.size() - 2];
    const double last = rep.partial_sums.back();
    rep.non_exploding = last - prev <= 0.25 * prev;
  }
  return rep;
}

}  // namespace spdelab
