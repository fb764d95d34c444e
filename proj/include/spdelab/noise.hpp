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

#include <array>
#include <cmath>
#include <cstddef>
#include <cstdint>
#include <numbers>
#include <span>
#include <stdexcept>
#include <string>
#include <vector>

#include "spdelab/mode_vector.hpp"
#include "spdelab/spectral.hpp"

namespace spdelab {

// ---------------------------------------------------------------------------
// Philox4x32-10 (Salmon et al., SC'11). Stateless: output is a pure function
// of (counter, key).

namespace philox {

using Counter = std::array<std::uint32_t, 4>;
using Key = std::array<std::uint32_t, 2>;

inline constexpr std::uint32_t kMul0 = 0xD2511F53u;
inline constexpr std::uint32_t kMul1 = 0xCD9E8D57u;
inline constexpr std::uint32_t kWeyl0 = 0x9E3779B9u;
inline constexpr std::uint32_t kWeyl1 = 0xBB67AE85u;

constexpr Counter round(const Counter& c, const Key& k) noexcept {
  const std::uint64_t p0 = static_cast<std::uint64_t>(kMul0) * c[0];
  const std::uint64_t p1 = static_cast<std::uint64_t>(kMul1) * c[2];
  return {static_cast<std::uint32_t>(p1 >> 32) ^ c[1] ^ k[0], static_cast<std::uint32_t>(p1),
          static_cast<std::uint32_t>(p0 >> 32) ^ c[3] ^ k[1], static_cast<std::uint32_t>(p0)};
}

constexpr Counter philox4x32(Counter c, Key k) noexcept {
  for (int r = 0; r < 10; ++r) {
    if (r > 0) {
      k[0] += kWeyl0;
      k[1] += kWeyl1;
    }
    c = round(c, k);
  }
  return c;
}

constexpr Key key_from_seed(std::uint64_t seed) noexcept {
  return {static_cast<std::uint32_t>(seed), static_cast<std::uint32_t>(seed >> 32)};
}

/// Uniform on the open interval (0, 1) with 52 random bits; the largest
/// value is 1 - 2^-53, which is representable.
constexpr double to_open_unit(std::uint32_t hi, std::uint32_t lo) noexcept {
  const std::uint64_t bits = ((static_cast<std::uint64_t>(hi) << 32) | lo) >> 12;
  return (static_cast<double>(bits) + 0.5) * 0x1.0p-52;
}

/// Two independent standard normals from one Philox block (Box-Muller).
inline std::array<double, 2> gaussian_pair(const Counter& block) noexcept {
  const double u1 = to_open_unit(block[0], block[1]);
  const double u2 = to_open_unit(block[2], block[3]);
  const double r = std::sqrt(-2.0 * std::log(u1));
  const double a = 2.0 * std::numbers::pi * u2;
  return {r * std::cos(a), r * std::sin(a)};
}

}  // namespace philox

/// Sequential standard-normal source over a private counter stream.
/// Streams with distinct (seed, stream_id) never share counters, and the
/// high counter word is tagged so streams are disjoint from NoiseLattice.
class NormalStream {
 public:
  NormalStream(std::uint64_t seed, std::uint64_t stream_id)
      : key_(philox::key_from_seed(seed)),
        stream_lo_(static_cast<std::uint32_t>(stream_id)),
        stream_hi_(static_cast<std::uint32_t>(stream_id >> 32) | kStreamTag) {
    if ((stream_id >> 63) != 0) throw std::invalid_argument("NormalStream: stream id must be < 2^63");
  }

  double next() noexcept {
    if (has_spare_) {
      has_spare_ = false;
      return spare_;
    }
    const philox::Counter c{static_cast<std::uint32_t>(block_), static_cast<std::uint32_t>(block_ >> 32), stream_lo_,
                            stream_hi_};
    ++block_;
    const auto g = philox::gaussian_pair(philox::philox4x32(c, key_));
    spare_ = g[1];
    has_spare_ = true;
    return g[0];
  }

  double operator()() noexcept { return next(); }

 private:
  static constexpr std::uint32_t kStreamTag = 0x80000000u;

  philox::Key key_;
  std::uint32_t stream_lo_;
  std::uint32_t stream_hi_;
  std::uint64_t block_ = 0;
  double spare_ = 0.0;
  bool has_spare_ = false;
};

/// Per-mode Brownian increments on the dyadic grid of [0, T] at fine level L
/// (step T / 2^L). increment(path, mode, k) ~ N(0, T / 2^L), keyed by
/// (seed, path, mode, k) with no sequential state.
class NoiseLattice {
 public:
  /// noise_scale multiplies every increment; 0 gives the deterministic lattice.
  NoiseLattice(std::uint64_t master_seed, double horizon, int fine_level, std::size_t n_modes, double noise_scale = 1.0)
      : seed_(master_seed), horizon_(horizon), fine_level_(fine_level), n_modes_(n_modes), noise_scale_(noise_scale) {
    if (!(horizon > 0.0) || !std::isfinite(horizon)) throw std::invalid_argument("NoiseLattice: horizon must be positive");
    if (fine_level < 0 || fine_level > 30) throw std::invalid_argument("NoiseLattice: fine level must lie in [0, 30]");
    if (n_modes == 0 || n_modes > 0xFFFFFFFFu) throw std::invalid_argument("NoiseLattice: bad mode count");
    if (!(noise_scale >= 0.0)) throw std::invalid_argument("NoiseLattice: noise scale must be nonnegative");
    key_ = philox::key_from_seed(master_seed);
    sd_ = noise_scale_ * std::sqrt(fine_step());
  }

  std::uint64_t seed() const noexcept { return seed_; }
  double horizon() const noexcept { return horizon_; }
  int fine_level() const noexcept { return fine_level_; }
  std::size_t n_modes() const noexcept { return n_modes_; }
  double noise_scale() const noexcept { return noise_scale_; }
  std::size_t fine_steps() const noexcept { return std::size_t{1} << fine_level_; }
  double fine_step() const noexcept { return horizon_ / static_cast<double>(fine_steps()); }
  double step(int level) const { return horizon_ / static_cast<double>(steps(level)); }
  std::size_t steps(int level) const {
    check_level(level);
    return std::size_t{1} << level;
  }

  /// Fine increment of beta^{(mode+1)} over [k delta_fine, (k+1) delta_fine].
  double increment(std::uint64_t path_id, std::size_t mode, std::size_t k) const {
    if (mode >= n_modes_) throw std::invalid_argument("NoiseLattice: mode out of range");
    if (k >= fine_steps()) throw std::invalid_argument("NoiseLattice: step out of range");
    if (path_id > 0xFFFFFFFFu) throw std::invalid_argument("NoiseLattice: path id must fit in 32 bits");
    return raw_increment(path_id, mode, k);
  }

  /// Increment over coarse step j at level ell: the 2^{L-ell} fine increments
  /// it spans, summed left to right starting from 0.
  double coarse_increment(std::uint64_t path_id, std::size_t mode, int level, std::size_t j) const {
    check_level(level);
    const std::size_t ratio = std::size_t{1} << (fine_level_ - level);
    if (j >= steps(level)) throw std::invalid_argument("NoiseLattice: coarse step out of range");
    if (mode >= n_modes_) throw std::invalid_argument("NoiseLattice: mode out of range");
    if (path_id > 0xFFFFFFFFu) throw std::invalid_argument("NoiseLattice: path id must fit in 32 bits");
    double s = 0.0;
    for (std::size_t k = j * ratio; k < (j + 1) * ratio; ++k) s += raw_increment(path_id, mode, k);
    return s;
  }

  /// All fine increments of step k for modes [0, out.size()).
  void fine_increments(std::uint64_t path_id, std::size_t k, std::span<double> out) const {
    if (out.size() > n_modes_) throw std::invalid_argument("NoiseLattice: too many modes requested");
    for (std::size_t i = 0; i < out.size(); ++i) out[i] = raw_increment(path_id, i, k);
  }

  /// Coarse increment vector Delta W_j^{(n)} at level ell.
  ModeVector coarse_increments(std::uint64_t path_id, int level, std::size_t j, std::size_t n) const {
    ModeVector out(n);
    for (std::size_t i = 0; i < n; ++i) out[i] = coarse_increment(path_id, i, level, j);
    return out;
  }

 private:
  void check_level(int level) const {
    if (level < 0 || level > fine_level_) {
      throw std::invalid_argument("NoiseLattice: level " + std::to_string(level) + " exceeds fine level " +
                                  std::to_string(fine_level_));
    }
  }

  double raw_increment(std::uint64_t path_id, std::size_t mode, std::size_t k) const noexcept {
    // high word 0 keeps lattice counters disjoint from NormalStream counters
    const philox::Counter c{static_cast<std::uint32_t>(k), static_cast<std::uint32_t>(mode),
                            static_cast<std::uint32_t>(path_id), 0u};
    return sd_ * philox::gaussian_pair(philox::philox4x32(c, key_))[0];
  }

  std::uint64_t seed_;
  double horizon_;
  int fine_level_;
  std::size_t n_modes_;
  double noise_scale_;
  philox::Key key_{};
  double sd_ = 0.0;
};

/// Fine increments of one lattice path for modes [0, n), materialized so that
/// several consumers of the same path draw each Gaussian once.
class PathIncrements {
 public:
  PathIncrements(const NoiseLattice& lattice, std::uint64_t path_id, std::size_t n)
      : lattice_(&lattice), path_id_(path_id), n_(n), data_(lattice.fine_steps() * n) {
    if (n == 0 || n > lattice.n_modes()) throw std::invalid_argument("PathIncrements: bad mode count");
    for (std::size_t k = 0; k < lattice.fine_steps(); ++k) lattice.fine_increments(path_id, k, fine(k));
  }

  const NoiseLattice& lattice() const noexcept { return *lattice_; }
  std::uint64_t path_id() const noexcept { return path_id_; }
  std::size_t n_modes() const noexcept { return n_; }
  std::size_t fine_steps() const noexcept { return lattice_->fine_steps(); }

  std::span<const double> fine(std::size_t k) const noexcept { return {data_.data() + k * n_, n_}; }

 private:
  std::span<double> fine(std::size_t k) noexcept { return {data_.data() + k * n_, n_}; }

  const NoiseLattice* lattice_;
  std::uint64_t path_id_;
  std::size_t n_;
  std::vector<double> data_;
};

// ---------------------------------------------------------------------------
// Exact Ornstein-Uhlenbeck sampling, dZ = A Z dt + dW.

struct OUState {
  ModeVector modes;
  double t = 0.0;
};

/// Exact transition over delta: Z_i <- e^{-lambda_i delta} Z_i + xi_i with
/// xi_i ~ N(0, (1 - e^{-2 lambda_i delta}) / (2 lambda_i)).
inline OUState ou_exact_step(const SpectralOperator& op, const OUState& state, double delta, NormalStream& rng) {
  if (!(delta > 0.0)) throw std::invalid_argument("ou_exact_step: delta must be positive");
  if (state.modes.size() > op.n_max()) throw std::invalid_argument("ou_exact_step: state exceeds operator capacity");
  OUState out{state.modes, state.t + delta};
  for (std::size_t i = 0; i < out.modes.size(); ++i) {
    const double lam = op.eigenvalue(i);
    out.modes[i] = std::exp(-lam * delta) * state.modes[i] + std::sqrt(ou_variance(lam, delta)) * rng.next();
  }
  return out;
}

/// Per-mode joint draw of the O-U fluctuation F_i = int_0^t e^{-lambda_i (t-s)} d beta_s
/// and the Bismut weight I_i = int_0^t e^{-lambda_i s} d beta_s over the same path.
struct OUJointDraw {
  ModeVector fluctuation;
  ModeVector weight;
};

/// Joint Gaussian law: Var F_i = Var I_i = v_i, Cov(F_i, I_i) = t e^{-lambda_i t}.
/// I_i is built as (c/v) F_i + sqrt((v - c)(v + c)/v) xi, with v - c
/// evaluated through sinh(x)/x - 1 to avoid cancellation at small lambda t.
inline OUJointDraw draw_ou_joint(std::span<const double> eigenvalues, double t, NormalStream& rng) {
  if (!(t > 0.0)) throw std::invalid_argument("draw_ou_joint: t must be positive");
  OUJointDraw d{ModeVector(eigenvalues.size()), ModeVector(eigenvalues.size())};
  for (std::size_t i = 0; i < eigenvalues.size(); ++i) {
    const double lam = eigenvalues[i];
    const double x = lam * t;
    const double v = ou_variance(lam, t);
    const double c = ou_weight_covariance(lam, t);
    // v = t e^{-x} sinh(x)/x, so v - c = t e^{-x} (sinh(x)/x - 1)
    const double v_minus_c = x < 700.0 ? t * std::exp(-x) * sinhc_minus_one(x) : v;
    const double resid = std::max(0.0, v_minus_c * (v + c) / v);
    const double f = std::sqrt(v) * rng.next();
    const double xi = rng.next();
    d.fluctuation[i] = f;
    d.weight[i] = (c / v) * f + std::sqrt(resid) * xi;
  }
  return d;
}

struct OUWeightedSample {
  ModeVector z;
  double weight = 0.0;
};

/// (Z_t^x, int_0^t <e^{sA} eta, dW_s>) drawn from their exact joint law.
inline OUWeightedSample ou_joint_with_weight(const SpectralOperator& op, const ModeVector& x, double t,
                                             const ModeVector& eta, NormalStream& rng) {
  if (x.size() != eta.size()) throw std::invalid_argument("ou_joint_with_weight: x and eta lengths differ");
  if (x.size() > op.n_max()) throw std::invalid_argument("ou_joint_with_weight: state exceeds operator capacity");
  const auto ev = op.eigenvalues().first(x.size());
  const OUJointDraw d = draw_ou_joint(ev, t, rng);
  OUWeightedSample s{ModeVector(x.size()), 0.0};
  for (std::size_t i = 0; i < x.size(); ++i) {
    s.z[i] = std::exp(-ev[i] * t) * x[i] + d.fluctuation[i];
    s.weight += eta[i] * d.weight[i];
  }
  return s;
}

}  // namespace spdelab
