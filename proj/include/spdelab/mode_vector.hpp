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
#include <initializer_list>
#include <span>
#include <stdexcept>
#include <string>
#include <vector>

namespace spdelab {

/// Element of the Galerkin space H_n, stored as coefficients in the
/// eigenbasis: coeffs[i] is the coordinate along e_{i+1}.
class ModeVector {
 public:
  ModeVector() = default;
  explicit ModeVector(std::size_t n) : coeffs_(n, 0.0) {}
  explicit ModeVector(std::vector<double> coeffs) : coeffs_(std::move(coeffs)) {}
  ModeVector(std::initializer_list<double> coeffs) : coeffs_(coeffs) {}

  /// Unit vector e_{mode+1} in H_n.
  static ModeVector unit(std::size_t n, std::size_t mode) {
    if (mode >= n) throw std::invalid_argument("ModeVector::unit: mode out of range");
    ModeVector v(n);
    v[mode] = 1.0;
    return v;
  }

  std::size_t size() const noexcept { return coeffs_.size(); }
  bool empty() const noexcept { return coeffs_.empty(); }

  double& operator[](std::size_t i) noexcept { return coeffs_[i]; }
  double operator[](std::size_t i) const noexcept { return coeffs_[i]; }

  std::span<double> coeffs() noexcept { return coeffs_; }
  std::span<const double> coeffs() const noexcept { return coeffs_; }
  const std::vector<double>& values() const noexcept { return coeffs_; }

  auto begin() noexcept { return coeffs_.begin(); }
  auto end() noexcept { return coeffs_.end(); }
  auto begin() const noexcept { return coeffs_.begin(); }
  auto end() const noexcept { return coeffs_.end(); }

  double squared_norm() const noexcept {
    double s = 0.0;
    for (double c : coeffs_) s += c * c;
    return s;
  }
  double norm() const noexcept { return std::sqrt(squared_norm()); }

  bool all_finite() const noexcept {
    return std::all_of(coeffs_.begin(), coeffs_.end(),
                       [](double c) { return std::isfinite(c); });
  }

  /// Embedding H_n -> H_m (m >= n); new coordinates are exact zeros.
  ModeVector padded(std::size_t m) const {
    if (m < size()) throw std::invalid_argument("ModeVector::padded: target smaller than vector");
    ModeVector out(m);
    std::copy(coeffs_.begin(), coeffs_.end(), out.coeffs_.begin());
    return out;
  }

  /// Orthogonal projection pi_m onto the first m modes.
  ModeVector projected(std::size_t m) const {
    if (m > size()) throw std::invalid_argument("ModeVector::projected: target larger than vector");
    return ModeVector(std::vector<double>(coeffs_.begin(), coeffs_.begin() + static_cast<std::ptrdiff_t>(m)));
  }

  ModeVector& operator+=(const ModeVector& o) {
    check_same(o);
    for (std::size_t i = 0; i < size(); ++i) coeffs_[i] += o.coeffs_[i];
    return *this;
  }
  ModeVector& operator-=(const ModeVector& o) {
    check_same(o);
    for (std::size_t i = 0; i < size(); ++i) coeffs_[i] -= o.coeffs_[i];
    return *this;
  }
  ModeVector& operator*=(double s) noexcept {
    for (double& c : coeffs_) c *= s;
    return *this;
  }

  friend ModeVector operator+(ModeVector a, const ModeVector& b) { return a += b; }
  friend ModeVector operator-(ModeVector a, const ModeVector& b) { return a -= b; }
  friend ModeVector operator*(ModeVector a, double s) { return a *= s; }
  friend ModeVector operator*(double s, ModeVector a) { return a *= s; }

  friend bool operator==(const ModeVector&, const ModeVector&) = default;

  friend double dot(const ModeVector& a, const ModeVector& b) {
    a.check_same(b);
    double s = 0.0;
    for (std::size_t i = 0; i < a.size(); ++i) s += a.coeffs_[i] * b.coeffs_[i];
    return s;
  }

 private:
  void check_same(const ModeVector& o) const {
    if (o.size() != size()) {
      throw std::invalid_argument("ModeVector: length mismatch (" + std::to_string(size()) +
                                  " vs " + std::to_string(o.size()) + ")");
    }
  }

  std::vector<double> coeffs_;
};

/// ||a - b||^2 where the shorter vector is implicitly zero-padded.
inline double padded_squared_distance(std::span<const double> a, std::span<const double> b) noexcept {
  const std::size_t common = std::min(a.size(), b.size());
  double s = 0.0;
  for (std::size_t i = 0; i < common; ++i) {
    const double d = a[i] - b[i];
    s += d * d;
  }
  for (std::size_t i = common; i < a.size(); ++i) s += a[i] * a[i];
  for (std::size_t i = common; i < b.size(); ++i) s += b[i] * b[i];
  return s;
}

}  // namespace spdelab
