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

#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include "doctest.h"

#include <cmath>
#include <numbers>
#include <vector>

#include "spdelab/spectral.hpp"

using namespace spdelab;

TEST_CASE("heat operator eigenvalues are i^2") {
  const auto op = make_heat_operator(3);
  REQUIRE(op.n_max() == 3);
  CHECK(op.eigenvalue(0) == 1.0);
  CHECK(op.eigenvalue(1) == 4.0);
  CHECK(op.eigenvalue(2) == 9.0);
  CHECK(make_heat_operator(128).eigenvalue(127) == 16384.0);
}

TEST_CASE("operator construction rejects bad spectra") {
  CHECK_THROWS_AS(SpectralOperator::power_law(0, 2.0), std::invalid_argument);
  CHECK_THROWS_AS(SpectralOperator::power_law(4, 0.0), std::invalid_argument);
  CHECK_THROWS_AS(SpectralOperator::from_eigenvalues({}), std::invalid_argument);
  CHECK_THROWS_AS(SpectralOperator::from_eigenvalues({1.0, -2.0}), std::invalid_argument);
  CHECK_THROWS_AS(SpectralOperator::from_eigenvalues({4.0, 1.0}), std::invalid_argument);
  CHECK_NOTHROW(SpectralOperator::from_eigenvalues({1.0, 1.0, 3.0}));
}

TEST_CASE("truncation keeps the leading eigenvalues") {
  const auto op = SpectralOperator::power_law(10, 1.5);
  const auto t = op.truncated(4);
  REQUIRE(t.n_max() == 4);
  for (std::size_t i = 0; i < 4; ++i) CHECK(t.eigenvalue(i) == op.eigenvalue(i));
  CHECK_THROWS(op.truncated(11));
}

TEST_CASE("semigroup scales each coefficient by exp(-lambda t)") {
  const auto op = make_heat_operator(2);
  const auto y = semigroup_apply(op, std::log(2.0), ModeVector{1.0, 1.0});
  CHECK(y[0] == doctest::Approx(0.5).epsilon(1e-15));
  CHECK(y[1] == doctest::Approx(0.0625).epsilon(1e-15));
  CHECK(semigroup_apply(op, 0.0, ModeVector{3.0, -2.0}) == ModeVector{3.0, -2.0});
}

TEST_CASE("semigroup property e^{sA} e^{tA} = e^{(s+t)A}") {
  const auto op = SpectralOperator::power_law(16, 2.0);
  ModeVector v(16);
  for (std::size_t i = 0; i < 16; ++i) v[i] = std::cos(static_cast<double>(i));
  for (double s : {0.0, 0.01, 0.3}) {
    for (double t : {0.0, 0.02, 0.7}) {
      const auto a = semigroup_apply(op, s, semigroup_apply(op, t, v));
      const auto b = semigroup_apply(op, s + t, v);
      for (std::size_t i = 0; i < 16; ++i) CHECK(a[i] == doctest::Approx(b[i]).epsilon(1e-13));
    }
  }
}

TEST_CASE("fractional powers") {
  const auto op = make_heat_operator(2);
  const auto y = frac_power_apply(op, -1.0, ModeVector{0.0, 1.0});
  CHECK(y[0] == 0.0);
  CHECK(y[1] == doctest::Approx(0.25));
  const auto z = frac_power_apply(op, 0.5, frac_power_apply(op, -0.5, ModeVector{2.0, 3.0}));
  CHECK(z[0] == doctest::Approx(2.0));
  CHECK(z[1] == doctest::Approx(3.0));
}

TEST_CASE("ou variance closed form and small-lambda limit") {
  CHECK(ou_variance(1.0, 1.0) == doctest::Approx((1.0 - std::exp(-2.0)) / 2.0).epsilon(1e-14));
  CHECK(ou_variance(1.0, 1.0) == doctest::Approx(0.4323324).epsilon(1e-7));
  // lambda -> 0 gives t; the naive formula loses all digits here
  CHECK(ou_variance(1e-14, 2.0) == doctest::Approx(2.0).epsilon(1e-12));
  CHECK(ou_variance(1e6, 1.0) == doctest::Approx(0.5e-6).epsilon(1e-12));
}

TEST_CASE("sinh(x)/x - 1 matches long-double reference") {
  for (double x : {1e-8, 1e-3, 0.0099, 0.0101, 0.5, 3.0, 40.0}) {
    const long double lx = x;
    const long double ref = std::sinh(lx) / lx - 1.0L;
    CHECK(sinhc_minus_one(x) == doctest::Approx(static_cast<double>(ref)).epsilon(1e-9));
  }
}

TEST_CASE("trace condition on power-law spectra") {
  const auto heat = make_heat_operator(128);
  const auto ok = check_trace_condition(heat, 0.45);
  CHECK(ok.determined);
  CHECK(ok.converges);
  // exponent 2, alpha 1/2: harmonic series
  const auto bad = check_trace_condition(heat, 0.5);
  CHECK(bad.determined);
  CHECK_FALSE(bad.converges);
  CHECK(std::isinf(bad.tail_bound));
  CHECK_THROWS(check_trace_condition(heat, 1.0));
}

TEST_CASE("trace tail bound dominates the true tail") {
  // independent oracle: brute-force tail summation far beyond the truncation
  const auto op = make_heat_operator(64);
  const double alpha = 0.3;
  const auto r = check_trace_condition(op, alpha);
  double tail = 0.0;
  for (int i = 65; i < 2000000; ++i) tail += std::pow(static_cast<double>(i), -2.0 * (1.0 - alpha));
  CHECK(r.tail_bound >= tail);
  CHECK(r.tail_bound <= 1.2 * tail + 1e-3);
}

TEST_CASE("explicit spectra give no trace verdict") {
  const auto op = SpectralOperator::from_eigenvalues({1.0, 2.0, 3.0});
  const auto r = check_trace_condition(op, 0.5);
  CHECK_FALSE(r.determined);
  CHECK(r.partial_sum == doctest::Approx(1.0 + std::pow(2.0, -0.5) + std::pow(3.0, -0.5)));
}

TEST_CASE("smoothing and increment norms match their scalar suprema") {
  const auto op = make_heat_operator(200);
  for (double gamma : {0.25, 0.5, 0.9}) {
    for (double t : {0.01, 0.1}) {
      // sup_i lambda^gamma e^{-lambda t} <= (gamma / (e t))^gamma
      const double envelope = std::pow(gamma / (std::numbers::e * t), gamma);
      CHECK(smoothing_norm(op, gamma, t) <= envelope * (1.0 + 1e-12));
      CHECK(smoothing_norm(op, gamma, t) >= 0.5 * envelope);
      // lambda^{-gamma} (1 - e^{-lambda t}) <= t^gamma
      CHECK(increment_norm(op, gamma, t) <= std::pow(t, gamma) * (1.0 + 1e-12));
    }
  }
}

TEST_CASE("exponential is globally theta-Hoelder with constant one") {
  CHECK(exp_holder_constant(0.3) == 1.0);
  CHECK_THROWS(exp_holder_constant(1.5));
  double worst = 0.0;
  for (double x = 0.0; x <= 6.0; x += 0.05) {
    for (double y = x + 0.01; y <= 6.0; y += 0.05) {
      for (double theta : {0.1, 0.5, 0.9}) {
        worst = std::max(worst, std::abs(std::exp(-x) - std::exp(-y)) / std::pow(y - x, theta));
      }
    }
  }
  CHECK(worst <= 1.0);
}

TEST_CASE("sine rendering of the first mode") {
  const std::vector<double> xi{0.0, std::numbers::pi / 2.0};
  const auto u = render_sine_basis(ModeVector{1.0, 0.0}, xi);
  CHECK(u[0] == doctest::Approx(0.0));
  CHECK(u[1] == doctest::Approx(std::sqrt(2.0 / std::numbers::pi)));
}
