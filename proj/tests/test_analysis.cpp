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
#include <random>

#include "spdelab/analysis.hpp"

using namespace spdelab;

namespace {

SchemeConfig base(std::size_t n) {
  SchemeConfig c;
  c.op = make_heat_operator(32);
  c.drift.time_mod = TimeModulation::kCosine;
  c.n = n;
  c.x0 = InitialData::power_decay(3.0);
  return c;
}

}  // namespace

TEST_CASE("nu for the canonical parameters") {
  const RateParams p{0.45, 0.5, 0.9};
  // (0.9 + min(1, 0.45 * 0.81)) / 2 + 0.45 - 1
  CHECK(nu_formula(p) == doctest::Approx(0.08225).epsilon(1e-12));
  CHECK(theoretical_nu(p) == doctest::Approx(0.08225).epsilon(1e-12));
}

TEST_CASE("nu gate rejects non-positive rates") {
  const RateParams p{0.49, 1.0, 0.7};
  CHECK(nu_formula(p) <= 0.0);
  try {
    theoretical_nu(p);
    FAIL("expected a violation");
  } catch (const HypothesisViolation& e) {
    CHECK(e.which() == Hypothesis::kNuPositive);
    CHECK(std::string(e.what()).find("nu <= 0") != std::string::npos);
  }
}

TEST_CASE("epsilon threshold for alpha = beta = 1/2") {
  // nu = (eps + eps^2/2)/2 - 1/2 vanishes at eps = sqrt(3) - 1
  const double eps0 = std::sqrt(3.0) - 1.0;
  CHECK(nu_formula({0.5, 0.5, eps0}) == doctest::Approx(0.0).epsilon(1e-12).scale(1.0));
  CHECK_THROWS_AS(theoretical_nu({0.5, 0.5, eps0 - 1e-3}), HypothesisViolation);
  CHECK(theoretical_nu({0.5, 0.5, eps0 + 1e-3}) > 0.0);
  CHECK(eps0 == doctest::Approx(0.732).epsilon(1e-3));
}

TEST_CASE("weight constraint is checked before nu") {
  // 2 beta / (2 - eps) = 0.1 / 1.5 < 1 - alpha
  const RateParams p{0.3, 0.05, 0.5};
  CHECK_FALSE(weight_constraint_holds(p));
  try {
    theoretical_nu(p);
    FAIL("expected a violation");
  } catch (const HypothesisViolation& e) {
    CHECK(e.which() == Hypothesis::kWeightConstraint);
  }
}

TEST_CASE("nu at or above one half is rejected") {
  const RateParams p{0.95, 2.0, 0.95};
  CHECK(nu_formula(p) >= 0.5);
  CHECK_THROWS_AS(theoretical_nu(p), HypothesisViolation);
}

TEST_CASE("fit_rate recovers exact power laws") {
  const std::vector<std::pair<double, double>> two{{0.1, 0.01}, {0.2, 0.04}};
  const RateFit f = fit_rate(two);
  CHECK(f.slope == doctest::Approx(2.0).epsilon(1e-12));
  CHECK(f.r2 == doctest::Approx(1.0));
  std::vector<std::pair<double, double>> pts;
  for (int l = 3; l < 9; ++l) {
    const double h = std::ldexp(1.0, -l);
    pts.emplace_back(h, 3.5 * std::pow(h, 0.37));
  }
  const RateFit g = fit_rate(pts);
  CHECK(g.slope == doctest::Approx(0.37).epsilon(1e-12));
  CHECK(g.intercept == doctest::Approx(std::log(3.5)).epsilon(1e-12));
  CHECK_THROWS(fit_rate(std::vector<std::pair<double, double>>{{0.1, 1.0}}));
  CHECK_THROWS(fit_rate(std::vector<std::pair<double, double>>{{0.1, 1.0}, {0.1, 2.0}}));
  CHECK_THROWS(fit_rate(std::vector<std::pair<double, double>>{{0.1, 0.0}, {0.2, 2.0}}));
}

TEST_CASE("fit_rate is invariant under rescaling the errors") {
  std::mt19937_64 rng(3);
  std::normal_distribution<double> noise(0.0, 0.05);
  std::vector<std::pair<double, double>> a, b;
  for (int l = 2; l < 10; ++l) {
    const double h = std::ldexp(1.0, -l);
    const double e = std::pow(h, 0.8) * std::exp(noise(rng));
    a.emplace_back(h, e);
    b.emplace_back(h, 7.0 * e);
  }
  CHECK(fit_rate(a).slope == doctest::Approx(fit_rate(b).slope).epsilon(1e-12));
  CHECK(fit_rate(a).r2 == doctest::Approx(fit_rate(b).r2).epsilon(1e-12));
}

TEST_CASE("strong error of a constant offset is T ||v||^2") {
  const NoiseLattice lat(1, 2.0, 3, 4);
  SchemeConfig c = base(3);
  c.horizon = 2.0;
  c.level = 3;
  const ModeVector v{0.5, -1.0, 2.0};
  Trajectory ref{c, {}}, approx{c, {}};
  for (std::size_t k = 0; k <= c.steps(); ++k) {
    ModeVector w{0.1 * static_cast<double>(k), 1.0, -3.0};
    approx.values.push_back(w);
    ref.values.push_back(w + v);
  }
  CHECK(path_strong_error(ref, approx, lat, 0) == doctest::Approx(2.0 * v.squared_norm()).epsilon(1e-14));
}

TEST_CASE("strong error pads missing modes with zeros") {
  const NoiseLattice lat(1, 1.0, 2, 4);
  SchemeConfig rc = base(3), ac = base(2);
  rc.level = ac.level = 2;
  Trajectory ref{rc, {}}, approx{ac, {}};
  for (std::size_t k = 0; k <= 4; ++k) {
    ref.values.push_back(ModeVector{1.0, 1.0, 3.0});
    approx.values.push_back(ModeVector{1.0, 1.0});
  }
  CHECK(path_strong_error(ref, approx, lat, 0) == doctest::Approx(9.0).epsilon(1e-14));
  CHECK_THROWS(path_strong_error(approx, ref, lat, 0));
}

TEST_CASE("off-grid interpolation is exact for the linear noise-free problem") {
  // without noise and drift both resolutions follow the semigroup exactly
  const NoiseLattice lat(1, 1.0, 8, 8, 0.0);
  SchemeConfig fine = base(8), coarse = base(8);
  fine.drift.amplitude = coarse.drift.amplitude = 0.0;
  fine.level = 8;
  coarse.level = 2;
  const Trajectory r = simulate_path(fine, lat, 0);
  const Trajectory a = simulate_path(coarse, lat, 0);
  CHECK(path_strong_error(r, a, lat, 0) < 1e-28);
}

TEST_CASE("strong error of the reference against itself is zero") {
  const NoiseLattice lat(4, 1.0, 6, 8);
  SchemeConfig c = base(8);
  c.level = 6;
  const Trajectory r = simulate_path(c, lat, 2);
  CHECK(path_strong_error(r, r, lat, 2) == 0.0);
}

TEST_CASE("decrease flag respects combined standard errors") {
  std::vector<ConvergenceRow> rows{{4, 0, 8, 10, 1.0, 0.1}, {5, 0, 8, 10, 0.5, 0.1}, {6, 0, 8, 10, 0.3, 0.1}};
  CHECK(strictly_decreasing(rows, 2.0).pass == false);
  rows[2].err2_mean = 0.1;
  CHECK(strictly_decreasing(rows, 2.0).pass);
}

TEST_CASE("accumulator merge is exact up to rounding and order-free in value") {
  std::mt19937_64 rng(8);
  std::normal_distribution<double> d(1.0, 2.0);
  MomentAccumulator all, a, b;
  for (int i = 0; i < 1000; ++i) {
    const double x = d(rng);
    all.add(x);
    (i < 300 ? a : b).add(x);
  }
  MomentAccumulator ab = a, ba = b;
  ab.merge(b);
  ba.merge(a);
  CHECK(ab.count() == 1000);
  CHECK(ab.mean() == doctest::Approx(all.mean()).epsilon(1e-13));
  CHECK(ab.variance() == doctest::Approx(all.variance()).epsilon(1e-12));
  CHECK(ba.variance() == doctest::Approx(all.variance()).epsilon(1e-12));
  MomentAccumulator empty;
  empty.merge(a);
  CHECK(empty.mean() == a.mean());
}

TEST_CASE("temporal study is bit-identical across worker counts in deterministic mode") {
  const NoiseLattice lat(17, 1.0, 8, 8);
  TemporalStudy st{base(8), {2, 3, 4, 5}, 8, 24};
  const auto r1 = temporal_convergence(st, lat, 0.08, ParallelOptions{1, true});
  const auto r4 = temporal_convergence(st, lat, 0.08, ParallelOptions{4, true});
  REQUIRE(r1.rows.size() == r4.rows.size());
  for (std::size_t j = 0; j < r1.rows.size(); ++j) {
    CHECK(r1.rows[j].err2_mean == r4.rows[j].err2_mean);
    CHECK(r1.rows[j].err2_stderr == r4.rows[j].err2_stderr);
  }
  CHECK(r1.fit.slope == r4.fit.slope);
  const auto rn = temporal_convergence(st, lat, 0.08, ParallelOptions{3, false});
  for (std::size_t j = 0; j < r1.rows.size(); ++j) {
    CHECK(rn.rows[j].err2_mean == doctest::Approx(r1.rows[j].err2_mean).epsilon(1e-12));
  }
}

TEST_CASE("temporal study reports fit and flags") {
  const NoiseLattice lat(23, 1.0, 9, 16);
  TemporalStudy st{base(16), {3, 4, 5, 6}, 9, 40};
  const auto r = temporal_convergence(st, lat, 0.08225);
  CHECK(r.rows.size() == 4);
  CHECK(r.rows[0].delta == doctest::Approx(0.125));
  CHECK(r.flags.size() == 3);
  CHECK(r.fit.slope > 0.0);
  CHECK_THROWS(temporal_convergence(TemporalStudy{base(16), {}, 9, 40}, lat, 0.1));
  CHECK_THROWS(temporal_convergence(TemporalStudy{base(16), {9}, 9, 40}, lat, 0.1));
  CHECK_THROWS(temporal_convergence(TemporalStudy{base(16), {3, 4}, 10, 40}, lat, 0.1));
}

TEST_CASE("spatial study fits against lambda_n") {
  const NoiseLattice lat(29, 1.0, 7, 32);
  SchemeConfig b = base(32);
  b.level = 7;
  const auto r = spatial_convergence(SpatialStudy{b, {2, 4, 8}, 32, 40}, lat, 0.08225);
  CHECK(r.fit_against == "lambda_n");
  CHECK(r.rows[1].n_modes == 4);
  CHECK(r.fit.slope < 0.0);
}

TEST_CASE("increment statistic with zero offset vanishes") {
  const NoiseLattice lat(31, 1.0, 8, 8);
  IncrementStudy st;
  st.base = base(8);
  st.levels = {3, 4, 5};
  st.offset_fraction = 0.0;
  st.paths = 10;
  const auto r = increment_statistic(st, lat, 0.45);
  for (const auto& row : r.rows) CHECK(row.statistic == 0.0);
  CHECK_FALSE(r.pass);
}

TEST_CASE("increment statistic shrinks with the step") {
  const NoiseLattice lat(37, 1.0, 10, 16);
  IncrementStudy st;
  st.base = base(16);
  st.levels = {4, 6, 8};
  st.paths = 60;
  const auto r = increment_statistic(st, lat, 0.45);
  REQUIRE(r.rows.size() == 3);
  CHECK(r.rows[0].statistic > r.rows[1].statistic);
  CHECK(r.rows[1].statistic > r.rows[2].statistic);
  CHECK(r.rows[0].argmax_t > 0.0);
  st.offset_fraction = 0.3;
  CHECK_THROWS(increment_statistic(st, lat, 0.45));
}
