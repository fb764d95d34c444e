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

#include <sstream>

#include "spdelab/study.hpp"

using namespace spdelab;

namespace {

json canonical() {
  std::ifstream in(std::string(SPDELAB_SOURCE_DIR) + "/configs/smoke.json");
  json j;
  in >> j;
  return j;
}

template <class Fn>
Hypothesis violation_of(Fn&& fn) {
  try {
    fn();
  } catch (const HypothesisViolation& e) {
    return e.which();
  }
  FAIL("no hypothesis violation raised");
  return Hypothesis::kTraceCondition;
}

}  // namespace

TEST_CASE("configuration round-trips through JSON") {
  const StudyConfig c = config_from_json(canonical());
  const StudyConfig d = config_from_json(to_json(c));
  CHECK(c == d);
  CHECK(to_json(c) == to_json(d));
  CHECK(c.op.build().eigenvalue(2) == 9.0);
  CHECK(c.drift.time_mod == TimeModulation::kCosine);
}

TEST_CASE("explicit operator and initial data round-trip") {
  json j = canonical();
  j["operator"] = {{"kind", "explicit"}, {"eigenvalues", {1.0, 3.0, 7.0, 8.0, 9.0, 10.0, 11.0, 12.0, 13.0, 14.0, 15.0, 16.0, 17.0, 18.0, 19.0, 20.0}}};
  j["initial"] = {{"profile", "explicit"}, {"values", {1.0, 0.5}}};
  const StudyConfig c = config_from_json(j);
  CHECK(c.op.n_max == 16);
  CHECK(config_from_json(to_json(c)) == c);
}

TEST_CASE("canonical configuration satisfies every hypothesis") {
  const StudyConfig c = config_from_json(canonical());
  CHECK(check_hypotheses(c) == doctest::Approx(0.08225));
  for (const auto& row : hypothesis_table(c)) CHECK(row.holds);
  std::ostringstream os;
  print_hypotheses(c, os);
  CHECK(os.str().find("x in D(A)") != std::string::npos);
}

TEST_CASE("epsilon 0.7 fails the rate hypothesis") {
  json j = canonical();
  j["drift"]["epsilon"] = 0.7;
  j["rate_params"]["epsilon"] = 0.7;
  const StudyConfig c = config_from_json(j);
  CHECK(violation_of([&] { check_hypotheses(c); }) == Hypothesis::kNuPositive);
  try {
    check_hypotheses(c);
  } catch (const HypothesisViolation& e) {
    CHECK(std::string(e.what()).find("nu <= 0") != std::string::npos);
  }
}

TEST_CASE("q = 2 initial data is outside the domain") {
  json j = canonical();
  j["initial"]["q"] = 2.0;
  CHECK(violation_of([&] { check_hypotheses(config_from_json(j)); }) == Hypothesis::kInitialInDomain);
}

TEST_CASE("alpha = 1/2 breaks the trace condition for the heat operator") {
  json j = canonical();
  j["rate_params"]["alpha"] = 0.5;
  const StudyConfig c = config_from_json(j);
  CHECK(violation_of([&] { check_hypotheses(c); }) == Hypothesis::kTraceCondition);
  bool reported = false;
  for (const auto& row : hypothesis_table(c)) reported = reported || (!row.holds && row.verdict == "trace condition fails");
  CHECK(reported);
}

TEST_CASE("structural errors are configuration errors") {
  json j = canonical();
  j["study"]["levels"] = json::array();
  CHECK_THROWS_AS(check_study_shape(config_from_json(j)), ConfigError);

  j = canonical();
  j["rate_params"]["beta"] = 0.25;
  CHECK_THROWS_AS(config_from_json(j), ConfigError);

  j = canonical();
  j["drift"]["kind"] = "cubic";
  CHECK_THROWS_AS(config_from_json(j), ConfigError);

  j = canonical();
  j["noise"]["n_modes"] = 1000;
  CHECK_THROWS_AS(config_from_json(j), ConfigError);

  j = canonical();
  j["study"]["M"] = "many";
  CHECK_THROWS_AS(config_from_json(j), ConfigError);

  j = canonical();
  j["study"]["levels"] = {2, 9};
  CHECK_THROWS_AS(check_study_shape(config_from_json(j)), ConfigError);

  CHECK_THROWS_AS(load_config("/nonexistent/config.json"), ConfigError);
}

TEST_CASE("temporal report is byte-identical across runs") {
  const StudyConfig c = config_from_json(canonical());
  const double nu = check_hypotheses(c);
  std::ostringstream a, b;
  write_convergence_csv(a, run_temporal(c, nu));
  StudyConfig c4 = c;
  c4.study.workers = 4;
  write_convergence_csv(b, run_temporal(c4, nu));
  CHECK(a.str() == b.str());
  CHECK(a.str().rfind("resolution,delta,n_modes,m_paths,err2_mean,err2_stderr\n", 0) == 0);
}

TEST_CASE("summary carries the fit and the verdict") {
  const StudyConfig c = config_from_json(canonical());
  const auto rep = run_temporal(c, check_hypotheses(c));
  const json s = convergence_summary(rep);
  for (const char* key : {"slope", "intercept", "r2", "nu_theory", "pass"}) CHECK(s.contains(key));
  CHECK(s["pass"].get<bool>() == rep.pass());
  CHECK(plot_script(rep).find("report.csv") != std::string::npos);
}

TEST_CASE("increment report maps onto the convergence layout") {
  StudyConfig c = config_from_json(canonical());
  c.study.kind = "increment";
  const auto inc = run_increment(c);
  const auto rep = increment_as_convergence(inc, c.study.n, c.study.paths);
  REQUIRE(rep.rows.size() == inc.rows.size());
  CHECK(rep.rows[0].err2_mean == inc.rows[0].statistic);
}

TEST_CASE("drift validation suite from configuration") {
  const StudyConfig c = config_from_json(canonical());
  const auto v = validate_drift(c.drift, c.op.build(), 2000, 1, 1.0);
  CHECK(v.reports.size() == 4);
  CHECK(v.pass());
}
