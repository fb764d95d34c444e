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

#include <cstddef>
#include <stdexcept>
#include <string>

namespace spdelab {

// Preconditions on arguments are reported with std::invalid_argument. The
// types below carry extra structure the CLI maps to distinct exit codes.

/// The rate-theorem hypotheses a configuration can violate.
enum class Hypothesis {
  kTraceCondition,    // sum_i lambda_i^{-(1-alpha)} < inf
  kWeightConstraint,  // 2 beta / (2 - eps) >= 1 - alpha
  kNuPositive,        // nu > 0
  kNuBelowHalf,       // nu < 1/2
  kInitialInDomain,   // x in D(A)
};

inline const char* hypothesis_name(Hypothesis h) {
  switch (h) {
    case Hypothesis::kTraceCondition: return "trace condition sum lambda_i^-(1-alpha) < inf fails";
    case Hypothesis::kWeightConstraint: return "2*beta/(2-eps) >= 1-alpha fails";
    case Hypothesis::kNuPositive: return "nu <= 0";
    case Hypothesis::kNuBelowHalf: return "nu >= 1/2";
    case Hypothesis::kInitialInDomain: return "x not in D(A)";
  }
  return "unknown hypothesis";
}

class HypothesisViolation : public std::runtime_error {
 public:
  HypothesisViolation(Hypothesis which, const std::string& detail)
      : std::runtime_error(std::string(hypothesis_name(which)) + ": " + detail), which_(which) {}
  Hypothesis which() const noexcept { return which_; }

 private:
  Hypothesis which_;
};

/// A simulated state left the finite reals.
class NonFiniteState : public std::runtime_error {
 public:
  NonFiniteState(std::size_t step, const std::string& where)
      : std::runtime_error(where + ": non-finite state at step " + std::to_string(step)), step_(step) {}
  std::size_t step() const noexcept { return step_; }

 private:
  std::size_t step_;
};

}  // namespace spdelab
