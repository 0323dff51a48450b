// Copyright 2026 The GMFG Lab Authors
//
// Licensed under the Apache License, Version 2.0 (the "License");
// you may not use this file except in compliance with the License.
// You may obtain a copy of the License at
//
//      http://www.apache.org/licenses/LICENSE-2.0
//
// Unless required by applicable law or agreed to in writing, software
// distributed under the License is distributed on an "AS IS" BASIS,
// WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
// See the License for the specific language governing permissions and
// limitations under the License.

#pragma once

#include <cmath>
#include <string>

#include "gmfg/errors.hpp"

namespace gmfg {

struct StepSchedule {
  enum class Kind { kPolynomial, kConstant };

  Kind kind = Kind::kConstant;
  double h = 0.7;
  double eta = 0.01;

  static StepSchedule Polynomial(double h) { return {Kind::kPolynomial, h, 0.0}; }
  static StepSchedule Constant(double eta) { return {Kind::kConstant, 0.7, eta}; }

  void Validate() const {
    if (kind == Kind::kPolynomial && !(h > 0.5 && h < 1.0)) {
      throw ConfigError("schedule: polynomial exponent h must lie in (1/2, 1)");
    }
    if (kind == Kind::kConstant && !(eta > 0.0 && eta <= 1.0)) {
      throw ConfigError("schedule: constant eta must lie in (0, 1]");
    }
  }

  // beta_l
  double operator()(long l) const {
    return kind == Kind::kConstant ? eta : std::pow(static_cast<double>(l) + 1.0, -h);
  }
};

inline const char* ToString(StepSchedule::Kind k) {
  return k == StepSchedule::Kind::kConstant ? "constant" : "polynomial";
}

inline StepSchedule::Kind ParseScheduleKind(const std::string& s) {
  if (s == "constant") return StepSchedule::Kind::kConstant;
  if (s == "polynomial") return StepSchedule::Kind::kPolynomial;
  throw ConfigError("unknown schedule kind '" + s + "'");
}

}  // namespace gmfg
