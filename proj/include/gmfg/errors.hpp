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

#include <stdexcept>
#include <string>

namespace gmfg {

class Error : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

// Operands of incompatible sizes.
class DimensionError : public Error {
 public:
  using Error::Error;
};

// A metric asked for on a space whose embedding it does not support.
class GeometryError : public Error {
 public:
  using Error::Error;
};

class ConvergenceError : public Error {
 public:
  using Error::Error;
};

class ConfigError : public Error {
 public:
  using Error::Error;
};

// Invalid value handed to a model or simulator (bad action, off-grid
// empirical measure, non-normalized distribution, ...).
class InvalidInput : public Error {
 public:
  using Error::Error;
};

}  // namespace gmfg
