// Copyright 2026 The FEDS Lab Authors. All Rights Reserved.
//
// Licensed under the Apache License, Version 2.0 (the "License");
// you may not use this file except in compliance with the License.
// You may obtain a copy of the License at
//
//    http://www.apache.org/licenses/LICENSE-2.0
//
// Unless required by applicable law or agreed to in writing, software
// distributed under the License is distributed on an "AS IS" BASIS,
// WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
// See the License for the specific language governing permissions and
// limitations under the License.

#pragma once

#include <stdexcept>
#include <string>

namespace feds {

class Error : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

// Word does not fit into the grid length capacity L.
class CapacityError : public Error {
 public:
  using Error::Error;
};

// Character outside the alphabet.
class EncodingError : public Error {
 public:
  using Error::Error;
};

// Malformed caller input (length mismatches, empty ranges).
class InputError : public Error {
 public:
  using Error::Error;
};

// Incompatible configuration: shapes, alphabets, hyperparameters.
class ConfigError : public Error {
 public:
  using Error::Error;
};

// Graph construction with incompatible operand shapes.
class ShapeError : public Error {
 public:
  using Error::Error;
};

// NaN or Inf produced or consumed by an op.
class NumericError : public Error {
 public:
  using Error::Error;
};

class IoError : public Error {
 public:
  using Error::Error;
};

}  // namespace feds
