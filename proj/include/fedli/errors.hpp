/*
 * Copyright 2026 The fedli Authors.
 * Licensed under the Apache License, Version 2.0 (the "License");
 * you may not use this file except in compliance with the License.
 * You may obtain a copy of the License at
 *
 *     https://www.apache.org/licenses/LICENSE-2.0
 *
 * Unless required by applicable law or agreed to in writing, software
 * distributed under the License is distributed on an "AS IS" BASIS,
 * WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
 * See the License for the specific language governing permissions and
 * limitations under the License.
 */

#ifndef FEDLI_ERRORS_HPP_
#define FEDLI_ERRORS_HPP_

#include <stdexcept>
#include <string>

namespace fedli {

// Base for every error the library raises.
class Error : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

// Invalid configuration: dimension mismatches, out-of-range parameters,
// infeasible partitions, unknown presets.
class ConfigError : public Error {
 public:
  using Error::Error;
};

// A round could not be completed, e.g. no client returned anything.
class ProtocolError : public Error {
 public:
  using Error::Error;
};

// Malformed input data (empty batches, bad files, bad labels).
class InputError : public Error {
 public:
  using Error::Error;
};

// Non-finite values escaped a public operation.
class NumericError : public Error {
 public:
  using Error::Error;
};

}  // namespace fedli

#endif  // FEDLI_ERRORS_HPP_
