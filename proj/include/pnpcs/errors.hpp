// Copyright 2026 The pnpcs Authors
//
// Licensed under the Apache License, Version 2.0 (the "License");
// you may not use this file except in compliance with the License.
// You may obtain a copy of the License at
//
//  http://www.apache.org/licenses/LICENSE-2.0
//
// Unless required by applicable law or agreed to in writing, software
// distributed under the License is distributed on an "AS IS" BASIS,
// WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
// See the License for the specific language governing permissions and
// limitations under the License.

#ifndef PNPCS_ERRORS_HPP
#define PNPCS_ERRORS_HPP

#include <stdexcept>
#include <string>

namespace pnpcs {

// Raised when a computation produces an unusable result (non-finite
// iterates, failed factorizations, non-convergence that cannot be
// reported in-band). Argument violations use std::invalid_argument.
class NumericalError : public std::runtime_error {
 public:
  explicit NumericalError(const std::string& what) : std::runtime_error(what) {}
};

}  // namespace pnpcs

#endif  // PNPCS_ERRORS_HPP
