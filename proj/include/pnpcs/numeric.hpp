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

#ifndef PNPCS_NUMERIC_HPP
#define PNPCS_NUMERIC_HPP

#include <cmath>
#include <cstdint>
#include <limits>

#include <Eigen/Core>

namespace pnpcs {

// log(sum(exp(v))) with max subtraction. -inf entries are allowed and
// contribute nothing; an all -inf input returns -inf.
inline double log_sum_exp(const Eigen::VectorXd& v) {
  const double m = v.maxCoeff();
  if (!std::isfinite(m)) return m;
  double acc = 0.0;
  for (Eigen::Index i = 0; i < v.size(); ++i) acc += std::exp(v[i] - m);
  return m + std::log(acc);
}

// exp(v - log_sum_exp(v)): a probability vector. Invariant under adding a
// common constant to every entry, which is what makes responsibilities
// stable under rescaling of all densities.
inline Eigen::VectorXd softmax_from_log(const Eigen::VectorXd& v) {
  const double lse = log_sum_exp(v);
  Eigen::VectorXd out(v.size());
  for (Eigen::Index i = 0; i < v.size(); ++i) out[i] = std::exp(v[i] - lse);
  return out;
}

// FNV-1a over the raw bytes of the samples; used for provenance records.
inline std::uint64_t hash_samples(const Eigen::VectorXd& v) {
  std::uint64_t h = 0xcbf29ce484222325ULL;
  const auto* bytes = reinterpret_cast<const unsigned char*>(v.data());
  const std::size_t n = static_cast<std::size_t>(v.size()) * sizeof(double);
  for (std::size_t i = 0; i < n; ++i) {
    h ^= bytes[i];
    h *= 0x100000001b3ULL;
  }
  return h;
}

}  // namespace pnpcs

#endif  // PNPCS_NUMERIC_HPP
