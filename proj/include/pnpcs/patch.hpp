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

#ifndef PNPCS_PATCH_HPP
#define PNPCS_PATCH_HPP

#include <utility>

#include <Eigen/Core>

#include "pnpcs/signal.hpp"

namespace pnpcs {

// Circular patch algebra. A signal of length N has exactly N patches of
// length P, one starting at every sample, with wrap-around at the end.
// Every sample therefore belongs to exactly P patches, which is what the
// adjoint and the tight-frame identity below rely on.
class PatchIndexer {
 public:
  // Requires 1 <= patch_length <= signal_length.
  PatchIndexer(Eigen::Index signal_length, Eigen::Index patch_length);

  Eigen::Index signal_length() const { return n_; }
  Eigen::Index patch_length() const { return p_; }
  bool divides() const { return n_ % p_ == 0; }

  // (z_i, ..., z_{i+P-1}) with indices mod N. 0-based start index.
  Eigen::VectorXd extract(const Eigen::VectorXd& z, Eigen::Index i) const;

  // Adds patch p into acc at positions (i + t) mod N; the exact adjoint of
  // extract.
  void scatter_add(Eigen::VectorXd& acc, Eigen::Index i,
                   const Eigen::VectorXd& patch) const;

  // All N patches as columns of a P x N matrix.
  Eigen::MatrixXd extract_all(const Eigen::VectorXd& z) const;

  // Sum of all patch columns back into a length-N vector (adjoint of
  // extract_all).
  Eigen::VectorXd scatter_all(const Eigen::MatrixXd& patches) const;

 private:
  Eigen::Index n_;
  Eigen::Index p_;
};

// Free-function forms used by callers that do not hold an indexer.
Eigen::VectorXd extract_patch(const Eigen::VectorXd& z, Eigen::Index i,
                              Eigen::Index patch_length);
void scatter_patch_adjoint(Eigen::VectorXd& acc, Eigen::Index i,
                           const Eigen::VectorXd& patch);

// Extends x circularly (repeating the leading samples) to the smallest
// length >= N divisible by patch_length. Returns the padded signal and the
// original length, for truncation after reconstruction.
std::pair<Signal, Eigen::Index> pad_to_multiple(const Signal& x,
                                                Eigen::Index patch_length);

}  // namespace pnpcs

#endif  // PNPCS_PATCH_HPP
