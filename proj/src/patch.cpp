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

#include "pnpcs/patch.hpp"

#include <stdexcept>

namespace pnpcs {

PatchIndexer::PatchIndexer(Eigen::Index signal_length, Eigen::Index patch_length)
    : n_(signal_length), p_(patch_length) {
  if (p_ < 1 || p_ > n_)
    throw std::invalid_argument("patch length must satisfy 1 <= P <= N");
}

Eigen::VectorXd PatchIndexer::extract(const Eigen::VectorXd& z,
                                      Eigen::Index i) const {
  if (z.size() != n_)
    throw std::invalid_argument("extract: signal length mismatch");
  if (i < 0 || i >= n_)
    throw std::invalid_argument("extract: start index out of range");
  Eigen::VectorXd out(p_);
  for (Eigen::Index t = 0; t < p_; ++t) out[t] = z[(i + t) % n_];
  return out;
}

void PatchIndexer::scatter_add(Eigen::VectorXd& acc, Eigen::Index i,
                               const Eigen::VectorXd& patch) const {
  if (acc.size() != n_)
    throw std::invalid_argument("scatter_add: accumulator length mismatch");
  if (patch.size() != p_)
    throw std::invalid_argument("scatter_add: patch length mismatch");
  if (i < 0 || i >= n_)
    throw std::invalid_argument("scatter_add: start index out of range");
  for (Eigen::Index t = 0; t < p_; ++t) acc[(i + t) % n_] += patch[t];
}

Eigen::MatrixXd PatchIndexer::extract_all(const Eigen::VectorXd& z) const {
  if (z.size() != n_)
    throw std::invalid_argument("extract_all: signal length mismatch");
  Eigen::MatrixXd out(p_, n_);
  for (Eigen::Index i = 0; i < n_; ++i)
    for (Eigen::Index t = 0; t < p_; ++t) out(t, i) = z[(i + t) % n_];
  return out;
}

Eigen::VectorXd PatchIndexer::scatter_all(const Eigen::MatrixXd& patches) const {
  if (patches.rows() != p_ || patches.cols() != n_)
    throw std::invalid_argument("scatter_all: patch matrix shape mismatch");
  Eigen::VectorXd acc = Eigen::VectorXd::Zero(n_);
  for (Eigen::Index i = 0; i < n_; ++i)
    for (Eigen::Index t = 0; t < p_; ++t) acc[(i + t) % n_] += patches(t, i);
  return acc;
}

Eigen::VectorXd extract_patch(const Eigen::VectorXd& z, Eigen::Index i,
                              Eigen::Index patch_length) {
  return PatchIndexer(z.size(), patch_length).extract(z, i);
}

void scatter_patch_adjoint(Eigen::VectorXd& acc, Eigen::Index i,
                           const Eigen::VectorXd& patch) {
  PatchIndexer(acc.size(), patch.size()).scatter_add(acc, i, patch);
}

std::pair<Signal, Eigen::Index> pad_to_multiple(const Signal& x,
                                                Eigen::Index patch_length) {
  if (patch_length < 1)
    throw std::invalid_argument("pad_to_multiple: patch length must be >= 1");
  const Eigen::Index n = x.samples.size();
  const Eigen::Index padded =
      ((n + patch_length - 1) / patch_length) * patch_length;
  Signal out;
  out.label = x.label;
  out.samples.resize(padded);
  out.samples.head(n) = x.samples;
  for (Eigen::Index i = n; i < padded; ++i)
    out.samples[i] = x.samples[i - n];  // circular: repeat leading samples
  return {std::move(out), n};
}

}  // namespace pnpcs
