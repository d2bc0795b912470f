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

#include "pnpcs/denoiser.hpp"

#include <cmath>
#include <cstdio>
#include <ostream>
#include <stdexcept>
#include <utility>

#include <json.hpp>

#include "pnpcs/numeric.hpp"
#include "pnpcs/rng.hpp"

namespace pnpcs {

AdaptiveDenoiser::AdaptiveDenoiser(GmmModel model, double sigma,
                                   Eigen::Index signal_length)
    : model_(std::move(model)),
      shrink_(model_, sigma),
      indexer_(signal_length, model_.patch_length()) {}

AdaptiveDenoiser::AdaptiveDenoiser(GmmModel model, ShrinkageSet shrink,
                                   Eigen::Index signal_length)
    : model_(std::move(model)),
      shrink_(std::move(shrink)),
      indexer_(signal_length, model_.patch_length()) {
  model_.validate();
  if (shrink_.patch_length() != model_.patch_length() ||
      shrink_.num_components() != model_.num_components())
    throw std::invalid_argument("denoiser: shrinkage set does not match model");
}

Eigen::VectorXd AdaptiveDenoiser::apply(const Eigen::VectorXd& z) const {
  const Eigen::Index n = indexer_.signal_length();
  const Eigen::Index p = indexer_.patch_length();
  if (z.size() != n)
    throw std::invalid_argument("denoise: signal length mismatch");

  const Eigen::MatrixXd patches = indexer_.extract_all(z);          // P x N
  const Eigen::MatrixXd beta = responsibilities_all(model_, shrink_, patches);

  Eigen::MatrixXd denoised = Eigen::MatrixXd::Zero(p, n);
  for (int j = 0; j < model_.num_components(); ++j) {
    Eigen::MatrixXd component =
        shrink_.shrinkage(j) * (patches.colwise() - model_.means[j]);
    component.colwise() += model_.means[j];
    denoised.noalias() += component * beta.row(j).asDiagonal();
  }
  return indexer_.scatter_all(denoised) / static_cast<double>(p);
}

void FrozenCoefficients::validate() const {
  if (b.rows() < 1 || b.cols() < 1)
    throw std::invalid_argument("frozen coefficients: empty table");
  if ((b.array() < 0.0).any())
    throw std::invalid_argument("frozen coefficients: negative entry");
  for (Eigen::Index i = 0; i < b.rows(); ++i)
    if (std::abs(b.row(i).sum() - 1.0) > 1e-12)
      throw std::invalid_argument("frozen coefficients: row does not sum to 1");
}

FrozenCoefficients freeze_coefficients(const AdaptiveDenoiser& d,
                                       const Eigen::VectorXd& surrogate) {
  const Eigen::MatrixXd patches = d.indexer().extract_all(surrogate);
  FrozenCoefficients out;
  out.b = responsibilities_all(d.model(), d.shrinkage(), patches).transpose();
  out.surrogate_hash = hash_samples(surrogate);
  return out;
}

FrozenCoefficients uniform_coefficients(const GmmModel& model,
                                        Eigen::Index signal_length) {
  FrozenCoefficients out;
  out.b = model.weights.transpose().replicate(signal_length, 1);
  return out;
}

void write_coefficients_csv(std::ostream& out, const FrozenCoefficients& b) {
  out << "# frozen_at_iteration " << b.frozen_at_iteration << "\n";
  out << "# surrogate_hash " << b.surrogate_hash << "\n";
  out << "patch";
  for (Eigen::Index j = 0; j < b.b.cols(); ++j) out << ",b" << j;
  out << "\n";
  char buf[40];
  for (Eigen::Index i = 0; i < b.b.rows(); ++i) {
    out << i;
    for (Eigen::Index j = 0; j < b.b.cols(); ++j) {
      std::snprintf(buf, sizeof(buf), "%.17g", b.b(i, j));
      out << "," << buf;
    }
    out << "\n";
  }
}

FrozenDenoiser::FrozenDenoiser(const AdaptiveDenoiser& d,
                               FrozenCoefficients coefficients)
    : indexer_(d.indexer()), coefficients_(std::move(coefficients)) {
  const Eigen::Index n = indexer_.signal_length();
  const Eigen::Index p = indexer_.patch_length();
  if (!indexer_.divides())
    throw std::invalid_argument(
        "frozen denoiser requires the signal length to be a multiple of the "
        "patch length");
  coefficients_.validate();
  const int k = d.model().num_components();
  if (coefficients_.b.rows() != n || coefficients_.b.cols() != k)
    throw std::invalid_argument("frozen coefficients: table shape mismatch");

  // Per-patch blend sum_j b_ij C_j and the mean contribution
  // sum_j b_ij (I - C_j) mu_j, both fixed from here on.
  Eigen::MatrixXd mean_terms(p, k);
  for (int j = 0; j < k; ++j)
    mean_terms.col(j) =
        d.model().means[j] - d.shrinkage().shrinkage(j) * d.model().means[j];

  blends_.reserve(n);
  for (Eigen::Index i = 0; i < n; ++i) {
    Eigen::MatrixXd blend = Eigen::MatrixXd::Zero(p, p);
    for (int j = 0; j < k; ++j)
      blend += coefficients_.b(i, j) * d.shrinkage().shrinkage(j);
    blends_.push_back(std::move(blend));
  }
  const Eigen::MatrixXd offsets =
      mean_terms * coefficients_.b.transpose();  // P x N
  offset_ = indexer_.scatter_all(offsets) / static_cast<double>(p);
}

Eigen::VectorXd FrozenDenoiser::apply_linear(const Eigen::VectorXd& z) const {
  const Eigen::Index n = indexer_.signal_length();
  const Eigen::Index p = indexer_.patch_length();
  if (z.size() != n)
    throw std::invalid_argument("frozen denoise: signal length mismatch");
  const Eigen::MatrixXd patches = indexer_.extract_all(z);
  Eigen::MatrixXd denoised(p, n);
  for (Eigen::Index i = 0; i < n; ++i)
    denoised.col(i).noalias() = blends_[i] * patches.col(i);
  return indexer_.scatter_all(denoised) / static_cast<double>(p);
}

Eigen::VectorXd FrozenDenoiser::apply(const Eigen::VectorXd& z) const {
  return apply_linear(z) + offset_;
}

Eigen::MatrixXd FrozenDenoiser::materialize() const {
  const Eigen::Index n = indexer_.signal_length();
  const Eigen::Index p = indexer_.patch_length();
  Eigen::MatrixXd w = Eigen::MatrixXd::Zero(n, n);
  for (Eigen::Index i = 0; i < n; ++i)
    for (Eigen::Index a = 0; a < p; ++a)
      for (Eigen::Index b = 0; b < p; ++b)
        w((i + a) % n, (i + b) % n) += blends_[i](a, b);
  return w / static_cast<double>(p);
}

Eigen::VectorXd denoise_frozen(const AdaptiveDenoiser& d,
                               const FrozenCoefficients& b,
                               const Eigen::VectorXd& z) {
  return FrozenDenoiser(d, b).apply_linear(z);
}

Eigen::MatrixXd materialize_w(const AdaptiveDenoiser& d,
                              const FrozenCoefficients& b) {
  return FrozenDenoiser(d, b).materialize();
}

std::string ContractivityReport::to_json() const {
  nlohmann::json j;
  j["lambda_max"] = lambda_max;
  j["iterations"] = iterations;
  j["residual"] = residual;
  j["converged"] = converged;
  j["pass"] = pass;
  return j.dump(2);
}

ContractivityReport verify_contractivity(const FrozenDenoiser& frozen,
                                         std::uint64_t seed, double rq_tol,
                                         int max_iters) {
  const Eigen::Index n = frozen.signal_length();
  rng::Stream stream(rng::derive_seed(seed, rng::Purpose::kPowerIteration));
  Eigen::VectorXd v = stream.normal_vector(n).normalized();

  ContractivityReport report;
  double rho_prev = 0.0;
  for (int it = 1; it <= max_iters; ++it) {
    const Eigen::VectorXd w = frozen.apply_linear(v);
    const double rho = v.dot(w);
    report.lambda_max = rho;
    report.iterations = it;
    report.residual = (w - rho * v).norm();
    if (it > 1 && std::abs(rho - rho_prev) < rq_tol) {
      report.converged = true;
      break;
    }
    rho_prev = rho;
    const double norm = w.norm();
    if (norm == 0.0) {  // operator annihilated the iterate: spectrum at 0
      report.lambda_max = 0.0;
      report.residual = 0.0;
      report.converged = true;
      break;
    }
    v = w / norm;
  }
  report.pass = report.converged && (report.lambda_max + report.residual < 1.0);
  return report;
}

ContractivityReport verify_contractivity(const AdaptiveDenoiser& d,
                                         const FrozenCoefficients& b,
                                         std::uint64_t seed) {
  return verify_contractivity(FrozenDenoiser(d, b), seed);
}

}  // namespace pnpcs
