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

#ifndef PNPCS_GMM_HPP
#define PNPCS_GMM_HPP

#include <cstdint>
#include <string>
#include <vector>

#include <Eigen/Cholesky>
#include <Eigen/Core>

#include "pnpcs/signal.hpp"

namespace pnpcs {

// Gaussian mixture over length-P patches: weights alpha_j, means mu_j and
// symmetric positive-definite covariances Sigma_j.
struct GmmModel {
  Eigen::VectorXd weights;                  // K, nonnegative, sums to 1
  std::vector<Eigen::VectorXd> means;       // K vectors of length P
  std::vector<Eigen::MatrixXd> covariances; // K matrices, P x P, SPD

  int num_components() const { return static_cast<int>(weights.size()); }
  Eigen::Index patch_length() const {
    return means.empty() ? 0 : means.front().size();
  }

  // Checks weight normalization (1e-12), covariance symmetry (1e-10 max
  // asymmetry) and positive definiteness. Throws std::invalid_argument.
  void validate() const;
};

struct EmConfig {
  int num_components = 10;
  int max_iters = 200;
  double loglik_rel_tol = 1e-7;
  // Floor on covariance eigenvalues. Non-positive means automatic:
  // 1e-6 times the mean per-sample patch variance of the training set.
  double reg_floor = 0.0;
  std::uint64_t seed = 0;
  enum class Init { kFarthestPoint } init = Init::kFarthestPoint;
};

struct FitReport {
  int iterations = 0;
  double final_log_likelihood = 0.0;        // mean per-patch log-likelihood
  std::vector<double> log_likelihood_history;
  int reseeded_components = 0;
  double reg_floor = 0.0;                   // the effective floor used
};

// Training patches are the columns of a P x n matrix.
using PatchMatrix = Eigen::MatrixXd;

// All fully interior overlapping patches (no circular wrap): N - P + 1
// columns. Throws if N < P.
PatchMatrix extract_training_patches(const Eigen::VectorXd& x,
                                     Eigen::Index patch_length);

// Expectation-maximization fit. The per-iteration training log-likelihood
// is non-decreasing; iteration stops at max_iters or when the relative
// improvement drops below loglik_rel_tol. A component that empties during
// an M-step is re-seeded from the highest-variance patch and counted in
// the report. Requires at least K patches.
GmmModel fit_em(const PatchMatrix& patches, const EmConfig& config,
                FitReport* report = nullptr);

// log p(v) under the mixture, via log-sum-exp.
double log_density(const GmmModel& model, const Eigen::VectorXd& v);

// Per-noise-level derived quantities for MMSE patch denoising at noise
// standard deviation sigma:
//   C_j = Sigma_j (Sigma_j + sigma^2 I)^{-1}   (symmetric, eigenvalues < 1)
// plus cached factorizations of (Sigma_j + sigma^2 I) for evaluating the
// noisy-patch densities. Immutable once built.
class ShrinkageSet {
 public:
  ShrinkageSet(const GmmModel& model, double sigma);

  double sigma() const { return sigma_; }
  int num_components() const { return static_cast<int>(shrinkages_.size()); }
  Eigen::Index patch_length() const {
    return shrinkages_.empty() ? 0 : shrinkages_.front().rows();
  }
  const Eigen::MatrixXd& shrinkage(int j) const { return shrinkages_[j]; }

  // log N(u; mu_j, Sigma_j + sigma^2 I).
  double log_noisy_density(const GmmModel& model, int j,
                           const Eigen::VectorXd& u) const;

  // Log densities for all components over the columns of U; K x n.
  Eigen::MatrixXd log_noisy_densities(const GmmModel& model,
                                      const PatchMatrix& u_cols) const;

  // Diagnostic factory with every C_j replaced by the identity (the
  // sigma -> 0 limit). Density evaluation is unavailable on the result.
  static ShrinkageSet identity_shrinkage(const GmmModel& model);

 private:
  ShrinkageSet() = default;

  double sigma_ = 0.0;
  std::vector<Eigen::MatrixXd> shrinkages_;       // C_j
  std::vector<Eigen::LLT<Eigen::MatrixXd>> llts_; // of Sigma_j + sigma^2 I
  std::vector<double> log_dets_;
  bool density_available_ = false;
};

// Posterior component probabilities beta(u): nonnegative, sum to 1.
// Computed in log space with max subtraction.
Eigen::VectorXd responsibilities(const GmmModel& model,
                                 const ShrinkageSet& shrink,
                                 const Eigen::VectorXd& u);

// Batched form over the columns of U; returns K x n with unit column sums.
Eigen::MatrixXd responsibilities_all(const GmmModel& model,
                                     const ShrinkageSet& shrink,
                                     const PatchMatrix& u_cols);

// Posterior mean of the clean patch given the noisy patch u:
//   sum_j beta_j(u) * (mu_j + C_j (u - mu_j)).
// For zero-mean components this is the pure shrinkage (sum_j beta_j C_j) u.
Eigen::VectorXd mmse_denoise_patch(const GmmModel& model,
                                   const ShrinkageSet& shrink,
                                   const Eigen::VectorXd& u);

// Eigendecomposition of one covariance, eigenvalues descending and
// eigenvectors orthonormal (as columns, in the same order).
struct ComponentSpectrum {
  Eigen::VectorXd eigenvalues;
  Eigen::MatrixXd eigenvectors;
};

std::vector<ComponentSpectrum> covariance_spectra(const GmmModel& model);

// CSV dump: component, eigen_index, eigenvalue, v0..v{P-1}. Eigen index 0
// is the largest eigenvalue.
void write_eigendump_csv(std::ostream& out, const GmmModel& model);

// Model persistence: one JSON document with format_version, K, P,
// weights[], means[][] and covariances[][][] (row-major). The reader
// validates all model invariants and rejects violations.
void save_model_json(const std::string& path, const GmmModel& model);
GmmModel load_model_json(const std::string& path);
std::string model_to_json(const GmmModel& model);
GmmModel model_from_json(const std::string& text);

}  // namespace pnpcs

#endif  // PNPCS_GMM_HPP
