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

#ifndef PNPCS_DENOISER_HPP
#define PNPCS_DENOISER_HPP

#include <cstdint>
#include <iosfwd>
#include <string>

#include <Eigen/Core>

#include "pnpcs/gmm.hpp"
#include "pnpcs/patch.hpp"

namespace pnpcs {

// Full-signal patch-averaging denoiser: extract all N circular patches,
// apply the MMSE patch estimator to each, scatter the results back through
// the adjoints and divide by P.
class AdaptiveDenoiser {
 public:
  AdaptiveDenoiser(GmmModel model, double sigma, Eigen::Index signal_length);
  AdaptiveDenoiser(GmmModel model, ShrinkageSet shrink,
                   Eigen::Index signal_length);

  Eigen::VectorXd apply(const Eigen::VectorXd& z) const;

  const GmmModel& model() const { return model_; }
  const ShrinkageSet& shrinkage() const { return shrink_; }
  const PatchIndexer& indexer() const { return indexer_; }
  double sigma() const { return shrink_.sigma(); }

 private:
  GmmModel model_;
  ShrinkageSet shrink_;
  PatchIndexer indexer_;
};

// The N x K table of per-patch mixture coefficients held fixed after the
// adaptive phase. Row i holds the coefficients for the patch starting at
// sample i; every row is nonnegative and sums to 1 within 1e-12.
struct FrozenCoefficients {
  Eigen::MatrixXd b;              // N x K, row-stochastic
  int frozen_at_iteration = -1;   // provenance; -1 when not from a solve
  std::uint64_t surrogate_hash = 0;

  void validate() const;  // throws std::invalid_argument on violation
};

// Coefficients evaluated on the surrogate's patches; row-stochastic by
// construction.
FrozenCoefficients freeze_coefficients(const AdaptiveDenoiser& d,
                                       const Eigen::VectorXd& surrogate);

// Uniform table with every row equal to the mixture weights; used when no
// surrogate is available.
FrozenCoefficients uniform_coefficients(const GmmModel& model,
                                        Eigen::Index signal_length);

// Audit dump: provenance as '#' comments, then one CSV row per patch.
void write_coefficients_csv(std::ostream& out, const FrozenCoefficients& b);

// Result of estimating the largest eigenvalue of the frozen operator by
// power iteration. pass requires convergence and
// lambda_max + residual < 1, i.e. the whole certified interval sits
// strictly below 1.
struct ContractivityReport {
  double lambda_max = 0.0;
  int iterations = 0;
  double residual = 0.0;
  bool converged = false;
  bool pass = false;
  std::string to_json() const;
};

// The denoiser with coefficients frozen: an affine map z -> W z + c where
//   W = (1/P) sum_i P_i^T (sum_j b_ij C_j) P_i
// and c collects the component-mean contributions fixed at freeze time.
// W is symmetric positive semidefinite and never materialized on the
// apply path; the per-patch blends sum_j b_ij C_j are precomputed.
// Requires N to be a multiple of P.
class FrozenDenoiser {
 public:
  FrozenDenoiser(const AdaptiveDenoiser& d, FrozenCoefficients coefficients);

  // W z (the linear part; exactly linear in z).
  Eigen::VectorXd apply_linear(const Eigen::VectorXd& z) const;

  // W z + c (the full frozen denoiser).
  Eigen::VectorXd apply(const Eigen::VectorXd& z) const;

  const Eigen::VectorXd& offset() const { return offset_; }
  const FrozenCoefficients& coefficients() const { return coefficients_; }
  Eigen::Index signal_length() const { return indexer_.signal_length(); }

  // Explicit N x N matrix equal to the operator of apply_linear.
  // Diagnostic only; keep N small.
  Eigen::MatrixXd materialize() const;

 private:
  PatchIndexer indexer_;
  FrozenCoefficients coefficients_;
  std::vector<Eigen::MatrixXd> blends_;  // per patch: sum_j b_ij C_j
  Eigen::VectorXd offset_;
};

// Convenience forms mirroring the class surface.
Eigen::VectorXd denoise_frozen(const AdaptiveDenoiser& d,
                               const FrozenCoefficients& b,
                               const Eigen::VectorXd& z);
Eigen::MatrixXd materialize_w(const AdaptiveDenoiser& d,
                              const FrozenCoefficients& b);

// Power iteration on the matrix-free frozen operator. W is symmetric
// p.s.d., so the spectral norm equals the largest eigenvalue. Converged
// when successive Rayleigh quotients differ by less than rq_tol, or after
// max_iters steps (reported with pass=false). The start vector is
// pseudo-random from the given seed.
ContractivityReport verify_contractivity(const FrozenDenoiser& frozen,
                                         std::uint64_t seed = 0x9e3779b9ULL,
                                         double rq_tol = 1e-10,
                                         int max_iters = 10000);
ContractivityReport verify_contractivity(const AdaptiveDenoiser& d,
                                         const FrozenCoefficients& b,
                                         std::uint64_t seed = 0x9e3779b9ULL);

}  // namespace pnpcs

#endif  // PNPCS_DENOISER_HPP
