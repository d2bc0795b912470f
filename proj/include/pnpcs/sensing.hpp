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

#ifndef PNPCS_SENSING_HPP
#define PNPCS_SENSING_HPP

#include <cstdint>

#include <Eigen/Core>

namespace pnpcs {

// Compressed measurements y = Phi x (+ noise). When the noise was
// simulated, the target SNR and the noise seed are recorded so the
// measurement can be regenerated exactly.
struct Measurement {
  Eigen::VectorXd y;
  double noise_snr_db = std::numeric_limits<double>::infinity();
  std::uint64_t noise_seed = 0;
};

// The M x N measurement map. The standard construction draws i.i.d.
// standard-normal entries and orthonormalizes the rows, which pins
// sigma_max(Phi^T Phi) to 1. Persist as (M, N, seed); the matrix is
// regenerated deterministically.
class SensingOperator {
 public:
  // Requires 1 <= m <= n. Throws NumericalError if orthonormalization
  // fails the ||Phi Phi^T - I||_max < 1e-10 check.
  static SensingOperator gaussian(Eigen::Index m, Eigen::Index n,
                                  std::uint64_t seed);

  // Square identity operator, for tests and diagnostics.
  static SensingOperator identity(Eigen::Index n);

  // Wraps an arbitrary matrix (no orthonormal-rows flag).
  static SensingOperator from_matrix(Eigen::MatrixXd phi);

  Eigen::Index rows() const { return phi_.rows(); }
  Eigen::Index cols() const { return phi_.cols(); }
  bool orthonormal_rows() const { return orthonormal_rows_; }
  std::uint64_t seed() const { return seed_; }
  const Eigen::MatrixXd& matrix() const { return phi_; }

  // y = Phi x.
  Measurement forward(const Eigen::VectorXd& x) const;

  // Phi^T u.
  Eigen::VectorXd adjoint(const Eigen::VectorXd& u) const;

  // Gradient of (1/2)||Phi x - y||^2: Phi^T (Phi x - y).
  Eigen::VectorXd data_gradient(const Eigen::VectorXd& x,
                                const Eigen::VectorXd& y) const;

  // Power-iteration estimate of sigma_max(Phi^T Phi); equals 1 for
  // orthonormal rows.
  double spectral_norm_gram(std::uint64_t seed = 0x5ca1ab1eULL,
                            double rq_tol = 1e-12,
                            int max_iters = 10000) const;

 private:
  explicit SensingOperator(Eigen::MatrixXd phi, bool orthonormal,
                           std::uint64_t seed)
      : phi_(std::move(phi)), orthonormal_rows_(orthonormal), seed_(seed) {}

  Eigen::MatrixXd phi_;
  bool orthonormal_rows_ = false;
  std::uint64_t seed_ = 0;
};

// Adds zero-mean Gaussian noise rescaled after sampling so the measurement
// SNR hits target_snr_db exactly. A +infinity target returns y unchanged.
// Throws if y is identically zero.
Measurement add_noise_at_snr(const Measurement& m, double target_snr_db,
                             std::uint64_t seed);

}  // namespace pnpcs

#endif  // PNPCS_SENSING_HPP
