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

#include "pnpcs/sensing.hpp"

#include <cmath>
#include <stdexcept>

#include <Eigen/QR>

#include "pnpcs/errors.hpp"
#include "pnpcs/rng.hpp"

namespace pnpcs {

SensingOperator SensingOperator::gaussian(Eigen::Index m, Eigen::Index n,
                                          std::uint64_t seed) {
  if (m < 1 || m > n)
    throw std::invalid_argument("sensing operator requires 1 <= M <= N");
  rng::Stream stream(rng::derive_seed(seed, rng::Purpose::kSensingMatrix));
  const Eigen::MatrixXd raw = stream.normal_matrix(m, n);

  // Orthonormalize the rows: thin QR of the transpose.
  Eigen::HouseholderQR<Eigen::MatrixXd> qr(raw.transpose());
  const Eigen::MatrixXd q =
      qr.householderQ() * Eigen::MatrixXd::Identity(n, m);
  Eigen::MatrixXd phi = q.transpose();

  const Eigen::MatrixXd gram = phi * phi.transpose();
  const double dev =
      (gram - Eigen::MatrixXd::Identity(m, m)).cwiseAbs().maxCoeff();
  if (dev > 1e-10)
    throw NumericalError("sensing operator: row orthonormalization failed");
  return SensingOperator(std::move(phi), true, seed);
}

SensingOperator SensingOperator::identity(Eigen::Index n) {
  return SensingOperator(Eigen::MatrixXd::Identity(n, n), true, 0);
}

SensingOperator SensingOperator::from_matrix(Eigen::MatrixXd phi) {
  if (phi.rows() < 1 || phi.cols() < phi.rows())
    throw std::invalid_argument("sensing operator requires 1 <= M <= N");
  return SensingOperator(std::move(phi), false, 0);
}

Measurement SensingOperator::forward(const Eigen::VectorXd& x) const {
  if (x.size() != cols())
    throw std::invalid_argument("forward: signal length mismatch");
  Measurement m;
  m.y = phi_ * x;
  return m;
}

Eigen::VectorXd SensingOperator::adjoint(const Eigen::VectorXd& u) const {
  if (u.size() != rows())
    throw std::invalid_argument("adjoint: measurement length mismatch");
  return phi_.transpose() * u;
}

Eigen::VectorXd SensingOperator::data_gradient(const Eigen::VectorXd& x,
                                               const Eigen::VectorXd& y) const {
  if (x.size() != cols() || y.size() != rows())
    throw std::invalid_argument("data_gradient: shape mismatch");
  return phi_.transpose() * (phi_ * x - y);
}

double SensingOperator::spectral_norm_gram(std::uint64_t seed, double rq_tol,
                                           int max_iters) const {
  rng::Stream stream(rng::derive_seed(seed, rng::Purpose::kPowerIteration));
  Eigen::VectorXd v = stream.normal_vector(cols()).normalized();
  double rho_prev = 0.0;
  double rho = 0.0;
  for (int it = 1; it <= max_iters; ++it) {
    const Eigen::VectorXd w = phi_.transpose() * (phi_ * v);
    rho = v.dot(w);
    if (it > 1 && std::abs(rho - rho_prev) < rq_tol) break;
    rho_prev = rho;
    const double norm = w.norm();
    if (norm == 0.0) return 0.0;
    v = w / norm;
  }
  return rho;
}

Measurement add_noise_at_snr(const Measurement& m, double target_snr_db,
                             std::uint64_t seed) {
  if (std::isinf(target_snr_db) && target_snr_db > 0.0) return m;
  const double signal_norm = m.y.norm();
  if (signal_norm == 0.0)
    throw std::invalid_argument("add_noise_at_snr: zero measurement");
  rng::Stream stream(rng::derive_seed(seed, rng::Purpose::kMeasurementNoise));
  Eigen::VectorXd noise = stream.normal_vector(m.y.size());
  // Rescale after sampling so the realized SNR is exact, not just its
  // expectation.
  const double target_norm =
      signal_norm / std::pow(10.0, target_snr_db / 20.0);
  noise *= target_norm / noise.norm();
  Measurement out;
  out.y = m.y + noise;
  out.noise_snr_db = target_snr_db;
  out.noise_seed = seed;
  return out;
}

}  // namespace pnpcs
