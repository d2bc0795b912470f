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

#include "pnpcs/solver.hpp"

#include <chrono>
#include <cmath>
#include <cstdio>
#include <optional>
#include <ostream>
#include <stdexcept>

namespace pnpcs {

namespace {

using Clock = std::chrono::steady_clock;

double ms_since(Clock::time_point start) {
  return std::chrono::duration<double, std::milli>(Clock::now() - start)
      .count();
}

double fidelity(const SensingOperator& op, const Eigen::VectorXd& x,
                const Eigen::VectorXd& y) {
  return 0.5 * (op.matrix() * x - y).squaredNorm();
}

void check_step_size(const SensingOperator& op, double gamma) {
  if (!(gamma > 0.0))
    throw std::invalid_argument("step size gamma must be positive");
  const double gram = op.spectral_norm_gram();
  if (gamma * gram > 2.0 * (1.0 + 1e-9))
    throw std::invalid_argument(
        "step size gamma exceeds 2/sigma_max(Phi^T Phi)");
}

}  // namespace

const char* phase_name(Phase p) {
  switch (p) {
    case Phase::kAdaptive: return "adaptive";
    case Phase::kFrozen: return "frozen";
    case Phase::kBaseline: return "l1";
  }
  return "?";
}

std::vector<double> RunTrace::frozen_residuals() const {
  std::vector<double> out;
  for (const TraceRow& row : rows)
    if (row.phase == Phase::kFrozen) out.push_back(row.residual);
  return out;
}

void RunTrace::write_csv(std::ostream& out) const {
  out << "iter,phase,residual,fidelity,elapsed_ms\n";
  char buf[40];
  for (const TraceRow& row : rows) {
    out << row.iter << "," << phase_name(row.phase);
    std::snprintf(buf, sizeof(buf), "%.17g", row.residual);
    out << "," << buf;
    std::snprintf(buf, sizeof(buf), "%.17g", row.fidelity);
    out << "," << buf;
    std::snprintf(buf, sizeof(buf), "%.3f", row.elapsed_ms);
    out << "," << buf << "\n";
  }
}

double resolve_denoiser_sigma(const Measurement& m, const SensingOperator& op,
                              double gamma, std::optional<double> user_sigma) {
  if (user_sigma) {
    if (!(*user_sigma > 0.0))
      throw std::invalid_argument("denoiser sigma must be positive");
    return *user_sigma;
  }
  const Eigen::VectorXd x0 = op.adjoint(m.y);
  const Eigen::VectorXd z1 = x0 - gamma * op.data_gradient(x0, m.y);
  const double mean = z1.mean();
  const double sd = std::sqrt((z1.array() - mean).square().sum() /
                              static_cast<double>(z1.size()));
  const double sigma = 0.05 * sd;
  if (!(sigma > 0.0))
    throw std::invalid_argument(
        "cannot resolve a denoiser sigma from a constant gradient step; "
        "pass sigma explicitly");
  return sigma;
}

PnpResult reconstruct_pnp(const Measurement& m, const SensingOperator& op,
                          const AdaptiveDenoiser& den, const SolverConfig& cfg,
                          const FrozenCoefficients* frozen_override) {
  if (cfg.freeze_at < 0 || cfg.freeze_at >= cfg.max_iters)
    throw std::invalid_argument("need 0 <= freeze_at < max_iters");
  check_step_size(op, cfg.gamma);
  if (den.indexer().signal_length() != op.cols())
    throw std::invalid_argument("denoiser and operator disagree on N");
  if (!den.indexer().divides())
    throw std::invalid_argument(
        "signal length must be a multiple of the patch length (pad first)");

  const auto start = Clock::now();
  Eigen::VectorXd x = cfg.init == SolverConfig::Init::kZero
                          ? Eigen::VectorXd::Zero(op.cols()).eval()
                          : op.adjoint(m.y);

  PnpResult result;
  result.trace.sigma_used = den.sigma();
  result.trace.freeze_iteration = cfg.freeze_at;
  std::optional<FrozenDenoiser> frozen;

  for (int k = 1; k <= cfg.max_iters; ++k) {
    const Eigen::VectorXd grad_step =
        x - cfg.gamma * op.data_gradient(x, m.y);
    Phase phase;
    Eigen::VectorXd next;
    if (k <= cfg.freeze_at) {
      phase = Phase::kAdaptive;
      next = den.apply(grad_step);
    } else {
      if (!frozen) {
        // Coefficients freeze on the current iterate x_T, not on its
        // gradient step.
        result.coefficients =
            frozen_override ? *frozen_override : freeze_coefficients(den, x);
        result.coefficients.frozen_at_iteration = cfg.freeze_at;
        frozen.emplace(den, result.coefficients);
        result.contractivity = verify_contractivity(*frozen);
      }
      phase = Phase::kFrozen;
      next = frozen->apply(grad_step);
    }
    const double residual = (next - x).norm();
    x = std::move(next);
    result.trace.rows.push_back({k, phase, residual, fidelity(op, x, m.y),
                                 ms_since(start)});
    if (!x.allFinite())
      throw SolverError("iterate became non-finite at iteration " +
                            std::to_string(k),
                        result.trace);
    if (phase == Phase::kFrozen && residual < cfg.tol) break;
  }

  try {
    result.trace.contraction_ratio = frozen_contraction_ratio(result.trace);
  } catch (const NumericalError&) {
    result.trace.contraction_ratio = 0.0;  // not enough usable residuals
  }
  result.estimate = std::move(x);
  return result;
}

PnpResult reconstruct_pnp(const Measurement& m, const SensingOperator& op,
                          const GmmModel& model, const SolverConfig& cfg,
                          const FrozenCoefficients* frozen_override) {
  const double sigma =
      resolve_denoiser_sigma(m, op, cfg.gamma, cfg.sigma);
  AdaptiveDenoiser den(model, sigma, op.cols());
  return reconstruct_pnp(m, op, den, cfg, frozen_override);
}

double frozen_contraction_ratio(const RunTrace& trace) {
  constexpr double kFloor = 1e-13;
  std::vector<double> usable;
  for (double r : trace.frozen_residuals()) {
    if (r <= kFloor) break;  // below the floor, ratios are rounding noise
    usable.push_back(r);
  }
  if (usable.size() < 3)
    throw NumericalError(
        "contraction ratio needs at least three frozen-phase residuals "
        "above the numerical floor");
  double worst = 0.0;
  for (std::size_t i = 0; i + 1 < usable.size(); ++i)
    worst = std::max(worst, usable[i + 1] / usable[i]);
  return worst;
}

Eigen::VectorXd soft_threshold(const Eigen::VectorXd& z, double tau) {
  if (!(tau > 0.0))
    throw std::invalid_argument("soft_threshold requires tau > 0");
  return z.array().sign() * (z.array().abs() - tau).max(0.0);
}

BaselineResult reconstruct_pgd_l1(const Measurement& m,
                                  const SensingOperator& op,
                                  const BaselineConfig& cfg) {
  if (!(cfg.lambda > 0.0))
    throw std::invalid_argument("baseline requires lambda > 0");
  check_step_size(op, cfg.gamma);

  const auto start = Clock::now();
  Eigen::VectorXd x = op.adjoint(m.y);
  BaselineResult result;
  for (int k = 1; k <= cfg.max_iters; ++k) {
    const Eigen::VectorXd grad_step =
        x - cfg.gamma * op.data_gradient(x, m.y);
    Eigen::VectorXd next = soft_threshold(grad_step, cfg.gamma * cfg.lambda);
    const double residual = (next - x).norm();
    x = std::move(next);
    const double fid = fidelity(op, x, m.y);
    result.trace.rows.push_back(
        {k, Phase::kBaseline, residual, fid, ms_since(start)});
    result.objective.push_back(fid + cfg.lambda * x.lpNorm<1>());
    if (!x.allFinite())
      throw SolverError("baseline iterate became non-finite at iteration " +
                            std::to_string(k),
                        result.trace);
    if (residual < cfg.tol) break;
  }
  result.estimate = std::move(x);
  return result;
}

}  // namespace pnpcs
