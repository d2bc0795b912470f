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

#ifndef PNPCS_SOLVER_HPP
#define PNPCS_SOLVER_HPP

#include <iosfwd>
#include <optional>
#include <string>
#include <vector>

#include <Eigen/Core>

#include "pnpcs/denoiser.hpp"
#include "pnpcs/errors.hpp"
#include "pnpcs/sensing.hpp"

namespace pnpcs {

enum class Phase { kAdaptive, kFrozen, kBaseline };

const char* phase_name(Phase p);

struct TraceRow {
  int iter = 0;          // 1-based iteration index
  Phase phase = Phase::kAdaptive;
  double residual = 0.0; // ||x_k - x_{k-1}||
  double fidelity = 0.0; // (1/2)||Phi x_k - y||^2
  double elapsed_ms = 0.0;
};

// Per-iteration convergence record. The phase switches once, from
// adaptive to frozen, at the freeze iteration.
struct RunTrace {
  std::vector<TraceRow> rows;
  int freeze_iteration = -1;
  double sigma_used = 0.0;
  double contraction_ratio = 0.0;  // max frozen-phase residual ratio; 0 if n/a

  std::vector<double> frozen_residuals() const;
  // CSV columns: iter, phase, residual, fidelity, elapsed_ms.
  void write_csv(std::ostream& out) const;
};

// Raised when an iterate goes non-finite; carries the trace accumulated up
// to the failure.
class SolverError : public NumericalError {
 public:
  SolverError(const std::string& what, RunTrace trace)
      : NumericalError(what), trace_(std::move(trace)) {}
  const RunTrace& trace() const { return trace_; }

 private:
  RunTrace trace_;
};

struct SolverConfig {
  double gamma = 1.0;   // step size; must satisfy gamma <= 2/sigma_max(Phi^T Phi)
  int freeze_at = 10;   // T: adaptive iterations before the coefficients freeze
  int max_iters = 150;
  double tol = 1e-8;    // stop when ||x_{k+1} - x_k|| < tol (frozen phase only)
  // Denoiser noise level. Unset means 0.05 times the sample standard
  // deviation of the first gradient-step input; the resolved value is
  // recorded in the trace.
  std::optional<double> sigma;
  enum class Init { kBackProjection, kZero } init = Init::kBackProjection;
};

struct PnpResult {
  Eigen::VectorXd estimate;
  RunTrace trace;
  FrozenCoefficients coefficients;
  ContractivityReport contractivity;
};

// The sigma default rule, exposed so callers can build a denoiser before
// solving: user-provided value if set, else 0.05 * std of x0 - gamma*grad
// at x0 with x0 = Phi^T y.
double resolve_denoiser_sigma(const Measurement& m, const SensingOperator& op,
                              double gamma, std::optional<double> user_sigma);

// Plug-and-play proximal gradient descent with the two-phase schedule:
// x0 is the back-projection Phi^T y (or zero), iterations 1..T apply the
// adaptive denoiser to the gradient step, the coefficients are frozen from
// x_T (and contractivity verified), and the remaining iterations apply the
// frozen denoiser. Stops at max_iters or when the frozen-phase residual
// drops below tol. A failed contractivity check does not abort the run;
// it is flagged in the returned report. Non-finite iterates raise
// NumericalError.
//
// frozen_override, when given, is used at the freeze point instead of the
// coefficients of x_T (the surrogate is ignored); used to study
// initialization independence under a shared frozen operator.
PnpResult reconstruct_pnp(const Measurement& m, const SensingOperator& op,
                          const AdaptiveDenoiser& den, const SolverConfig& cfg,
                          const FrozenCoefficients* frozen_override = nullptr);

// Convenience overload that resolves sigma per the default rule and builds
// the denoiser for the operator's signal length.
PnpResult reconstruct_pnp(const Measurement& m, const SensingOperator& op,
                          const GmmModel& model, const SolverConfig& cfg,
                          const FrozenCoefficients* frozen_override = nullptr);

// Max over consecutive frozen-phase residual ratios; requires at least
// three frozen residuals above the 1e-13 numerical floor (throws
// NumericalError otherwise). For a contractive frozen operator the result
// is bounded by the verified lambda_max.
double frozen_contraction_ratio(const RunTrace& trace);

// Componentwise sign(z_i) * max(|z_i| - tau, 0). Requires tau > 0.
Eigen::VectorXd soft_threshold(const Eigen::VectorXd& z, double tau);

struct BaselineConfig {
  double lambda = 1e-3;  // l1 weight, > 0
  double gamma = 1.0;
  int max_iters = 1000;
  double tol = 1e-10;
};

struct BaselineResult {
  Eigen::VectorXd estimate;
  RunTrace trace;
  std::vector<double> objective;  // f(x_k) + lambda*||x_k||_1, non-increasing
};

// Classical proximal gradient descent for f(x) + lambda*||x||_1 with the
// soft-threshold prox in the sample domain.
BaselineResult reconstruct_pgd_l1(const Measurement& m,
                                  const SensingOperator& op,
                                  const BaselineConfig& cfg);

}  // namespace pnpcs

#endif  // PNPCS_SOLVER_HPP
