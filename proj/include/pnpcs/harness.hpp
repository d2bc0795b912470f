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

#ifndef PNPCS_HARNESS_HPP
#define PNPCS_HARNESS_HPP

#include <cstdint>
#include <iosfwd>
#include <string>
#include <vector>

#include "pnpcs/gmm.hpp"
#include "pnpcs/solver.hpp"

namespace pnpcs {

// One reconstruction experiment grid: signals x measurement counts x
// noise levels x trials. Every trial draws a fresh sensing matrix; seeds
// are derived from the master seed by the documented splitting rule and
// recorded per row.
struct ExperimentSpec {
  std::vector<Signal> signals;
  std::vector<Eigen::Index> m_values;
  std::vector<double> noise_snrs_db;  // empty means noiseless only
  int trials = 20;
  std::uint64_t master_seed = 1;
  SolverConfig solver;
  int threads = 0;  // 0 means hardware concurrency

  void validate() const;
};

struct ResultRow {
  std::string signal_id;
  Eigen::Index n = 0;   // original signal length
  Eigen::Index m = 0;
  double cr = 0.0;      // (n - m)/n * 100, consistent with m by construction
  double input_snr_db = std::numeric_limits<double>::infinity();
  double output_snr_db = 0.0;
  double mse = 0.0;
  int trial = 0;
  std::uint64_t phi_seed = 0;
  std::uint64_t noise_seed = 0;
  int iterations = 0;
  double contraction = 0.0;  // verified lambda_max of the frozen operator
  bool ok = false;
  std::string error;
};

// One grid cell trial, fully determined by its arguments; used by
// run_sweep and by reproducibility checks that re-run a recorded row.
ResultRow run_single_trial(const Signal& signal, Eigen::Index m,
                           double noise_snr_db, int trial,
                           std::uint64_t phi_seed, std::uint64_t noise_seed,
                           const GmmModel& model, const SolverConfig& solver);

// Runs the whole grid on a small worker pool (rows are independent; the
// output order is fixed by the grid, not by scheduling). Per-row failures
// are recorded in the row and do not stop the sweep.
std::vector<ResultRow> run_sweep(const ExperimentSpec& spec,
                                 const GmmModel& model);

// Per-row CSV with a header; one line per trial.
void write_results_csv(std::ostream& out, const std::vector<ResultRow>& rows);

// Mean and standard deviation of output SNR (and mean MSE) per
// (signal, m, noise) cell, over the rows that succeeded.
void write_summary_csv(std::ostream& out, const std::vector<ResultRow>& rows);

}  // namespace pnpcs

#endif  // PNPCS_HARNESS_HPP
