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

#include "pnpcs/harness.hpp"

#include <algorithm>
#include <atomic>
#include <cmath>
#include <cstdio>
#include <map>
#include <ostream>
#include <stdexcept>
#include <thread>
#include <tuple>

#include "pnpcs/patch.hpp"
#include "pnpcs/rng.hpp"

namespace pnpcs {

namespace {

std::string csv_number(double v) {
  if (std::isinf(v)) return v > 0 ? "inf" : "-inf";
  char buf[40];
  std::snprintf(buf, sizeof(buf), "%.17g", v);
  return buf;
}

std::string sanitize(const std::string& s) {
  std::string out = s;
  for (char& c : out)
    if (c == ',' || c == '\n' || c == '\r') c = ';';
  return out;
}

}  // namespace

void ExperimentSpec::validate() const {
  if (signals.empty()) throw std::invalid_argument("sweep: no signals");
  if (m_values.empty()) throw std::invalid_argument("sweep: no M values");
  if (trials < 1) throw std::invalid_argument("sweep: trials must be >= 1");
  for (const Signal& s : signals) {
    s.validate();
    for (Eigen::Index m : m_values)
      if (m < 1 || m > s.size())
        throw std::invalid_argument("sweep: need 1 <= M <= N for signal " +
                                    s.label);
  }
}

ResultRow run_single_trial(const Signal& signal, Eigen::Index m,
                           double noise_snr_db, int trial,
                           std::uint64_t phi_seed, std::uint64_t noise_seed,
                           const GmmModel& model, const SolverConfig& solver) {
  ResultRow row;
  row.signal_id = signal.label.empty() ? "signal" : signal.label;
  row.n = signal.size();
  row.m = m;
  row.trial = trial;
  row.phi_seed = phi_seed;
  row.noise_seed = noise_seed;
  row.input_snr_db = noise_snr_db;
  try {
    row.cr = compression_ratio(row.n, m);
    auto [padded, original_length] =
        pad_to_multiple(signal, model.patch_length());
    const SensingOperator op =
        SensingOperator::gaussian(m, padded.size(), phi_seed);
    Measurement meas = op.forward(padded.samples);
    if (std::isfinite(noise_snr_db))
      meas = add_noise_at_snr(meas, noise_snr_db, noise_seed);
    const PnpResult res = reconstruct_pnp(meas, op, model, solver);
    const Eigen::VectorXd estimate = res.estimate.head(original_length);
    row.output_snr_db = snr_db(signal.samples, estimate);
    row.mse = mse(signal.samples, estimate);
    row.iterations = static_cast<int>(res.trace.rows.size());
    row.contraction = res.contractivity.lambda_max;
    row.ok = true;
  } catch (const std::exception& e) {
    row.ok = false;
    row.error = e.what();
  }
  return row;
}

std::vector<ResultRow> run_sweep(const ExperimentSpec& spec,
                                 const GmmModel& model) {
  spec.validate();
  model.validate();

  std::vector<double> noise_levels = spec.noise_snrs_db;
  if (noise_levels.empty())
    noise_levels.push_back(std::numeric_limits<double>::infinity());

  struct Task {
    const Signal* signal;
    Eigen::Index m;
    double noise_snr_db;
    int trial;
    std::uint64_t phi_seed;
    std::uint64_t noise_seed;
  };
  std::vector<Task> tasks;
  std::uint64_t index = 0;
  for (const Signal& s : spec.signals)
    for (Eigen::Index m : spec.m_values)
      for (double snr : noise_levels)
        for (int t = 0; t < spec.trials; ++t) {
          // One independent stream pair per grid cell trial; the derived
          // seeds are recorded in the row so any row can be re-run alone.
          tasks.push_back(
              {&s, m, snr, t,
               rng::derive_seed(spec.master_seed,
                                rng::Purpose::kSensingMatrix, index),
               rng::derive_seed(spec.master_seed,
                                rng::Purpose::kMeasurementNoise, index)});
          ++index;
        }

  std::vector<ResultRow> rows(tasks.size());
  const unsigned pool = spec.threads > 0
                            ? static_cast<unsigned>(spec.threads)
                            : std::max(1u, std::thread::hardware_concurrency());
  std::atomic<std::size_t> next{0};
  auto worker = [&]() {
    for (;;) {
      const std::size_t i = next.fetch_add(1);
      if (i >= tasks.size()) return;
      const Task& t = tasks[i];
      rows[i] = run_single_trial(*t.signal, t.m, t.noise_snr_db, t.trial,
                                 t.phi_seed, t.noise_seed, model, spec.solver);
    }
  };
  if (pool <= 1 || tasks.size() <= 1) {
    worker();
  } else {
    std::vector<std::thread> threads;
    for (unsigned i = 0; i < pool; ++i) threads.emplace_back(worker);
    for (std::thread& th : threads) th.join();
  }
  return rows;
}

void write_results_csv(std::ostream& out, const std::vector<ResultRow>& rows) {
  out << "signal,n,m,cr,input_snr_db,output_snr_db,mse,trial,phi_seed,"
         "noise_seed,iterations,contraction,status\n";
  for (const ResultRow& r : rows) {
    out << sanitize(r.signal_id) << "," << r.n << "," << r.m << ","
        << csv_number(r.cr) << "," << csv_number(r.input_snr_db) << ","
        << csv_number(r.output_snr_db) << "," << csv_number(r.mse) << ","
        << r.trial << "," << r.phi_seed << "," << r.noise_seed << ","
        << r.iterations << "," << csv_number(r.contraction) << ","
        << (r.ok ? "ok" : sanitize(r.error)) << "\n";
  }
}

void write_summary_csv(std::ostream& out, const std::vector<ResultRow>& rows) {
  using Key = std::tuple<std::string, Eigen::Index, double>;
  struct Cell {
    std::vector<double> snrs;
    double mse_sum = 0.0;
    Eigen::Index n = 0;
    double cr = 0.0;
    int failures = 0;
  };
  std::map<Key, Cell> cells;
  for (const ResultRow& r : rows) {
    Cell& c = cells[{r.signal_id, r.m, r.input_snr_db}];
    c.n = r.n;
    c.cr = r.cr;
    if (r.ok) {
      c.snrs.push_back(r.output_snr_db);
      c.mse_sum += r.mse;
    } else {
      ++c.failures;
    }
  }
  out << "signal,n,m,cr,input_snr_db,trials,mean_output_snr_db,"
         "std_output_snr_db,mean_mse,failures\n";
  for (const auto& [key, cell] : cells) {
    const auto& [signal_id, m, input_snr] = key;
    const std::size_t count = cell.snrs.size();
    double mean = 0.0, stddev = 0.0, mean_mse = 0.0;
    if (count > 0) {
      for (double v : cell.snrs) mean += v;
      mean /= static_cast<double>(count);
      if (count > 1) {
        for (double v : cell.snrs) stddev += (v - mean) * (v - mean);
        stddev = std::sqrt(stddev / static_cast<double>(count - 1));
      }
      mean_mse = cell.mse_sum / static_cast<double>(count);
    }
    out << sanitize(signal_id) << "," << cell.n << "," << m << ","
        << csv_number(cell.cr) << "," << csv_number(input_snr) << "," << count
        << "," << csv_number(mean) << "," << csv_number(stddev) << ","
        << csv_number(mean_mse) << "," << cell.failures << "\n";
  }
}

}  // namespace pnpcs
