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

#include <cmath>
#include <cstdio>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <optional>
#include <string>
#include <vector>

#include <CLI11.hpp>

#include "pnpcs/errors.hpp"
#include "pnpcs/gmm.hpp"
#include "pnpcs/harness.hpp"
#include "pnpcs/patch.hpp"
#include "pnpcs/rng.hpp"
#include "pnpcs/sensing.hpp"
#include "pnpcs/signal.hpp"
#include "pnpcs/solver.hpp"

namespace {

// Exit codes: 0 success (or verify pass), 1 verify fail, 2 argument error,
// 3 numerical failure.
constexpr int kExitOk = 0;
constexpr int kExitVerifyFail = 1;
constexpr int kExitArgument = 2;
constexpr int kExitNumerical = 3;

// Default outputs land in $PNPCS_OUT_DIR when set, else the working
// directory. Explicit --out paths are used verbatim.
std::string default_out(const std::string& name) {
  const char* dir = std::getenv("PNPCS_OUT_DIR");
  if (dir == nullptr || *dir == '\0') return name;
  return (std::filesystem::path(dir) / name).string();
}

std::ofstream open_out(const std::string& path) {
  std::ofstream out(path);
  if (!out) throw std::invalid_argument("cannot open for writing: " + path);
  return out;
}

// Signal-domain analogue of the measurement-noise helper: Gaussian noise
// rescaled so the realized SNR is exact. Returns the noisy signal and the
// per-sample noise standard deviation actually applied.
std::pair<Eigen::VectorXd, double> add_signal_noise(const Eigen::VectorXd& x,
                                                    double snr_db_target,
                                                    std::uint64_t seed) {
  const double norm = x.norm();
  if (norm == 0.0)
    throw std::invalid_argument("cannot add noise to a zero signal");
  pnpcs::rng::Stream stream(
      pnpcs::rng::derive_seed(seed, pnpcs::rng::Purpose::kMeasurementNoise));
  Eigen::VectorXd noise = stream.normal_vector(x.size());
  const double target_norm = norm / std::pow(10.0, snr_db_target / 20.0);
  noise *= target_norm / noise.norm();
  const double sigma =
      target_norm / std::sqrt(static_cast<double>(x.size()));
  return {x + noise, sigma};
}

struct TrainArgs {
  std::string signal_path;
  int patch_length = 30;
  int components = 10;
  std::uint64_t seed = 0;
  int max_iters = 200;
  double tol = 1e-7;
  double reg_floor = 0.0;
  std::string out;
};

int cmd_train(const TrainArgs& a) {
  const pnpcs::Signal signal = pnpcs::read_signal(a.signal_path);
  const pnpcs::PatchMatrix patches =
      pnpcs::extract_training_patches(signal.samples, a.patch_length);
  pnpcs::EmConfig cfg;
  cfg.num_components = a.components;
  cfg.max_iters = a.max_iters;
  cfg.loglik_rel_tol = a.tol;
  cfg.reg_floor = a.reg_floor;
  cfg.seed = a.seed;
  pnpcs::FitReport report;
  const pnpcs::GmmModel model = pnpcs::fit_em(patches, cfg, &report);
  pnpcs::save_model_json(a.out, model);
  std::printf("trained K=%d P=%d on %ld patches from %s\n", a.components,
              a.patch_length, static_cast<long>(patches.cols()),
              a.signal_path.c_str());
  std::printf("em iterations: %d  mean log-likelihood: %.6f\n",
              report.iterations, report.final_log_likelihood);
  std::printf("covariance floor: %.3e  reseeded components: %d\n",
              report.reg_floor, report.reseeded_components);
  std::printf("model written to %s\n", a.out.c_str());
  return kExitOk;
}

struct DenoiseArgs {
  std::string model_path;
  std::string signal_path;
  std::string reference_path;
  std::optional<double> simulate_snr_db;
  std::optional<double> sigma;
  std::uint64_t seed = 0;
  std::string out;
};

int cmd_denoise(const DenoiseArgs& a) {
  const pnpcs::GmmModel model = pnpcs::load_model_json(a.model_path);
  const pnpcs::Signal input = pnpcs::read_signal(a.signal_path);

  Eigen::VectorXd noisy;
  std::optional<Eigen::VectorXd> reference;
  double sigma = 0.0;
  if (a.simulate_snr_db) {
    // The input is treated as the clean reference and noise is simulated.
    reference = input.samples;
    auto [corrupted, noise_sigma] =
        add_signal_noise(input.samples, *a.simulate_snr_db, a.seed);
    noisy = std::move(corrupted);
    sigma = a.sigma.value_or(noise_sigma);
  } else {
    noisy = input.samples;
    if (!a.reference_path.empty())
      reference = pnpcs::read_signal(a.reference_path).samples;
    if (!a.sigma)
      throw std::invalid_argument(
          "--sigma is required when the input is already noisy");
    sigma = *a.sigma;
  }

  const pnpcs::AdaptiveDenoiser denoiser(model, sigma, noisy.size());
  const Eigen::VectorXd denoised = denoiser.apply(noisy);

  pnpcs::Signal out;
  out.samples = denoised;
  out.label = input.label + " denoised";
  pnpcs::write_signal(a.out, out);
  std::printf("denoiser sigma: %.6g\n", sigma);
  if (reference) {
    std::printf("input snr:  %.3f dB\n", pnpcs::snr_db(*reference, noisy));
    std::printf("output snr: %.3f dB\n", pnpcs::snr_db(*reference, denoised));
  }
  std::printf("denoised signal written to %s\n", a.out.c_str());
  return kExitOk;
}

struct ReconstructArgs {
  std::string model_path;
  std::string signal_path;
  Eigen::Index m = 0;
  std::uint64_t seed = 1;
  std::optional<double> noise_snr_db;
  pnpcs::SolverConfig solver;
  std::string out;
};

int cmd_reconstruct(const ReconstructArgs& a) {
  const pnpcs::GmmModel model = pnpcs::load_model_json(a.model_path);
  const pnpcs::Signal signal = pnpcs::read_signal(a.signal_path);
  const double cr = pnpcs::compression_ratio(signal.size(), a.m);

  auto [padded, original_length] =
      pnpcs::pad_to_multiple(signal, model.patch_length());
  const std::uint64_t phi_seed = pnpcs::rng::derive_seed(
      a.seed, pnpcs::rng::Purpose::kSensingMatrix, 0);
  const std::uint64_t noise_seed = pnpcs::rng::derive_seed(
      a.seed, pnpcs::rng::Purpose::kMeasurementNoise, 0);
  const pnpcs::SensingOperator op =
      pnpcs::SensingOperator::gaussian(a.m, padded.size(), phi_seed);
  pnpcs::Measurement meas = op.forward(padded.samples);
  if (a.noise_snr_db)
    meas = pnpcs::add_noise_at_snr(meas, *a.noise_snr_db, noise_seed);

  const pnpcs::PnpResult res =
      pnpcs::reconstruct_pnp(meas, op, model, a.solver);

  pnpcs::Signal recon;
  recon.samples = res.estimate.head(original_length);
  recon.label = signal.label + " reconstructed";
  pnpcs::write_signal(a.out, recon);
  {
    auto trace_out = open_out(a.out + ".trace.csv");
    res.trace.write_csv(trace_out);
  }
  {
    auto report_out = open_out(a.out + ".contractivity.json");
    report_out << res.contractivity.to_json() << "\n";
  }
  {
    auto coeff_out = open_out(a.out + ".coefficients.csv");
    pnpcs::write_coefficients_csv(coeff_out, res.coefficients);
  }

  std::printf("n=%ld m=%ld cr=%.2f%% phi_seed=%llu noise_seed=%llu\n",
              static_cast<long>(signal.size()), static_cast<long>(a.m), cr,
              static_cast<unsigned long long>(phi_seed),
              static_cast<unsigned long long>(noise_seed));
  std::printf("denoiser sigma: %.6g (%s)\n", res.trace.sigma_used,
              a.solver.sigma ? "from flag" : "default rule");
  std::printf("iterations: %zu  lambda_max: %.6f (%s)\n",
              res.trace.rows.size(), res.contractivity.lambda_max,
              res.contractivity.pass ? "contractive" : "NOT verified");
  std::printf("output snr: %.3f dB  mse: %.6e\n",
              pnpcs::snr_db(signal.samples, recon.samples),
              pnpcs::mse(signal.samples, recon.samples));
  std::printf(
      "outputs: %s, %s.trace.csv, %s.contractivity.json, "
      "%s.coefficients.csv\n",
      a.out.c_str(), a.out.c_str(), a.out.c_str(), a.out.c_str());
  return kExitOk;
}

struct SweepArgs {
  std::string model_path;
  std::vector<std::string> signal_paths;
  std::vector<Eigen::Index> m_values;
  std::vector<double> cr_values;
  std::vector<double> noise_snrs_db;
  int trials = 20;
  std::uint64_t seed = 1;
  int threads = 0;
  pnpcs::SolverConfig solver;
  std::string out;
};

int cmd_sweep(const SweepArgs& a) {
  const pnpcs::GmmModel model = pnpcs::load_model_json(a.model_path);
  pnpcs::ExperimentSpec spec;
  for (const std::string& path : a.signal_paths)
    spec.signals.push_back(pnpcs::read_signal(path));
  spec.m_values = a.m_values;
  if (!a.cr_values.empty()) {
    const Eigen::Index n = spec.signals.front().size();
    for (const pnpcs::Signal& s : spec.signals)
      if (s.size() != n)
        throw std::invalid_argument(
            "--cr requires all signals to share one length");
    for (double cr : a.cr_values)
      spec.m_values.push_back(static_cast<Eigen::Index>(
          std::llround(static_cast<double>(n) * (1.0 - cr / 100.0))));
  }
  spec.noise_snrs_db = a.noise_snrs_db;
  spec.trials = a.trials;
  spec.master_seed = a.seed;
  spec.solver = a.solver;
  spec.threads = a.threads;

  const std::vector<pnpcs::ResultRow> rows = pnpcs::run_sweep(spec, model);
  {
    auto out = open_out(a.out);
    pnpcs::write_results_csv(out, rows);
  }
  const std::string summary_path = a.out + ".summary.csv";
  {
    auto out = open_out(summary_path);
    pnpcs::write_summary_csv(out, rows);
  }
  std::size_t failures = 0;
  for (const auto& r : rows)
    if (!r.ok) ++failures;
  std::printf("sweep: %zu rows (%zu failed) -> %s\n", rows.size(), failures,
              a.out.c_str());
  std::printf("summary -> %s\n", summary_path.c_str());
  pnpcs::write_summary_csv(std::cout, rows);
  return kExitOk;
}

struct VerifyArgs {
  std::string model_path;
  Eigen::Index n = 0;
  double sigma = 0.0;
  std::string surrogate_path;
  std::uint64_t seed = 0;
  std::string out;
};

int cmd_verify(const VerifyArgs& a) {
  const pnpcs::GmmModel model = pnpcs::load_model_json(a.model_path);
  const pnpcs::AdaptiveDenoiser denoiser(model, a.sigma, a.n);
  pnpcs::FrozenCoefficients coeffs;
  if (!a.surrogate_path.empty()) {
    const pnpcs::Signal surrogate = pnpcs::read_signal(a.surrogate_path);
    if (surrogate.size() != a.n)
      throw std::invalid_argument("surrogate length does not match --n");
    coeffs = pnpcs::freeze_coefficients(denoiser, surrogate.samples);
  } else {
    coeffs = pnpcs::uniform_coefficients(model, a.n);
  }
  const pnpcs::ContractivityReport report =
      pnpcs::verify_contractivity(denoiser, coeffs, a.seed);
  std::printf("lambda_max: %.12f  residual: %.3e  iterations: %d\n",
              report.lambda_max, report.residual, report.iterations);
  std::printf("%s\n", report.pass ? "PASS: operator is contractive"
                                  : "FAIL: contraction not verified");
  if (!a.out.empty()) {
    auto out = open_out(a.out);
    out << report.to_json() << "\n";
  }
  return report.pass ? kExitOk : kExitVerifyFail;
}

struct EigendumpArgs {
  std::string model_path;
  std::string out;
};

int cmd_eigendump(const EigendumpArgs& a) {
  const pnpcs::GmmModel model = pnpcs::load_model_json(a.model_path);
  auto out = open_out(a.out);
  pnpcs::write_eigendump_csv(out, model);
  std::printf("eigendump written to %s\n", a.out.c_str());
  return kExitOk;
}

void add_solver_flags(CLI::App* sub, pnpcs::SolverConfig* cfg,
                      std::optional<double>* sigma) {
  sub->add_option("--gamma", cfg->gamma, "gradient step size")
      ->capture_default_str();
  sub->add_option("--freeze-at", cfg->freeze_at,
                  "adaptive iterations before the coefficients freeze (T)")
      ->capture_default_str();
  sub->add_option("--max-iters", cfg->max_iters, "iteration cap")
      ->capture_default_str();
  sub->add_option("--tol", cfg->tol, "stopping tolerance on the residual")
      ->capture_default_str();
  sub->add_option("--sigma", *sigma,
                  "denoiser noise level (default: 0.05 x std of the first "
                  "gradient step)");
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{
      "pnpcs: compressive-sensing recovery for 1-D signals with a "
      "plug-and-play GMM patch denoiser"};
  app.require_subcommand(1);

  TrainArgs train;
  auto* train_cmd =
      app.add_subcommand("train", "fit the GMM patch prior on a clean signal");
  train_cmd->add_option("--signal", train.signal_path, "training signal file")
      ->required();
  train_cmd->add_option("-P,--patch-len", train.patch_length, "patch length")
      ->capture_default_str();
  train_cmd->add_option("-K,--components", train.components, "mixture size")
      ->capture_default_str();
  train_cmd->add_option("--seed", train.seed, "rng seed")
      ->capture_default_str();
  train_cmd->add_option("--max-iters", train.max_iters, "EM iteration cap")
      ->capture_default_str();
  train_cmd->add_option("--tol", train.tol, "EM log-likelihood tolerance")
      ->capture_default_str();
  train_cmd->add_option("--reg-floor", train.reg_floor,
                        "covariance eigenvalue floor (0 = automatic)")
      ->capture_default_str();
  train_cmd->add_option("--out", train.out, "output model path");

  DenoiseArgs denoise;
  auto* denoise_cmd =
      app.add_subcommand("denoise", "denoise a signal with the GMM prior");
  denoise_cmd->add_option("--model", denoise.model_path, "model JSON")
      ->required();
  denoise_cmd->add_option("--signal", denoise.signal_path, "input signal")
      ->required();
  denoise_cmd->add_option(
      "--snr", denoise.simulate_snr_db,
      "simulate noise at this SNR (dB); the input is then the clean "
      "reference");
  denoise_cmd->add_option("--sigma", denoise.sigma, "denoiser noise level");
  denoise_cmd->add_option("--seed", denoise.seed, "noise seed")
      ->capture_default_str();
  denoise_cmd->add_option("--reference", denoise.reference_path,
                          "clean reference for the SNR report");
  denoise_cmd->add_option("--out", denoise.out, "output signal path");

  ReconstructArgs recon;
  auto* recon_cmd = app.add_subcommand(
      "reconstruct", "simulate compressed acquisition and recover the signal");
  recon_cmd->add_option("--model", recon.model_path, "model JSON")->required();
  recon_cmd->add_option("--signal", recon.signal_path, "clean signal file")
      ->required();
  recon_cmd->add_option("-m,--measurements", recon.m, "measurement count M")
      ->required();
  recon_cmd->add_option("--seed", recon.seed, "master seed")
      ->capture_default_str();
  recon_cmd->add_option("--noise-snr", recon.noise_snr_db,
                        "measurement SNR in dB (omit for noiseless)");
  std::optional<double> recon_sigma;
  add_solver_flags(recon_cmd, &recon.solver, &recon_sigma);
  recon_cmd->add_option("--out", recon.out, "output path prefix");

  SweepArgs sweep;
  auto* sweep_cmd = app.add_subcommand(
      "sweep", "run a reconstruction experiment grid and emit CSV");
  sweep_cmd->add_option("--model", sweep.model_path, "model JSON")->required();
  sweep_cmd->add_option("--signal", sweep.signal_paths, "signal file(s)")
      ->required();
  sweep_cmd->add_option("-m,--measurements", sweep.m_values,
                        "measurement counts");
  sweep_cmd->add_option("--cr", sweep.cr_values,
                        "compression ratios in percent (alternative to -m)");
  sweep_cmd->add_option("--noise-snr", sweep.noise_snrs_db,
                        "measurement SNR levels in dB (omit for noiseless)");
  sweep_cmd->add_option("--trials", sweep.trials, "trials per grid cell")
      ->capture_default_str();
  sweep_cmd->add_option("--seed", sweep.seed, "master seed")
      ->capture_default_str();
  sweep_cmd->add_option("--threads", sweep.threads,
                        "worker threads (0 = hardware)")
      ->capture_default_str();
  std::optional<double> sweep_sigma;
  add_solver_flags(sweep_cmd, &sweep.solver, &sweep_sigma);
  sweep_cmd->add_option("--out", sweep.out, "results CSV path");

  VerifyArgs verify;
  auto* verify_cmd = app.add_subcommand(
      "verify", "verify contractivity of the frozen denoiser");
  verify_cmd->add_option("--model", verify.model_path, "model JSON")
      ->required();
  verify_cmd->add_option("-n,--length", verify.n, "signal length N")
      ->required();
  verify_cmd->add_option("--sigma", verify.sigma, "denoiser noise level")
      ->required();
  verify_cmd->add_option("--surrogate", verify.surrogate_path,
                         "surrogate signal for the frozen coefficients "
                         "(default: uniform rows from the mixture weights)");
  verify_cmd->add_option("--seed", verify.seed, "power iteration seed")
      ->capture_default_str();
  verify_cmd->add_option("--out", verify.out, "report JSON path");

  EigendumpArgs eigendump;
  auto* eigendump_cmd = app.add_subcommand(
      "eigendump", "dump covariance spectra and eigenvectors as CSV");
  eigendump_cmd->add_option("--model", eigendump.model_path, "model JSON")
      ->required();
  eigendump_cmd->add_option("--out", eigendump.out, "output CSV path");

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e);
    return code == 0 ? kExitOk : kExitArgument;
  }

  try {
    if (train_cmd->parsed()) {
      if (train.out.empty()) train.out = default_out("model.json");
      return cmd_train(train);
    }
    if (denoise_cmd->parsed()) {
      if (denoise.out.empty()) denoise.out = default_out("denoised.txt");
      return cmd_denoise(denoise);
    }
    if (recon_cmd->parsed()) {
      recon.solver.sigma = recon_sigma;
      if (recon.out.empty()) recon.out = default_out("recon.txt");
      return cmd_reconstruct(recon);
    }
    if (sweep_cmd->parsed()) {
      sweep.solver.sigma = sweep_sigma;
      if (sweep.out.empty()) sweep.out = default_out("sweep.csv");
      return cmd_sweep(sweep);
    }
    if (verify_cmd->parsed()) return cmd_verify(verify);
    if (eigendump_cmd->parsed()) {
      if (eigendump.out.empty()) eigendump.out = default_out("eigendump.csv");
      return cmd_eigendump(eigendump);
    }
  } catch (const std::invalid_argument& e) {
    std::fprintf(stderr, "argument error: %s\n", e.what());
    return kExitArgument;
  } catch (const pnpcs::NumericalError& e) {
    std::fprintf(stderr, "numerical failure: %s\n", e.what());
    return kExitNumerical;
  } catch (const std::exception& e) {
    std::fprintf(stderr, "error: %s\n", e.what());
    return kExitNumerical;
  }
  return kExitArgument;
}
