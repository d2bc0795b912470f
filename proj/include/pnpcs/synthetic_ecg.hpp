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

#ifndef PNPCS_SYNTHETIC_ECG_HPP
#define PNPCS_SYNTHETIC_ECG_HPP

#include <cmath>
#include <cstdint>

#include <Eigen/Core>

#include "pnpcs/rng.hpp"

namespace pnpcs {

// Clean ECG-like waveform for demos and tests: a quasi-periodic train of
// beats, each a sum of Gaussian bumps (P, Q, R, S, T waves), with mild
// beat-to-beat jitter in timing and amplitude plus a slow baseline drift.
// Deterministic given the seed.
struct EcgSynthConfig {
  double sampling_hz = 360.0;
  double heart_rate_bpm = 72.0;
  double rr_jitter = 0.04;         // relative std of the beat interval
  double amplitude_jitter = 0.06;  // relative std of the per-beat scale
  double baseline_amplitude = 0.06;
  double baseline_hz = 0.23;
};

inline Eigen::VectorXd synthetic_ecg(Eigen::Index n, std::uint64_t seed,
                                     const EcgSynthConfig& cfg = {}) {
  // Wave shapes: amplitude, offset from the R peak (s), width (s).
  struct Wave {
    double amp, offset, width;
  };
  static constexpr Wave kWaves[] = {
      {0.14, -0.170, 0.026},   // P
      {-0.12, -0.026, 0.010},  // Q
      {1.00, 0.000, 0.012},    // R
      {-0.26, 0.027, 0.011},   // S
      {0.32, 0.220, 0.048},    // T
  };

  rng::Stream stream(rng::derive_seed(seed, rng::Purpose::kSynthetic));
  Eigen::VectorXd x = Eigen::VectorXd::Zero(n);
  const double dt = 1.0 / cfg.sampling_hz;
  const double duration = static_cast<double>(n) * dt;
  const double mean_rr = 60.0 / cfg.heart_rate_bpm;

  const double phase0 = 2.0 * M_PI * stream.uniform();
  for (Eigen::Index i = 0; i < n; ++i) {
    const double t = static_cast<double>(i) * dt;
    x[i] = cfg.baseline_amplitude *
           std::sin(2.0 * M_PI * cfg.baseline_hz * t + phase0);
  }

  // Start one beat before the window so leading waves are complete.
  double beat_time = -mean_rr;
  while (beat_time < duration + mean_rr) {
    const double scale = 1.0 + cfg.amplitude_jitter * stream.normal();
    for (const Wave& w : kWaves) {
      const double center = beat_time + w.offset;
      const double half_window = 5.0 * w.width;
      const auto lo = static_cast<Eigen::Index>(
          std::ceil((center - half_window) / dt));
      const auto hi = static_cast<Eigen::Index>(
          std::floor((center + half_window) / dt));
      for (Eigen::Index i = std::max<Eigen::Index>(lo, 0);
           i <= std::min<Eigen::Index>(hi, n - 1); ++i) {
        const double u = (static_cast<double>(i) * dt - center) / w.width;
        x[i] += scale * w.amp * std::exp(-0.5 * u * u);
      }
    }
    beat_time += mean_rr * (1.0 + cfg.rr_jitter * stream.normal());
  }
  return x;
}

}  // namespace pnpcs

#endif  // PNPCS_SYNTHETIC_ECG_HPP
