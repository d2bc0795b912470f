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

// Writes a synthetic ECG-like signal file, so the toolkit can be exercised
// without any external recordings.

#include <cstdio>
#include <string>

#include <CLI11.hpp>

#include "pnpcs/signal.hpp"
#include "pnpcs/synthetic_ecg.hpp"

int main(int argc, char** argv) {
  CLI::App app{"pnpcs-synth: generate a synthetic ECG-like signal file"};
  long n = 10800;
  std::uint64_t seed = 0;
  double bpm = 72.0;
  std::string out = "synth.txt";
  app.add_option("-n,--length", n, "number of samples")->capture_default_str();
  app.add_option("--seed", seed, "rng seed")->capture_default_str();
  app.add_option("--bpm", bpm, "heart rate")->capture_default_str();
  app.add_option("--out", out, "output signal path")->capture_default_str();
  CLI11_PARSE(app, argc, argv);

  pnpcs::EcgSynthConfig cfg;
  cfg.heart_rate_bpm = bpm;
  pnpcs::Signal s;
  s.samples = pnpcs::synthetic_ecg(n, seed, cfg);
  s.label = "synthetic ecg seed=" + std::to_string(seed);
  try {
    pnpcs::write_signal(out, s);
  } catch (const std::exception& e) {
    std::fprintf(stderr, "error: %s\n", e.what());
    return 2;
  }
  std::printf("wrote %ld samples to %s\n", n, out.c_str());
  return 0;
}
