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

#ifndef PNPCS_SIGNAL_HPP
#define PNPCS_SIGNAL_HPP

#include <iosfwd>
#include <string>

#include <Eigen/Core>

namespace pnpcs {

// A one-dimensional real-valued sample vector. Samples must be finite and
// nonempty; validate() enforces both.
struct Signal {
  Eigen::VectorXd samples;
  std::string label;

  Eigen::Index size() const { return samples.size(); }
  void validate() const;  // throws std::invalid_argument on violation
};

// File format: UTF-8 text, one decimal sample per line, '#' lines ignored,
// LF endings. Blank lines are skipped.
Signal read_signal(const std::string& path);
Signal read_signal(std::istream& in, const std::string& label);
void write_signal(const std::string& path, const Signal& s);
void write_signal(std::ostream& out, const Signal& s);

// 10*log10(||x||^2 / ||x - xhat||^2), in dB. Exact recovery returns the
// +infinity sentinel rather than an error. Throws if the reference is
// identically zero or the lengths differ.
double snr_db(const Eigen::VectorXd& reference, const Eigen::VectorXd& estimate);

// (1/N) * ||x - xhat||^2.
double mse(const Eigen::VectorXd& reference, const Eigen::VectorXd& estimate);

// (N - M) / N * 100, the percentage of samples removed by compression.
double compression_ratio(Eigen::Index n, Eigen::Index m);

}  // namespace pnpcs

#endif  // PNPCS_SIGNAL_HPP
