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

#include "pnpcs/signal.hpp"

#include <cmath>
#include <cstdio>
#include <fstream>
#include <limits>
#include <sstream>
#include <stdexcept>
#include <vector>

namespace pnpcs {

void Signal::validate() const {
  if (samples.size() < 1)
    throw std::invalid_argument("signal must contain at least one sample");
  if (!samples.allFinite())
    throw std::invalid_argument("signal contains non-finite samples (" +
                                (label.empty() ? std::string("unnamed") : label) +
                                ")");
}

Signal read_signal(std::istream& in, const std::string& label) {
  std::vector<double> values;
  std::string line;
  std::size_t line_no = 0;
  while (std::getline(in, line)) {
    ++line_no;
    if (!line.empty() && line.back() == '\r') line.pop_back();
    std::size_t start = line.find_first_not_of(" \t");
    if (start == std::string::npos) continue;  // blank
    if (line[start] == '#') continue;          // comment
    std::size_t consumed = 0;
    double v = 0.0;
    try {
      v = std::stod(line.substr(start), &consumed);
    } catch (const std::exception&) {
      throw std::invalid_argument(label + ":" + std::to_string(line_no) +
                                  ": not a number: '" + line + "'");
    }
    std::size_t rest = line.find_first_not_of(" \t", start + consumed);
    if (rest != std::string::npos)
      throw std::invalid_argument(label + ":" + std::to_string(line_no) +
                                  ": trailing content: '" + line + "'");
    values.push_back(v);
  }
  Signal s;
  s.samples = Eigen::Map<const Eigen::VectorXd>(values.data(),
                                                static_cast<Eigen::Index>(values.size()));
  s.label = label;
  s.validate();
  return s;
}

Signal read_signal(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw std::invalid_argument("cannot open signal file: " + path);
  return read_signal(in, path);
}

void write_signal(std::ostream& out, const Signal& s) {
  if (!s.label.empty()) out << "# " << s.label << "\n";
  char buf[40];
  for (Eigen::Index i = 0; i < s.samples.size(); ++i) {
    std::snprintf(buf, sizeof(buf), "%.17g", s.samples[i]);
    out << buf << "\n";
  }
}

void write_signal(const std::string& path, const Signal& s) {
  std::ofstream out(path);
  if (!out) throw std::invalid_argument("cannot open for writing: " + path);
  write_signal(out, s);
  if (!out) throw std::runtime_error("write failed: " + path);
}

double snr_db(const Eigen::VectorXd& reference, const Eigen::VectorXd& estimate) {
  if (reference.size() != estimate.size())
    throw std::invalid_argument("snr_db: length mismatch");
  const double ref_energy = reference.squaredNorm();
  if (ref_energy == 0.0)
    throw std::invalid_argument("snr_db: reference is identically zero");
  const double err_energy = (reference - estimate).squaredNorm();
  if (err_energy == 0.0) return std::numeric_limits<double>::infinity();
  return 10.0 * std::log10(ref_energy / err_energy);
}

double mse(const Eigen::VectorXd& reference, const Eigen::VectorXd& estimate) {
  if (reference.size() != estimate.size())
    throw std::invalid_argument("mse: length mismatch");
  return (reference - estimate).squaredNorm() /
         static_cast<double>(reference.size());
}

double compression_ratio(Eigen::Index n, Eigen::Index m) {
  if (m < 1 || m > n)
    throw std::invalid_argument("compression_ratio: need 1 <= M <= N");
  return static_cast<double>(n - m) / static_cast<double>(n) * 100.0;
}

}  // namespace pnpcs
