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

#include "pnpcs/gmm.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <numeric>
#include <ostream>
#include <sstream>
#include <stdexcept>

#include <Eigen/Eigenvalues>

#include <json.hpp>

#include "pnpcs/errors.hpp"
#include "pnpcs/numeric.hpp"
#include "pnpcs/rng.hpp"

namespace pnpcs {

namespace {

constexpr double kLog2Pi = 1.8378770664093454835606594728112;

// log N(x; mu, A) for every column of X, given chol(A) and log det A.
Eigen::VectorXd gaussian_log_density_cols(const Eigen::MatrixXd& x_cols,
                                          const Eigen::VectorXd& mu,
                                          const Eigen::LLT<Eigen::MatrixXd>& llt,
                                          double log_det) {
  const Eigen::Index p = mu.size();
  Eigen::MatrixXd centered = x_cols.colwise() - mu;
  llt.matrixL().solveInPlace(centered);
  const Eigen::VectorXd sq = centered.colwise().squaredNorm();
  return (-0.5 * (static_cast<double>(p) * kLog2Pi + log_det + sq.array()))
      .matrix();
}

double llt_log_det(const Eigen::LLT<Eigen::MatrixXd>& llt) {
  return 2.0 * llt.matrixLLT().diagonal().array().log().sum();
}

// Clamp the spectrum of a symmetric matrix from below.
Eigen::MatrixXd floor_spd(const Eigen::MatrixXd& sym, double floor) {
  Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> es(sym);
  if (es.info() != Eigen::Success)
    throw NumericalError("covariance eigendecomposition failed");
  Eigen::VectorXd d = es.eigenvalues().cwiseMax(floor);
  Eigen::MatrixXd out =
      es.eigenvectors() * d.asDiagonal() * es.eigenvectors().transpose();
  return 0.5 * (out + out.transpose());
}

}  // namespace

void GmmModel::validate() const {
  const std::size_t k = static_cast<std::size_t>(weights.size());
  if (k < 1) throw std::invalid_argument("model must have K >= 1 components");
  if (means.size() != k || covariances.size() != k)
    throw std::invalid_argument("model arrays disagree on K");
  if ((weights.array() < 0.0).any())
    throw std::invalid_argument("mixture weights must be nonnegative");
  if (std::abs(weights.sum() - 1.0) > 1e-12)
    throw std::invalid_argument("mixture weights must sum to 1");
  const Eigen::Index p = means.front().size();
  if (p < 1) throw std::invalid_argument("patch length must be >= 1");
  for (std::size_t j = 0; j < k; ++j) {
    if (means[j].size() != p)
      throw std::invalid_argument("component means disagree on P");
    const Eigen::MatrixXd& s = covariances[j];
    if (s.rows() != p || s.cols() != p)
      throw std::invalid_argument("covariance shape mismatch");
    if ((s - s.transpose()).cwiseAbs().maxCoeff() > 1e-10)
      throw std::invalid_argument("covariance is not symmetric");
    Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> es(s,
                                                      Eigen::EigenvaluesOnly);
    if (es.info() != Eigen::Success || es.eigenvalues().minCoeff() <= 0.0)
      throw std::invalid_argument("covariance is not positive definite");
  }
}

PatchMatrix extract_training_patches(const Eigen::VectorXd& x,
                                     Eigen::Index patch_length) {
  const Eigen::Index n = x.size();
  if (patch_length < 1 || n < patch_length)
    throw std::invalid_argument("training extraction needs N >= P >= 1");
  const Eigen::Index count = n - patch_length + 1;
  PatchMatrix out(patch_length, count);
  for (Eigen::Index i = 0; i < count; ++i)
    out.col(i) = x.segment(i, patch_length);
  return out;
}

GmmModel fit_em(const PatchMatrix& patches, const EmConfig& config,
                FitReport* report) {
  const Eigen::Index p = patches.rows();
  const Eigen::Index n = patches.cols();
  const int k = config.num_components;
  if (k < 1) throw std::invalid_argument("fit_em: K must be >= 1");
  if (n < k) throw std::invalid_argument("fit_em: fewer patches than components");
  if (!patches.allFinite())
    throw std::invalid_argument("fit_em: patches contain non-finite values");

  const Eigen::VectorXd global_mean = patches.rowwise().mean();
  Eigen::MatrixXd centered = patches.colwise() - global_mean;
  const Eigen::MatrixXd global_cov =
      centered * centered.transpose() / static_cast<double>(n);
  const double mean_variance =
      global_cov.trace() / static_cast<double>(p);

  double reg_floor = config.reg_floor;
  if (reg_floor <= 0.0) reg_floor = 1e-6 * std::max(mean_variance, 1e-300);

  // Farthest-point seeding on a subsample, deterministic given the seed.
  rng::Stream stream(rng::derive_seed(config.seed, rng::Purpose::kEmInit));
  const Eigen::Index sub_count = std::min<Eigen::Index>(n, 2048);
  std::vector<Eigen::Index> sub(n);
  std::iota(sub.begin(), sub.end(), 0);
  for (Eigen::Index i = 0; i < sub_count; ++i) {
    const Eigen::Index j =
        i + static_cast<Eigen::Index>(stream.below(static_cast<std::uint64_t>(n - i)));
    std::swap(sub[i], sub[j]);
  }
  sub.resize(sub_count);

  std::vector<Eigen::Index> centers;
  centers.push_back(sub[stream.below(static_cast<std::uint64_t>(sub_count))]);
  Eigen::VectorXd min_dist(sub_count);
  for (Eigen::Index i = 0; i < sub_count; ++i)
    min_dist[i] = (patches.col(sub[i]) - patches.col(centers[0])).squaredNorm();
  while (static_cast<int>(centers.size()) < k) {
    Eigen::Index best = 0;
    min_dist.maxCoeff(&best);
    centers.push_back(sub[best]);
    for (Eigen::Index i = 0; i < sub_count; ++i)
      min_dist[i] = std::min(
          min_dist[i],
          (patches.col(sub[i]) - patches.col(centers.back())).squaredNorm());
  }

  GmmModel model;
  model.weights = Eigen::VectorXd::Constant(k, 1.0 / k);
  model.means.reserve(k);
  model.covariances.reserve(k);
  const Eigen::MatrixXd init_cov = floor_spd(global_cov, reg_floor);
  for (int j = 0; j < k; ++j) {
    model.means.push_back(patches.col(centers[j]));
    model.covariances.push_back(init_cov);
  }

  // Within-patch variances, for re-seeding empty components.
  Eigen::VectorXd patch_variance(n);
  for (Eigen::Index i = 0; i < n; ++i) {
    const double m = patches.col(i).mean();
    patch_variance[i] =
        (patches.col(i).array() - m).square().sum() / static_cast<double>(p);
  }
  std::vector<Eigen::Index> by_variance(n);
  std::iota(by_variance.begin(), by_variance.end(), 0);
  std::sort(by_variance.begin(), by_variance.end(),
            [&](Eigen::Index a, Eigen::Index b) {
              return patch_variance[a] > patch_variance[b];
            });

  FitReport local_report;
  local_report.reg_floor = reg_floor;
  Eigen::MatrixXd log_w(k, n);
  double prev_loglik = -std::numeric_limits<double>::infinity();

  for (int iter = 1; iter <= config.max_iters; ++iter) {
    // E-step: log responsibilities and the mean per-patch log-likelihood.
    for (int j = 0; j < k; ++j) {
      Eigen::LLT<Eigen::MatrixXd> llt(model.covariances[j]);
      if (llt.info() != Eigen::Success)
        throw NumericalError("fit_em: covariance factorization failed");
      log_w.row(j) =
          gaussian_log_density_cols(patches, model.means[j], llt,
                                    llt_log_det(llt))
              .transpose()
              .array() +
          std::log(model.weights[j]);
    }
    double loglik = 0.0;
    Eigen::RowVectorXd col_lse(n);
    for (Eigen::Index i = 0; i < n; ++i) {
      col_lse[i] = log_sum_exp(log_w.col(i));
      loglik += col_lse[i];
    }
    loglik /= static_cast<double>(n);
    local_report.log_likelihood_history.push_back(loglik);
    local_report.iterations = iter;

    if (iter > 1 &&
        loglik - prev_loglik <
            config.loglik_rel_tol * std::abs(prev_loglik))
      break;
    prev_loglik = loglik;

    // M-step.
    Eigen::MatrixXd resp =
        (log_w.rowwise() - col_lse).array().exp().matrix();  // K x n
    int reseed_cursor = 0;
    for (int j = 0; j < k; ++j) {
      const double nj = resp.row(j).sum();
      if (nj < 1e-10) {
        // Re-seed a dead component from the highest-variance patch.
        const Eigen::Index pick =
            by_variance[std::min<std::size_t>(reseed_cursor++,
                                              by_variance.size() - 1)];
        model.means[j] = patches.col(pick);
        model.covariances[j] = init_cov;
        model.weights[j] = 1.0 / static_cast<double>(n);
        ++local_report.reseeded_components;
        continue;
      }
      model.weights[j] = nj / static_cast<double>(n);
      model.means[j] = patches * resp.row(j).transpose() / nj;
      Eigen::MatrixXd cen = patches.colwise() - model.means[j];
      Eigen::MatrixXd cov =
          cen * resp.row(j).asDiagonal() * cen.transpose() / nj;
      model.covariances[j] = floor_spd(0.5 * (cov + cov.transpose()), reg_floor);
    }
    model.weights /= model.weights.sum();
  }

  local_report.final_log_likelihood =
      local_report.log_likelihood_history.back();
  if (report) *report = local_report;
  model.weights /= model.weights.sum();
  model.validate();
  return model;
}

double log_density(const GmmModel& model, const Eigen::VectorXd& v) {
  if (v.size() != model.patch_length())
    throw std::invalid_argument("log_density: patch length mismatch");
  const int k = model.num_components();
  Eigen::VectorXd log_w(k);
  for (int j = 0; j < k; ++j) {
    Eigen::LLT<Eigen::MatrixXd> llt(model.covariances[j]);
    if (llt.info() != Eigen::Success)
      throw NumericalError("log_density: covariance factorization failed");
    log_w[j] = std::log(model.weights[j]) +
               gaussian_log_density_cols(v, model.means[j], llt,
                                         llt_log_det(llt))[0];
  }
  return log_sum_exp(log_w);
}

ShrinkageSet::ShrinkageSet(const GmmModel& model, double sigma) {
  if (!(sigma > 0.0))
    throw std::invalid_argument("shrinkage requires sigma > 0");
  model.validate();
  sigma_ = sigma;
  const int k = model.num_components();
  const Eigen::Index p = model.patch_length();
  const Eigen::MatrixXd noise =
      sigma * sigma * Eigen::MatrixXd::Identity(p, p);
  shrinkages_.reserve(k);
  llts_.reserve(k);
  log_dets_.reserve(k);
  for (int j = 0; j < k; ++j) {
    Eigen::MatrixXd inflated = model.covariances[j] + noise;
    Eigen::LLT<Eigen::MatrixXd> llt(inflated);
    if (llt.info() != Eigen::Success)
      throw NumericalError("shrinkage: factorization of Sigma + sigma^2 I failed");
    // (Sigma + s^2 I) X = Sigma gives X = C^T; C is symmetric up to
    // roundoff, so symmetrize explicitly.
    Eigen::MatrixXd x = llt.solve(model.covariances[j]);
    shrinkages_.push_back(0.5 * (x + x.transpose()));
    log_dets_.push_back(llt_log_det(llt));
    llts_.push_back(std::move(llt));
  }
  density_available_ = true;
}

ShrinkageSet ShrinkageSet::identity_shrinkage(const GmmModel& model) {
  model.validate();
  ShrinkageSet s;
  s.sigma_ = 0.0;
  const Eigen::Index p = model.patch_length();
  for (int j = 0; j < model.num_components(); ++j)
    s.shrinkages_.push_back(Eigen::MatrixXd::Identity(p, p));
  s.density_available_ = false;
  return s;
}

double ShrinkageSet::log_noisy_density(const GmmModel& model, int j,
                                       const Eigen::VectorXd& u) const {
  if (!density_available_)
    throw std::invalid_argument(
        "density evaluation unavailable on an identity shrinkage set");
  return gaussian_log_density_cols(u, model.means[j], llts_[j],
                                   log_dets_[j])[0];
}

Eigen::MatrixXd ShrinkageSet::log_noisy_densities(
    const GmmModel& model, const PatchMatrix& u_cols) const {
  if (!density_available_)
    throw std::invalid_argument(
        "density evaluation unavailable on an identity shrinkage set");
  const int k = num_components();
  Eigen::MatrixXd out(k, u_cols.cols());
  for (int j = 0; j < k; ++j)
    out.row(j) = gaussian_log_density_cols(u_cols, model.means[j], llts_[j],
                                           log_dets_[j])
                     .transpose();
  return out;
}

Eigen::VectorXd responsibilities(const GmmModel& model,
                                 const ShrinkageSet& shrink,
                                 const Eigen::VectorXd& u) {
  if (u.size() != model.patch_length())
    throw std::invalid_argument("responsibilities: patch length mismatch");
  const int k = model.num_components();
  Eigen::VectorXd log_w(k);
  for (int j = 0; j < k; ++j)
    log_w[j] =
        std::log(model.weights[j]) + shrink.log_noisy_density(model, j, u);
  return softmax_from_log(log_w);
}

Eigen::MatrixXd responsibilities_all(const GmmModel& model,
                                     const ShrinkageSet& shrink,
                                     const PatchMatrix& u_cols) {
  Eigen::MatrixXd log_w = shrink.log_noisy_densities(model, u_cols);
  for (int j = 0; j < model.num_components(); ++j)
    log_w.row(j).array() += std::log(model.weights[j]);
  Eigen::MatrixXd out(log_w.rows(), log_w.cols());
  for (Eigen::Index i = 0; i < log_w.cols(); ++i)
    out.col(i) = softmax_from_log(log_w.col(i));
  return out;
}

Eigen::VectorXd mmse_denoise_patch(const GmmModel& model,
                                   const ShrinkageSet& shrink,
                                   const Eigen::VectorXd& u) {
  const Eigen::VectorXd beta = responsibilities(model, shrink, u);
  Eigen::VectorXd out = Eigen::VectorXd::Zero(u.size());
  for (int j = 0; j < model.num_components(); ++j) {
    if (beta[j] == 0.0) continue;
    out += beta[j] *
           (model.means[j] + shrink.shrinkage(j) * (u - model.means[j]));
  }
  return out;
}

std::vector<ComponentSpectrum> covariance_spectra(const GmmModel& model) {
  std::vector<ComponentSpectrum> out;
  out.reserve(model.covariances.size());
  for (const Eigen::MatrixXd& cov : model.covariances) {
    Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> es(cov);
    if (es.info() != Eigen::Success)
      throw NumericalError("covariance eigendecomposition failed");
    ComponentSpectrum spec;
    spec.eigenvalues = es.eigenvalues().reverse();      // descending
    spec.eigenvectors = es.eigenvectors().rowwise().reverse();
    out.push_back(std::move(spec));
  }
  return out;
}

void write_eigendump_csv(std::ostream& out, const GmmModel& model) {
  const Eigen::Index p = model.patch_length();
  out << "component,eigen_index,eigenvalue";
  for (Eigen::Index t = 0; t < p; ++t) out << ",v" << t;
  out << "\n";
  const auto spectra = covariance_spectra(model);
  char buf[40];
  for (std::size_t j = 0; j < spectra.size(); ++j) {
    for (Eigen::Index e = 0; e < p; ++e) {
      out << j << "," << e;
      std::snprintf(buf, sizeof(buf), "%.17g", spectra[j].eigenvalues[e]);
      out << "," << buf;
      for (Eigen::Index t = 0; t < p; ++t) {
        std::snprintf(buf, sizeof(buf), "%.17g",
                      spectra[j].eigenvectors(t, e));
        out << "," << buf;
      }
      out << "\n";
    }
  }
}

std::string model_to_json(const GmmModel& model) {
  model.validate();
  nlohmann::json j;
  j["format_version"] = 1;
  j["K"] = model.num_components();
  j["P"] = model.patch_length();
  j["weights"] = std::vector<double>(model.weights.data(),
                                     model.weights.data() + model.weights.size());
  nlohmann::json means = nlohmann::json::array();
  for (const auto& mu : model.means)
    means.push_back(std::vector<double>(mu.data(), mu.data() + mu.size()));
  j["means"] = std::move(means);
  nlohmann::json covs = nlohmann::json::array();
  for (const auto& cov : model.covariances) {
    nlohmann::json rows = nlohmann::json::array();
    for (Eigen::Index r = 0; r < cov.rows(); ++r) {
      std::vector<double> row(cov.cols());
      for (Eigen::Index c = 0; c < cov.cols(); ++c) row[c] = cov(r, c);
      rows.push_back(std::move(row));
    }
    covs.push_back(std::move(rows));
  }
  j["covariances"] = std::move(covs);
  return j.dump(2);
}

GmmModel model_from_json(const std::string& text) {
  nlohmann::json j;
  try {
    j = nlohmann::json::parse(text);
  } catch (const nlohmann::json::parse_error& e) {
    throw std::invalid_argument(std::string("model JSON parse error: ") +
                                e.what());
  }
  try {
    if (j.at("format_version").get<int>() != 1)
      throw std::invalid_argument("unsupported model format_version");
    const int k = j.at("K").get<int>();
    const Eigen::Index p = j.at("P").get<Eigen::Index>();
    GmmModel model;
    const auto weights = j.at("weights").get<std::vector<double>>();
    if (static_cast<int>(weights.size()) != k)
      throw std::invalid_argument("weights length disagrees with K");
    model.weights =
        Eigen::Map<const Eigen::VectorXd>(weights.data(), weights.size());
    for (const auto& mu_json : j.at("means")) {
      const auto mu = mu_json.get<std::vector<double>>();
      if (static_cast<Eigen::Index>(mu.size()) != p)
        throw std::invalid_argument("mean length disagrees with P");
      model.means.push_back(
          Eigen::Map<const Eigen::VectorXd>(mu.data(), mu.size()));
    }
    for (const auto& cov_json : j.at("covariances")) {
      Eigen::MatrixXd cov(p, p);
      if (static_cast<Eigen::Index>(cov_json.size()) != p)
        throw std::invalid_argument("covariance row count disagrees with P");
      Eigen::Index r = 0;
      for (const auto& row_json : cov_json) {
        const auto row = row_json.get<std::vector<double>>();
        if (static_cast<Eigen::Index>(row.size()) != p)
          throw std::invalid_argument("covariance row length disagrees with P");
        for (Eigen::Index c = 0; c < p; ++c) cov(r, c) = row[c];
        ++r;
      }
      model.covariances.push_back(std::move(cov));
    }
    model.validate();
    return model;
  } catch (const nlohmann::json::exception& e) {
    throw std::invalid_argument(std::string("malformed model JSON: ") +
                                e.what());
  }
}

void save_model_json(const std::string& path, const GmmModel& model) {
  std::ofstream out(path);
  if (!out) throw std::invalid_argument("cannot open for writing: " + path);
  out << model_to_json(model) << "\n";
  if (!out) throw std::runtime_error("write failed: " + path);
}

GmmModel load_model_json(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw std::invalid_argument("cannot open model file: " + path);
  std::ostringstream ss;
  ss << in.rdbuf();
  return model_from_json(ss.str());
}

}  // namespace pnpcs
