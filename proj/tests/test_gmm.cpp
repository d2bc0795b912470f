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
#include <sstream>

#include <doctest.h>
#include <Eigen/Dense>
#include <json.hpp>

#include "pnpcs/gmm.hpp"
#include "pnpcs/numeric.hpp"
#include "pnpcs/rng.hpp"
#include "pnpcs/synthetic_ecg.hpp"
#include "test_support.hpp"

using namespace pnpcs;
using pnpcs::testing::isotropic_model;
using pnpcs::testing::random_spd;
using pnpcs::testing::toy_model;

namespace {

// Mixture density by direct summation with long-double accumulation and a
// hand-rolled Cholesky; deliberately independent of the log-sum-exp path.
long double direct_mixture_density(const GmmModel& model,
                                   const Eigen::VectorXd& v) {
  const Eigen::Index p = model.patch_length();
  long double total = 0.0L;
  for (int j = 0; j < model.num_components(); ++j) {
    std::vector<long double> chol(p * p, 0.0L);
    const Eigen::MatrixXd& cov = model.covariances[j];
    for (Eigen::Index r = 0; r < p; ++r) {
      for (Eigen::Index c = 0; c <= r; ++c) {
        long double acc = static_cast<long double>(cov(r, c));
        for (Eigen::Index t = 0; t < c; ++t)
          acc -= chol[r * p + t] * chol[c * p + t];
        if (r == c)
          chol[r * p + c] = sqrtl(acc);
        else
          chol[r * p + c] = acc / chol[c * p + c];
      }
    }
    long double log_det = 0.0L;
    for (Eigen::Index r = 0; r < p; ++r) log_det += 2.0L * logl(chol[r * p + r]);
    // forward solve L s = (v - mu)
    std::vector<long double> s(p);
    for (Eigen::Index r = 0; r < p; ++r) {
      long double acc =
          static_cast<long double>(v[r]) - static_cast<long double>(model.means[j][r]);
      for (Eigen::Index t = 0; t < r; ++t) acc -= chol[r * p + t] * s[t];
      s[r] = acc / chol[r * p + r];
    }
    long double quad = 0.0L;
    for (Eigen::Index r = 0; r < p; ++r) quad += s[r] * s[r];
    constexpr long double kPi = 3.141592653589793238462643383279502884L;
    const long double log_norm =
        -0.5L * (static_cast<long double>(p) * logl(2.0L * kPi) + log_det + quad);
    total += static_cast<long double>(model.weights[j]) * expl(log_norm);
  }
  return total;
}

}  // namespace

TEST_SUITE("gmm") {

TEST_CASE("extract_training_patches counts and content") {
  Eigen::VectorXd x(5);
  x << 1, 2, 3, 4, 5;
  const PatchMatrix patches = extract_training_patches(x, 3);
  CHECK(patches.cols() == 3);
  CHECK(patches.col(0) == x.segment(0, 3));
  CHECK(patches.col(2) == x.segment(2, 3));

  const Eigen::VectorXd record = synthetic_ecg(10800, 1);
  CHECK(extract_training_patches(record, 30).cols() == 10771);

  const Eigen::VectorXd constant = Eigen::VectorXd::Constant(10, 2.5);
  const PatchMatrix cpatches = extract_training_patches(constant, 4);
  for (Eigen::Index i = 0; i < cpatches.cols(); ++i)
    CHECK(cpatches.col(i) == cpatches.col(0));

  CHECK_THROWS_AS(extract_training_patches(x, 6), std::invalid_argument);
}

TEST_CASE("fit_em with K=1 lands on the sample statistics") {
  rng::Stream stream(101);
  const Eigen::Index p = 4;
  const Eigen::Index n = 500;
  const Eigen::MatrixXd root = random_spd(p, stream, 0.5, 1.5);
  PatchMatrix patches(p, n);
  Eigen::VectorXd shift(p);
  shift << 1.0, -2.0, 0.5, 3.0;
  for (Eigen::Index i = 0; i < n; ++i)
    patches.col(i) = shift + root * stream.normal_vector(p);

  EmConfig cfg;
  cfg.num_components = 1;
  cfg.reg_floor = 1e-12;
  FitReport report;
  const GmmModel model = fit_em(patches, cfg, &report);

  const Eigen::VectorXd sample_mean = patches.rowwise().mean();
  Eigen::MatrixXd centered = patches.colwise() - sample_mean;
  const Eigen::MatrixXd sample_cov =
      centered * centered.transpose() / static_cast<double>(n);

  CHECK((model.means[0] - sample_mean).cwiseAbs().maxCoeff() < 1e-10);
  CHECK((model.covariances[0] - sample_cov).cwiseAbs().maxCoeff() < 1e-10);
  CHECK(model.weights[0] == doctest::Approx(1.0).epsilon(1e-14));
  CHECK(report.reseeded_components == 0);
}

TEST_CASE("fit_em separates two spherical clusters") {
  rng::Stream stream(202);
  const Eigen::Index p = 3;
  const Eigen::Index n = 10000;
  Eigen::VectorXd mu1 = Eigen::VectorXd::Constant(p, 4.0);
  Eigen::VectorXd mu2 = Eigen::VectorXd::Constant(p, -4.0);
  PatchMatrix patches(p, n);
  for (Eigen::Index i = 0; i < n; ++i) {
    const Eigen::VectorXd& mu = (i % 2 == 0) ? mu1 : mu2;
    patches.col(i) = mu + 0.5 * stream.normal_vector(p);
  }

  EmConfig cfg;
  cfg.num_components = 2;
  cfg.seed = 9;
  FitReport report;
  const GmmModel model = fit_em(patches, cfg, &report);

  // match components to the true means
  const int first = (model.means[0].mean() > 0.0) ? 0 : 1;
  const int second = 1 - first;
  CHECK((model.means[first] - mu1).cwiseAbs().maxCoeff() < 0.05);
  CHECK((model.means[second] - mu2).cwiseAbs().maxCoeff() < 0.05);
  CHECK(std::abs(model.weights[0] - 0.5) < 0.05);
  CHECK(std::abs(model.weights[1] - 0.5) < 0.05);

  for (std::size_t i = 1; i < report.log_likelihood_history.size(); ++i)
    CHECK(report.log_likelihood_history[i] >=
          report.log_likelihood_history[i - 1] -
              1e-9 * std::abs(report.log_likelihood_history[i - 1]));
}

TEST_CASE("fit_em log-likelihood is monotone on waveform patches") {
  const Eigen::VectorXd record = synthetic_ecg(2400, 3);
  const PatchMatrix patches = extract_training_patches(record, 16);
  EmConfig cfg;
  cfg.num_components = 4;
  cfg.max_iters = 60;
  cfg.seed = 17;
  FitReport report;
  fit_em(patches, cfg, &report);
  REQUIRE(report.log_likelihood_history.size() >= 2);
  for (std::size_t i = 1; i < report.log_likelihood_history.size(); ++i)
    CHECK(report.log_likelihood_history[i] >=
          report.log_likelihood_history[i - 1] -
              1e-9 * std::abs(report.log_likelihood_history[i - 1]));
}

TEST_CASE("fit_em rejects degenerate inputs") {
  PatchMatrix two(3, 2);
  two.setRandom();
  EmConfig cfg;
  cfg.num_components = 5;
  CHECK_THROWS_AS(fit_em(two, cfg), std::invalid_argument);
}

TEST_CASE("shrinkage matrices: closed forms and spectral bound") {
  SUBCASE("identity covariance, sigma = 1") {
    const GmmModel model = isotropic_model(5, 1.0);
    const ShrinkageSet shrink(model, 1.0);
    const Eigen::MatrixXd expected = 0.5 * Eigen::MatrixXd::Identity(5, 5);
    CHECK((shrink.shrinkage(0) - expected).cwiseAbs().maxCoeff() < 1e-12);
  }

  SUBCASE("diagonal covariance shrinks per eigenvalue") {
    GmmModel model;
    model.weights = Eigen::VectorXd::Ones(1);
    model.means.push_back(Eigen::VectorXd::Zero(3));
    Eigen::VectorXd d(3);
    d << 3.0, 1.0, 0.25;
    model.covariances.push_back(d.asDiagonal());
    const double sigma = 0.5;
    const ShrinkageSet shrink(model, sigma);
    for (int i = 0; i < 3; ++i)
      CHECK(shrink.shrinkage(0)(i, i) ==
            doctest::Approx(d[i] / (d[i] + sigma * sigma)).epsilon(1e-13));
  }

  SUBCASE("random SPD matches the eigendecomposition oracle") {
    rng::Stream stream(33);
    for (int rep = 0; rep < 5; ++rep) {
      GmmModel model;
      model.weights = Eigen::VectorXd::Ones(1);
      model.means.push_back(Eigen::VectorXd::Zero(6));
      model.covariances.push_back(random_spd(6, stream, 0.2, 3.0));
      const double sigma = 0.3 + stream.uniform();
      const ShrinkageSet shrink(model, sigma);

      Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> es(model.covariances[0]);
      const Eigen::VectorXd factors =
          es.eigenvalues().array() /
          (es.eigenvalues().array() + sigma * sigma);
      const Eigen::MatrixXd oracle = es.eigenvectors() *
                                     factors.asDiagonal() *
                                     es.eigenvectors().transpose();
      const double rel = (shrink.shrinkage(0) - oracle).norm() / oracle.norm();
      CHECK(rel < 1e-10);

      Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> esc(shrink.shrinkage(0));
      CHECK(esc.eigenvalues().maxCoeff() < 1.0);
      const double top = es.eigenvalues().maxCoeff();
      CHECK(esc.eigenvalues().maxCoeff() ==
            doctest::Approx(top / (top + sigma * sigma)).epsilon(1e-10));
    }
  }

  SUBCASE("sigma must be positive") {
    const GmmModel model = isotropic_model(3);
    CHECK_THROWS_AS(ShrinkageSet(model, 0.0), std::invalid_argument);
    CHECK_THROWS_AS(ShrinkageSet(model, -1.0), std::invalid_argument);
  }
}

TEST_CASE("responsibilities") {
  SUBCASE("single component is certain") {
    const GmmModel model = isotropic_model(4);
    const ShrinkageSet shrink(model, 0.5);
    const Eigen::VectorXd beta =
        responsibilities(model, shrink, Eigen::VectorXd::Ones(4));
    CHECK(beta.size() == 1);
    CHECK(beta[0] == doctest::Approx(1.0).epsilon(1e-15));
  }

  SUBCASE("identical components fall back to the weights") {
    GmmModel model;
    model.weights.resize(2);
    model.weights << 0.3, 0.7;
    for (int j = 0; j < 2; ++j) {
      model.means.push_back(Eigen::VectorXd::Zero(3));
      model.covariances.push_back(Eigen::MatrixXd::Identity(3, 3));
    }
    const ShrinkageSet shrink(model, 0.8);
    rng::Stream stream(4);
    const Eigen::VectorXd beta =
        responsibilities(model, shrink, stream.normal_vector(3));
    CHECK(beta[0] == doctest::Approx(0.3).epsilon(1e-12));
    CHECK(beta[1] == doctest::Approx(0.7).epsilon(1e-12));
  }

  SUBCASE("a patch deep in one component's bulk is assigned to it") {
    GmmModel model;
    model.weights = Eigen::VectorXd::Constant(2, 0.5);
    model.means.push_back(Eigen::VectorXd::Zero(3));
    model.means.push_back(Eigen::VectorXd::Constant(3, 50.0));
    model.covariances.push_back(Eigen::MatrixXd::Identity(3, 3));
    model.covariances.push_back(Eigen::MatrixXd::Identity(3, 3));
    const ShrinkageSet shrink(model, 1.0);
    const Eigen::VectorXd u = Eigen::VectorXd::Zero(3);
    const Eigen::VectorXd beta = responsibilities(model, shrink, u);

    // density-ratio oracle on the inflated covariances
    const double log_ratio = shrink.log_noisy_density(model, 1, u) -
                             shrink.log_noisy_density(model, 0, u);
    const double oracle = 1.0 / (1.0 + std::exp(log_ratio));
    CHECK(beta[0] > 0.99);
    CHECK(beta[0] == doctest::Approx(oracle).epsilon(1e-12));
  }

  SUBCASE("always a probability vector") {
    const GmmModel model = toy_model(5, 6, 77);
    const ShrinkageSet shrink(model, 0.4);
    rng::Stream stream(5);
    for (int rep = 0; rep < 20; ++rep) {
      const Eigen::VectorXd beta =
          responsibilities(model, shrink, 3.0 * stream.normal_vector(6));
      CHECK((beta.array() >= 0.0).all());
      CHECK(std::abs(beta.sum() - 1.0) <= 1e-12);
    }
  }

  SUBCASE("softmax is invariant to a common log shift") {
    rng::Stream stream(6);
    const Eigen::VectorXd logits = stream.normal_vector(7);
    const Eigen::VectorXd shifted = logits.array() + 123.456;
    CHECK((softmax_from_log(logits) - softmax_from_log(shifted))
              .cwiseAbs()
              .maxCoeff() < 1e-14);
  }
}

TEST_CASE("mmse_denoise_patch") {
  SUBCASE("single-component closed form") {
    const GmmModel model = isotropic_model(4, 1.0);
    const ShrinkageSet shrink(model, 1.0);
    const Eigen::VectorXd u = Eigen::VectorXd::Constant(4, 2.0);
    const Eigen::VectorXd got = mmse_denoise_patch(model, shrink, u);
    CHECK((got - Eigen::VectorXd::Ones(4)).cwiseAbs().maxCoeff() < 1e-12);
  }

  SUBCASE("vanishing noise returns the input") {
    const GmmModel model = toy_model(3, 5, 11);
    const ShrinkageSet shrink(model, 1e-8);
    rng::Stream stream(12);
    const Eigen::VectorXd u = stream.normal_vector(5);
    CHECK((mmse_denoise_patch(model, shrink, u) - u).cwiseAbs().maxCoeff() <
          1e-6);
  }

  SUBCASE("zero-mean K=1 equals the linear shrinkage exactly") {
    rng::Stream stream(13);
    GmmModel model;
    model.weights = Eigen::VectorXd::Ones(1);
    model.means.push_back(Eigen::VectorXd::Zero(4));
    model.covariances.push_back(random_spd(4, stream));
    const ShrinkageSet shrink(model, 0.6);
    const Eigen::VectorXd u = stream.normal_vector(4);
    const Eigen::VectorXd direct = shrink.shrinkage(0) * u;
    CHECK((mmse_denoise_patch(model, shrink, u) - direct)
              .cwiseAbs()
              .maxCoeff() == 0.0);
  }

  SUBCASE("nonzero mean K=1 is the affine conditional mean") {
    rng::Stream stream(14);
    GmmModel model;
    model.weights = Eigen::VectorXd::Ones(1);
    model.means.push_back(stream.normal_vector(4));
    model.covariances.push_back(random_spd(4, stream));
    const ShrinkageSet shrink(model, 0.6);
    const Eigen::VectorXd u = stream.normal_vector(4);
    const Eigen::VectorXd expected =
        model.means[0] + shrink.shrinkage(0) * (u - model.means[0]);
    CHECK((mmse_denoise_patch(model, shrink, u) - expected)
              .cwiseAbs()
              .maxCoeff() < 1e-14);
  }

  SUBCASE("matches a Monte-Carlo posterior mean on a P=4 toy model") {
    const Eigen::Index p = 4;
    const GmmModel model = toy_model(2, p, 21, /*zero_mean=*/true);
    const double sigma = 0.7;
    const ShrinkageSet shrink(model, sigma);

    // a noisy patch drawn from the model itself
    rng::Stream stream(22);
    Eigen::LLT<Eigen::MatrixXd> llt0(model.covariances[0]);
    const Eigen::VectorXd u =
        llt0.matrixL() * stream.normal_vector(p) +
        sigma * stream.normal_vector(p);

    const Eigen::VectorXd closed = mmse_denoise_patch(model, shrink, u);

    // Self-normalized importance sampling with the prior as proposal:
    // E[v|u] = E_p[v w(v)] / E_p[w(v)], w(v) = N(u - v; 0, sigma^2 I).
    const int samples = 1000000;
    std::vector<Eigen::LLT<Eigen::MatrixXd>> roots;
    roots.emplace_back(model.covariances[0]);
    roots.emplace_back(model.covariances[1]);
    Eigen::VectorXd weighted_sum = Eigen::VectorXd::Zero(p);
    double weight_sum = 0.0;
    Eigen::MatrixXd draws(p, samples);
    Eigen::VectorXd weights(samples);
    for (int s = 0; s < samples; ++s) {
      const int j = stream.uniform() < model.weights[0] ? 0 : 1;
      const Eigen::VectorXd v =
          roots[j].matrixL() * stream.normal_vector(p);
      const double logw =
          -(u - v).squaredNorm() / (2.0 * sigma * sigma);
      const double w = std::exp(logw);
      draws.col(s) = v;
      weights[s] = w;
      weighted_sum += w * v;
      weight_sum += w;
    }
    const Eigen::VectorXd estimate = weighted_sum / weight_sum;
    // standard error of the self-normalized estimator, per coordinate
    Eigen::VectorXd se(p);
    for (Eigen::Index d = 0; d < p; ++d) {
      double acc = 0.0;
      for (int s = 0; s < samples; ++s) {
        const double dev = draws(d, s) - estimate[d];
        acc += weights[s] * weights[s] * dev * dev;
      }
      se[d] = std::sqrt(acc) / weight_sum;
    }
    for (Eigen::Index d = 0; d < p; ++d)
      CHECK(std::abs(closed[d] - estimate[d]) <= 3.0 * se[d] + 1e-12);
  }
}

TEST_CASE("log_density") {
  SUBCASE("standard normal at the origin") {
    const Eigen::Index p = 6;
    const GmmModel model = isotropic_model(p);
    CHECK(log_density(model, Eigen::VectorXd::Zero(p)) ==
          doctest::Approx(-0.5 * p * std::log(2.0 * M_PI)).epsilon(1e-14));
  }

  SUBCASE("duplicated components change nothing") {
    const Eigen::Index p = 3;
    const GmmModel one = isotropic_model(p);
    GmmModel two;
    two.weights = Eigen::VectorXd::Constant(2, 0.5);
    for (int j = 0; j < 2; ++j) {
      two.means.push_back(Eigen::VectorXd::Zero(p));
      two.covariances.push_back(Eigen::MatrixXd::Identity(p, p));
    }
    rng::Stream stream(31);
    const Eigen::VectorXd v = stream.normal_vector(p);
    CHECK(log_density(two, v) ==
          doctest::Approx(log_density(one, v)).epsilon(1e-13));
  }

  SUBCASE("agrees with direct summation in extended precision") {
    const GmmModel model = toy_model(4, 4, 55);
    rng::Stream stream(56);
    for (int rep = 0; rep < 10; ++rep) {
      const Eigen::VectorXd v = 1.5 * stream.normal_vector(4);
      const double got = log_density(model, v);
      const double want =
          static_cast<double>(logl(direct_mixture_density(model, v)));
      CHECK(std::abs(got - want) <= 1e-10 * std::abs(want));
    }
  }
}

TEST_CASE("covariance spectra and eigendump") {
  GmmModel model;
  model.weights = Eigen::VectorXd::Ones(1);
  model.means.push_back(Eigen::VectorXd::Zero(3));
  Eigen::VectorXd d(3);
  d << 3.0, 2.0, 1.0;
  model.covariances.push_back(d.asDiagonal());

  const auto spectra = covariance_spectra(model);
  REQUIRE(spectra.size() == 1);
  CHECK(spectra[0].eigenvalues[0] == doctest::Approx(3.0));
  CHECK(spectra[0].eigenvalues[1] == doctest::Approx(2.0));
  CHECK(spectra[0].eigenvalues[2] == doctest::Approx(1.0));
  for (int e = 0; e < 3; ++e) {
    // axis-aligned up to sign
    CHECK(spectra[0].eigenvectors.col(e).cwiseAbs().maxCoeff() ==
          doctest::Approx(1.0).epsilon(1e-12));
  }

  const GmmModel random_model = toy_model(3, 8, 99);
  for (const auto& [values, vectors] : covariance_spectra(random_model)) {
    CHECK((vectors.transpose() * vectors -
           Eigen::MatrixXd::Identity(8, 8))
              .cwiseAbs()
              .maxCoeff() < 1e-8);
    for (int e = 0; e + 1 < 8; ++e) CHECK(values[e] >= values[e + 1]);
  }
  for (std::size_t j = 0; j < random_model.covariances.size(); ++j) {
    const auto spec = covariance_spectra(random_model)[j];
    const Eigen::MatrixXd rebuilt = spec.eigenvectors *
                                    spec.eigenvalues.asDiagonal() *
                                    spec.eigenvectors.transpose();
    CHECK((rebuilt - random_model.covariances[j]).cwiseAbs().maxCoeff() <
          1e-8);
  }

  std::stringstream csv;
  write_eigendump_csv(csv, model);
  std::string header;
  std::getline(csv, header);
  CHECK(header == "component,eigen_index,eigenvalue,v0,v1,v2");
  std::string first_row;
  std::getline(csv, first_row);
  CHECK(first_row.substr(0, 6) == "0,0,3,");
}

TEST_CASE("model JSON round trip and validation") {
  const GmmModel model = toy_model(3, 5, 123);
  const std::string text = model_to_json(model);
  const GmmModel back = model_from_json(text);
  CHECK(back.weights == model.weights);
  for (int j = 0; j < 3; ++j) {
    CHECK(back.means[j] == model.means[j]);
    CHECK(back.covariances[j] == model.covariances[j]);
  }

  SUBCASE("rejects weight drift") {
    std::string bad = text;
    const std::size_t pos = bad.find("\"weights\"");
    REQUIRE(pos != std::string::npos);
    bad.replace(pos, 10, "\"weightX\"");
    CHECK_THROWS_AS(model_from_json(bad), std::invalid_argument);
  }

  SUBCASE("rejects asymmetric covariance") {
    nlohmann::json j = nlohmann::json::parse(text);
    j["covariances"][0][0][1] =
        j["covariances"][0][0][1].get<double>() + 1e-3;
    CHECK_THROWS_AS(model_from_json(j.dump()), std::invalid_argument);
  }

  SUBCASE("rejects non-positive-definite covariance") {
    nlohmann::json j = nlohmann::json::parse(text);
    for (int r = 0; r < 5; ++r)
      for (int c = 0; c < 5; ++c) j["covariances"][1][r][c] = 0.0;
    CHECK_THROWS_AS(model_from_json(j.dump()), std::invalid_argument);
  }

  SUBCASE("rejects unknown format version") {
    nlohmann::json j = nlohmann::json::parse(text);
    j["format_version"] = 2;
    CHECK_THROWS_AS(model_from_json(j.dump()), std::invalid_argument);
  }

  SUBCASE("rejects unnormalized weights") {
    nlohmann::json j = nlohmann::json::parse(text);
    j["weights"][0] = j["weights"][0].get<double>() + 0.25;
    CHECK_THROWS_AS(model_from_json(j.dump()), std::invalid_argument);
  }
}

}  // TEST_SUITE("gmm")
