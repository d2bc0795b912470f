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

#include <doctest.h>
#include <Eigen/Dense>

#include "pnpcs/denoiser.hpp"
#include "pnpcs/gmm.hpp"
#include "pnpcs/rng.hpp"
#include "pnpcs/signal.hpp"
#include "pnpcs/synthetic_ecg.hpp"
#include "test_support.hpp"

using namespace pnpcs;
using pnpcs::testing::isotropic_model;
using pnpcs::testing::random_row_stochastic;
using pnpcs::testing::toy_model;

TEST_SUITE("denoiser") {

TEST_CASE("adaptive denoiser in the vanishing-noise limit is the identity") {
  const GmmModel model = toy_model(3, 5, 41);
  const AdaptiveDenoiser denoiser(model, 1e-8, 20);
  rng::Stream stream(42);
  const Eigen::VectorXd z = stream.normal_vector(20);
  CHECK((denoiser.apply(z) - z).cwiseAbs().maxCoeff() < 1e-6);
}

TEST_CASE("adaptive denoiser with one isotropic component is a pure scale") {
  const double c = 0.8;
  const double sigma = 0.5;
  const GmmModel model = isotropic_model(5, c);
  const AdaptiveDenoiser denoiser(model, sigma, 30);
  rng::Stream stream(43);
  const Eigen::VectorXd z = stream.normal_vector(30);
  const double factor = c / (c + sigma * sigma);
  CHECK((denoiser.apply(z) - factor * z).cwiseAbs().maxCoeff() <
        1e-14 * z.cwiseAbs().maxCoeff());
}

TEST_CASE("adaptive denoiser improves the SNR of a noisy waveform") {
  const GmmModel& model = pnpcs::testing::shared_test_model();

  const Eigen::VectorXd clean = synthetic_ecg(200, 8);
  rng::Stream stream(9);
  Eigen::VectorXd noise = stream.normal_vector(200);
  noise *= clean.norm() / (noise.norm() * std::pow(10.0, 30.0 / 20.0));
  const Eigen::VectorXd noisy = clean + noise;
  const double sigma = noise.norm() / std::sqrt(200.0);

  const AdaptiveDenoiser denoiser(model, sigma, 200);
  const Eigen::VectorXd denoised = denoiser.apply(noisy);
  CHECK(snr_db(clean, noisy) == doctest::Approx(30.0).epsilon(1e-9));
  CHECK(snr_db(clean, denoised) > snr_db(clean, noisy));
}

TEST_CASE("freeze_coefficients") {
  rng::Stream stream(51);

  SUBCASE("single component freezes to all ones") {
    const GmmModel model = isotropic_model(4);
    const AdaptiveDenoiser denoiser(model, 0.7, 12);
    const FrozenCoefficients coeffs =
        freeze_coefficients(denoiser, stream.normal_vector(12));
    CHECK(coeffs.b.rows() == 12);
    CHECK(coeffs.b.cols() == 1);
    CHECK((coeffs.b.array() - 1.0).abs().maxCoeff() < 1e-14);
  }

  SUBCASE("identical components freeze to the weights") {
    GmmModel model;
    model.weights.resize(2);
    model.weights << 0.25, 0.75;
    for (int j = 0; j < 2; ++j) {
      model.means.push_back(Eigen::VectorXd::Zero(3));
      model.covariances.push_back(Eigen::MatrixXd::Identity(3, 3));
    }
    const AdaptiveDenoiser denoiser(model, 0.5, 9);
    const FrozenCoefficients coeffs =
        freeze_coefficients(denoiser, stream.normal_vector(9));
    for (Eigen::Index i = 0; i < 9; ++i) {
      CHECK(coeffs.b(i, 0) == doctest::Approx(0.25).epsilon(1e-12));
      CHECK(coeffs.b(i, 1) == doctest::Approx(0.75).epsilon(1e-12));
    }
  }

  SUBCASE("rows are stochastic for any surrogate") {
    const GmmModel model = toy_model(4, 5, 52);
    const AdaptiveDenoiser denoiser(model, 0.3, 25);
    const FrozenCoefficients coeffs =
        freeze_coefficients(denoiser, 2.0 * stream.normal_vector(25));
    coeffs.validate();
    for (Eigen::Index i = 0; i < 25; ++i)
      CHECK(std::abs(coeffs.b.row(i).sum() - 1.0) <= 1e-12);
  }

  SUBCASE("validation rejects bad tables") {
    FrozenCoefficients bad;
    bad.b = Eigen::MatrixXd::Constant(3, 2, 0.5);
    bad.b(1, 0) = -0.1;
    bad.b(1, 1) = 1.1;
    CHECK_THROWS_AS(bad.validate(), std::invalid_argument);
    bad.b = Eigen::MatrixXd::Constant(3, 2, 0.4);
    CHECK_THROWS_AS(bad.validate(), std::invalid_argument);
  }
}

TEST_CASE("frozen denoiser is linear and matches its dense form") {
  const GmmModel model = toy_model(2, 3, 61, /*zero_mean=*/true);
  const AdaptiveDenoiser denoiser(model, 0.4, 6);
  rng::Stream stream(62);
  const FrozenCoefficients coeffs =
      freeze_coefficients(denoiser, stream.normal_vector(6));
  const FrozenDenoiser frozen(denoiser, coeffs);

  SUBCASE("linearity") {
    const Eigen::VectorXd z1 = stream.normal_vector(6);
    const Eigen::VectorXd z2 = stream.normal_vector(6);
    const double a = 1.0 + stream.uniform();
    const Eigen::VectorXd lhs = frozen.apply_linear(a * z1 + z2);
    const Eigen::VectorXd rhs =
        a * frozen.apply_linear(z1) + frozen.apply_linear(z2);
    CHECK((lhs - rhs).norm() <= 1e-10 * std::max(1.0, rhs.norm()));
  }

  SUBCASE("dense oracle") {
    const Eigen::MatrixXd w = frozen.materialize();
    for (int rep = 0; rep < 10; ++rep) {
      const Eigen::VectorXd z = stream.normal_vector(6);
      const Eigen::VectorXd direct = w * z;
      const double rel =
          (frozen.apply_linear(z) - direct).norm() / direct.norm();
      CHECK(rel < 1e-12);
    }
  }

  SUBCASE("free function equals the class path") {
    const Eigen::VectorXd z = stream.normal_vector(6);
    CHECK(denoise_frozen(denoiser, coeffs, z) == frozen.apply_linear(z));
  }
}

TEST_CASE("frozen denoiser requires P to divide N") {
  const GmmModel model = toy_model(2, 3, 63);
  const AdaptiveDenoiser denoiser(model, 0.4, 7);  // 7 % 3 != 0
  const FrozenCoefficients coeffs = uniform_coefficients(model, 7);
  CHECK_THROWS_AS(FrozenDenoiser(denoiser, coeffs), std::invalid_argument);
}

TEST_CASE("materialized operator is symmetric and p.s.d.") {
  const GmmModel model = toy_model(3, 4, 71);
  const AdaptiveDenoiser denoiser(model, 0.6, 16);
  rng::Stream stream(72);
  FrozenCoefficients coeffs;
  coeffs.b = random_row_stochastic(16, 3, stream);
  const Eigen::MatrixXd w = materialize_w(denoiser, coeffs);

  CHECK((w - w.transpose()).cwiseAbs().maxCoeff() < 1e-10);
  for (int rep = 0; rep < 100; ++rep) {
    const Eigen::VectorXd z = stream.normal_vector(16);
    CHECK(z.dot(w * z) >= -1e-12);
  }
}

TEST_CASE("materialized operator matches a direct construction when N=P") {
  const Eigen::Index n = 4;
  rng::Stream stream(73);
  GmmModel model;
  model.weights = Eigen::VectorXd::Ones(1);
  model.means.push_back(Eigen::VectorXd::Zero(n));
  model.covariances.push_back(pnpcs::testing::random_spd(n, stream));
  const double sigma = 0.5;
  const AdaptiveDenoiser denoiser(model, sigma, n);
  const FrozenCoefficients coeffs = uniform_coefficients(model, n);
  const Eigen::MatrixXd got = materialize_w(denoiser, coeffs);

  // With K=1 every blend equals C, so W averages the N cyclic shifts of C.
  const Eigen::MatrixXd c = denoiser.shrinkage().shrinkage(0);
  Eigen::MatrixXd oracle = Eigen::MatrixXd::Zero(n, n);
  for (Eigen::Index i = 0; i < n; ++i)
    for (Eigen::Index a = 0; a < n; ++a)
      for (Eigen::Index b = 0; b < n; ++b)
        oracle((i + a) % n, (i + b) % n) += c(a, b);
  oracle /= static_cast<double>(n);
  CHECK((got - oracle).cwiseAbs().maxCoeff() < 1e-14);
}

TEST_CASE("identity shrinkage makes the frozen operator the identity") {
  const GmmModel model = toy_model(2, 4, 81, /*zero_mean=*/true);
  const AdaptiveDenoiser denoiser(
      model, ShrinkageSet::identity_shrinkage(model), 12);
  rng::Stream stream(82);
  FrozenCoefficients coeffs;
  coeffs.b = random_row_stochastic(12, 2, stream);
  const FrozenDenoiser frozen(denoiser, coeffs);
  for (int rep = 0; rep < 10; ++rep) {
    const Eigen::VectorXd z = stream.normal_vector(12);
    CHECK((frozen.apply_linear(z) - z).cwiseAbs().maxCoeff() <=
          1e-12 * z.cwiseAbs().maxCoeff());
    const double quad = z.dot(frozen.apply_linear(z));
    CHECK(std::abs(quad - z.squaredNorm()) <= 1e-12 * z.squaredNorm());
  }
}

TEST_CASE("frozen and adaptive denoisers agree at the freeze point") {
  SUBCASE("zero-mean model, linear part only") {
    const GmmModel model = toy_model(3, 4, 91, /*zero_mean=*/true);
    const AdaptiveDenoiser denoiser(model, 0.5, 12);
    rng::Stream stream(92);
    const Eigen::VectorXd z = stream.normal_vector(12);
    const Eigen::VectorXd frozen_out =
        denoise_frozen(denoiser, freeze_coefficients(denoiser, z), z);
    const Eigen::VectorXd adaptive_out = denoiser.apply(z);
    CHECK((frozen_out - adaptive_out).norm() <=
          1e-10 * adaptive_out.norm());
  }

  SUBCASE("nonzero means need the affine part") {
    const GmmModel model = toy_model(3, 4, 93);
    const AdaptiveDenoiser denoiser(model, 0.5, 12);
    rng::Stream stream(94);
    const Eigen::VectorXd z = stream.normal_vector(12);
    const FrozenDenoiser frozen(denoiser, freeze_coefficients(denoiser, z));
    CHECK((frozen.apply(z) - denoiser.apply(z)).norm() <=
          1e-10 * denoiser.apply(z).norm());
  }

  SUBCASE("zero-mean model has a zero offset") {
    const GmmModel model = toy_model(2, 3, 95, /*zero_mean=*/true);
    const AdaptiveDenoiser denoiser(model, 0.5, 9);
    const FrozenDenoiser frozen(denoiser,
                                uniform_coefficients(model, 9));
    CHECK(frozen.offset().cwiseAbs().maxCoeff() == 0.0);
  }
}

TEST_CASE("verify_contractivity") {
  SUBCASE("isotropic case has lambda exactly one half") {
    const GmmModel model = isotropic_model(4, 1.0);
    const AdaptiveDenoiser denoiser(model, 1.0, 12);
    const ContractivityReport report =
        verify_contractivity(denoiser, uniform_coefficients(model, 12));
    CHECK(report.converged);
    CHECK(report.pass);
    CHECK(report.lambda_max == doctest::Approx(0.5).epsilon(1e-12));
  }

  SUBCASE("any stochastic table with positive sigma is contractive") {
    // components on distinct scales, so the blend spectra are well spread
    GmmModel model = toy_model(3, 5, 96);
    model.covariances[0] *= 0.25;
    model.covariances[2] *= 4.0;
    const AdaptiveDenoiser denoiser(model, 0.2, 20);
    rng::Stream stream(97);
    for (int rep = 0; rep < 5; ++rep) {
      FrozenCoefficients coeffs;
      coeffs.b = random_row_stochastic(20, 3, stream);
      const ContractivityReport report =
          verify_contractivity(denoiser, coeffs);
      CHECK(report.converged);
      CHECK(report.lambda_max < 1.0);
      CHECK(report.pass);
    }
  }

  SUBCASE("agrees with a dense eigensolver on a small instance") {
    const GmmModel model = toy_model(2, 3, 98);
    const AdaptiveDenoiser denoiser(model, 0.4, 12);
    rng::Stream stream(99);
    FrozenCoefficients coeffs;
    coeffs.b = random_row_stochastic(12, 2, stream);
    const FrozenDenoiser frozen(denoiser, coeffs);
    const ContractivityReport report = verify_contractivity(frozen);
    Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> es(frozen.materialize(),
                                                      Eigen::EigenvaluesOnly);
    CHECK(std::abs(report.lambda_max - es.eigenvalues().maxCoeff()) < 1e-8);
  }

  SUBCASE("tiny sigma still verifies strictly below one") {
    // covariance scale chosen so 1 - lambda stays representable
    const GmmModel model = isotropic_model(3, 1e-9);
    const AdaptiveDenoiser denoiser(model, 1e-12, 9);
    const ContractivityReport report =
        verify_contractivity(denoiser, uniform_coefficients(model, 9));
    CHECK(report.pass);
    CHECK(report.lambda_max < 1.0);
    CHECK(report.lambda_max > 0.999);
  }
}

TEST_CASE("verified constant bounds the frozen map on random pairs") {
  const GmmModel model = toy_model(3, 4, 111);
  const AdaptiveDenoiser denoiser(model, 0.3, 16);
  rng::Stream stream(112);
  FrozenCoefficients coeffs;
  coeffs.b = random_row_stochastic(16, 3, stream);
  const FrozenDenoiser frozen(denoiser, coeffs);
  const ContractivityReport report = verify_contractivity(frozen);
  REQUIRE(report.pass);
  const double bound = report.lambda_max + 1e-9;
  for (int rep = 0; rep < 50; ++rep) {
    const Eigen::VectorXd z1 = 2.0 * stream.normal_vector(16);
    const Eigen::VectorXd z2 = 2.0 * stream.normal_vector(16);
    const double lhs = (frozen.apply(z1) - frozen.apply(z2)).norm();
    CHECK(lhs <= bound * (z1 - z2).norm());
  }
}

}  // TEST_SUITE("denoiser")
