#include <catch2/catch_amalgamated.hpp>

#include <cstdio>

#include "tsm/stochastic.hpp"

using namespace tsm;

namespace {

StochasticParams damage_like(double rel = 0.15,
                             CorrelationMode mode = CorrelationMode::kIndependent) {
  StochasticParams sp;
  sp.tensors.push_back({{12e9, rel * 12e9}, {8e9, rel * 8e9}});
  sp.correlation.mode = mode;
  return sp;
}

StochasticParams vp_like(CorrelationMode mode) {
  StochasticParams sp;
  sp.tensors.push_back({{12e9, 1.2e9}, {8e9, 0.8e9}});
  sp.yield = FluctuatingScalar{50e6, 10e6};
  sp.correlation.mode = mode;
  return sp;
}

}  // namespace

TEST_CASE("zero stds reproduce the means deterministically") {
  StochasticParams sp = damage_like(0.0);
  auto rng = make_rng(0, 0);
  ParamRealization r = sample_realization(sp, rng);
  CHECK(r.lambda[0] == 12e9);
  CHECK(r.mu[0] == 8e9);
  CHECK_FALSE(r.sigma_y.has_value());
}

TEST_CASE("stream derivation separates realizations") {
  auto a = make_rng(0, 0);
  auto b = make_rng(0, 1);
  auto c = make_rng(1, 0);
  auto a2 = make_rng(0, 0);
  CHECK(a() == a2());
  CHECK(a != b);
  CHECK(a != c);
}

TEST_CASE("fully dependent draws share a single normal factor") {
  StochasticParams sp = vp_like(CorrelationMode::kFullyDependent);
  ParamSampler sampler(sp);
  auto rng = make_rng(3, 5);
  for (int k = 0; k < 100; ++k) {
    Eigen::VectorXd phi = sampler.sample_phi(rng);
    const double z = phi[0] / sp.tensors[0].lambda.std;
    CHECK(phi[1] == Catch::Approx(z * sp.tensors[0].mu.std));
    CHECK(phi[2] == Catch::Approx(z * sp.yield->std));
  }
}

TEST_CASE("empirical correlation matches the requested mode") {
  StochasticParams sp = vp_like(CorrelationMode::kIndependent);
  ParamSampler sampler(sp);
  auto rng = make_rng(7, kMomentStream);
  const int n = 1000000;
  Eigen::Matrix3d sum2 = Eigen::Matrix3d::Zero();
  for (int k = 0; k < n; ++k) {
    Eigen::VectorXd phi = sampler.sample_phi(rng);
    sum2 += phi * phi.transpose();
  }
  Eigen::Matrix3d cov = sum2 / double(n);
  CHECK(cov(0, 0) / (1.2e9 * 1.2e9) == Catch::Approx(1.0).margin(0.005));
  CHECK(cov(1, 1) / (0.8e9 * 0.8e9) == Catch::Approx(1.0).margin(0.005));
  CHECK(cov(0, 1) / std::sqrt(cov(0, 0) * cov(1, 1)) ==
        Catch::Approx(0.0).margin(0.005));
  CHECK(cov(0, 2) / std::sqrt(cov(0, 0) * cov(2, 2)) ==
        Catch::Approx(0.0).margin(0.005));
}

TEST_CASE("analytic moments: known contractions") {
  // Var(D_xx) = Var(lambda) + 4 Var(mu) under independence
  StochasticParams sp = damage_like(0.15);
  MomentSet ms = analytic_gaussian_moments(sp);
  REQUIRE(ms.dd.size() == 1);
  CHECK(ms.n_samples == 0);
  CHECK_FALSE(ms.has_yield);
  const double vl = 1.8e9 * 1.8e9, vm = 1.2e9 * 1.2e9;
  CHECK(ms.dd[0](0, 0) == Catch::Approx(vl + 4 * vm + 4 * 1.8e9 * 1.2e9 * 0));
  // off-diagonal normal entry D_xy has no mu contribution
  CHECK(ms.dd[0](1, 1) == Catch::Approx(vl));
  // shear diagonal D_yz carries only mu
  CHECK(ms.dd[0](6 * 3 + 3, 6 * 3 + 3) == Catch::Approx(vm));

  // fully dependent adds the cross term 4 cov(lambda, mu)
  StochasticParams spd = damage_like(0.15, CorrelationMode::kFullyDependent);
  MomentSet msd = analytic_gaussian_moments(spd);
  CHECK(msd.dd[0](0, 0) == Catch::Approx(vl + 4 * vm + 4 * 1.8e9 * 1.2e9));

  // yield coupling appears only in the dependent case
  MomentSet mi = analytic_gaussian_moments(vp_like(CorrelationMode::kIndependent));
  MomentSet md = analytic_gaussian_moments(vp_like(CorrelationMode::kFullyDependent));
  CHECK(mi.yd.norm() == 0.0);
  CHECK(mi.yy == Catch::Approx(1e14));
  CHECK(md.yd(0, 0) == Catch::Approx(10e6 * (1.2e9 + 2 * 0.8e9)));
}

TEST_CASE("moment tensors are positive semidefinite quadratic forms") {
  MomentSet ms = analytic_gaussian_moments(vp_like(CorrelationMode::kFullyDependent));
  auto rng = make_rng(0, 99);
  std::normal_distribution<double> n(0.0, 1.0);
  for (int k = 0; k < 100; ++k) {
    Vec36 v;
    for (int i = 0; i < 36; ++i) v[i] = n(rng);
    CHECK(v.dot(ms.dd[0] * v) >= -1e-6 * ms.dd[0].norm());
  }
}

TEST_CASE("estimated moments converge to the analytic values") {
  StochasticParams sp = vp_like(CorrelationMode::kFullyDependent);
  MomentSet exact = analytic_gaussian_moments(sp);
  auto rng = make_rng(0, kMomentStream);
  const long long n = 200000;
  MomentSet est = estimate_moments(sp, n, rng);
  CHECK(est.n_samples == n);
  // rejection is negligible here, so sample means are ~N(0, sigma^2/n)
  const double tol = 5.0 / std::sqrt(double(n));
  CHECK((est.dd[0] - exact.dd[0]).norm() / exact.dd[0].norm() < tol * 3);
  CHECK(std::abs(est.yy - exact.yy) / exact.yy < tol * 3);
  CHECK((est.yd - exact.yd).norm() / exact.yd.norm() < tol * 3);
  // estimated fluctuation means are near zero
  CHECK(est.d_mean[0].norm() / 12e9 < tol * 3);
  CHECK(std::abs(est.y_mean) / 50e6 < tol * 3);
}

TEST_CASE("moment estimation sample floor") {
  StochasticParams sp = damage_like();
  auto rng = make_rng(0, kMomentStream);
  CHECK_THROWS_AS(estimate_moments(sp, 9999, rng), InsufficientSamples);
}

TEST_CASE("rejection sampling gives up on non-physical inputs") {
  StochasticParams sp;
  sp.tensors.push_back({{12e9, 0.0}, {-8e9, 0.0}});  // mu <= 0 always
  auto rng = make_rng(0, 0);
  ParamSampler sampler(sp);
  CHECK_THROWS_AS(sampler.sample(rng), RetryExhausted);
  CHECK(sampler.rejections() >= 1000);
}

TEST_CASE("admissibility filter skews are visible in the rejection count") {
  // large relative std: many draws violate mu > 0
  StochasticParams sp = damage_like(0.60);
  ParamSampler sampler(sp);
  auto rng = make_rng(0, 0);
  for (int k = 0; k < 2000; ++k) {
    ParamRealization r = sampler.sample(rng);
    CHECK(r.mu[0] > 0.0);
    CHECK(r.lambda[0] + 2.0 * r.mu[0] / 3.0 > 0.0);
  }
  CHECK(sampler.rejections() > 0);
}

TEST_CASE("correlation matrix validation") {
  StochasticParams sp = damage_like();
  sp.correlation.mode = CorrelationMode::kMatrix;

  sp.correlation.matrix = Eigen::MatrixXd::Identity(3, 3);
  CHECK_THROWS_AS(detail::correlation_matrix(sp), ValidationError);

  sp.correlation.matrix = Eigen::MatrixXd::Identity(2, 2);
  sp.correlation.matrix(0, 1) = 0.5;  // asymmetric
  CHECK_THROWS_AS(detail::correlation_matrix(sp), ValidationError);

  sp.correlation.matrix(1, 0) = 0.5;
  sp.correlation.matrix(0, 0) = 2.0;  // bad diagonal
  CHECK_THROWS_AS(detail::correlation_matrix(sp), ValidationError);

  sp.correlation.matrix = Eigen::MatrixXd::Ones(2, 2);
  sp.correlation.matrix(0, 1) = sp.correlation.matrix(1, 0) = -1.5;  // not PSD
  CHECK_THROWS_AS(detail::correlation_matrix(sp), ValidationError);

  sp.correlation.matrix(0, 1) = sp.correlation.matrix(1, 0) = 0.7;
  Eigen::MatrixXd c = detail::correlation_matrix(sp);
  CHECK(c(0, 1) == 0.7);
  // draws reproduce the requested correlation
  ParamSampler sampler(sp);
  auto rng = make_rng(0, kMomentStream);
  double s00 = 0, s11 = 0, s01 = 0;
  const int n = 200000;
  for (int k = 0; k < n; ++k) {
    Eigen::VectorXd phi = sampler.sample_phi(rng);
    s00 += phi[0] * phi[0];
    s11 += phi[1] * phi[1];
    s01 += phi[0] * phi[1];
  }
  CHECK(s01 / std::sqrt(s00 * s11) == Catch::Approx(0.7).margin(0.01));
}

TEST_CASE("multi-tensor representability rules") {
  StochasticParams sp;
  sp.tensors.push_back({{70e9, 7e9}, {30e9, 3e9}});
  sp.tensors.push_back({{35e9, 3.5e9}, {15e9, 1.5e9}});

  sp.correlation.mode = CorrelationMode::kIndependent;
  CHECK_NOTHROW(analytic_gaussian_moments(sp));

  sp.correlation.mode = CorrelationMode::kFullyDependent;
  CHECK_THROWS_AS(analytic_gaussian_moments(sp), ShapeMismatch);

  sp.correlation.mode = CorrelationMode::kMatrix;
  Eigen::MatrixXd c = Eigen::MatrixXd::Identity(4, 4);
  c(0, 1) = c(1, 0) = 0.5;  // within-tensor correlation is fine
  sp.correlation.matrix = c;
  CHECK_NOTHROW(analytic_gaussian_moments(sp));
  c(0, 2) = c(2, 0) = 0.5;  // cross-tensor correlation is not
  sp.correlation.matrix = c;
  CHECK_THROWS_AS(analytic_gaussian_moments(sp), ShapeMismatch);

  sp.correlation.mode = CorrelationMode::kIndependent;
  sp.yield = FluctuatingScalar{50e6, 5e6};
  CHECK_THROWS_AS(analytic_gaussian_moments(sp), ShapeMismatch);
}

TEST_CASE("moment CSV round trip") {
  MomentSet ms = analytic_gaussian_moments(vp_like(CorrelationMode::kFullyDependent));
  const std::string path = "moments_roundtrip_test.csv";
  save_moments_csv(ms, path);
  MomentSet back = load_moments_csv(path);
  std::remove(path.c_str());
  REQUIRE(back.dd.size() == ms.dd.size());
  CHECK(back.dd[0] == ms.dd[0]);
  CHECK(back.yd == ms.yd);
  CHECK(back.yy == ms.yy);
  CHECK(back.has_yield == ms.has_yield);
  CHECK(back.n_samples == ms.n_samples);
}
