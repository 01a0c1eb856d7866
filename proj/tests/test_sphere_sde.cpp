#include "spinwalk/sphere_sde.hpp"

#include <gtest/gtest.h>

#include <numbers>

using namespace spinwalk;

namespace {

constexpr double kTwoPi = 2.0 * std::numbers::pi;

Vec on_circle(double th) {
  Vec x(2);
  x << std::cos(th), std::sin(th);
  return x;
}

// Closed-form stationary density of a periodic 1-D diffusion
// d theta = b dt + s dB: p = (C/s^2) e^{Phi} int_theta^{theta+2pi} e^{-Phi},
// Phi = int 2 b / s^2. Trapezoid quadrature on a fine grid.
std::vector<double> periodic_density_oracle(const std::function<double(double)>& b,
                                            const std::function<double(double)>& s2, int n) {
  const double h = kTwoPi / n;
  std::vector<double> phi(2 * n + 1, 0.0);
  auto integrand = [&](double t) { return 2.0 * b(t) / s2(t); };
  for (int i = 1; i <= 2 * n; ++i) phi[i] = phi[i - 1] + 0.5 * h * (integrand((i - 1) * h) + integrand(i * h));
  std::vector<double> p(n);
  double total = 0.0;
  for (int i = 0; i < n; ++i) {
    double inner = 0.0;
    for (int j = i; j < i + n; ++j) inner += 0.5 * h * (std::exp(-phi[j]) + std::exp(-phi[j + 1]));
    p[i] = std::exp(phi[i]) * inner / s2(i * h);
    total += p[i] * h;
  }
  for (double& v : p) v /= total;
  return p;
}

}  // namespace

TEST(SphereStep, NoNoiseKeepsPoint) {
  const ModelSpec m = ModelSpec::isotropic(3);
  Rng rng(1);
  const Vec x = rng.unit_vector(3);
  EXPECT_LT((step_sphere_sde(m, x, 1e-2, Vec::Zero(3)) - x).norm(), 1e-15);
  EXPECT_THROW(step_sphere_sde(m, x, 0.0, Vec::Zero(3)), Error);
}

TEST(SphereStep, OutputIsUnit) {
  Rng rng(2);
  for (const auto& m : {ModelSpec::rotation2d(0.5), ModelSpec::rotation4d(0.3, 0.5, 0.6), ModelSpec::isotropic(5)}) {
    Vec x = rng.unit_vector(m.d);
    for (int k = 0; k < 10000; ++k) {
      x = step_sphere_sde(m, x, 1e-2, 0.1 * rng.gaussian(m.d));
      ASSERT_NEAR(x.norm(), 1.0, 1e-15);
    }
  }
}

TEST(SphereStep, CircleBrownianAngularVariance) {
  const ModelSpec m = ModelSpec::isotropic(2);
  Rng rng(3);
  const double h = 1e-3;
  std::vector<double> sq;
  Vec x = on_circle(0.3);
  for (int k = 0; k < 1000000; ++k) {
    const Vec y = step_sphere_sde(m, x, h, std::sqrt(h) * rng.gaussian(2));
    const double dth = std::remainder(std::atan2(y(1), y(0)) - std::atan2(x(1), x(0)), kTwoPi);
    sq.push_back(dth * dth);
    x = y;
  }
  const MeanEstimate est = mean_and_se(sq);
  EXPECT_LT(std::abs(est.mean - h), 4 * est.std_err);
}

TEST(SpherePath, UnitNormAndContinuity) {
  Rng rng(4);
  const ModelSpec m = ModelSpec::rotation4d(0.8);
  double prev_jump = 1e9;
  for (double h : {1e-2, 1e-3, 1e-4}) {
    const SphericalPath p = simulate_sphere_path(m, basis(4, 0), TimeGrid::uniform(0.5, 5000), rng, h);
    double jump = 0.0;
    for (std::size_t k = 0; k < p.size(); ++k) {
      ASSERT_NEAR(p.values[k].norm(), 1.0, 1e-15);
      if (k) jump = std::max(jump, (p.values[k] - p.values[k - 1]).norm());
    }
    EXPECT_LT(jump, prev_jump);
    prev_jump = jump;
  }
}

TEST(SpherePath, StepHalvingKeepsTimeOneLaw) {
  const ModelSpec m = ModelSpec::rotation2d(0.5);
  Rng rng(5);
  std::vector<Vec> a, b;
  for (int k = 0; k < 1500; ++k) {
    a.push_back(advance_sphere(m, basis(2, 0), 1.0, 4e-3, rng));
    b.push_back(advance_sphere(m, basis(2, 0), 1.0, 2e-3, rng));
  }
  EXPECT_TRUE(energy_distance_test(a, b, 199, rng).pass);
}

TEST(Stationary, IsotropicCircleIsUniform) {
  const ModelSpec m = ModelSpec::isotropic(2);
  StationaryOptions so;
  so.h = 1e-2;
  so.chains = 400;
  const EmpiricalSphereLaw law = estimate_stationary(m, 10.0, 20000, 8.0, 6, so);
  for (const auto& x : law.samples) ASSERT_NEAR(x.norm(), 1.0, 1e-15);
  EXPECT_TRUE(sphere_chi2(law.samples, uniform_cell_probabilities(2, 36), 36).pass);
}

TEST(Stationary, AntipodalStartsAgree) {
  const ModelSpec m = ModelSpec::rotation4d(0.3, 0.5, 0.6);
  StationaryOptions a, b;
  a.h = b.h = 5e-3;
  a.chains = b.chains = 200;
  a.start = basis(4, 0);
  b.start = -basis(4, 0);
  const auto la = estimate_stationary(m, 20.0, 2000, 10.0, 7, a);
  const auto lb = estimate_stationary(m, 20.0, 2000, 10.0, 8, b);
  Rng rng(9);
  EXPECT_TRUE(energy_distance_test(la.samples, lb.samples, 199, rng).pass);
  EXPECT_LT(binned_tv_distance(la.samples, lb.samples, 0), 0.1);
}

TEST(Stationary, DeterministicAcrossThreadCounts) {
  const ModelSpec m = ModelSpec::rotation2d(0.5);
  StationaryOptions one, four;
  one.chains = four.chains = 16;
  four.threads = 4;
  const auto a = estimate_stationary(m, 1.0, 64, 0.1, 10, one);
  const auto b = estimate_stationary(m, 1.0, 64, 0.1, 10, four);
  ASSERT_EQ(a.size(), b.size());
  for (std::size_t k = 0; k < a.size(); ++k) EXPECT_EQ(a.samples[k], b.samples[k]);
}

TEST(ErgodicityDiagnostic, TrivialCases) {
  const ModelSpec m = ModelSpec::isotropic(2);
  StationaryOptions so;
  so.h = 1e-2;
  so.chains = 100;
  const auto law = estimate_stationary(m, 5.0, 2000, 2.0, 11, so);
  const TestReport one = ergodicity_diagnostic(m, law, {[](const Vec&) { return 1.0; }});
  EXPECT_EQ(one.statistic, 0.0);
  const TestReport lin = ergodicity_diagnostic(m, law, {[](const Vec& x) { return x(0); }}, kDefaultStep, 3.0);
  EXPECT_TRUE(lin.pass);
}

TEST(ErgodicityDiagnostic, DetectsWrongLaw) {
  const ModelSpec m = ModelSpec::isotropic(2);
  EmpiricalSphereLaw law;
  Rng rng(12);
  for (int k = 0; k < 2000; ++k) {
    Vec x = rng.unit_vector(2);
    x(0) = std::abs(x(0));
    law.samples.push_back(x);
  }
  EXPECT_FALSE(ergodicity_diagnostic(m, law, monomial_dictionary(2, 1)).pass);
}

TEST(MonomialDictionary, Size) {
  EXPECT_EQ(monomial_dictionary(2).size(), 2u + 3u + 4u);
  EXPECT_EQ(monomial_dictionary(4).size(), 4u + 10u + 20u);
}

TEST(CircleDensity, IsotropicIsConstant) {
  const CircleDensity p = stationary_density_circle(ModelSpec::isotropic(2), 360);
  for (double v : p.p) EXPECT_NEAR(v, 1.0 / kTwoPi, 1e-7);
  EXPECT_NEAR(p.integral(), 1.0, 1e-12);
}

TEST(CircleDensity, AngleCoefficientsOfIsotropicCircle) {
  for (double th : {0.0, 1.0, 3.0, 5.5}) {
    const AngleCoefficients c = angle_coefficients(ModelSpec::isotropic(2), th);
    EXPECT_NEAR(c.b, 0.0, 1e-7);
    EXPECT_NEAR(c.s2, 1.0, 1e-7);
  }
}

TEST(CircleDensity, SolverMatchesClosedFormOracle) {
  // Non-reversible periodic diffusion with constant flux.
  auto b = [](double t) { return 0.4 + 0.3 * std::sin(t) + 0.2 * std::cos(2 * t); };
  auto s2 = [](double t) { return 0.5 + 0.25 * std::cos(t - 0.4); };
  const int n = 720;
  const double h = kTwoPi / n;
  std::vector<double> bf(n), sn(n);
  for (int i = 0; i < n; ++i) {
    bf[i] = b((i + 0.5) * h);
    sn[i] = s2(i * h);
  }
  const CircleDensity p = solve_periodic_stationary_fp(bf, sn);
  const auto oracle = periodic_density_oracle(b, s2, n);
  double worst = 0.0;
  for (int i = 0; i < n; ++i) worst = std::max(worst, std::abs(p.p[i] - oracle[i]) / oracle[i]);
  EXPECT_LT(worst, 1e-3);
  EXPECT_NEAR(p.integral(), 1.0, 1e-8);
  for (double v : p.p) EXPECT_GE(v, 0.0);
}

TEST(CircleDensity, SolverRejectsDegenerateDiffusion) {
  std::vector<double> bf(16, 0.0), sn(16, 1.0);
  sn[3] = 0.0;
  EXPECT_THROW(solve_periodic_stationary_fp(bf, sn), Error);
}

TEST(CircleDensity, RotationModelsAreUniform) {
  // For d = 2 every valid model has U = sigma^2 on the radial axis and V - U
  // on the tangent, so the angle is a time-homogeneous circular BM.
  for (const auto& m : {ModelSpec::rotation2d(0.5), ModelSpec::rotation2d(1.7)}) {
    const CircleDensity p = stationary_density_circle(m, 360);
    for (double v : p.p) EXPECT_NEAR(v, 1.0 / kTwoPi, 1e-6) << m.name();
    const AngleCoefficients c = angle_coefficients(m, 0.7);
    EXPECT_NEAR(c.s2, m.delta() - 1.0, 1e-7);
  }
}

TEST(CircleDensity, SectorProbabilitiesSumToOne) {
  const CircleDensity p = stationary_density_circle(ModelSpec::rotation2d(0.5), 720);
  const auto q = p.sector_probabilities(72);
  double total = 0.0;
  for (double v : q) total += v;
  EXPECT_NEAR(total, 1.0, 1e-12);
}

TEST(GradientCase, IsotropicUniform) {
  const ModelSpec m = ModelSpec::isotropic(2);
  const CircleDensity p = gradient_case_density(m, [](const Vec&) { return 0.0; }, 360);
  for (double v : p.p) EXPECT_NEAR(v, 1.0 / kTwoPi, 1e-12);
  const ScalarField dens = gradient_case_surface_density(ModelSpec::isotropic(3), [](const Vec&) { return 0.0; },
                                                         200000, 1);
  Rng rng(13);
  for (int k = 0; k < 10; ++k) EXPECT_NEAR(dens(rng.unit_vector(3)), 1.0 / (4 * std::numbers::pi), 2e-3);
}

TEST(GradientCase, FittedPotentialMatchesFokkerPlanck) {
  const ModelSpec m = ModelSpec::rotation2d(0.5);
  EXPECT_NEAR(circle_holonomy(m), 0.0, 1e-6);
  const int n = 360;
  const auto F = fit_circle_potential(m, n);
  const ScalarField F0 = [&](const Vec& x) {
    double th = std::atan2(x(1), x(0));
    if (th < 0) th += kTwoPi;
    const double pos = th / (kTwoPi / n);
    const auto i = static_cast<std::size_t>(pos) % n;
    const double w = pos - std::floor(pos);
    return (1 - w) * F[i] + w * F[(i + 1) % n];
  };
  const CircleDensity g = gradient_case_density(m, F0, n);
  const CircleDensity fp = stationary_density_circle(m, n);
  EXPECT_NEAR(g.integral(), 1.0, 1e-12);
  for (int i = 0; i < n; ++i) EXPECT_NEAR(g.p[i], fp.p[i], 1e-4);
}
