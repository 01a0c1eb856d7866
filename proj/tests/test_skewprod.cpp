#include "spinwalk/skewprod.hpp"
#include "spinwalk/stats.hpp"

#include <gtest/gtest.h>

using namespace spinwalk;

namespace {

std::vector<Vec> uniform_pool(int d, std::size_t n, Rng& rng) {
  std::vector<Vec> pool;
  for (std::size_t k = 0; k < n; ++k) pool.push_back(rng.unit_vector(d));
  return pool;
}

std::vector<Vec> stationary_pool(const ModelSpec& m, std::uint64_t seed) {
  StationaryOptions so;
  so.h = 5e-3;
  so.chains = 64;
  return estimate_stationary(m, 20.0, 2048, 1.0, seed, so).samples;
}

BesselPath constant_path(double value, double horizon, std::size_t n) {
  BesselPath p;
  for (std::size_t k = 0; k <= n; ++k) {
    p.times.push_back(horizon * static_cast<double>(k) / static_cast<double>(n));
    p.values.push_back(value);
  }
  return p;
}

// Triangle excursion on (0, 2) peaking at 1.
BesselPath tent(std::size_t n) {
  BesselPath w;
  for (std::size_t k = 0; k <= 2 * n; ++k) {
    const double t = static_cast<double>(k) / static_cast<double>(n);
    w.times.push_back(t);
    w.values.push_back(t <= 1.0 ? t : 2.0 - t);
  }
  return w;
}

AngularPath great_circle(int d, double lo, double hi, std::size_t n) {
  AngularPath a;
  for (std::size_t k = 0; k <= n; ++k) {
    const double u = lo + (hi - lo) * static_cast<double>(k) / static_cast<double>(n);
    Vec x = Vec::Zero(d);
    x(0) = std::cos(0.3 * u);
    x(1) = std::sin(0.3 * u);
    a.clock.push_back(u);
    a.values.push_back(x);
  }
  return a;
}

}  // namespace

TEST(SkewProduct, NormReproducesRadialExactly) {
  Rng rng(1);
  const ModelSpec m = ModelSpec::rotation4d(0.8);
  const auto pool = stationary_pool(m, 2);
  const BesselPath r = sample_bessel_path(m.delta(), 1.0, TimeGrid::uniform(1.0, 200), rng);
  const VectorPath x = skew_product_path(m, r, 0.0, rng, pool, basis(4, 0));
  ASSERT_EQ(x.size(), r.size());
  EXPECT_EQ(x.values[0], basis(4, 0));
  for (std::size_t k = 0; k < x.size(); ++k) EXPECT_NEAR(x.values[k].norm(), r.values[k], 1e-14 * r.values[k]);
}

TEST(SkewProduct, RejectsZeroInWindow) {
  Rng rng(3);
  BesselPath r = constant_path(1.0, 1.0, 10);
  r.values[5] = 0.0;
  EXPECT_THROW(skew_product_path(ModelSpec::isotropic(2), r, 0.0, rng, uniform_pool(2, 10, rng)), Error);
  EXPECT_NO_THROW(skew_product_path(ModelSpec::isotropic(2), r, 0.6, rng, uniform_pool(2, 10, rng)));
}

TEST(SkewProduct, ConstantRadiusRunsSphericalDiffusionOnTheClock) {
  // r = 1 makes the clock equal to time, so phi at t = 1 is the spherical
  // diffusion at time 1.
  const ModelSpec m = ModelSpec::isotropic(2);
  Rng rng(4);
  const auto pool = uniform_pool(2, 100, rng);
  std::vector<double> cosines;
  for (int k = 0; k < 4000; ++k) {
    const VectorPath x = skew_product_path(m, constant_path(1.0, 1.0, 4), 0.0, rng, pool, basis(2, 0));
    cosines.push_back(x.values.back()(0));
  }
  // circular BM: E cos(theta_1) = exp(-1/2)
  const MeanEstimate est = mean_and_se(cosines);
  EXPECT_LT(std::abs(est.mean - std::exp(-0.5)), 4 * est.std_err + 2e-3);
}

TEST(SkewProduct, IsotropicMarginalIsRotationInvariant) {
  const ModelSpec m = ModelSpec::isotropic(3);
  Rng rng(5);
  const auto pool = uniform_pool(3, 4096, rng);
  std::vector<Vec> dirs;
  const TimeGrid g = TimeGrid::uniform(1.0, 10);
  for (int k = 0; k < 5000; ++k) {
    const ClockedBesselPath r = sample_clocked_bessel_path(m.delta(), 0.0, g, rng);
    dirs.push_back(direction(skew_product_clocked(m, r, pool, rng).values.back()));
  }
  EXPECT_TRUE(sphere_chi2(dirs, uniform_cell_probabilities(3, 1), 1).pass);
}

TEST(SkewProduct, ClockedTimesAndNorms) {
  const ModelSpec m = ModelSpec::rotation2d(0.5, 2.0);
  Rng rng(6);
  const auto pool = uniform_pool(2, 100, rng);
  const TimeGrid g = TimeGrid::uniform(2.0, 20);  // R-time U t
  const ClockedBesselPath r = sample_clocked_bessel_path(m.delta(), 0.5, g, rng);
  const VectorPath x = skew_product_clocked(m, r, pool, rng, basis(2, 1));
  EXPECT_NEAR(x.times.back(), 1.0, 1e-15);
  for (std::size_t k = 0; k < x.size(); ++k) EXPECT_NEAR(x.values[k].norm(), r.path.values[k], 1e-14);
  EXPECT_LT((direction(x.values[0]) - basis(2, 1)).norm(), 1e-15);
}

TEST(SkewProduct, MatchesDirectSdeFromNonzeroStart) {
  const ModelSpec m = ModelSpec::rotation4d(0.3, 0.5, 0.6);
  Rng rng(7);
  const auto pool = stationary_pool(m, 8);
  const Vec x0 = 0.8 * basis(4, 2);
  const TimeGrid g = TimeGrid::uniform(1.0, 20);
  std::vector<Vec> a, b;
  for (int k = 0; k < 1500; ++k) {
    const ClockedBesselPath r = sample_clocked_bessel_path(m.delta(), 0.8, g, rng);
    AngularOptions ao;
    ao.h = 2e-3;
    a.push_back(skew_product_clocked(m, r, pool, rng, x0, ao).values.back());
    b.push_back(simulate_x_sde(m, x0, 1.0, 2e-3, rng));
  }
  EXPECT_TRUE(energy_distance_test(a, b, 199, rng).pass);
}

TEST(DirectSde, SecondMomentGrowsLikeTrace) {
  const ModelSpec m = ModelSpec::rotation2d(0.5);
  Rng rng(9);
  std::vector<double> r2;
  for (int k = 0; k < 4000; ++k) r2.push_back(simulate_x_sde(m, Vec::Zero(2), 1.0, 1e-2, rng).squaredNorm());
  const MeanEstimate est = mean_and_se(r2);
  EXPECT_LT(std::abs(est.mean - m.V()), 4 * est.std_err);
}

TEST(RapidSpinning, ConstantRadiusIsBounded) {
  const BesselPath one = constant_path(1.0, 1.0, 1000);
  const SpinningCurve c = rapid_spinning_curve(one, 1.0, {0.5, 0.1, 0.01, 0.001});
  for (std::size_t i = 0; i < c.s.size(); ++i) {
    EXPECT_NEAR(c.rho[i], 1.0 - c.s[i], 1e-12);
    EXPECT_EQ(c.diverged[i], 0);
  }
}

TEST(RapidSpinning, MonotoneAndDivergentOnBesselPaths) {
  Rng rng(10);
  std::vector<double> s_list;
  for (int e = 1; e <= 16; ++e) s_list.push_back(std::pow(10.0, -e));
  int exceeded = 0;
  for (int k = 0; k < 100; ++k) {
    const TimeGrid g = TimeGrid::geometric(1e-16, 1e-2, 1e-2, 1.0, 8, s_list);
    const ClockedBesselPath r = sample_clocked_bessel_path(1.5, 0.0, g, rng);
    const SpinningCurve c = rapid_spinning_curve(r, 1.0, s_list);
    for (std::size_t i = 1; i < c.rho.size(); ++i) EXPECT_GE(c.rho[i], c.rho[i - 1]);
    exceeded += c.rho.back() > 1e3;
  }
  EXPECT_GE(exceeded, 99);
  EXPECT_THROW(rapid_spinning_curve(constant_path(1.0, 1.0, 10), 1.0, {1.5}), Error);
}

TEST(PhiMap, ConstantAngleGivesRadialTimesDirection) {
  const BesselPath w = tent(100);
  AngularPath theta;
  const Vec th0 = direction(Vec::Ones(3));
  theta.clock = {-1e9, 1e9};
  theta.values = {th0, th0};
  const VectorPath e = phi_a_map(w, theta, 0.7);
  for (std::size_t k = 0; k < e.size(); ++k) EXPECT_LT((e.values[k] - w.values[k] * th0).norm(), 1e-14);
  EXPECT_THROW(phi_a_map(w, theta, 2.0), Error);
}

TEST(PhiMap, RoundTrip) {
  const BesselPath w = tent(200);
  const auto clk = excursion_clock(w, 0.8);
  const AngularPath theta = great_circle(3, clk.front() - 1, clk.back() + 1, 20000);
  const VectorPath e = phi_a_map(w, theta, 0.8);
  const auto [w2, th2] = phi_a_inverse(e, 0.8);
  for (std::size_t k = 0; k < w.size(); ++k) EXPECT_NEAR(w2.values[k], w.values[k], 1e-14);
  for (std::size_t k = 0; k < th2.size(); ++k) EXPECT_LT((th2.values[k] - theta.at(th2.clock[k])).norm(), 1e-12);
}

TEST(PhiMap, AnchorShiftConsistency) {
  const BesselPath w = tent(200);
  const double a = 1.2, b = 0.6;
  const auto clk_a = excursion_clock(w, a);
  const AngularPath theta = great_circle(4, clk_a.front() - 50, clk_a.back() + 50, 200000);
  const double offset = anchor_offset(w, b, a);
  EXPECT_NEAR(offset, additive_clock(w, b, a), 1e-15);
  const VectorPath ea = phi_a_map(w, theta, a);
  // rho^b = rho^a + I_b^a, so theta(. - I_b^a) composed with rho^b equals theta o rho^a.
  const VectorPath eb = phi_a_map(w, theta.shifted(offset), b);
  for (std::size_t k = 0; k < ea.size(); ++k) EXPECT_LT((ea.values[k] - eb.values[k]).norm(), 1e-6);
}

TEST(PitmanYor, StructureAndUniqueMaximum) {
  Rng rng(11);
  for (int k = 0; k < 200; ++k) {
    const double M = 0.5 + rng.uniform();
    const PitmanYorExcursion e = pitman_yor_excursion(1.5, M, 1e-3 * M * M, rng);
    ASSERT_GT(e.argmax, 0u);
    ASSERT_LT(e.argmax + 1, e.path.size());
    EXPECT_EQ(e.path.values[e.argmax], M);
    EXPECT_EQ(e.path.times[e.argmax], e.T_M);
    EXPECT_EQ(e.path.values.front(), 0.0);
    EXPECT_EQ(e.path.values.back(), 0.0);
    EXPECT_NEAR(e.lifetime, e.path.times.back(), 1e-12);
    for (std::size_t i = 0; i < e.path.size(); ++i) {
      if (i != e.argmax) {
        EXPECT_LT(e.path.values[i], M);
      }
    }
    for (std::size_t i = 1; i + 1 < e.path.size(); ++i) EXPECT_GT(e.path.values[i], 0.0);
    EXPECT_NO_THROW(e.path.validate());
  }
  EXPECT_THROW(pitman_yor_excursion(2.5, 1.0, 1e-3, rng), Error);
}

TEST(PitmanYor, BrownianScaling) {
  Rng rng(12);
  std::vector<std::vector<double>> ratios(2);
  const double Ms[2] = {0.5, 2.0};
  for (int j = 0; j < 2; ++j)
    for (int k = 0; k < 1500; ++k) {
      const double M = Ms[j];
      ratios[j].push_back(pitman_yor_excursion(1.75, M, 2e-3 * M * M, rng).lifetime / (M * M));
    }
  EXPECT_TRUE(ks_test_2sample(ratios[0], ratios[1]).pass);
}

TEST(MarkedExcursion, MaxLevelRecord) {
  const ModelSpec m = ModelSpec::rotation2d(0.5, 1.0);
  Rng rng(13);
  const auto pool = stationary_pool(m, 14);
  for (int k = 0; k < 50; ++k) {
    const ExcursionRecord rec = sample_marked_excursion(m, m.delta(), MaxLevel{0.5, 2.0}, pool, rng);
    ASSERT_TRUE(rec.mapped.has_value());
    EXPECT_GE(rec.M, 0.5);
    EXPECT_LE(rec.M, 2.0);
    EXPECT_EQ(rec.anchor, rec.T_M);
    for (std::size_t i = 0; i < rec.radial.size(); ++i)
      EXPECT_NEAR(rec.mapped->values[i].norm(), rec.radial.values[i], 1e-12);
    const TestReport r = split_at_max_check(rec);
    EXPECT_TRUE(r.pass) << r.statistic;
    EXPECT_FALSE(rec.conditional);
  }
}

TEST(MarkedExcursion, MinLifetimeAnchorsAtA) {
  const ModelSpec m = ModelSpec::isotropic(2);  // delta = 2 is excluded
  Rng rng(15);
  const ModelSpec m15 = ModelSpec::rotation2d(std::sqrt(0.5));
  const auto pool = uniform_pool(2, 1000, rng);
  for (int k = 0; k < 30; ++k) {
    const ExcursionRecord rec = sample_marked_excursion(m15, m15.delta(), MinLifetime{0.5}, pool, rng);
    EXPECT_GT(rec.lifetime, 0.5);
    EXPECT_EQ(rec.anchor, 0.5);
    const std::size_t ka = TimeGrid{rec.radial.times}.knot_index(0.5);
    EXPECT_NEAR(rec.angular.clock[ka - 1], 0.0, 1e-15);
    EXPECT_TRUE(split_at_max_check(rec).pass);
  }
  EXPECT_THROW(sample_marked_excursion(m, m.delta(), MinLifetime{0.5}, pool, rng), Error);
}

TEST(MarkedExcursion, SplitAtMaxFlagsConditionalUse) {
  const ModelSpec m = ModelSpec::rotation2d(0.5);
  Rng rng(16);
  const auto pool = uniform_pool(2, 500, rng);
  ExcursionOptions opt;
  opt.mode = MarkMode::SplitAtMax;
  EXPECT_TRUE(sample_marked_excursion(m, m.delta(), MaxLevel{}, pool, rng, opt).conditional);
  opt.assume_reversible = true;
  EXPECT_FALSE(sample_marked_excursion(m, m.delta(), MaxLevel{}, pool, rng, opt).conditional);
}

TEST(MarkedExcursion, IsotropicHalvesExchangeable) {
  // Angular displacement from the mark at T_M, a clock span c forward and
  // backward: equal in law for the reversible spherical BM.
  const ModelSpec m = ModelSpec::rotation4d(0.5);
  const ModelSpec iso = ModelSpec::isotropic(4);
  Rng rng(17);
  const auto pool = uniform_pool(4, 2000, rng);
  ExcursionOptions opt;
  opt.mode = MarkMode::SplitAtMax;
  opt.assume_reversible = true;
  opt.dt_ratio = 2e-3;
  std::vector<double> fwd, bwd;
  const double c = 0.3;
  while (fwd.size() < 1500) {
    const ExcursionRecord rec = sample_marked_excursion(iso, m.delta(), MaxLevel{}, pool, rng, opt);
    const auto& a = rec.angular;
    if (a.clock.front() > -c || a.clock.back() < c) continue;
    const Vec mid = a.at(0.0);
    fwd.push_back(mid.dot(a.at(c)));
    bwd.push_back(mid.dot(a.at(-c)));
  }
  EXPECT_TRUE(ks_test_2sample(fwd, bwd).pass);
}

TEST(ExtractExcursions, CutsAtLowKnots) {
  BesselPath p;
  p.times = {0, 1, 2, 3, 4, 5, 6, 7};
  p.values = {0, 1, 2, 1e-5, 0.5, 0.7, 0, 0};
  const auto spans = extract_excursions(p, 1e-4);
  ASSERT_EQ(spans.size(), 2u);
  EXPECT_EQ(spans[0].begin, 0u);
  EXPECT_EQ(spans[0].end, 3u);
  EXPECT_EQ(spans[1].begin, 3u);
  EXPECT_EQ(spans[1].end, 6u);
}
