#pragma once

// The angular diffusion on S^{d-1}:
//
//   dX = (sigma_sy(X) - X X^T) dW - ((delta - 1)/2) X dt,   delta = V/U,
//
// with sigma_sy normalised by sqrt(U) (the angular clock absorbs U). Euler
// steps are renormalised onto the sphere. Also: stationary sampling from
// independent chains, the weak-form stationarity diagnostic, and the d = 2
// Fokker-Planck density in the angle.

#include "spinwalk/core.hpp"
#include "spinwalk/model.hpp"
#include "spinwalk/parallel.hpp"
#include "spinwalk/report.hpp"
#include "spinwalk/riemann.hpp"
#include "spinwalk/rng.hpp"
#include "spinwalk/stats.hpp"

#include <Eigen/SparseCore>
#include <Eigen/SparseLU>

#include <cmath>
#include <cstdint>
#include <numbers>
#include <optional>
#include <vector>

namespace spinwalk {

using SphericalPath = VectorPath;

inline Vec step_sphere_sde(const ModelSpec& m, const Vec& x, double h, const Vec& dW) {
  require(h > 0.0, "step_sphere_sde: step must be positive");
  Vec y = x + detail::unit_sigma_sym(m, x) * dW - x * x.dot(dW) - (0.5 * (m.delta() - 1.0) * h) * x;
  return y / y.norm();
}

/// Runs the scheme for `duration` with ceil(duration / h) equal steps.
inline Vec advance_sphere(const ModelSpec& m, Vec x, double duration, double h, Rng& rng) {
  if (duration <= 0.0) return x;
  const auto steps = static_cast<std::size_t>(std::ceil(duration / h - 1e-9));
  const double dt = duration / static_cast<double>(steps), sq = std::sqrt(dt);
  for (std::size_t k = 0; k < steps; ++k) x = step_sphere_sde(m, x, dt, sq * rng.gaussian(m.d));
  return x;
}

/// Values at the grid knots; each grid interval is split into substeps no
/// longer than `h_max`.
inline SphericalPath simulate_sphere_path(const ModelSpec& m, const Vec& x0, const TimeGrid& grid, Rng& rng,
                                          double h_max = 1e-3) {
  grid.validate();
  require_unit(x0);
  SphericalPath p;
  p.times = grid.t;
  p.values.reserve(grid.size());
  Vec x = x0 / x0.norm();
  p.values.push_back(x);
  for (std::size_t k = 1; k < grid.size(); ++k) {
    x = advance_sphere(m, x, grid.t[k] - grid.t[k - 1], h_max, rng);
    p.values.push_back(x);
  }
  return p;
}

struct EmpiricalSphereLaw {
  std::vector<Vec> samples;
  std::vector<double> weights;       // empty: equal weights
  std::vector<std::uint32_t> chain;  // chain that produced each sample
  double burn_in = 0.0;
  double thin = 0.0;
  double h = 0.0;
  std::uint64_t seed = 0;

  std::size_t size() const { return samples.size(); }
  int dim() const { return samples.empty() ? 0 : static_cast<int>(samples.front().size()); }
};

struct StationaryOptions {
  double h = 1e-3;
  int chains = 64;
  int threads = 1;
  std::optional<Vec> start;  // default: uniform random start per chain
};

/// n_samples points taken every `thin` time units after `burn_in`, spread
/// over independent chains (chain c uses stream (seed, "stationary", c)).
inline EmpiricalSphereLaw estimate_stationary(const ModelSpec& m, double burn_in, std::size_t n_samples, double thin,
                                              std::uint64_t seed, const StationaryOptions& opt = {}) {
  require(burn_in >= 0.0 && thin > 0.0 && n_samples > 0 && opt.h > 0.0 && opt.chains > 0,
          "estimate_stationary: invalid arguments");
  const std::size_t chains = std::min<std::size_t>(static_cast<std::size_t>(opt.chains), n_samples);
  std::vector<std::vector<Vec>> per_chain(chains);
  parallel_for(chains, opt.threads, [&](std::size_t c) {
    Rng rng(seed, "stationary", c);
    Vec x = opt.start ? Vec(direction(*opt.start)) : rng.unit_vector(m.d);
    const std::size_t count = n_samples / chains + (c < n_samples % chains ? 1 : 0);
    x = advance_sphere(m, x, burn_in, opt.h, rng);
    per_chain[c].reserve(count);
    for (std::size_t k = 0; k < count; ++k) {
      if (k > 0) x = advance_sphere(m, x, thin, opt.h, rng);
      per_chain[c].push_back(x);
    }
  });
  EmpiricalSphereLaw law;
  law.burn_in = burn_in;
  law.thin = thin;
  law.h = opt.h;
  law.seed = seed;
  law.samples.reserve(n_samples);
  law.chain.reserve(n_samples);
  for (std::size_t c = 0; c < chains; ++c)
    for (auto& x : per_chain[c]) {
      law.samples.push_back(std::move(x));
      law.chain.push_back(static_cast<std::uint32_t>(c));
    }
  return law;
}

inline EmpiricalSphereLaw estimate_stationary(const ModelSpec& m, double burn_in, std::size_t n_samples, double thin,
                                              Rng& rng, const StationaryOptions& opt = {}) {
  return estimate_stationary(m, burn_in, n_samples, thin, static_cast<std::uint64_t>(rng()), opt);
}

/// All monomials x_i, x_i x_j, x_i x_j x_k (i <= j <= k) up to `max_degree`.
inline std::vector<ScalarField> monomial_dictionary(int d, int max_degree = 3) {
  std::vector<ScalarField> out;
  for (int i = 0; i < d; ++i) {
    out.push_back([i](const Vec& x) { return x(i); });
    if (max_degree < 2) continue;
    for (int j = i; j < d; ++j) {
      out.push_back([i, j](const Vec& x) { return x(i) * x(j); });
      if (max_degree < 3) continue;
      for (int k = j; k < d; ++k) out.push_back([i, j, k](const Vec& x) { return x(i) * x(j) * x(k); });
    }
  }
  return out;
}

/// Weak-form stationarity: for each f, t = mean(G f) / std_err over the law,
/// with the standard error taken across chain means when the law has at
/// least 8 chains (samples within a chain are correlated) and across samples
/// otherwise. Statistic = max |t|; passes when below `threshold`. A test
/// function with G f identically zero contributes t = 0.
inline TestReport ergodicity_diagnostic(const ModelSpec& m, const EmpiricalSphereLaw& law,
                                        const std::vector<ScalarField>& test_fns, double h = kDefaultStep,
                                        double threshold = 4.0) {
  require(law.size() > 0, "ergodicity_diagnostic: empty law");
  std::uint32_t n_chains = 0;
  for (auto c : law.chain) n_chains = std::max(n_chains, c + 1);
  const bool by_chain = law.chain.size() == law.size() && n_chains >= 8;
  double worst = 0.0;
  for (const auto& f : test_fns) {
    std::vector<double> values(law.size());
    for (std::size_t i = 0; i < law.size(); ++i) values[i] = generator_apply(m, f, law.samples[i], h);
    std::vector<double> units;
    if (by_chain) {
      std::vector<double> sum(n_chains, 0.0), cnt(n_chains, 0.0);
      for (std::size_t i = 0; i < values.size(); ++i) {
        sum[law.chain[i]] += values[i];
        cnt[law.chain[i]] += 1.0;
      }
      for (std::uint32_t c = 0; c < n_chains; ++c)
        if (cnt[c] > 0) units.push_back(sum[c] / cnt[c]);
    } else {
      units = values;
    }
    if (units.size() < 2) continue;
    const MeanEstimate est = mean_and_se(units);
    double t = 0.0;
    if (est.std_err > 1e-14) t = est.mean / est.std_err;
    else if (std::abs(est.mean) > 1e-10) t = std::numeric_limits<double>::infinity();
    worst = std::max(worst, std::abs(t));
  }
  return at_most("stationarity residual max |mean Gf| / se", worst, threshold, law.size(),
                 "weak form of the stationary density equation");
}

/// Largest |P_A(cell) - P_B(cell)| summed over cells / 2: total variation
/// between two binned laws.
inline double binned_tv_distance(const std::vector<Vec>& a, const std::vector<Vec>& b, int bins) {
  require(!a.empty() && !b.empty(), "binned_tv_distance: empty sample");
  const int d = static_cast<int>(a.front().size());
  std::vector<double> pa(sphere_cell_count(d, bins), 0.0), pb(pa.size(), 0.0);
  for (const auto& x : a) pa[sphere_cell(x, bins)] += 1.0 / static_cast<double>(a.size());
  for (const auto& x : b) pb[sphere_cell(x, bins)] += 1.0 / static_cast<double>(b.size());
  double tv = 0.0;
  for (std::size_t c = 0; c < pa.size(); ++c) tv += std::abs(pa[c] - pb[c]);
  return 0.5 * tv;
}

// ---------------------------------------------------------------------------
// d = 2: the angle theta = atan2(x2, x1) is a scalar diffusion
//   d theta = b(theta) dt + s(theta) dB,
// with b = grad(theta) . drift + 1/2 tr(Hess(theta) a), s^2 = grad(theta)^T a
// grad(theta), and a = sigma^2 / U - x x^T the tangent diffusion matrix.
// Derivatives of theta are central differences in the plane.
// ---------------------------------------------------------------------------

struct AngleCoefficients {
  double b = 0.0;
  double s2 = 0.0;
};

inline AngleCoefficients angle_coefficients(const ModelSpec& m, double theta, double fd = 1e-4) {
  require(m.d == 2, "angle_coefficients requires d = 2");
  Vec x(2);
  x << std::cos(theta), std::sin(theta);
  const Mat a = detail::unit_sigma2(m, x) - x * x.transpose();
  const Vec drift = -0.5 * (m.delta() - 1.0) * x;
  // theta relative to the base angle, continuous near x
  auto ang = [&](double y1, double y2) { return std::remainder(std::atan2(y2, y1) - theta, 2.0 * std::numbers::pi); };
  Vec grad(2);
  grad(0) = (ang(x(0) + fd, x(1)) - ang(x(0) - fd, x(1))) / (2.0 * fd);
  grad(1) = (ang(x(0), x(1) + fd) - ang(x(0), x(1) - fd)) / (2.0 * fd);
  Mat H(2, 2);
  const double c0 = ang(x(0), x(1));
  H(0, 0) = (ang(x(0) + fd, x(1)) - 2.0 * c0 + ang(x(0) - fd, x(1))) / (fd * fd);
  H(1, 1) = (ang(x(0), x(1) + fd) - 2.0 * c0 + ang(x(0), x(1) - fd)) / (fd * fd);
  H(0, 1) = H(1, 0) = (ang(x(0) + fd, x(1) + fd) - ang(x(0) + fd, x(1) - fd) - ang(x(0) - fd, x(1) + fd) +
                       ang(x(0) - fd, x(1) - fd)) / (4.0 * fd * fd);
  AngleCoefficients out;
  out.b = grad.dot(drift) + 0.5 * (H.cwiseProduct(a)).sum();
  out.s2 = grad.dot(a * grad);
  return out;
}

/// Periodic density on [0, 2 pi) sampled at theta_i = 2 pi i / n.
struct CircleDensity {
  std::vector<double> theta;
  std::vector<double> p;

  std::size_t size() const { return p.size(); }
  double spacing() const { return 2.0 * std::numbers::pi / static_cast<double>(p.size()); }

  /// Linear interpolation with periodic wrap.
  double operator()(double th) const {
    const double two_pi = 2.0 * std::numbers::pi;
    double u = std::fmod(th, two_pi);
    if (u < 0) u += two_pi;
    const double pos = u / spacing();
    const auto i = static_cast<std::size_t>(pos) % p.size();
    const double w = pos - std::floor(pos);
    return (1.0 - w) * p[i] + w * p[(i + 1) % p.size()];
  }

  double integral() const {
    double s = 0.0;
    for (double v : p) s += v;
    return s * spacing();
  }

  /// Probabilities of `bins` equal longitude sectors (trapezoid rule on the
  /// interpolant with 64 panels per sector).
  std::vector<double> sector_probabilities(int bins) const {
    const int panels = 64;
    const double width = 2.0 * std::numbers::pi / bins, hp = width / panels;
    std::vector<double> out(bins);
    double total = 0.0;
    for (int b = 0; b < bins; ++b) {
      double s = 0.0;
      for (int k = 0; k < panels; ++k) {
        const double t0 = b * width + k * hp;
        s += 0.5 * hp * ((*this)(t0) + (*this)(t0 + hp));
      }
      out[b] = s;
      total += s;
    }
    for (double& v : out) v /= total;
    return out;
  }
};

/// Stationary density of d theta = b dt + s dB on the circle: finite volumes
/// for 1/2 (s^2 p)'' - (b p)' = 0 with face fluxes
/// J = b (p_i + p_{i+1})/2 - (s^2_{i+1} p_{i+1} - s^2_i p_i)/(2 dtheta),
/// periodic, with one balance equation replaced by sum p dtheta = 1.
inline CircleDensity solve_periodic_stationary_fp(const std::vector<double>& b_face, const std::vector<double>& s2_node) {
  const std::size_t n = s2_node.size();
  require(n >= 8 && b_face.size() == n, "solve_periodic_stationary_fp: need n >= 8 nodes and n faces");
  const double dth = 2.0 * std::numbers::pi / static_cast<double>(n);
  for (double v : s2_node) require(v > 0.0, "stationary density: diffusion coefficient not positive (non-elliptic model)");
  std::vector<Eigen::Triplet<double>> trip;
  trip.reserve(6 * n + n);
  auto add_flux = [&](std::size_t row, std::size_t face, double sign) {
    const std::size_t i = face, j = (face + 1) % n;
    trip.emplace_back(row, i, sign * (0.5 * b_face[face] + 0.5 * s2_node[i] / dth));
    trip.emplace_back(row, j, sign * (0.5 * b_face[face] - 0.5 * s2_node[j] / dth));
  };
  for (std::size_t i = 1; i < n; ++i) {
    add_flux(i, i, 1.0);
    add_flux(i, (i + n - 1) % n, -1.0);
  }
  for (std::size_t j = 0; j < n; ++j) trip.emplace_back(0, j, dth);
  Eigen::SparseMatrix<double> A(static_cast<Eigen::Index>(n), static_cast<Eigen::Index>(n));
  A.setFromTriplets(trip.begin(), trip.end());
  Eigen::VectorXd rhs = Eigen::VectorXd::Zero(static_cast<Eigen::Index>(n));
  rhs(0) = 1.0;
  Eigen::SparseLU<Eigen::SparseMatrix<double>> lu;
  lu.compute(A);
  require(lu.info() == Eigen::Success, "stationary density: singular linear system (non-elliptic model)");
  const Eigen::VectorXd sol = lu.solve(rhs);
  require(lu.info() == Eigen::Success && sol.allFinite(), "stationary density: linear solve failed");
  CircleDensity out;
  out.theta.resize(n);
  out.p.resize(n);
  double total = 0.0;
  for (std::size_t i = 0; i < n; ++i) {
    out.theta[i] = dth * static_cast<double>(i);
    require(sol(static_cast<Eigen::Index>(i)) > -1e-10, "stationary density: negative solution (mesh too coarse)");
    out.p[i] = std::max(0.0, sol(static_cast<Eigen::Index>(i)));
    total += out.p[i] * dth;
  }
  for (double& v : out.p) v /= total;
  return out;
}

inline CircleDensity stationary_density_circle(const ModelSpec& m, int n_grid = 720) {
  require(m.d == 2, "stationary_density_circle requires d = 2");
  require(n_grid >= 8, "stationary_density_circle: n_grid must be >= 8");
  const double dth = 2.0 * std::numbers::pi / n_grid;
  std::vector<double> b_face(n_grid), s2(n_grid);
  for (int i = 0; i < n_grid; ++i) {
    s2[i] = angle_coefficients(m, i * dth).s2;
    b_face[i] = angle_coefficients(m, (i + 0.5) * dth).b;
  }
  return solve_periodic_stationary_fp(b_face, s2);
}

/// Potential F_0 on the circle obtained by integrating g(V_0, d/dtheta)
/// from theta = 0 (trapezoid rule on the density grid). Meaningful as a
/// single-valued function only when circle_holonomy vanishes.
inline std::vector<double> fit_circle_potential(const ModelSpec& m, int n_grid, double h = kDefaultStep) {
  require(m.d == 2 && n_grid >= 8, "fit_circle_potential requires d = 2 and n_grid >= 8");
  const double dth = 2.0 * std::numbers::pi / n_grid;
  std::vector<double> omega(n_grid), F(n_grid, 0.0);
  for (int i = 0; i < n_grid; ++i) {
    const double th = i * dth;
    Vec x(2), t(2);
    x << std::cos(th), std::sin(th);
    t << -std::sin(th), std::cos(th);
    const Mat s2inv = detail::unit_sigma2(m, x).inverse();
    omega[i] = (s2inv * v0_vector(m, x, h)).dot(t);
  }
  for (int i = 1; i < n_grid; ++i) F[i] = F[i - 1] + 0.5 * dth * (omega[i - 1] + omega[i]);
  return F;
}

/// exp(2 F_0) sqrt(det g) on the angle grid, normalised; F0 is evaluated at
/// the unit vectors of the grid.
inline CircleDensity gradient_case_density(const ModelSpec& m, const ScalarField& F0, int n_grid = 720) {
  require(m.d == 2, "gradient_case_density on a grid requires d = 2; use gradient_case_surface_density");
  require(n_grid >= 8, "gradient_case_density: n_grid must be >= 8");
  CircleDensity out;
  const double dth = 2.0 * std::numbers::pi / n_grid;
  double total = 0.0;
  for (int i = 0; i < n_grid; ++i) {
    const double th = i * dth;
    Vec x(2), t(2);
    x << std::cos(th), std::sin(th);
    t << -std::sin(th), std::cos(th);
    const double g_thth = t.dot(detail::unit_sigma2(m, x).inverse() * t);
    out.theta.push_back(th);
    out.p.push_back(std::exp(2.0 * F0(x)) * std::sqrt(g_thth));
    total += out.p.back() * dth;
  }
  for (double& v : out.p) v /= total;
  return out;
}

/// Density of exp(2 F_0) d_g x with respect to surface measure on S^{d-1},
/// normalised by Monte Carlo over n_mc uniform points. The Riemannian volume
/// element relative to surface measure is sqrt(det g) |x_q| in the chart
/// dropping axis q.
inline ScalarField gradient_case_surface_density(const ModelSpec& m, const ScalarField& F0, std::size_t n_mc,
                                                 std::uint64_t seed) {
  auto unnormalized = [m, F0](const Vec& x) {
    const ChartPoint c = chart_of(x);
    return std::exp(2.0 * F0(x)) * metric_in_chart(m, c).sqrt_det_g * std::abs(x(c.q));
  };
  Rng rng(seed, "gradient-density", 0);
  double mean = 0.0;
  for (std::size_t k = 0; k < n_mc; ++k) mean += unnormalized(rng.unit_vector(m.d));
  mean /= static_cast<double>(n_mc);
  // area of S^{d-1}
  const double area = 2.0 * std::pow(std::numbers::pi, 0.5 * m.d) / std::tgamma(0.5 * m.d);
  const double norm = mean * area;
  return [unnormalized, norm](const Vec& x) { return unnormalized(x) / norm; };
}

}  // namespace spinwalk
