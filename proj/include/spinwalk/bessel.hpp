#pragma once

// The radial process: exact squared-Bessel transitions, closed-form laws
// (time-1 marginal from 0, Laplace transform of the exit time of [0, a]),
// the additive clock rho_s(t) = int_s^t r_u^{-2} du and its inverse, and
// first passage times.

#include "spinwalk/core.hpp"
#include "spinwalk/rng.hpp"

#include <boost/math/special_functions/bessel.hpp>
#include <boost/math/special_functions/gamma.hpp>

#include <cmath>
#include <cstdint>
#include <limits>
#include <numbers>
#include <optional>
#include <vector>

namespace spinwalk {

/// r at the knots of a time grid; values are nonnegative.
struct BesselPath {
  double delta = 2.0;
  std::vector<double> times;
  std::vector<double> values;

  std::size_t size() const { return times.size(); }

  void validate() const {
    require(times.size() == values.size() && times.size() >= 2, "Bessel path: size mismatch");
    for (std::size_t k = 1; k < times.size(); ++k) require(times[k] > times[k - 1], "Bessel path: grid not increasing");
    for (double v : values) require(v >= 0.0, "Bessel path: negative radius");
  }
};

/// Exact BESQ^delta transition over a step h: y0 = 0 gives 2h Gamma(delta/2);
/// otherwise h times a noncentral chi-square with delta degrees of freedom and
/// noncentrality y0/h, drawn as a Poisson(y0/(2h)) mixture of Gamma laws.
inline double besq_transition_sample(double delta, double y0, double h, Rng& rng) {
  require(delta > 0.0 && y0 >= 0.0 && h > 0.0, "besq_transition_sample: invalid parameters");
  const std::int64_t n = (y0 > 0.0) ? rng.poisson(y0 / (2.0 * h)) : 0;
  return 2.0 * h * rng.gamma(0.5 * delta + static_cast<double>(n));
}

inline BesselPath sample_bessel_path(double delta, double x0, const TimeGrid& grid, Rng& rng) {
  grid.validate();
  require(x0 >= 0.0, "sample_bessel_path: x0 must be >= 0");
  BesselPath p;
  p.delta = delta;
  p.times = grid.t;
  p.values.resize(grid.size());
  double y = x0 * x0;
  p.values[0] = x0;
  for (std::size_t k = 1; k < grid.size(); ++k) {
    y = besq_transition_sample(delta, y, grid.t[k] - grid.t[k - 1], rng);
    p.values[k] = std::sqrt(y);
  }
  return p;
}

/// P[r_1 <= x] for BES^delta started at 0: the regularised lower incomplete
/// gamma function P(delta/2, x^2/2).
inline double bessel_cdf_t1(double delta, double x) {
  require(delta > 0.0, "bessel_cdf_t1: delta must be positive");
  if (x <= 0.0) return 0.0;
  return boost::math::gamma_p(0.5 * delta, 0.5 * x * x);
}

/// Modified Bessel function of the first kind I_nu(z), nu >= -1/2, z >= 0.
inline double bessel_iv(double nu, double z) {
  require(nu >= -0.5 && z >= 0.0, "bessel_iv: need nu >= -1/2 and z >= 0");
  if (z == 0.0) return nu == 0.0 ? 1.0 : 0.0;
  return boost::math::cyl_bessel_i(nu, z);
}

/// log I_nu(z); the large-argument asymptotic series replaces direct
/// evaluation where I_nu would overflow.
inline double log_bessel_iv(double nu, double z) {
  require(z > 0.0, "log_bessel_iv: z must be positive");
  if (z < 600.0) return std::log(bessel_iv(nu, z));
  const double mu = 4.0 * nu * nu;
  double term = 1.0, sum = 1.0;
  for (int k = 1; k <= 12; ++k) {
    term *= -(mu - (2.0 * k - 1) * (2.0 * k - 1)) / (k * 8.0 * z);
    sum += term;
    if (std::abs(term) < 1e-17 * std::abs(sum)) break;
  }
  return z - 0.5 * std::log(2.0 * std::numbers::pi * z) + std::log(sum);
}

/// E[exp(-lambda tau_a)] for BES^delta from 0, tau_a the hitting time of a:
/// (a sqrt(2 lambda))^nu / (2^nu Gamma(nu + 1) I_nu(a sqrt(2 lambda))),
/// nu = (delta - 2)/2, evaluated in the log domain.
inline double exit_time_laplace(double delta, double a, double lambda) {
  require(delta > 1.0 && a > 0.0 && lambda >= 0.0, "exit_time_laplace: need delta > 1, a > 0, lambda >= 0");
  const double nu = 0.5 * (delta - 2.0);
  const double z = a * std::sqrt(2.0 * lambda);
  if (z < 1e-10) return 1.0;
  const double log_value = nu * std::log(0.5 * z) - std::lgamma(nu + 1.0) - log_bessel_iv(nu, z);
  return std::exp(log_value);
}

namespace detail {
inline double interp(const std::vector<double>& t, const std::vector<double>& v, std::size_t k, double s) {
  const double w = (s - t[k]) / (t[k + 1] - t[k]);
  return v[k] + w * (v[k + 1] - v[k]);
}

inline std::size_t interval_of(const std::vector<double>& t, double s) {
  require(s >= t.front() && s <= t.back(), "time outside the path horizon");
  auto it = std::upper_bound(t.begin(), t.end(), s);
  std::size_t k = static_cast<std::size_t>(it - t.begin());
  return k == 0 ? 0 : std::min(k - 1, t.size() - 2);
}

/// Trapezoidal int_{lo}^{hi} r^{-2}, r linearly interpolated, lo <= hi.
inline double clock_integral(const BesselPath& p, double lo, double hi) {
  if (hi == lo) return 0.0;
  const std::size_t k0 = interval_of(p.times, lo), k1 = interval_of(p.times, hi);
  double total = 0.0;
  for (std::size_t k = k0; k <= k1; ++k) {
    const double a = std::max(lo, p.times[k]), b = std::min(hi, p.times[k + 1]);
    if (b <= a) continue;
    const double ra = interp(p.times, p.values, k, a), rb = interp(p.times, p.values, k, b);
    require(ra > 0.0 && rb > 0.0, "additive clock: path touches zero inside the interval");
    total += 0.5 * (b - a) * (1.0 / (ra * ra) + 1.0 / (rb * rb));
  }
  return total;
}
}  // namespace detail

/// rho_s(t) = int_s^t r_u^{-2} du by the trapezoid rule; negative for t < s.
inline double additive_clock(const BesselPath& path, double s, double t) {
  if (t >= s) return detail::clock_integral(path, s, t);
  return -detail::clock_integral(path, t, s);
}

/// rho_s at the knots of the maximal zero-free window of the path around s.
struct ClockTable {
  double anchor = 0.0;
  std::vector<double> knots;
  std::vector<double> cumulative;
};

inline ClockTable clock_table(const BesselPath& path, double s) {
  path.validate();
  const std::size_t ks = detail::interval_of(path.times, s);
  std::size_t lo = ks, hi = ks + 1;
  if (path.values[lo] <= 0.0 && path.times[lo] < s) ++lo;
  require(path.values[lo] > 0.0 || path.times[lo] > s, "clock_table: anchor sits at a zero of the path");
  while (lo > 0 && path.values[lo - 1] > 0.0) --lo;
  while (hi + 1 < path.size() && path.values[hi + 1] > 0.0) ++hi;
  if (path.values[hi] <= 0.0) --hi;
  if (path.values[lo] <= 0.0) ++lo;
  require(lo <= hi && path.times[lo] <= s && s <= path.times[hi], "clock_table: anchor outside a zero-free window");
  ClockTable tab;
  tab.anchor = s;
  for (std::size_t k = lo; k <= hi; ++k) {
    tab.knots.push_back(path.times[k]);
    tab.cumulative.push_back(additive_clock(path, s, path.times[k]));
  }
  return tab;
}

/// c_s(u) = inf{t : rho_s(t) = u}, piecewise linear in the table.
inline double clock_inverse(const ClockTable& tab, double u) {
  const auto& c = tab.cumulative;
  require(!c.empty() && u >= c.front() && u <= c.back(), "clock_inverse: value outside the tabulated clock range");
  if (u == 0.0) return tab.anchor;
  auto it = std::lower_bound(c.begin(), c.end(), u);
  std::size_t k = static_cast<std::size_t>(it - c.begin());
  if (k == 0) return tab.knots.front();
  const double w = (u - c[k - 1]) / (c[k] - c[k - 1]);
  return tab.knots[k - 1] + w * (tab.knots[k] - tab.knots[k - 1]);
}

/// First time r reaches a, linearly interpolated inside the crossing interval.
inline std::optional<double> first_passage(const BesselPath& path, double a) {
  require(a > 0.0, "first_passage: level must be positive");
  if (path.values[0] >= a) return path.times[0];
  for (std::size_t k = 1; k < path.size(); ++k) {
    if (path.values[k] >= a) {
      const double r0 = path.values[k - 1], r1 = path.values[k];
      return path.times[k - 1] + (a - r0) / (r1 - r0) * (path.times[k] - path.times[k - 1]);
    }
  }
  return std::nullopt;
}

// ---------------------------------------------------------------------------
// Substepped clock.
//
// Inside each grid interval the path is advanced by exact transitions with
// step kappa * r^2 (one unit of kappa of clock per substep). Below
// switch_ratio * sqrt(interval) the radius is tracked in log scale, where the
// clock-time dynamics log r = B_u + (delta - 2)/2 u are exact; real time is
// recovered as int exp(2 log r) du. Reaching rho_max marks the interval as
// divergent (the path hit zero): the radius restarts from 0 for the rest of
// the interval. An interval that starts at an exact zero is divergent too.
// ---------------------------------------------------------------------------

struct ClockOptions {
  double kappa = 0.01;      // real-scale substep = kappa * r^2
  double log_step = 0.05;   // clock step in log mode (times depth^2 below the switch)
  double rho_max = 1e6;
  double switch_ratio = 1e-3;
};

struct ClockStep {
  double r_end = 0.0;
  double rho = 0.0;  // +inf when diverged
  bool diverged = false;
};

inline ClockStep advance_with_clock(double delta, double r, double dt, Rng& rng, const ClockOptions& opt = {}) {
  require(dt > 0.0 && r >= 0.0, "advance_with_clock: invalid state");
  const double inf = std::numeric_limits<double>::infinity();
  if (r == 0.0) return {std::sqrt(besq_transition_sample(delta, 0.0, dt, rng)), inf, true};
  const double r_switch = opt.switch_ratio * std::sqrt(dt);
  const double log_switch = std::log(r_switch);
  const double drift = 0.5 * (delta - 2.0);
  double remaining = dt, rho = 0.0;
  bool log_mode = false;
  double xi = 0.0;
  while (remaining > 0.0) {
    if (!log_mode) {
      const double step = std::min(remaining, opt.kappa * r * r);
      const double r_new = std::sqrt(besq_transition_sample(delta, r * r, step, rng));
      if (r_new <= 0.0) return {std::sqrt(besq_transition_sample(delta, 0.0, remaining, rng)), inf, true};
      const double lin = step / (r * r_new);
      rho += lin * (1.0 + 0.5 * lin);  // bridge fluctuation term
      remaining -= step;
      r = r_new;
      if (r < r_switch && remaining > 0.0) {
        log_mode = true;
        xi = std::log(r);
      }
    } else {
      const double depth = log_switch - xi;
      double du = opt.log_step * std::max(1.0, depth * depth);
      const double rate = std::exp(2.0 * xi);
      if (rate * du > 0.5 * remaining) du = std::max(0.5 * remaining / rate, 1e-12);
      const double xi_new = xi + drift * du + std::sqrt(du) * rng.normal();
      const double spent = 0.5 * du * (rate + std::exp(2.0 * std::min(xi_new, log_switch + 1.0)));
      rho += du;
      remaining -= spent;
      xi = xi_new;
      if (rho >= opt.rho_max) {
        const double rest = std::max(remaining, 0.0);
        const double r_end = rest > 0.0 ? std::sqrt(besq_transition_sample(delta, 0.0, rest, rng)) : 0.0;
        return {r_end, inf, true};
      }
      if (remaining <= 0.0) return {std::exp(xi), rho, false};
      if (xi > log_switch + std::numbers::ln2) {
        log_mode = false;
        r = std::exp(xi);
      }
    }
  }
  return {r, rho, false};
}

/// A Bessel path together with the substepped clock increment of every grid
/// interval.
struct ClockedBesselPath {
  BesselPath path;
  std::vector<double> increments;  // size() - 1 entries; +inf when diverged
  std::vector<std::uint8_t> diverged;

  /// rho between knots i0 <= i1 (+inf if any interval in between diverged).
  double clock(std::size_t i0, std::size_t i1) const {
    double s = 0.0;
    for (std::size_t k = i0; k < i1; ++k) s += increments[k];
    return s;
  }
  bool any_divergence(std::size_t i0, std::size_t i1) const {
    for (std::size_t k = i0; k < i1; ++k)
      if (diverged[k]) return true;
    return false;
  }
};

inline ClockedBesselPath sample_clocked_bessel_path(double delta, double x0, const TimeGrid& grid, Rng& rng,
                                                    const ClockOptions& opt = {}) {
  grid.validate();
  require(x0 >= 0.0, "sample_clocked_bessel_path: x0 must be >= 0");
  ClockedBesselPath out;
  out.path.delta = delta;
  out.path.times = grid.t;
  out.path.values.resize(grid.size());
  out.increments.resize(grid.size() - 1);
  out.diverged.resize(grid.size() - 1);
  out.path.values[0] = x0;
  double r = x0;
  for (std::size_t k = 1; k < grid.size(); ++k) {
    const ClockStep st = advance_with_clock(delta, r, grid.t[k] - grid.t[k - 1], rng, opt);
    r = st.r_end;
    out.path.values[k] = r;
    out.increments[k - 1] = st.rho;
    out.diverged[k - 1] = st.diverged ? 1 : 0;
  }
  return out;
}

}  // namespace spinwalk
