#pragma once

// The limit diffusion from its radial and angular ingredients:
//   X_t = r_t phi(rho(t)),   rho(t) = U int r^{-2},
// the excursion map Phi_a(w, theta)(t) = w(t) theta(rho^a_w(t)) with its
// inverse, and the Pitman-Yor construction of a Bessel excursion from two
// BES^{4-delta} first-passage paths glued at the maximum.
//
// The angular diffusion mixes geometrically fast, so a clock increment above
// `mix_clock` is realised by a fresh draw from the stationary sample instead
// of an explicit (arbitrarily long) integration.

#include "spinwalk/bessel.hpp"
#include "spinwalk/core.hpp"
#include "spinwalk/model.hpp"
#include "spinwalk/report.hpp"
#include "spinwalk/rng.hpp"
#include "spinwalk/sphere_sde.hpp"

#include <cmath>
#include <limits>
#include <optional>
#include <variant>
#include <vector>

namespace spinwalk {

struct AngularOptions {
  double h = 1e-3;           // Euler step of the angular SDE in clock time
  double mix_clock = 20.0;   // clock span replaced by a stationary draw
};

namespace detail {
inline const Vec& draw_from(const std::vector<Vec>& pool, Rng& rng) {
  require(!pool.empty(), "stationary sample is empty");
  return pool[rng.index(pool.size())];
}

inline Vec evolve_angle(const ModelSpec& m, const Vec& x, double span, const std::vector<Vec>& pool, Rng& rng,
                        const AngularOptions& opt) {
  if (span > opt.mix_clock || !std::isfinite(span)) return draw_from(pool, rng);
  return advance_sphere(m, x, span, opt.h, rng);
}
}  // namespace detail

/// X_t = r_t phi(U rho_s(t)) at the knots t >= s of the radial path (which
/// holds |X|). phi starts at phi0 if given, else at a draw from `mu_pool`.
/// Throws if r vanishes on [s, horizon].
inline VectorPath skew_product_path(const ModelSpec& m, const BesselPath& radial, double s, Rng& rng,
                                    const std::vector<Vec>& mu_pool, std::optional<Vec> phi0 = std::nullopt,
                                    const AngularOptions& opt = {}) {
  radial.validate();
  const std::size_t k0 = detail::interval_of(radial.times, s);
  require(std::abs(radial.times[k0] - s) <= 1e-12 * std::max(1.0, s) ||
              std::abs(radial.times[k0 + 1] - s) <= 1e-12 * std::max(1.0, s),
          "skew_product_path: anchor must be a grid knot");
  const std::size_t ks = std::abs(radial.times[k0] - s) <= 1e-12 * std::max(1.0, s) ? k0 : k0 + 1;
  for (std::size_t k = ks; k < radial.size(); ++k)
    require(radial.values[k] > 0.0, "skew_product_path: radial path touches zero inside the window");
  Vec phi = phi0 ? direction(*phi0) : detail::draw_from(mu_pool, rng);
  VectorPath out;
  out.times.push_back(radial.times[ks]);
  out.values.push_back(radial.values[ks] * phi);
  for (std::size_t k = ks + 1; k < radial.size(); ++k) {
    const double span = m.U * additive_clock(radial, radial.times[k - 1], radial.times[k]);
    phi = detail::evolve_angle(m, phi, span, mu_pool, rng, opt);
    out.times.push_back(radial.times[k]);
    out.values.push_back(radial.values[k] * phi);
  }
  return out;
}

/// Skew product over a whole clocked path of R ~ BES^delta sampled on the
/// grid U t (so |X_t| = R_{U t}). Output times are grid / U. The angle is
/// restarted from mu after each interval whose clock diverged (a zero of R)
/// and at the start if R_0 = 0 or no phi0 is given.
inline VectorPath skew_product_clocked(const ModelSpec& m, const ClockedBesselPath& radial,
                                       const std::vector<Vec>& mu_pool, Rng& rng,
                                       std::optional<Vec> phi0 = std::nullopt, const AngularOptions& opt = {}) {
  const auto& p = radial.path;
  VectorPath out;
  Vec phi = (phi0 && p.values[0] > 0.0) ? direction(*phi0) : detail::draw_from(mu_pool, rng);
  out.times.push_back(p.times[0] / m.U);
  out.values.push_back(p.values[0] * phi);
  for (std::size_t k = 1; k < p.size(); ++k) {
    phi = radial.diverged[k - 1] ? detail::draw_from(mu_pool, rng)
                                 : detail::evolve_angle(m, phi, radial.increments[k - 1], mu_pool, rng, opt);
    out.times.push_back(p.times[k] / m.U);
    out.values.push_back(p.values[k] * phi);
  }
  return out;
}

/// Direct Euler-Maruyama for dX = sigma_sy(X^) dW (the origin uses e_1).
inline Vec simulate_x_sde(const ModelSpec& m, Vec x, double horizon, double h, Rng& rng) {
  const auto steps = static_cast<std::size_t>(std::ceil(horizon / h - 1e-9));
  const double dt = horizon / static_cast<double>(steps), sq = std::sqrt(dt);
  for (std::size_t k = 0; k < steps; ++k) x += sigma_sym_at(m, x) * (sq * rng.gaussian(m.d));
  return x;
}

// ---------------------------------------------------------------------------
// Rapid spinning.
// ---------------------------------------------------------------------------

struct SpinningCurve {
  std::vector<double> s;
  std::vector<double> rho;             // rho_s(t_fixed); +inf when diverged
  std::vector<std::uint8_t> diverged;  // clock cap hit (a zero of r in [s, t])
};

/// rho_s(t_fixed) for each s from the substepped clock; every s and t_fixed
/// must be grid knots.
inline SpinningCurve rapid_spinning_curve(const ClockedBesselPath& radial, double t_fixed,
                                          const std::vector<double>& s_list) {
  TimeGrid g{radial.path.times};
  const std::size_t kt = g.knot_index(t_fixed);
  SpinningCurve out;
  for (double s : s_list) {
    require(s > 0.0 && s < t_fixed, "rapid_spinning_curve: s must lie in (0, t)");
    const std::size_t ks = g.knot_index(s);
    const bool div = radial.any_divergence(ks, kt);
    out.s.push_back(s);
    out.diverged.push_back(div ? 1 : 0);
    out.rho.push_back(div ? std::numeric_limits<double>::infinity() : radial.clock(ks, kt));
  }
  return out;
}

/// Trapezoid-clock variant for a plain path; a zero of r in [s, t] gives +inf.
inline SpinningCurve rapid_spinning_curve(const BesselPath& radial, double t_fixed, const std::vector<double>& s_list) {
  SpinningCurve out;
  for (double s : s_list) {
    require(s > 0.0 && s < t_fixed, "rapid_spinning_curve: s must lie in (0, t)");
    out.s.push_back(s);
    try {
      out.rho.push_back(additive_clock(radial, s, t_fixed));
      out.diverged.push_back(0);
    } catch (const Error&) {
      out.rho.push_back(std::numeric_limits<double>::infinity());
      out.diverged.push_back(1);
    }
  }
  return out;
}

// ---------------------------------------------------------------------------
// The excursion map.
// ---------------------------------------------------------------------------

/// A unit-vector path indexed by clock time (increasing, possibly negative).
struct AngularPath {
  std::vector<double> clock;
  std::vector<Vec> values;

  std::size_t size() const { return clock.size(); }

  /// Normalised linear interpolation.
  Vec at(double u) const {
    require(!clock.empty(), "angular path is empty");
    const double tol = 1e-9 * std::max(1.0, std::abs(u));
    require(u >= clock.front() - tol && u <= clock.back() + tol, "angular path does not cover the clock value");
    if (u <= clock.front()) return values.front();
    if (u >= clock.back()) return values.back();
    const std::size_t k = detail::interval_of(clock, u);
    const double w = (u - clock[k]) / (clock[k + 1] - clock[k]);
    return direction((1.0 - w) * values[k] + w * values[k + 1]);
  }

  /// theta(. - offset): the same path with every clock value moved by offset.
  AngularPath shifted(double offset) const {
    AngularPath p = *this;
    for (double& c : p.clock) c += offset;
    return p;
  }
};

namespace detail {
/// Interior knot range [lo, hi] of an excursion (w > 0 strictly inside).
inline std::pair<std::size_t, std::size_t> interior(const BesselPath& w) {
  require(w.size() >= 3, "excursion needs at least one interior knot");
  require(w.values.front() == 0.0 && w.values.back() == 0.0, "excursion must vanish at both ends");
  for (std::size_t k = 1; k + 1 < w.size(); ++k) require(w.values[k] > 0.0, "excursion must be positive inside");
  return {1, w.size() - 2};
}
}  // namespace detail

/// rho^a_w(t) = sign(t - a) |int_a^t w^{-2}| at every interior knot.
inline std::vector<double> excursion_clock(const BesselPath& w, double a) {
  const auto [lo, hi] = detail::interior(w);
  require(a >= w.times[lo] && a <= w.times[hi], "anchor must lie inside the excursion's interior knots");
  std::vector<double> c;
  for (std::size_t k = lo; k <= hi; ++k) c.push_back(additive_clock(w, a, w.times[k]));
  return c;
}

/// Phi_a(w, theta)(t) = w(t) theta(rho^a_w(t)); zero at the endpoints.
inline VectorPath phi_a_map(const BesselPath& w, const AngularPath& theta, double a) {
  require(a > w.times.front() && a < w.times.back(), "phi_a_map: anchor outside (0, lifetime)");
  const auto [lo, hi] = detail::interior(w);
  const auto clk = excursion_clock(w, a);
  const int d = static_cast<int>(theta.values.front().size());
  VectorPath out;
  out.times.push_back(w.times.front());
  out.values.push_back(Vec::Zero(d));
  for (std::size_t k = lo; k <= hi; ++k) {
    out.times.push_back(w.times[k]);
    out.values.push_back(w.values[k] * theta.at(clk[k - lo]));
  }
  out.times.push_back(w.times.back());
  out.values.push_back(Vec::Zero(d));
  return out;
}

/// Inverse of Phi_a on a grid: w = |e|, theta = e / |e| at the clock knots
/// rho^a_w(t_k).
inline std::pair<BesselPath, AngularPath> phi_a_inverse(const VectorPath& e, double a, double delta = 0.0) {
  BesselPath w;
  w.delta = delta;
  w.times = e.times;
  for (const auto& v : e.values) w.values.push_back(v.norm());
  const auto [lo, hi] = detail::interior(w);
  const auto clk = excursion_clock(w, a);
  AngularPath theta;
  for (std::size_t k = lo; k <= hi; ++k) {
    theta.clock.push_back(clk[k - lo]);
    theta.values.push_back(e.values[k] / w.values[k]);
  }
  return {w, theta};
}

/// I_b^a(w) = int_b^a w^{-2} for b < a.
inline double anchor_offset(const BesselPath& w, double b, double a) {
  require(b < a, "anchor_offset requires b < a");
  return additive_clock(w, b, a);
}

// ---------------------------------------------------------------------------
// Pitman-Yor excursions.
// ---------------------------------------------------------------------------

struct PitmanYorExcursion {
  BesselPath path;         // zero at both ends, maximum M at index argmax
  double M = 0.0;
  double T_M = 0.0;
  std::size_t argmax = 0;
  double lifetime = 0.0;
};

namespace detail {
/// BES^dim(0) by exact transitions with step dt up to the first passage of
/// level M; the last point is (T_M, M) with T_M linearly interpolated.
inline std::pair<std::vector<double>, std::vector<double>> first_passage_path(double dim, double M, double dt,
                                                                              Rng& rng) {
  std::vector<double> t{0.0}, r{0.0};
  double y = 0.0;
  for (;;) {
    y = besq_transition_sample(dim, y, dt, rng);
    const double rn = std::sqrt(y);
    if (rn >= M) {
      const double tm = t.back() + (M - r.back()) / (rn - r.back()) * dt;
      if (tm > t.back()) {
        t.push_back(tm);
        r.push_back(M);
      } else {
        r.back() = M;
      }
      return {t, r};
    }
    t.push_back(t.back() + dt);
    r.push_back(rn);
  }
}
}  // namespace detail

/// Two independent BES^{4-delta}(0) paths to the first passage of M, the
/// second reversed and appended: the excursion rises to M at T_M and returns.
inline PitmanYorExcursion pitman_yor_excursion(double delta, double M, double dt, Rng& rng) {
  require(delta > 1.0 && delta < 2.0, "pitman_yor_excursion: delta must lie in (1, 2)");
  require(M > 0.0 && dt > 0.0, "pitman_yor_excursion: M and dt must be positive");
  const double dim = 4.0 - delta;
  auto [t1, r1] = detail::first_passage_path(dim, M, dt, rng);
  auto [t2, r2] = detail::first_passage_path(dim, M, dt, rng);
  PitmanYorExcursion e;
  e.M = M;
  e.T_M = t1.back();
  e.argmax = t1.size() - 1;
  e.path.delta = delta;
  e.path.times = t1;
  e.path.values = r1;
  const double total = e.T_M + t2.back();
  for (std::size_t j = t2.size() - 1; j-- > 0;) {
    e.path.times.push_back(total - t2[j]);
    e.path.values.push_back(r2[j]);
  }
  e.path.values.back() = 0.0;
  e.lifetime = total;
  return e;
}

// ---------------------------------------------------------------------------
// Marked excursions.
// ---------------------------------------------------------------------------

struct MaxLevel {
  double lo = 0.5, hi = 2.0;
};
struct MinLifetime {
  double a = 1.0;
  double m_floor_ratio = 0.1;  // proposal maxima start at ratio * sqrt(a)
};
using ExcursionCondition = std::variant<MaxLevel, MinLifetime>;

/// Forward: the mark is a stationary angular path started at the clock of
/// the first interior knot and run forward across the whole excursion; it
/// needs no reversibility. SplitAtMax: a stationary point at T_M evolved
/// forward and backward by two independent solutions; exact only for
/// reversible angular diffusions.
enum class MarkMode { Forward, SplitAtMax };

struct ExcursionOptions {
  double dt_ratio = 1e-3;  // radial grid step = dt_ratio * M^2
  MarkMode mode = MarkMode::Forward;
  bool assume_reversible = false;
  AngularOptions angular;
  int max_attempts = 100000;
};

struct ExcursionRecord {
  double anchor = 0.0;
  BesselPath radial;
  AngularPath angular;  // at the interior clock knots rho^anchor(t_k)
  double M = 0.0;
  double T_M = 0.0;
  std::size_t argmax = 0;
  double lifetime = 0.0;
  std::optional<VectorPath> mapped;
  bool diverged_start = false;  // clock to the left endpoint infinite
  bool diverged_end = false;
  bool conditional = false;     // split-at-max mark used without reversibility
};

/// Radial excursion by Pitman-Yor with M drawn from m^{delta-3} restricted to
/// the condition (inverse CDF), then an angular mark with a stationary start
/// from `mu_pool`, mapped through Phi_anchor. For MinLifetime the anchor is
/// a and proposals with lifetime <= a are rejected; for MaxLevel the anchor
/// is T_M.
inline ExcursionRecord sample_marked_excursion(const ModelSpec& m, double delta, const ExcursionCondition& cond,
                                               const std::vector<Vec>& mu_pool, Rng& rng,
                                               const ExcursionOptions& opt = {}) {
  require(delta > 1.0 && delta < 2.0, "sample_marked_excursion: delta must lie in (1, 2)");
  const double e = delta - 2.0;
  PitmanYorExcursion py;
  double anchor = 0.0;
  if (const auto* ml = std::get_if<MaxLevel>(&cond)) {
    require(ml->lo > 0.0 && ml->hi > ml->lo, "sample_marked_excursion: unsatisfiable max-level condition");
    const double u = rng.uniform();
    const double M = std::pow(std::pow(ml->lo, e) + u * (std::pow(ml->hi, e) - std::pow(ml->lo, e)), 1.0 / e);
    py = pitman_yor_excursion(delta, M, opt.dt_ratio * M * M, rng);
    anchor = py.T_M;
  } else {
    const auto& lt = std::get<MinLifetime>(cond);
    require(lt.a > 0.0 && lt.m_floor_ratio > 0.0, "sample_marked_excursion: unsatisfiable lifetime condition");
    const double m_lo = lt.m_floor_ratio * std::sqrt(lt.a);
    bool ok = false;
    for (int attempt = 0; attempt < opt.max_attempts && !ok; ++attempt) {
      const double u = 1.0 - rng.uniform();  // (0, 1]
      const double M = m_lo * std::pow(u, 1.0 / e);
      py = pitman_yor_excursion(delta, M, opt.dt_ratio * M * M, rng);
      ok = py.lifetime > lt.a;
    }
    require(ok, "sample_marked_excursion: no excursion with lifetime > a within the attempt budget");
    anchor = lt.a;
    // anchor must sit at a knot strictly inside; insert it if needed
    auto& p = py.path;
    const std::size_t k = detail::interval_of(p.times, anchor);
    if (p.times[k] != anchor && p.times[k + 1] != anchor) {
      const double v = detail::interp(p.times, p.values, k, anchor);
      p.times.insert(p.times.begin() + static_cast<std::ptrdiff_t>(k + 1), anchor);
      p.values.insert(p.values.begin() + static_cast<std::ptrdiff_t>(k + 1), v);
      if (k + 1 <= py.argmax) ++py.argmax;
    }
  }
  ExcursionRecord rec;
  rec.anchor = anchor;
  rec.radial = py.path;
  rec.M = py.M;
  rec.T_M = py.T_M;
  rec.argmax = py.argmax;
  rec.lifetime = py.lifetime;
  rec.conditional = opt.mode == MarkMode::SplitAtMax && !opt.assume_reversible;

  const auto clk = excursion_clock(rec.radial, anchor);
  const std::size_t n_int = clk.size();
  rec.angular.clock = clk;
  rec.angular.values.resize(n_int);
  const auto& ao = opt.angular;
  if (opt.mode == MarkMode::Forward) {
    Vec x = detail::draw_from(mu_pool, rng);
    rec.angular.values[0] = x;
    for (std::size_t i = 1; i < n_int; ++i) {
      x = detail::evolve_angle(m, x, clk[i] - clk[i - 1], mu_pool, rng, ao);
      rec.angular.values[i] = x;
    }
  } else {
    // index of the anchor among interior knots (clock 0)
    std::size_t ia = 0;
    for (std::size_t i = 0; i < n_int; ++i)
      if (std::abs(clk[i]) < std::abs(clk[ia])) ia = i;
    const Vec start = detail::draw_from(mu_pool, rng);
    rec.angular.values[ia] = start;
    Vec x = start;
    for (std::size_t i = ia + 1; i < n_int; ++i) {
      x = detail::evolve_angle(m, x, clk[i] - clk[i - 1], mu_pool, rng, ao);
      rec.angular.values[i] = x;
    }
    x = start;
    for (std::size_t i = ia; i-- > 0;) {
      x = detail::evolve_angle(m, x, clk[i + 1] - clk[i], mu_pool, rng, ao);
      rec.angular.values[i] = x;
    }
  }
  rec.mapped = phi_a_map(rec.radial, rec.angular, anchor);
  // With r linearly interpolated from an exact zero, int r^{-2} diverges at
  // each endpoint.
  rec.diverged_start = rec.radial.values.front() == 0.0;
  rec.diverged_end = rec.radial.values.back() == 0.0;
  return rec;
}

/// Structural checks on a mapped record: unique interior argmax, |e(T_M)| = M,
/// both halves strictly below M away from the junction, |mapped| = radial,
/// and clock divergence at both ends. Statistic = number of failed checks.
inline TestReport split_at_max_check(const ExcursionRecord& rec) {
  require(rec.mapped.has_value(), "split_at_max_check: record is not mapped");
  const auto& e = *rec.mapped;
  const auto& r = rec.radial.values;
  int failures = 0;
  const std::size_t n = r.size();
  if (rec.argmax == 0 || rec.argmax + 1 >= n) ++failures;
  bool unique = true, norm_ok = true;
  for (std::size_t k = 0; k < n; ++k) {
    if (k != rec.argmax && !(r[k] < rec.M)) unique = false;
    if (std::abs(e.values[k].norm() - r[k]) > 1e-12 * std::max(1.0, r[k])) norm_ok = false;
  }
  if (!unique) ++failures;
  if (!norm_ok) ++failures;
  if (std::abs(e.values[rec.argmax].norm() - rec.M) > 1e-12 * std::max(1.0, rec.M)) ++failures;
  if (std::abs(e.times[rec.argmax] - rec.T_M) > 1e-12 * std::max(1.0, rec.T_M)) ++failures;
  if (!rec.diverged_start || !rec.diverged_end) ++failures;
  return at_most("split-at-max structure", failures, 0.0, n,
                 rec.conditional ? "excursion split at its maximum (conditional: mark assumes reversibility)"
                                 : "excursion split at its maximum");
}

// ---------------------------------------------------------------------------
// Excursions of a sampled radial path.
// ---------------------------------------------------------------------------

struct ExcursionSpan {
  std::size_t begin = 0;  // knot where r is below threshold
  std::size_t end = 0;    // next such knot
};

/// Maximal runs of knots with r >= threshold, bounded by knots below it.
inline std::vector<ExcursionSpan> extract_excursions(const BesselPath& p, double threshold = 1e-4) {
  std::vector<ExcursionSpan> out;
  std::optional<std::size_t> last_low;
  for (std::size_t k = 0; k < p.size(); ++k) {
    if (p.values[k] < threshold) {
      if (last_low && k > *last_low + 1) out.push_back({*last_low, k});
      last_low = k;
    }
  }
  return out;
}

}  // namespace spinwalk
