#pragma once

// Goodness-of-fit, two-sample and independence tests used by the
// verification suites. Every test is deterministic given its inputs and, for
// resampling tests, the supplied Rng.

#include "spinwalk/core.hpp"
#include "spinwalk/report.hpp"
#include "spinwalk/rng.hpp"

#include <boost/math/special_functions/gamma.hpp>

#include <algorithm>
#include <cmath>
#include <functional>
#include <numeric>
#include <numbers>
#include <vector>

namespace spinwalk {

inline constexpr double kAlpha = 0.01;

/// Asymptotic Kolmogorov tail P[K > x].
inline double kolmogorov_tail(double x) {
  if (x <= 0.0) return 1.0;
  if (x < 0.2) return 1.0;
  double s = 0.0;
  for (int k = 1; k <= 100; ++k) {
    const double term = std::exp(-2.0 * k * k * x * x);
    s += (k % 2 ? 1.0 : -1.0) * term;
    if (term < 1e-18) break;
  }
  return std::clamp(2.0 * s, 0.0, 1.0);
}

/// One-sample KS distance D_n against `cdf`; p from the asymptotic
/// Kolmogorov law with Stephens' finite-n correction. Passes when p > alpha.
inline TestReport ks_test_1d(std::vector<double> samples, const std::function<double(double)>& cdf,
                             std::string name = "ks one-sample", std::string provenance = "") {
  require(!samples.empty(), "ks_test_1d: empty sample");
  std::sort(samples.begin(), samples.end());
  const double n = static_cast<double>(samples.size());
  double D = 0.0;
  for (std::size_t i = 0; i < samples.size(); ++i) {
    const double F = cdf(samples[i]);
    D = std::max({D, (i + 1) / n - F, F - i / n});
  }
  const double sn = std::sqrt(n);
  const double p = kolmogorov_tail((sn + 0.12 + 0.11 / sn) * D);
  return {std::move(name), D, kAlpha, p, p > kAlpha, samples.size(), std::move(provenance)};
}

/// Two-sample KS; passes (no rejection) when p > alpha.
inline TestReport ks_test_2sample(std::vector<double> a, std::vector<double> b, std::string name = "ks two-sample",
                                  std::string provenance = "") {
  require(!a.empty() && !b.empty(), "ks_test_2sample: empty sample");
  std::sort(a.begin(), a.end());
  std::sort(b.begin(), b.end());
  const double na = static_cast<double>(a.size()), nb = static_cast<double>(b.size());
  std::size_t i = 0, j = 0;
  double D = 0.0;
  while (i < a.size() && j < b.size()) {
    const double x = std::min(a[i], b[j]);
    while (i < a.size() && a[i] <= x) ++i;
    while (j < b.size() && b[j] <= x) ++j;
    D = std::max(D, std::abs(i / na - j / nb));
  }
  const double ne = std::sqrt(na * nb / (na + nb));
  const double p = kolmogorov_tail((ne + 0.12 + 0.11 / ne) * D);
  return {std::move(name), D, kAlpha, p, p > kAlpha, a.size() + b.size(), std::move(provenance)};
}

// ---------------------------------------------------------------------------
// Energy distance with a permutation null.
// ---------------------------------------------------------------------------

namespace detail {

/// Pooled pairwise distances in single precision, stored as the condensed
/// upper triangle. With group signs s_i = +-1 every energy statistic is a
/// function of the fixed total T, the fixed row sums, and
/// Q(s) = sum_{i<j} d_ij s_i s_j, so a permutation costs one pass.
class PairwiseDistances {
 public:
  explicit PairwiseDistances(const std::vector<Vec>& pts) : n_(pts.size()), rowsum_(pts.size(), 0.0) {
    store_.resize(n_ * (n_ - 1) / 2);
    std::size_t idx = 0;
    for (std::size_t i = 0; i < n_; ++i)
      for (std::size_t j = i + 1; j < n_; ++j) {
        const double dij = (pts[i] - pts[j]).norm();
        store_[idx++] = static_cast<float>(dij);
        rowsum_[i] += dij;
        rowsum_[j] += dij;
        total_ += dij;
      }
  }

  double total() const { return total_; }

  /// sum_{i<j} d_ij (s_i + s_j).
  double linear(const std::vector<float>& s) const {
    double l = 0.0;
    for (std::size_t i = 0; i < n_; ++i) l += s[i] * rowsum_[i];
    return l;
  }

  double quadratic(const std::vector<float>& s) const {
    double q = 0.0;
    std::size_t idx = 0;
    for (std::size_t i = 0; i < n_; ++i) {
      const std::size_t len = n_ - i - 1;
      const float* d = store_.data() + idx;
      const float* sj = s.data() + i + 1;
      float acc = 0.0f;
      for (std::size_t j = 0; j < len; ++j) acc += d[j] * sj[j];
      q += s[i] * static_cast<double>(acc);
      idx += len;
    }
    return q;
  }

 private:
  std::size_t n_;
  std::vector<float> store_;
  std::vector<double> rowsum_;
  double total_ = 0.0;
};

}  // namespace detail

/// Energy statistic E = 2 E|X-Y| - E|X-X'| - E|Y-Y'| scaled by nm/(n+m),
/// with a permutation p-value (1 + #{perm >= obs}) / (n_perm + 1).
/// Passes (no rejection) when p > alpha. Memory is 2 bytes per pooled pair.
inline TestReport energy_distance_test(const std::vector<Vec>& A, const std::vector<Vec>& B, int n_perm, Rng& rng,
                                       std::string name = "energy distance", std::string provenance = "") {
  require(!A.empty() && !B.empty(), "energy_distance_test: empty sample");
  std::vector<Vec> pooled;
  pooled.reserve(A.size() + B.size());
  pooled.insert(pooled.end(), A.begin(), A.end());
  pooled.insert(pooled.end(), B.begin(), B.end());
  for (const auto& v : pooled) require(v.size() == A.front().size(), "energy_distance_test: dimension mismatch");
  const std::size_t n = A.size(), N = pooled.size();
  const double nn = static_cast<double>(n), mm = static_cast<double>(B.size());
  const detail::PairwiseDistances dist(pooled);
  const double T = dist.total();
  auto statistic = [&](const std::vector<float>& s) {
    const double L = dist.linear(s), Q = dist.quadratic(s);
    const double wa = 0.25 * (T + L + Q), wb = 0.25 * (T - L + Q), cross = 0.5 * (T - Q);
    const double e = 2.0 * cross / (nn * mm) - 2.0 * wa / (nn * nn) - 2.0 * wb / (mm * mm);
    return e * nn * mm / (nn + mm);
  };
  std::vector<float> s(N, -1.0f);
  std::fill(s.begin(), s.begin() + static_cast<std::ptrdiff_t>(n), 1.0f);
  const double observed = statistic(s);
  int exceed = 0;
  for (int b = 0; b < n_perm; ++b) {
    for (std::size_t i = N - 1; i > 0; --i) std::swap(s[i], s[rng.index(i + 1)]);
    if (statistic(s) >= observed - 1e-9 * std::abs(observed)) ++exceed;
  }
  const double p = (1.0 + exceed) / (n_perm + 1.0);
  return {std::move(name), observed, kAlpha, p, p > kAlpha, N, std::move(provenance)};
}

// ---------------------------------------------------------------------------
// Chi-square tests on the sphere.
//
// Cells: d = 2 uses `bins` equal longitude sectors. For d >= 3 the cells are
// the chambers of the hyperoctahedral group (sign pattern times ordering of
// |x_i|), the barycentric refinement of the cross-polytope faces: 2^d d!
// congruent cells of equal area; level 0 uses the 2^d orthants only.
// ---------------------------------------------------------------------------

inline int sphere_cell_count(int d, int bins) {
  if (d == 2) return bins;
  int c = 1 << d;
  if (bins > 0) {
    for (int i = 2; i <= d; ++i) c *= i;
  }
  return c;
}

inline int sphere_cell(const Vec& x, int bins) {
  const int d = static_cast<int>(x.size());
  if (d == 2) {
    double th = std::atan2(x(1), x(0));
    if (th < 0) th += 2.0 * std::numbers::pi;
    int k = static_cast<int>(th / (2.0 * std::numbers::pi) * bins);
    return std::clamp(k, 0, bins - 1);
  }
  int orth = 0;
  for (int i = 0; i < d; ++i)
    if (x(i) < 0) orth |= 1 << i;
  if (bins == 0) return orth;
  // Lehmer code of the permutation sorting |x_i| in decreasing order.
  int order[kMaxDim];
  std::iota(order, order + d, 0);
  std::sort(order, order + d, [&](int a, int b) { return std::abs(x(a)) > std::abs(x(b)); });
  int code = 0;
  for (int i = 0; i < d; ++i) {
    int smaller = 0;
    for (int j = i + 1; j < d; ++j)
      if (order[j] < order[i]) ++smaller;
    code = code * (d - i) + smaller;
  }
  int fact = 1;
  for (int i = 2; i <= d; ++i) fact *= i;
  return orth * fact + code;
}

namespace detail {

/// Greedily merges consecutive cells until every merged cell has expected
/// count >= 5. Returns merged (observed, expected) pairs.
inline void merge_small(std::vector<double>& obs, std::vector<double>& expct, double min_expected = 5.0) {
  std::vector<double> o2, e2;
  double ao = 0.0, ae = 0.0;
  for (std::size_t i = 0; i < obs.size(); ++i) {
    ao += obs[i];
    ae += expct[i];
    if (ae >= min_expected) {
      o2.push_back(ao);
      e2.push_back(ae);
      ao = ae = 0.0;
    }
  }
  if (ae > 0.0 || ao > 0.0) {
    if (e2.empty()) {
      o2.push_back(ao);
      e2.push_back(ae);
    } else {
      o2.back() += ao;
      e2.back() += ae;
    }
  }
  obs.swap(o2);
  expct.swap(e2);
}

inline double chi2_sf(double stat, double df) { return df > 0 ? boost::math::gamma_q(0.5 * df, 0.5 * stat) : 1.0; }

}  // namespace detail

/// Goodness of fit of unit-vector samples against cell probabilities.
inline TestReport sphere_chi2(const std::vector<Vec>& samples, const std::vector<double>& cell_prob, int bins,
                              std::string name = "sphere chi-square", std::string provenance = "") {
  require(!samples.empty(), "sphere_chi2: empty sample");
  const int d = static_cast<int>(samples.front().size());
  const int cells = sphere_cell_count(d, bins);
  require(static_cast<int>(cell_prob.size()) == cells, "sphere_chi2: wrong number of cell probabilities");
  std::vector<double> obs(cells, 0.0), expct(cells);
  for (const auto& x : samples) obs[sphere_cell(x, bins)] += 1.0;
  const double n = static_cast<double>(samples.size());
  for (int c = 0; c < cells; ++c) expct[c] = n * cell_prob[c];
  detail::merge_small(obs, expct);
  require(obs.size() >= 2, "sphere_chi2: degenerate binning");
  double stat = 0.0;
  for (std::size_t c = 0; c < obs.size(); ++c) stat += (obs[c] - expct[c]) * (obs[c] - expct[c]) / expct[c];
  const double p = detail::chi2_sf(stat, static_cast<double>(obs.size() - 1));
  return {std::move(name), stat, kAlpha, p, p > kAlpha, samples.size(), std::move(provenance)};
}

inline std::vector<double> uniform_cell_probabilities(int d, int bins) {
  const int c = sphere_cell_count(d, bins);
  return std::vector<double>(c, 1.0 / c);
}

/// Cell probabilities of a density w.r.t. surface measure, by Monte Carlo
/// over `n_mc` uniform points (importance weights = density).
inline std::vector<double> cell_probabilities(int d, int bins, const std::function<double(const Vec&)>& density,
                                              std::size_t n_mc, Rng& rng) {
  std::vector<double> w(sphere_cell_count(d, bins), 0.0);
  double total = 0.0;
  for (std::size_t k = 0; k < n_mc; ++k) {
    const Vec x = rng.unit_vector(d);
    const double p = density(x);
    w[sphere_cell(x, bins)] += p;
    total += p;
  }
  for (double& v : w) v /= total;
  return w;
}

/// Two-sample chi-square homogeneity test on sphere cells.
inline TestReport sphere_chi2_two_sample(const std::vector<Vec>& A, const std::vector<Vec>& B, int bins,
                                         std::string name = "sphere chi-square two-sample",
                                         std::string provenance = "") {
  require(!A.empty() && !B.empty(), "sphere_chi2_two_sample: empty sample");
  const int d = static_cast<int>(A.front().size());
  const int cells = sphere_cell_count(d, bins);
  std::vector<double> ca(cells, 0.0), cb(cells, 0.0);
  for (const auto& x : A) ca[sphere_cell(x, bins)] += 1.0;
  for (const auto& x : B) cb[sphere_cell(x, bins)] += 1.0;
  const double na = static_cast<double>(A.size()), nb = static_cast<double>(B.size());
  // merge on pooled expected counts of the smaller sample
  std::vector<double> ma, mb;
  double acc_a = 0.0, acc_b = 0.0;
  const double scale = std::min(na, nb) / (na + nb);
  for (int c = 0; c < cells; ++c) {
    acc_a += ca[c];
    acc_b += cb[c];
    if ((acc_a + acc_b) * scale >= 5.0) {
      ma.push_back(acc_a);
      mb.push_back(acc_b);
      acc_a = acc_b = 0.0;
    }
  }
  if (acc_a + acc_b > 0.0) {
    if (ma.empty()) {
      ma.push_back(acc_a);
      mb.push_back(acc_b);
    } else {
      ma.back() += acc_a;
      mb.back() += acc_b;
    }
  }
  require(ma.size() >= 2, "sphere_chi2_two_sample: degenerate binning");
  const double k1 = std::sqrt(nb / na), k2 = std::sqrt(na / nb);
  double stat = 0.0;
  for (std::size_t c = 0; c < ma.size(); ++c) {
    const double diff = k1 * ma[c] - k2 * mb[c];
    stat += diff * diff / (ma[c] + mb[c]);
  }
  const double p = detail::chi2_sf(stat, static_cast<double>(ma.size() - 1));
  return {std::move(name), stat, kAlpha, p, p > kAlpha, A.size() + B.size(), std::move(provenance)};
}

// ---------------------------------------------------------------------------
// Distance correlation (V-statistic form), O(n^2) time and O(n) memory.
// ---------------------------------------------------------------------------

inline double distance_correlation(const std::vector<Vec>& u, const std::vector<Vec>& v) {
  const std::size_t n = u.size();
  require(n == v.size(), "distance_correlation: samples must be paired");
  require(n >= 4, "distance_correlation: need at least 4 pairs");
  std::vector<double> ra(n, 0.0), rb(n, 0.0);
  double ta = 0.0, tb = 0.0;
  for (std::size_t i = 0; i < n; ++i)
    for (std::size_t j = i + 1; j < n; ++j) {
      const double a = (u[i] - u[j]).norm(), b = (v[i] - v[j]).norm();
      ra[i] += a; ra[j] += a;
      rb[i] += b; rb[j] += b;
    }
  const double nd = static_cast<double>(n);
  for (std::size_t i = 0; i < n; ++i) {
    ra[i] /= nd;
    rb[i] /= nd;
    ta += ra[i];
    tb += rb[i];
  }
  ta /= nd;
  tb /= nd;
  double sab = 0.0, saa = 0.0, sbb = 0.0;
  for (std::size_t i = 0; i < n; ++i) {
    // diagonal terms: a_ii = 0
    const double Ai = -2.0 * ra[i] + ta, Bi = -2.0 * rb[i] + tb;
    sab += Ai * Bi;
    saa += Ai * Ai;
    sbb += Bi * Bi;
    for (std::size_t j = i + 1; j < n; ++j) {
      const double A = (u[i] - u[j]).norm() - ra[i] - ra[j] + ta;
      const double B = (v[i] - v[j]).norm() - rb[i] - rb[j] + tb;
      sab += 2.0 * A * B;
      saa += 2.0 * A * A;
      sbb += 2.0 * B * B;
    }
  }
  if (saa <= 0.0 || sbb <= 0.0) return 0.0;
  return std::sqrt(std::max(0.0, sab) / std::sqrt(saa * sbb));
}

inline double distance_correlation(const std::vector<double>& u, const std::vector<double>& v) {
  std::vector<Vec> a, b;
  a.reserve(u.size());
  b.reserve(v.size());
  for (double x : u) a.push_back(Vec::Constant(1, x));
  for (double x : v) b.push_back(Vec::Constant(1, x));
  return distance_correlation(a, b);
}

struct Interval {
  double lo = 0.0, hi = 0.0;
};

/// Percentile bootstrap interval of `statistic` at coverage `level`.
inline Interval bootstrap_ci(const std::vector<double>& samples,
                             const std::function<double(const std::vector<double>&)>& statistic, int n_boot,
                             double level, Rng& rng) {
  require(!samples.empty() && n_boot > 0 && level > 0.0 && level < 1.0, "bootstrap_ci: invalid arguments");
  std::vector<double> stats(n_boot), draw(samples.size());
  for (int b = 0; b < n_boot; ++b) {
    for (auto& x : draw) x = samples[rng.index(samples.size())];
    stats[b] = statistic(draw);
  }
  std::sort(stats.begin(), stats.end());
  const double lo_q = 0.5 * (1.0 - level), hi_q = 1.0 - lo_q;
  auto quantile = [&](double q) {
    const double pos = q * (n_boot - 1);
    const auto i = static_cast<std::size_t>(std::floor(pos));
    const std::size_t j = std::min(i + 1, stats.size() - 1);
    return stats[i] + (pos - i) * (stats[j] - stats[i]);
  };
  return {quantile(lo_q), quantile(hi_q)};
}

struct MeanEstimate {
  double mean = 0.0;
  double std_err = 0.0;
  std::size_t n = 0;
};

inline MeanEstimate mean_and_se(const std::vector<double>& x) {
  require(x.size() >= 2, "mean_and_se: need at least two values");
  double m = 0.0;
  for (double v : x) m += v;
  m /= static_cast<double>(x.size());
  double ss = 0.0;
  for (double v : x) ss += (v - m) * (v - m);
  const double var = ss / static_cast<double>(x.size() - 1);
  return {m, std::sqrt(var / static_cast<double>(x.size())), x.size()};
}

}  // namespace spinwalk
