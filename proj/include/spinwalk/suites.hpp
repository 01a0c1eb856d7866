#pragma once

// Verification suites shared by the command-line runner and the test
// binaries: geometry identities, and comparison of walk output with the
// limiting laws (radial CDF, exit-time Laplace transform, stationary law).

#include "spinwalk/bessel.hpp"
#include "spinwalk/model.hpp"
#include "spinwalk/report.hpp"
#include "spinwalk/riemann.hpp"
#include "spinwalk/rng.hpp"
#include "spinwalk/sphere_sde.hpp"
#include "spinwalk/stats.hpp"
#include "spinwalk/walk.hpp"

#include <cmath>
#include <vector>

namespace spinwalk {

/// Geometry identities at n random points (random radii for the A_0 check):
/// g g^{-1} = I, tangency of S_0..S_d, sum_j S_j S_j^T = g^{-1},
/// trace sigma_sy(y^) = V + 2 <A_0(y), y>, and the Leibniz rule for V_0.
inline std::vector<TestReport> geometry_reports(const ModelSpec& m, std::size_t n, std::uint64_t seed,
                                                double h = kDefaultStep) {
  Rng rng(seed, "geometry", 0);
  double inv_err = 0.0, tangency = 0.0, gram = 0.0, trace_err = 0.0, leibniz = 0.0;
  const double delta = m.delta();
  for (std::size_t k = 0; k < n; ++k) {
    const Vec x = rng.unit_vector(m.d);
    const ChartPoint c = chart_of(x);
    const MetricEval me = metric_in_chart(m, c);
    const int dm = m.d - 1;
    inv_err = std::max(inv_err, (me.g * me.g_inv - Mat::Identity(dm, dm)).cwiseAbs().maxCoeff());
    const auto fields = drift_fields(m, x, h);
    Mat gram_amb = Mat::Zero(m.d, m.d);
    for (int j = 0; j <= m.d; ++j) tangency = std::max(tangency, std::abs(fields[j].dot(x)));
    for (int j = 1; j <= m.d; ++j) gram_amb += fields[j] * fields[j].transpose();
    Mat gram_chart(dm, dm);
    for (int i = 0, a = 0; i < m.d; ++i) {
      if (i == c.q) continue;
      for (int kk = 0, b = 0; kk < m.d; ++kk) {
        if (kk == c.q) continue;
        gram_chart(a, b++) = gram_amb(i, kk);
      }
      ++a;
    }
    gram = std::max(gram, (gram_chart - me.g_inv).cwiseAbs().maxCoeff());
    const Vec y = x * std::exp(rng.uniform() * 2.0 - 1.0);
    const double tr = detail::unit_sigma_sym(m, y).trace();
    trace_err = std::max(trace_err, std::abs(tr - (delta + 2.0 * a0_field(m, y, h).dot(y))));
    const double c1 = rng.normal(), c2 = rng.normal();
    const ScalarField f = [c1](const Vec& z) { return z(0) + c1 * z(1) * z(1); };
    const ScalarField g = [c2](const Vec& z) { return z(1) * z(0) + c2 * z(z.size() - 1); };
    const ScalarField fg = [&](const Vec& z) { return f(z) * g(z); };
    const double res = v0_apply(m, fg, x, h) - f(x) * v0_apply(m, g, x, h) - g(x) * v0_apply(m, f, x, h);
    leibniz = std::max(leibniz, std::abs(res));
  }
  const char* src = "geometry of the sphere with metric sigma^{-2}";
  return {
      at_most("g g_inv = I", inv_err, 1e-9, n, src),
      at_most("S_j tangent to the sphere", tangency, 1e-8, n, src),
      at_most("sum_j S_j^i S_j^k = g^{ik}", gram, 1e-6, n, src),
      at_most("trace sigma_sy = V + 2 <A_0(y), y>", trace_err, 1e-5, n, src),
      at_most("V_0 Leibniz residual", leibniz, 1e-3, n, src),
  };
}

/// Reference for the stationary law mu used by chi-square comparisons:
/// exact cell probabilities when available (isotropic: uniform; d = 2:
/// Fokker-Planck density), otherwise an estimated stationary sample.
struct MuReference {
  int d = 2;
  int bins = 36;
  std::vector<double> cell_prob;  // empty when only a sample is available
  std::vector<Vec> sample;
  std::string source;
};

struct MuOptions {
  int bins_circle = 36;   // longitude sectors for d = 2
  int bins_sphere = 1;    // d >= 3: 1 = hyperoctahedral chambers, 0 = orthants
  std::size_t samples = 20000;
  double burn_in = 20.0;
  double thin = 5.0;
  double h = 2e-3;
  int chains = 200;
  int threads = 1;
};

inline MuReference mu_reference(const ModelSpec& m, std::uint64_t seed, const MuOptions& opt = {}) {
  MuReference ref;
  ref.d = m.d;
  ref.bins = m.d == 2 ? opt.bins_circle : opt.bins_sphere;
  if (!m.is_rotation()) {
    ref.cell_prob = uniform_cell_probabilities(m.d, ref.bins);
    ref.source = "uniform law on the sphere";
  } else if (m.d == 2) {
    ref.cell_prob = stationary_density_circle(m, 10 * opt.bins_circle).sector_probabilities(opt.bins_circle);
    ref.source = "Fokker-Planck density on the circle";
  } else {
    StationaryOptions so;
    so.h = opt.h;
    so.chains = opt.chains;
    so.threads = opt.threads;
    ref.sample = estimate_stationary(m, opt.burn_in, opt.samples, opt.thin, seed, so).samples;
    ref.source = "estimated stationary law";
  }
  return ref;
}

inline TestReport chi2_vs_mu(const std::vector<Vec>& directions, const MuReference& ref, const std::string& name) {
  if (!ref.cell_prob.empty()) return sphere_chi2(directions, ref.cell_prob, ref.bins, name, ref.source);
  return sphere_chi2_two_sample(directions, ref.sample, ref.bins, name, ref.source);
}

namespace detail {
template <class T>
std::vector<T> head(const std::vector<T>& v, std::size_t k) {
  return std::vector<T>(v.begin(), v.begin() + static_cast<std::ptrdiff_t>(std::min(k, v.size())));
}
}  // namespace detail

/// Time-n marginal of the scaled walk against r_1 theta: radial KS against
/// the closed-form CDF (threshold on D), angular chi-square against mu, and
/// radial-angular distance correlation on the first `dcor_n` samples.
inline std::vector<TestReport> marginal_reports(const ModelSpec& m, const std::vector<Vec>& scaled, const MuReference& ref,
                                                double ks_max = 0.02, double dcor_max = 0.05,
                                                std::size_t dcor_n = 10000) {
  const double delta = m.delta(), su = std::sqrt(m.U);
  std::vector<double> radii;
  std::vector<Vec> dirs;
  for (const auto& x : scaled) {
    radii.push_back(x.norm());
    dirs.push_back(direction(x));
  }
  TestReport ks = ks_test_1d(radii, [&](double r) { return bessel_cdf_t1(delta, r / su); },
                             "radial KS distance vs Bessel time-1 CDF", "closed-form regularized gamma CDF");
  ks.threshold = ks_max;
  ks.pass = ks.statistic < ks_max;
  std::vector<Vec> r_vec;
  for (double r : detail::head(radii, dcor_n)) r_vec.push_back(Vec::Constant(1, r));
  const double dc = distance_correlation(r_vec, detail::head(dirs, dcor_n));
  return {ks, chi2_vs_mu(dirs, ref, "angular chi-square vs mu"),
          at_most("radial-angular distance correlation", dc, dcor_max, std::min(dcor_n, scaled.size()),
                  "independence of r_1 and theta")};
}

struct LaplaceRow {
  double lambda = 0.0;
  double closed_form = 0.0;
  double mc_estimate = 0.0;
  double std_err = 0.0;
  std::size_t n = 0;
};

/// E[exp(-lambda tau)] from exit times against the closed form
/// (|X| = R_{U t} with R ~ BES^delta, so the radial clock runs at rate U).
inline std::vector<LaplaceRow> exit_laplace_table(const ModelSpec& m, const ExitLaw& law, double a,
                                                  const std::vector<double>& lambdas) {
  std::vector<LaplaceRow> rows;
  for (double lam : lambdas) {
    std::vector<double> v;
    v.reserve(law.size());
    for (double t : law.times) v.push_back(std::exp(-lam * t));
    const MeanEstimate est = mean_and_se(v);
    rows.push_back({lam, exit_time_laplace(m.delta(), a, lam / m.U), est.mean, est.std_err, law.size()});
  }
  return rows;
}

inline std::vector<TestReport> exit_reports(const ModelSpec& m, const ExitLaw& law, double a,
                                            const std::vector<double>& lambdas, const MuReference& ref,
                                            double se_band = 3.0, double dcor_max = 0.05, std::size_t dcor_n = 10000) {
  std::vector<TestReport> out;
  for (const auto& row : exit_laplace_table(m, law, a, lambdas)) {
    const double z = std::abs(row.mc_estimate - row.closed_form) / row.std_err;
    out.push_back(at_most("exit Laplace transform |mc - closed form| / se at lambda=" + std::to_string(row.lambda), z,
                          se_band, row.n, "closed-form Laplace transform of the Bessel exit time"));
  }
  out.push_back(chi2_vs_mu(law.directions, ref, "exit direction chi-square vs mu"));
  std::vector<Vec> t_vec;
  for (double t : detail::head(law.times, dcor_n)) t_vec.push_back(Vec::Constant(1, t));
  const double dc = distance_correlation(t_vec, detail::head(law.directions, dcor_n));
  out.push_back(at_most("exit time-direction distance correlation", dc, dcor_max, t_vec.size(),
                        "independence of exit time and direction"));
  out.push_back(at_most("censored exit records", static_cast<double>(law.n_censored()), 0.0, law.size(),
                        "exit before the simulation cap"));
  return out;
}

}  // namespace spinwalk
