#pragma once

// Numerical Riemannian geometry of the sphere with metric g = sigma^{-2}.
//
// Charts drop one coordinate: on the hemisphere {sign * x_q > 0} the local
// coordinates are z = (x_i)_{i != q}. The canonical chart uses the axis with
// the largest |x_q|. All operators act on the U-normalised field sigma^2 / U,
// so the radial eigenvalue is 1 as the geometric identities require.
//
// Derivatives are central differences with an explicit step h (default 1e-4).

#include "spinwalk/core.hpp"
#include "spinwalk/model.hpp"

#include <functional>
#include <numbers>
#include <vector>

namespace spinwalk {

using ScalarField = std::function<double(const Vec&)>;

inline constexpr double kDefaultStep = 1e-4;

struct ChartPoint {
  int q = 0;     // dropped coordinate (0-based)
  int sign = 1;  // sign of x_q
  Vec z;         // coordinates in the open unit ball of R^{d-1}
  Vec x;         // point on the sphere
};

struct MetricEval {
  Mat g_inv;  // g^{ij}
  Mat g;      // g_{ij}
  double sqrt_det_g = 0.0;
};

inline Vec drop_coordinate(const Vec& x, int q) {
  const int d = static_cast<int>(x.size());
  Vec z(d - 1);
  for (int i = 0, k = 0; i < d; ++i)
    if (i != q) z(k++) = x(i);
  return z;
}

/// Chart with a prescribed axis q; |x_q| must be positive.
inline ChartPoint chart_with_axis(const Vec& x, int q) {
  require_unit(x);
  require(q >= 0 && q < x.size() && x(q) != 0.0, "chart axis must have a nonzero coordinate");
  return {q, x(q) > 0 ? 1 : -1, drop_coordinate(x, q), x};
}

inline ChartPoint chart_of(const Vec& x) {
  int q = 0;
  x.cwiseAbs().maxCoeff(&q);
  return chart_with_axis(x, q);
}

inline Vec chart_inverse(int q, int sign, const Vec& z) {
  const double r2 = z.squaredNorm();
  require(r2 < 1.0, "chart_inverse: |z| must be < 1");
  const int d = static_cast<int>(z.size()) + 1;
  Vec x(d);
  for (int i = 0, k = 0; i < d; ++i) x(i) = (i == q) ? sign * std::sqrt(1.0 - r2) : z(k++);
  return x;
}

inline Vec chart_inverse(const ChartPoint& c) { return chart_inverse(c.q, c.sign, c.z); }

namespace detail {

inline Mat unit_sigma2(const ModelSpec& m, const Vec& x) { return sigma2(m, x) / m.U; }

inline Mat unit_sigma_sym(const ModelSpec& m, const Vec& y) { return sigma_sym_at(m, y) / std::sqrt(m.U); }

inline Vec normalized(const Vec& y) { return y / y.norm(); }

/// d/dt f(N(x + t v)) at t = 0, for v tangent at x.
inline double tangent_derivative(const ScalarField& f, const Vec& x, const Vec& v, double h) {
  return (f(normalized(x + h * v)) - f(normalized(x - h * v))) / (2.0 * h);
}

}  // namespace detail

/// g^{ij} = sigma2_ij - x_i x_j and the closed-form g_ij on the given chart.
inline MetricEval metric_in_chart(const ModelSpec& m, const ChartPoint& c) {
  const Vec& x = c.x;
  const int d = m.d, q = c.q;
  const Mat s2 = detail::unit_sigma2(m, x);
  const Mat s2inv = s2.inverse();
  require(std::isfinite(s2inv.sum()), "metric: sigma^2 is singular");
  const double xq = x(q);
  MetricEval e;
  e.g_inv.resize(d - 1, d - 1);
  e.g.resize(d - 1, d - 1);
  for (int i = 0, a = 0; i < d; ++i) {
    if (i == q) continue;
    for (int j = 0, b = 0; j < d; ++j) {
      if (j == q) continue;
      e.g_inv(a, b) = s2(i, j) - x(i) * x(j);
      e.g(a, b) = s2inv(i, j) + s2inv(q, q) * x(i) * x(j) / (xq * xq) - (s2inv(q, i) * x(j) + s2inv(q, j) * x(i)) / xq;
      ++b;
    }
    ++a;
  }
  e.sqrt_det_g = std::sqrt(e.g.determinant());
  return e;
}

inline MetricEval metric_eval(const ModelSpec& m, const Vec& x) { return metric_in_chart(m, chart_of(x)); }

/// Gamma[k](i, j) = Gamma^k_ij on the given chart, from central differences of
/// the closed-form g_ij in chart coordinates.
inline std::vector<Mat> christoffel_in_chart(const ModelSpec& m, const ChartPoint& c, double h = kDefaultStep) {
  require(h > 1e-7 && h < 1e-2, "christoffel: step h must lie in (1e-7, 1e-2)");
  require(std::abs(c.x(c.q)) >= 0.1, "christoffel: point too close to the chart boundary");
  const int n = m.d - 1;
  std::vector<Mat> dg(n);  // dg[l] = d g / d z_l
  for (int l = 0; l < n; ++l) {
    ChartPoint p = c, q = c;
    p.z(l) += h;
    q.z(l) -= h;
    p.x = chart_inverse(p);
    q.x = chart_inverse(q);
    dg[l] = (metric_in_chart(m, p).g - metric_in_chart(m, q).g) / (2.0 * h);
  }
  const Mat g_inv = metric_in_chart(m, c).g_inv;
  std::vector<Mat> gamma(n, Mat::Zero(n, n));
  for (int k = 0; k < n; ++k)
    for (int i = 0; i < n; ++i)
      for (int j = 0; j < n; ++j) {
        double s = 0.0;
        for (int l = 0; l < n; ++l) s += g_inv(k, l) * (dg[i](j, l) + dg[j](i, l) - dg[l](i, j));
        gamma[k](i, j) = 0.5 * s;
      }
  return gamma;
}

inline std::vector<Mat> christoffel(const ModelSpec& m, const Vec& x, double h = kDefaultStep) {
  return christoffel_in_chart(m, chart_of(x), h);
}

/// Delta_g f = sum g^{ij} (d_i d_j F - Gamma^k_ij d_k F), F = f o chart^{-1}.
inline double laplace_beltrami_in_chart(const ModelSpec& m, const ScalarField& f, const ChartPoint& c,
                                        double h = kDefaultStep) {
  const int n = m.d - 1;
  auto F = [&](const Vec& z) { return f(chart_inverse(c.q, c.sign, z)); };
  const double f0 = F(c.z);
  Vec grad(n);
  Mat hess(n, n);
  for (int i = 0; i < n; ++i) {
    Vec zp = c.z, zm = c.z;
    zp(i) += h;
    zm(i) -= h;
    const double fp = F(zp), fm = F(zm);
    grad(i) = (fp - fm) / (2.0 * h);
    hess(i, i) = (fp - 2.0 * f0 + fm) / (h * h);
    for (int j = 0; j < i; ++j) {
      Vec zpp = c.z, zpm = c.z, zmp = c.z, zmm = c.z;
      zpp(i) += h; zpp(j) += h;
      zpm(i) += h; zpm(j) -= h;
      zmp(i) -= h; zmp(j) += h;
      zmm(i) -= h; zmm(j) -= h;
      hess(i, j) = hess(j, i) = (F(zpp) - F(zpm) - F(zmp) + F(zmm)) / (4.0 * h * h);
    }
  }
  const Mat g_inv = metric_in_chart(m, c).g_inv;
  const auto gamma = christoffel_in_chart(m, c, h);
  double out = 0.0;
  for (int i = 0; i < n; ++i)
    for (int j = 0; j < n; ++j) {
      double first = 0.0;
      for (int k = 0; k < n; ++k) first += gamma[k](i, j) * grad(k);
      out += g_inv(i, j) * (hess(i, j) - first);
    }
  return out;
}

inline double laplace_beltrami(const ModelSpec& m, const ScalarField& f, const Vec& x, double h = kDefaultStep) {
  return laplace_beltrami_in_chart(m, f, chart_of(x), h);
}

/// A_0(y) = 1/2 sum_j DA_j(y) A_j(y), where A_j(y) = sigma_sym(y/|y|) e_j.
inline Vec a0_field(const ModelSpec& m, const Vec& y, double h = kDefaultStep) {
  require(y.norm() > 0.0, "a0_field: y must be nonzero");
  const Mat A = detail::unit_sigma_sym(m, y);
  Vec out = Vec::Zero(m.d);
  for (int j = 0; j < m.d; ++j) {
    const Vec v = A.col(j);
    const Vec dAj = (detail::unit_sigma_sym(m, y + h * v).col(j) - detail::unit_sigma_sym(m, y - h * v).col(j)) / (2.0 * h);
    out += dAj;
  }
  return 0.5 * out;
}

/// S_j(x) = (sigma_sym(x) - x x^T) e_j for j = 1..d.
inline Vec s_field(const ModelSpec& m, const Vec& x, int j) {
  Vec s = detail::unit_sigma_sym(m, x).col(j);
  s -= x * x(j);
  return s;
}

/// [S_0, S_1, ..., S_d] at x, with S_0 = -(I - x x^T) A_0(x).
inline std::vector<Vec> drift_fields(const ModelSpec& m, const Vec& x, double h = kDefaultStep) {
  require_unit(x);
  std::vector<Vec> out;
  out.reserve(m.d + 1);
  const Vec a0 = a0_field(m, x, h);
  out.push_back(-(a0 - x * x.dot(a0)));
  for (int j = 0; j < m.d; ++j) out.push_back(s_field(m, x, j));
  return out;
}

/// G f = S_0(f) + 1/2 sum_i S_i(S_i(f)), the outer derivative taken of the
/// function y -> S_i(f)(y), not a fixed-direction second difference.
inline double generator_apply(const ModelSpec& m, const ScalarField& f, const Vec& x, double h = kDefaultStep) {
  require_unit(x);
  const auto fields = drift_fields(m, x, h);
  double out = detail::tangent_derivative(f, x, fields[0], h);
  for (int i = 0; i < m.d; ++i) {
    auto Sif = [&](const Vec& y) { return detail::tangent_derivative(f, y, s_field(m, y, i), h); };
    out += 0.5 * detail::tangent_derivative(Sif, x, fields[i + 1], h);
  }
  return out;
}

/// V_0(f) = G f - 1/2 Delta_g f.
inline double v0_apply(const ModelSpec& m, const ScalarField& f, const Vec& x, double h = kDefaultStep) {
  return generator_apply(m, f, x, h) - 0.5 * laplace_beltrami(m, f, x, h);
}

/// Ambient components of the tangent field V_0 at x (V_0 applied to the
/// coordinate functions).
inline Vec v0_vector(const ModelSpec& m, const Vec& x, double h = kDefaultStep) {
  Vec v(m.d);
  for (int k = 0; k < m.d; ++k) v(k) = v0_apply(m, [k](const Vec& y) { return y(k); }, x, h);
  return v;
}

/// Circulation of the one-form g(V_0, .) around the unit circle (d = 2).
/// Zero exactly when V_0 is a gradient field on S^1.
inline double circle_holonomy(const ModelSpec& m, int n_points = 256, double h = kDefaultStep) {
  require(m.d == 2, "circle_holonomy requires d = 2");
  double total = 0.0;
  for (int k = 0; k < n_points; ++k) {
    const double th = 2.0 * std::numbers::pi * k / n_points;
    Vec x(2), t(2);
    x << std::cos(th), std::sin(th);
    t << -std::sin(th), std::cos(th);
    const Mat s2inv = detail::unit_sigma2(m, x).inverse();
    total += (s2inv * v0_vector(m, x, h)).dot(t);
  }
  return total * 2.0 * std::numbers::pi / n_points;
}

/// Antisymmetric part of the chart derivative of omega = g(V_0, .):
/// max_{i<j} |d_i omega_j - d_j omega_i|. Zero for gradient fields.
inline double gradient_residual(const ModelSpec& m, const Vec& x, double outer_h = 1e-3, double h = kDefaultStep) {
  const ChartPoint c = chart_of(x);
  const int n = m.d - 1;
  auto omega = [&](const Vec& z) {
    const Vec y = chart_inverse(c.q, c.sign, z);
    const Vec v = drop_coordinate(v0_vector(m, y, h), c.q);
    ChartPoint cy{c.q, c.sign, z, y};
    return Vec(metric_in_chart(m, cy).g * v);
  };
  Mat D(n, n);  // D(i, j) = d_i omega_j
  for (int i = 0; i < n; ++i) {
    Vec zp = c.z, zm = c.z;
    zp(i) += outer_h;
    zm(i) -= outer_h;
    D.row(i) = ((omega(zp) - omega(zm)) / (2.0 * outer_h)).transpose();
  }
  double worst = 0.0;
  for (int i = 0; i < n; ++i)
    for (int j = i + 1; j < n; ++j) worst = std::max(worst, std::abs(D(i, j) - D(j, i)));
  return worst;
}

}  // namespace spinwalk
