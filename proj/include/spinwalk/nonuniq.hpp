#pragma once

// Non-uniqueness for rotation-equivariant square roots sigma(u) = R(u) A:
// with P = R(p), P sigma(u) = sigma(P u), so Y = P X solves the same SDE with
// the same Brownian increments whenever X does, and the two paths differ.

#include "spinwalk/core.hpp"
#include "spinwalk/model.hpp"
#include "spinwalk/report.hpp"
#include "spinwalk/rng.hpp"

#include <cmath>
#include <vector>

namespace spinwalk {

struct EquivarianceCheck {
  double orthogonality = 0.0;  // |P^T P - I|
  double det_error = 0.0;      // |det P - 1|
  double equivariance = 0.0;   // max |P sigma(u) - sigma(P u)|
  double fixes_e1 = 0.0;       // max |sigma(u) e1 - sqrt(U) u|
  double a_e1 = 0.0;           // |A e1 - e1|
  double trace_a2 = 0.0;
  bool recurrence_window = false;  // trace(A^2) in (1, 2)
  TestReport report;
};

/// Entry-wise max errors over `n_samples` uniform u, for sigma(u) =
/// sqrt(U) R(u) diag(A). Takes the raw parameters so that invalid A (for
/// example A e1 != e1) can be examined.
inline EquivarianceCheck check_equivariance(int d, double U, const Vec& A, const Vec& p, std::size_t n_samples,
                                            double tol, Rng& rng) {
  require(d == 2 || d == 4, "check_equivariance requires d in {2, 4}");
  require(A.size() == d && p.size() == d, "check_equivariance: dimension mismatch");
  require_unit(p);
  const Mat P = rotation_matrix(d, p);
  const Mat Ad = A.asDiagonal();
  auto sigma = [&](const Vec& u) -> Mat { return std::sqrt(U) * rotation_matrix(d, u) * Ad; };
  EquivarianceCheck c;
  c.orthogonality = (P.transpose() * P - Mat::Identity(d, d)).cwiseAbs().maxCoeff();
  c.det_error = std::abs(P.determinant() - 1.0);
  c.a_e1 = (Ad * basis(d, 0) - basis(d, 0)).cwiseAbs().maxCoeff();
  c.trace_a2 = A.squaredNorm();
  c.recurrence_window = c.trace_a2 > 1.0 && c.trace_a2 < 2.0;
  for (std::size_t k = 0; k < n_samples; ++k) {
    const Vec u = rng.unit_vector(d);
    const Vec pu = P * u;
    c.equivariance = std::max(c.equivariance, (P * sigma(u) - sigma(direction(pu))).cwiseAbs().maxCoeff());
    c.fixes_e1 = std::max(c.fixes_e1, (sigma(u).col(0) - std::sqrt(U) * u).cwiseAbs().maxCoeff());
  }
  const double worst = std::max({c.orthogonality, c.det_error, c.equivariance, c.fixes_e1, c.a_e1});
  c.report = at_most("rotation equivariance identities", worst, tol, n_samples,
                     "P R(u) = R(P u), sigma(u) e1 = sqrt(U) u, A e1 = e1");
  return c;
}

inline EquivarianceCheck check_equivariance(const ModelSpec& m, const Vec& p, std::size_t n_samples, double tol,
                                            Rng& rng) {
  require(m.is_rotation(), "check_equivariance requires a rotation family");
  return check_equivariance(m.d, m.U, m.A, p, n_samples, tol, rng);
}

struct PathPair {
  VectorPath x;
  VectorPath y;              // y = P x
  std::vector<Vec> dW;       // shared increments, one per grid interval
};

namespace detail {
inline Vec euler_residual(const ModelSpec& m, const Vec& from, const Vec& to, const Vec& dW) {
  return to - from - sigma_rot(m, direction(from)) * dW;
}
}  // namespace detail

/// Euler-Maruyama for dX = sigma_rot(X^) dW on the grid (origin uses e1),
/// with Y = P X from the same increments.
inline PathPair simulate_pair(const ModelSpec& m, const Vec& p, const Vec& x0, const TimeGrid& grid, Rng& rng) {
  require(m.is_rotation(), "simulate_pair requires a rotation family");
  grid.validate();
  const Mat P = rotation_matrix(m.d, p);
  PathPair out;
  Vec x = x0;
  out.x.times = grid.t;
  out.y.times = grid.t;
  out.x.values.push_back(x);
  out.y.values.push_back(P * x);
  for (std::size_t k = 1; k < grid.size(); ++k) {
    const Vec dW = std::sqrt(grid.t[k] - grid.t[k - 1]) * rng.gaussian(m.d);
    x += sigma_rot(m, direction(x)) * dW;
    out.dW.push_back(dW);
    out.x.values.push_back(x);
    out.y.values.push_back(P * x);
  }
  return out;
}

struct PairResiduals {
  double max_abs_difference = 0.0;  // max_k | |res_Y| - |res_X| | over steps not starting at 0
  double max_residual_x = 0.0;
  std::size_t origin_steps = 0;     // steps starting at the origin (excluded)
  double sup_distance = 0.0;        // sup_k |X_k - Y_k|
};

/// Transported Euler residuals. A step that starts exactly at the origin is
/// excluded: there the direction convention e1 is not equivariant.
inline PairResiduals pair_residuals(const ModelSpec& m, const PathPair& pr) {
  PairResiduals r;
  for (std::size_t k = 0; k + 1 < pr.x.size(); ++k) {
    r.sup_distance = std::max(r.sup_distance, (pr.x.values[k + 1] - pr.y.values[k + 1]).norm());
    if (pr.x.values[k].norm() == 0.0) {
      ++r.origin_steps;
      continue;
    }
    const double rx = detail::euler_residual(m, pr.x.values[k], pr.x.values[k + 1], pr.dW[k]).norm();
    const double ry = detail::euler_residual(m, pr.y.values[k], pr.y.values[k + 1], pr.dW[k]).norm();
    r.max_residual_x = std::max(r.max_residual_x, rx);
    r.max_abs_difference = std::max(r.max_abs_difference, std::abs(ry - rx));
  }
  return r;
}

struct RotationDemo {
  VectorPath x;
  VectorPath composite;               // P_j X on the j-th excursion segment
  std::vector<std::size_t> switches;  // knots where a new rotation starts
  std::vector<std::size_t> rotation_index;
  double max_regular_residual = 0.0;  // Euler residual of the composite off switch steps
  double max_switch_jump = 0.0;       // residual at switch steps, in units of sqrt(h)
  double max_norm_error = 0.0;        // max | |composite| - |x| |
  std::vector<TestReport> reports;
};

/// Simulates X from the origin with sigma_rot on a uniform grid; whenever
/// |X_k| < return_factor sqrt(h) after having left that ball, a rotation
/// drawn from p_list is applied to the following segment. The composite
/// path solves the Euler recursion exactly off switch steps; at a switch the
/// residual is (P_new - P_old) X_k, at most 2 return_factor sqrt(h).
inline RotationDemo excursion_rotation_demo(const ModelSpec& m, const std::vector<Vec>& p_list, const TimeGrid& grid,
                                            Rng& rng, double return_factor = 0.5) {
  require(m.is_rotation(), "excursion_rotation_demo requires a rotation family");
  const double tr = m.A.squaredNorm();
  require(tr > 1.0 && tr < 2.0, "excursion_rotation_demo: trace(A^2) must lie in (1, 2) (recurrent regime)");
  require(!p_list.empty(), "excursion_rotation_demo: empty rotation list");
  grid.validate();
  std::vector<Mat> rot;
  for (const auto& p : p_list) {
    require_unit(p);
    rot.push_back(rotation_matrix(m.d, p));
  }
  RotationDemo out;
  const PathPair base = simulate_pair(m, p_list.front(), Vec::Zero(m.d), grid, rng);
  out.x = base.x;
  out.composite.times = base.x.times;
  double h_max = 0.0;
  for (std::size_t k = 1; k < grid.size(); ++k) h_max = std::max(h_max, grid.t[k] - grid.t[k - 1]);
  const double threshold = return_factor * std::sqrt(h_max);
  std::size_t current = rng.index(rot.size());
  out.rotation_index.push_back(current);
  bool outside = false;
  for (std::size_t k = 0; k < base.x.size(); ++k) {
    const double r = base.x.values[k].norm();
    if (r >= threshold) outside = true;
    if (outside && r < threshold && k > 0) {
      current = rng.index(rot.size());
      out.switches.push_back(k);
      out.rotation_index.push_back(current);
      outside = false;
    }
    out.composite.values.push_back(rot[current] * base.x.values[k]);
  }
  std::size_t sw = 0;
  for (std::size_t k = 0; k + 1 < base.x.size(); ++k) {
    out.max_norm_error =
        std::max(out.max_norm_error, std::abs(out.composite.values[k + 1].norm() - base.x.values[k + 1].norm()));
    if (base.x.values[k].norm() == 0.0) continue;
    const double res =
        detail::euler_residual(m, out.composite.values[k], out.composite.values[k + 1], base.dW[k]).norm();
    while (sw < out.switches.size() && out.switches[sw] < k + 1) ++sw;
    const bool is_switch = sw < out.switches.size() && out.switches[sw] == k + 1;
    if (is_switch) out.max_switch_jump = std::max(out.max_switch_jump, res / std::sqrt(h_max));
    else out.max_regular_residual = std::max(out.max_regular_residual, res);
  }
  const char* src = "independent rotation per excursion";
  out.reports.push_back(at_most("composite norm equals original norm", out.max_norm_error, 1e-12, base.x.size(), src));
  out.reports.push_back(
      at_most("composite Euler residual off switch steps", out.max_regular_residual, 1e-12, base.x.size(), src));
  out.reports.push_back(at_most("switch-step residual / sqrt(h)", out.max_switch_jump, 2.0 * return_factor + 1e-9,
                                out.switches.size(), src));
  return out;
}

}  // namespace spinwalk
