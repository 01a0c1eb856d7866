#pragma once

// Shared value types: small fixed-capacity vectors and matrices, time grids
// and the generic path container used across every module.

#include <Eigen/Dense>

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <stdexcept>
#include <string>
#include <vector>

namespace spinwalk {

/// Largest ambient dimension supported by the stack-allocated linear algebra.
inline constexpr int kMaxDim = 8;

using Vec = Eigen::Matrix<double, Eigen::Dynamic, 1, 0, kMaxDim, 1>;
using Mat = Eigen::Matrix<double, Eigen::Dynamic, Eigen::Dynamic, 0, kMaxDim, kMaxDim>;

class Error : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

inline void require(bool ok, const std::string& what) {
  if (!ok) throw Error(what);
}

inline Vec basis(int d, int i) {
  Vec e = Vec::Zero(d);
  e(i) = 1.0;
  return e;
}

/// Radial projection x/|x|, with the origin sent to e_1.
inline Vec direction(const Vec& x) {
  const double n = x.norm();
  if (n == 0.0) return basis(static_cast<int>(x.size()), 0);
  return x / n;
}

inline void require_unit(const Vec& u, double tol = 1e-9) {
  require(std::abs(u.norm() - 1.0) <= tol, "expected a unit vector, got norm " + std::to_string(u.norm()));
}

/// Strictly increasing time points starting at t[0].
struct TimeGrid {
  std::vector<double> t;

  static TimeGrid uniform(double horizon, std::size_t steps) {
    require(horizon > 0.0 && steps > 0, "uniform grid needs a positive horizon and step count");
    TimeGrid g;
    g.t.resize(steps + 1);
    for (std::size_t k = 0; k <= steps; ++k) g.t[k] = horizon * static_cast<double>(k) / static_cast<double>(steps);
    return g;
  }

  /// 0, then `per_decade` log-spaced points per decade from `first` up to
  /// `switch_at`, then uniform spacing `step` up to `horizon`. Every point in
  /// `must_include` is inserted exactly.
  static TimeGrid geometric(double first, double switch_at, double step, double horizon,
                            int per_decade = 8, const std::vector<double>& must_include = {}) {
    require(first > 0.0 && first < switch_at && switch_at < horizon && step > 0.0, "invalid geometric grid");
    std::vector<double> pts{0.0};
    const double ratio = std::pow(10.0, 1.0 / per_decade);
    for (double t = first; t < switch_at; t *= ratio) pts.push_back(t);
    for (double t = switch_at; t < horizon; t += step) pts.push_back(t);
    pts.push_back(horizon);
    pts.insert(pts.end(), must_include.begin(), must_include.end());
    std::sort(pts.begin(), pts.end());
    TimeGrid g;
    for (double t : pts) {
      if (g.t.empty() || t - g.t.back() > 1e-15 * std::max(1.0, t)) g.t.push_back(t);
      else g.t.back() = t;  // snap near-duplicates onto the requested value
    }
    return g;
  }

  std::size_t size() const { return t.size(); }
  double horizon() const { return t.back(); }

  void validate() const {
    require(t.size() >= 2, "time grid needs at least two points");
    for (std::size_t k = 1; k < t.size(); ++k) require(t[k] > t[k - 1], "time grid must be strictly increasing");
  }

  /// Index of the knot equal to `s` (relative tolerance 1e-12); throws otherwise.
  std::size_t knot_index(double s) const {
    auto it = std::lower_bound(t.begin(), t.end(), s - 1e-12 * std::max(1.0, std::abs(s)));
    require(it != t.end() && std::abs(*it - s) <= 1e-12 * std::max(1.0, std::abs(s)),
            "time " + std::to_string(s) + " is not a grid knot");
    return static_cast<std::size_t>(it - t.begin());
  }
};

/// Time-indexed values in R^d (also used for unit-vector and scalar paths).
struct VectorPath {
  std::vector<double> times;
  std::vector<Vec> values;

  std::size_t size() const { return times.size(); }
};

}  // namespace spinwalk
