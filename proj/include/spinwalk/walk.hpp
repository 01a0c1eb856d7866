#pragma once

// Zero-drift non-homogeneous random walks X_{m+1} = X_m + sigma(X_m^) xi_m
// with exact increment covariance sigma^2(x^), and the scaled functionals
// whose limits are checked: time-n marginal, exit from the ball of radius
// a sqrt(n), ergodic averages of the direction, and late-window returns.

#include "spinwalk/core.hpp"
#include "spinwalk/model.hpp"
#include "spinwalk/parallel.hpp"
#include "spinwalk/report.hpp"
#include "spinwalk/rng.hpp"

#include <algorithm>
#include <array>
#include <cmath>
#include <cstdint>
#include <functional>
#include <limits>
#include <string>
#include <string_view>
#include <vector>

namespace spinwalk {

enum class Noise { Gaussian, Rademacher };
enum class SquareRoot { Symmetric, Rotation };

inline std::string to_string(Noise n) { return n == Noise::Gaussian ? "gaussian" : "rademacher"; }
inline std::string to_string(SquareRoot s) { return s == SquareRoot::Symmetric ? "symmetric" : "rotation"; }

inline Noise parse_noise(const std::string& s) {
  if (s == "gaussian") return Noise::Gaussian;
  if (s == "rademacher") return Noise::Rademacher;
  throw Error("unknown noise '" + s + "' (expected gaussian or rademacher)");
}

inline SquareRoot parse_square_root(const std::string& s) {
  if (s == "symmetric") return SquareRoot::Symmetric;
  if (s == "rotation") return SquareRoot::Rotation;
  throw Error("unknown square root '" + s + "' (expected symmetric or rotation)");
}

struct WalkConfig {
  ModelSpec model;
  Noise noise = Noise::Gaussian;
  Vec x0;  // empty means the origin
  SquareRoot square_root = SquareRoot::Symmetric;
  // Robustness hook: increments are scaled by sqrt(1 + c (1 + |x|)^(-p)),
  // a covariance error of order |x|^(-p). Zero disables it.
  double perturbation = 0.0;
  double perturbation_decay = 1.0;

  Vec start() const { return x0.size() == 0 ? Vec(Vec::Zero(model.d)) : x0; }

  void validate() const {
    model.validate();
    require(x0.size() == 0 || x0.size() == model.d, "walk start point has the wrong dimension");
    require(square_root == SquareRoot::Symmetric || model.is_rotation(),
            "the rotation square root needs a rotation family");
    require(perturbation > -1.0 && perturbation_decay > 0.0, "invalid perturbation parameters");
  }
};

struct WalkPath {
  std::vector<Vec> positions;
  std::size_t size() const { return positions.size(); }
};

namespace detail {

/// out = R(u) v for the multiplication matrices of model.hpp.
inline void rotation_apply(int d, const double* u, const double* v, double* out) {
  if (d == 2) {
    out[0] = u[0] * v[0] - u[1] * v[1];
    out[1] = u[1] * v[0] + u[0] * v[1];
  } else {
    const double w = u[0], x = u[1], y = u[2], z = u[3];
    out[0] = w * v[0] - x * v[1] - y * v[2] - z * v[3];
    out[1] = x * v[0] + w * v[1] - z * v[2] + y * v[3];
    out[2] = y * v[0] + z * v[1] + w * v[2] - x * v[3];
    out[3] = z * v[0] - y * v[1] + x * v[2] + w * v[3];
  }
}

/// out = R(u)^T v.
inline void rotation_apply_transpose(int d, const double* u, const double* v, double* out) {
  if (d == 2) {
    out[0] = u[0] * v[0] + u[1] * v[1];
    out[1] = -u[1] * v[0] + u[0] * v[1];
  } else {
    const double w = u[0], x = u[1], y = u[2], z = u[3];
    out[0] = w * v[0] + x * v[1] + y * v[2] + z * v[3];
    out[1] = -x * v[0] + w * v[1] + z * v[2] - y * v[3];
    out[2] = -y * v[0] - z * v[1] + w * v[2] + x * v[3];
    out[3] = -z * v[0] + y * v[1] - x * v[2] + w * v[3];
  }
}

/// Allocation-free walk kernel on a raw state array.
class WalkKernel {
 public:
  explicit WalkKernel(const WalkConfig& cfg)
      : d_(cfg.model.d), rot_(cfg.model.is_rotation()), sym_(cfg.square_root == SquareRoot::Symmetric),
        gauss_(cfg.noise == Noise::Gaussian), su_(std::sqrt(cfg.model.U)), pert_(cfg.perturbation),
        pdecay_(cfg.perturbation_decay) {
    cfg.validate();
    for (int i = 0; i < d_; ++i) a_[i] = rot_ ? cfg.model.A(i) : 1.0;
  }

  int dim() const { return d_; }

  /// x <- x + sigma(x^) xi; returns |x|^2 after the step.
  double step(double* x, Rng& rng) const {
    double xi[kMaxDim], u[kMaxDim]{}, tmp[kMaxDim]{}, inc[kMaxDim]{};
    for (int i = 0; i < d_; ++i) xi[i] = gauss_ ? rng.normal() : ((rng() >> 63) ? 1.0 : -1.0);
    double r2 = 0.0;
    for (int i = 0; i < d_; ++i) r2 += x[i] * x[i];
    const double r = std::sqrt(r2);
    double scale = su_;
    if (pert_ != 0.0) scale *= std::sqrt(1.0 + pert_ * std::pow(1.0 + r, -pdecay_));
    if (!rot_) {
      for (int i = 0; i < d_; ++i) x[i] += scale * xi[i];
    } else {
      if (r > 0.0) {
        for (int i = 0; i < d_; ++i) u[i] = x[i] / r;
      } else {
        for (int i = 0; i < d_; ++i) u[i] = 0.0;
        u[0] = 1.0;
      }
      if (sym_) {
        rotation_apply_transpose(d_, u, xi, tmp);
        for (int i = 0; i < d_; ++i) tmp[i] *= a_[i];
      } else {
        for (int i = 0; i < d_; ++i) tmp[i] = a_[i] * xi[i];
      }
      rotation_apply(d_, u, tmp, inc);
      for (int i = 0; i < d_; ++i) x[i] += scale * inc[i];
    }
    double out = 0.0;
    for (int i = 0; i < d_; ++i) out += x[i] * x[i];
    return out;
  }

 private:
  int d_;
  bool rot_, sym_, gauss_;
  double su_, pert_, pdecay_;
  double a_[kMaxDim]{};
};

inline void load(const Vec& v, double* x) {
  for (Eigen::Index i = 0; i < v.size(); ++i) x[i] = v(i);
}

inline Vec store(const double* x, int d) {
  Vec v(d);
  for (int i = 0; i < d; ++i) v(i) = x[i];
  return v;
}

}  // namespace detail

inline Vec walk_step(const WalkConfig& cfg, const Vec& x, Rng& rng) {
  const detail::WalkKernel k(cfg);
  double s[kMaxDim];
  detail::load(x, s);
  k.step(s, rng);
  return detail::store(s, k.dim());
}

inline WalkPath simulate_walk(const WalkConfig& cfg, std::size_t n_steps, Rng& rng) {
  const detail::WalkKernel k(cfg);
  double s[kMaxDim];
  const Vec x0 = cfg.start();
  detail::load(x0, s);
  WalkPath p;
  p.positions.reserve(n_steps + 1);
  p.positions.push_back(x0);
  for (std::size_t m = 0; m < n_steps; ++m) {
    k.step(s, rng);
    p.positions.push_back(detail::store(s, k.dim()));
  }
  return p;
}

/// X~_n(t) = n^{-1/2} X_{floor(n t)} at the grid times.
inline VectorPath scaled_path(const WalkPath& path, std::size_t n, const TimeGrid& grid) {
  require(n > 0, "scaled_path: n must be positive");
  require(!path.positions.empty(), "scaled_path: empty walk");
  const double need = std::floor(static_cast<double>(n) * grid.horizon() + 1e-9);
  require(need <= static_cast<double>(path.size() - 1), "scaled_path: walk too short for the requested horizon");
  VectorPath out;
  const double inv = 1.0 / std::sqrt(static_cast<double>(n));
  for (double t : grid.t) {
    const auto m = static_cast<std::size_t>(std::floor(static_cast<double>(n) * t + 1e-9));
    out.times.push_back(t);
    out.values.push_back(path.positions[m] * inv);
  }
  return out;
}

/// Independent samples in R^d with the metadata needed to reproduce them.
struct EmpiricalLaw {
  std::vector<Vec> samples;
  std::uint64_t seed = 0;
  std::string tag;
  std::size_t replicas = 0;
};

/// X_n for each replica k, drawn from stream (seed, tag, k).
inline std::vector<Vec> final_positions(const WalkConfig& cfg, std::size_t n, std::size_t replicas,
                                        std::uint64_t seed, std::string_view tag, int threads = 1) {
  const detail::WalkKernel kernel(cfg);
  std::vector<Vec> out(replicas);
  const Vec x0 = cfg.start();
  parallel_for(replicas, threads, [&](std::size_t k) {
    Rng rng(seed, tag, k);
    double s[kMaxDim];
    detail::load(x0, s);
    for (std::size_t m = 0; m < n; ++m) kernel.step(s, rng);
    out[k] = detail::store(s, kernel.dim());
  });
  return out;
}

/// Replica k of X_n / sqrt(n) uses stream (seed, "marginal", k).
inline EmpiricalLaw marginal_samples(const WalkConfig& cfg, std::size_t n, std::size_t replicas, std::uint64_t seed,
                                     int threads = 1) {
  EmpiricalLaw law{final_positions(cfg, n, replicas, seed, "marginal", threads), seed, "marginal", replicas};
  const double inv = 1.0 / std::sqrt(static_cast<double>(n));
  for (auto& x : law.samples) x *= inv;
  return law;
}

struct ExitLaw {
  std::vector<double> times;       // tau_a^n / n
  std::vector<Vec> directions;     // X^ at exit
  std::vector<std::uint8_t> censored;

  std::size_t size() const { return times.size(); }
  std::size_t n_censored() const {
    std::size_t c = 0;
    for (auto v : censored) c += v;
    return c;
  }
};

/// Per replica (stream (seed, "exit-law", k)): first m with |X_m| >= a sqrt(n),
/// capped at max_time * n steps (censored records carry the cap time).
inline ExitLaw exit_stats(const WalkConfig& cfg, std::size_t n, double a, std::size_t replicas, std::uint64_t seed,
                          int threads = 1, double max_time = 50.0) {
  require(a > 0.0, "exit_stats: a must be positive");
  const detail::WalkKernel kernel(cfg);
  ExitLaw out;
  out.times.resize(replicas);
  out.directions.resize(replicas);
  out.censored.resize(replicas);
  const double level2 = a * a * static_cast<double>(n);
  const auto cap = static_cast<std::size_t>(max_time * static_cast<double>(n));
  const Vec x0 = cfg.start();
  parallel_for(replicas, threads, [&](std::size_t k) {
    Rng rng(seed, "exit-law", k);
    double s[kMaxDim];
    detail::load(x0, s);
    std::size_t m = 0;
    double r2 = x0.squaredNorm();
    while (r2 < level2 && m < cap) {
      r2 = kernel.step(s, rng);
      ++m;
    }
    out.times[k] = static_cast<double>(m) / static_cast<double>(n);
    out.directions[k] = direction(detail::store(s, kernel.dim()));
    out.censored[k] = r2 < level2 ? 1 : 0;
  });
  return out;
}

/// (1/N) sum f(X^_k) over the positions after the start.
inline double ergodic_average(const WalkPath& path, const std::function<double(const Vec&)>& f) {
  require(path.size() >= 2, "ergodic_average: walk has no steps");
  double s = 0.0;
  for (std::size_t k = 1; k < path.size(); ++k) s += f(direction(path.positions[k]));
  return s / static_cast<double>(path.size() - 1);
}

/// Ergodic average along a walk generated on the fly (no path storage);
/// stream (seed, "ergodic", k).
inline std::vector<double> ergodic_averages(const WalkConfig& cfg, std::size_t n, std::size_t replicas,
                                            const std::function<double(const Vec&)>& f, std::uint64_t seed,
                                            int threads = 1) {
  const detail::WalkKernel kernel(cfg);
  std::vector<double> out(replicas);
  const Vec x0 = cfg.start();
  parallel_for(replicas, threads, [&](std::size_t k) {
    Rng rng(seed, "ergodic", k);
    double s[kMaxDim];
    detail::load(x0, s);
    double acc = 0.0;
    for (std::size_t m = 0; m < n; ++m) {
      kernel.step(s, rng);
      acc += f(direction(detail::store(s, kernel.dim())));
    }
    out[k] = acc / static_cast<double>(n);
  });
  return out;
}

struct ReturnStatistics {
  std::vector<double> late_fraction;  // fraction of m in [n/2, n] with |X_m| < eps sqrt(n)
  std::vector<double> late_minimum;   // min over m in [n/2, n] of |X_m| / sqrt(n)
  double median_fraction = 0.0;
  double median_minimum = 0.0;
};

inline double median(std::vector<double> v) {
  require(!v.empty(), "median of empty sample");
  const std::size_t mid = v.size() / 2;
  std::nth_element(v.begin(), v.begin() + static_cast<std::ptrdiff_t>(mid), v.end());
  const double hi = v[mid];
  if (v.size() % 2) return hi;
  return 0.5 * (hi + *std::max_element(v.begin(), v.begin() + static_cast<std::ptrdiff_t>(mid)));
}

/// Stream (seed, "returns", k).
inline ReturnStatistics return_statistics(const WalkConfig& cfg, std::size_t n, double eps, std::size_t replicas,
                                          std::uint64_t seed, int threads = 1) {
  require(eps > 0.0 && n >= 2, "return_statistics: need eps > 0 and n >= 2");
  const detail::WalkKernel kernel(cfg);
  ReturnStatistics out;
  out.late_fraction.resize(replicas);
  out.late_minimum.resize(replicas);
  const double sn = std::sqrt(static_cast<double>(n));
  const double eps2 = eps * eps * static_cast<double>(n);
  const Vec x0 = cfg.start();
  parallel_for(replicas, threads, [&](std::size_t k) {
    Rng rng(seed, "returns", k);
    double s[kMaxDim];
    detail::load(x0, s);
    double r2 = x0.squaredNorm(), min2 = std::numeric_limits<double>::infinity();
    std::size_t inside = 0, window = 0;
    for (std::size_t m = 0; m <= n; ++m) {
      if (m > 0) r2 = kernel.step(s, rng);
      if (2 * m >= n) {
        ++window;
        min2 = std::min(min2, r2);
        if (r2 < eps2) ++inside;
      }
    }
    out.late_fraction[k] = static_cast<double>(inside) / static_cast<double>(window);
    out.late_minimum[k] = std::sqrt(min2) / sn;
  });
  out.median_fraction = median(out.late_fraction);
  out.median_minimum = median(out.late_minimum);
  return out;
}

/// Recurrent models (delta < 2) pass when the median late minimum is below
/// `recurrent_below`; transient ones (delta > 2) when it exceeds
/// `transient_above`. At delta = 2 the report is a diagnostic that always
/// passes and has a NaN threshold.
inline TestReport recurrence_report(const ModelSpec& m, const ReturnStatistics& st, double recurrent_below = 0.05,
                                    double transient_above = 0.2) {
  const double delta = m.delta();
  const std::size_t n = st.late_minimum.size();
  const char* src = "recurrence iff V/U < 2";
  if (std::abs(delta - 2.0) < 1e-12)
    return {"late-window minimum (boundary case, diagnostic)", st.median_minimum,
            std::numeric_limits<double>::quiet_NaN(), std::nullopt, true, n, src};
  if (delta < 2.0) return at_most("median late-window minimum (recurrent)", st.median_minimum, recurrent_below, n, src);
  return at_least("median late-window minimum (transient)", st.median_minimum, transient_above, n, src);
}

}  // namespace spinwalk
