#pragma once

// Covariance fields sigma^2 on the unit sphere, their square roots, and
// executable checks of the structural assumptions (radial eigenvalue U,
// constant trace V, radial eigenvector, positive definiteness).
//
// Built-in families:
//   Isotropic   sigma^2(u) = U I                         (any d >= 2)
//   Rotation2d  sigma^2(u) = U R(u) A^2 R(u)^T,  A = diag(1, b)
//   Rotation4d  sigma^2(u) = U R(u) A^2 R(u)^T,  A = diag(1, a2, a3, a4)
// where R(u) is complex (d = 2) or left-quaternion (d = 4) multiplication.

#include "spinwalk/core.hpp"
#include "spinwalk/report.hpp"
#include "spinwalk/rng.hpp"

#include <Eigen/Eigenvalues>

#include <functional>
#include <limits>
#include <string>
#include <vector>

namespace spinwalk {

enum class Family { Isotropic, Rotation2d, Rotation4d };

inline std::string to_string(Family f) {
  switch (f) {
    case Family::Isotropic: return "isotropic";
    case Family::Rotation2d: return "rotation2d";
    case Family::Rotation4d: return "rotation4d";
  }
  return "?";
}

inline Family parse_family(const std::string& s) {
  if (s == "isotropic") return Family::Isotropic;
  if (s == "rotation2d") return Family::Rotation2d;
  if (s == "rotation4d") return Family::Rotation4d;
  throw Error("unknown model family '" + s + "' (expected isotropic, rotation2d or rotation4d)");
}

struct ModelSpec {
  int d = 2;
  Family family = Family::Isotropic;
  double U = 1.0;
  Vec A;  // diagonal of A; rotation families only

  static ModelSpec isotropic(int d, double U = 1.0) {
    ModelSpec m;
    m.d = d;
    m.family = Family::Isotropic;
    m.U = U;
    m.validate();
    return m;
  }

  static ModelSpec rotation2d(double b, double U = 1.0) {
    ModelSpec m;
    m.d = 2;
    m.family = Family::Rotation2d;
    m.U = U;
    m.A = Vec(2);
    m.A << 1.0, b;
    m.validate();
    return m;
  }

  static ModelSpec rotation4d(double a, double U = 1.0) { return rotation4d(a, a, a, U); }

  static ModelSpec rotation4d(double a2, double a3, double a4, double U = 1.0) {
    ModelSpec m;
    m.d = 4;
    m.family = Family::Rotation4d;
    m.U = U;
    m.A = Vec(4);
    m.A << 1.0, a2, a3, a4;
    m.validate();
    return m;
  }

  bool is_rotation() const { return family != Family::Isotropic; }

  double V() const {
    if (family == Family::Isotropic) return U * d;
    return U * A.squaredNorm();
  }

  /// Bessel dimension of the radial part, V/U.
  double delta() const { return V() / U; }

  void validate() const {
    require(d >= 2 && d <= kMaxDim, "model dimension must lie in [2, " + std::to_string(kMaxDim) + "]");
    require(U > 0.0, "model U must be positive");
    if (family == Family::Rotation2d) require(d == 2, "rotation2d requires d = 2");
    if (family == Family::Rotation4d) require(d == 4, "rotation4d requires d = 4");
    if (is_rotation()) {
      require(A.size() == d, "rotation family needs d diagonal entries of A");
      for (int i = 0; i < d; ++i) require(A(i) > 0.0, "A must be positive definite");
      require(A(0) == 1.0, "rotation families require A e1 = e1");
    }
    require(U < V(), "assumption 0 < U < V violated");
  }

  std::string name() const {
    std::string s = to_string(family) + "(d=" + std::to_string(d);
    if (is_rotation()) {
      s += ", A=diag(";
      for (int i = 0; i < d; ++i) s += (i ? "," : "") + std::to_string(A(i));
      s += ")";
    }
    if (U != 1.0) s += ", U=" + std::to_string(U);
    return s + ")";
  }
};

/// Multiplication matrix of u: complex multiplication for d = 2, left
/// quaternion multiplication u * v for d = 4 (real part first).
inline Mat rotation_matrix(int d, const Vec& u) {
  require(static_cast<int>(u.size()) == d, "rotation_matrix: dimension mismatch");
  Mat R(d, d);
  if (d == 2) {
    R << u(0), -u(1),
         u(1), u(0);
  } else if (d == 4) {
    const double w = u(0), x = u(1), y = u(2), z = u(3);
    R << w, -x, -y, -z,
         x, w, -z, y,
         y, z, w, -x,
         z, -y, x, w;
  } else {
    throw Error("rotation_matrix is defined only for d in {2, 4}");
  }
  return R;
}

namespace detail {
inline void check_point(const ModelSpec& m, const Vec& u) {
  require(static_cast<int>(u.size()) == m.d, "dimension mismatch between model and point");
  require_unit(u);
}
}  // namespace detail

/// The non-symmetric root R(u) A scaled by sqrt(U); rotation families only.
inline Mat sigma_rot(const ModelSpec& m, const Vec& u) {
  require(m.is_rotation(), "sigma_rot requires a rotation family");
  detail::check_point(m, u);
  return std::sqrt(m.U) * rotation_matrix(m.d, u) * m.A.asDiagonal();
}

inline Mat sigma2(const ModelSpec& m, const Vec& u) {
  detail::check_point(m, u);
  if (!m.is_rotation()) return m.U * Mat::Identity(m.d, m.d);
  const Mat R = rotation_matrix(m.d, u);
  return m.U * R * m.A.cwiseAbs2().asDiagonal() * R.transpose();
}

/// Unique symmetric positive-definite square root by eigendecomposition.
inline Mat symmetric_sqrt(const Mat& s2) {
  require((s2 - s2.transpose()).cwiseAbs().maxCoeff() <= 1e-12 * std::max(1.0, s2.cwiseAbs().maxCoeff()),
          "symmetric_sqrt: matrix is not symmetric");
  Eigen::SelfAdjointEigenSolver<Mat> es(s2);
  require(es.info() == Eigen::Success, "symmetric_sqrt: eigendecomposition failed");
  require(es.eigenvalues().minCoeff() > 0.0, "symmetric_sqrt: matrix is not positive definite");
  return es.eigenvectors() * es.eigenvalues().cwiseSqrt().asDiagonal() * es.eigenvectors().transpose();
}

/// Symmetric root of sigma^2(u). For the built-in families this is the
/// closed form sqrt(U) R(u) A R(u)^T (conjugation commutes with the root),
/// which agrees with symmetric_sqrt(sigma2(m, u)).
inline Mat sigma_sym(const ModelSpec& m, const Vec& u) {
  detail::check_point(m, u);
  const double su = std::sqrt(m.U);
  if (!m.is_rotation()) return su * Mat::Identity(m.d, m.d);
  const Mat R = rotation_matrix(m.d, u);
  return su * R * m.A.asDiagonal() * R.transpose();
}

/// sigma_sym for an arbitrary nonzero y via the 0-homogeneous extension.
inline Mat sigma_sym_at(const ModelSpec& m, const Vec& y) {
  const Vec u = direction(y);
  const double su = std::sqrt(m.U);
  if (!m.is_rotation()) return su * Mat::Identity(m.d, m.d);
  const Mat R = rotation_matrix(m.d, u);
  return su * R * m.A.asDiagonal() * R.transpose();
}

struct Ellipticity {
  double epsilon = 0.0;  // lower bound on det sigma^2 over the sample
  double lambda = 0.0;   // (epsilon / V^(d-1))^(1/2): lower bound on eigenvalues of sigma_sym
};

inline Ellipticity ellipticity_bound(const ModelSpec& m, std::size_t n_samples, Rng& rng) {
  double min_det = std::numeric_limits<double>::infinity();
  for (std::size_t k = 0; k < n_samples; ++k) min_det = std::min(min_det, sigma2(m, rng.unit_vector(m.d)).determinant());
  Ellipticity e;
  e.epsilon = min_det * (1.0 - 1e-9);
  e.lambda = std::sqrt(e.epsilon / std::pow(m.V(), m.d - 1));
  return e;
}

using CovarianceField = std::function<Mat(const Vec&)>;

/// Checks U/V constancy, the radial eigenvector property, symmetry and
/// positive definiteness of an arbitrary field on `n_samples` quasi-uniform
/// sphere points. One report per check; failures do not throw.
inline std::vector<TestReport> validate_field(const CovarianceField& field, int d, double U, double V,
                                              std::size_t n_samples, double tol, Rng& rng) {
  require(n_samples >= 1, "validate: n_samples must be >= 1");
  double dev_u = 0.0, dev_v = 0.0, dev_evec = 0.0, dev_sym = 0.0;
  double min_eig = std::numeric_limits<double>::infinity();
  for (std::size_t k = 0; k < n_samples; ++k) {
    const Vec u = rng.unit_vector(d);
    const Mat s2 = field(u);
    const double radial = u.dot(s2 * u);
    dev_u = std::max(dev_u, std::abs(radial - U));
    dev_v = std::max(dev_v, std::abs(s2.trace() - V));
    dev_evec = std::max(dev_evec, (s2 * u - radial * u).norm());
    dev_sym = std::max(dev_sym, (s2 - s2.transpose()).cwiseAbs().maxCoeff());
    Eigen::SelfAdjointEigenSolver<Mat> es(0.5 * (s2 + s2.transpose()), Eigen::EigenvaluesOnly);
    min_eig = std::min(min_eig, es.eigenvalues().minCoeff());
  }
  const char* src = "structural assumptions on sigma^2";
  std::vector<TestReport> out;
  out.push_back(at_most("radial eigenvalue <u, sigma2 u> = U", dev_u, tol, n_samples, src));
  out.push_back(at_most("trace sigma2 = V", dev_v, tol, n_samples, src));
  out.push_back(at_most("u is an eigenvector of sigma2(u)", dev_evec, tol, n_samples, src));
  out.push_back(at_most("sigma2 symmetric", dev_sym, tol, n_samples, src));
  TestReport spd{"sigma2 positive definite", min_eig, 0.0, std::nullopt, min_eig > 0.0, n_samples, src};
  out.push_back(spd);
  return out;
}

inline std::vector<TestReport> validate_assumptions(const ModelSpec& m, std::size_t n_samples, double tol, Rng& rng) {
  return validate_field([&](const Vec& u) { return sigma2(m, u); }, m.d, m.U, m.V(), n_samples, tol, rng);
}

}  // namespace spinwalk
