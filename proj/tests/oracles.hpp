#pragma once

// Test-only oracles, independent of the implementation paths they check:
// finite differences, brute-force nearest neighbors, and the tangent-plane
// eigenvalue route to Gaussian curvature.

#include <Eigen/Dense>

#include <limits>
#include <span>
#include <vector>

#include "curvrec/geometry.hpp"
#include "curvrec/kdtree.hpp"

namespace curvrec::testing {

template <typename F>
Vec3 fd_gradient(const F& f, const Vec3& x, double h) {
  Vec3 g;
  for (int i = 0; i < 3; ++i) {
    Vec3 hi = x, lo = x;
    hi[i] += h;
    lo[i] -= h;
    g[i] = (f(hi) - f(lo)) / (2.0 * h);
  }
  return g;
}

template <typename F>
double fd_derivative(const F& f, double t, double h) {
  return (f(t + h) - f(t - h)) / (2.0 * h);
}

/// Central finite difference of a vector-valued function, column i = d(f)/dx_i.
template <typename F>
Mat3 fd_jacobian(const F& f, const Vec3& x, double h) {
  Mat3 j;
  for (int i = 0; i < 3; ++i) {
    Vec3 hi = x, lo = x;
    hi[i] += h;
    lo[i] -= h;
    j.col(i) = (f(hi) - f(lo)) / (2.0 * h);
  }
  return j;
}

inline double rel_error(double approx, double exact) {
  return std::abs(approx - exact) / std::max(1.0, std::abs(exact));
}

inline double rel_error(const Vec3& approx, const Vec3& exact) {
  return (approx - exact).norm() / std::max(1.0, exact.norm());
}

inline double rel_error(const Mat3& approx, const Mat3& exact) {
  return (approx - exact).norm() / std::max(1.0, exact.norm());
}

/// Gaussian curvature via the tangent-plane route: project the hessian onto
/// an orthonormal tangent basis of the gradient and take the product of the
/// two tangent eigenvalues over ||g||^2.
inline double tangent_plane_curvature(const Jet2& jet) {
  const Vec3 n = jet.gradient.normalized();
  Vec3 ref = std::abs(n[0]) < 0.9 ? Vec3(1, 0, 0) : Vec3(0, 1, 0);
  const Vec3 t1 = n.cross(ref).normalized();
  const Vec3 t2 = n.cross(t1).normalized();
  Eigen::Matrix2d shape;
  shape << t1.dot(jet.hessian * t1), t1.dot(jet.hessian * t2),  //
      t2.dot(jet.hessian * t1), t2.dot(jet.hessian * t2);
  const Eigen::SelfAdjointEigenSolver<Eigen::Matrix2d> eig(shape);
  return eig.eigenvalues()[0] * eig.eigenvalues()[1] / jet.gradient.squaredNorm();
}

inline int brute_nearest(const Vec3& q, std::span<const Vec3> pts, Metric metric,
                         double* dist_out = nullptr, int exclude = -1) {
  int best = -1;
  double best_d = std::numeric_limits<double>::infinity();
  for (std::size_t i = 0; i < pts.size(); ++i) {
    if (static_cast<int>(i) == exclude) continue;
    const double d = point_distance(q, pts[i], metric);
    if (d < best_d) {
      best_d = d;
      best = static_cast<int>(i);
    }
  }
  if (dist_out) *dist_out = best_d;
  return best;
}

inline double brute_kth_distance(const Vec3& q, std::span<const Vec3> pts, int k,
                                 int exclude = -1) {
  std::vector<double> dists;
  for (std::size_t i = 0; i < pts.size(); ++i) {
    if (static_cast<int>(i) == exclude) continue;
    dists.push_back((q - pts[i]).norm());
  }
  std::sort(dists.begin(), dists.end());
  return dists.at(k - 1);
}

}  // namespace curvrec::testing
