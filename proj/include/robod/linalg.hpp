/**
 * @file linalg.hpp
 * @brief Small dense helpers: 3-vectors over any scalar, symmetric
 *        eigendecomposition by cyclic Jacobi rotations.
 */
#pragma once

#include <Eigen/Dense>

#include <algorithm>
#include <array>
#include <cmath>
#include <stdexcept>
#include <type_traits>

namespace robod {

using Mat6 = Eigen::Matrix<double, 6, 6>;
using Vec6 = Eigen::Matrix<double, 6, 1>;
using Mat3 = Eigen::Matrix3d;
using Vec3d = Eigen::Vector3d;

template <class T>
using Vec3 = std::array<T, 3>;

template <class T>
using State6 = std::array<T, 6>;

template <class T>
Vec3<T> add(const Vec3<T>& a, const Vec3<T>& b) {
  return {a[0] + b[0], a[1] + b[1], a[2] + b[2]};
}
template <class T>
Vec3<T> sub(const Vec3<T>& a, const Vec3<T>& b) {
  return {a[0] - b[0], a[1] - b[1], a[2] - b[2]};
}
template <class T, class S>
Vec3<T> scale(const Vec3<T>& a, const S& s) {
  return {a[0] * s, a[1] * s, a[2] * s};
}
template <class T>
T dot(const Vec3<T>& a, const Vec3<T>& b) {
  return a[0] * b[0] + a[1] * b[1] + a[2] * b[2];
}
template <class T>
Vec3<T> cross(const Vec3<T>& a, const Vec3<T>& b) {
  return {a[1] * b[2] - a[2] * b[1], a[2] * b[0] - a[0] * b[2], a[0] * b[1] - a[1] * b[0]};
}
template <class T>
T norm(const Vec3<T>& a) {
  using std::sqrt;
  return sqrt(dot(a, a));
}

/// Mixed-type helpers for a polynomial vector against a real vector.
template <class T>
Vec3<T> add(const Vec3<T>& a, const Vec3<double>& b) requires(!std::is_same_v<T, double>) {
  return {a[0] + b[0], a[1] + b[1], a[2] + b[2]};
}
template <class T>
Vec3<T> sub(const Vec3<T>& a, const Vec3<double>& b) requires(!std::is_same_v<T, double>) {
  return {a[0] - b[0], a[1] - b[1], a[2] - b[2]};
}

template <class T>
Vec3<T> position(const State6<T>& x) {
  return {x[0], x[1], x[2]};
}
template <class T>
Vec3<T> velocity(const State6<T>& x) {
  return {x[3], x[4], x[5]};
}
template <class T>
State6<T> join(const Vec3<T>& r, const Vec3<T>& v) {
  return {r[0], r[1], r[2], v[0], v[1], v[2]};
}

struct SymEigen {
  Vec6 values;   // descending
  Mat6 vectors;  // columns
};

/// Cyclic Jacobi eigendecomposition of a symmetric 6x6 matrix. Eigenvalues
/// below 1e-14 * trace (including small negatives) are clamped to zero.
inline SymEigen jacobi_eigen(const Mat6& input, int max_sweeps = 100) {
  Mat6 a = 0.5 * (input + input.transpose());
  if (!a.allFinite()) throw std::runtime_error("jacobi_eigen: non-finite matrix");
  Mat6 v = Mat6::Identity();
  for (int sweep = 0; sweep < max_sweeps; ++sweep) {
    double off = 0.0;
    for (int p = 0; p < 6; ++p) {
      for (int q = p + 1; q < 6; ++q) off += a(p, q) * a(p, q);
    }
    if (off <= 1e-30 * (a.diagonal().squaredNorm() + 1e-300)) break;
    for (int p = 0; p < 6; ++p) {
      for (int q = p + 1; q < 6; ++q) {
        if (a(p, q) == 0.0) continue;
        const double theta = (a(q, q) - a(p, p)) / (2.0 * a(p, q));
        const double t = (theta >= 0 ? 1.0 : -1.0) / (std::abs(theta) + std::sqrt(theta * theta + 1.0));
        const double c = 1.0 / std::sqrt(t * t + 1.0);
        const double s = t * c;
        for (int k = 0; k < 6; ++k) {
          const double akp = a(k, p), akq = a(k, q);
          a(k, p) = c * akp - s * akq;
          a(k, q) = s * akp + c * akq;
        }
        for (int k = 0; k < 6; ++k) {
          const double apk = a(p, k), aqk = a(q, k);
          a(p, k) = c * apk - s * aqk;
          a(q, k) = s * apk + c * aqk;
        }
        for (int k = 0; k < 6; ++k) {
          const double vkp = v(k, p), vkq = v(k, q);
          v(k, p) = c * vkp - s * vkq;
          v(k, q) = s * vkp + c * vkq;
        }
      }
    }
    if (sweep == max_sweeps - 1) throw std::runtime_error("jacobi_eigen: no convergence");
  }
  SymEigen out;
  std::array<int, 6> idx{0, 1, 2, 3, 4, 5};
  std::sort(idx.begin(), idx.end(), [&](int i, int j) { return a(i, i) > a(j, j); });
  const double tr = std::abs(input.trace());
  for (int k = 0; k < 6; ++k) {
    double lam = a(idx[static_cast<std::size_t>(k)], idx[static_cast<std::size_t>(k)]);
    if (lam < 1e-14 * tr) lam = 0.0;
    out.values(k) = lam;
    out.vectors.col(k) = v.col(idx[static_cast<std::size_t>(k)]);
  }
  return out;
}

}  // namespace robod
