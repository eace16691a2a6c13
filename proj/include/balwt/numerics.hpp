#pragma once

#include <Eigen/Dense>

#include <algorithm>
#include <cmath>
#include <functional>
#include <numeric>
#include <vector>

#include "balwt/types.hpp"

// Dense linear-algebra substrate. Free functions accept arbitrary Eigen
// expressions and are templated on the scalar through the expression type;
// every routine returns plain column-major dense results.

namespace balwt {

struct RankPolicy {
  // Singular values below relative_tolerance * s_max count as exact zeros.
  double relative_tolerance = 1e-12;
};

template <typename Scalar>
struct EigensystemT {
  Vec<Scalar> eigenvalues;  // sorted descending, clamped at zero
  Mat<Scalar> eigenvectors; // columns, orthonormal
};

using Eigensystem = EigensystemT<double>;

template <typename Derived>
bool all_finite(const Eigen::MatrixBase<Derived>& a) {
  return a.allFinite();
}

// Symmetric eigendecomposition of (A + A^T)/2 with eigenvalues sorted
// descending. Eigenvalues within rounding of zero are clamped to exactly 0 so
// Gram/covariance spectra stay nonnegative.
template <typename Derived>
EigensystemT<typename Derived::Scalar> eigh_symmetric(
    const Eigen::MatrixBase<Derived>& a) {
  using Scalar = typename Derived::Scalar;
  if (!all_finite(a)) throw InvalidInput("eigh_symmetric: non-finite entries");
  Mat<Scalar> sym = (a.derived() + a.derived().transpose()) / Scalar(2);
  Eigen::SelfAdjointEigenSolver<Mat<Scalar>> solver(sym);
  if (solver.info() != Eigen::Success)
    throw InvalidInput("eigh_symmetric: eigensolver failed");
  const Index d = sym.rows();
  EigensystemT<Scalar> out;
  out.eigenvalues.resize(d);
  out.eigenvectors.resize(d, d);
  // Eigen returns ascending order; reverse to descending.
  for (Index j = 0; j < d; ++j) {
    out.eigenvalues[j] = solver.eigenvalues()[d - 1 - j];
    out.eigenvectors.col(j) = solver.eigenvectors().col(d - 1 - j);
  }
  const Scalar top = d > 0 ? std::abs(out.eigenvalues[0]) : Scalar(0);
  for (Index j = 0; j < d; ++j)
    if (out.eigenvalues[j] < Scalar(0) &&
        out.eigenvalues[j] > Scalar(-1e-12) * top)
      out.eigenvalues[j] = Scalar(0);
  return out;
}

// Moore-Penrose pseudoinverse through the SVD with a relative rank cutoff.
template <typename Derived>
Mat<typename Derived::Scalar> pseudoinverse(const Eigen::MatrixBase<Derived>& a,
                                            RankPolicy policy = {}) {
  using Scalar = typename Derived::Scalar;
  if (!all_finite(a)) throw InvalidInput("pseudoinverse: non-finite entries");
  Eigen::BDCSVD<Mat<Scalar>> svd(a.derived(),
                                 Eigen::ComputeThinU | Eigen::ComputeThinV);
  const auto& s = svd.singularValues();
  const Scalar cutoff =
      s.size() > 0 ? Scalar(policy.relative_tolerance) * s[0] : Scalar(0);
  Vec<Scalar> inv = Vec<Scalar>::Zero(s.size());
  for (Index i = 0; i < s.size(); ++i)
    if (s[i] > cutoff) inv[i] = Scalar(1) / s[i];
  return svd.matrixV() * inv.asDiagonal() * svd.matrixU().transpose();
}

// argmin ||x||_2 over the minimizers of ||Ax - b||_2.
template <typename DerivedA, typename DerivedB>
Vec<typename DerivedA::Scalar> min_norm_solve(
    const Eigen::MatrixBase<DerivedA>& a, const Eigen::MatrixBase<DerivedB>& b,
    RankPolicy policy = {}) {
  using Scalar = typename DerivedA::Scalar;
  if (!all_finite(a) || !all_finite(b))
    throw InvalidInput("min_norm_solve: non-finite entries");
  Eigen::BDCSVD<Mat<Scalar>> svd(a.derived(),
                                 Eigen::ComputeThinU | Eigen::ComputeThinV);
  const auto& s = svd.singularValues();
  const Scalar cutoff =
      s.size() > 0 ? Scalar(policy.relative_tolerance) * s[0] : Scalar(0);
  Vec<Scalar> c = svd.matrixU().transpose() * b.derived();
  for (Index i = 0; i < s.size(); ++i)
    c[i] = s[i] > cutoff ? c[i] / s[i] : Scalar(0);
  return svd.matrixV() * c;
}

// T_t(x): shrink toward zero by t, exact zero inside (-t, t).
template <typename Scalar>
Scalar soft_threshold(Scalar x, Scalar t) {
  if (x > t) return x - t;
  if (x < -t) return x + t;
  return Scalar(0);
}

template <typename Derived>
Vec<typename Derived::Scalar> soft_threshold(
    const Eigen::MatrixBase<Derived>& x, typename Derived::Scalar t) {
  using Scalar = typename Derived::Scalar;
  Vec<Scalar> out(x.size());
  for (Index i = 0; i < x.size(); ++i) out[i] = soft_threshold(Scalar(x[i]), t);
  return out;
}

// Golden-section minimization of a unimodal-ish f on [lo, hi]; returns the
// abscissa. rel_tol is measured against the bracket midpoint.
inline double golden_section_min(const std::function<double(double)>& f,
                                 double lo, double hi, double rel_tol = 1e-6,
                                 int max_iter = 200) {
  const double phi = 0.5 * (std::sqrt(5.0) - 1.0);  // 0.618...
  double a = lo, b = hi;
  double x1 = b - phi * (b - a);
  double x2 = a + phi * (b - a);
  double f1 = f(x1), f2 = f(x2);
  for (int it = 0; it < max_iter; ++it) {
    if (b - a <= rel_tol * (std::abs(a) + std::abs(b)) / 2.0 + 1e-300) break;
    if (f1 <= f2) {
      b = x2;
      x2 = x1;
      f2 = f1;
      x1 = b - phi * (b - a);
      f1 = f(x1);
    } else {
      a = x1;
      x1 = x2;
      f1 = f2;
      x2 = a + phi * (b - a);
      f2 = f(x2);
    }
  }
  return f1 <= f2 ? x1 : x2;
}

// Log-spaced grid of `points` values on [lo, hi], lo > 0.
inline Vector log_grid(double lo, double hi, int points) {
  if (points == 1) return Vector::Constant(1, lo);
  return Vector::LinSpaced(points, std::log(lo), std::log(hi)).array().exp();
}

// Least-squares slope of y against x.
inline double ls_slope(const std::vector<double>& x,
                       const std::vector<double>& y) {
  const size_t n = x.size();
  double mx = 0, my = 0;
  for (size_t i = 0; i < n; ++i) {
    mx += x[i];
    my += y[i];
  }
  mx /= n;
  my /= n;
  double sxy = 0, sxx = 0;
  for (size_t i = 0; i < n; ++i) {
    sxy += (x[i] - mx) * (y[i] - my);
    sxx += (x[i] - mx) * (x[i] - mx);
  }
  return sxy / sxx;
}

}  // namespace balwt
