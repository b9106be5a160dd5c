#pragma once

#include <cassert>
#include <cmath>
#include <cstddef>
#include <span>
#include <vector>

namespace mkdv {

/// Truncated bivariate Taylor series in the displacements (a, b) around a
/// base point, keeping every coefficient c_{ij} with i + j <= degree.
///
/// The breather is a function of the two phases y1 and y2 only, so a series
/// in (a, b) = (dy1, dy2) carries x-derivatives (direction (1, 1)), time
/// derivatives (direction (delta, gamma)) and the translation derivatives
/// d/dx1, d/dx2 (the coordinate axes) from a single evaluation.
class Series2 {
 public:
  Series2() = default;
  explicit Series2(int degree) : degree_(degree), c_(size_for(degree), 0.0) {}

  static Series2 constant(int degree, double v) {
    Series2 s(degree);
    s.c_[0] = v;
    return s;
  }

  /// Series depending on `a` only, from the Taylor coefficients `ca`.
  static Series2 in_a(int degree, std::span<const double> ca) {
    Series2 s(degree);
    for (int i = 0; i <= degree && i < static_cast<int>(ca.size()); ++i) s(i, 0) = ca[i];
    return s;
  }

  static Series2 in_b(int degree, std::span<const double> cb) {
    Series2 s(degree);
    for (int j = 0; j <= degree && j < static_cast<int>(cb.size()); ++j) s(0, j) = cb[j];
    return s;
  }

  int degree() const { return degree_; }

  double& operator()(int i, int j) { return c_[index(i, j)]; }
  double operator()(int i, int j) const { return c_[index(i, j)]; }

  double value() const { return c_[0]; }

  /// k-th derivative along the direction (da, db) at the base point.
  double directional(int k, double da, double db) const {
    assert(k <= degree_);
    double acc = 0.0;
    for (int i = 0; i <= k; ++i) {
      acc += (*this)(i, k - i) * std::pow(da, i) * std::pow(db, k - i);
    }
    return acc * factorial(k);
  }

  /// k-th derivative along (1, 1), i.e. d^k/dx^k.
  double dx(int k) const {
    assert(k <= degree_);
    double acc = 0.0;
    for (int i = 0; i <= k; ++i) acc += (*this)(i, k - i);
    return acc * factorial(k);
  }

  /// Partial derivative in a; the result has degree one less.
  Series2 da() const {
    Series2 r(degree_ - 1);
    for (int i = 0; i < degree_; ++i)
      for (int j = 0; i + j < degree_; ++j) r(i, j) = (i + 1) * (*this)(i + 1, j);
    return r;
  }

  Series2 db() const {
    Series2 r(degree_ - 1);
    for (int i = 0; i < degree_; ++i)
      for (int j = 0; i + j < degree_; ++j) r(i, j) = (j + 1) * (*this)(i, j + 1);
    return r;
  }

  /// Derivative along (1, 1); the result has degree one less.
  Series2 ddx() const {
    Series2 ra = da();
    Series2 rb = db();
    ra += rb;
    return ra;
  }

  Series2 truncated(int degree) const {
    assert(degree <= degree_);
    Series2 r(degree);
    for (int i = 0; i <= degree; ++i)
      for (int j = 0; i + j <= degree; ++j) r(i, j) = (*this)(i, j);
    return r;
  }

  Series2& operator+=(const Series2& o) {
    assert(o.degree_ == degree_);
    for (std::size_t k = 0; k < c_.size(); ++k) c_[k] += o.c_[k];
    return *this;
  }
  Series2& operator-=(const Series2& o) {
    assert(o.degree_ == degree_);
    for (std::size_t k = 0; k < c_.size(); ++k) c_[k] -= o.c_[k];
    return *this;
  }
  Series2& operator*=(double s) {
    for (double& v : c_) v *= s;
    return *this;
  }

  friend Series2 operator+(Series2 l, const Series2& r) { return l += r; }
  friend Series2 operator-(Series2 l, const Series2& r) { return l -= r; }
  friend Series2 operator*(Series2 l, double s) { return l *= s; }
  friend Series2 operator*(double s, Series2 r) { return r *= s; }
  friend Series2 operator-(Series2 s) { return s *= -1.0; }

  friend Series2 operator*(const Series2& f, const Series2& g) {
    assert(f.degree_ == g.degree_);
    const int d = f.degree_;
    Series2 r(d);
    for (int p = 0; p <= d; ++p)
      for (int q = 0; p + q <= d; ++q) {
        const double fpq = f(p, q);
        if (fpq == 0.0) continue;
        for (int i = 0; p + i <= d; ++i)
          for (int j = 0; p + i + q + j <= d; ++j) r(p + i, q + j) += fpq * g(i, j);
      }
    return r;
  }

  /// f / g; requires g(0, 0) != 0.
  friend Series2 operator/(const Series2& f, const Series2& g) {
    assert(f.degree_ == g.degree_);
    assert(g(0, 0) != 0.0);
    const int d = f.degree_;
    Series2 h(d);
    const double inv = 1.0 / g(0, 0);
    // Componentwise-increasing order: every h(i-p, j-q) used is already known.
    for (int i = 0; i <= d; ++i)
      for (int j = 0; i + j <= d; ++j) {
        double acc = f(i, j);
        for (int p = 0; p <= i; ++p)
          for (int q = 0; q <= j; ++q) {
            if (p == 0 && q == 0) continue;
            acc -= g(p, q) * h(i - p, j - q);
          }
        h(i, j) = acc * inv;
      }
    return h;
  }

  static double factorial(int k) {
    double f = 1.0;
    for (int i = 2; i <= k; ++i) f *= i;
    return f;
  }

 private:
  static std::size_t size_for(int d) { return static_cast<std::size_t>((d + 1) * (d + 2) / 2); }

  // Row i holds j = 0..degree-i; rows are laid out consecutively.
  std::size_t index(int i, int j) const {
    assert(i >= 0 && j >= 0 && i + j <= degree_);
    const int row_start = i * (degree_ + 1) - i * (i - 1) / 2;
    return static_cast<std::size_t>(row_start + j);
  }

  int degree_ = 0;
  std::vector<double> c_{0.0};
};

/// Taylor coefficients of sin(w (y + s)) in s up to s^degree.
inline std::vector<double> sin_coefficients(double w, double y, int degree) {
  std::vector<double> c(degree + 1);
  const double s = std::sin(w * y), co = std::cos(w * y);
  // d^k/ds^k sin(w(y+s)) cycles through sin, cos, -sin, -cos.
  const double cycle[4] = {s, co, -s, -co};
  double wk = 1.0;
  for (int k = 0; k <= degree; ++k) {
    c[k] = cycle[k % 4] * wk / Series2::factorial(k);
    wk *= w;
  }
  return c;
}

inline std::vector<double> cos_coefficients(double w, double y, int degree) {
  std::vector<double> c(degree + 1);
  const double s = std::sin(w * y), co = std::cos(w * y);
  const double cycle[4] = {co, -s, -co, s};
  double wk = 1.0;
  for (int k = 0; k <= degree; ++k) {
    c[k] = cycle[k % 4] * wk / Series2::factorial(k);
    wk *= w;
  }
  return c;
}

inline std::vector<double> cosh_coefficients(double w, double y, int degree) {
  std::vector<double> c(degree + 1);
  const double ch = std::cosh(w * y), sh = std::sinh(w * y);
  double wk = 1.0;
  for (int k = 0; k <= degree; ++k) {
    c[k] = (k % 2 == 0 ? ch : sh) * wk / Series2::factorial(k);
    wk *= w;
  }
  return c;
}

inline std::vector<double> sinh_coefficients(double w, double y, int degree) {
  std::vector<double> c(degree + 1);
  const double ch = std::cosh(w * y), sh = std::sinh(w * y);
  double wk = 1.0;
  for (int k = 0; k <= degree; ++k) {
    c[k] = (k % 2 == 0 ? sh : ch) * wk / Series2::factorial(k);
    wk *= w;
  }
  return c;
}

}  // namespace mkdv
