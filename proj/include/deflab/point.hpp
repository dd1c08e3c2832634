#pragma once

#include <array>
#include <cmath>
#include <initializer_list>
#include <span>

#include "deflab/error.hpp"

namespace deflab {

inline constexpr int kMaxDim = 3;

/// A point (or vector) of R^n with n <= 3, stored inline.
class Point {
 public:
  Point() = default;
  explicit Point(int dim) : dim_(check_dim(dim)) {}
  Point(std::initializer_list<double> coords) : dim_(check_dim(static_cast<int>(coords.size()))) {
    int i = 0;
    for (double c : coords) x_[i++] = c;
  }

  static Point from_span(std::span<const double> coords) {
    Point p(static_cast<int>(coords.size()));
    for (int i = 0; i < p.dim_; ++i) p.x_[i] = coords[i];
    return p;
  }

  int dim() const noexcept { return dim_; }
  double& operator[](int i) noexcept { return x_[i]; }
  double operator[](int i) const noexcept { return x_[i]; }
  std::span<const double> coords() const noexcept { return {x_.data(), static_cast<size_t>(dim_)}; }

  Point& operator+=(const Point& o) noexcept {
    for (int i = 0; i < dim_; ++i) x_[i] += o.x_[i];
    return *this;
  }
  Point& operator-=(const Point& o) noexcept {
    for (int i = 0; i < dim_; ++i) x_[i] -= o.x_[i];
    return *this;
  }
  Point& operator*=(double s) noexcept {
    for (int i = 0; i < dim_; ++i) x_[i] *= s;
    return *this;
  }

  friend Point operator+(Point a, const Point& b) noexcept { return a += b; }
  friend Point operator-(Point a, const Point& b) noexcept { return a -= b; }
  friend Point operator*(Point a, double s) noexcept { return a *= s; }
  friend Point operator*(double s, Point a) noexcept { return a *= s; }

  // Coordinate-wise ==, so -0.0 == 0.0. Use bit_equal for identity checks.
  friend bool operator==(const Point& a, const Point& b) noexcept {
    if (a.dim_ != b.dim_) return false;
    for (int i = 0; i < a.dim_; ++i)
      if (a.x_[i] != b.x_[i]) return false;
    return true;
  }

 private:
  static int check_dim(int dim) {
    if (dim < 1 || dim > kMaxDim) throw Error(ErrorCode::InvalidPoint, "dimension must be in 1..3");
    return dim;
  }

  std::array<double, kMaxDim> x_{};
  int dim_ = 0;
};

inline double dot(const Point& a, const Point& b) noexcept {
  double s = 0.0;
  for (int i = 0; i < a.dim(); ++i) s += a[i] * b[i];
  return s;
}

inline double norm(const Point& a) noexcept { return std::sqrt(dot(a, a)); }

inline double distance(const Point& a, const Point& b) noexcept { return norm(a - b); }

bool bit_equal(const Point& a, const Point& b) noexcept;

}  // namespace deflab
