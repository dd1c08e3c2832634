#pragma once

#include <array>
#include <cstdint>
#include <functional>
#include <optional>
#include <random>
#include <string>
#include <variant>
#include <vector>

#include "deflab/point.hpp"

namespace deflab {

/// Axis-aligned box in R^n standing in for the ambient space.
class DomainBox {
 public:
  DomainBox() = default;
  DomainBox(Point lo, Point hi);

  static DomainBox cube(int dim, double lo, double hi);

  int dim() const noexcept { return lo_.dim(); }
  const Point& lo() const noexcept { return lo_; }
  const Point& hi() const noexcept { return hi_; }

  bool contains(const Point& u) const noexcept;
  bool on_boundary(const Point& u) const noexcept;
  Point clamp(const Point& u) const noexcept;
  double diagonal() const noexcept { return distance(lo_, hi_); }
  Point sample_uniform(std::mt19937_64& rng) const;

  friend bool operator==(const DomainBox&, const DomainBox&) = default;

 private:
  Point lo_, hi_;
};

struct AffineCoeffs {
  Point a;
  double b = 0.0;
};

struct PolyTerm {
  std::array<int, kMaxDim> exps{};
  double coef = 0.0;
  friend bool operator==(const PolyTerm&, const PolyTerm&) = default;
};

inline constexpr int kMaxPolyDegree = 8;

/// phi: box -> R with analytic gradient. Immutable; copies share state.
class ScalarField {
 public:
  using EvalFn = std::function<double(const Point&)>;
  using GradFn = std::function<Point(const Point&)>;

  ScalarField(std::string name, DomainBox box, EvalFn eval, GradFn grad,
              std::optional<AffineCoeffs> affine = std::nullopt);

  const std::string& name() const noexcept { return name_; }
  int dim() const noexcept { return box_.dim(); }
  const DomainBox& box() const noexcept { return box_; }

  // Set only for fields of the form a.u + b; enables closed-form band distances.
  const std::optional<AffineCoeffs>& affine() const noexcept { return affine_; }

  double evaluate(const Point& u) const;
  Point gradient(const Point& u) const;

 private:
  void check(const Point& u) const;

  std::string name_;
  DomainBox box_;
  EvalFn eval_;
  GradFn grad_;
  std::optional<AffineCoeffs> affine_;
};

enum class Catalog { Affine, Paraboloid, Saddle, WellToSaddle, ExpDecay };

std::optional<Catalog> catalog_from_name(std::string_view name);
std::string_view catalog_name(Catalog c);

struct CatalogSpec {
  Catalog entry = Catalog::Paraboloid;
  int dim = 2;
  // Affine only; defaults to a = e_1, b = 0.
  std::optional<Point> a;
  double b = 0.0;
  friend bool operator==(const CatalogSpec&, const CatalogSpec&) = default;
};

struct PolySpec {
  int dim = 1;
  std::vector<PolyTerm> terms;
  friend bool operator==(const PolySpec&, const PolySpec&) = default;
};

using FunctionalSpec = std::variant<CatalogSpec, PolySpec>;

int spec_dim(const FunctionalSpec& spec);

/// The box a catalog landscape is usually studied on.
DomainBox default_box(const FunctionalSpec& spec);

ScalarField make_field(const FunctionalSpec& spec, const DomainBox& box);
ScalarField make_catalog_field(Catalog entry, const DomainBox& box);
ScalarField make_affine_field(const Point& a, double b, const DomainBox& box);
ScalarField make_poly_field(const PolySpec& spec, const DomainBox& box);

struct GradientCheckReport {
  double max_rel_error = 0.0;
  Point worst_point;
};

/// Compares analytic gradients with central differences at uniformly drawn
/// box points. Relative error, or absolute where the gradient norm < 1e-8.
GradientCheckReport gradient_check(const ScalarField& field, int samples, double step,
                                   std::uint64_t seed);

}  // namespace deflab
