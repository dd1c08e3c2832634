#include "deflab/scalarfield.hpp"

#include <algorithm>
#include <cmath>
#include <utility>

namespace deflab {

// ---------------------------------------------------------------------------
// DomainBox

DomainBox::DomainBox(Point lo, Point hi) : lo_(lo), hi_(hi) {
  if (lo.dim() != hi.dim()) throw Error(ErrorCode::InvalidConfig, "box bounds differ in dimension");
  for (int i = 0; i < lo.dim(); ++i) {
    if (!(lo[i] < hi[i])) throw Error(ErrorCode::InvalidConfig, "box requires lo < hi on every axis");
  }
}

DomainBox DomainBox::cube(int dim, double lo, double hi) {
  Point l(dim), h(dim);
  for (int i = 0; i < dim; ++i) {
    l[i] = lo;
    h[i] = hi;
  }
  return {l, h};
}

bool DomainBox::contains(const Point& u) const noexcept {
  if (u.dim() != dim()) return false;
  for (int i = 0; i < dim(); ++i)
    if (u[i] < lo_[i] || u[i] > hi_[i]) return false;
  return true;
}

bool DomainBox::on_boundary(const Point& u) const noexcept {
  for (int i = 0; i < dim(); ++i)
    if (u[i] <= lo_[i] || u[i] >= hi_[i]) return true;
  return false;
}

Point DomainBox::clamp(const Point& u) const noexcept {
  Point r = u;
  for (int i = 0; i < dim(); ++i) r[i] = std::clamp(u[i], lo_[i], hi_[i]);
  return r;
}

Point DomainBox::sample_uniform(std::mt19937_64& rng) const {
  std::uniform_real_distribution<double> unit(0.0, 1.0);
  Point u(dim());
  for (int i = 0; i < dim(); ++i) u[i] = lo_[i] + (hi_[i] - lo_[i]) * unit(rng);
  return u;
}

// ---------------------------------------------------------------------------
// ScalarField

ScalarField::ScalarField(std::string name, DomainBox box, EvalFn eval, GradFn grad,
                         std::optional<AffineCoeffs> affine)
    : name_(std::move(name)),
      box_(std::move(box)),
      eval_(std::move(eval)),
      grad_(std::move(grad)),
      affine_(std::move(affine)) {}

void ScalarField::check(const Point& u) const {
  if (u.dim() != dim()) throw Error(ErrorCode::InvalidPoint, "point dimension does not match field " + name_);
}

double ScalarField::evaluate(const Point& u) const {
  check(u);
  return eval_(u);
}

Point ScalarField::gradient(const Point& u) const {
  check(u);
  return grad_(u);
}

// ---------------------------------------------------------------------------
// Catalog

std::optional<Catalog> catalog_from_name(std::string_view name) {
  if (name == "affine") return Catalog::Affine;
  if (name == "paraboloid") return Catalog::Paraboloid;
  if (name == "saddle") return Catalog::Saddle;
  if (name == "well_to_saddle") return Catalog::WellToSaddle;
  if (name == "exp_decay") return Catalog::ExpDecay;
  return std::nullopt;
}

std::string_view catalog_name(Catalog c) {
  switch (c) {
    case Catalog::Affine: return "affine";
    case Catalog::Paraboloid: return "paraboloid";
    case Catalog::Saddle: return "saddle";
    case Catalog::WellToSaddle: return "well_to_saddle";
    case Catalog::ExpDecay: return "exp_decay";
  }
  return "unknown";
}

namespace {

// Sum of squares of coordinates 1..n-1 (the "y^2 (+ z^2)" tail shared by
// several catalog landscapes).
double tail_squares(const Point& u) {
  double s = 0.0;
  for (int i = 1; i < u.dim(); ++i) s += u[i] * u[i];
  return s;
}

Point tail_gradient(const Point& u, double head) {
  Point g(u.dim());
  g[0] = head;
  for (int i = 1; i < u.dim(); ++i) g[i] = 2.0 * u[i];
  return g;
}

}  // namespace

ScalarField make_affine_field(const Point& a, double b, const DomainBox& box) {
  if (a.dim() != box.dim()) throw Error(ErrorCode::InvalidConfig, "affine coefficient dimension mismatch");
  return ScalarField(
      "affine", box, [a, b](const Point& u) { return dot(a, u) + b; }, [a](const Point&) { return a; },
      AffineCoeffs{a, b});
}

ScalarField make_catalog_field(Catalog entry, const DomainBox& box) {
  const int dim = box.dim();
  switch (entry) {
    case Catalog::Affine: {
      Point a(dim);
      a[0] = 1.0;
      return make_affine_field(a, 0.0, box);
    }
    case Catalog::Paraboloid:
      return ScalarField(
          "paraboloid", box, [](const Point& u) { return dot(u, u); }, [](const Point& u) { return 2.0 * u; });
    case Catalog::Saddle:
      if (dim < 2) throw Error(ErrorCode::InvalidConfig, "saddle needs dim >= 2");
      return ScalarField(
          "saddle", box, [](const Point& u) { return u[0] * u[0] - tail_squares(u); },
          [](const Point& u) {
            Point g = tail_gradient(u, 2.0 * u[0]);
            for (int i = 1; i < u.dim(); ++i) g[i] = -g[i];
            return g;
          });
    case Catalog::WellToSaddle:
      // x^2 (x-2)^2 + y^2: minima at x = 0, 2 and a saddle at (1, 0) of height 1.
      return ScalarField(
          "well_to_saddle", box,
          [](const Point& u) {
            const double x = u[0], w = x * (x - 2.0);
            return w * w + tail_squares(u);
          },
          [](const Point& u) {
            const double x = u[0];
            return tail_gradient(u, 2.0 * x * (x - 2.0) * (2.0 * x - 2.0));
          });
    case Catalog::ExpDecay:
      return ScalarField(
          "exp_decay", box, [](const Point& u) { return std::exp(-u[0]) + tail_squares(u); },
          [](const Point& u) { return tail_gradient(u, -std::exp(-u[0])); });
  }
  throw Error(ErrorCode::InvalidConfig, "unknown catalog entry");
}

namespace {

double ipow(double x, int e) {
  double r = 1.0;
  for (int k = 0; k < e; ++k) r *= x;
  return r;
}

}  // namespace

ScalarField make_poly_field(const PolySpec& spec, const DomainBox& box) {
  if (spec.dim != box.dim()) throw Error(ErrorCode::InvalidConfig, "polynomial dimension does not match box");
  for (const auto& t : spec.terms) {
    int degree = 0;
    for (int i = 0; i < kMaxDim; ++i) {
      if (t.exps[i] < 0) throw Error(ErrorCode::InvalidConfig, "negative polynomial exponent");
      if (i >= spec.dim && t.exps[i] != 0) throw Error(ErrorCode::InvalidConfig, "exponent beyond field dimension");
      degree += t.exps[i];
    }
    if (degree > kMaxPolyDegree) throw Error(ErrorCode::InvalidConfig, "polynomial degree exceeds 8");
  }
  auto terms = spec.terms;
  auto eval = [terms](const Point& u) {
    double s = 0.0;
    for (const auto& t : terms) {
      double m = t.coef;
      for (int i = 0; i < u.dim(); ++i) m *= ipow(u[i], t.exps[i]);
      s += m;
    }
    return s;
  };
  auto grad = [terms](const Point& u) {
    Point g(u.dim());
    for (const auto& t : terms) {
      for (int k = 0; k < u.dim(); ++k) {
        if (t.exps[k] == 0) continue;
        double m = t.coef * t.exps[k] * ipow(u[k], t.exps[k] - 1);
        for (int i = 0; i < u.dim(); ++i)
          if (i != k) m *= ipow(u[i], t.exps[i]);
        g[k] += m;
      }
    }
    return g;
  };
  return ScalarField("poly", box, eval, grad);
}

int spec_dim(const FunctionalSpec& spec) {
  return std::visit([](const auto& s) { return s.dim; }, spec);
}

DomainBox default_box(const FunctionalSpec& spec) {
  const int dim = spec_dim(spec);
  if (const auto* c = std::get_if<CatalogSpec>(&spec); c && c->entry == Catalog::WellToSaddle) {
    DomainBox cube = DomainBox::cube(dim, -2.0, 2.0);
    Point lo = cube.lo(), hi = cube.hi();
    lo[0] = -1.0;
    hi[0] = 3.0;
    return {lo, hi};
  }
  return DomainBox::cube(dim, -2.0, 2.0);
}

ScalarField make_field(const FunctionalSpec& spec, const DomainBox& box) {
  if (spec_dim(spec) != box.dim()) throw Error(ErrorCode::InvalidConfig, "functional and box dimensions differ");
  if (const auto* c = std::get_if<CatalogSpec>(&spec)) {
    if (c->entry == Catalog::Affine && c->a) return make_affine_field(*c->a, c->b, box);
    if (c->entry == Catalog::Affine) {
      Point a(box.dim());
      a[0] = 1.0;
      return make_affine_field(a, c->b, box);
    }
    return make_catalog_field(c->entry, box);
  }
  return make_poly_field(std::get<PolySpec>(spec), box);
}

// ---------------------------------------------------------------------------

GradientCheckReport gradient_check(const ScalarField& field, int samples, double step, std::uint64_t seed) {
  if (samples < 1 || !(step > 0.0)) throw Error(ErrorCode::InvalidConfig, "gradient_check needs samples >= 1, step > 0");
  std::mt19937_64 rng(seed);
  GradientCheckReport report;
  report.worst_point = Point(field.dim());
  for (int s = 0; s < samples; ++s) {
    const Point u = field.box().sample_uniform(rng);
    const Point analytic = field.gradient(u);
    Point fd(field.dim());
    for (int i = 0; i < field.dim(); ++i) {
      Point up = u, dn = u;
      up[i] += step;
      dn[i] -= step;
      fd[i] = (field.evaluate(up) - field.evaluate(dn)) / (2.0 * step);
    }
    const double gnorm = norm(analytic);
    const double abs_err = distance(analytic, fd);
    const double err = gnorm < 1e-8 ? abs_err : abs_err / gnorm;
    if (s == 0 || err > report.max_rel_error) {
      report.max_rel_error = err;
      report.worst_point = u;
    }
  }
  return report;
}

}  // namespace deflab
