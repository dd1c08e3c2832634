#include <bit>
#include <cmath>
#include <cstdint>
#include <random>

#include "doctest.h"
#include "deflab/scalarfield.hpp"

using namespace deflab;

namespace {

ScalarField catalog(Catalog c) { return make_field(CatalogSpec{c, 2}, default_box(CatalogSpec{c, 2})); }

}  // namespace

TEST_CASE("evaluate: catalog values") {
  CHECK(catalog(Catalog::Paraboloid).evaluate({1.0, 2.0}) == 5.0);
  CHECK(catalog(Catalog::WellToSaddle).evaluate({1.0, 0.0}) == 1.0);
  const auto affine = make_affine_field({1.0, 0.0}, 0.0, DomainBox::cube(2, -2, 2));
  CHECK(affine.evaluate({0.35, 7.0}) == 0.35);
  CHECK(catalog(Catalog::Saddle).evaluate({1.0, 2.0}) == -3.0);
  CHECK(catalog(Catalog::ExpDecay).evaluate({0.0, 1.0}) == doctest::Approx(2.0));
}

TEST_CASE("gradient: catalog values") {
  CHECK(catalog(Catalog::Paraboloid).gradient({1.0, 2.0}) == Point{2.0, 4.0});
  const auto affine = make_affine_field({1.0, 0.0}, 0.0, DomainBox::cube(2, -2, 2));
  CHECK(affine.gradient({-1.3, 0.2}) == Point{1.0, 0.0});

  // Analytic critical points are exact zeros.
  const auto w = catalog(Catalog::WellToSaddle);
  CHECK(w.gradient({0.0, 0.0}) == Point{0.0, 0.0});
  CHECK(w.gradient({1.0, 0.0}) == Point{0.0, 0.0});
  CHECK(w.gradient({2.0, 0.0}) == Point{0.0, 0.0});
  CHECK(catalog(Catalog::Paraboloid).gradient({0.0, 0.0}) == Point{0.0, 0.0});
}

TEST_CASE("well_to_saddle gradient agrees with an independent central difference") {
  const auto w = catalog(Catalog::WellToSaddle);
  auto g = [](double x, double y) { return x * x * (x - 2) * (x - 2) + y * y; };
  for (double x : {-0.7, 0.3, 1.0, 1.6, 2.4}) {
    const double h = 1e-5;
    const double fd = (g(x + h, 0.25) - g(x - h, 0.25)) / (2 * h);
    CHECK(w.gradient({x, 0.25})[0] == doctest::Approx(fd).epsilon(1e-7));
  }
}

TEST_CASE("dimension mismatch is InvalidPoint") {
  const auto p = catalog(Catalog::Paraboloid);
  try {
    p.evaluate(Point{1.0});
    FAIL("expected throw");
  } catch (const Error& e) {
    CHECK(e.code() == ErrorCode::InvalidPoint);
  }
  CHECK_THROWS_AS(p.gradient(Point{1.0, 2.0, 3.0}), Error);
}

TEST_CASE("gradient_check bounds") {
  const auto affine = make_affine_field({1.0, 0.0}, 0.0, DomainBox::cube(2, -2, 2));
  CHECK(gradient_check(affine, 100, 1e-4, 1).max_rel_error < 1e-10);
  CHECK(gradient_check(catalog(Catalog::Paraboloid), 1000, 1e-4, 2).max_rel_error < 1e-8);
  CHECK(gradient_check(catalog(Catalog::WellToSaddle), 1000, 1e-4, 3).max_rel_error < 1e-5);
  for (Catalog c : {Catalog::Affine, Catalog::Paraboloid, Catalog::Saddle, Catalog::WellToSaddle, Catalog::ExpDecay})
    CHECK(gradient_check(catalog(c), 1000, 1e-4, 11).max_rel_error < 1e-5);
}

TEST_CASE("evaluation is bit-deterministic") {
  std::mt19937_64 rng(5);
  for (Catalog c : {Catalog::Paraboloid, Catalog::Saddle, Catalog::WellToSaddle, Catalog::ExpDecay}) {
    const auto f = catalog(c);
    for (int k = 0; k < 200; ++k) {
      const Point u = f.box().sample_uniform(rng);
      CHECK(std::bit_cast<std::uint64_t>(f.evaluate(u)) == std::bit_cast<std::uint64_t>(f.evaluate(u)));
      CHECK(bit_equal(f.gradient(u), f.gradient(u)));
    }
  }
}

TEST_CASE("polynomial fields") {
  // 3 x^2 y - y^3 + 1 (monkey saddle plus a constant)
  PolySpec spec{2, {{{2, 1, 0}, 3.0}, {{0, 3, 0}, -1.0}, {{0, 0, 0}, 1.0}}};
  const auto f = make_field(spec, DomainBox::cube(2, -1, 1));
  CHECK(f.evaluate({0.5, 0.5}) == doctest::Approx(3 * 0.25 * 0.5 - 0.125 + 1));
  const Point g = f.gradient({0.5, 0.5});
  CHECK(g[0] == doctest::Approx(6 * 0.5 * 0.5));
  CHECK(g[1] == doctest::Approx(3 * 0.25 - 3 * 0.25));
  CHECK(gradient_check(f, 500, 1e-4, 9).max_rel_error < 1e-5);

  PolySpec too_high{1, {{{9, 0, 0}, 1.0}}};
  CHECK_THROWS_AS(make_field(too_high, DomainBox::cube(1, -1, 1)), Error);
}

TEST_CASE("box validation") {
  CHECK_THROWS_AS(DomainBox({0.0, 1.0}, {1.0, 1.0}), Error);
  CHECK_THROWS_AS(DomainBox({0.0}, {1.0, 1.0}), Error);
  CHECK_THROWS_AS(Point(4), Error);
}
