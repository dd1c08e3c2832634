#include <random>

#include "doctest.h"
#include "deflab/paths.hpp"

using namespace deflab;

namespace {

MountainPassInstance well_instance() {
  const CatalogSpec spec{Catalog::WellToSaddle, 2};
  return {make_field(spec, default_box(spec)), {0.0, 0.0}, {1.0, 0.0}};
}

}  // namespace

TEST_CASE("make_path: axis initialisation places the pins exactly") {
  const auto inst = well_instance();
  const auto p = make_path(inst, 8, AxisInit{});
  REQUIRE(p.nodes.size() == 9);
  CHECK(p.nodes[2] == Point{0.0, 0.0});
  CHECK(p.nodes[4] == Point{1.0, 0.0});
  CHECK(p.nodes[0] == Point{0.0, 0.0});
  CHECK(p.nodes[3] == Point{0.5, 0.0});
  CHECK(p.nodes[8] == Point{1.0, 0.0});
}

TEST_CASE("make_path: M must be a multiple of 4, at least 8") {
  const auto inst = well_instance();
  for (int m : {6, 4, 0, -8, 10}) {
    try {
      make_path(inst, m, AxisInit{});
      FAIL("expected InvalidM for M=" << m);
    } catch (const Error& e) {
      CHECK(e.code() == ErrorCode::InvalidM);
    }
  }
}

TEST_CASE("make_path: jitter moves only free nodes and is reproducible") {
  const auto inst = well_instance();
  const auto axis = make_path(inst, 8, AxisInit{});
  const auto p = make_path(inst, 8, JitterInit{0.1, 7});
  const auto q = make_path(inst, 8, JitterInit{0.1, 7});
  CHECK(bit_equal(p.nodes[2], inst.pin_zero));
  CHECK(bit_equal(p.nodes[4], inst.pin_e));
  int moved = 0;
  for (int i = 0; i <= 8; ++i) {
    CHECK(bit_equal(p.nodes[i], q.nodes[i]));
    moved += !(p.nodes[i] == axis.nodes[i]);
  }
  CHECK(moved == 7);
}

TEST_CASE("endpoint mode pins t = 0 and t = 1") {
  auto inst = well_instance();
  inst.pin_mode = PinMode::Endpoints;
  const auto p = make_path(inst, 8, JitterInit{0.2, 3});
  CHECK(bit_equal(p.nodes[0], inst.pin_zero));
  CHECK(bit_equal(p.nodes[8], inst.pin_e));
  inst.radius = 1.5;
  CHECK_THROWS_AS(inst.validate(), Error);
}

TEST_CASE("path_extrema on a hand-built path") {
  const auto inst = well_instance();
  DiscretePath p{8, {}};
  for (double x : {-1.0, -0.5, 0.0, 0.5, 1.0, 1.25, 1.5, 1.75, 2.0}) p.nodes.push_back({x, 0.0});
  const auto ex = path_extrema(inst, p);
  CHECK(ex.max_value == 9.0);
  CHECK(ex.max_arg_index == 0);
  CHECK(ex.min_value == 0.0);
  CHECK(ex.min_arg_index == 2);

  // Segment sampling can only widen the range.
  const auto fine = path_extrema(inst, p, 7);
  CHECK(fine.max_value >= ex.max_value);
  CHECK(fine.min_value <= ex.min_value);
}

TEST_CASE("pin sandwich holds for random interior-mode paths") {
  const auto inst = well_instance();
  const double f0 = inst.field.evaluate(inst.pin_zero), fe = inst.field.evaluate(inst.pin_e);
  for (std::uint64_t seed = 0; seed < 200; ++seed) {
    const int m = 8 + 4 * static_cast<int>(seed % 5);
    const auto ex = path_extrema(inst, make_path(inst, m, JitterInit{0.5, seed}));
    CHECK(ex.min_value <= std::min(f0, fe));
    CHECK(ex.max_value >= std::max(f0, fe));
  }
}

TEST_CASE("deform_path keeps the pins of the center-level configuration") {
  const auto inst = well_instance();
  BandPartition part(inst.field, {0.0, 0.1}, LevelSetD{0.0});
  DeformationField df(part, DistanceBackend::sampled(part, {101, 101}));
  const auto cfg = FlowConfig::for_eps(0.1);

  CHECK(bit_equal(eta(df, cfg, inst.pin_zero), inst.pin_zero));  // in D
  CHECK(bit_equal(eta(df, cfg, inst.pin_e), inst.pin_e));        // phi(e) = 1 outside [-0.2, 0.2]

  const auto path = make_path(inst, 8, AxisInit{});
  const auto beta = deform_path(df, cfg, inst, path);
  CHECK(beta.pins_preserved);
  for (int i = 0; i <= 8; ++i) CHECK(bit_equal(beta.path.nodes[i], path.nodes[i]));
}

TEST_CASE("deform_path leaves out-of-band nodes alone on the affine configuration") {
  auto affine = make_affine_field({1.0, 0.0}, 0.0, DomainBox::cube(2, -2, 2));
  MountainPassInstance inst{affine, {1.5, 0.0}, {-1.5, 0.0}};
  BandPartition part(affine, {0.0, 0.5});
  DeformationField df(part, DistanceBackend::exact_affine(part));
  const auto path = make_path(inst, 16, AxisInit{});
  const auto beta = deform_path(df, FlowConfig::for_eps(0.5), inst, path);
  CHECK(bit_equal(beta.path.nodes[0], Point{1.5, 0.0}));
  CHECK(bit_equal(beta.path.nodes[6], Point{0.0, 0.0}));  // psi = 0 at the midplane
  // x = 0.75 lies in A and flows toward the midplane.
  CHECK(beta.path.nodes[5][0] < 0.75);
}

TEST_CASE("deform_path reports moved pins") {
  auto affine = make_affine_field({1.0, 0.0}, 0.0, DomainBox::cube(2, -2, 2));
  MountainPassInstance inst{affine, {-0.4, 0.0}, {1.5, 0.0}};  // pin_zero inside B
  BandPartition part(affine, {0.0, 0.5});
  DeformationField df(part, DistanceBackend::exact_affine(part));
  const auto path = make_path(inst, 8, AxisInit{});
  try {
    deform_path(df, FlowConfig::for_eps(0.5), inst, path);
    FAIL("expected PinMoved");
  } catch (const Error& e) {
    CHECK(e.code() == ErrorCode::PinMoved);
  }
  CHECK_FALSE(deform_path(df, FlowConfig::for_eps(0.5), inst, path, false).pins_preserved);
}
