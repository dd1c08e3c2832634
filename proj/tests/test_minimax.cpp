#include <cmath>

#include "doctest.h"
#include "deflab/gridoracle.hpp"
#include "deflab/minimax.hpp"

using namespace deflab;

namespace {

MountainPassInstance catalog_instance(Catalog c, Point e, std::optional<double> r = std::nullopt) {
  const CatalogSpec spec{c, 2};
  return {make_field(spec, default_box(spec)), {0.0, 0.0}, e, PinMode::Interior, r};
}

// (y - 2x + x^2)^2 + (x^2 - 2x)^2: the straight segment from (0,0) to (2,0)
// peaks at 2, the curved valley y = x(2 - x) only at 1.
MountainPassInstance curved_valley() {
  const DomainBox box({-1.0, -2.0}, {3.0, 2.0});
  ScalarField f(
      "curved_valley", box,
      [](const Point& u) {
        const double a = u[1] - 2.0 * u[0] + u[0] * u[0], b = u[0] * u[0] - 2.0 * u[0];
        return a * a + b * b;
      },
      [](const Point& u) {
        const double a = u[1] - 2.0 * u[0] + u[0] * u[0], b = u[0] * u[0] - 2.0 * u[0];
        return Point{2.0 * a * (2.0 * u[0] - 2.0) + 2.0 * b * (2.0 * u[0] - 2.0), 2.0 * a};
      });
  return {f, {0.0, 0.0}, {2.0, 0.0}, PinMode::Endpoints, std::nullopt};
}

void check_history(const MinimaxResult& r, bool nonincreasing) {
  for (std::size_t i = 1; i < r.history.size(); ++i) {
    if (nonincreasing) CHECK(r.history[i] <= r.history[i - 1]);
    else CHECK(r.history[i] >= r.history[i - 1]);
  }
}

}  // namespace

TEST_CASE("optimize_c2 / optimize_c1 on the catalog examples") {
  const MinimaxOptions opts;
  SUBCASE("well_to_saddle") {
    const auto inst = catalog_instance(Catalog::WellToSaddle, {1.0, 0.0});
    const auto c2 = optimize_c2(inst, opts);
    const auto c1 = optimize_c1(inst, opts);
    CHECK(c2.value == doctest::Approx(1.0).epsilon(0.03));
    CHECK(distance(c2.witness_point, Point{1.0, 0.0}) < 0.05);
    CHECK(std::abs(c1.value) <= 0.01);
    CHECK(distance(c1.witness_point, Point{0.0, 0.0}) < 0.05);
    CHECK(c2.converged);
    CHECK(c1.converged);
  }
  SUBCASE("paraboloid") {
    const auto inst = catalog_instance(Catalog::Paraboloid, {1.0, 0.0});
    CHECK(std::abs(optimize_c2(inst, opts).value - 1.0) <= 0.01);
    CHECK(std::abs(optimize_c1(inst, opts).value) <= 0.01);
  }
  SUBCASE("affine") {
    const auto inst = catalog_instance(Catalog::Affine, {1.0, 0.0});
    CHECK(std::abs(optimize_c2(inst, opts).value - 1.0) <= 0.01);
    CHECK(std::abs(optimize_c1(inst, opts).value) <= 0.01);
  }
}

TEST_CASE("optimizer descends a curved valley down to the grid oracle value") {
  const auto inst = curved_valley();
  MinimaxOptions opts;
  opts.max_iters = 3000;
  const auto c2 = optimize_c2(inst, opts);
  check_history(c2, true);
  CHECK(c2.history.front() > 1.9);

  const GridGraph g(inst.field, inst.field.box(), {257}, Connectivity::Full);
  const auto oracle = bottleneck_value(g, g.nearest_node(inst.pin_zero), g.nearest_node(inst.pin_e));
  CHECK(oracle.value == doctest::Approx(1.0).epsilon(0.02));
  const double slack = 2.0 * g.spacing(0) * 6.0;
  CHECK(c2.value >= oracle.value - slack);
  CHECK(std::abs(c2.value - oracle.value) <= 0.03);
  CHECK(c2.witness_path.nodes[c2.witness_index] == c2.witness_point);
}

TEST_CASE("history monotonicity and pin bounds with jittered members") {
  MinimaxOptions opts;
  opts.jitter_scale = 0.4;
  opts.seed = 11;
  for (auto c : {Catalog::WellToSaddle, Catalog::Paraboloid, Catalog::Saddle}) {
    const auto inst = catalog_instance(c, {1.0, 0.0});
    const auto c2 = optimize_c2(inst, opts);
    const auto c1 = optimize_c1(inst, opts);
    check_history(c2, true);
    check_history(c1, false);
    const double p0 = inst.field.evaluate(inst.pin_zero), pe = inst.field.evaluate(inst.pin_e);
    CHECK(c2.value >= std::max(p0, pe) - 1e-12);
    CHECK(c1.value <= std::min(p0, pe) + 1e-12);
  }
}

TEST_CASE("optimizer is independent of the worker count") {
  const auto inst = curved_valley();
  MinimaxOptions a;
  a.seed = 5;
  a.max_iters = 300;
  MinimaxOptions b = a;
  b.workers = 3;
  const auto ra = optimize_c2(inst, a), rb = optimize_c2(inst, b);
  CHECK(bit_equal(Point{ra.value}, Point{rb.value}));
  CHECK(ra.history == rb.history);
  CHECK(ra.best_member == rb.best_member);
}

TEST_CASE("optimizer rejects bad options") {
  const auto inst = catalog_instance(Catalog::Paraboloid, {1.0, 0.0});
  MinimaxOptions o;
  o.tol = 0.0;
  CHECK_THROWS_AS(optimize_c2(inst, o), Error);
  o = {};
  o.m = 10;
  CHECK_THROWS_AS(optimize_c1(inst, o), Error);
}

TEST_CASE("check_conclusions") {
  const MinimaxOptions opts;
  SUBCASE("well_to_saddle: all four hold") {
    const auto inst = catalog_instance(Catalog::WellToSaddle, {1.0, 0.0});
    const auto cc = check_conclusions(inst, optimize_c1(inst, opts), optimize_c2(inst, opts), 0.05);
    CHECK(cc.i.holds);
    CHECK(cc.ii.holds);
    CHECK(cc.iii.holds);
    CHECK(cc.iv.holds);
    CHECK(cc.ii.lhs <= 0.1);
    CHECK(cc.iv.lhs <= 0.1);
  }
  SUBCASE("paraboloid: (IV) fails at eps 0.05 and holds at 1.1") {
    const auto inst = catalog_instance(Catalog::Paraboloid, {1.0, 0.0});
    const auto c1 = optimize_c1(inst, opts), c2 = optimize_c2(inst, opts);
    const auto small = check_conclusions(inst, c1, c2, 0.05);
    CHECK_FALSE(small.iv.holds);
    CHECK(small.iv.lhs == doctest::Approx(2.0));
    CHECK(*small.iv.upper == doctest::Approx(0.1));
    CHECK(check_conclusions(inst, c1, c2, 1.1).iv.holds);
    CHECK(level_set_min_grad(inst.field, inst.field.box(), c2.value, {201}) == doctest::Approx(2.0).epsilon(0.025));
  }
}

TEST_CASE("trace_proof_argument on well_to_saddle") {
  const auto inst = catalog_instance(Catalog::WellToSaddle, {1.0, 0.0});
  TraceOptions opts;
  opts.resolution = {101};
  opts.flow_steps = 200;
  const auto tr = trace_proof_argument(inst, 0.0, 1.0, 0.3, opts);
  CHECK(tr.eps1 == 0.25);
  CHECK(tr.proof_case == ProofCase::C1LessC2);
  auto step = [&](std::string_view name) {
    auto it = std::find_if(tr.steps.begin(), tr.steps.end(), [&](const StepRecord& s) { return s.name == name; });
    REQUIRE(it != tr.steps.end());
    return *it;
  };
  CHECK(step("separation c2 > c1 + 2 eps1").verdict == Verdict::Holds);
  CHECK(step("separation c2 > c1 + 2 eps1").observed == 0.5);
  CHECK(step("eta(0) = 0 [D = {phi = c1}]").verdict == Verdict::Holds);
  CHECK(step("eta(e) = e [D = {phi = c1}]").verdict == Verdict::Holds);
  CHECK(step("eta(0) = 0 [D = {phi = c2}]").verdict == Verdict::Holds);
  CHECK(step("eta(e) = e [D = {phi = c2}]").verdict == Verdict::Holds);
  // phi >= 0 leaves no path with minimum below c1 = 0.
  CHECK(step("min phi(beta) >= c1 + eps2").verdict == Verdict::Vacuous);
  CHECK_FALSE(tr.eps2.has_value());
  const auto upper = step("max phi(beta) <= c2 - eps3");
  REQUIRE(tr.eps3.has_value());
  CHECK(upper.claimed == doctest::Approx(1.0 - *tr.eps3));
  CHECK(upper.verdict != Verdict::Vacuous);

  CHECK_THROWS_AS(trace_proof_argument(inst, 1.0, 1.0, 0.3, opts), Error);
  const auto swapped = trace_proof_argument(inst, 1.0, 0.0, 0.3, opts);
  CHECK(swapped.proof_case == ProofCase::C1GreaterC2);
  CHECK(swapped.steps[1].verdict == Verdict::Holds);
}

TEST_CASE("ps_probe classifications") {
  PsOptions opts;
  SUBCASE("paraboloid at 1 is vacuous") {
    const auto rep = ps_probe(catalog_instance(Catalog::Paraboloid, {1.0, 0.0}), 1.0, opts);
    CHECK(rep.verdict == PsVerdict::Vacuous);
    CHECK(rep.band_min_grad >= 1.85);
    CHECK(rep.band_min_grad <= 1.95);
    CHECK(rep.band_min_grad == doctest::Approx(2.0 * std::sqrt(0.9)).epsilon(1e-4));
  }
  SUBCASE("well_to_saddle at 1 clusters at the saddle") {
    const auto rep = ps_probe(catalog_instance(Catalog::WellToSaddle, {1.0, 0.0}), 1.0, opts);
    REQUIRE(rep.verdict == PsVerdict::Consistent);
    REQUIRE(!rep.accumulation_points.empty());
    for (const auto& p : rep.accumulation_points) CHECK(distance(p, Point{1.0, 0.0}) < 0.05);
  }
  SUBCASE("exp_decay at 0 escapes along x") {
    const auto rep = ps_probe(catalog_instance(Catalog::ExpDecay, {1.0, 0.0}), 0.0, opts);
    REQUIRE(rep.verdict == PsVerdict::EscapingTrend);
    REQUIRE(rep.sample_sequence.size() >= 2);
    for (std::size_t i = 1; i < rep.sample_sequence.size(); ++i) {
      CHECK(rep.sample_sequence[i].grad_norm <= rep.sample_sequence[i - 1].grad_norm);
      CHECK(rep.sample_sequence[i].point[0] > rep.sample_sequence[i - 1].point[0] - 1e-12);
    }
  }
}

TEST_CASE("check_mpt_geometry examples") {
  const auto well = check_mpt_geometry(catalog_instance(Catalog::WellToSaddle, {2.0, 0.0}, 1.0), 2000, 3);
  CHECK(well.b == doctest::Approx(1.0).epsilon(0.01));
  CHECK(well.verdict);
  const auto para = check_mpt_geometry(catalog_instance(Catalog::Paraboloid, {1.0, 0.0}, 0.5), 500, 3);
  CHECK_FALSE(para.verdict);
  CHECK(para.phi_at_e == 1.0);
  const auto aff = check_mpt_geometry(catalog_instance(Catalog::Affine, {1.0, 0.0}, 0.5), 2000, 3);
  CHECK_FALSE(aff.verdict);
  CHECK(aff.b == doctest::Approx(-0.5).epsilon(1e-3));
  CHECK_THROWS_AS(check_mpt_geometry(catalog_instance(Catalog::Affine, {1.0, 0.0}), 10, 0), Error);
  CHECK_THROWS_AS(check_mpt_geometry(catalog_instance(Catalog::Affine, {1.0, 0.0}, 2.0), 10, 0), Error);
}
