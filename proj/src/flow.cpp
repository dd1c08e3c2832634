#include "deflab/flow.hpp"

#include <algorithm>
#include <cmath>
#include <iomanip>
#include <limits>
#include <random>

#include "deflab/util.hpp"

namespace deflab {

FlowConfig FlowConfig::for_eps(double eps, int steps, int record_every) {
  if (steps < 1) throw Error(ErrorCode::InvalidConfig, "flow needs at least one step");
  return FlowConfig{2.0 * eps / steps, 2.0 * eps, record_every};
}

void FlowConfig::validate() const {
  if (!(step > 0.0)) throw Error(ErrorCode::InvalidConfig, "flow step must be > 0");
  if (!(horizon > 0.0)) throw Error(ErrorCode::InvalidConfig, "flow horizon must be > 0");
  if (step > horizon) throw Error(ErrorCode::InvalidConfig, "flow step exceeds horizon");
  if (record_every < 1) throw Error(ErrorCode::InvalidConfig, "record_every must be >= 1");
}

DeformationField::DeformationField(BandPartition part, DistanceBackend backend)
    : part_(std::move(part)), backend_(std::move(backend)) {}

Point DeformationField::vector_field(const Point& u) const {
  const double p = psi(u);
  if (p == 0.0) return Point(u.dim());
  const Point g = field().gradient(u);
  const double g2 = dot(g, g);
  if (std::sqrt(g2) < part_.params().min_grad_floor)
    throw Error(ErrorCode::VectorFieldSingular, "psi != 0 where |grad phi| is below the floor");
  return (p / g2) * g;
}

namespace {

bool is_zero(const Point& v) {
  for (int i = 0; i < v.dim(); ++i)
    if (v[i] != 0.0) return false;
  return true;
}

}  // namespace

Trajectory integrate_flow(const DeformationField& df, const FlowConfig& cfg, const Point& u) {
  cfg.validate();
  const auto& field = df.field();
  const auto& part = df.partition();
  const auto& box = field.box();
  const double speed_cap = 1.0 / (2.0 * df.eps()) + 1e-12;
  const double grad_floor = 2.0 * df.eps();

  const auto nsteps = std::max<long long>(1, std::llround(cfg.horizon / cfg.step));
  const double h = cfg.horizon / static_cast<double>(nsteps);

  Trajectory traj;
  auto record = [&](double t, const Point& x, double phi) {
    traj.times.push_back(t);
    traj.points.push_back(x);
    traj.phi_values.push_back(phi);
    traj.psi_values.push_back(df.psi(x));
  };
  auto audit_speed = [&](const Point& x, const Point& fx) {
    if (norm(field.gradient(x)) >= grad_floor && norm(fx) > speed_cap) ++traj.speed_bound_violations;
  };

  Point x = u;
  double phi = field.evaluate(x);
  const RegionTag start_tag = part.classify(x, phi);
  Point k1 = df.vector_field(x);
  record(0.0, x, phi);

  if (is_zero(k1)) {
    traj.constant = true;
    traj.confined_in = start_tag;
    for (long long n = 1; n <= nsteps; ++n)
      if (n % cfg.record_every == 0 || n == nsteps) record(h * static_cast<double>(n), x, phi);
    return traj;
  }

  bool confined = true;
  for (long long n = 1; n <= nsteps; ++n) {
    audit_speed(x, k1);
    const Point k2 = df.vector_field(x + (0.5 * h) * k1);
    const Point k3 = df.vector_field(x + (0.5 * h) * k2);
    const Point k4 = df.vector_field(x + h * k3);
    x += (h / 6.0) * (k1 + 2.0 * k2 + 2.0 * k3 + k4);
    if (!box.contains(x)) {
      x = box.clamp(x);
      traj.clamped_at_boundary = true;
    }
    phi = field.evaluate(x);
    if (confined && part.classify(x, phi) != start_tag) confined = false;
    k1 = df.vector_field(x);
    if (n % cfg.record_every == 0 || n == nsteps) record(h * static_cast<double>(n), x, phi);
  }
  audit_speed(x, k1);
  if (confined) traj.confined_in = start_tag;
  return traj;
}

Point eta(const DeformationField& df, const FlowConfig& cfg, const Point& u) {
  if (is_zero(df.vector_field(u))) return u;
  return integrate_flow(df, cfg, u).points.back();
}

double flow_identity_residual(const DeformationField& df, const Trajectory& traj) {
  double worst = 0.0;
  for (std::size_t k = 0; k + 1 < traj.points.size(); ++k) {
    const double dt = traj.times[k + 1] - traj.times[k];
    const double rate = (traj.phi_values[k + 1] - traj.phi_values[k]) / dt;
    const Point mid = 0.5 * (traj.points[k] + traj.points[k + 1]);
    worst = std::max(worst, std::abs(rate - df.psi(mid)));
  }
  return worst;
}

namespace {

struct SampleOutcome {
  RegionTag tag = RegionTag::Outside;
  double grad_norm = 0.0;
  double phi_end = 0.0;
  bool identity = true;
  bool clamped = false;
  bool confined = false;
  double residual = 0.0;
  int speed_violations = 0;
  Trajectory traj;
};

}  // namespace

DeformationRun verify_deformation(const DeformationField& df, const FlowConfig& cfg, const VerifyOptions& opts) {
  if (opts.samples < 1) throw Error(ErrorCode::InvalidConfig, "verify_deformation needs samples >= 1");
  cfg.validate();
  const auto& field = df.field();
  const auto& part = df.partition();
  const double c = part.params().c, eps = part.params().eps;

  std::mt19937_64 rng(opts.seed);
  std::vector<Point> starts(static_cast<std::size_t>(opts.samples));
  for (auto& s : starts) s = field.box().sample_uniform(rng);

  std::vector<SampleOutcome> outcomes(starts.size());
  parallel_for(starts.size(), opts.workers, [&](std::size_t i) {
    const Point& u = starts[i];
    SampleOutcome& o = outcomes[i];
    o.tag = part.classify(u);
    o.grad_norm = norm(field.gradient(u));
    Trajectory traj = integrate_flow(df, cfg, u);
    const Point& end = traj.points.back();
    o.phi_end = traj.phi_values.back();
    o.identity = bit_equal(end, u);
    o.clamped = traj.clamped_at_boundary;
    o.confined = traj.confined_in.has_value() && *traj.confined_in == o.tag;
    o.residual = traj.clamped_at_boundary ? 0.0 : flow_identity_residual(df, traj);
    o.speed_violations = traj.speed_bound_violations;
    if (!traj.constant && opts.keep_trajectories > 0) o.traj = std::move(traj);
  });

  DeformationRun run;
  auto& rep = run.report;
  rep.hypothesis_min_grad = std::numeric_limits<double>::infinity();
  int b_reach = 0, c_reach = 0, b_free = 0, c_free = 0;
  for (auto& o : outcomes) {
    rep.speed_bound_violations += o.speed_violations;
    if (o.tag == RegionTag::B || o.tag == RegionTag::C || o.tag == RegionTag::AOther)
      rep.hypothesis_min_grad = std::min(rep.hypothesis_min_grad, o.grad_norm);
    if ((o.tag == RegionTag::Outside || o.tag == RegionTag::D) && !o.identity) ++rep.a_prime_violations;
    if (o.tag == RegionTag::B) ++rep.b_prime.sampled;
    if (o.tag == RegionTag::C) ++rep.c_prime.sampled;
    if (o.clamped) {
      ++rep.clamped_trajectories;
      continue;
    }
    rep.eq31_max_residual = std::max(rep.eq31_max_residual, o.residual);
    if (o.tag == RegionTag::B) {
      ++b_free;
      const bool ok = o.phi_end >= c + eps - opts.claim_tol;
      b_reach += ok;
      if (o.confined) {
        ++rep.b_prime.confined;
        rep.b_prime.confined_satisfying += ok;
      }
    } else if (o.tag == RegionTag::C) {
      ++c_free;
      const bool ok = o.phi_end <= c - eps + opts.claim_tol;
      c_reach += ok;
      if (o.confined) {
        ++rep.c_prime.confined;
        rep.c_prime.confined_satisfying += ok;
      }
    }
    if (static_cast<int>(run.kept.size()) < opts.keep_trajectories && !o.traj.points.empty())
      run.kept.push_back(std::move(o.traj));
  }
  if (rep.b_prime.sampled == 0) throw Error(ErrorCode::EmptyRegion, "no sample landed in band B");
  if (rep.c_prime.sampled == 0) throw Error(ErrorCode::EmptyRegion, "no sample landed in band C");
  rep.b_prime.unconditional_fraction = b_free ? static_cast<double>(b_reach) / b_free : 0.0;
  rep.c_prime.unconditional_fraction = c_free ? static_cast<double>(c_reach) / c_free : 0.0;
  return run;
}

void write_trajectory_csv(std::ostream& os, const Trajectory& traj) {
  const int dim = traj.points.empty() ? 0 : traj.points.front().dim();
  os << 't';
  for (int i = 0; i < dim; ++i) os << ",x" << (i + 1);
  os << ",phi,psi\n" << std::setprecision(17);
  for (std::size_t k = 0; k < traj.points.size(); ++k) {
    os << traj.times[k];
    for (int i = 0; i < dim; ++i) os << ',' << traj.points[k][i];
    os << ',' << traj.phi_values[k] << ',' << traj.psi_values[k] << '\n';
  }
}

}  // namespace deflab
