#include "deflab/minimax.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numbers>
#include <random>

#include "deflab/util.hpp"

namespace deflab {

namespace {

constexpr double kNaN = std::numeric_limits<double>::quiet_NaN();
constexpr double kInf = std::numeric_limits<double>::infinity();

// Objective in the c2 orientation: max over nodes of sign * phi.
double worst_node(const ScalarField& field, const std::vector<Point>& nodes, double sign, int& arg) {
  double worst = -kInf;
  for (int i = 0; i < static_cast<int>(nodes.size()); ++i) {
    const double v = sign * field.evaluate(nodes[i]);
    if (v > worst) {
      worst = v;
      arg = i;
    }
  }
  return worst;
}

double longest_segment(const std::vector<Point>& nodes) {
  double longest = 0.0;
  for (std::size_t i = 1; i < nodes.size(); ++i) longest = std::max(longest, distance(nodes[i - 1], nodes[i]));
  return longest;
}

// Moves nodes strictly between lo and hi to uniform arc length along the
// polyline through nodes[lo..hi].
void redistribute(std::vector<Point>& nodes, int lo, int hi) {
  if (hi - lo < 2) return;
  std::vector<double> arc(hi - lo + 1, 0.0);
  for (int k = lo + 1; k <= hi; ++k) arc[k - lo] = arc[k - lo - 1] + distance(nodes[k - 1], nodes[k]);
  const double total = arc.back();
  if (!(total > 0.0)) return;
  const std::vector<Point> old(nodes.begin() + lo, nodes.begin() + hi + 1);
  std::size_t seg = 0;
  for (int k = lo + 1; k < hi; ++k) {
    const double target = total * (k - lo) / (hi - lo);
    while (seg + 2 < arc.size() && arc[seg + 1] < target) ++seg;
    const double len = arc[seg + 1] - arc[seg];
    const double w = len > 0.0 ? (target - arc[seg]) / len : 0.0;
    nodes[k] = (1.0 - w) * old[seg] + w * old[seg + 1];
  }
}

struct MemberRun {
  DiscretePath path;
  double objective = 0.0;
  int arg = 0;
  int iterations = 0;
  bool converged = false;
  std::vector<double> history;
};

MemberRun run_member(const MountainPassInstance& inst, const MinimaxOptions& opts, double sign,
                     const PathInit& init) {
  const auto& field = inst.field;
  const auto& box = field.box();
  MemberRun run;
  run.path = make_path(inst, opts.m, init);
  auto& nodes = run.path.nodes;
  const int m = opts.m;
  const auto [iz, ie] = pin_indices(inst.pin_mode, m);
  const double pin_bound = std::max(sign * field.evaluate(inst.pin_zero), sign * field.evaluate(inst.pin_e));

  const double diag = box.diagonal();
  const double h_start = 0.02 * diag, h_max = 0.2 * diag, h_min = 1e-12 * diag;
  double h = h_start;
  int stall = 0;
  // Trials may not stretch any segment past this; otherwise a path could
  // step over a ridge between two nodes.
  const double seg_cap = 2.0 * diag / m;
  auto feasible = [&](const std::vector<Point>& trial) {
    const double longest = longest_segment(trial);
    return longest <= seg_cap || longest <= longest_segment(nodes);
  };
  run.objective = worst_node(field, nodes, sign, run.arg);
  run.history.push_back(sign * run.objective);

  for (int it = 0; it < opts.max_iters; ++it) {
    if (run.objective <= pin_bound) {
      run.converged = true;
      break;
    }
    ++run.iterations;
    const double before = run.objective;

    const Point g = field.gradient(nodes[run.arg]);
    const double gn = norm(g);
    if (gn > 0.0) {
      const Point dir = (-sign / gn) * g;
      bool moved = false;
      while (h >= h_min) {
        std::vector<Point> trial = nodes;
        trial[run.arg] = box.clamp(trial[run.arg] + h * dir);
        for (int nb : {run.arg - 1, run.arg + 1})
          if (nb >= 0 && nb <= m && !is_pin(inst.pin_mode, m, nb)) trial[nb] = box.clamp(trial[nb] + 0.5 * h * dir);
        int arg = 0;
        const double value = feasible(trial) ? worst_node(field, trial, sign, arg) : kInf;
        if (value < run.objective) {
          nodes = std::move(trial);
          run.objective = value;
          run.arg = arg;
          h = std::min(1.5 * h, h_max);
          moved = true;
          break;
        }
        h *= 0.5;
      }
      if (!moved) h = h_start;
    }

    std::vector<Point> trial = nodes;
    if (inst.pin_mode == PinMode::Interior) {
      redistribute(trial, 0, iz);
      redistribute(trial, iz, ie);
      redistribute(trial, ie, m);
    } else {
      redistribute(trial, 0, m);
    }
    int arg = 0;
    const double value = feasible(trial) ? worst_node(field, trial, sign, arg) : kInf;
    if (value <= run.objective) {
      nodes = std::move(trial);
      run.objective = value;
      run.arg = arg;
    }

    run.history.push_back(sign * run.objective);
    const double rel = (before - run.objective) / std::max(std::abs(before), 1.0);
    stall = rel < opts.tol ? stall + 1 : 0;
    if (stall >= 20) {
      run.converged = true;
      break;
    }
  }
  return run;
}

MinimaxResult optimize(const MountainPassInstance& inst, const MinimaxOptions& opts, double sign) {
  inst.validate();
  opts.validate();
  std::vector<MemberRun> runs(opts.ensemble_size);
  parallel_for(runs.size(), opts.workers, [&](std::size_t k) {
    PathInit init = AxisInit{};
    if (k > 0) init = JitterInit{opts.jitter_scale, derive_seed(opts.seed, k)};
    runs[k] = run_member(inst, opts, sign, init);
  });
  std::size_t best = 0;
  for (std::size_t k = 1; k < runs.size(); ++k)
    if (runs[k].objective < runs[best].objective) best = k;

  MemberRun& run = runs[best];
  MinimaxResult res;
  res.value = sign * run.objective;
  res.witness_index = run.arg;
  res.witness_point = run.path.nodes[run.arg];
  res.witness_path = std::move(run.path);
  res.best_member = static_cast<int>(best);
  res.iterations = run.iterations;
  res.converged = run.converged;
  res.history = std::move(run.history);
  return res;
}

ConclusionCheck band_check(double value, double center, double eps) {
  ConclusionCheck c;
  c.lhs = value;
  c.lower = center - 2.0 * eps;
  c.upper = center + 2.0 * eps;
  c.holds = *c.lower <= value && value <= *c.upper;
  return c;
}

ConclusionCheck grad_check(double grad_norm, double eps) {
  ConclusionCheck c;
  c.lhs = grad_norm;
  c.upper = 2.0 * eps;
  c.holds = grad_norm < *c.upper;
  return c;
}

DistanceBackend backend_for(const BandPartition& part, const std::vector<int>& resolution) {
  if (part.field().affine()) return DistanceBackend::exact_affine(part);
  return DistanceBackend::sampled(part, resolution);
}

// Flows that cannot be evaluated (empty band clouds, vanishing gradient inside
// the band) leave the step without a measurement.
bool unmeasurable(const Error& e) {
  return e.code() == ErrorCode::EmptyRegion || e.code() == ErrorCode::VectorFieldSingular;
}

StepRecord pin_step(std::string name, const DeformationField& df, const FlowConfig& cfg, const Point& pin) {
  try {
    const Point image = eta(df, cfg, pin);
    return {std::move(name), 0.0, distance(image, pin), bit_equal(image, pin) ? Verdict::Holds : Verdict::Fails};
  } catch (const Error& e) {
    if (!unmeasurable(e)) throw;
    return {std::move(name), 0.0, kNaN, Verdict::Vacuous};
  }
}

bool near(double a, double b) { return std::abs(a - b) <= 1e-9 * std::max(1.0, std::abs(b)); }

}  // namespace

void MinimaxOptions::validate() const {
  if (ensemble_size < 1) throw Error(ErrorCode::InvalidConfig, "ensemble_size must be >= 1");
  if (max_iters < 1) throw Error(ErrorCode::InvalidConfig, "max_iters must be >= 1");
  if (!(tol > 0.0)) throw Error(ErrorCode::InvalidConfig, "tol must be > 0");
  if (!(jitter_scale >= 0.0)) throw Error(ErrorCode::InvalidConfig, "jitter_scale must be >= 0");
  if (m < 8 || m % 4 != 0) throw Error(ErrorCode::InvalidM, "M must be a multiple of 4, at least 8");
}

MinimaxResult optimize_c2(const MountainPassInstance& inst, const MinimaxOptions& opts) {
  return optimize(inst, opts, 1.0);
}

MinimaxResult optimize_c1(const MountainPassInstance& inst, const MinimaxOptions& opts) {
  return optimize(inst, opts, -1.0);
}

Conclusions check_conclusions(const MountainPassInstance& inst, const MinimaxResult& c1, const MinimaxResult& c2,
                              double eps) {
  if (!(eps > 0.0)) throw Error(ErrorCode::InvalidConfig, "eps must be > 0");
  const auto& f = inst.field;
  Conclusions out;
  out.eps = eps;
  out.i = band_check(f.evaluate(c1.witness_point), c1.value, eps);
  out.ii = grad_check(norm(f.gradient(c1.witness_point)), eps);
  out.iii = band_check(f.evaluate(c2.witness_point), c2.value, eps);
  out.iv = grad_check(norm(f.gradient(c2.witness_point)), eps);
  return out;
}

std::string_view to_string(Verdict v) {
  switch (v) {
    case Verdict::Holds: return "holds";
    case Verdict::Fails: return "fails";
    case Verdict::Vacuous: return "vacuous";
  }
  return "unknown";
}

std::string_view to_string(ProofCase c) { return c == ProofCase::C1LessC2 ? "C1LessC2" : "C1GreaterC2"; }

ProofTrace trace_proof_argument(const MountainPassInstance& inst, double c1, double c2, double eps,
                                const TraceOptions& opts) {
  if (c1 == c2) throw Error(ErrorCode::InvalidInstance, "c1 and c2 must differ");
  if (!(eps > 0.0) || !std::isfinite(c1) || !std::isfinite(c2))
    throw Error(ErrorCode::InvalidConfig, "trace needs finite c1, c2 and eps > 0");
  inst.validate();
  const auto& field = inst.field;

  ProofTrace tr;
  tr.eps = eps;
  tr.eps1 = std::min(std::abs(c2 - c1) / 4.0, eps);
  tr.proof_case = c1 < c2 ? ProofCase::C1LessC2 : ProofCase::C1GreaterC2;
  tr.d_choice = LevelSetD{c1, std::nullopt};
  tr.d_choice_upper = LevelSetD{c2, std::nullopt};

  tr.steps.push_back({"eps1", std::min(std::abs(c2 - c1) / 4.0, eps), tr.eps1, Verdict::Holds});
  if (tr.proof_case == ProofCase::C1LessC2) {
    const double lhs = c1 + 2.0 * tr.eps1;
    tr.steps.push_back({"separation c2 > c1 + 2 eps1", c2, lhs, c2 > lhs ? Verdict::Holds : Verdict::Fails});
  } else {
    const double lhs = c1 - 2.0 * tr.eps1;
    tr.steps.push_back({"separation c2 < c1 - 2 eps1", c2, lhs, c2 < lhs ? Verdict::Holds : Verdict::Fails});
  }
  const double phi0 = field.evaluate(inst.pin_zero), phie = field.evaluate(inst.pin_e);
  tr.steps.push_back({"phi(0) = c1", c1, phi0, near(phi0, c1) ? Verdict::Holds : Verdict::Fails});
  tr.steps.push_back({"phi(e) = c2", c2, phie, near(phie, c2) ? Verdict::Holds : Verdict::Fails});

  for (const double level : {c1, c2}) {
    const std::string tag = level == c1 ? "[D = {phi = c1}]" : "[D = {phi = c2}]";
    const BandPartition part(field, {level, tr.eps1}, LevelSetD{level, std::nullopt});
    const DeformationField df(part, backend_for(part, opts.resolution));
    const auto cfg = FlowConfig::for_eps(tr.eps1, opts.flow_steps);
    tr.steps.push_back(pin_step("eta(0) = 0 " + tag, df, cfg, inst.pin_zero));
    tr.steps.push_back(pin_step("eta(e) = e " + tag, df, cfg, inst.pin_e));
  }

  std::vector<DiscretePath> candidates;
  std::vector<PathExtrema> extrema;
  for (int k = 0; k < opts.ensemble_size; ++k) {
    PathInit init = AxisInit{};
    if (k > 0) init = JitterInit{opts.jitter_scale, derive_seed(opts.seed, k)};
    candidates.push_back(make_path(inst, opts.m, init));
    extrema.push_back(path_extrema(inst, candidates.back()));
  }

  // A path whose extremum lies in the band [level - eps_k, level - 0.6 eps_k]
  // (or its mirror) exists for eps_k = gap / 0.8 with gap the distance of that
  // extremum from the level; the candidate closest to the level is used.
  auto band_step = [&](bool lower) {
    const double level = lower ? c1 : c2;
    int pick = -1;
    double gap = kInf;
    for (int k = 0; k < static_cast<int>(candidates.size()); ++k) {
      const double g = lower ? level - extrema[k].min_value : extrema[k].max_value - level;
      if (g > 0.0 && g < gap) {
        gap = g;
        pick = k;
      }
    }
    const std::string name = lower ? "min phi(beta) >= c1 + eps2" : "max phi(beta) <= c2 - eps3";
    if (pick < 0) {
      tr.steps.push_back({name, kNaN, kNaN, Verdict::Vacuous});
      return;
    }
    const double eps_k = gap / 0.8;
    (lower ? tr.eps2 : tr.eps3) = eps_k;
    const double claimed = lower ? level + eps_k : level - eps_k;
    try {
      const BandPartition part(field, {level, eps_k}, LevelSetD{level, std::nullopt});
      const DeformationField df(part, backend_for(part, opts.resolution));
      const auto cfg = FlowConfig::for_eps(eps_k, opts.flow_steps);
      const auto beta = deform_path(df, cfg, inst, candidates[pick], false, opts.workers);
      const auto ex = path_extrema(inst, beta.path);
      const double observed = lower ? ex.min_value : ex.max_value;
      const bool holds = lower ? observed >= claimed : observed <= claimed;
      tr.steps.push_back({name, claimed, observed, holds ? Verdict::Holds : Verdict::Fails});
      tr.steps.push_back({std::string("pins fixed under eta ") + (lower ? "[eps2]" : "[eps3]"), 1.0,
                          beta.pins_preserved ? 1.0 : 0.0, beta.pins_preserved ? Verdict::Holds : Verdict::Fails});
    } catch (const Error& e) {
      if (!unmeasurable(e)) throw;
      tr.steps.push_back({name, claimed, kNaN, Verdict::Vacuous});
    }
  };
  band_step(true);
  band_step(false);
  return tr;
}

std::string_view to_string(PsVerdict v) {
  switch (v) {
    case PsVerdict::Consistent: return "Consistent";
    case PsVerdict::Vacuous: return "Vacuous";
    case PsVerdict::EscapingTrend: return "EscapingTrend";
  }
  return "unknown";
}

namespace {

struct Descent {
  std::vector<PsSample> trail;
  bool on_boundary = false;
};

Descent descend(const ScalarField& field, double c, Point u, int max_iters) {
  const auto& box = field.box();
  auto objective = [&](const Point& x) {
    const Point g = field.gradient(x);
    const double d = field.evaluate(x) - c;
    return dot(g, g) + d * d;
  };
  auto sample = [&](const Point& x) { return PsSample{x, field.evaluate(x), norm(field.gradient(x))}; };

  Descent out;
  out.trail.push_back(sample(u));
  double fu = objective(u);
  double t = 1.0;
  for (int it = 0; it < max_iters && fu > 1e-24; ++it) {
    Point grad(u.dim());
    for (int i = 0; i < u.dim(); ++i) {
      const double h = 1e-6 * std::max(1.0, std::abs(u[i]));
      Point a = u, b = u;
      a[i] += h;
      b[i] -= h;
      grad[i] = (objective(a) - objective(b)) / (2.0 * h);
    }
    bool accepted = false;
    for (int k = 0; k < 60; ++k, t *= 0.5) {
      const Point next = box.clamp(u - t * grad);
      const double fn = objective(next);
      if (fn <= fu - 1e-4 * dot(grad, u - next) && !(next == u)) {
        u = next;
        fu = fn;
        accepted = true;
        break;
      }
    }
    if (!accepted) break;
    out.trail.push_back(sample(u));
    t = std::min(2.0 * t, 1.0);
  }
  out.on_boundary = box.on_boundary(u);
  return out;
}

double band_min_grad(const ScalarField& field, double c, double hw, std::vector<int> resolution) {
  const auto& box = field.box();
  if (resolution.size() == 1 && box.dim() > 1) resolution.assign(box.dim(), resolution.front());
  auto in_band = [&](double phi) { return std::abs(phi - c) <= hw; };
  double best = kInf;
  Point arg;
  for_each_grid_point(box, resolution, [&](std::size_t, const std::vector<int>&, const Point& u) {
    if (!in_band(field.evaluate(u))) return;
    const double g = norm(field.gradient(u));
    if (g < best) {
      best = g;
      arg = u;
    }
  });
  if (!std::isfinite(best)) return best;

  Point cell(box.dim());
  for (int i = 0; i < box.dim(); ++i) cell[i] = (box.hi()[i] - box.lo()[i]) / (resolution[i] - 1);
  for (int round = 0; round < 4; ++round) {
    Point lo(box.dim()), hi(box.dim());
    for (int i = 0; i < box.dim(); ++i) {
      lo[i] = std::max(box.lo()[i], arg[i] - cell[i]);
      hi[i] = std::min(box.hi()[i], arg[i] + cell[i]);
    }
    const DomainBox local(lo, hi);
    for_each_grid_point(local, std::vector<int>(box.dim(), 11),
                        [&](std::size_t, const std::vector<int>&, const Point& u) {
                          if (!in_band(field.evaluate(u))) return;
                          const double g = norm(field.gradient(u));
                          if (g < best) {
                            best = g;
                            arg = u;
                          }
                        });
    cell = 0.2 * cell;
  }
  return best;
}

}  // namespace

PSReport ps_probe(const MountainPassInstance& inst, double c, const PsOptions& opts) {
  if (!(opts.band_halfwidth > 0.0)) throw Error(ErrorCode::InvalidConfig, "band_halfwidth must be > 0");
  if (opts.samples < 1) throw Error(ErrorCode::InvalidConfig, "ps samples must be >= 1");
  if (!(opts.grad_tol > 0.0)) throw Error(ErrorCode::InvalidConfig, "grad_tol must be > 0");
  const auto& field = inst.field;
  const auto& box = field.box();

  std::vector<Point> starts;
  std::mt19937_64 rng(opts.seed);
  for (int k = 0; k < opts.samples; ++k) starts.push_back(box.sample_uniform(rng));
  std::vector<Descent> runs(starts.size());
  parallel_for(starts.size(), opts.workers,
               [&](std::size_t k) { runs[k] = descend(field, c, starts[k], opts.max_iters); });

  PSReport rep;
  rep.level = c;
  rep.band_min_grad = band_min_grad(field, c, opts.band_halfwidth, opts.resolution);

  const double link = 1e-2 * box.diagonal();
  std::vector<std::vector<PsSample>> clusters;
  for (const auto& run : runs) {
    const PsSample& end = run.trail.back();
    if (run.on_boundary || end.grad_norm >= opts.grad_tol || std::abs(end.phi - c) > opts.band_halfwidth) continue;
    auto it = std::find_if(clusters.begin(), clusters.end(), [&](const auto& cl) {
      return std::any_of(cl.begin(), cl.end(), [&](const PsSample& s) { return distance(s.point, end.point) <= link; });
    });
    if (it == clusters.end()) clusters.push_back({end});
    else it->push_back(end);
  }
  if (!clusters.empty()) {
    rep.verdict = PsVerdict::Consistent;
    for (const auto& cl : clusters) {
      const auto best = std::min_element(cl.begin(), cl.end(),
                                         [](const PsSample& a, const PsSample& b) { return a.grad_norm < b.grad_norm; });
      rep.accumulation_points.push_back(best->point);
    }
    return rep;
  }

  const Descent* escaping = nullptr;
  for (const auto& run : runs) {
    if (!run.on_boundary || !(run.trail.back().grad_norm < run.trail.front().grad_norm)) continue;
    if (!escaping || run.trail.back().grad_norm < escaping->trail.back().grad_norm) escaping = &run;
  }
  if (escaping) {
    rep.verdict = PsVerdict::EscapingTrend;
    const Point& origin = escaping->trail.front().point;
    for (const auto& s : escaping->trail) {
      if (rep.sample_sequence.empty()) {
        rep.sample_sequence.push_back(s);
        continue;
      }
      const auto& last = rep.sample_sequence.back();
      if (s.grad_norm <= last.grad_norm && distance(s.point, origin) > distance(last.point, origin))
        rep.sample_sequence.push_back(s);
    }
    return rep;
  }
  rep.verdict = PsVerdict::Vacuous;
  return rep;
}

GeometryCheckResult check_mpt_geometry(const MountainPassInstance& inst, int sphere_samples, std::uint64_t seed) {
  if (!inst.radius || !(*inst.radius > 0.0)) throw Error(ErrorCode::InvalidInstance, "geometry check needs r > 0");
  if (!(norm(inst.pin_e) > *inst.radius)) throw Error(ErrorCode::InvalidInstance, "geometry check needs |e| > r");
  if (sphere_samples < 1) throw Error(ErrorCode::InvalidConfig, "sphere_samples must be >= 1");
  const auto& field = inst.field;
  const double r = *inst.radius;
  const int dim = field.dim();

  GeometryCheckResult res;
  res.r = r;
  res.phi_at_zero = field.evaluate(Point(dim));
  res.phi_at_e = field.evaluate(inst.pin_e);
  res.b = kInf;
  auto visit = [&](const Point& u) {
    const double v = field.evaluate(u);
    if (v < res.b) {
      res.b = v;
      res.argmin = u;
    }
  };

  std::mt19937_64 rng(seed);
  if (dim == 1) {
    visit(Point{-r});
    visit(Point{r});
  } else if (dim == 2) {
    std::uniform_real_distribution<double> angle(0.0, 2.0 * std::numbers::pi);
    for (int k = 0; k < sphere_samples; ++k) {
      const double a = angle(rng);
      visit(Point{r * std::cos(a), r * std::sin(a)});
    }
  } else {
    std::normal_distribution<double> gauss(0.0, 1.0);
    for (int k = 0; k < sphere_samples; ++k) {
      Point g{gauss(rng), gauss(rng), gauss(rng)};
      const double n = norm(g);
      if (n == 0.0) continue;
      visit((r / n) * g);
    }
  }
  res.verdict = res.b > res.phi_at_zero && res.phi_at_zero >= res.phi_at_e;
  return res;
}

}  // namespace deflab
