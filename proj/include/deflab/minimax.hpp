#pragma once

#include <cstdint>
#include <optional>
#include <string>
#include <vector>

#include "deflab/paths.hpp"

namespace deflab {

struct MinimaxOptions {
  int ensemble_size = 8;
  int m = 64;
  int max_iters = 500;
  double tol = 1e-9;
  std::uint64_t seed = 0;
  double jitter_scale = 0.1;
  int workers = 1;
  void validate() const;
};

/// value is c2 (inf-max) or c1 (sup-min); witness_point is the extremal node
/// of the best path (u-triangle for c2, u-star for c1).
struct MinimaxResult {
  double value = 0.0;
  DiscretePath witness_path;
  Point witness_point;
  int witness_index = 0;
  int best_member = 0;
  int iterations = 0;
  bool converged = false;
  std::vector<double> history;
};

/// Ensemble elastic-path search. Member 0 starts on the axis path, the others
/// on jittered copies with derived seeds. Each iteration pushes the worst node
/// (and its free neighbours at half weight) downhill with backtracking, then
/// redistributes free nodes toward uniform arc length. Moves are only kept
/// when they improve (or, for redistribution, do not worsen) the objective.
MinimaxResult optimize_c2(const MountainPassInstance& inst, const MinimaxOptions& opts);
MinimaxResult optimize_c1(const MountainPassInstance& inst, const MinimaxOptions& opts);

struct ConclusionCheck {
  bool holds = false;
  double lhs = 0.0;
  std::optional<double> lower;
  std::optional<double> upper;
};

/// (I)  c1 - 2eps <= phi(u*) <= c1 + 2eps     (II) |grad phi(u*)| < 2eps
/// (III) c2 - 2eps <= phi(u^) <= c2 + 2eps    (IV) |grad phi(u^)| < 2eps
struct Conclusions {
  double eps = 0.0;
  ConclusionCheck i, ii, iii, iv;
};

Conclusions check_conclusions(const MountainPassInstance& inst, const MinimaxResult& c1, const MinimaxResult& c2,
                              double eps);

enum class Verdict { Holds, Fails, Vacuous };
std::string_view to_string(Verdict v);

struct StepRecord {
  std::string name;
  double claimed = 0.0;
  double observed = 0.0;
  Verdict verdict = Verdict::Vacuous;
};

enum class ProofCase { C1LessC2, C1GreaterC2 };
std::string_view to_string(ProofCase c);

struct ProofTrace {
  double eps = 0.0;
  double eps1 = 0.0;
  ProofCase proof_case = ProofCase::C1LessC2;
  RegionSpec d_choice;
  RegionSpec d_choice_upper;
  std::optional<double> eps2;
  std::optional<double> eps3;
  std::vector<StepRecord> steps;
};

struct TraceOptions {
  int flow_steps = 1000;
  std::vector<int> resolution{201};
  int ensemble_size = 16;
  int m = 64;
  double jitter_scale = 0.1;
  std::uint64_t seed = 0;
  int workers = 1;
};

/// Replays the contradiction argument numerically: eps1 and the separation
/// inequality, pin preservation under the flows with D = {phi = c1} and
/// D = {phi = c2}, and the post-deformation extremum bounds on a path whose
/// extremum sits in the eps2 (resp. eps3) band.
ProofTrace trace_proof_argument(const MountainPassInstance& inst, double c1, double c2, double eps,
                                const TraceOptions& opts);

enum class PsVerdict { Consistent, Vacuous, EscapingTrend };
std::string_view to_string(PsVerdict v);

struct PsSample {
  Point point;
  double phi = 0.0;
  double grad_norm = 0.0;
};

struct PSReport {
  double level = 0.0;
  PsVerdict verdict = PsVerdict::Vacuous;
  std::vector<Point> accumulation_points;
  std::vector<PsSample> sample_sequence;
  // +inf when the band misses the box.
  double band_min_grad = 0.0;
};

struct PsOptions {
  double band_halfwidth = 0.1;
  int samples = 64;
  double grad_tol = 1e-3;
  int max_iters = 400;
  std::vector<int> resolution{201};
  std::uint64_t seed = 0;
  int workers = 1;
};

/// Minimizes |grad phi|^2 + (phi - c)^2 from random starts and classifies the
/// end points: in-band near-critical clusters, escape toward the box boundary,
/// or neither.
PSReport ps_probe(const MountainPassInstance& inst, double c, const PsOptions& opts);

struct GeometryCheckResult {
  double b = 0.0;
  double r = 0.0;
  double phi_at_zero = 0.0;
  double phi_at_e = 0.0;
  Point argmin;
  bool verdict = false;
};

/// b = min of phi over uniform samples of the sphere |u| = r; verdict is
/// b > phi(0) >= phi(e).
GeometryCheckResult check_mpt_geometry(const MountainPassInstance& inst, int sphere_samples, std::uint64_t seed);

}  // namespace deflab
