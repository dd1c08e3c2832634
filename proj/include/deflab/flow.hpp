#pragma once

#include <cstdint>
#include <optional>
#include <ostream>
#include <vector>

#include "deflab/bands.hpp"

namespace deflab {

/// Integration settings. The horizon is always 2 eps of the partition.
struct FlowConfig {
  double step = 1e-3;
  double horizon = 1.0;
  int record_every = 1;

  static FlowConfig for_eps(double eps, int steps = 1000, int record_every = 1);
  void validate() const;
};

/// psi, f and eta for one partition. Immutable and safe to share.
class DeformationField {
 public:
  DeformationField(BandPartition part, DistanceBackend backend);

  const BandPartition& partition() const noexcept { return part_; }
  const DistanceBackend& backend() const noexcept { return backend_; }
  const ScalarField& field() const noexcept { return part_.field(); }
  double eps() const noexcept { return part_.params().eps; }

  double psi(const Point& u) const { return deflab::psi(part_, backend_, u); }

  /// f(u) = psi(u) |grad phi(u)|^-2 grad phi(u); exactly zero where psi is.
  Point vector_field(const Point& u) const;

 private:
  BandPartition part_;
  DistanceBackend backend_;
};

struct Trajectory {
  std::vector<double> times;
  std::vector<Point> points;
  std::vector<double> phi_values;
  std::vector<double> psi_values;
  // Set when every integration state carried the same region tag.
  std::optional<RegionTag> confined_in;
  bool clamped_at_boundary = false;
  bool constant = false;
  // Integration states with |grad phi| >= 2 eps and |f| > 1/(2 eps) + 1e-12.
  int speed_bound_violations = 0;
};

/// Classical RK4 on d(sigma)/dt = f(sigma), sigma(0) = u, over [0, 2 eps].
/// A start with f(u) == 0 yields the constant solution without stepping.
Trajectory integrate_flow(const DeformationField& df, const FlowConfig& cfg, const Point& u);

/// sigma(2 eps, u); bit-identical to u where f(u) == 0.
Point eta(const DeformationField& df, const FlowConfig& cfg, const Point& u);

struct BandClaimRecord {
  int sampled = 0;
  int confined = 0;
  int confined_satisfying = 0;
  double unconditional_fraction = 0.0;
};

struct DeformationReport {
  double hypothesis_min_grad = 0.0;
  int a_prime_violations = 0;
  BandClaimRecord b_prime;
  BandClaimRecord c_prime;
  double eq31_max_residual = 0.0;
  int clamped_trajectories = 0;
  int speed_bound_violations = 0;
};

struct VerifyOptions {
  int samples = 1000;
  std::uint64_t seed = 0;
  double claim_tol = 1e-3;
  int workers = 0;
  // Number of non-constant trajectories to hand back for dumping.
  int keep_trajectories = 0;
};

struct DeformationRun {
  DeformationReport report;
  std::vector<Trajectory> kept;
};

/// Samples the box uniformly, integrates every sample and tallies the
/// deformation properties. The hypothesis on |grad phi| is measured, not
/// required. Throws EmptyRegion when no sample lands in B or in C.
DeformationRun verify_deformation(const DeformationField& df, const FlowConfig& cfg, const VerifyOptions& opts);

/// Max over adjacent records of |dphi/dt - psi(spatial midpoint)|.
double flow_identity_residual(const DeformationField& df, const Trajectory& traj);

/// CSV: t,x1..xn,phi,psi
void write_trajectory_csv(std::ostream& os, const Trajectory& traj);

}  // namespace deflab
