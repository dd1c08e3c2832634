#pragma once

#include <memory>
#include <optional>
#include <ostream>
#include <variant>
#include <vector>

#include "deflab/scalarfield.hpp"

namespace deflab {

/// Center level c, half-width eps, and the gradient floor below which the
/// rescaled field is considered singular.
struct DeformationParams {
  double c = 0.0;
  double eps = 1.0;
  double min_grad_floor = 1e-8;
  friend bool operator==(const DeformationParams&, const DeformationParams&) = default;
};

struct EmptyD {
  friend bool operator==(const EmptyD&, const EmptyD&) = default;
};

/// {|phi - value| <= thickness}; thickness defaults to 1e-6 * eps.
struct LevelSetD {
  double value = 0.0;
  std::optional<double> thickness;
  friend bool operator==(const LevelSetD&, const LevelSetD&) = default;
};

struct PointCloudD {
  std::vector<Point> points;
  friend bool operator==(const PointCloudD&, const PointCloudD&) = default;
};

using RegionSpec = std::variant<EmptyD, LevelSetD, PointCloudD>;

enum class RegionTag { Outside, D, B, C, AOther };
enum class Region { B, C, ComplementOfA };

std::string_view to_string(RegionTag tag);

struct ValueBand {
  double lo = 0.0;
  double hi = 0.0;
  bool contains(double v) const noexcept { return v >= lo && v <= hi; }
};

/// The level bands around c:
///   A = phi^-1[c-2eps, c+2eps] \ D,  B = phi^-1[c-eps, c-0.6eps],
///   C = phi^-1[c+0.6eps, c+eps],     D as given by the RegionSpec.
/// Construction rejects D specs whose phi-values come within 0.05 eps of the
/// B or C value ranges; otherwise the cutoff would be 0/0 on D.
class BandPartition {
 public:
  BandPartition(ScalarField field, DeformationParams params, RegionSpec d_spec = EmptyD{});

  const ScalarField& field() const noexcept { return field_; }
  const DeformationParams& params() const noexcept { return params_; }
  const RegionSpec& d_spec() const noexcept { return d_spec_; }

  ValueBand a_range() const noexcept;
  ValueBand b_range() const noexcept;
  ValueBand c_range() const noexcept;
  double d_thickness() const noexcept { return thickness_; }

  RegionTag classify(const Point& u) const;
  RegionTag classify(const Point& u, double phi) const;

  // +inf when D is empty.
  double distance_to_d(const Point& u, double phi) const;

 private:
  bool in_d(const Point& u, double phi) const;

  ScalarField field_;
  DeformationParams params_;
  RegionSpec d_spec_;
  double thickness_ = 0.0;
};

/// Distances from a point to B, C and X\A. Two flavors: closed-form slabs for
/// affine fields, and nearest-neighbor queries against grid point clouds for
/// everything else. Both return exactly 0 for members of the region.
class DistanceBackend {
 public:
  static DistanceBackend exact_affine(const BandPartition& part);
  static DistanceBackend sampled(const BandPartition& part, std::vector<int> resolution);

  bool exact() const noexcept { return sampled_ == nullptr; }
  const std::vector<int>& resolution() const noexcept { return resolution_; }
  // Grid-cell diagonal (0 for the exact backend).
  double cell_diagonal() const noexcept { return cell_diagonal_; }
  std::size_t cloud_size(Region r) const;

  double distance(const BandPartition& part, const Point& u, double phi, Region region) const;

 private:
  struct Clouds;
  DistanceBackend() = default;

  std::shared_ptr<const Clouds> sampled_;
  std::vector<int> resolution_;
  double cell_diagonal_ = 0.0;
};

double region_distance(const BandPartition& part, const DistanceBackend& backend, const Point& u, Region region);

/// Cutoff: +1 on B, -1 on C, 0 on X\A, and
///   [d(u,C) - d(u,B)] d(u,X\A) / ([d(u,C) + d(u,B)] d(u,X\A) + d(u,B) d(u,C))
/// elsewhere.
double psi(const BandPartition& part, const DistanceBackend& backend, const Point& u);

/// Writes "x1..xn,phi,tag" (with psi appended when a backend is given) for
/// every node of a uniform grid over the field's box.
void write_region_csv(std::ostream& os, const BandPartition& part, const std::vector<int>& resolution,
                      const DistanceBackend* backend = nullptr);

/// Visits the nodes of a uniform grid over box, in row-major order with the
/// last axis fastest.
template <typename Fn>
void for_each_grid_point(const DomainBox& box, const std::vector<int>& resolution, Fn&& fn) {
  const int dim = box.dim();
  std::vector<int> idx(dim, 0);
  std::size_t total = 1;
  for (int r : resolution) total *= static_cast<std::size_t>(r);
  for (std::size_t n = 0; n < total; ++n) {
    Point u(dim);
    for (int i = 0; i < dim; ++i)
      u[i] = box.lo()[i] + (box.hi()[i] - box.lo()[i]) * idx[i] / (resolution[i] - 1);
    fn(n, idx, u);
    for (int i = dim - 1; i >= 0; --i) {
      if (++idx[i] < resolution[i]) break;
      idx[i] = 0;
    }
  }
}

}  // namespace deflab
