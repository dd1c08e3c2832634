#include "deflab/bands.hpp"

#include <algorithm>
#include <cmath>
#include <iomanip>
#include <limits>

#include <boost/geometry.hpp>
#include <boost/geometry/index/rtree.hpp>

namespace deflab {

namespace bg = boost::geometry;
namespace bgi = boost::geometry::index;

namespace {

constexpr double kInf = std::numeric_limits<double>::infinity();

// Clouds are stored in 3-D with unused axes zeroed; distances are unaffected.
using CloudPoint = bg::model::point<double, 3, bg::cs::cartesian>;
using CloudTree = bgi::rtree<CloudPoint, bgi::quadratic<16>>;

CloudPoint to_cloud(const Point& u) {
  return {u.dim() > 0 ? u[0] : 0.0, u.dim() > 1 ? u[1] : 0.0, u.dim() > 2 ? u[2] : 0.0};
}

double nearest(const CloudTree& tree, const Point& u) {
  const CloudPoint q = to_cloud(u);
  double best = kInf;
  for (auto it = tree.qbegin(bgi::nearest(q, 1)); it != tree.qend(); ++it) best = bg::distance(q, *it);
  return best;
}

}  // namespace

std::string_view to_string(RegionTag tag) {
  switch (tag) {
    case RegionTag::Outside: return "OUTSIDE";
    case RegionTag::D: return "D";
    case RegionTag::B: return "B";
    case RegionTag::C: return "C";
    case RegionTag::AOther: return "A_OTHER";
  }
  return "?";
}

// ---------------------------------------------------------------------------
// BandPartition

BandPartition::BandPartition(ScalarField field, DeformationParams params, RegionSpec d_spec)
    : field_(std::move(field)), params_(params), d_spec_(std::move(d_spec)) {
  if (!std::isfinite(params_.c)) throw Error(ErrorCode::InvalidConfig, "c must be finite");
  if (!(params_.eps > 0.0) || !std::isfinite(params_.eps)) throw Error(ErrorCode::InvalidConfig, "eps must be > 0");
  if (!(params_.min_grad_floor > 0.0)) throw Error(ErrorCode::InvalidConfig, "min_grad_floor must be > 0");

  const double c = params_.c, eps = params_.eps;
  // Allowed phi-values for D: inside (c - 0.5eps, c + 0.6eps) and at least
  // 0.05eps away from B = [c-eps, c-0.6eps] and C = [c+0.6eps, c+eps].
  const double lo_open = c - 0.5 * eps, hi_open = c + 0.6 * eps;
  const double lo_sep = c - 0.55 * eps, hi_sep = c + 0.55 * eps;
  auto check_value = [&](double v, double thickness) {
    if (!(v > lo_open && v < hi_open))
      throw Error(ErrorCode::InvalidConfig, "D level must lie strictly inside (c - 0.5eps, c + 0.6eps)");
    if (v - thickness < lo_sep || v + thickness > hi_sep)
      throw Error(ErrorCode::InvalidConfig, "D comes within 0.05eps of the B or C band");
  };

  if (auto* ls = std::get_if<LevelSetD>(&d_spec_)) {
    thickness_ = ls->thickness.value_or(1e-6 * eps);
    if (!(thickness_ >= 0.0)) throw Error(ErrorCode::InvalidConfig, "D thickness must be >= 0");
    check_value(ls->value, thickness_);
  } else if (auto* pc = std::get_if<PointCloudD>(&d_spec_)) {
    thickness_ = 1e-6 * eps;
    for (const auto& p : pc->points) {
      if (p.dim() != field_.dim()) throw Error(ErrorCode::InvalidConfig, "D point dimension mismatch");
      check_value(field_.evaluate(p), 0.0);
    }
  }
}

ValueBand BandPartition::a_range() const noexcept {
  return {params_.c - 2.0 * params_.eps, params_.c + 2.0 * params_.eps};
}
ValueBand BandPartition::b_range() const noexcept {
  return {params_.c - params_.eps, params_.c - 0.6 * params_.eps};
}
ValueBand BandPartition::c_range() const noexcept {
  return {params_.c + 0.6 * params_.eps, params_.c + params_.eps};
}

bool BandPartition::in_d(const Point& u, double phi) const {
  if (const auto* ls = std::get_if<LevelSetD>(&d_spec_)) return std::abs(phi - ls->value) <= thickness_;
  if (const auto* pc = std::get_if<PointCloudD>(&d_spec_)) {
    for (const auto& p : pc->points)
      if (distance(p, u) <= thickness_) return true;
  }
  return false;
}

RegionTag BandPartition::classify(const Point& u) const { return classify(u, field_.evaluate(u)); }

RegionTag BandPartition::classify(const Point& u, double phi) const {
  if (in_d(u, phi)) return RegionTag::D;
  if (!a_range().contains(phi)) return RegionTag::Outside;
  if (b_range().contains(phi)) return RegionTag::B;
  if (c_range().contains(phi)) return RegionTag::C;
  return RegionTag::AOther;
}

double BandPartition::distance_to_d(const Point& u, double phi) const {
  if (const auto* ls = std::get_if<LevelSetD>(&d_spec_)) {
    // First-order estimate |phi - v| / |grad phi|; exact for affine fields.
    const double gap = std::max(0.0, std::abs(phi - ls->value) - thickness_);
    if (gap == 0.0) return 0.0;
    const double g = std::max(norm(field_.gradient(u)), params_.min_grad_floor);
    return std::min(gap / g, field_.box().diagonal());
  }
  if (const auto* pc = std::get_if<PointCloudD>(&d_spec_)) {
    double best = kInf;
    for (const auto& p : pc->points) best = std::min(best, distance(p, u));
    return std::max(0.0, best - thickness_);
  }
  return kInf;
}

// ---------------------------------------------------------------------------
// DistanceBackend

struct DistanceBackend::Clouds {
  CloudTree b, c, out;
};

DistanceBackend DistanceBackend::exact_affine(const BandPartition& part) {
  const auto& affine = part.field().affine();
  if (!affine) throw Error(ErrorCode::InvalidConfig, "exact_affine backend requires an affine field");
  if (!(norm(affine->a) > 0.0)) throw Error(ErrorCode::InvalidConfig, "exact_affine backend requires a != 0");
  return DistanceBackend();
}

DistanceBackend DistanceBackend::sampled(const BandPartition& part, std::vector<int> resolution) {
  const auto& box = part.field().box();
  if (resolution.size() == 1 && box.dim() > 1) resolution.assign(box.dim(), resolution.front());
  if (static_cast<int>(resolution.size()) != box.dim())
    throw Error(ErrorCode::InvalidConfig, "resolution must have one entry per axis");
  for (int r : resolution)
    if (r < 2) throw Error(ErrorCode::InvalidConfig, "sampled backend resolution must be >= 2");

  const auto& field = part.field();
  std::vector<Point> nodes;
  std::vector<double> values;
  std::vector<CloudPoint> b, c, out;
  for_each_grid_point(box, resolution, [&](std::size_t, const std::vector<int>&, const Point& u) {
    const double phi = field.evaluate(u);
    nodes.push_back(u);
    values.push_back(phi);
    switch (part.classify(u, phi)) {
      case RegionTag::B: b.push_back(to_cloud(u)); break;
      case RegionTag::C: c.push_back(to_cloud(u)); break;
      case RegionTag::Outside: out.push_back(to_cloud(u)); break;
      default: break;
    }
  });

  // Grid nodes alone miss band edges by up to a cell; add the points where
  // phi crosses a band boundary along each axis edge of the grid.
  const ValueBand a_band = part.a_range();
  auto add_crossings = [&](std::vector<CloudPoint>& cloud, auto&& member, auto&& boundary_level) {
    std::vector<std::size_t> stride(box.dim(), 1);
    for (int i = box.dim() - 2; i >= 0; --i) stride[i] = stride[i + 1] * resolution[i + 1];
    for_each_grid_point(box, resolution, [&](std::size_t n, const std::vector<int>& idx, const Point&) {
      for (int axis = 0; axis < box.dim(); ++axis) {
        if (idx[axis] + 1 >= resolution[axis]) continue;
        const std::size_t m = n + stride[axis];
        const bool in_n = member(values[n]), in_m = member(values[m]);
        if (in_n == in_m) continue;
        Point inside = in_n ? nodes[n] : nodes[m];
        Point outside = in_n ? nodes[m] : nodes[n];
        const double level = boundary_level(in_n ? values[n] : values[m], in_n ? values[m] : values[n]);
        const bool outside_above = field.evaluate(outside) > level;
        for (int it = 0; it < 48; ++it) {
          const Point mid = 0.5 * (inside + outside);
          const double v = field.evaluate(mid);
          if (!member(v) && (v > level) == outside_above) outside = mid;
          else inside = mid;
        }
        cloud.push_back(to_cloud(inside));
      }
    });
  };
  auto band_crossings = [&](std::vector<CloudPoint>& cloud, ValueBand band) {
    add_crossings(cloud, [band](double v) { return band.contains(v); },
                  [band](double, double v_out) { return v_out < band.lo ? band.lo : band.hi; });
  };
  band_crossings(b, part.b_range());
  band_crossings(c, part.c_range());
  add_crossings(out, [a_band](double v) { return !a_band.contains(v); },
                [a_band](double v_member, double) { return v_member < a_band.lo ? a_band.lo : a_band.hi; });

  DistanceBackend backend;
  auto clouds = std::make_shared<Clouds>();
  clouds->b = CloudTree(b.begin(), b.end());
  clouds->c = CloudTree(c.begin(), c.end());
  clouds->out = CloudTree(out.begin(), out.end());
  backend.sampled_ = std::move(clouds);
  double diag2 = 0.0;
  for (int i = 0; i < box.dim(); ++i) {
    const double h = (box.hi()[i] - box.lo()[i]) / (resolution[i] - 1);
    diag2 += h * h;
  }
  backend.cell_diagonal_ = std::sqrt(diag2);
  backend.resolution_ = std::move(resolution);
  return backend;
}

std::size_t DistanceBackend::cloud_size(Region r) const {
  if (!sampled_) return 0;
  switch (r) {
    case Region::B: return sampled_->b.size();
    case Region::C: return sampled_->c.size();
    case Region::ComplementOfA: return sampled_->out.size();
  }
  return 0;
}

double DistanceBackend::distance(const BandPartition& part, const Point& u, double phi, Region region) const {
  const RegionTag tag = part.classify(u, phi);
  switch (region) {
    case Region::B:
      if (tag == RegionTag::B) return 0.0;
      break;
    case Region::C:
      if (tag == RegionTag::C) return 0.0;
      break;
    case Region::ComplementOfA:
      if (tag == RegionTag::Outside || tag == RegionTag::D) return 0.0;
      break;
  }

  if (!sampled_) {
    if (!part.field().affine()) throw Error(ErrorCode::InvalidConfig, "exact backend used with a non-affine field");
    const auto& aff = *part.field().affine();
    const double an = norm(aff.a);
    auto slab = [&](ValueBand band) { return std::max({0.0, band.lo - phi, phi - band.hi}) / an; };
    switch (region) {
      case Region::B: return slab(part.b_range());
      case Region::C: return slab(part.c_range());
      case Region::ComplementOfA: {
        const ValueBand a = part.a_range();
        const double out = std::min(phi - a.lo, a.hi - phi) / an;
        return std::min(out, part.distance_to_d(u, phi));
      }
    }
  }

  switch (region) {
    case Region::B:
      if (sampled_->b.empty()) throw Error(ErrorCode::EmptyRegion, "band B has no grid points in the box");
      return nearest(sampled_->b, u);
    case Region::C:
      if (sampled_->c.empty()) throw Error(ErrorCode::EmptyRegion, "band C has no grid points in the box");
      return nearest(sampled_->c, u);
    case Region::ComplementOfA: {
      // An empty out-of-band cloud means X\A is (at most) D inside the box.
      const double out = sampled_->out.empty() ? kInf : nearest(sampled_->out, u);
      return std::min(out, part.distance_to_d(u, phi));
    }
  }
  return kInf;
}

double region_distance(const BandPartition& part, const DistanceBackend& backend, const Point& u, Region region) {
  return backend.distance(part, u, part.field().evaluate(u), region);
}

double psi(const BandPartition& part, const DistanceBackend& backend, const Point& u) {
  const double phi = part.field().evaluate(u);
  switch (part.classify(u, phi)) {
    case RegionTag::B: return 1.0;
    case RegionTag::C: return -1.0;
    case RegionTag::Outside:
    case RegionTag::D: return 0.0;
    case RegionTag::AOther: break;
  }
  const double db = backend.distance(part, u, phi, Region::B);
  const double dc = backend.distance(part, u, phi, Region::C);
  const double dxa = backend.distance(part, u, phi, Region::ComplementOfA);

  double num, den;
  if (std::isinf(dxa)) {
    num = dc - db;
    den = dc + db;
  } else {
    num = (dc - db) * dxa;
    den = (dc + db) * dxa + db * dc;
  }
  if (std::abs(den) < 1e-300) {
    if (std::abs(num) < 1e-300) return 0.0;
    throw Error(ErrorCode::DegeneratePartition, "cutoff denominator vanished (D touching B or C?)");
  }
  return num / den;
}

void write_region_csv(std::ostream& os, const BandPartition& part, const std::vector<int>& resolution,
                      const DistanceBackend* backend) {
  const auto& box = part.field().box();
  for (int i = 0; i < box.dim(); ++i) os << 'x' << (i + 1) << ',';
  os << "phi,tag" << (backend ? ",psi" : "") << '\n';
  os << std::setprecision(17);
  for_each_grid_point(box, resolution, [&](std::size_t, const std::vector<int>&, const Point& u) {
    const double phi = part.field().evaluate(u);
    for (int i = 0; i < u.dim(); ++i) os << u[i] << ',';
    os << phi << ',' << to_string(part.classify(u, phi));
    if (backend) os << ',' << psi(part, *backend, u);
    os << '\n';
  });
}

}  // namespace deflab
