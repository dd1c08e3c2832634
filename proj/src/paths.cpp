#include "deflab/paths.hpp"

#include <cmath>
#include <iomanip>
#include <random>

#include "deflab/util.hpp"

namespace deflab {

void MountainPassInstance::validate() const {
  if (pin_zero.dim() != field.dim() || pin_e.dim() != field.dim())
    throw Error(ErrorCode::InvalidConfig, "pin dimension does not match the field");
  if (pin_zero == pin_e) throw Error(ErrorCode::InvalidConfig, "pin_zero and pin_e must differ");
  if (radius) {
    if (!(*radius > 0.0)) throw Error(ErrorCode::InvalidConfig, "radius must be > 0");
    if (pin_mode == PinMode::Endpoints && !(norm(pin_e) > *radius))
      throw Error(ErrorCode::InvalidConfig, "endpoint geometry requires |e| > r");
  }
}

std::pair<int, int> pin_indices(PinMode mode, int m) {
  if (mode == PinMode::Interior) return {m / 4, m / 2};
  return {0, m};
}

bool is_pin(PinMode mode, int m, int i) {
  const auto [a, b] = pin_indices(mode, m);
  return i == a || i == b;
}

DiscretePath make_path(const MountainPassInstance& inst, int m, const PathInit& init) {
  if (m < 8 || m % 4 != 0) throw Error(ErrorCode::InvalidM, "M must be a multiple of 4 and >= 8");
  inst.validate();
  const auto [iz, ie] = pin_indices(inst.pin_mode, m);

  DiscretePath path{m, std::vector<Point>(static_cast<std::size_t>(m) + 1)};
  for (int i = 0; i <= m; ++i) {
    if (i <= iz) {
      path.nodes[i] = inst.pin_zero;
    } else if (i >= ie) {
      path.nodes[i] = inst.pin_e;
    } else {
      const double s = static_cast<double>(i - iz) / (ie - iz);
      path.nodes[i] = (1.0 - s) * inst.pin_zero + s * inst.pin_e;
    }
  }

  if (const auto* jitter = std::get_if<JitterInit>(&init)) {
    std::mt19937_64 rng(jitter->seed);
    std::normal_distribution<double> noise(0.0, jitter->scale);
    for (int i = 0; i <= m; ++i) {
      if (i == iz || i == ie) continue;
      Point& p = path.nodes[i];
      for (int k = 0; k < p.dim(); ++k) p[k] += noise(rng);
      p = inst.field.box().clamp(p);
    }
  }
  return path;
}

PathExtrema path_extrema(const MountainPassInstance& inst, const DiscretePath& path, int samples_per_segment) {
  PathExtrema ex;
  bool first = true;
  auto visit = [&](double v, int index) {
    if (first || v < ex.min_value) {
      ex.min_value = v;
      ex.min_arg_index = index;
    }
    if (first || v > ex.max_value) {
      ex.max_value = v;
      ex.max_arg_index = index;
    }
    first = false;
  };
  for (int i = 0; i <= path.m; ++i) {
    visit(inst.field.evaluate(path.nodes[i]), i);
    if (i == path.m) break;
    for (int s = 1; s <= samples_per_segment; ++s) {
      const double w = static_cast<double>(s) / (samples_per_segment + 1);
      visit(inst.field.evaluate((1.0 - w) * path.nodes[i] + w * path.nodes[i + 1]), i);
    }
  }
  return ex;
}

DeformedPath deform_path(const DeformationField& df, const FlowConfig& cfg, const MountainPassInstance& inst,
                         const DiscretePath& path, bool require_pins, int workers) {
  if (inst.field.dim() != df.field().dim()) throw Error(ErrorCode::InvalidPoint, "path and field dimensions differ");
  DeformedPath out{DiscretePath{path.m, std::vector<Point>(path.nodes.size())}, true};
  parallel_for(path.nodes.size(), workers, [&](std::size_t i) { out.path.nodes[i] = eta(df, cfg, path.nodes[i]); });

  const auto [iz, ie] = pin_indices(inst.pin_mode, path.m);
  out.pins_preserved = bit_equal(out.path.nodes[iz], inst.pin_zero) && bit_equal(out.path.nodes[ie], inst.pin_e);
  if (require_pins && !out.pins_preserved)
    throw Error(ErrorCode::PinMoved, "deformation moved a pinned node; the image path leaves the pinned class");
  return out;
}

void write_path_csv(std::ostream& os, const MountainPassInstance& inst, const DiscretePath& path) {
  os << "index,t";
  for (int i = 0; i < inst.field.dim(); ++i) os << ",x" << (i + 1);
  os << ",phi\n" << std::setprecision(17);
  for (int i = 0; i <= path.m; ++i) {
    os << i << ',' << path.t(i);
    for (int k = 0; k < inst.field.dim(); ++k) os << ',' << path.nodes[i][k];
    os << ',' << inst.field.evaluate(path.nodes[i]) << '\n';
  }
}

}  // namespace deflab
