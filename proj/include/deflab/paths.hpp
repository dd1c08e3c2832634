#pragma once

#include <cstdint>
#include <optional>
#include <ostream>
#include <variant>
#include <vector>

#include "deflab/flow.hpp"

namespace deflab {

/// Interior: pins at t = 1/4 and t = 1/2 with free tails.
/// Endpoints: the classical pinning at t = 0 and t = 1.
enum class PinMode { Interior, Endpoints };

struct MountainPassInstance {
  ScalarField field;
  Point pin_zero;
  Point pin_e;
  PinMode pin_mode = PinMode::Interior;
  std::optional<double> radius;

  void validate() const;
};

/// gamma sampled at t_i = i / M. M is a multiple of 4 so the pins sit on nodes.
struct DiscretePath {
  int m = 0;
  std::vector<Point> nodes;

  double t(int i) const noexcept { return static_cast<double>(i) / m; }
};

struct PathEnsemble {
  std::vector<DiscretePath> members;
  std::uint64_t seed = 0;
};

std::pair<int, int> pin_indices(PinMode mode, int m);
bool is_pin(PinMode mode, int m, int i);

struct AxisInit {};
struct JitterInit {
  double scale = 0.1;
  std::uint64_t seed = 0;
};
using PathInit = std::variant<AxisInit, JitterInit>;

/// Axis: straight segment between the pins, tails collapsed onto them.
/// Jitter: Axis plus Gaussian noise on free nodes, clamped to the box.
DiscretePath make_path(const MountainPassInstance& inst, int m, const PathInit& init);

struct PathExtrema {
  double min_value = 0.0;
  int min_arg_index = 0;
  double max_value = 0.0;
  int max_arg_index = 0;
};

/// Node extrema plus optional interior samples per segment (attributed to the
/// segment's left node). Ties go to the lowest index.
PathExtrema path_extrema(const MountainPassInstance& inst, const DiscretePath& path, int samples_per_segment = 0);

struct DeformedPath {
  DiscretePath path;
  bool pins_preserved = true;
};

/// beta = eta o gamma, node by node. With require_pins, a pin whose image is
/// not bit-identical to the pin raises PinMoved.
DeformedPath deform_path(const DeformationField& df, const FlowConfig& cfg, const MountainPassInstance& inst,
                         const DiscretePath& path, bool require_pins = true, int workers = 1);

/// CSV: index,t,x1..xn,phi
void write_path_csv(std::ostream& os, const MountainPassInstance& inst, const DiscretePath& path);

}  // namespace deflab
