#include <bit>
#include <cstdint>

#include "deflab/error.hpp"
#include "deflab/point.hpp"

namespace deflab {

std::string_view to_string(ErrorCode code) {
  switch (code) {
    case ErrorCode::InvalidPoint: return "InvalidPoint";
    case ErrorCode::InvalidConfig: return "InvalidConfig";
    case ErrorCode::EmptyRegion: return "EmptyRegion";
    case ErrorCode::DegeneratePartition: return "DegeneratePartition";
    case ErrorCode::VectorFieldSingular: return "VectorFieldSingular";
    case ErrorCode::InvalidM: return "InvalidM";
    case ErrorCode::PinMoved: return "PinMoved";
    case ErrorCode::InvalidInstance: return "InvalidInstance";
    case ErrorCode::GridTooLarge: return "GridTooLarge";
  }
  return "Unknown";
}

bool bit_equal(const Point& a, const Point& b) noexcept {
  if (a.dim() != b.dim()) return false;
  for (int i = 0; i < a.dim(); ++i)
    if (std::bit_cast<std::uint64_t>(a[i]) != std::bit_cast<std::uint64_t>(b[i])) return false;
  return true;
}

}  // namespace deflab
