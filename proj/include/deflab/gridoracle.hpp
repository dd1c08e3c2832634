#pragma once

#include <cstddef>
#include <ostream>
#include <string>
#include <vector>

#include "deflab/scalarfield.hpp"

namespace deflab {

/// Axis: 2 / 4 / 6 neighbours in 1-D / 2-D / 3-D. Full: 2 / 8 / 26.
enum class Connectivity { Axis, Full };

Connectivity default_connectivity(int dim);

/// Node-valued grid graph, nodes in row-major order (last axis fastest).
class GridGraph {
 public:
  /// Samples phi at the nodes of a uniform grid over box.
  GridGraph(const ScalarField& field, const DomainBox& box, std::vector<int> resolution, Connectivity conn,
            int workers = 1);
  /// Raw values on an index grid; node coordinates are the indices themselves.
  GridGraph(std::vector<int> shape, std::vector<double> values, Connectivity conn);

  int dim() const noexcept { return static_cast<int>(shape_.size()); }
  std::size_t size() const noexcept { return values_.size(); }
  const std::vector<int>& shape() const noexcept { return shape_; }
  Connectivity connectivity() const noexcept { return conn_; }
  double value(std::size_t n) const { return values_[n]; }
  const std::vector<double>& values() const noexcept { return values_; }

  std::size_t index(const std::vector<int>& multi) const;
  std::vector<int> multi_index(std::size_t n) const;
  Point position(std::size_t n) const;
  std::size_t nearest_node(const Point& u) const;
  double spacing(int axis) const;

  /// Neighbours of n in ascending index order.
  void neighbors(std::size_t n, std::vector<std::size_t>& out) const;

 private:
  void init_offsets();

  std::vector<int> shape_;
  std::vector<double> values_;
  Connectivity conn_;
  DomainBox box_;
  std::vector<std::vector<int>> offsets_;
};

struct OracleResult {
  double value = 0.0;
  std::vector<std::size_t> witness;
  std::string method;
};

/// min over grid paths p -> q of the max node value (inf-max), by ascending
/// union-find insertion. Ties are inserted in index order.
OracleResult bottleneck_value(const GridGraph& g, std::size_t p, std::size_t q);

/// max over grid paths p -> q of the min node value (sup-min).
OracleResult widest_value(const GridGraph& g, std::size_t p, std::size_t q);

enum class PathMode { Bottleneck, Widest };

inline constexpr std::size_t kEnumerationCap = 25;

/// Depth-first search over all simple paths (with bound pruning, which never
/// discards an improving path). Throws GridTooLarge above 25 nodes.
OracleResult enumerate_small(const GridGraph& g, std::size_t p, std::size_t q, PathMode mode);

struct CriticalCluster {
  Point center;
  double min_grad = 0.0;
  double phi = 0.0;
  std::size_t size = 0;
};

/// Grid nodes with |grad phi| < grad_tol, grouped by full grid adjacency.
std::vector<CriticalCluster> critical_scan(const ScalarField& field, const DomainBox& box,
                                           const std::vector<int>& resolution, double grad_tol);

/// Minimum |grad phi| over the level set {phi = level}, located as crossings
/// along grid edges. +inf when the level set misses the box.
double level_set_min_grad(const ScalarField& field, const DomainBox& box, double level,
                          const std::vector<int>& resolution);

/// CSV: i,j[,k],x,y[,z],phi
void write_grid_csv(std::ostream& os, const GridGraph& g);

}  // namespace deflab
