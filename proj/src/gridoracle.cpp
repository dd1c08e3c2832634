#include "deflab/gridoracle.hpp"

#include <algorithm>
#include <cmath>
#include <deque>
#include <functional>
#include <iomanip>
#include <limits>
#include <numeric>

#include "deflab/bands.hpp"
#include "deflab/util.hpp"

namespace deflab {

namespace {

class UnionFind {
 public:
  explicit UnionFind(std::size_t n) : parent_(n), rank_(n, 0) { std::iota(parent_.begin(), parent_.end(), 0); }

  std::size_t find(std::size_t x) {
    while (parent_[x] != x) {
      parent_[x] = parent_[parent_[x]];
      x = parent_[x];
    }
    return x;
  }

  void unite(std::size_t a, std::size_t b) {
    a = find(a);
    b = find(b);
    if (a == b) return;
    if (rank_[a] < rank_[b]) std::swap(a, b);
    parent_[b] = a;
    if (rank_[a] == rank_[b]) ++rank_[a];
  }

 private:
  std::vector<std::size_t> parent_;
  std::vector<int> rank_;
};

void check_shape(const std::vector<int>& shape) {
  if (shape.empty() || shape.size() > static_cast<std::size_t>(kMaxDim))
    throw Error(ErrorCode::InvalidConfig, "grid dimension must be 1..3");
  for (int r : shape)
    if (r < 3) throw Error(ErrorCode::InvalidConfig, "grid resolution must be >= 3 per axis");
}

std::vector<int> expand_shape(std::vector<int> shape, int dim) {
  if (shape.size() == 1 && dim > 1) shape.assign(dim, shape.front());
  if (static_cast<int>(shape.size()) != dim)
    throw Error(ErrorCode::InvalidConfig, "grid resolution needs one entry per axis");
  check_shape(shape);
  return shape;
}

std::size_t total_nodes(const std::vector<int>& shape) {
  std::size_t total = 1;
  for (int r : shape) total *= static_cast<std::size_t>(r);
  return total;
}

}  // namespace

Connectivity default_connectivity(int dim) { return dim == 3 ? Connectivity::Axis : Connectivity::Full; }

GridGraph::GridGraph(const ScalarField& field, const DomainBox& box, std::vector<int> resolution,
                     Connectivity conn, int workers)
    : shape_(expand_shape(std::move(resolution), field.dim())), conn_(conn), box_(box) {
  if (box.dim() != field.dim()) throw Error(ErrorCode::InvalidConfig, "grid box dimension mismatch");
  values_.resize(total_nodes(shape_));
  parallel_for(values_.size(), workers, [&](std::size_t n) { values_[n] = field.evaluate(position(n)); });
  init_offsets();
}

GridGraph::GridGraph(std::vector<int> shape, std::vector<double> values, Connectivity conn)
    : shape_(std::move(shape)), values_(std::move(values)), conn_(conn) {
  check_shape(shape_);
  if (values_.size() != total_nodes(shape_)) throw Error(ErrorCode::InvalidConfig, "grid value count does not match shape");
  Point lo(dim()), hi(dim());
  for (int i = 0; i < dim(); ++i) hi[i] = shape_[i] - 1;
  box_ = DomainBox(lo, hi);
  init_offsets();
}

void GridGraph::init_offsets() {
  for (double v : values_)
    if (!std::isfinite(v)) throw Error(ErrorCode::InvalidConfig, "grid node values must be finite");
  const int d = dim();
  std::vector<int> off(d, -1);
  while (true) {
    int nonzero = 0;
    for (int o : off) nonzero += o != 0;
    if (nonzero == 1 || (conn_ == Connectivity::Full && nonzero > 0)) offsets_.push_back(off);
    int i = d - 1;
    while (i >= 0 && off[i] == 1) off[i--] = -1;
    if (i < 0) break;
    ++off[i];
  }
}

std::size_t GridGraph::index(const std::vector<int>& multi) const {
  std::size_t n = 0;
  for (int i = 0; i < dim(); ++i) n = n * shape_[i] + static_cast<std::size_t>(multi[i]);
  return n;
}

std::vector<int> GridGraph::multi_index(std::size_t n) const {
  std::vector<int> m(dim());
  for (int i = dim() - 1; i >= 0; --i) {
    m[i] = static_cast<int>(n % shape_[i]);
    n /= shape_[i];
  }
  return m;
}

double GridGraph::spacing(int axis) const { return (box_.hi()[axis] - box_.lo()[axis]) / (shape_[axis] - 1); }

Point GridGraph::position(std::size_t n) const {
  const auto m = multi_index(n);
  Point u(dim());
  for (int i = 0; i < dim(); ++i) u[i] = box_.lo()[i] + (box_.hi()[i] - box_.lo()[i]) * m[i] / (shape_[i] - 1);
  return u;
}

std::size_t GridGraph::nearest_node(const Point& u) const {
  std::vector<int> m(dim());
  for (int i = 0; i < dim(); ++i) {
    const long k = std::lround((u[i] - box_.lo()[i]) / spacing(i));
    m[i] = static_cast<int>(std::clamp<long>(k, 0, shape_[i] - 1));
  }
  return index(m);
}

void GridGraph::neighbors(std::size_t n, std::vector<std::size_t>& out) const {
  out.clear();
  const auto m = multi_index(n);
  std::vector<int> nb(dim());
  for (const auto& off : offsets_) {
    bool inside = true;
    for (int i = 0; i < dim(); ++i) {
      nb[i] = m[i] + off[i];
      if (nb[i] < 0 || nb[i] >= shape_[i]) inside = false;
    }
    if (inside) out.push_back(index(nb));
  }
  std::sort(out.begin(), out.end());
}

namespace {

OracleResult sweep(const GridGraph& g, std::size_t p, std::size_t q, bool ascending) {
  if (p >= g.size() || q >= g.size()) throw Error(ErrorCode::InvalidPoint, "terminal outside the grid");
  OracleResult res;
  res.method = ascending ? "union_find_ascending" : "union_find_descending";
  if (p == q) {
    res.value = g.value(p);
    res.witness = {p};
    return res;
  }

  std::vector<std::size_t> order(g.size());
  std::iota(order.begin(), order.end(), 0);
  std::stable_sort(order.begin(), order.end(), [&](std::size_t a, std::size_t b) {
    return ascending ? g.value(a) < g.value(b) : g.value(a) > g.value(b);
  });

  UnionFind uf(g.size());
  std::vector<char> inserted(g.size(), 0);
  std::vector<std::size_t> nb;
  for (std::size_t n : order) {
    inserted[n] = 1;
    g.neighbors(n, nb);
    for (std::size_t m : nb)
      if (inserted[m]) uf.unite(n, m);
    if (inserted[p] && inserted[q] && uf.find(p) == uf.find(q)) {
      res.value = g.value(n);
      break;
    }
  }

  // Breadth-first witness inside the inserted set; every such p-q path runs
  // through the last inserted node, so its extremum equals the value.
  std::vector<std::size_t> prev(g.size(), g.size());
  std::deque<std::size_t> queue{p};
  prev[p] = p;
  while (!queue.empty()) {
    const std::size_t n = queue.front();
    queue.pop_front();
    if (n == q) break;
    g.neighbors(n, nb);
    for (std::size_t m : nb) {
      if (inserted[m] && prev[m] == g.size()) {
        prev[m] = n;
        queue.push_back(m);
      }
    }
  }
  for (std::size_t n = q; n != p; n = prev[n]) res.witness.push_back(n);
  res.witness.push_back(p);
  std::reverse(res.witness.begin(), res.witness.end());
  return res;
}

}  // namespace

OracleResult bottleneck_value(const GridGraph& g, std::size_t p, std::size_t q) { return sweep(g, p, q, true); }

OracleResult widest_value(const GridGraph& g, std::size_t p, std::size_t q) { return sweep(g, p, q, false); }

OracleResult enumerate_small(const GridGraph& g, std::size_t p, std::size_t q, PathMode mode) {
  if (g.size() > kEnumerationCap) throw Error(ErrorCode::GridTooLarge, "enumeration is capped at 25 nodes");
  if (p >= g.size() || q >= g.size()) throw Error(ErrorCode::InvalidPoint, "terminal outside the grid");
  const bool minimax = mode == PathMode::Bottleneck;
  OracleResult res;
  res.method = "enumerate_simple_paths";
  if (p == q) {
    res.value = g.value(p);
    res.witness = {p};
    return res;
  }

  // better(a, b): a is a strictly better path extremum than b.
  auto better = [minimax](double a, double b) { return minimax ? a < b : a > b; };
  auto combine = [minimax](double a, double b) { return minimax ? std::max(a, b) : std::min(a, b); };

  std::vector<std::vector<std::size_t>> adj(g.size());
  for (std::size_t n = 0; n < g.size(); ++n) g.neighbors(n, adj[n]);

  bool found = false;
  std::vector<char> on_path(g.size(), 0);
  std::vector<std::size_t> stack{p};
  on_path[p] = 1;
  std::function<void(std::size_t, double)> dfs = [&](std::size_t n, double extremum) {
    if (n == q) {
      if (!found || better(extremum, res.value)) {
        res.value = extremum;
        res.witness = stack;
        found = true;
      }
      return;
    }
    for (std::size_t m : adj[n]) {
      if (on_path[m]) continue;
      const double next = combine(extremum, g.value(m));
      if (found && !better(next, res.value)) continue;
      on_path[m] = 1;
      stack.push_back(m);
      dfs(m, next);
      stack.pop_back();
      on_path[m] = 0;
    }
  };
  dfs(p, g.value(p));
  return res;
}

std::vector<CriticalCluster> critical_scan(const ScalarField& field, const DomainBox& box,
                                           const std::vector<int>& resolution, double grad_tol) {
  if (!(grad_tol > 0.0)) throw Error(ErrorCode::InvalidConfig, "grad_tol must be > 0");
  const std::vector<int> shape = expand_shape(resolution, field.dim());
  std::vector<double> grad_norms;
  std::vector<Point> points;
  for_each_grid_point(box, shape, [&](std::size_t, const std::vector<int>&, const Point& u) {
    grad_norms.push_back(norm(field.gradient(u)));
    points.push_back(u);
  });
  const GridGraph grid(shape, grad_norms, Connectivity::Full);

  std::vector<CriticalCluster> clusters;
  std::vector<char> seen(grid.size(), 0);
  std::vector<std::size_t> nb;
  for (std::size_t s = 0; s < grid.size(); ++s) {
    if (seen[s] || grad_norms[s] >= grad_tol) continue;
    CriticalCluster cl;
    std::size_t best = s;
    std::deque<std::size_t> queue{s};
    seen[s] = 1;
    while (!queue.empty()) {
      const std::size_t n = queue.front();
      queue.pop_front();
      ++cl.size;
      if (grad_norms[n] < grad_norms[best] || (grad_norms[n] == grad_norms[best] && n < best)) best = n;
      grid.neighbors(n, nb);
      for (std::size_t m : nb) {
        if (!seen[m] && grad_norms[m] < grad_tol) {
          seen[m] = 1;
          queue.push_back(m);
        }
      }
    }
    cl.center = points[best];
    cl.min_grad = grad_norms[best];
    cl.phi = field.evaluate(cl.center);
    clusters.push_back(cl);
  }
  return clusters;
}

double level_set_min_grad(const ScalarField& field, const DomainBox& box, double level,
                          const std::vector<int>& resolution) {
  const GridGraph grid(field, box, resolution, Connectivity::Axis);
  double best = std::numeric_limits<double>::infinity();
  std::vector<std::size_t> nb;
  for (std::size_t n = 0; n < grid.size(); ++n) {
    const double fn = grid.value(n) - level;
    if (fn == 0.0) best = std::min(best, norm(field.gradient(grid.position(n))));
    grid.neighbors(n, nb);
    for (std::size_t m : nb) {
      if (m < n) continue;
      const double fm = grid.value(m) - level;
      if (!((fn < 0.0 && fm > 0.0) || (fn > 0.0 && fm < 0.0))) continue;
      Point a = grid.position(n), b = grid.position(m);
      const bool a_below = fn < 0.0;
      for (int it = 0; it < 60; ++it) {
        const Point mid = 0.5 * (a + b);
        if ((field.evaluate(mid) < level) == a_below) a = mid;
        else b = mid;
      }
      best = std::min(best, norm(field.gradient(0.5 * (a + b))));
    }
  }
  return best;
}

void write_grid_csv(std::ostream& os, const GridGraph& g) {
  static constexpr const char* kIdx[] = {"i", "j", "k"};
  static constexpr const char* kPos[] = {"x", "y", "z"};
  for (int i = 0; i < g.dim(); ++i) os << kIdx[i] << ',';
  for (int i = 0; i < g.dim(); ++i) os << kPos[i] << ',';
  os << "phi\n" << std::setprecision(17);
  for (std::size_t n = 0; n < g.size(); ++n) {
    const auto m = g.multi_index(n);
    const Point u = g.position(n);
    for (int i = 0; i < g.dim(); ++i) os << m[i] << ',';
    for (int i = 0; i < g.dim(); ++i) os << u[i] << ',';
    os << g.value(n) << '\n';
  }
}

}  // namespace deflab
