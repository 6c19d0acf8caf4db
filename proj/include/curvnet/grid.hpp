#pragma once

#include <array>
#include <cstdint>
#include <functional>
#include <optional>
#include <span>
#include <unordered_map>
#include <vector>

#include "curvnet/geometry.hpp"

namespace curvnet {

using NodeId = std::int32_t;
inline constexpr NodeId kInvalidNode = -1;

/// 3x3 node neighborhood, rows top to bottom, columns left to right:
///   [0..2] = (i-1,j+1) (i,j+1) (i+1,j+1)
///   [3..5] = (i-1,j)   (i,j)   (i+1,j)
///   [6..8] = (i-1,j-1) (i,j-1) (i+1,j-1)
using StencilNodes = std::array<NodeId, 9>;

/// Axis neighbors at node spacing, ordered W, E, S, N. kInvalidNode when absent.
using AxisNeighbors = std::array<NodeId, 4>;

/// Finest-level cell containing a query point, for bilinear interpolation.
/// Corner order: SW, SE, NW, NE. cx/cy are the SW corner's lattice coordinates.
struct CellHit {
  std::array<NodeId, 4> corners;
  int cx = 0;
  int cy = 0;
};

/// Square Cartesian grid of nodes with spacing h on both axes.
/// Node (i,j) sits at lo + (i*h, j*h); ids are row-major from the origin.
class UniformGrid {
public:
  UniformGrid(const SquareBounds& domain, int nodes_per_side);

  double h() const { return h_; }
  int nx() const { return n_; }
  int ny() const { return n_; }
  int num_nodes() const { return n_ * n_; }
  const SquareBounds& domain() const { return domain_; }

  bool valid_coords(int i, int j) const { return i >= 0 && i < n_ && j >= 0 && j < n_; }
  NodeId node_at(int i, int j) const { return static_cast<NodeId>(j) * n_ + i; }
  NodeId node_lookup(int i, int j) const {
    return valid_coords(i, j) ? node_at(i, j) : kInvalidNode;
  }
  std::pair<int, int> node_coords(NodeId id) const { return {id % n_, id / n_}; }

  Point2 node_point(NodeId id) const {
    const auto [i, j] = node_coords(id);
    return {domain_.lo.x + i * h_, domain_.lo.y + j * h_};
  }

  AxisNeighbors axis_neighbors(NodeId id) const {
    const auto [i, j] = node_coords(id);
    return {node_lookup(i - 1, j), node_lookup(i + 1, j),
            node_lookup(i, j - 1), node_lookup(i, j + 1)};
  }

  /// Full 3x3 neighborhood; absent for boundary nodes.
  std::optional<StencilNodes> stencil9_at(NodeId id) const;

  /// Cell containing p; absent when p is outside the domain.
  std::optional<CellHit> locate(const Point2& p) const;

private:
  SquareBounds domain_;
  int n_ = 0;
  double h_ = 0.0;
};

UniformGrid build_uniform(const SquareBounds& domain, int nodes_per_side);

/// Adaptive quadtree over a square domain. Every cell has 0 or 4 children;
/// a cell at level l < max_level splits iff
///   min over its 4 vertices of |phi(v)|  <=  lipschitz * diag(cell).
/// Leaf vertices are hash-consed into one node table keyed by finest-lattice
/// coordinates, so shared corners and hanging nodes get a single storage slot.
/// Node ids are row-major from the domain origin.
class QuadtreeGrid {
public:
  struct Cell {
    std::int32_t fx = 0;       // lower-left corner, finest-lattice units
    std::int32_t fy = 0;
    std::int8_t level = 0;     // 0 = root
    std::int32_t first_child = -1;  // children occupy [first_child, first_child+4)

    bool is_leaf() const { return first_child < 0; }
  };

  QuadtreeGrid(const SquareBounds& domain, int max_level,
               const std::function<double(Point2)>& phi, double lipschitz);

  double h() const { return h_min_; }
  int max_level() const { return max_level_; }
  const SquareBounds& domain() const { return domain_; }
  int num_nodes() const { return static_cast<int>(node_coords_.size()); }
  int num_cells() const { return static_cast<int>(cells_.size()); }
  int num_leaves() const { return num_leaves_; }
  const std::vector<Cell>& cells() const { return cells_; }

  int lattice_extent() const { return 1 << max_level_; }  // cells per side at finest level
  double cell_side(int level) const { return domain_.side / static_cast<double>(1 << level); }

  NodeId node_lookup(int fx, int fy) const;
  std::pair<int, int> node_coords(NodeId id) const {
    return {node_coords_[id].first, node_coords_[id].second};
  }

  Point2 node_point(NodeId id) const {
    const auto [fx, fy] = node_coords_[id];
    return {domain_.lo.x + fx * h_min_, domain_.lo.y + fy * h_min_};
  }

  AxisNeighbors axis_neighbors(NodeId id) const { return axis_[id]; }

  /// Full 3x3 neighborhood at finest spacing; absent unless the node sits in
  /// the uniformly refined band (all 8 finest-lattice neighbors stored).
  std::optional<StencilNodes> stencil9_at(NodeId id) const;

  /// Finest-level cell containing p; absent when p lies outside the domain or
  /// in a coarse region where the cell corners are not all stored.
  std::optional<CellHit> locate(const Point2& p) const;

private:
  SquareBounds domain_;
  int max_level_ = 0;
  double h_min_ = 0.0;
  int num_leaves_ = 0;
  std::vector<Cell> cells_;
  std::vector<std::pair<std::int32_t, std::int32_t>> node_coords_;
  std::unordered_map<std::uint64_t, NodeId> node_index_;
  std::vector<AxisNeighbors> axis_;

  static std::uint64_t key(int fx, int fy) {
    return (static_cast<std::uint64_t>(static_cast<std::uint32_t>(fy)) << 32) |
           static_cast<std::uint32_t>(fx);
  }
};

QuadtreeGrid build_quadtree(const SquareBounds& domain, int max_level,
                            const std::function<double(Point2)>& phi, double lipschitz);

/// Level/bounds/corner view of one quadtree cell.
struct CellView {
  int level = 0;
  SquareBounds bounds;
  std::array<NodeId, 4> vertices;  // SW, SE, NW, NE

  double diagonal() const { return bounds.side * std::sqrt(2.0); }
};

CellView cell_view(const QuadtreeGrid& grid, int cell_index);

/// Nodes that sit on the interface (phi == 0) or have an axis edge strictly
/// crossed by it (phi changes sign across the edge). Returned in ascending
/// node-id order; a node on the interface is reported once no matter how many
/// of its edges touch it.
template <class Grid>
std::vector<NodeId> interface_adjacent_nodes(const Grid& grid, std::span<const double> phi) {
  std::vector<NodeId> out;
  const int n = grid.num_nodes();
  for (NodeId id = 0; id < n; ++id) {
    const double c = phi[id];
    bool hit = (c == 0.0);
    if (!hit) {
      for (NodeId nb : grid.axis_neighbors(id)) {
        if (nb != kInvalidNode && c * phi[nb] < 0.0) {
          hit = true;
          break;
        }
      }
    }
    if (hit) out.push_back(id);
  }
  return out;
}

}  // namespace curvnet
