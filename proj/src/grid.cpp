#include "curvnet/grid.hpp"

#include <algorithm>
#include <cmath>

namespace curvnet {

UniformGrid::UniformGrid(const SquareBounds& domain, int nodes_per_side)
    : domain_(domain), n_(nodes_per_side) {
  if (nodes_per_side < 3)
    throw ValidationError("UniformGrid: need at least 3 nodes per side, got " +
                          std::to_string(nodes_per_side));
  h_ = domain_.side / static_cast<double>(n_ - 1);
}

std::optional<StencilNodes> UniformGrid::stencil9_at(NodeId id) const {
  const auto [i, j] = node_coords(id);
  if (i < 1 || i > n_ - 2 || j < 1 || j > n_ - 2) return std::nullopt;
  return StencilNodes{node_at(i - 1, j + 1), node_at(i, j + 1), node_at(i + 1, j + 1),
                      node_at(i - 1, j),     node_at(i, j),     node_at(i + 1, j),
                      node_at(i - 1, j - 1), node_at(i, j - 1), node_at(i + 1, j - 1)};
}

std::optional<CellHit> UniformGrid::locate(const Point2& p) const {
  if (!domain_.contains(p)) return std::nullopt;
  const auto clamp_cell = [this](double u) {
    return std::min(std::max(static_cast<int>(std::floor(u)), 0), n_ - 2);
  };
  const int cx = clamp_cell((p.x - domain_.lo.x) / h_);
  const int cy = clamp_cell((p.y - domain_.lo.y) / h_);
  return CellHit{{node_at(cx, cy), node_at(cx + 1, cy), node_at(cx, cy + 1), node_at(cx + 1, cy + 1)},
                 cx, cy};
}

UniformGrid build_uniform(const SquareBounds& domain, int nodes_per_side) {
  return UniformGrid(domain, nodes_per_side);
}

QuadtreeGrid::QuadtreeGrid(const SquareBounds& domain, int max_level,
                           const std::function<double(Point2)>& phi, double lipschitz)
    : domain_(domain), max_level_(max_level) {
  if (max_level < 0 || max_level > 31)
    throw ValidationError("QuadtreeGrid: max_level must be in [0, 31]");
  if (lipschitz <= 0.0) throw ValidationError("QuadtreeGrid: lipschitz must be positive");
  if (!phi) throw ValidationError("QuadtreeGrid: null field callback");

  h_min_ = domain_.side / static_cast<double>(1 << max_level_);

  const auto point_of = [this](int fx, int fy) {
    return Point2{domain_.lo.x + fx * h_min_, domain_.lo.y + fy * h_min_};
  };

  // Depth-first subdivision. Children ordered SW, SE, NW, NE.
  cells_.push_back(Cell{0, 0, 0, -1});
  std::vector<std::int32_t> stack{0};
  while (!stack.empty()) {
    const std::int32_t ci = stack.back();
    stack.pop_back();
    const Cell cell = cells_[ci];
    if (cell.level >= max_level_) continue;
    const int span = 1 << (max_level_ - cell.level);
    double min_abs = std::abs(phi(point_of(cell.fx, cell.fy)));
    min_abs = std::min(min_abs, std::abs(phi(point_of(cell.fx + span, cell.fy))));
    min_abs = std::min(min_abs, std::abs(phi(point_of(cell.fx, cell.fy + span))));
    min_abs = std::min(min_abs, std::abs(phi(point_of(cell.fx + span, cell.fy + span))));
    const double diag = cell_side(cell.level) * std::sqrt(2.0);
    if (min_abs > lipschitz * diag) continue;

    const std::int32_t first = static_cast<std::int32_t>(cells_.size());
    cells_[ci].first_child = first;
    const int half = span / 2;
    const std::int8_t lvl = static_cast<std::int8_t>(cell.level + 1);
    cells_.push_back(Cell{cell.fx, cell.fy, lvl, -1});
    cells_.push_back(Cell{cell.fx + half, cell.fy, lvl, -1});
    cells_.push_back(Cell{cell.fx, cell.fy + half, lvl, -1});
    cells_.push_back(Cell{cell.fx + half, cell.fy + half, lvl, -1});
    for (std::int32_t k = first + 3; k >= first; --k) stack.push_back(k);
  }

  // Hash-cons leaf corners into the node table, then order row-major.
  std::vector<std::pair<std::int32_t, std::int32_t>> coords;
  for (const Cell& cell : cells_) {
    if (!cell.is_leaf()) continue;
    ++num_leaves_;
    const int span = 1 << (max_level_ - cell.level);
    coords.emplace_back(cell.fx, cell.fy);
    coords.emplace_back(cell.fx + span, cell.fy);
    coords.emplace_back(cell.fx, cell.fy + span);
    coords.emplace_back(cell.fx + span, cell.fy + span);
  }
  std::sort(coords.begin(), coords.end(), [](const auto& a, const auto& b) {
    return a.second != b.second ? a.second < b.second : a.first < b.first;
  });
  coords.erase(std::unique(coords.begin(), coords.end()), coords.end());
  node_coords_ = std::move(coords);

  node_index_.reserve(node_coords_.size() * 2);
  for (NodeId id = 0; id < static_cast<NodeId>(node_coords_.size()); ++id)
    node_index_.emplace(key(node_coords_[id].first, node_coords_[id].second), id);

  axis_.resize(node_coords_.size());
  for (NodeId id = 0; id < static_cast<NodeId>(node_coords_.size()); ++id) {
    const auto [fx, fy] = node_coords_[id];
    axis_[id] = {node_lookup(fx - 1, fy), node_lookup(fx + 1, fy),
                 node_lookup(fx, fy - 1), node_lookup(fx, fy + 1)};
  }
}

NodeId QuadtreeGrid::node_lookup(int fx, int fy) const {
  if (fx < 0 || fy < 0 || fx > lattice_extent() || fy > lattice_extent()) return kInvalidNode;
  const auto it = node_index_.find(key(fx, fy));
  return it == node_index_.end() ? kInvalidNode : it->second;
}

std::optional<StencilNodes> QuadtreeGrid::stencil9_at(NodeId id) const {
  const auto [fx, fy] = node_coords_[id];
  StencilNodes s;
  int k = 0;
  for (int dy = 1; dy >= -1; --dy)
    for (int dx = -1; dx <= 1; ++dx) {
      const NodeId nb = node_lookup(fx + dx, fy + dy);
      if (nb == kInvalidNode) return std::nullopt;
      s[k++] = nb;
    }
  return s;
}

std::optional<CellHit> QuadtreeGrid::locate(const Point2& p) const {
  if (!domain_.contains(p)) return std::nullopt;
  const int extent = lattice_extent();
  const auto clamp_cell = [extent](double u) {
    return std::min(std::max(static_cast<int>(std::floor(u)), 0), extent - 1);
  };
  const int cx = clamp_cell((p.x - domain_.lo.x) / h_min_);
  const int cy = clamp_cell((p.y - domain_.lo.y) / h_min_);
  CellHit hit;
  hit.cx = cx;
  hit.cy = cy;
  hit.corners = {node_lookup(cx, cy), node_lookup(cx + 1, cy), node_lookup(cx, cy + 1),
                 node_lookup(cx + 1, cy + 1)};
  for (NodeId c : hit.corners)
    if (c == kInvalidNode) return std::nullopt;
  return hit;
}

QuadtreeGrid build_quadtree(const SquareBounds& domain, int max_level,
                            const std::function<double(Point2)>& phi, double lipschitz) {
  return QuadtreeGrid(domain, max_level, phi, lipschitz);
}

CellView cell_view(const QuadtreeGrid& grid, int cell_index) {
  if (cell_index < 0 || cell_index >= grid.num_cells())
    throw ValidationError("cell_view: cell index out of range");
  const QuadtreeGrid::Cell& cell = grid.cells()[cell_index];
  const double side = grid.cell_side(cell.level);
  const int span = 1 << (grid.max_level() - cell.level);
  CellView view;
  view.level = cell.level;
  view.bounds = SquareBounds{{grid.domain().lo.x + cell.fx * grid.h(),
                              grid.domain().lo.y + cell.fy * grid.h()},
                             side};
  view.vertices = {grid.node_lookup(cell.fx, cell.fy),
                   grid.node_lookup(cell.fx + span, cell.fy),
                   grid.node_lookup(cell.fx, cell.fy + span),
                   grid.node_lookup(cell.fx + span, cell.fy + span)};
  return view;
}

}  // namespace curvnet
