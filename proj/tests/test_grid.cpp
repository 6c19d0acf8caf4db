#include <doctest.h>

#include <cmath>
#include <set>

#include "curvnet/fields.hpp"
#include "curvnet/grid.hpp"

using namespace curvnet;

TEST_CASE("uniform grid spacing") {
  const UniformGrid unit(SquareBounds{{0.0, 0.0}, 1.0}, 256);
  CHECK(unit.h() == doctest::Approx(1.0 / 255.0).epsilon(1e-15));
  CHECK(std::abs(unit.h() - 3.921569e-3) < 1e-8);

  const UniformGrid low(SquareBounds::centered(0.207843), 107);
  CHECK(std::abs(low.h() - 3.921569e-3) < 1e-8);

  const UniformGrid tiny(SquareBounds{{0.0, 0.0}, 1.0}, 3);
  CHECK(tiny.h() == 0.5);
}

TEST_CASE("non-square domains are rejected") {
  CHECK_THROWS_AS(SquareBounds::from_corners({0.0, 0.0}, {1.0, 2.0}), ValidationError);
  CHECK_THROWS_AS(SquareBounds::from_corners({0.0, 0.0}, {-1.0, -1.0}), ValidationError);
  CHECK_NOTHROW(SquareBounds::from_corners({-1.0, -1.0}, {1.0, 1.0}));
  CHECK_THROWS_AS(UniformGrid(SquareBounds{{0.0, 0.0}, 1.0}, 2), ValidationError);
}

TEST_CASE("uniform grid node layout is row-major from the origin") {
  const UniformGrid grid(SquareBounds{{-1.0, 2.0}, 4.0}, 5);
  CHECK(grid.node_at(0, 0) == 0);
  CHECK(grid.node_at(3, 0) == 3);
  CHECK(grid.node_at(0, 1) == 5);
  const Point2 p = grid.node_point(grid.node_at(2, 3));
  CHECK(p.x == doctest::Approx(-1.0 + 2.0));
  CHECK(p.y == doctest::Approx(2.0 + 3.0));
  CHECK(grid.node_lookup(-1, 0) == kInvalidNode);
  CHECK(grid.node_lookup(5, 0) == kInvalidNode);
}

TEST_CASE("stencil availability on the uniform grid") {
  const UniformGrid grid(SquareBounds{{0.0, 0.0}, 1.0}, 11);
  CHECK_FALSE(grid.stencil9_at(grid.node_at(0, 0)).has_value());
  CHECK_FALSE(grid.stencil9_at(grid.node_at(5, 10)).has_value());

  const auto s = grid.stencil9_at(grid.node_at(4, 7));
  REQUIRE(s.has_value());
  CHECK((*s)[4] == grid.node_at(4, 7));           // center
  CHECK((*s)[0] == grid.node_at(3, 8));           // top-left
  CHECK((*s)[8] == grid.node_at(5, 6));           // bottom-right

  int with_stencil = 0;
  for (NodeId id = 0; id < grid.num_nodes(); ++id)
    if (grid.stencil9_at(id)) ++with_stencil;
  CHECK(with_stencil == (grid.nx() - 2) * (grid.ny() - 2));
}

TEST_CASE("quadtree split criterion") {
  const SquareBounds domain{{0.0, 0.0}, 1.0};

  SUBCASE("vertex exactly on the interface forces a split") {
    const QuadtreeGrid tree(domain, 1, [](const Point2& p) { return p.norm(); }, 1.2);
    CHECK(tree.num_leaves() == 4);
  }
  SUBCASE("cell far from the interface stays a leaf") {
    // Constant field value of 10 diagonals against a Lipschitz factor of 1.2.
    const double diag = std::sqrt(2.0);
    const QuadtreeGrid tree(domain, 3, [&](const Point2&) { return 10.0 * diag; }, 1.2);
    CHECK(tree.num_leaves() == 1);
    CHECK(tree.num_cells() == 1);
  }
  SUBCASE("smooth flower band reaches the advertised finest width") {
    const FlowerSpec flower{0.05, 0.15, 3};
    const QuadtreeGrid tree(
        SquareBounds::centered(0.246154), 7,
        [&](const Point2& p) {
          return (p.x == 0.0 && p.y == 0.0) ? -0.2 : eval_flower(flower, p);
        },
        1.2);
    CHECK(std::abs(tree.h() - 3.846154e-3) < 1e-8);
    CHECK(tree.max_level() == 7);
  }
}

TEST_CASE("quadtree hash-consing stores each vertex once") {
  const FlowerSpec flower{0.05, 0.15, 3};
  const QuadtreeGrid tree(
      SquareBounds::centered(0.246154), 5,
      [&](const Point2& p) { return (p.x == 0.0 && p.y == 0.0) ? -0.2 : eval_flower(flower, p); },
      1.2);

  std::set<std::pair<int, int>> seen;
  for (const auto& cell : tree.cells()) {
    if (!cell.is_leaf()) continue;
    const int span = 1 << (tree.max_level() - cell.level);
    seen.insert({cell.fx, cell.fy});
    seen.insert({cell.fx + span, cell.fy});
    seen.insert({cell.fx, cell.fy + span});
    seen.insert({cell.fx + span, cell.fy + span});
  }
  CHECK(static_cast<int>(seen.size()) == tree.num_nodes());
  for (const auto& [fx, fy] : seen) CHECK(tree.node_lookup(fx, fy) != kInvalidNode);
}

TEST_CASE("interface-crossed leaves sit at the maximum level") {
  const FlowerSpec flower{0.075, 0.15, 3};
  const QuadtreeGrid tree(
      SquareBounds::centered(0.244068), 7,
      [&](const Point2& p) { return (p.x == 0.0 && p.y == 0.0) ? -0.225 : eval_flower(flower, p); },
      1.2);
  const auto phi = [&](const Point2& p) {
    return (p.x == 0.0 && p.y == 0.0) ? -0.225 : eval_flower(flower, p);
  };
  for (int ci = 0; ci < tree.num_cells(); ++ci) {
    const auto& cell = tree.cells()[ci];
    if (!cell.is_leaf()) continue;
    const CellView view = cell_view(tree, ci);
    const double v0 = phi(view.bounds.lo);
    const double v1 = phi({view.bounds.hi().x, view.bounds.lo.y});
    const double v2 = phi({view.bounds.lo.x, view.bounds.hi().y});
    const double v3 = phi(view.bounds.hi());
    const bool crossed = v0 * v1 < 0 || v0 * v2 < 0 || v1 * v3 < 0 || v2 * v3 < 0;
    if (crossed) CHECK(cell.level == tree.max_level());
    CHECK(view.diagonal() == doctest::Approx(view.bounds.side * std::sqrt(2.0)));
  }
}

TEST_CASE("hand-built two-level quadtree exposes one full finest stencil") {
  // Small circle about the SW corner with a reduced Lipschitz factor refines
  // only the SW quadrant to level 2; the rest stays at level 1.
  const QuadtreeGrid tree(
      SquareBounds{{0.0, 0.0}, 1.0}, 2, [](const Point2& p) { return p.norm() - 0.1; }, 0.5);
  REQUIRE(tree.num_nodes() == 14);

  int full = 0;
  NodeId full_node = kInvalidNode;
  for (NodeId id = 0; id < tree.num_nodes(); ++id)
    if (tree.stencil9_at(id)) {
      ++full;
      full_node = id;
    }
  CHECK(full == 1);
  const auto [fx, fy] = tree.node_coords(full_node);
  CHECK(fx == 1);
  CHECK(fy == 1);
  const auto s = tree.stencil9_at(full_node);
  for (int k = 0; k < 9; ++k) {
    const auto [nx, ny] = tree.node_coords((*s)[k]);
    CHECK(nx == 1 + (k % 3) - 1);
    CHECK(ny == 1 + (1 - k / 3));
  }
}

TEST_CASE("interface-adjacent nodes on a circle stay within one diagonal") {
  const UniformGrid grid(SquareBounds{{0.0, 0.0}, 1.0}, 107);
  const CircleSpec circle{{0.5, 0.5}, 0.25, CircleSpec::Form::kSignedDistance};
  std::vector<double> phi(grid.num_nodes());
  for (NodeId id = 0; id < grid.num_nodes(); ++id) phi[id] = eval_circle(circle, grid.node_point(id));

  const auto adjacent = interface_adjacent_nodes(grid, phi);
  CHECK(adjacent.size() > 100);
  const double bound = grid.h() * std::sqrt(2.0);
  for (NodeId id : adjacent) {
    const double dist = std::abs(distance(grid.node_point(id), {0.5, 0.5}) - 0.25);
    CHECK(dist <= bound);
  }
}

TEST_CASE("interface adjacency edge cases") {
  const UniformGrid grid(SquareBounds{{0.0, 0.0}, 1.0}, 5);
  std::vector<double> phi(grid.num_nodes(), 1.0);
  CHECK(interface_adjacent_nodes(grid, phi).empty());

  phi[grid.node_at(2, 2)] = 0.0;
  const auto only = interface_adjacent_nodes(grid, phi);
  REQUIRE(only.size() == 1);
  CHECK(only[0] == grid.node_at(2, 2));

  phi[grid.node_at(2, 2)] = -1.0;
  const auto ring = interface_adjacent_nodes(grid, phi);
  CHECK(ring.size() == 5);  // the node and its four neighbors
}
