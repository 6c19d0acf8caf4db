#pragma once

#include <cmath>
#include <span>
#include <string>
#include <vector>

#include "curvnet/grid.hpp"

namespace curvnet {

/// Squared-gradient floor below which curvature and projection are refused.
inline constexpr double kEpsGradSq = 1e-10;

/// Per-node scalar level-set values bound to a grid. The grid must outlive
/// the field. Value-semantic: copies share the grid, not the values.
template <class Grid>
class LevelSetField {
public:
  explicit LevelSetField(const Grid& grid)
      : grid_(&grid), phi_(static_cast<std::size_t>(grid.num_nodes()), 0.0) {}

  LevelSetField(const Grid& grid, std::vector<double> phi)
      : grid_(&grid), phi_(std::move(phi)) {
    if (static_cast<int>(phi_.size()) != grid.num_nodes())
      throw ValidationError("LevelSetField: value count does not match grid");
  }

  template <class F>
  static LevelSetField sampled(const Grid& grid, F&& phi_of_point) {
    LevelSetField field(grid);
    for (NodeId id = 0; id < grid.num_nodes(); ++id)
      field.phi_[id] = phi_of_point(grid.node_point(id));
    return field;
  }

  const Grid& grid() const { return *grid_; }
  double h() const { return grid_->h(); }
  int size() const { return static_cast<int>(phi_.size()); }
  double operator[](NodeId id) const { return phi_[id]; }
  double& operator[](NodeId id) { return phi_[id]; }
  std::span<const double> values() const { return phi_; }
  std::vector<double>& raw() { return phi_; }

  bool all_finite() const {
    for (double v : phi_)
      if (!std::isfinite(v)) return false;
    return true;
  }

  LevelSetField negated() const {
    LevelSetField out(*grid_);
    for (std::size_t k = 0; k < phi_.size(); ++k) out.phi_[k] = -phi_[k];
    return out;
  }

private:
  const Grid* grid_;
  std::vector<double> phi_;
};

struct CentralDerivs {
  double px, py, pxx, pyy, pxy;
};

template <class Grid>
std::array<double, 9> stencil_values(const LevelSetField<Grid>& field, const StencilNodes& s) {
  std::array<double, 9> v;
  for (int k = 0; k < 9; ++k) v[k] = field[s[k]];
  return v;
}

/// Second-order central differences on the 3x3 neighborhood.
template <class Grid>
CentralDerivs central_derivatives(const LevelSetField<Grid>& field, NodeId node) {
  const auto stencil = field.grid().stencil9_at(node);
  if (!stencil)
    throw NumericalError("central_derivatives: node " + std::to_string(node) +
                         " has no full 3x3 stencil");
  const auto v = stencil_values(field, *stencil);
  const double h = field.h();
  // v layout: 0..2 top row (j+1), 3..5 middle, 6..8 bottom (j-1).
  return {(v[5] - v[3]) / (2.0 * h),
          (v[1] - v[7]) / (2.0 * h),
          (v[5] - 2.0 * v[4] + v[3]) / (h * h),
          (v[1] - 2.0 * v[4] + v[7]) / (h * h),
          (v[2] - v[0] - v[8] + v[6]) / (4.0 * h * h)};
}

/// Mean curvature of the level sets of phi at a node:
/// (px^2 pyy - 2 px py pxy + py^2 pxx) / (px^2 + py^2)^(3/2).
template <class Grid>
double node_curvature(const LevelSetField<Grid>& field, NodeId node) {
  const CentralDerivs d = central_derivatives(field, node);
  const double g2 = d.px * d.px + d.py * d.py;
  if (!(g2 > kEpsGradSq))
    throw NumericalError("node_curvature: degenerate gradient at node " + std::to_string(node));
  return (d.px * d.px * d.pyy - 2.0 * d.px * d.py * d.pxy + d.py * d.py * d.pxx) /
         (g2 * std::sqrt(g2));
}

template <class Grid>
double bilinear_interp(const Grid& grid, std::span<const double> values, const Point2& p) {
  const auto hit = grid.locate(p);
  if (!hit)
    throw ValidationError("bilinear_interp: point (" + std::to_string(p.x) + ", " +
                          std::to_string(p.y) + ") not inside an interpolation cell");
  const double h = grid.h();
  const double fx = (p.x - (grid.domain().lo.x + hit->cx * h)) / h;
  const double fy = (p.y - (grid.domain().lo.y + hit->cy * h)) / h;
  const auto& c = hit->corners;
  return values[c[0]] * (1.0 - fx) * (1.0 - fy) + values[c[1]] * fx * (1.0 - fy) +
         values[c[2]] * (1.0 - fx) * fy + values[c[3]] * fx * fy;
}

template <class Grid>
double bilinear_interp(const LevelSetField<Grid>& field, const Point2& p) {
  return bilinear_interp(field.grid(), field.values(), p);
}

namespace detail {

/// Displacement from a node toward the interface, in units of h per axis:
/// -phi * grad(phi) / (|grad(phi)| * h), from central differences.
template <class Grid>
std::pair<double, double> interface_shift(const LevelSetField<Grid>& field, NodeId node) {
  const CentralDerivs d = central_derivatives(field, node);
  const double g2 = d.px * d.px + d.py * d.py;
  if (!(g2 > kEpsGradSq))
    throw NumericalError("project_to_interface: degenerate gradient at node " +
                         std::to_string(node));
  const double scale = field[node] / (std::sqrt(g2) * field.h());
  return {-scale * d.px, -scale * d.py};
}

}  // namespace detail

/// Single normal step from a node toward the zero level set:
/// x* = x - phi(x) grad(phi)/|grad(phi)|.
template <class Grid>
Point2 project_to_interface(const LevelSetField<Grid>& field, NodeId node) {
  const auto [qx, qy] = detail::interface_shift(field, node);
  const Point2 x = field.grid().node_point(node);
  const double h = field.h();
  return {x.x + qx * h, x.y + qy * h};
}

/// Dimensionless curvature at the projected interface point: node curvature
/// evaluated at the four corners of the cell containing x*, combined
/// bilinearly, times h. Cell and weights are resolved in lattice coordinates
/// so translating a field by whole cells reproduces outputs exactly.
template <class Grid>
double compound_numerical_hkappa(const LevelSetField<Grid>& field, NodeId node) {
  const auto [qx, qy] = detail::interface_shift(field, node);
  const auto [i, j] = field.grid().node_coords(node);
  const double sx = std::floor(qx), sy = std::floor(qy);
  const int cx = i + static_cast<int>(sx), cy = j + static_cast<int>(sy);
  const double fx = qx - sx, fy = qy - sy;

  const Grid& grid = field.grid();
  const NodeId sw = grid.node_lookup(cx, cy), se = grid.node_lookup(cx + 1, cy);
  const NodeId nw = grid.node_lookup(cx, cy + 1), ne = grid.node_lookup(cx + 1, cy + 1);
  if (sw == kInvalidNode || se == kInvalidNode || nw == kInvalidNode || ne == kInvalidNode)
    throw NumericalError("compound_numerical_hkappa: projected point of node " +
                         std::to_string(node) + " falls outside the stored lattice");
  const double k00 = node_curvature(field, sw), k10 = node_curvature(field, se);
  const double k01 = node_curvature(field, nw), k11 = node_curvature(field, ne);
  return field.h() * (k00 * (1.0 - fx) * (1.0 - fy) + k10 * fx * (1.0 - fy) +
                      k01 * (1.0 - fx) * fy + k11 * fx * fy);
}

struct ReinitParams {
  int iterations = 20;
  double cfl = 0.45;
  bool band_only = false;  // update only nodes with all four axis neighbors

  void validate() const {
    if (iterations < 0 || iterations > 1000)
      throw ValidationError("ReinitParams: iterations must be in [0, 1000]");
    if (!(cfl > 0.0 && cfl < 1.0))
      throw ValidationError("ReinitParams: cfl must be in (0, 1)");
  }
};

/// Pseudo-time redistancing toward |grad(phi)| = 1 with the zero set pinned.
/// Each iteration is one Heun step (two Euler stages, averaged) of
///   phi_tau = -S(phi0) (|grad(phi)|_G - 1),  S(phi0) = phi0/sqrt(phi0^2+h^2),
/// where |grad(phi)|_G is the Godunov combination of one-sided differences.
/// The one-sided differences carry minmod-limited second-order corrections,
/// and edges crossed by the phi0 zero set difference against the interface at
/// its quadratically interpolated crossing distance instead of the neighbor.
/// Boundary nodes reuse the interior one-sided difference for a missing side;
/// with band_only set, nodes missing any axis neighbor are frozen.
template <class Grid>
LevelSetField<Grid> reinitialize(const LevelSetField<Grid>& field, const ReinitParams& params);

/// As reinitialize(), returning the state after each requested iteration
/// count (ascending). All snapshots share the sign factor and crossing
/// distances of the input field, so snapshot k equals reinitialize with
/// iterations = k.
template <class Grid>
std::vector<LevelSetField<Grid>> reinitialize_snapshots(const LevelSetField<Grid>& field,
                                                        const ReinitParams& params,
                                                        std::span<const int> iteration_counts);

// --- implementation ---

namespace detail {

inline double minmod(double a, double b) {
  if (a * b <= 0.0) return 0.0;
  return std::abs(a) < std::abs(b) ? a : b;
}

template <class Grid>
class Reinitializer {
public:
  Reinitializer(const LevelSetField<Grid>& field, const ReinitParams& params)
      : grid_(field.grid()), params_(params), n_(field.grid().num_nodes()) {
    params_.validate();
    if (!field.all_finite())
      throw ValidationError("reinitialize: input field has non-finite values");

    h_ = grid_.h();
    axis_.resize(n_);
    updatable_.resize(n_);
    for (NodeId id = 0; id < n_; ++id) {
      axis_[id] = grid_.axis_neighbors(id);
      const auto& a = axis_[id];
      const bool complete = a[0] != kInvalidNode && a[1] != kInvalidNode &&
                            a[2] != kInvalidNode && a[3] != kInvalidNode;
      updatable_[id] = params_.band_only ? complete : true;
    }

    const std::span<const double> phi0 = field.values();
    sign_.resize(n_);
    for (NodeId id = 0; id < n_; ++id)
      sign_[id] = phi0[id] / std::sqrt(phi0[id] * phi0[id] + h_ * h_);

    compute_second_diffs(phi0, fxx0_, fyy0_);
    cross_e_.assign(n_, kNoCrossing);
    cross_n_.assign(n_, kNoCrossing);
    for (NodeId id = 0; id < n_; ++id) {
      const NodeId e = axis_[id][1], nn = axis_[id][3];
      if (e != kInvalidNode && phi0[id] * phi0[e] < 0.0)
        cross_e_[id] = crossing_distance(phi0[id], phi0[e], minmod(fxx0_[id], fxx0_[e]));
      if (nn != kInvalidNode && phi0[id] * phi0[nn] < 0.0)
        cross_n_[id] = crossing_distance(phi0[id], phi0[nn], minmod(fyy0_[id], fyy0_[nn]));
    }
  }

  std::vector<LevelSetField<Grid>> run(const LevelSetField<Grid>& field,
                                       std::span<const int> snapshot_counts) {
    for (std::size_t k = 0; k < snapshot_counts.size(); ++k) {
      if (snapshot_counts[k] < 0)
        throw ValidationError("reinitialize: negative iteration count");
      if (k > 0 && snapshot_counts[k] < snapshot_counts[k - 1])
        throw ValidationError("reinitialize: snapshot counts must be ascending");
    }

    std::vector<LevelSetField<Grid>> out;
    out.reserve(snapshot_counts.size());
    std::vector<double> phi(field.values().begin(), field.values().end());
    std::vector<double> stage1(phi.size()), stage2(phi.size());
    const double dt = params_.cfl * h_;

    int done = 0;
    std::size_t next = 0;
    while (next < snapshot_counts.size() && snapshot_counts[next] == done) {
      out.emplace_back(grid_, std::vector<double>(phi));
      ++next;
    }
    while (next < snapshot_counts.size()) {
      euler_stage(phi, dt, stage1);
      euler_stage(stage1, dt, stage2);
      for (NodeId id = 0; id < n_; ++id) phi[id] = 0.5 * (phi[id] + stage2[id]);
      ++done;
      while (next < snapshot_counts.size() && snapshot_counts[next] == done) {
        out.emplace_back(grid_, std::vector<double>(phi));
        ++next;
      }
    }
    return out;
  }

private:
  static constexpr double kNoCrossing = -1.0;

  // Zero of the quadratic interpolant of phi0 along an edge, as a distance
  // from the first endpoint, clamped to [1e-3 h, h].
  double crossing_distance(double f0, double f1, double fxx) const {
    double s = h_ * f0 / (f0 - f1);
    const double qa = 0.5 * fxx;
    const double qb = (f1 - f0) / h_ - 0.5 * fxx * h_;
    const double disc = qb * qb - 4.0 * qa * f0;
    if (std::abs(qa) * h_ > 1e-12 * std::abs(qb) && disc >= 0.0) {
      const double root = std::sqrt(disc);
      const double r1 = (-qb + root) / (2.0 * qa);
      const double r2 = (-qb - root) / (2.0 * qa);
      if (r1 >= 0.0 && r1 <= h_)
        s = r1;
      else if (r2 >= 0.0 && r2 <= h_)
        s = r2;
    }
    return std::min(std::max(s, 1e-3 * h_), h_);
  }

  void compute_second_diffs(std::span<const double> phi, std::vector<double>& fxx,
                            std::vector<double>& fyy) const {
    fxx.assign(n_, 0.0);
    fyy.assign(n_, 0.0);
    const double inv_h2 = 1.0 / (h_ * h_);
    for (NodeId id = 0; id < n_; ++id) {
      const auto& a = axis_[id];
      if (a[0] != kInvalidNode && a[1] != kInvalidNode)
        fxx[id] = (phi[a[1]] - 2.0 * phi[id] + phi[a[0]]) * inv_h2;
      if (a[2] != kInvalidNode && a[3] != kInvalidNode)
        fyy[id] = (phi[a[3]] - 2.0 * phi[id] + phi[a[2]]) * inv_h2;
    }
  }

  void euler_stage(const std::vector<double>& phi, double dt, std::vector<double>& out) {
    compute_second_diffs(phi, fxx_, fyy_);
    out = phi;
    for (NodeId id = 0; id < n_; ++id) {
      if (!updatable_[id]) continue;
      const double s = sign_[id];
      if (s == 0.0) continue;

      const auto& nb = axis_[id];
      const double g = godunov_gradient(phi, id, nb, s);
      out[id] = phi[id] - dt * s * (g - 1.0);
    }
  }

  double godunov_gradient(const std::vector<double>& phi, NodeId id, const AxisNeighbors& nb,
                          double s) const {
    const double c = phi[id];
    const NodeId w = nb[0], e = nb[1], sn = nb[2], nn = nb[3];

    double bwd_x = 0.0, fwd_x = 0.0;
    one_sided_pair(phi, c, w, e, fxx_, id, cross_e_, bwd_x, fwd_x);
    double bwd_y = 0.0, fwd_y = 0.0;
    one_sided_pair(phi, c, sn, nn, fyy_, id, cross_n_, bwd_y, fwd_y);

    auto sq = [](double v) { return v * v; };
    double gx2, gy2;
    if (s > 0.0) {
      gx2 = std::max(sq(std::max(bwd_x, 0.0)), sq(std::min(fwd_x, 0.0)));
      gy2 = std::max(sq(std::max(bwd_y, 0.0)), sq(std::min(fwd_y, 0.0)));
    } else {
      gx2 = std::max(sq(std::min(bwd_x, 0.0)), sq(std::max(fwd_x, 0.0)));
      gy2 = std::max(sq(std::min(bwd_y, 0.0)), sq(std::max(fwd_y, 0.0)));
    }
    return std::sqrt(gx2 + gy2);
  }

  // Backward/forward one-sided differences along one axis at node id, with
  // minmod second-order corrections, interface-crossing replacement, and the
  // interior-difference fallback for a missing side.
  void one_sided_pair(const std::vector<double>& phi, double c, NodeId prev, NodeId next,
                      const std::vector<double>& second, NodeId id,
                      const std::vector<double>& cross, double& bwd, double& fwd) const {
    const bool has_prev = prev != kInvalidNode;
    const bool has_next = next != kInvalidNode;

    double s_prev = kNoCrossing, s_next = kNoCrossing;
    if (has_prev && cross[prev] != kNoCrossing) s_prev = std::max(h_ - cross[prev], 1e-3 * h_);
    if (cross[id] != kNoCrossing) s_next = cross[id];

    if (has_prev) {
      const double mm = minmod(second[prev], second[id]);
      bwd = (s_prev != kNoCrossing) ? c / s_prev + 0.5 * s_prev * mm
                                    : (c - phi[prev]) / h_ + 0.5 * h_ * mm;
    }
    if (has_next) {
      const double mm = minmod(second[id], second[next]);
      fwd = (s_next != kNoCrossing) ? -c / s_next - 0.5 * s_next * mm
                                    : (phi[next] - c) / h_ - 0.5 * h_ * mm;
    }
    if (!has_prev) bwd = has_next ? (phi[next] - c) / h_ : 0.0;
    if (!has_next) fwd = has_prev ? (c - phi[prev]) / h_ : 0.0;
  }

  const Grid& grid_;
  ReinitParams params_;
  NodeId n_;
  double h_ = 0.0;
  std::vector<AxisNeighbors> axis_;
  std::vector<char> updatable_;
  std::vector<double> sign_;
  std::vector<double> fxx0_, fyy0_;
  std::vector<double> cross_e_, cross_n_;  // crossing distance toward E / N, else -1
  std::vector<double> fxx_, fyy_;          // scratch, per stage
};

}  // namespace detail

template <class Grid>
std::vector<LevelSetField<Grid>> reinitialize_snapshots(const LevelSetField<Grid>& field,
                                                        const ReinitParams& params,
                                                        std::span<const int> iteration_counts) {
  detail::Reinitializer<Grid> engine(field, params);
  return engine.run(field, iteration_counts);
}

template <class Grid>
LevelSetField<Grid> reinitialize(const LevelSetField<Grid>& field, const ReinitParams& params) {
  const int counts[1] = {params.iterations};
  auto snapshots = reinitialize_snapshots(field, params, counts);
  return std::move(snapshots.front());
}

}  // namespace curvnet
