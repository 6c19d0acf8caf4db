#pragma once

#include <array>
#include <cstdint>
#include <filesystem>
#include <span>
#include <string>
#include <vector>

#include "curvnet/fields.hpp"
#include "curvnet/numerics.hpp"

namespace curvnet {

/// One training record: the 3x3 stencil of level-set values (row order as in
/// StencilNodes) and the dimensionless curvature at the nearest interface
/// point.
struct Sample {
  std::array<double, 9> stencil{};
  double hkappa = 0.0;

  Sample negated() const {
    Sample s;
    for (int k = 0; k < 9; ++k) s.stencil[k] = -stencil[k];
    s.hkappa = -hkappa;
    return s;
  }

  bool operator==(const Sample&) const = default;
};

/// Circle-sweep generation policy for one grid resolution.
struct DatasetSpec {
  int rho = 256;                                      // nodes per unit length
  std::vector<int> reinit_iterations{5, 10, 15, 20};  // redistancing sweep
  int repeats_per_radius = 5;
  std::uint64_t seed = 0;

  void validate() const;
  double h() const { return 1.0 / static_cast<double>(rho - 1); }
};

/// Number of circle radii used for a resolution of rho nodes per unit length.
int circle_count(int rho);

/// Sweep of circles on the unit square: for every radius (uniformly spaced in
/// [1.6h, 1/2 - 2h]) and every randomly centered repeat, harvest stencils of
/// interface-adjacent nodes from the signed-distance circle and from the
/// redistanced quadratic circle at each iteration count. Targets are h/r, and
/// every sample is emitted together with its negation. Deterministic for a
/// fixed seed.
std::vector<Sample> generate_circle_samples(const DatasetSpec& spec);

/// Stencil/target pairs for every interface-adjacent node of a flower field
/// that carries a full 3x3 stencil. Targets come from the analytic curvature
/// at the node's closest interface point. Quadtree fields must provide a
/// stencil at every adjacent node (a gap means the refined band is too thin).
template <class Grid>
std::vector<Sample> generate_flower_samples(const LevelSetField<Grid>& field,
                                            const FlowerSpec& flower);

/// Per-component standardization statistics of the stencil inputs.
struct Normalization {
  std::array<double, 9> mean{};
  std::array<double, 9> stddev{};

  std::array<double, 9> apply(const std::array<double, 9>& stencil) const {
    std::array<double, 9> out;
    for (int k = 0; k < 9; ++k) out[k] = (stencil[k] - mean[k]) / stddev[k];
    return out;
  }

  static Normalization identity() {
    Normalization n;
    n.mean.fill(0.0);
    n.stddev.fill(1.0);
    return n;
  }

  bool operator==(const Normalization&) const = default;
};

/// Component means and population standard deviations of the training inputs.
Normalization fit_normalization(std::span<const Sample> train);

struct SplitSet {
  std::vector<Sample> train;
  std::vector<Sample> validation;
  std::vector<Sample> test;

  std::size_t total() const { return train.size() + validation.size() + test.size(); }
};

/// Seeded shuffle followed by a contiguous 70/15/15 cut.
SplitSet split_samples(std::vector<Sample> samples, std::uint64_t seed);

// --- sample file format: header line, then one comma-separated record per
// line with the nine stencil values and the target at 17 significant digits.

extern const char* const kSampleCsvHeader;

void write_samples_csv(const std::filesystem::path& path, std::span<const Sample> samples);
std::vector<Sample> read_samples_csv(const std::filesystem::path& path);

/// FNV-1a content digest of the file a write_samples_csv call would produce.
std::uint64_t samples_digest(std::span<const Sample> samples);

// --- template implementation ---

template <class Grid>
std::vector<Sample> generate_flower_samples(const LevelSetField<Grid>& field,
                                            const FlowerSpec& flower) {
  flower.validate();
  const Grid& grid = field.grid();
  const double h = grid.h();
  std::vector<Sample> samples;
  for (NodeId node : interface_adjacent_nodes(grid, field.values())) {
    const auto stencil = grid.stencil9_at(node);
    if (!stencil) {
      if constexpr (std::is_same_v<Grid, QuadtreeGrid>)
        throw NumericalError("generate_flower_samples: adjacent node " + std::to_string(node) +
                             " lacks a full stencil; refined band too thin");
      else
        continue;  // interface touches the domain boundary
    }
    Sample s;
    s.stencil = stencil_values(field, *stencil);
    s.hkappa = flower_target_hkappa(flower, grid.node_point(node), h);
    samples.push_back(s);
  }
  return samples;
}

}  // namespace curvnet
