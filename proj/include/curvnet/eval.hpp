#pragma once

#include <filesystem>
#include <map>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "curvnet/fields.hpp"
#include "curvnet/nnet.hpp"

namespace curvnet {

enum class Shape { kSmooth, kAcute };
enum class GridKind { kUniform, kQuadtree };
enum class Method { kNeural, kNumerical };

const char* to_string(Shape s);
const char* to_string(GridKind g);
const char* to_string(Method m);

/// One flower-interface accuracy study: shape, grid, resolution, and the
/// resolution tag of the network evaluated against the numerical baseline.
struct ExperimentSpec {
  std::string name;
  Shape shape = Shape::kSmooth;
  GridKind grid_kind = GridKind::kUniform;
  double half_width = 0.0;    // domain is [-half_width, half_width]^2
  int nodes_per_side = 0;     // uniform grids
  int max_level = 0;          // quadtree grids
  int model_rho = 0;          // matching network resolution tag
  int expected_samples = 0;
  int sample_tolerance = 0;   // 0 = exact

  FlowerSpec flower() const {
    return {shape == Shape::kSmooth ? 0.05 : 0.075, 0.15, 3};
  }
  SquareBounds bounds() const { return SquareBounds::centered(half_width); }
};

/// The eight studies: smooth/acute flowers on low/medium/high uniform grids
/// and on level-7 quadtrees.
std::vector<ExperimentSpec> experiment_catalog();

const ExperimentSpec& find_experiment(const std::string& name);

struct ErrorReport {
  std::string experiment;
  Method method = Method::kNumerical;
  int iterations = 0;
  int n = 0;
  double mae = 0.0;
  double mse = 0.0;
  double max_ae = 0.0;
  double pearson_r = 0.0;
  bool pearson_defined = false;
};

/// MAE / MSE / max-AE and the Pearson correlation between predictions and
/// targets. Pairs are accumulated in a canonical sort order, so the report is
/// invariant under permutations of the inputs.
ErrorReport error_stats(std::span<const double> predictions, std::span<const double> targets);

struct NodeRecord {
  double target = 0.0;
  double prediction = 0.0;
};

struct MethodResult {
  ErrorReport report;
  std::vector<NodeRecord> records;
};

struct ExperimentResult {
  MethodResult numerical;
  std::optional<MethodResult> neural;  // absent without a matching model
};

/// Builds the cataloged grid and flower field, redistances it with the given
/// iteration count, and scores the numerical baseline (and the network, when
/// supplied) against analytic targets at every interface-adjacent node.
ExperimentResult run_experiment(const ExperimentSpec& spec, int iterations,
                                const MlpModel* model);

/// Models indexed by resolution tag.
using ModelStore = std::map<int, MlpModel>;

ModelStore load_model_store(const std::filesystem::path& dir);

/// Writes the summary table `report.csv` plus, per entry, a scatter CSV of
/// (target, prediction) pairs and an SVG scatter plot named
/// <experiment>_<method>_it<k>.{csv,svg}.
void emit_report(std::span<const ErrorReport> reports,
                 const std::vector<std::vector<NodeRecord>>& records,
                 const std::filesystem::path& dir);

std::string scatter_basename(const ErrorReport& report);

}  // namespace curvnet
