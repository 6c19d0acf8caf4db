#include "curvnet/eval.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <limits>
#include <numeric>

namespace curvnet {

const char* to_string(Shape s) { return s == Shape::kSmooth ? "smooth" : "acute"; }
const char* to_string(GridKind g) { return g == GridKind::kUniform ? "uniform" : "quadtree"; }
const char* to_string(Method m) { return m == Method::kNeural ? "neural" : "numerical"; }

std::vector<ExperimentSpec> experiment_catalog() {
  std::vector<ExperimentSpec> catalog;
  const auto uniform = [&](const char* name, Shape shape, double half, int nodes, int rho,
                           int samples) {
    catalog.push_back({name, shape, GridKind::kUniform, half, nodes, 0, rho, samples, 0});
  };
  const auto quadtree = [&](const char* name, Shape shape, double half, int rho, int samples) {
    catalog.push_back({name, shape, GridKind::kQuadtree, half, 0, 7, rho, samples, 2});
  };
  uniform("smooth_uniform_low", Shape::kSmooth, 0.207843, 107, 256, 528);
  uniform("smooth_uniform_medium", Shape::kSmooth, 0.207547, 111, 266, 552);
  uniform("smooth_uniform_high", Shape::kSmooth, 0.207339, 114, 276, 564);
  uniform("acute_uniform_low", Shape::kAcute, 0.232826, 120, 256, 624);
  uniform("acute_uniform_medium", Shape::kAcute, 0.232563, 124, 266, 648);
  uniform("acute_uniform_high", Shape::kAcute, 0.232258, 129, 276, 672);
  quadtree("smooth_quadtree_l7", Shape::kSmooth, 0.246154, 266, 536);
  quadtree("acute_quadtree_l7", Shape::kAcute, 0.244068, 266, 644);
  return catalog;
}

const ExperimentSpec& find_experiment(const std::string& name) {
  static const std::vector<ExperimentSpec> catalog = experiment_catalog();
  for (const ExperimentSpec& spec : catalog)
    if (spec.name == name) return spec;
  throw ValidationError("unknown experiment '" + name + "'");
}

ErrorReport error_stats(std::span<const double> predictions, std::span<const double> targets) {
  if (predictions.size() != targets.size())
    throw ValidationError("error_stats: prediction/target length mismatch");
  if (predictions.empty()) throw ValidationError("error_stats: empty inputs");

  // Canonical accumulation order, so shuffled inputs produce the same bits.
  std::vector<std::pair<double, double>> pairs(predictions.size());
  for (std::size_t k = 0; k < predictions.size(); ++k)
    pairs[k] = {targets[k], predictions[k]};
  std::sort(pairs.begin(), pairs.end());

  ErrorReport report;
  report.n = static_cast<int>(pairs.size());
  const double inv_n = 1.0 / static_cast<double>(pairs.size());

  double abs_sum = 0.0, sq_sum = 0.0, max_ae = 0.0;
  double t_sum = 0.0, p_sum = 0.0;
  for (const auto& [t, p] : pairs) {
    const double e = p - t;
    abs_sum += std::abs(e);
    sq_sum += e * e;
    max_ae = std::max(max_ae, std::abs(e));
    t_sum += t;
    p_sum += p;
  }
  report.mae = abs_sum * inv_n;
  report.mse = sq_sum * inv_n;
  report.max_ae = max_ae;

  const double t_mean = t_sum * inv_n, p_mean = p_sum * inv_n;
  double tt = 0.0, pp = 0.0, tp = 0.0;
  for (const auto& [t, p] : pairs) {
    tt += (t - t_mean) * (t - t_mean);
    pp += (p - p_mean) * (p - p_mean);
    tp += (t - t_mean) * (p - p_mean);
  }
  if (tt > 0.0 && pp > 0.0) {
    report.pearson_r = tp / std::sqrt(tt * pp);
    report.pearson_defined = true;
  } else {
    report.pearson_r = std::numeric_limits<double>::quiet_NaN();
    report.pearson_defined = false;
  }
  return report;
}

namespace {

template <class Grid>
ExperimentResult run_on_grid(const Grid& grid, const ExperimentSpec& spec, int iterations,
                             const MlpModel* model) {
  const FlowerSpec flower = spec.flower();
  // The polar angle is undefined at the origin; use the theta=0 limit there.
  // The origin is deep inside the interface, far from every harvested node.
  const double origin_value = -(flower.petal_amplitude + flower.base_radius);
  const auto phi0 = LevelSetField<Grid>::sampled(grid, [&](const Point2& p) {
    return (p.x == 0.0 && p.y == 0.0) ? origin_value : eval_flower(flower, p);
  });

  ReinitParams params;
  params.iterations = iterations;
  params.band_only = spec.grid_kind == GridKind::kQuadtree;
  const auto phi = reinitialize(phi0, params);

  const double h = grid.h();
  std::vector<double> targets, numerical, neural;
  for (NodeId node : interface_adjacent_nodes(grid, phi.values())) {
    const auto stencil = grid.stencil9_at(node);
    if (!stencil) {
      if (spec.grid_kind == GridKind::kQuadtree)
        throw NumericalError(spec.name + ": adjacent node " + std::to_string(node) +
                             " lacks a full stencil; refined band too thin");
      continue;
    }
    targets.push_back(flower_target_hkappa(flower, grid.node_point(node), h));
    numerical.push_back(compound_numerical_hkappa(phi, node));
    if (model) neural.push_back(model->forward(stencil_values(phi, *stencil)));
  }

  const int n = static_cast<int>(targets.size());
  if (std::abs(n - spec.expected_samples) > spec.sample_tolerance)
    throw NumericalError(spec.name + ": harvested " + std::to_string(n) +
                         " samples, expected " + std::to_string(spec.expected_samples) +
                         (spec.sample_tolerance ? " +-" + std::to_string(spec.sample_tolerance)
                                                : ""));

  ExperimentResult result;
  const auto fill = [&](Method method, const std::vector<double>& predictions) {
    MethodResult mr;
    mr.report = error_stats(predictions, targets);
    mr.report.experiment = spec.name;
    mr.report.method = method;
    mr.report.iterations = iterations;
    mr.records.resize(targets.size());
    for (std::size_t k = 0; k < targets.size(); ++k)
      mr.records[k] = {targets[k], predictions[k]};
    return mr;
  };
  result.numerical = fill(Method::kNumerical, numerical);
  if (model) result.neural = fill(Method::kNeural, neural);
  return result;
}

}  // namespace

ExperimentResult run_experiment(const ExperimentSpec& spec, int iterations,
                                const MlpModel* model) {
  if (model && model->rho_tag() != spec.model_rho)
    throw ValidationError(spec.name + ": model resolution tag " +
                          std::to_string(model->rho_tag()) + " does not match required " +
                          std::to_string(spec.model_rho));
  if (spec.grid_kind == GridKind::kUniform) {
    const UniformGrid grid(spec.bounds(), spec.nodes_per_side);
    return run_on_grid(grid, spec, iterations, model);
  }
  const FlowerSpec flower = spec.flower();
  const double origin_value = -(flower.petal_amplitude + flower.base_radius);
  const QuadtreeGrid grid(
      spec.bounds(), spec.max_level,
      [&](const Point2& p) {
        return (p.x == 0.0 && p.y == 0.0) ? origin_value : eval_flower(flower, p);
      },
      1.2);
  return run_on_grid(grid, spec, iterations, model);
}

ModelStore load_model_store(const std::filesystem::path& dir) {
  if (!std::filesystem::is_directory(dir))
    throw ValidationError("load_model_store: not a directory: " + dir.string());
  std::vector<std::filesystem::path> paths;
  for (const auto& entry : std::filesystem::directory_iterator(dir))
    if (entry.is_regular_file() && entry.path().extension() == ".json")
      paths.push_back(entry.path());
  std::sort(paths.begin(), paths.end());
  ModelStore store;
  for (const auto& path : paths) {
    MlpModel model = load_model(path);
    const int tag = model.rho_tag();
    if (store.count(tag))
      throw ValidationError("load_model_store: duplicate models for resolution " +
                            std::to_string(tag));
    store.emplace(tag, std::move(model));
  }
  return store;
}

std::string scatter_basename(const ErrorReport& report) {
  return report.experiment + "_" + to_string(report.method) + "_it" +
         std::to_string(report.iterations);
}

namespace {

void write_scatter_csv(const std::filesystem::path& path,
                       std::span<const NodeRecord> records) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw ValidationError("emit_report: cannot open " + path.string());
  out << "target,prediction\n";
  char buf[96];
  for (const NodeRecord& r : records) {
    const int len = std::snprintf(buf, sizeof buf, "%.17g,%.17g\n", r.target, r.prediction);
    out.write(buf, len);
  }
}

void write_scatter_svg(const std::filesystem::path& path, const ErrorReport& report,
                       std::span<const NodeRecord> records) {
  double lo = 0.0, hi = 0.0;
  if (!records.empty()) {
    lo = std::numeric_limits<double>::infinity();
    hi = -lo;
    for (const NodeRecord& r : records) {
      lo = std::min({lo, r.target, r.prediction});
      hi = std::max({hi, r.target, r.prediction});
    }
  }
  if (!(hi > lo)) {
    lo -= 1.0;
    hi += 1.0;
  }
  const double pad = 0.05 * (hi - lo);
  lo -= pad;
  hi += pad;

  constexpr double kSize = 420.0, kMargin = 50.0;
  const double span = kSize - 2.0 * kMargin;
  const auto sx = [&](double v) { return kMargin + (v - lo) / (hi - lo) * span; };
  const auto sy = [&](double v) { return kSize - kMargin - (v - lo) / (hi - lo) * span; };

  std::ofstream out(path, std::ios::binary);
  if (!out) throw ValidationError("emit_report: cannot open " + path.string());
  out << "<svg xmlns=\"http://www.w3.org/2000/svg\" width=\"" << kSize << "\" height=\""
      << kSize << "\" viewBox=\"0 0 " << kSize << " " << kSize << "\">\n";
  out << "<rect x=\"" << kMargin << "\" y=\"" << kMargin << "\" width=\"" << span
      << "\" height=\"" << span << "\" fill=\"white\" stroke=\"black\"/>\n";
  out << "<line x1=\"" << sx(lo) << "\" y1=\"" << sy(lo) << "\" x2=\"" << sx(hi) << "\" y2=\""
      << sy(hi) << "\" stroke=\"#999\" stroke-dasharray=\"4 3\"/>\n";
  for (const NodeRecord& r : records)
    out << "<circle cx=\"" << sx(r.target) << "\" cy=\"" << sy(r.prediction)
        << "\" r=\"1.6\" fill=\"#1f77b4\" fill-opacity=\"0.6\"/>\n";
  out << "<text x=\"" << kSize / 2 << "\" y=\"" << kMargin - 14
      << "\" text-anchor=\"middle\" font-size=\"13\">" << scatter_basename(report)
      << "</text>\n";
  char annot[128];
  if (report.pearson_defined)
    std::snprintf(annot, sizeof annot, "n = %d, r = %.6f", report.n, report.pearson_r);
  else
    std::snprintf(annot, sizeof annot, "n = %d, r undefined", report.n);
  out << "<text x=\"" << kSize / 2 << "\" y=\"" << kSize - 10
      << "\" text-anchor=\"middle\" font-size=\"12\">" << annot << "</text>\n";
  out << "<text x=\"" << kSize / 2 << "\" y=\"" << kSize - 26
      << "\" text-anchor=\"middle\" font-size=\"12\">expected vs estimated h*kappa</text>\n";
  out << "</svg>\n";
}

}  // namespace

void emit_report(std::span<const ErrorReport> reports,
                 const std::vector<std::vector<NodeRecord>>& records,
                 const std::filesystem::path& dir) {
  if (!records.empty() && records.size() != reports.size())
    throw ValidationError("emit_report: record list does not match reports");
  std::filesystem::create_directories(dir);

  std::ofstream table(dir / "report.csv", std::ios::binary);
  if (!table) throw ValidationError("emit_report: cannot open " + (dir / "report.csv").string());
  table << "experiment,method,iterations,n,mae,max_ae,mse,pearson_r\n";
  char buf[256];
  for (const ErrorReport& r : reports) {
    const int len =
        std::snprintf(buf, sizeof buf, "%s,%s,%d,%d,%.17g,%.17g,%.17g,", r.experiment.c_str(),
                      to_string(r.method), r.iterations, r.n, r.mae, r.max_ae, r.mse);
    table.write(buf, len);
    if (r.pearson_defined) {
      const int plen = std::snprintf(buf, sizeof buf, "%.17g\n", r.pearson_r);
      table.write(buf, plen);
    } else {
      table << "nan\n";
    }
  }
  table.close();

  for (std::size_t k = 0; k < records.size(); ++k) {
    const std::string base = scatter_basename(reports[k]);
    write_scatter_csv(dir / (base + ".csv"), records[k]);
    write_scatter_svg(dir / (base + ".svg"), reports[k], records[k]);
  }
}

}  // namespace curvnet
