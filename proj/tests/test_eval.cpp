#include <doctest.h>

#include <cmath>
#include <filesystem>
#include <fstream>

#include "curvnet/eval.hpp"
#include "curvnet/random.hpp"

using namespace curvnet;

namespace {

std::filesystem::path fresh_dir(const char* name) {
  const auto dir = std::filesystem::temp_directory_path() / "curvnet_eval_tests" / name;
  std::filesystem::remove_all(dir);
  std::filesystem::create_directories(dir);
  return dir;
}

}  // namespace

TEST_CASE("error statistics") {
  SUBCASE("perfect fit") {
    const std::vector<double> t{0.1, -0.3, 0.5, 0.2};
    const auto r = error_stats(t, t);
    CHECK(r.mae == 0.0);
    CHECK(r.mse == 0.0);
    CHECK(r.max_ae == 0.0);
    CHECK(r.pearson_defined);
    CHECK(r.pearson_r == doctest::Approx(1.0));
  }
  SUBCASE("constant shift") {
    const std::vector<double> t{0.1, -0.3, 0.5, 0.2};
    std::vector<double> p = t;
    for (double& v : p) v += 0.5;
    const auto r = error_stats(p, t);
    CHECK(r.mae == doctest::Approx(0.5));
    CHECK(r.mse == doctest::Approx(0.25));
    CHECK(r.max_ae == doctest::Approx(0.5));
    CHECK(r.mae <= r.max_ae);
  }
  SUBCASE("constant targets leave the correlation undefined") {
    const std::vector<double> t{0.2, 0.2, 0.2};
    const std::vector<double> p{0.1, 0.2, 0.3};
    const auto r = error_stats(p, t);
    CHECK_FALSE(r.pearson_defined);
    CHECK(std::isnan(r.pearson_r));
  }
  SUBCASE("permutation invariance is bit exact") {
    Rng rng(3);
    std::vector<double> t(257), p(257);
    for (std::size_t k = 0; k < t.size(); ++k) {
      t[k] = uniform_in(rng, -1.0, 1.0);
      p[k] = t[k] + uniform_in(rng, -0.1, 0.1);
    }
    const auto base = error_stats(p, t);
    std::vector<int> order(t.size());
    for (std::size_t k = 0; k < t.size(); ++k) order[k] = static_cast<int>(k);
    shuffle(order, rng);
    std::vector<double> t2(t.size()), p2(t.size());
    for (std::size_t k = 0; k < t.size(); ++k) {
      t2[k] = t[order[k]];
      p2[k] = p[order[k]];
    }
    const auto shuffled = error_stats(p2, t2);
    CHECK(base.mae == shuffled.mae);
    CHECK(base.mse == shuffled.mse);
    CHECK(base.max_ae == shuffled.max_ae);
    CHECK(base.pearson_r == shuffled.pearson_r);
  }
  SUBCASE("length mismatch") {
    const std::vector<double> a{1.0, 2.0}, b{1.0};
    CHECK_THROWS_AS(error_stats(a, b), ValidationError);
  }
}

TEST_CASE("experiment catalog") {
  const auto catalog = experiment_catalog();
  REQUIRE(catalog.size() == 8);

  const auto& acute_high = find_experiment("acute_uniform_high");
  const UniformGrid high(acute_high.bounds(), acute_high.nodes_per_side);
  CHECK(std::abs(high.h() - 3.629032e-3) < 1e-8);

  const auto& smooth_med = find_experiment("smooth_uniform_medium");
  CHECK(smooth_med.nodes_per_side == 111);
  CHECK(smooth_med.model_rho == 266);

  const auto& acute_tree = find_experiment("acute_quadtree_l7");
  CHECK(acute_tree.max_level == 7);
  CHECK(std::abs(acute_tree.bounds().side / (1 << 7) - 3.813559e-3) < 1e-8);
  CHECK(acute_tree.model_rho == 266);

  CHECK(find_experiment("smooth_uniform_low").model_rho == 256);
  CHECK(find_experiment("smooth_uniform_high").model_rho == 276);
  CHECK_THROWS_AS(find_experiment("bogus"), ValidationError);

  int smooth = 0, acute = 0, quadtree = 0;
  for (const auto& spec : catalog) {
    smooth += spec.shape == Shape::kSmooth;
    acute += spec.shape == Shape::kAcute;
    quadtree += spec.grid_kind == GridKind::kQuadtree;
  }
  CHECK(smooth == 4);
  CHECK(acute == 4);
  CHECK(quadtree == 2);
}

TEST_CASE("numerical branch of the low-resolution smooth study") {
  const auto& spec = find_experiment("smooth_uniform_low");
  const auto result = run_experiment(spec, 20, nullptr);
  CHECK_FALSE(result.neural.has_value());
  const auto& report = result.numerical.report;
  CHECK(report.n == 528);
  CHECK(report.iterations == 20);
  CHECK(report.mae < 1e-3);
  CHECK(report.mae <= report.max_ae);
  CHECK(report.pearson_defined);
  CHECK(report.pearson_r > 0.99);
  CHECK(static_cast<int>(result.numerical.records.size()) == report.n);

  // Two runs produce bit-identical reports: nothing in this path is random.
  const auto again = run_experiment(spec, 20, nullptr);
  CHECK(again.numerical.report.mae == report.mae);
  CHECK(again.numerical.report.mse == report.mse);
  CHECK(again.numerical.report.max_ae == report.max_ae);
}

TEST_CASE("neural branch requires a matching resolution tag") {
  const auto& spec = find_experiment("smooth_uniform_low");
  const MlpModel wrong({9, 4, 1}, Normalization::identity(), 266);
  CHECK_THROWS_AS(run_experiment(spec, 5, &wrong), ValidationError);
}

TEST_CASE("report emission") {
  SUBCASE("empty report list produces a header-only table") {
    const auto dir = fresh_dir("empty");
    emit_report({}, {}, dir);
    std::ifstream in(dir / "report.csv");
    std::string line;
    REQUIRE(std::getline(in, line));
    CHECK(line == "experiment,method,iterations,n,mae,max_ae,mse,pearson_r");
    CHECK_FALSE(std::getline(in, line));
  }

  SUBCASE("one report produces the table and one scatter pair") {
    const auto dir = fresh_dir("single");
    ErrorReport report;
    report.experiment = "smooth_uniform_low";
    report.method = Method::kNumerical;
    report.iterations = 5;
    report.n = 2;
    std::vector<std::vector<NodeRecord>> records{{{0.1, 0.11}, {0.2, 0.19}}};
    emit_report({&report, 1}, records, dir);
    CHECK(std::filesystem::exists(dir / "report.csv"));
    CHECK(std::filesystem::exists(dir / "smooth_uniform_low_numerical_it5.csv"));
    CHECK(std::filesystem::exists(dir / "smooth_uniform_low_numerical_it5.svg"));
  }

  SUBCASE("full catalog naming covers every method and iteration count") {
    // 8 experiments x 2 methods x 3 iteration counts = 48 scatter pairs.
    std::vector<ErrorReport> reports;
    std::vector<std::vector<NodeRecord>> records;
    for (const auto& spec : experiment_catalog())
      for (Method method : {Method::kNeural, Method::kNumerical})
        for (int iters : {5, 10, 20}) {
          ErrorReport r;
          r.experiment = spec.name;
          r.method = method;
          r.iterations = iters;
          r.n = 1;
          reports.push_back(r);
          records.push_back({{0.0, 0.0}});
        }
    REQUIRE(reports.size() == 48);
    const auto dir = fresh_dir("full");
    emit_report(reports, records, dir);
    int svg = 0, csv = 0;
    for (const auto& entry : std::filesystem::directory_iterator(dir)) {
      svg += entry.path().extension() == ".svg";
      csv += entry.path().extension() == ".csv" && entry.path().filename() != "report.csv";
    }
    CHECK(svg == 48);
    CHECK(csv == 48);
  }
}

TEST_CASE("model store loading") {
  const auto dir = fresh_dir("models");
  MlpModel a = MlpModel::random_init({9, 4, 1}, Normalization::identity(), 256, 1);
  MlpModel b = MlpModel::random_init({9, 4, 1}, Normalization::identity(), 266, 2);
  save_model(a, dir / "rho256.json");
  save_model(b, dir / "rho266.json");
  const auto store = load_model_store(dir);
  REQUIRE(store.size() == 2);
  CHECK(store.count(256) == 1);
  CHECK(store.count(266) == 1);

  save_model(a, dir / "duplicate.json");
  CHECK_THROWS_AS(load_model_store(dir), ValidationError);
}
