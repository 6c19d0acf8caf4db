// curvnet: dataset generation, network training, and accuracy studies for
// level-set curvature estimation on uniform and quadtree grids.

#include <atomic>
#include <chrono>
#include <cstdio>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <mutex>
#include <optional>
#include <thread>

#include <CLI11.hpp>
#include <json.hpp>

#include "curvnet/eval.hpp"
#include "curvnet/random.hpp"

namespace fs = std::filesystem;
using namespace curvnet;

namespace {

constexpr int kExitUsage = 2;
constexpr int kExitValidation = 3;
constexpr int kExitNumerical = 4;

constexpr const char* kManifestFormat = "curvnet-dataset";
constexpr int kManifestVersion = 1;

std::uint64_t default_seed() {
  if (const char* env = std::getenv("CURVNET_SEED")) {
    char* end = nullptr;
    const unsigned long long v = std::strtoull(env, &end, 10);
    if (end != env && *end == '\0') return v;
    throw ValidationError("CURVNET_SEED is not an unsigned integer");
  }
  return 7;
}

std::string hex64(std::uint64_t v) {
  char buf[19];
  std::snprintf(buf, sizeof buf, "0x%016llx", static_cast<unsigned long long>(v));
  return buf;
}

struct Timer {
  std::chrono::steady_clock::time_point start = std::chrono::steady_clock::now();
  double seconds() const {
    return std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
  }
};

// --- gen ---

struct GenOptions {
  int rho = 256;
  std::uint64_t seed = 0;
  bool seed_given = false;
  std::string out;
  std::vector<int> iters{5, 10, 15, 20};
  int repeats = 5;
  bool force = false;
};

int run_gen(const GenOptions& opt) {
  DatasetSpec spec;
  spec.rho = opt.rho;
  spec.seed = opt.seed_given ? opt.seed : default_seed();
  spec.reinit_iterations = opt.iters;
  spec.repeats_per_radius = opt.repeats;
  spec.validate();

  const fs::path dir(opt.out);
  if (fs::exists(dir) && !fs::is_directory(dir))
    throw ValidationError("gen: output path is not a directory: " + dir.string());
  if (fs::is_directory(dir) && !fs::is_empty(dir) && !opt.force)
    throw ValidationError("gen: output directory is not empty (use --force): " + dir.string());
  fs::create_directories(dir);

  Timer timer;
  std::fprintf(stderr, "gen: rho=%d seed=%llu circles=%d repeats=%d\n", spec.rho,
               static_cast<unsigned long long>(spec.seed), circle_count(spec.rho),
               spec.repeats_per_radius);
  auto samples = generate_circle_samples(spec);
  const std::size_t total = samples.size();
  auto split = split_samples(std::move(samples), spec.seed);

  nlohmann::json manifest;
  manifest["format"] = kManifestFormat;
  manifest["version"] = kManifestVersion;
  manifest["rho"] = spec.rho;
  manifest["seed"] = spec.seed;
  manifest["reinit_iterations"] = spec.reinit_iterations;
  manifest["repeats_per_radius"] = spec.repeats_per_radius;
  manifest["counts"] = {{"train", split.train.size()},
                        {"validation", split.validation.size()},
                        {"test", split.test.size()},
                        {"total", total}};

  const auto write_part = [&](const char* name, const std::vector<Sample>& part) {
    write_samples_csv(dir / (std::string(name) + ".csv"), part);
    manifest["digests"][name] = hex64(samples_digest(part));
  };
  write_part("train", split.train);
  write_part("validation", split.validation);
  write_part("test", split.test);

  std::ofstream out(dir / "manifest.json");
  out << manifest.dump(1) << '\n';
  if (!out) throw ValidationError("gen: cannot write manifest");

  std::fprintf(stderr, "gen: %zu samples (%zu/%zu/%zu) in %.1f s -> %s\n", total,
               split.train.size(), split.validation.size(), split.test.size(), timer.seconds(),
               dir.string().c_str());
  return 0;
}

// --- train ---

struct TrainOptions {
  std::string data;
  std::string arch = "128x4";
  std::string out;
  bool desk_scale = true;
  std::uint64_t seed = 0;
  bool seed_given = false;
  double lr = 1.5e-4;
  int batch_size = 32;
  int max_epochs = 200;
  int patience = 30;
  int desk_train_cap = 300000;
  int desk_eval_cap = 64000;
};

std::vector<int> parse_arch(const std::string& arch) {
  const auto x = arch.find('x');
  if (x != std::string::npos) {
    const int width = std::atoi(arch.substr(0, x).c_str());
    const int depth = std::atoi(arch.substr(x + 1).c_str());
    if (width < 1 || depth < 1)
      throw ValidationError("train: bad --arch '" + arch + "' (expected WIDTHxDEPTH)");
    std::vector<int> sizes{9};
    sizes.insert(sizes.end(), depth, width);
    sizes.push_back(1);
    return sizes;
  }
  throw ValidationError("train: bad --arch '" + arch + "' (expected WIDTHxDEPTH, e.g. 128x4)");
}

void subsample(std::vector<Sample>& samples, std::size_t cap, Rng& rng) {
  if (samples.size() <= cap) return;
  shuffle(samples, rng);
  samples.resize(cap);
}

int run_train(const TrainOptions& opt) {
  const fs::path dir(opt.data);
  const fs::path manifest_path = dir / "manifest.json";
  if (!fs::exists(manifest_path))
    throw ValidationError("train: dataset manifest not found: " + manifest_path.string());
  nlohmann::json manifest;
  {
    std::ifstream in(manifest_path);
    try {
      in >> manifest;
    } catch (const nlohmann::json::exception& e) {
      throw ValidationError("train: malformed manifest: " + std::string(e.what()));
    }
  }
  if (manifest.value("format", "") != kManifestFormat)
    throw ValidationError("train: unrecognized manifest format");

  TrainConfig config;
  config.learning_rate = opt.lr;
  config.batch_size = opt.batch_size;
  config.max_epochs = opt.desk_scale ? std::min(opt.max_epochs, 60) : opt.max_epochs;
  config.patience = opt.patience;
  config.seed = opt.seed_given ? opt.seed : default_seed();
  config.rho_tag = manifest.at("rho").get<int>();

  Timer timer;
  SplitSet data;
  data.train = read_samples_csv(dir / "train.csv");
  data.validation = read_samples_csv(dir / "validation.csv");
  data.test = read_samples_csv(dir / "test.csv");
  std::fprintf(stderr, "train: loaded %zu/%zu/%zu samples in %.1f s\n", data.train.size(),
               data.validation.size(), data.test.size(), timer.seconds());

  if (opt.desk_scale) {
    Rng rng(config.seed ^ 0xd5c4a9e1ull);
    subsample(data.train, static_cast<std::size_t>(opt.desk_train_cap), rng);
    subsample(data.validation, static_cast<std::size_t>(opt.desk_eval_cap), rng);
    subsample(data.test, static_cast<std::size_t>(opt.desk_eval_cap), rng);
    std::fprintf(stderr, "train: desk-scale subsample %zu/%zu/%zu, epochs capped at %d\n",
                 data.train.size(), data.validation.size(), data.test.size(),
                 config.max_epochs);
  }

  const auto arch = parse_arch(opt.arch);
  Timer train_timer;
  const auto [model, log] = train(data, arch, config);
  const double test_mae = evaluate_mae(model, data.test);
  std::fprintf(stderr,
               "train: %d epochs (best %d) in %.1f s, val MAE %.6e, test MAE %.6e\n",
               log.epochs_run(), log.best_epoch, train_timer.seconds(),
               log.val_mae[log.best_epoch], test_mae);

  const fs::path out(opt.out);
  if (out.has_parent_path()) fs::create_directories(out.parent_path());
  save_model(model, out, &config);

  fs::path log_path = out;
  log_path.replace_extension(".log.csv");
  std::ofstream log_out(log_path);
  log_out << "epoch,train_mse,val_mae\n";
  char buf[96];
  for (int e = 0; e < log.epochs_run(); ++e) {
    std::snprintf(buf, sizeof buf, "%d,%.17g,%.17g\n", e, log.train_mse[e], log.val_mae[e]);
    log_out << buf;
  }
  if (!log_out) throw ValidationError("train: cannot write " + log_path.string());
  std::fprintf(stderr, "train: wrote %s and %s\n", out.string().c_str(),
               log_path.string().c_str());
  return 0;
}

// --- eval ---

struct EvalOptions {
  std::string models;
  std::string report;
  std::string experiment = "all";
  std::vector<int> iters{5, 10, 20};
  bool numerical_only = false;
  int jobs = 1;
};

int run_eval(const EvalOptions& opt) {
  ModelStore store;
  if (!opt.numerical_only) {
    if (opt.models.empty())
      throw ValidationError("eval: --models is required unless --numerical-only is set");
    store = load_model_store(opt.models);
  }

  std::vector<ExperimentSpec> specs;
  if (opt.experiment == "all")
    specs = experiment_catalog();
  else
    specs.push_back(find_experiment(opt.experiment));

  struct Task {
    const ExperimentSpec* spec;
    int iterations;
    const MlpModel* model;
  };
  std::vector<Task> tasks;
  for (const auto& spec : specs) {
    const MlpModel* model = nullptr;
    if (!opt.numerical_only) {
      const auto it = store.find(spec.model_rho);
      if (it == store.end())
        std::fprintf(stderr,
                     "eval: warning: no model for resolution %d, %s runs numerical-only\n",
                     spec.model_rho, spec.name.c_str());
      else
        model = &it->second;
    }
    for (int iters : opt.iters) tasks.push_back({&spec, iters, model});
  }

  std::vector<ExperimentResult> results(tasks.size());
  std::vector<double> wall(tasks.size(), 0.0);
  std::atomic<std::size_t> next{0};
  std::mutex log_mutex;
  const auto worker = [&]() {
    for (;;) {
      const std::size_t k = next.fetch_add(1);
      if (k >= tasks.size()) return;
      Timer timer;
      results[k] = run_experiment(*tasks[k].spec, tasks[k].iterations, tasks[k].model);
      wall[k] = timer.seconds();
      std::lock_guard<std::mutex> lock(log_mutex);
      std::fprintf(stderr, "eval: %s it%d done in %.2f s (n=%d)\n", tasks[k].spec->name.c_str(),
                   tasks[k].iterations, wall[k], results[k].numerical.report.n);
    }
  };
  const int jobs = std::max(1, opt.jobs);
  if (jobs == 1) {
    worker();
  } else {
    std::vector<std::thread> pool;
    for (int j = 0; j < jobs; ++j) pool.emplace_back(worker);
    for (auto& t : pool) t.join();
  }

  std::vector<ErrorReport> reports;
  std::vector<std::vector<NodeRecord>> records;
  for (std::size_t k = 0; k < tasks.size(); ++k) {
    if (results[k].neural) {
      reports.push_back(results[k].neural->report);
      records.push_back(results[k].neural->records);
    }
    reports.push_back(results[k].numerical.report);
    records.push_back(results[k].numerical.records);
  }
  emit_report(reports, records, fs::path(opt.report));
  std::fprintf(stderr, "eval: wrote %zu report rows to %s\n", reports.size(),
               opt.report.c_str());
  return 0;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Level-set curvature toolkit: synthetic datasets, curvature networks, "
               "and flower-interface accuracy studies"};
  app.require_subcommand(1);
  app.set_config("--config");

  GenOptions gen;
  CLI::App* gen_cmd = app.add_subcommand("gen", "Generate a circle-sweep training dataset");
  gen_cmd->add_option("--rho", gen.rho, "Nodes per unit length (256/266/276 for paper-parity)")
      ->check(CLI::Range(64, 4096));
  gen_cmd->add_option("--seed", gen.seed, "RNG seed (default: CURVNET_SEED or 7)")
      ->trigger_on_parse()
      ->each([&gen](const std::string&) { gen.seed_given = true; });
  gen_cmd->add_option("--out", gen.out, "Output directory")->required();
  gen_cmd->add_option("--iters", gen.iters, "Redistancing sweep for the quadratic circles")
      ->delimiter(',');
  gen_cmd->add_option("--repeats", gen.repeats, "Random centers per radius");
  gen_cmd->add_flag("--force", gen.force, "Write into a non-empty directory");

  TrainOptions tr;
  CLI::App* train_cmd = app.add_subcommand("train", "Train a curvature network on a dataset");
  train_cmd->add_option("--data", tr.data, "Dataset directory (from gen)")->required();
  train_cmd->add_option("--arch", tr.arch, "Hidden layers as WIDTHxDEPTH (128x4, 140x4)");
  train_cmd->add_option("--out", tr.out, "Model file to write")->required();
  train_cmd->add_flag("--desk-scale,!--full-scale", tr.desk_scale,
                      "Subsample training data and cap epochs (default on)");
  train_cmd->add_option("--seed", tr.seed, "RNG seed (default: CURVNET_SEED or 7)")
      ->trigger_on_parse()
      ->each([&tr](const std::string&) { tr.seed_given = true; });
  train_cmd->add_option("--lr", tr.lr, "Adam learning rate");
  train_cmd->add_option("--batch-size", tr.batch_size, "Mini-batch size");
  train_cmd->add_option("--epochs", tr.max_epochs, "Epoch cap");
  train_cmd->add_option("--patience", tr.patience, "Early-stopping patience");
  train_cmd->add_option("--desk-train-cap", tr.desk_train_cap,
                        "Training samples kept in desk-scale mode");

  EvalOptions ev;
  CLI::App* eval_cmd =
      app.add_subcommand("eval", "Run the flower-interface accuracy studies");
  eval_cmd->add_option("--models", ev.models, "Directory of trained model files");
  eval_cmd->add_option("--report", ev.report, "Report output directory")->required();
  eval_cmd->add_option("--experiment", ev.experiment, "Catalog entry name or 'all'");
  eval_cmd->add_option("--iters", ev.iters, "Redistancing iteration sweep")->delimiter(',');
  eval_cmd->add_flag("--numerical-only", ev.numerical_only,
                     "Skip the neural branch entirely");
  eval_cmd->add_option("--jobs", ev.jobs, "Concurrent experiments")->check(CLI::Range(1, 64));

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e);
    return code == 0 ? 0 : kExitUsage;
  }

  try {
    if (gen_cmd->parsed()) return run_gen(gen);
    if (train_cmd->parsed()) return run_train(tr);
    if (eval_cmd->parsed()) return run_eval(ev);
    return kExitUsage;
  } catch (const ValidationError& e) {
    std::fprintf(stderr, "error: %s\n", e.what());
    return kExitValidation;
  } catch (const NumericalError& e) {
    std::fprintf(stderr, "numerical error: %s\n", e.what());
    return kExitNumerical;
  } catch (const std::exception& e) {
    std::fprintf(stderr, "error: %s\n", e.what());
    return kExitValidation;
  }
}
