#include "curvnet/nnet.hpp"

#include <algorithm>
#include <cmath>
#include <cstring>
#include <fstream>
#include <limits>
#include <numeric>
#include <string>

#include <json.hpp>

#include "curvnet/random.hpp"

#ifdef CURVNET_USE_OPENBLAS
#include <cblas.h>
extern "C" void openblas_set_num_threads(int);
#endif

namespace curvnet {
namespace {

#ifdef CURVNET_USE_OPENBLAS
// Threaded BLAS would make gradient sums depend on the thread count; keep the
// kernels sequential so seeded runs stay bit-reproducible.
const bool kBlasSingleThreaded = [] {
  openblas_set_num_threads(1);
  return true;
}();
#endif

// C(rows x cols) = A(rows x inner) * B(inner x cols) + bias (broadcast rows).
void matmul_bias(const double* a, const double* b, const double* bias, double* c, int rows,
                 int inner, int cols) {
  for (int i = 0; i < rows; ++i)
    std::memcpy(c + static_cast<std::size_t>(i) * cols, bias,
                sizeof(double) * static_cast<std::size_t>(cols));
#ifdef CURVNET_USE_OPENBLAS
  cblas_dgemm(CblasRowMajor, CblasNoTrans, CblasNoTrans, rows, cols, inner, 1.0, a, inner, b,
              cols, 1.0, c, cols);
#else
  for (int i = 0; i < rows; ++i) {
    double* crow = c + static_cast<std::size_t>(i) * cols;
    const double* arow = a + static_cast<std::size_t>(i) * inner;
    for (int k = 0; k < inner; ++k) {
      const double av = arow[k];
      const double* brow = b + static_cast<std::size_t>(k) * cols;
      for (int j = 0; j < cols; ++j) crow[j] += av * brow[j];
    }
  }
#endif
}

// dW(inner x cols) += A^T(rows x inner) * dZ(rows x cols); db(cols) += column sums.
void accumulate_grads(const double* a, const double* dz, double* dw, double* db, int rows,
                      int inner, int cols) {
#ifdef CURVNET_USE_OPENBLAS
  cblas_dgemm(CblasRowMajor, CblasTrans, CblasNoTrans, inner, cols, rows, 1.0, a, inner, dz,
              cols, 1.0, dw, cols);
#else
  for (int i = 0; i < rows; ++i) {
    const double* arow = a + static_cast<std::size_t>(i) * inner;
    const double* dzrow = dz + static_cast<std::size_t>(i) * cols;
    for (int k = 0; k < inner; ++k) {
      const double av = arow[k];
      double* dwrow = dw + static_cast<std::size_t>(k) * cols;
      for (int j = 0; j < cols; ++j) dwrow[j] += av * dzrow[j];
    }
  }
#endif
  for (int i = 0; i < rows; ++i) {
    const double* dzrow = dz + static_cast<std::size_t>(i) * cols;
    for (int j = 0; j < cols; ++j) db[j] += dzrow[j];
  }
}

// dA(rows x inner) = dZ(rows x cols) * W^T, with W stored (inner x cols).
void backprop_inputs(const double* dz, const double* w, double* da, int rows, int inner,
                     int cols) {
#ifdef CURVNET_USE_OPENBLAS
  cblas_dgemm(CblasRowMajor, CblasNoTrans, CblasTrans, rows, inner, cols, 1.0, dz, cols, w,
              cols, 0.0, da, inner);
#else
  for (int i = 0; i < rows; ++i) {
    const double* dzrow = dz + static_cast<std::size_t>(i) * cols;
    double* darow = da + static_cast<std::size_t>(i) * inner;
    for (int k = 0; k < inner; ++k) {
      const double* wrow = w + static_cast<std::size_t>(k) * cols;
      double acc = 0.0;
      for (int j = 0; j < cols; ++j) acc += dzrow[j] * wrow[j];
      darow[k] = acc;
    }
  }
#endif
}

/// Batched forward/backward scratch space for a fixed architecture.
class Engine {
public:
  Engine(const std::vector<int>& sizes, int batch_capacity)
      : sizes_(sizes), cap_(batch_capacity) {
    const int layers = static_cast<int>(sizes.size()) - 1;
    acts_.resize(layers + 1);
    dz_.resize(layers + 1);
    for (int l = 0; l <= layers; ++l) {
      acts_[l].resize(static_cast<std::size_t>(cap_) * sizes[l]);
      dz_[l].resize(static_cast<std::size_t>(cap_) * sizes[l]);
    }
  }

  /// Runs the layers on `rows` standardized inputs already staged in input().
  /// Hidden activations are ReLU, the output layer is linear.
  void forward(const MlpModel& model, int rows) {
    const int layers = model.num_layers();
    for (int l = 0; l < layers; ++l) {
      matmul_bias(acts_[l].data(), model.weights()[l].data(), model.biases()[l].data(),
                  acts_[l + 1].data(), rows, sizes_[l], sizes_[l + 1]);
      if (l + 1 < layers) {
        double* z = acts_[l + 1].data();
        const std::size_t count = static_cast<std::size_t>(rows) * sizes_[l + 1];
        for (std::size_t k = 0; k < count; ++k) z[k] = z[k] > 0.0 ? z[k] : 0.0;
      }
    }
  }

  /// Gradients of the batch-mean squared error; forward() must have run on the
  /// same staged inputs. ReLU gates on the stored activations (0 stays 0).
  void backward(const MlpModel& model, std::span<const double> targets, int rows,
                ParamSet& grads) {
    const int layers = model.num_layers();
    double* dout = dz_[layers].data();
    const double* yhat = acts_[layers].data();
    const double scale = 2.0 / static_cast<double>(rows);
    for (int i = 0; i < rows; ++i) dout[i] = scale * (yhat[i] - targets[i]);

    for (int l = layers - 1; l >= 0; --l) {
      accumulate_grads(acts_[l].data(), dz_[l + 1].data(), grads.w[l].data(),
                       grads.b[l].data(), rows, sizes_[l], sizes_[l + 1]);
      if (l > 0) {
        backprop_inputs(dz_[l + 1].data(), model.weights()[l].data(), dz_[l].data(), rows,
                        sizes_[l], sizes_[l + 1]);
        const double* act = acts_[l].data();
        double* d = dz_[l].data();
        const std::size_t count = static_cast<std::size_t>(rows) * sizes_[l];
        for (std::size_t k = 0; k < count; ++k)
          if (act[k] <= 0.0) d[k] = 0.0;
      }
    }
  }

  double* input() { return acts_[0].data(); }
  const double* output() const { return acts_.back().data(); }

private:
  std::vector<int> sizes_;
  int cap_;
  std::vector<std::vector<double>> acts_;
  std::vector<std::vector<double>> dz_;
};

void stage_standardized(const Normalization& norm, std::span<const Sample> batch,
                        double* dst) {
  for (std::size_t i = 0; i < batch.size(); ++i) {
    const auto z = norm.apply(batch[i].stencil);
    std::memcpy(dst + i * 9, z.data(), sizeof z);
  }
}

}  // namespace

MlpModel::MlpModel(std::vector<int> layer_sizes, Normalization norm, int rho_tag)
    : sizes_(std::move(layer_sizes)), norm_(norm), rho_tag_(rho_tag) {
  if (sizes_.size() < 2 || sizes_.front() != 9 || sizes_.back() != 1)
    throw ValidationError("MlpModel: layer sizes must run from 9 inputs to 1 output");
  for (int s : sizes_)
    if (s < 1) throw ValidationError("MlpModel: layer sizes must be positive");
  weights_.resize(sizes_.size() - 1);
  biases_.resize(sizes_.size() - 1);
  for (std::size_t l = 0; l + 1 < sizes_.size(); ++l) {
    weights_[l].assign(static_cast<std::size_t>(sizes_[l]) * sizes_[l + 1], 0.0);
    biases_[l].assign(static_cast<std::size_t>(sizes_[l + 1]), 0.0);
  }
}

MlpModel MlpModel::random_init(std::vector<int> layer_sizes, Normalization norm, int rho_tag,
                               std::uint64_t seed) {
  MlpModel model(std::move(layer_sizes), norm, rho_tag);
  Rng rng(seed);
  for (int l = 0; l < model.num_layers(); ++l) {
    const double limit = std::sqrt(6.0 / model.sizes_[l]);
    for (double& w : model.weights_[l]) w = uniform_in(rng, -limit, limit);
  }
  return model;
}

double MlpModel::forward(const std::array<double, 9>& stencil) const {
  std::array<double, 9> z = norm_.apply(stencil);
  std::vector<double> cur(z.begin(), z.end());
  std::vector<double> next;
  for (int l = 0; l < num_layers(); ++l) {
    const int in = sizes_[l], out = sizes_[l + 1];
    next.assign(biases_[l].begin(), biases_[l].end());
    const double* w = weights_[l].data();
    for (int k = 0; k < in; ++k) {
      const double a = cur[k];
      for (int j = 0; j < out; ++j) next[j] += a * w[static_cast<std::size_t>(k) * out + j];
    }
    if (l + 1 < num_layers())
      for (double& v : next) v = v > 0.0 ? v : 0.0;
    cur.swap(next);
  }
  return cur[0];
}

std::size_t MlpModel::parameter_count() const {
  std::size_t n = 0;
  for (int l = 0; l < num_layers(); ++l) n += weights_[l].size() + biases_[l].size();
  return n;
}

void MlpModel::validate() const {
  if (sizes_.size() < 2 || sizes_.front() != 9 || sizes_.back() != 1)
    throw ValidationError("MlpModel: layer sizes must run from 9 inputs to 1 output");
  if (weights_.size() != sizes_.size() - 1 || biases_.size() != sizes_.size() - 1)
    throw ValidationError("MlpModel: layer count mismatch");
  for (std::size_t l = 0; l + 1 < sizes_.size(); ++l) {
    if (weights_[l].size() != static_cast<std::size_t>(sizes_[l]) * sizes_[l + 1])
      throw ValidationError("MlpModel: weight shape mismatch at layer " + std::to_string(l));
    if (biases_[l].size() != static_cast<std::size_t>(sizes_[l + 1]))
      throw ValidationError("MlpModel: bias shape mismatch at layer " + std::to_string(l));
    for (double v : weights_[l])
      if (!std::isfinite(v)) throw ValidationError("MlpModel: non-finite weight");
    for (double v : biases_[l])
      if (!std::isfinite(v)) throw ValidationError("MlpModel: non-finite bias");
  }
  for (int k = 0; k < 9; ++k) {
    if (!std::isfinite(norm_.mean[k]) || !std::isfinite(norm_.stddev[k]) ||
        !(norm_.stddev[k] > 0.0))
      throw ValidationError("MlpModel: invalid normalization statistics");
  }
}

ParamSet ParamSet::zeros_like(const MlpModel& model) {
  ParamSet p;
  p.w.resize(model.num_layers());
  p.b.resize(model.num_layers());
  for (int l = 0; l < model.num_layers(); ++l) {
    p.w[l].assign(model.weights()[l].size(), 0.0);
    p.b[l].assign(model.biases()[l].size(), 0.0);
  }
  return p;
}

ParamSet backward(const MlpModel& model, std::span<const Sample> batch) {
  if (batch.empty()) throw ValidationError("backward: empty batch");
  Engine engine(model.layer_sizes(), static_cast<int>(batch.size()));
  stage_standardized(model.normalization(), batch, engine.input());
  engine.forward(model, static_cast<int>(batch.size()));
  std::vector<double> targets(batch.size());
  for (std::size_t i = 0; i < batch.size(); ++i) targets[i] = batch[i].hkappa;
  ParamSet grads = ParamSet::zeros_like(model);
  engine.backward(model, targets, static_cast<int>(batch.size()), grads);
  return grads;
}

AdamState AdamState::zeros_like(const MlpModel& model) {
  return {0, ParamSet::zeros_like(model), ParamSet::zeros_like(model)};
}

void adam_step(MlpModel& model, AdamState& state, const ParamSet& grads,
               const TrainConfig& config) {
  state.step += 1;
  const double inv_bc1 = 1.0 / (1.0 - std::pow(config.beta1, static_cast<double>(state.step)));
  const double inv_bc2 = 1.0 / (1.0 - std::pow(config.beta2, static_cast<double>(state.step)));
  const auto update = [&](std::vector<double>& params, std::vector<double>& m,
                          std::vector<double>& v, const std::vector<double>& g) {
    if (params.size() != g.size())
      throw ValidationError("adam_step: gradient shape does not match parameters");
    for (std::size_t k = 0; k < params.size(); ++k) {
      m[k] = config.beta1 * m[k] + (1.0 - config.beta1) * g[k];
      v[k] = config.beta2 * v[k] + (1.0 - config.beta2) * g[k] * g[k];
      const double mhat = m[k] * inv_bc1;
      const double vhat = v[k] * inv_bc2;
      params[k] -= config.learning_rate * mhat / (std::sqrt(vhat) + config.epsilon);
    }
  };
  for (int l = 0; l < model.num_layers(); ++l) {
    update(model.mutable_weights()[l], state.m.w[l], state.v.w[l], grads.w[l]);
    update(model.mutable_biases()[l], state.m.b[l], state.v.b[l], grads.b[l]);
  }
}

namespace {

double batched_mae(Engine& engine, const MlpModel& model, const std::vector<double>& inputs,
                   const std::vector<double>& targets, int batch_cap) {
  const int n = static_cast<int>(targets.size());
  double abs_sum = 0.0;
  for (int start = 0; start < n; start += batch_cap) {
    const int rows = std::min(batch_cap, n - start);
    std::memcpy(engine.input(), inputs.data() + static_cast<std::size_t>(start) * 9,
                sizeof(double) * 9 * static_cast<std::size_t>(rows));
    engine.forward(model, rows);
    const double* out = engine.output();
    for (int i = 0; i < rows; ++i) abs_sum += std::abs(out[i] - targets[start + i]);
  }
  return abs_sum / static_cast<double>(n);
}

}  // namespace

std::pair<MlpModel, TrainLog> train(const SplitSet& data, std::span<const int> layer_sizes,
                                    const TrainConfig& config) {
  config.validate();
  if (data.train.empty() || data.validation.empty())
    throw ValidationError("train: empty training or validation split");

  const Normalization norm = fit_normalization(data.train);
  std::vector<int> sizes(layer_sizes.begin(), layer_sizes.end());

  // The engine sees standardized inputs; the returned model standardizes
  // internally, so it is trained with identity statistics and stamped with
  // the real ones at the end.
  MlpModel model =
      MlpModel::random_init(sizes, Normalization::identity(), config.rho_tag, config.seed);
  Rng rng(config.seed + 0x9e3779b97f4a7c15ull);  // distinct stream from the init draws

  const int n_train = static_cast<int>(data.train.size());
  std::vector<double> train_x(static_cast<std::size_t>(n_train) * 9);
  std::vector<double> train_y(n_train);
  stage_standardized(norm, data.train, train_x.data());
  for (int i = 0; i < n_train; ++i) train_y[i] = data.train[i].hkappa;

  const int n_val = static_cast<int>(data.validation.size());
  std::vector<double> val_x(static_cast<std::size_t>(n_val) * 9);
  std::vector<double> val_y(n_val);
  stage_standardized(norm, data.validation, val_x.data());
  for (int i = 0; i < n_val; ++i) val_y[i] = data.validation[i].hkappa;

  const int eval_cap = 512;
  Engine engine(sizes, std::max(config.batch_size, eval_cap));
  AdamState adam = AdamState::zeros_like(model);
  ParamSet grads = ParamSet::zeros_like(model);

  std::vector<int> order(n_train);
  std::iota(order.begin(), order.end(), 0);
  std::vector<double> batch_y(config.batch_size);

  TrainLog log;
  MlpModel best = model;
  double best_mae = std::numeric_limits<double>::infinity();

  for (int epoch = 0; epoch < config.max_epochs; ++epoch) {
    shuffle(order, rng);
    double sq_sum = 0.0;
    for (int start = 0; start < n_train; start += config.batch_size) {
      const int rows = std::min(config.batch_size, n_train - start);
      double* staged = engine.input();
      for (int i = 0; i < rows; ++i) {
        const int src = order[start + i];
        std::memcpy(staged + static_cast<std::size_t>(i) * 9,
                    train_x.data() + static_cast<std::size_t>(src) * 9, sizeof(double) * 9);
        batch_y[i] = train_y[src];
      }
      engine.forward(model, rows);
      const double* out = engine.output();
      for (int i = 0; i < rows; ++i) {
        const double e = out[i] - batch_y[i];
        sq_sum += e * e;
      }
      for (auto& g : grads.w) std::fill(g.begin(), g.end(), 0.0);
      for (auto& g : grads.b) std::fill(g.begin(), g.end(), 0.0);
      engine.backward(model, {batch_y.data(), static_cast<std::size_t>(rows)}, rows, grads);
      adam_step(model, adam, grads, config);
    }

    const double train_mse = sq_sum / static_cast<double>(n_train);
    const double val_mae = batched_mae(engine, model, val_x, val_y, eval_cap);
    if (!std::isfinite(train_mse) || !std::isfinite(val_mae))
      throw NumericalError("train: loss diverged at epoch " + std::to_string(epoch) +
                           " (train MSE " + std::to_string(train_mse) + ")");
    log.train_mse.push_back(train_mse);
    log.val_mae.push_back(val_mae);

    if (val_mae < best_mae) {
      best_mae = val_mae;
      log.best_epoch = epoch;
      best = model;
    } else if (epoch - log.best_epoch >= config.patience) {
      break;
    }
  }

  best.set_normalization(norm);
  return {std::move(best), std::move(log)};
}

double evaluate_mae(const MlpModel& model, std::span<const Sample> samples) {
  if (samples.empty()) throw ValidationError("evaluate_mae: empty sample set");
  const int cap = 512;
  Engine engine(model.layer_sizes(), cap);
  // Fold the model's standardization into the staged inputs.
  double abs_sum = 0.0;
  const int n = static_cast<int>(samples.size());
  for (int start = 0; start < n; start += cap) {
    const int rows = std::min(cap, n - start);
    stage_standardized(model.normalization(), samples.subspan(start, rows), engine.input());
    engine.forward(model, rows);
    const double* out = engine.output();
    for (int i = 0; i < rows; ++i) abs_sum += std::abs(out[i] - samples[start + i].hkappa);
  }
  return abs_sum / static_cast<double>(n);
}

namespace {

constexpr const char* kModelFormat = "curvnet-mlp";
constexpr int kModelVersion = 1;

}  // namespace

void save_model(const MlpModel& model, const std::filesystem::path& path,
                const TrainConfig* config_echo) {
  model.validate();
  nlohmann::json j;
  j["format"] = kModelFormat;
  j["version"] = kModelVersion;
  j["rho_tag"] = model.rho_tag();
  j["layer_sizes"] = model.layer_sizes();
  j["weights"] = model.weights();
  j["biases"] = model.biases();
  j["normalization"] = {{"mean", model.normalization().mean},
                        {"stddev", model.normalization().stddev}};
  if (config_echo) {
    j["train_config"] = {{"batch_size", config_echo->batch_size},
                         {"learning_rate", config_echo->learning_rate},
                         {"beta1", config_echo->beta1},
                         {"beta2", config_echo->beta2},
                         {"epsilon", config_echo->epsilon},
                         {"max_epochs", config_echo->max_epochs},
                         {"patience", config_echo->patience},
                         {"seed", config_echo->seed}};
  }
  std::ofstream out(path, std::ios::binary);
  if (!out) throw ValidationError("save_model: cannot open " + path.string());
  out << j.dump(1) << '\n';
  if (!out) throw ValidationError("save_model: write failed for " + path.string());
}

MlpModel load_model(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw ValidationError("load_model: cannot open " + path.string());
  nlohmann::json j;
  try {
    in >> j;
  } catch (const nlohmann::json::exception& e) {
    throw ValidationError("load_model: malformed JSON in " + path.string() + ": " + e.what());
  }
  try {
    if (j.at("format").get<std::string>() != kModelFormat)
      throw ValidationError("load_model: unrecognized format in " + path.string());
    if (j.at("version").get<int>() != kModelVersion)
      throw ValidationError("load_model: unsupported version in " + path.string());
    Normalization norm;
    norm.mean = j.at("normalization").at("mean").get<std::array<double, 9>>();
    norm.stddev = j.at("normalization").at("stddev").get<std::array<double, 9>>();
    MlpModel model(j.at("layer_sizes").get<std::vector<int>>(), norm,
                   j.at("rho_tag").get<int>());
    auto weights = j.at("weights").get<std::vector<std::vector<double>>>();
    auto biases = j.at("biases").get<std::vector<std::vector<double>>>();
    if (weights.size() != model.mutable_weights().size() ||
        biases.size() != model.mutable_biases().size())
      throw ValidationError("load_model: layer count mismatch in " + path.string());
    for (std::size_t l = 0; l < weights.size(); ++l) {
      if (weights[l].size() != model.mutable_weights()[l].size() ||
          biases[l].size() != model.mutable_biases()[l].size())
        throw ValidationError("load_model: parameter shape mismatch in " + path.string());
      model.mutable_weights()[l] = std::move(weights[l]);
      model.mutable_biases()[l] = std::move(biases[l]);
    }
    model.validate();
    return model;
  } catch (const nlohmann::json::exception& e) {
    throw ValidationError("load_model: missing or mistyped field in " + path.string() + ": " +
                          e.what());
  }
}

}  // namespace curvnet
