#pragma once

#include <cstdint>
#include <filesystem>
#include <span>
#include <utility>
#include <vector>

#include "curvnet/dataset.hpp"

namespace curvnet {

struct TrainConfig {
  int batch_size = 32;
  double learning_rate = 1.5e-4;
  double beta1 = 0.9;
  double beta2 = 0.999;
  double epsilon = 1e-8;
  int max_epochs = 200;
  int patience = 30;  // epochs without validation-MAE improvement before stopping
  std::uint64_t seed = 0;
  int rho_tag = 0;

  void validate() const {
    if (batch_size < 1) throw ValidationError("TrainConfig: batch_size must be >= 1");
    if (patience < 1) throw ValidationError("TrainConfig: patience must be >= 1");
    if (max_epochs < 1) throw ValidationError("TrainConfig: max_epochs must be >= 1");
    if (!(learning_rate > 0.0)) throw ValidationError("TrainConfig: learning rate must be > 0");
  }
};

/// Fully connected regression network: 9 inputs, ReLU hidden layers, one
/// linear output. Inputs are standardized with the stored statistics before
/// the first layer. Weight matrices are row-major with shape (fan_in x
/// fan_out).
class MlpModel {
public:
  MlpModel() = default;
  MlpModel(std::vector<int> layer_sizes, Normalization norm, int rho_tag);

  /// He-uniform weights (fan-in), zero biases, drawn in layer order.
  static MlpModel random_init(std::vector<int> layer_sizes, Normalization norm, int rho_tag,
                              std::uint64_t seed);

  double forward(const std::array<double, 9>& stencil) const;

  int num_layers() const { return static_cast<int>(weights_.size()); }
  const std::vector<int>& layer_sizes() const { return sizes_; }
  const std::vector<std::vector<double>>& weights() const { return weights_; }
  const std::vector<std::vector<double>>& biases() const { return biases_; }
  std::vector<std::vector<double>>& mutable_weights() { return weights_; }
  std::vector<std::vector<double>>& mutable_biases() { return biases_; }
  const Normalization& normalization() const { return norm_; }
  void set_normalization(const Normalization& n) { norm_ = n; }
  int rho_tag() const { return rho_tag_; }

  std::size_t parameter_count() const;
  void validate() const;  // shape chain, finite values, positive stddevs

private:
  std::vector<int> sizes_;                   // [9, hidden..., 1]
  std::vector<std::vector<double>> weights_; // per layer, row-major (in x out)
  std::vector<std::vector<double>> biases_;  // per layer, length out
  Normalization norm_ = Normalization::identity();
  int rho_tag_ = 0;
};

/// Parameter-shaped gradient (or moment) storage.
struct ParamSet {
  std::vector<std::vector<double>> w;
  std::vector<std::vector<double>> b;

  static ParamSet zeros_like(const MlpModel& model);
};

/// Exact gradients of the batch-mean squared error with respect to every
/// weight and bias. The ReLU subgradient at 0 is 0.
ParamSet backward(const MlpModel& model, std::span<const Sample> batch);

struct AdamState {
  std::int64_t step = 0;
  ParamSet m;
  ParamSet v;

  static AdamState zeros_like(const MlpModel& model);
};

/// One bias-corrected Adam update of the model parameters in place.
void adam_step(MlpModel& model, AdamState& state, const ParamSet& grads,
               const TrainConfig& config);

struct TrainLog {
  std::vector<double> train_mse;  // per epoch, running mean over visited batches
  std::vector<double> val_mae;    // per epoch, raw-target validation MAE
  int best_epoch = -1;            // index of the epoch whose snapshot is returned

  int epochs_run() const { return static_cast<int>(val_mae.size()); }
};

/// Mini-batch Adam training with per-epoch reshuffling and early stopping on
/// validation MAE; returns the best-validation snapshot.
std::pair<MlpModel, TrainLog> train(const SplitSet& data, std::span<const int> layer_sizes,
                                    const TrainConfig& config);

/// Mean absolute error of the model over a sample set.
double evaluate_mae(const MlpModel& model, std::span<const Sample> samples);

// Versioned self-describing JSON model file; parameters round-trip bit-exactly.
void save_model(const MlpModel& model, const std::filesystem::path& path,
                const TrainConfig* config_echo = nullptr);
MlpModel load_model(const std::filesystem::path& path);

}  // namespace curvnet
