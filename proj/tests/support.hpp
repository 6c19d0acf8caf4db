#pragma once

// Shared oracles for the unit and acceptance suites. Everything here is
// independent of the library's differentiation path: finite differences work
// on the model only through its forward pass.

#include <cmath>
#include <vector>

#include "curvnet/nnet.hpp"
#include "curvnet/random.hpp"

namespace curvnet::testing {

inline double batch_mse(const MlpModel& model, std::span<const Sample> batch) {
  double sq = 0.0;
  for (const Sample& s : batch) {
    const double e = model.forward(s.stencil) - s.hkappa;
    sq += e * e;
  }
  return sq / static_cast<double>(batch.size());
}

struct GradCheckResult {
  double worst_rel = 0.0;
  int checked = 0;
};

/// Central-difference check of backward() on every weight and bias.
/// Relative error uses a small floor so near-zero gradients are compared
/// absolutely at 1e-5 * floor.
inline GradCheckResult gradient_check(MlpModel& model, std::span<const Sample> batch,
                                      double eps = 1e-4) {
  const ParamSet grads = backward(model, batch);
  GradCheckResult result;
  const auto check_param = [&](double& p, double analytic) {
    const double saved = p;
    p = saved + eps;
    const double up = batch_mse(model, batch);
    p = saved - eps;
    const double down = batch_mse(model, batch);
    p = saved;
    const double fd = (up - down) / (2.0 * eps);
    const double denom = std::max({std::abs(analytic), std::abs(fd), 1e-3});
    result.worst_rel = std::max(result.worst_rel, std::abs(analytic - fd) / denom);
    ++result.checked;
  };
  for (int l = 0; l < model.num_layers(); ++l) {
    auto& w = model.mutable_weights()[l];
    for (std::size_t k = 0; k < w.size(); ++k) check_param(w[k], grads.w[l][k]);
    auto& b = model.mutable_biases()[l];
    for (std::size_t k = 0; k < b.size(); ++k) check_param(b[k], grads.b[l][k]);
  }
  return result;
}

/// Random architecture/data pair for gradient checks. Hidden pre-activations
/// near the ReLU kink would invalidate the finite-difference oracle (the
/// perturbed pass may cross it), so draws are retried until the batch keeps a
/// clear margin.
inline std::pair<MlpModel, std::vector<Sample>> random_grad_case(std::uint64_t seed) {
  Rng rng(seed);
  for (int attempt = 0;; ++attempt) {
    const int depth = 1 + static_cast<int>(uniform_below(rng, 3));
    std::vector<int> sizes{9};
    for (int d = 0; d < depth; ++d)
      sizes.push_back(2 + static_cast<int>(uniform_below(rng, 15)));
    sizes.push_back(1);

    MlpModel model = MlpModel::random_init(sizes, Normalization::identity(), 0, rng());
    const int batch = 1 + static_cast<int>(uniform_below(rng, 8));
    std::vector<Sample> samples(batch);
    for (Sample& s : samples) {
      for (double& v : s.stencil) v = uniform_in(rng, -1.0, 1.0);
      s.hkappa = uniform_in(rng, -0.6, 0.6);
    }

    const double margin = 1e-2;
    bool clear = true;
    for (const Sample& s : samples) {
      std::vector<double> cur(s.stencil.begin(), s.stencil.end());
      std::vector<double> next;
      for (int l = 0; l < model.num_layers() && clear; ++l) {
        const int in = sizes[l], out = sizes[l + 1];
        next.assign(model.biases()[l].begin(), model.biases()[l].end());
        for (int k = 0; k < in; ++k)
          for (int j = 0; j < out; ++j)
            next[j] += cur[k] * model.weights()[l][static_cast<std::size_t>(k) * out + j];
        if (l + 1 < model.num_layers()) {
          for (double v : next)
            if (std::abs(v) < margin) clear = false;
          for (double& v : next) v = v > 0.0 ? v : 0.0;
        }
        cur.swap(next);
      }
      if (!clear) break;
    }
    if (clear || attempt > 64) return {std::move(model), std::move(samples)};
  }
}

}  // namespace curvnet::testing
