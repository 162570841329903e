#pragma once

#include <array>
#include <cstddef>
#include <cstdint>
#include <span>
#include <vector>

#include <Eigen/Dense>

#include "sdrgain/rng.hpp"

namespace sdrgain {

/// Fixed generator/discriminator topology for a part vector of length l:
/// input 4l (data ‖ mask or hint), eight ReLU layers of widths
/// [4l, 8l, 16l, 2l, 4l, 8l, 16l, 2l], sigmoid output of width 2l. With
/// `residual` the layer-4 output is added to the layer-8 output before the
/// output layer.
struct MlpArch {
  std::size_t l = 0;
  bool residual = false;

  static constexpr std::size_t kHiddenLayers = 8;
  static constexpr std::size_t kResidualSource = 4;

  std::size_t input_width() const noexcept { return 4 * l; }
  std::size_t output_width() const noexcept { return 2 * l; }
  std::size_t layer_count() const noexcept { return kHiddenLayers + 1; }
  std::array<std::size_t, kHiddenLayers> hidden_widths() const noexcept {
    return {4 * l, 8 * l, 16 * l, 2 * l, 4 * l, 8 * l, 16 * l, 2 * l};
  }
  /// (out, in) of layer j, 0-based; the last one is the output layer.
  std::pair<std::size_t, std::size_t> layer_shape(std::size_t j) const;

  friend bool operator==(const MlpArch&, const MlpArch&) = default;
};

struct DenseLayer {
  Eigen::MatrixXd weight;  // out x in
  Eigen::VectorXd bias;    // out
};

struct MlpParams {
  MlpArch arch;
  std::vector<DenseLayer> layers;
  /// Identifies this parameter state; forward caches remember it so a
  /// backward pass against updated parameters is rejected.
  std::uint64_t stamp = 0;

  void restamp();
};

using MlpGrads = std::vector<DenseLayer>;

/// Activations kept by a forward pass for the matching backward pass.
struct ForwardCache {
  std::uint64_t stamp = 0;
  MlpArch arch;
  std::vector<Eigen::MatrixXd> pre;  // z_1 .. z_9
  std::vector<Eigen::MatrixXd> act;  // a_0 (input) .. a_8
  Eigen::MatrixXd summed;            // input of the output layer
  Eigen::MatrixXd output;
};

/// Uniform Glorot weights, zero biases.
MlpParams init_mlp(const MlpArch& arch, RngStream& rng);
MlpParams zero_mlp(const MlpArch& arch);

/// Batched forward; columns are samples. Fills `cache` when given.
Eigen::MatrixXd forward(const MlpParams& params, const Eigen::Ref<const Eigen::MatrixXd>& input,
                        ForwardCache* cache = nullptr);
std::vector<double> forward(const MlpParams& params, std::span<const double> input);

struct Backprop {
  MlpGrads grads;
  Eigen::MatrixXd input_grad;
};

/// Reverse-mode gradients of sum(grad_output ⊙ output) with respect to every
/// parameter and the input. ReLU'(0) = 0.
Backprop backward(const MlpParams& params, const ForwardCache& cache,
                  const Eigen::Ref<const Eigen::MatrixXd>& grad_output);

MlpGrads zero_grads(const MlpArch& arch);

/// w <- w - lr * g for every weight and bias.
void sgd_step(MlpParams& params, const MlpGrads& grads, double lr);

/// Sum of |w| over weight matrices; biases excluded.
double l1_penalty(const MlpParams& params);
/// grads += scale * sign(W); sign(0) = 0.
void add_l1_subgradient(MlpGrads& grads, const MlpParams& params, double scale);

}  // namespace sdrgain
