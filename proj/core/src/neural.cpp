#include "sdrgain/neural.hpp"

#include <atomic>
#include <cmath>
#include <string>

#include "sdrgain/error.hpp"

namespace sdrgain {

namespace {

std::uint64_t next_stamp() {
  static std::atomic<std::uint64_t> counter{0};
  return ++counter;
}

void check_arch(const MlpArch& arch) {
  if (arch.l == 0) throw Error(ErrorKind::Config, "architecture needs l >= 1");
}

void check_shapes(const MlpParams& params) {
  if (params.layers.size() != params.arch.layer_count()) {
    throw Error(ErrorKind::Shape, "layer count does not match architecture");
  }
  for (std::size_t j = 0; j < params.layers.size(); ++j) {
    const auto [out, in] = params.arch.layer_shape(j);
    const DenseLayer& layer = params.layers[j];
    if (static_cast<std::size_t>(layer.weight.rows()) != out ||
        static_cast<std::size_t>(layer.weight.cols()) != in ||
        static_cast<std::size_t>(layer.bias.size()) != out) {
      throw Error(ErrorKind::Shape, "layer " + std::to_string(j) + " shape mismatch");
    }
  }
}

}  // namespace

std::pair<std::size_t, std::size_t> MlpArch::layer_shape(std::size_t j) const {
  const auto widths = hidden_widths();
  if (j < kHiddenLayers) return {widths[j], j == 0 ? input_width() : widths[j - 1]};
  if (j == kHiddenLayers) return {output_width(), widths.back()};
  throw Error(ErrorKind::Shape, "layer index out of range");
}

void MlpParams::restamp() { stamp = next_stamp(); }

MlpParams zero_mlp(const MlpArch& arch) {
  check_arch(arch);
  MlpParams params;
  params.arch = arch;
  for (std::size_t j = 0; j < arch.layer_count(); ++j) {
    const auto [out, in] = arch.layer_shape(j);
    params.layers.push_back({Eigen::MatrixXd::Zero(out, in), Eigen::VectorXd::Zero(out)});
  }
  params.restamp();
  return params;
}

MlpParams init_mlp(const MlpArch& arch, RngStream& rng) {
  MlpParams params = zero_mlp(arch);
  for (DenseLayer& layer : params.layers) {
    const double bound = std::sqrt(6.0 / static_cast<double>(layer.weight.rows() + layer.weight.cols()));
    // Row-major fill order keeps the draw sequence independent of storage.
    for (Eigen::Index r = 0; r < layer.weight.rows(); ++r) {
      for (Eigen::Index c = 0; c < layer.weight.cols(); ++c) {
        layer.weight(r, c) = rng.uniform(-bound, bound);
      }
    }
  }
  return params;
}

Eigen::MatrixXd forward(const MlpParams& params, const Eigen::Ref<const Eigen::MatrixXd>& input,
                        ForwardCache* cache) {
  const MlpArch& arch = params.arch;
  if (params.layers.size() != arch.layer_count()) {
    throw Error(ErrorKind::Shape, "layer count does not match architecture");
  }
  if (static_cast<std::size_t>(input.rows()) != arch.input_width()) {
    throw Error(ErrorKind::Shape, "forward: expected input width " + std::to_string(arch.input_width()) +
                                      ", got " + std::to_string(input.rows()));
  }

  if (cache) {
    cache->stamp = params.stamp;
    cache->arch = arch;
    cache->pre.clear();
    cache->act.clear();
    cache->act.push_back(input);
  }

  Eigen::MatrixXd a = input;
  Eigen::MatrixXd skip;
  for (std::size_t j = 0; j < MlpArch::kHiddenLayers; ++j) {
    const DenseLayer& layer = params.layers[j];
    Eigen::MatrixXd z = layer.weight * a;
    z.colwise() += layer.bias;
    a = z.cwiseMax(0.0);
    if (cache) {
      cache->pre.push_back(std::move(z));
      cache->act.push_back(a);
    }
    if (arch.residual && j + 1 == MlpArch::kResidualSource) skip = a;
  }
  if (arch.residual) a += skip;

  const DenseLayer& head = params.layers.back();
  Eigen::MatrixXd z = head.weight * a;
  z.colwise() += head.bias;
  Eigen::MatrixXd out = (1.0 + (-z.array()).exp()).inverse().matrix();
  if (!out.allFinite()) throw Error(ErrorKind::Numeric, "non-finite network output");

  if (cache) {
    cache->pre.push_back(std::move(z));
    cache->summed = std::move(a);
    cache->output = out;
  }
  return out;
}

std::vector<double> forward(const MlpParams& params, std::span<const double> input) {
  const Eigen::Map<const Eigen::VectorXd> column(input.data(), static_cast<Eigen::Index>(input.size()));
  const Eigen::MatrixXd out = forward(params, column);
  return {out.data(), out.data() + out.size()};
}

Backprop backward(const MlpParams& params, const ForwardCache& cache,
                  const Eigen::Ref<const Eigen::MatrixXd>& grad_output) {
  if (cache.stamp != params.stamp || !(cache.arch == params.arch) ||
      cache.pre.size() != params.arch.layer_count()) {
    throw Error(ErrorKind::CacheMismatch, "forward cache does not belong to these parameters");
  }
  if (grad_output.rows() != cache.output.rows() || grad_output.cols() != cache.output.cols()) {
    throw Error(ErrorKind::Shape, "backward: grad_output shape mismatch");
  }

  const std::size_t hidden = MlpArch::kHiddenLayers;
  Backprop result;
  result.grads.resize(params.layers.size());

  // Output layer: d sigmoid = y(1-y).
  Eigen::MatrixXd dz = (grad_output.array() * cache.output.array() * (1.0 - cache.output.array())).matrix();
  result.grads[hidden].weight = dz * cache.summed.transpose();
  result.grads[hidden].bias = dz.rowwise().sum();
  const Eigen::MatrixXd dsum = params.layers[hidden].weight.transpose() * dz;

  Eigen::MatrixXd da = dsum;
  for (std::size_t j = hidden; j-- > 0;) {
    // da is the gradient w.r.t. a_{j+1}, the output of layer j.
    dz = (da.array() * (cache.pre[j].array() > 0.0).cast<double>()).matrix();
    result.grads[j].weight = dz * cache.act[j].transpose();
    result.grads[j].bias = dz.rowwise().sum();
    da = params.layers[j].weight.transpose() * dz;
    if (params.arch.residual && j == MlpArch::kResidualSource) da += dsum;
  }
  result.input_grad = std::move(da);
  return result;
}

MlpGrads zero_grads(const MlpArch& arch) { return zero_mlp(arch).layers; }

void sgd_step(MlpParams& params, const MlpGrads& grads, double lr) {
  if (!(lr > 0.0)) throw Error(ErrorKind::Config, "learning rate must be positive");
  check_shapes(params);
  if (grads.size() != params.layers.size()) throw Error(ErrorKind::Shape, "gradient layer count mismatch");
  for (std::size_t j = 0; j < grads.size(); ++j) {
    if (grads[j].weight.rows() != params.layers[j].weight.rows() ||
        grads[j].weight.cols() != params.layers[j].weight.cols() ||
        grads[j].bias.size() != params.layers[j].bias.size()) {
      throw Error(ErrorKind::Shape, "gradient shape mismatch at layer " + std::to_string(j));
    }
  }
  for (std::size_t j = 0; j < grads.size(); ++j) {
    params.layers[j].weight -= lr * grads[j].weight;
    params.layers[j].bias -= lr * grads[j].bias;
  }
  params.restamp();
}

double l1_penalty(const MlpParams& params) {
  double total = 0.0;
  for (const DenseLayer& layer : params.layers) total += layer.weight.cwiseAbs().sum();
  return total;
}

void add_l1_subgradient(MlpGrads& grads, const MlpParams& params, double scale) {
  if (grads.size() != params.layers.size()) throw Error(ErrorKind::Shape, "gradient layer count mismatch");
  for (std::size_t j = 0; j < grads.size(); ++j) {
    grads[j].weight += scale * params.layers[j].weight.array().sign().matrix();
  }
}

}  // namespace sdrgain
