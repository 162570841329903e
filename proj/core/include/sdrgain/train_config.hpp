#pragma once

#include <cstdint>
#include <string_view>

namespace sdrgain {

enum class LossKind { Huber, Mse };

std::string_view loss_kind_name(LossKind kind) noexcept;
/// Accepts "huber" or "mse"; throws Error(Config) otherwise.
LossKind parse_loss_kind(std::string_view name);

struct TrainConfig {
  int epochs = 5000;
  int batch_size = 128;
  double p_m = 0.2;
  double p_h = 0.9;
  double delta = 0.6;
  double alpha = 10.0;
  double lambda = 0.001;
  double learning_rate = 1e-3;
  LossKind loss_kind = LossKind::Huber;
  bool residual = false;
  std::uint64_t seed = 0;

  /// Throws Error(Config) on out-of-range values.
  void validate() const;

  friend bool operator==(const TrainConfig&, const TrainConfig&) = default;
};

/// Huber loss, no residual.
TrainConfig default_head_config();
/// Huber loss, residual.
TrainConfig default_body_config();

}  // namespace sdrgain
