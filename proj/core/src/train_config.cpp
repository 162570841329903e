#include "sdrgain/train_config.hpp"

#include <string>

#include "sdrgain/error.hpp"

namespace sdrgain {

std::string_view loss_kind_name(LossKind kind) noexcept {
  return kind == LossKind::Huber ? "huber" : "mse";
}

LossKind parse_loss_kind(std::string_view name) {
  if (name == "huber") return LossKind::Huber;
  if (name == "mse") return LossKind::Mse;
  throw Error(ErrorKind::Config, "unknown loss kind '" + std::string(name) + "'");
}

void TrainConfig::validate() const {
  const auto fail = [](const std::string& what) { throw Error(ErrorKind::Config, what); };
  if (epochs < 1) fail("epochs must be >= 1");
  if (batch_size < 1) fail("batch_size must be >= 1");
  if (!(p_m > 0.0 && p_m < 1.0)) fail("p_m must lie in (0,1)");
  if (!(p_h > 0.0 && p_h < 1.0)) fail("p_h must lie in (0,1)");
  if (!(delta > 0.0)) fail("delta must be positive");
  if (!(alpha >= 0.0)) fail("alpha must be >= 0");
  if (!(lambda >= 0.0)) fail("lambda must be >= 0");
  if (!(learning_rate > 0.0)) fail("learning_rate must be positive");
}

TrainConfig default_head_config() {
  TrainConfig cfg;
  cfg.loss_kind = LossKind::Huber;
  cfg.residual = false;
  return cfg;
}

TrainConfig default_body_config() {
  TrainConfig cfg;
  cfg.loss_kind = LossKind::Huber;
  cfg.residual = true;
  return cfg;
}

}  // namespace sdrgain
