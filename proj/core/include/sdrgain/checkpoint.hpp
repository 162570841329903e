#pragma once

#include <cstdint>
#include <filesystem>
#include <string>

#include "sdrgain/geometry.hpp"
#include "sdrgain/neural.hpp"
#include "sdrgain/train_config.hpp"

namespace sdrgain {

inline constexpr int kCheckpointVersion = 1;

struct CheckpointMeta {
  PartKind part = PartKind::Head;
  TrainConfig config;
  std::uint64_t seed = 0;
};

struct Checkpoint {
  MlpParams params;
  CheckpointMeta meta;
};

/// Self-describing JSON document. Doubles are written in shortest
/// round-trip form, so a reload is bit-exact.
std::string checkpoint_to_string(const MlpParams& params, const CheckpointMeta& meta);
Checkpoint checkpoint_from_string(const std::string& text);

void save_checkpoint(const MlpParams& params, const CheckpointMeta& meta, const std::filesystem::path& path);
Checkpoint load_checkpoint(const std::filesystem::path& path);

}  // namespace sdrgain
