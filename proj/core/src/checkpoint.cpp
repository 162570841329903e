#include "sdrgain/checkpoint.hpp"

#include <fstream>
#include <sstream>

#include "json.hpp"
#include "sdrgain/error.hpp"

namespace sdrgain {

using nlohmann::json;

namespace {

json config_to_json(const TrainConfig& cfg) {
  return {
      {"epochs", cfg.epochs},
      {"batch_size", cfg.batch_size},
      {"p_m", cfg.p_m},
      {"p_h", cfg.p_h},
      {"delta", cfg.delta},
      {"alpha", cfg.alpha},
      {"lambda", cfg.lambda},
      {"learning_rate", cfg.learning_rate},
      {"loss", loss_kind_name(cfg.loss_kind)},
      {"residual", cfg.residual},
      {"seed", cfg.seed},
  };
}

TrainConfig config_from_json(const json& j) {
  TrainConfig cfg;
  cfg.epochs = j.at("epochs").get<int>();
  cfg.batch_size = j.at("batch_size").get<int>();
  cfg.p_m = j.at("p_m").get<double>();
  cfg.p_h = j.at("p_h").get<double>();
  cfg.delta = j.at("delta").get<double>();
  cfg.alpha = j.at("alpha").get<double>();
  cfg.lambda = j.at("lambda").get<double>();
  cfg.learning_rate = j.at("learning_rate").get<double>();
  cfg.loss_kind = parse_loss_kind(j.at("loss").get<std::string>());
  cfg.residual = j.at("residual").get<bool>();
  cfg.seed = j.at("seed").get<std::uint64_t>();
  return cfg;
}

PartKind parse_part(const std::string& name) {
  if (name == "head") return PartKind::Head;
  if (name == "body") return PartKind::Body;
  throw Error(ErrorKind::Corrupt, "unknown part '" + name + "'");
}

}  // namespace

std::string checkpoint_to_string(const MlpParams& params, const CheckpointMeta& meta) {
  const MlpArch& arch = params.arch;
  json widths = json::array({arch.input_width()});
  for (std::size_t w : arch.hidden_widths()) widths.push_back(w);
  widths.push_back(arch.output_width());

  json layers = json::array();
  for (const DenseLayer& layer : params.layers) {
    json weights = json::array();
    for (Eigen::Index r = 0; r < layer.weight.rows(); ++r) {
      for (Eigen::Index c = 0; c < layer.weight.cols(); ++c) weights.push_back(layer.weight(r, c));
    }
    json bias = json::array();
    for (Eigen::Index r = 0; r < layer.bias.size(); ++r) bias.push_back(layer.bias(r));
    layers.push_back({{"rows", layer.weight.rows()},
                      {"cols", layer.weight.cols()},
                      {"weights", std::move(weights)},
                      {"bias", std::move(bias)}});
  }

  const json doc = {
      {"format_version", kCheckpointVersion},
      {"part", part_name(meta.part)},
      {"l", arch.l},
      {"widths", std::move(widths)},
      {"residual", arch.residual},
      {"activations", {{"hidden", "relu"}, {"output", "sigmoid"}}},
      {"layers", std::move(layers)},
      {"config", config_to_json(meta.config)},
      {"seed", meta.seed},
  };
  return doc.dump(1) + "\n";
}

Checkpoint checkpoint_from_string(const std::string& text) {
  json doc;
  try {
    doc = json::parse(text);
  } catch (const json::exception& e) {
    throw Error(ErrorKind::Corrupt, std::string("checkpoint is not valid JSON: ") + e.what());
  }

  try {
    const int version = doc.at("format_version").get<int>();
    if (version != kCheckpointVersion) {
      throw Error(ErrorKind::Version, "checkpoint format_version " + std::to_string(version) +
                                          " (expected " + std::to_string(kCheckpointVersion) + ")");
    }

    Checkpoint ckpt;
    ckpt.meta.part = parse_part(doc.at("part").get<std::string>());
    ckpt.meta.config = config_from_json(doc.at("config"));
    ckpt.meta.seed = doc.at("seed").get<std::uint64_t>();

    MlpArch arch;
    arch.l = doc.at("l").get<std::size_t>();
    arch.residual = doc.at("residual").get<bool>();
    if (arch.l == 0) throw Error(ErrorKind::Shape, "checkpoint declares l = 0");
    if (arch.l != part_length(ckpt.meta.part)) {
      throw Error(ErrorKind::Shape, "checkpoint l=" + std::to_string(arch.l) + " does not match part " +
                                        std::string(part_name(ckpt.meta.part)));
    }

    const json& layers = doc.at("layers");
    if (!layers.is_array() || layers.size() != arch.layer_count()) {
      throw Error(ErrorKind::Shape, "checkpoint layer count does not match architecture");
    }
    ckpt.params = zero_mlp(arch);
    for (std::size_t j = 0; j < arch.layer_count(); ++j) {
      const auto [out, in] = arch.layer_shape(j);
      const json& layer = layers[j];
      const json& weights = layer.at("weights");
      const json& bias = layer.at("bias");
      if (layer.at("rows").get<std::size_t>() != out || layer.at("cols").get<std::size_t>() != in ||
          weights.size() != out * in || bias.size() != out) {
        throw Error(ErrorKind::Shape, "checkpoint layer " + std::to_string(j) + " has wrong shape");
      }
      DenseLayer& dst = ckpt.params.layers[j];
      for (std::size_t r = 0; r < out; ++r) {
        for (std::size_t c = 0; c < in; ++c) dst.weight(r, c) = weights[r * in + c].get<double>();
        dst.bias(r) = bias[r].get<double>();
      }
    }
    ckpt.params.restamp();
    return ckpt;
  } catch (const json::exception& e) {
    throw Error(ErrorKind::Corrupt, std::string("malformed checkpoint: ") + e.what());
  }
}

void save_checkpoint(const MlpParams& params, const CheckpointMeta& meta, const std::filesystem::path& path) {
  std::ofstream out(path);
  if (!out) throw Error(ErrorKind::Io, "cannot write " + path.string());
  out << checkpoint_to_string(params, meta);
  if (!out) throw Error(ErrorKind::Io, "write failed for " + path.string());
}

Checkpoint load_checkpoint(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw Error(ErrorKind::Io, "cannot read " + path.string());
  std::ostringstream buffer;
  buffer << in.rdbuf();
  return checkpoint_from_string(buffer.str());
}

}  // namespace sdrgain
