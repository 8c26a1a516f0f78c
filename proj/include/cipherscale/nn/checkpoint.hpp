#pragma once

#include <cstdint>
#include <optional>
#include <string>

#include "cipherscale/nn/adam.hpp"
#include "cipherscale/nn/model.hpp"

namespace cipherscale::nn {

// Versioned binary checkpoint: magic, JSON header (config, epoch, test loss,
// optimizer flag), then raw little-endian float32 tensors in visit order —
// parameters, then Adam first/second moments when present. Optimizer state
// rides along so interrupted runs resume bit-exactly.
struct Checkpoint {
  ModelParams<float> params;
  int epoch = 0;
  double test_loss = 0.0;
  std::string config_digest;  // digest of the producing run config, if any
  std::optional<AdamConfig> adam_config;
  std::int64_t adam_steps = 0;
  std::optional<ModelParams<float>> adam_m, adam_v;
};

void save_checkpoint(const std::string& path, const Checkpoint& ckpt);
Checkpoint load_checkpoint(const std::string& path);

std::string model_config_to_json(const ModelConfig& c);
ModelConfig model_config_from_json(const std::string& text);

}  // namespace cipherscale::nn
