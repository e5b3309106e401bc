#pragma once

#include <cstdint>
#include <vector>

#include "mtp/model/config.hpp"
#include "mtp/nn/checkpoint.hpp"
#include "mtp/nn/layers.hpp"
#include "mtp/nn/tensor.hpp"

namespace mtp::model {

using Dense = nn::DenseWeights<double>;
using Lstm = nn::LstmWeights<double>;

/// Every learnable weight of the track classifier. Layers that the configured
/// head does not use stay empty and are skipped by `views()`.
struct ModelParams {
  ModelConfig config;

  Dense embed;           // FC-relu, raw embedding -> key_dim; shared by track and detection inputs
  Lstm appearance_lstm;  // hidden = rows * key_dim, input = key_dim

  // appearance_only head
  Dense app_out;  // memory_width -> 2

  // joint head
  Dense app_fc1, app_fc2;  // memory_width -> memory_width, relu
  Dense motion_in;         // 4 -> motion_hidden, relu
  Lstm motion_lstm;        // motion_hidden, input motion_hidden
  Dense motion_out;        // motion_hidden -> motion_feat, relu
  Dense motion_fc1, motion_fc2;  // motion_feat -> motion_feat, relu
  Dense joint_fc;          // memory_width + motion_feat -> joint_hidden, relu
  Dense joint_out;         // joint_hidden -> 2

  /// Allocated for `config`, every value zero.
  static ModelParams zeros(const ModelConfig& config);
  /// Uniform in [-1/sqrt(fan_in), 1/sqrt(fan_in)] from config.init_seed; forget
  /// gate bias set to config.forget_bias.
  static ModelParams initialize(const ModelConfig& config);

  ModelParams zeros_like() const { return zeros(config); }
  void set_zero();

  std::vector<nn::TensorView> views();

  nn::Checkpoint to_checkpoint();
  static ModelParams from_checkpoint(const nn::Checkpoint& ckpt);
};

}  // namespace mtp::model
