#pragma once

#include <cstdint>
#include <string>

#include "mtp/nn/layers.hpp"

namespace mtp::model {

enum class HeadMode { kAppearanceOnly, kJoint };

/// Layer sizes of the track classifier. The memory of each track is a
/// `rows` x `key_dim` matrix stored flat, so `hidden == rows * key_dim`.
struct ModelConfig {
  int embed_dim = 32;  // raw embedding length fed to the shared FC
  int key_dim = 16;
  int rows = 8;
  int hidden = 128;
  int motion_hidden = 16;
  int motion_feat = 8;
  int joint_hidden = 24;
  HeadMode head = HeadMode::kAppearanceOnly;
  /// false builds the single-track baseline: the head sees m+ only.
  bool pooling = true;
  bool lstm_bias = true;
  double forget_bias = 1.0;
  nn::GateVariant gate_variant = nn::GateVariant::kStandard;
  std::uint64_t init_seed = 7;

  static ModelConfig desk();
  static ModelConfig full();

  /// Length of the concatenated memory fed to the head (2r, or r without pooling).
  int memory_width() const { return pooling ? 2 * rows : rows; }

  /// Throws ConfigError naming the first violated invariant.
  void validate() const;

  friend bool operator==(const ModelConfig&, const ModelConfig&) = default;
};

std::string to_string(HeadMode mode);
HeadMode head_mode_from_string(const std::string& s);
std::string to_string(nn::GateVariant v);
nn::GateVariant gate_variant_from_string(const std::string& s);

/// Canonical JSON text (stable key order), used for checkpoint fingerprints.
std::string to_json(const ModelConfig& config);
ModelConfig model_config_from_json(const std::string& text);

}  // namespace mtp::model
