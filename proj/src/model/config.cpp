#include "mtp/model/config.hpp"

#include <json.hpp>

#include "mtp/error.hpp"

namespace mtp::model {

ModelConfig ModelConfig::desk() { return ModelConfig{}; }

ModelConfig ModelConfig::full() {
  ModelConfig c;
  c.embed_dim = 2048;
  c.key_dim = 256;
  c.rows = 8;
  c.hidden = 2048;
  c.motion_hidden = 64;
  c.motion_feat = 8;
  c.joint_hidden = 24;
  return c;
}

void ModelConfig::validate() const {
  const auto positive = [](int v, const char* key) {
    if (v < 1) throw ConfigError(std::string("model.") + key, "must be >= 1");
  };
  positive(embed_dim, "embed_dim");
  positive(key_dim, "key_dim");
  positive(rows, "rows");
  positive(hidden, "hidden");
  positive(motion_hidden, "motion_hidden");
  positive(motion_feat, "motion_feat");
  positive(joint_hidden, "joint_hidden");
  if (hidden != rows * key_dim) {
    throw ConfigError("model.hidden", "hidden (" + std::to_string(hidden) + ") must equal rows (" +
                                          std::to_string(rows) + ") x key_dim (" +
                                          std::to_string(key_dim) + ")");
  }
}

std::string to_string(HeadMode mode) {
  return mode == HeadMode::kJoint ? "joint" : "appearance_only";
}

HeadMode head_mode_from_string(const std::string& s) {
  if (s == "joint") return HeadMode::kJoint;
  if (s == "appearance_only") return HeadMode::kAppearanceOnly;
  throw ConfigError("model.head", "expected 'appearance_only' or 'joint', got '" + s + "'");
}

std::string to_string(nn::GateVariant v) {
  return v == nn::GateVariant::kSwapped ? "swapped" : "standard";
}

nn::GateVariant gate_variant_from_string(const std::string& s) {
  if (s == "swapped") return nn::GateVariant::kSwapped;
  if (s == "standard") return nn::GateVariant::kStandard;
  throw ConfigError("model.lstm_gate_variant", "expected 'swapped' or 'standard', got '" + s + "'");
}

std::string to_json(const ModelConfig& c) {
  nlohmann::ordered_json j;
  j["embed_dim"] = c.embed_dim;
  j["key_dim"] = c.key_dim;
  j["rows"] = c.rows;
  j["hidden"] = c.hidden;
  j["motion_hidden"] = c.motion_hidden;
  j["motion_feat"] = c.motion_feat;
  j["joint_hidden"] = c.joint_hidden;
  j["head"] = to_string(c.head);
  j["pooling"] = c.pooling;
  j["lstm_bias"] = c.lstm_bias;
  j["forget_bias"] = c.forget_bias;
  j["lstm_gate_variant"] = to_string(c.gate_variant);
  j["init_seed"] = c.init_seed;
  return j.dump();
}

ModelConfig model_config_from_json(const std::string& text) {
  const auto j = nlohmann::json::parse(text);
  ModelConfig c;
  c.embed_dim = j.at("embed_dim").get<int>();
  c.key_dim = j.at("key_dim").get<int>();
  c.rows = j.at("rows").get<int>();
  c.hidden = j.at("hidden").get<int>();
  c.motion_hidden = j.at("motion_hidden").get<int>();
  c.motion_feat = j.at("motion_feat").get<int>();
  c.joint_hidden = j.at("joint_hidden").get<int>();
  c.head = head_mode_from_string(j.at("head").get<std::string>());
  c.pooling = j.at("pooling").get<bool>();
  c.lstm_bias = j.at("lstm_bias").get<bool>();
  c.forget_bias = j.at("forget_bias").get<double>();
  c.gate_variant = gate_variant_from_string(j.at("lstm_gate_variant").get<std::string>());
  c.init_seed = j.at("init_seed").get<std::uint64_t>();
  c.validate();
  return c;
}

}  // namespace mtp::model
