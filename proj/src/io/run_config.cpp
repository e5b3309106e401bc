#include "mtp/io/run_config.hpp"

#include <json.hpp>

#include <fstream>
#include <functional>
#include <map>
#include <sstream>

#include "mtp/error.hpp"
#include "mtp/log.hpp"

namespace mtp::io {

using nlohmann::json;

namespace {

using Setter = std::function<void(const json&)>;

template <typename T>
Setter set(T& field) {
  return [&field](const json& v) { field = v.get<T>(); };
}

void apply_section(const json& root, const std::string& section,
                   const std::map<std::string, Setter>& setters, RunConfig& out) {
  if (!root.contains(section)) return;
  const json& obj = root.at(section);
  if (!obj.is_object()) throw ConfigError(section, "section must be a JSON object");
  for (const auto& [key, value] : obj.items()) {
    const auto it = setters.find(key);
    if (it == setters.end()) {
      const std::string msg = "unknown config key '" + section + "." + key + "' ignored";
      out.warnings.push_back(msg);
      warn(msg);
      continue;
    }
    try {
      it->second(value);
    } catch (const json::exception& e) {
      throw ConfigError(section + "." + key, e.what());
    }
  }
}

}  // namespace

Profile profile_from_string(const std::string& s) {
  if (s == "desk") return Profile::kDesk;
  if (s == "full") return Profile::kFull;
  throw ConfigError("profile", "expected 'desk' or 'full', got '" + s + "'");
}

RunConfig parse_config(const std::string& json_text, Profile profile) {
  json root;
  try {
    root = json::parse(json_text);
  } catch (const json::exception& e) {
    throw ConfigError("<document>", e.what());
  }
  if (!root.is_object()) throw ConfigError("<document>", "top level must be a JSON object");

  RunConfig cfg;
  const bool full = profile == Profile::kFull;
  cfg.model = full ? model::ModelConfig::full() : model::ModelConfig::desk();
  cfg.train = full ? train::TrainConfig::full() : train::TrainConfig::desk();
  for (const auto& [key, value] : root.items()) {
    if (key != "model" && key != "train" && key != "tracker" && key != "sim") {
      const std::string msg = "unknown config section '" + key + "' ignored";
      cfg.warnings.push_back(msg);
      warn(msg);
    }
  }

  auto& m = cfg.model;
  bool hidden_given = false;
  std::string head = model::to_string(m.head);
  std::string variant = model::to_string(m.gate_variant);
  apply_section(root, "model",
                {{"embed_dim", set(m.embed_dim)},
                 {"key_dim", set(m.key_dim)},
                 {"rows", set(m.rows)},
                 {"hidden", [&](const json& v) { m.hidden = v.get<int>(); hidden_given = true; }},
                 {"motion_hidden", set(m.motion_hidden)},
                 {"motion_feat", set(m.motion_feat)},
                 {"joint_hidden", set(m.joint_hidden)},
                 {"head", set(head)},
                 {"pooling", set(m.pooling)},
                 {"lstm_bias", set(m.lstm_bias)},
                 {"forget_bias", set(m.forget_bias)},
                 {"lstm_gate_variant", set(variant)},
                 {"init_seed", set(m.init_seed)}},
                cfg);
  m.head = model::head_mode_from_string(head);
  m.gate_variant = model::gate_variant_from_string(variant);
  if (!hidden_given) m.hidden = m.rows * m.key_dim;

  auto& t = cfg.train;
  std::string optimizer = t.optimizer == train::OptimizerKind::kAdam ? "adam" : "sgd";
  apply_section(root, "train",
                {{"window", set(t.window)},
                 {"max_gap", set(t.max_gap)},
                 {"n_max", set(t.n_max)},
                 {"k_hard", set(t.k_hard)},
                 {"beta_pos", set(t.beta_pos)},
                 {"beta_neg", set(t.beta_neg)},
                 {"optimizer", set(optimizer)},
                 {"lr", set(t.lr)},
                 {"lr_decay", set(t.lr_decay)},
                 {"lr_decay_epochs", set(t.lr_decay_epochs)},
                 {"epochs", set(t.epochs)},
                 {"iterations_per_epoch", set(t.iterations_per_epoch)},
                 {"hard_mining_start_epoch", set(t.hard_mining_start_epoch)},
                 {"augment_missing", set(t.augment_missing)},
                 {"missing_rate_min", set(t.missing_rate_min)},
                 {"missing_rate_max", set(t.missing_rate_max)},
                 {"dropout_rates", set(t.dropout_rates)},
                 {"dropout_boundaries", set(t.dropout_boundaries)},
                 {"random_episode_retries", set(t.random_episode_retries)},
                 {"seed", set(t.seed)}},
                cfg);
  if (optimizer == "sgd") {
    t.optimizer = train::OptimizerKind::kSgd;
  } else if (optimizer == "adam") {
    t.optimizer = train::OptimizerKind::kAdam;
  } else {
    throw ConfigError("train.optimizer", "expected 'sgd' or 'adam', got '" + optimizer + "'");
  }

  auto& k = cfg.tracker;
  std::string gate = k.gate == tracker::GateMode::kIou ? "iou" : "off";
  std::string smoothing = k.smoothing == tracker::SmoothingMode::kNearOnline ? "near_online" : "online";
  apply_section(root, "tracker",
                {{"assoc_threshold", set(k.assoc_threshold)},
                 {"n_miss", set(k.n_miss)},
                 {"gate", set(gate)},
                 {"gate_iou", set(k.gate_iou)},
                 {"extension", set(k.extension)},
                 {"smoothing", set(smoothing)},
                 {"min_birth_conf", set(k.min_birth_conf)},
                 {"image_width", set(k.image_width)},
                 {"image_height", set(k.image_height)},
                 {"ablate_pooling", set(k.ablate_pooling)}},
                cfg);
  if (gate == "off") {
    k.gate = tracker::GateMode::kOff;
  } else if (gate == "iou") {
    k.gate = tracker::GateMode::kIou;
  } else {
    throw ConfigError("tracker.gate", "expected 'off' or 'iou', got '" + gate + "'");
  }
  if (smoothing == "online") {
    k.smoothing = tracker::SmoothingMode::kOnline;
  } else if (smoothing == "near_online") {
    k.smoothing = tracker::SmoothingMode::kNearOnline;
  } else {
    throw ConfigError("tracker.smoothing", "expected 'online' or 'near_online', got '" + smoothing + "'");
  }

  auto& s = cfg.sim;
  s.embed_dim = m.embed_dim;
  apply_section(root, "sim",
                {{"image_width", set(s.image_width)},
                 {"image_height", set(s.image_height)},
                 {"num_targets", set(s.num_targets)},
                 {"num_clusters", set(s.num_clusters)},
                 {"cluster_offset", set(s.cluster_offset)},
                 {"embedding_noise", set(s.embedding_noise)},
                 {"miss_prob", set(s.miss_prob)},
                 {"fp_rate", set(s.fp_rate)},
                 {"box_jitter", set(s.box_jitter)},
                 {"frames", set(s.frames)},
                 {"speed_min", set(s.speed_min)},
                 {"speed_max", set(s.speed_max)},
                 {"accel_sigma", set(s.accel_sigma)},
                 {"box_height_min", set(s.box_height_min)},
                 {"box_height_max", set(s.box_height_max)},
                 {"aspect", set(s.aspect)},
                 {"max_gt_iou", set(s.max_gt_iou)},
                 {"embed_dim", set(s.embed_dim)},
                 {"embedding_scale", set(s.embedding_scale)},
                 {"seed", set(s.seed)}},
                cfg);

  cfg.model.validate();
  cfg.train.validate();
  cfg.tracker.validate();
  cfg.sim.validate();
  if (cfg.sim.embed_dim != cfg.model.embed_dim) {
    throw ConfigError("sim.embed_dim", "must equal model.embed_dim (" +
                                           std::to_string(cfg.model.embed_dim) + ")");
  }
  return cfg;
}

RunConfig load_config(const std::string& path, Profile profile) {
  std::ifstream in(path);
  if (!in) throw ConfigError("<file>", "cannot open '" + path + "'");
  std::stringstream ss;
  ss << in.rdbuf();
  return parse_config(ss.str(), profile);
}

std::string dump_config(const RunConfig& c) {
  nlohmann::ordered_json j;
  j["model"] = nlohmann::ordered_json::parse(model::to_json(c.model));
  const auto& t = c.train;
  j["train"] = {{"window", t.window},
                {"max_gap", t.max_gap},
                {"n_max", t.n_max},
                {"k_hard", t.k_hard},
                {"beta_pos", t.beta_pos},
                {"beta_neg", t.beta_neg},
                {"optimizer", t.optimizer == train::OptimizerKind::kAdam ? "adam" : "sgd"},
                {"lr", t.lr},
                {"lr_decay", t.lr_decay},
                {"lr_decay_epochs", t.lr_decay_epochs},
                {"epochs", t.epochs},
                {"iterations_per_epoch", t.iterations_per_epoch},
                {"hard_mining_start_epoch", t.hard_mining_start_epoch},
                {"augment_missing", t.augment_missing},
                {"missing_rate_min", t.missing_rate_min},
                {"missing_rate_max", t.missing_rate_max},
                {"dropout_rates", t.dropout_rates},
                {"dropout_boundaries", t.dropout_boundaries},
                {"random_episode_retries", t.random_episode_retries},
                {"seed", t.seed}};
  const auto& k = c.tracker;
  j["tracker"] = {{"assoc_threshold", k.assoc_threshold},
                  {"n_miss", k.n_miss},
                  {"gate", k.gate == tracker::GateMode::kIou ? "iou" : "off"},
                  {"gate_iou", k.gate_iou},
                  {"extension", k.extension},
                  {"smoothing", k.smoothing == tracker::SmoothingMode::kNearOnline ? "near_online" : "online"},
                  {"min_birth_conf", k.min_birth_conf},
                  {"image_width", k.image_width},
                  {"image_height", k.image_height},
                  {"ablate_pooling", k.ablate_pooling}};
  const auto& s = c.sim;
  j["sim"] = {{"image_width", s.image_width},
              {"image_height", s.image_height},
              {"num_targets", s.num_targets},
              {"num_clusters", s.num_clusters},
              {"cluster_offset", s.cluster_offset},
              {"embedding_noise", s.embedding_noise},
              {"miss_prob", s.miss_prob},
              {"fp_rate", s.fp_rate},
              {"box_jitter", s.box_jitter},
              {"frames", s.frames},
              {"speed_min", s.speed_min},
              {"speed_max", s.speed_max},
              {"accel_sigma", s.accel_sigma},
              {"box_height_min", s.box_height_min},
              {"box_height_max", s.box_height_max},
              {"aspect", s.aspect},
              {"max_gt_iou", s.max_gt_iou},
              {"embed_dim", s.embed_dim},
              {"embedding_scale", s.embedding_scale},
              {"seed", s.seed}};
  return j.dump(2);
}

}  // namespace mtp::io
