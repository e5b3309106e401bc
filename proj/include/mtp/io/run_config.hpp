#pragma once

#include <string>
#include <vector>

#include "mtp/model/config.hpp"
#include "mtp/sim/scenario.hpp"
#include "mtp/tracker/config.hpp"
#include "mtp/train/config.hpp"

namespace mtp::io {

/// Model-size profile applied before the file's own keys.
enum class Profile { kDesk, kFull };

Profile profile_from_string(const std::string& s);

/// Everything a run needs, read from one JSON document with sections
/// `model`, `train`, `tracker` and `sim`. Absent keys keep their defaults.
struct RunConfig {
  model::ModelConfig model;
  train::TrainConfig train;
  tracker::TrackerConfig tracker;
  sim::ScenarioSpec sim;
  /// Unknown keys encountered while parsing (also sent to mtp::warn).
  std::vector<std::string> warnings;
};

/// Throws ConfigError naming the key on a type error or violated invariant.
RunConfig parse_config(const std::string& json_text, Profile profile = Profile::kDesk);
RunConfig load_config(const std::string& path, Profile profile = Profile::kDesk);

/// Full configuration as JSON, every key present.
std::string dump_config(const RunConfig& config);

}  // namespace mtp::io
