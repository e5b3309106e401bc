#include "mtp/tracker/config.hpp"

#include "mtp/error.hpp"

namespace mtp::tracker {

void TrackerConfig::validate() const {
  if (!(assoc_threshold > 0.0 && assoc_threshold < 1.0)) {
    throw ConfigError("tracker.assoc_threshold", "must lie in (0, 1)");
  }
  if (n_miss < 1) throw ConfigError("tracker.n_miss", "must be >= 1");
  if (!(gate_iou >= 0.0 && gate_iou <= 1.0)) throw ConfigError("tracker.gate_iou", "must lie in [0, 1]");
  if (!(image_width > 0.0)) throw ConfigError("tracker.image_width", "must be positive");
  if (!(image_height > 0.0)) throw ConfigError("tracker.image_height", "must be positive");
}

}  // namespace mtp::tracker
