#pragma once

namespace mtp::tracker {

enum class GateMode { kOff, kIou };
enum class SmoothingMode { kOnline, kNearOnline };

struct TrackerConfig {
  double assoc_threshold = 0.5;
  int n_miss = 60;
  GateMode gate = GateMode::kOff;
  double gate_iou = 0.1;
  bool extension = false;
  SmoothingMode smoothing = SmoothingMode::kOnline;
  double min_birth_conf = 0.0;
  /// Image size used to normalize the motion-branch input.
  double image_width = 1920.0;
  double image_height = 1080.0;
  /// Pooling ablation at run time: m- forced to zero.
  bool ablate_pooling = false;

  /// Throws ConfigError naming the first violated invariant.
  void validate() const;
};

}  // namespace mtp::tracker
