#pragma once

#include <cstdint>
#include <string>
#include <vector>

namespace mtp::train {

enum class OptimizerKind { kSgd, kAdam };

/// Field defaults are the full-scale schedule (plain SGD from 0.005).
/// `desk()` swaps in the schedule used for small models on synthetic scenes.
struct TrainConfig {
  int window = 10;   // truncated-BPTT length for actual episodes
  int max_gap = 40;  // max end - start of a random episode
  int n_max = 8;     // track cap per random episode
  int k_hard = 30;
  double beta_pos = 4.0;
  double beta_neg = 1.0;

  OptimizerKind optimizer = OptimizerKind::kSgd;
  double lr = 0.005;
  double lr_decay = 0.1;
  std::vector<int> lr_decay_epochs = {4, 8};
  int epochs = 12;
  int iterations_per_epoch = 100;
  int hard_mining_start_epoch = 2;

  bool augment_missing = true;
  double missing_rate_min = 0.1;
  double missing_rate_max = 0.9;

  /// Appearance dropout for the joint head: rates[k] applies from
  /// boundaries[k-1] to boundaries[k], boundaries given as fractions of the
  /// total iteration count.
  std::vector<double> dropout_rates = {0.9, 0.6, 0.3, 0.0};
  std::vector<double> dropout_boundaries = {19.0 / 120.0, 29.0 / 120.0, 38.0 / 120.0};

  int random_episode_retries = 100;
  std::uint64_t seed = 1;

  static TrainConfig full() { return TrainConfig{}; }
  /// Adam at 0.003 for 12 x 500 iterations, decays after epochs 8 and 10.
  static TrainConfig desk();

  int total_iterations() const { return epochs * iterations_per_epoch; }
  /// Throws ConfigError naming the first violated invariant.
  void validate() const;
};

}  // namespace mtp::train
