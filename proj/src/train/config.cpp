#include "mtp/train/config.hpp"

#include "mtp/error.hpp"

namespace mtp::train {

TrainConfig TrainConfig::desk() {
  TrainConfig c;
  c.optimizer = OptimizerKind::kAdam;
  c.lr = 0.003;
  c.iterations_per_epoch = 500;
  c.lr_decay_epochs = {8, 10};
  return c;
}

void TrainConfig::validate() const {
  const auto positive = [](double v, const char* key) {
    if (!(v > 0)) throw ConfigError(std::string("train.") + key, "must be positive");
  };
  positive(window, "window");
  positive(max_gap, "max_gap");
  positive(n_max, "n_max");
  positive(k_hard, "k_hard");
  positive(beta_pos, "beta_pos");
  positive(beta_neg, "beta_neg");
  positive(lr, "lr");
  positive(lr_decay, "lr_decay");
  positive(epochs, "epochs");
  positive(iterations_per_epoch, "iterations_per_epoch");
  positive(random_episode_retries, "random_episode_retries");
  if (hard_mining_start_epoch < 0) {
    throw ConfigError("train.hard_mining_start_epoch", "must be >= 0");
  }
  if (!(missing_rate_min >= 0.0 && missing_rate_min <= missing_rate_max && missing_rate_max < 1.0)) {
    throw ConfigError("train.missing_rate_min", "need 0 <= min <= max < 1");
  }
  if (dropout_rates.size() != dropout_boundaries.size() + 1) {
    throw ConfigError("train.dropout_rates", "need exactly one more rate than boundaries");
  }
  for (double r : dropout_rates) {
    if (!(r >= 0.0 && r < 1.0)) throw ConfigError("train.dropout_rates", "rates must lie in [0, 1)");
  }
  for (std::size_t k = 0; k < dropout_boundaries.size(); ++k) {
    const double b = dropout_boundaries[k];
    if (!(b >= 0.0 && b <= 1.0) || (k > 0 && b < dropout_boundaries[k - 1])) {
      throw ConfigError("train.dropout_boundaries", "must be non-decreasing fractions in [0, 1]");
    }
  }
  for (std::size_t k = 0; k < lr_decay_epochs.size(); ++k) {
    if (lr_decay_epochs[k] < 0 || (k > 0 && lr_decay_epochs[k] < lr_decay_epochs[k - 1])) {
      throw ConfigError("train.lr_decay_epochs", "must be non-decreasing and >= 0");
    }
  }
}

}  // namespace mtp::train
