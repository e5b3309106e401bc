#pragma once

#include <Eigen/Dense>

#include <limits>
#include <span>
#include <utility>
#include <vector>

#include "mtp/box.hpp"

namespace mtp::tracker {

/// Score of a pair excluded by gating.
inline constexpr double kMasked = -std::numeric_limits<double>::infinity();

/// (row, column) of an accepted pair.
using Pair = std::pair<int, int>;

/// Global greedy matching: pairs sorted by (score desc, track id asc, column
/// asc) are accepted while both ends are free and the score reaches
/// `threshold`. `track_ids` gives each row's id for the tie rule (row index
/// when empty). Pairs are returned in acceptance order.
std::vector<Pair> greedy_associate(const Eigen::MatrixXd& scores, double threshold,
                                   std::span<const int> track_ids = {});

/// True iff IoU(predicted, detection) >= tau.
bool motion_gate(const Box& predicted, const Box& detection, double tau);

}  // namespace mtp::tracker
