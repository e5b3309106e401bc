#pragma once

#include <Eigen/Dense>

#include <limits>
#include <utility>
#include <vector>

namespace mtp::metrics {

/// Cost value marking a pair that may not be matched.
inline constexpr double kForbidden = std::numeric_limits<double>::infinity();

struct Assignment {
  /// (row, col) pairs in increasing row order.
  std::vector<std::pair<int, int>> pairs;
  double cost = 0.0;
};

/// Minimum-cost matching of a rectangular cost matrix; min(rows, cols) pairs
/// unless forbidden entries prevent it. Among matchings, the one with the most
/// allowed pairs wins first, then the cheapest. Throws NumericError on NaN.
Assignment hungarian(const Eigen::MatrixXd& cost);

}  // namespace mtp::metrics
