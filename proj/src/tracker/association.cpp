#include "mtp/tracker/association.hpp"

#include <algorithm>
#include <tuple>

#include "mtp/error.hpp"

namespace mtp::tracker {

std::vector<Pair> greedy_associate(const Eigen::MatrixXd& scores, double threshold,
                                   std::span<const int> track_ids) {
  const auto rows = scores.rows();
  const auto cols = scores.cols();
  if (!track_ids.empty() && static_cast<Eigen::Index>(track_ids.size()) != rows) {
    throw DimensionError("greedy_associate: one track id per row required");
  }
  const auto id_of = [&](Eigen::Index r) {
    return track_ids.empty() ? static_cast<int>(r) : track_ids[static_cast<std::size_t>(r)];
  };

  struct Candidate {
    double score;
    int id;
    int row;
    int col;
  };
  std::vector<Candidate> cand;
  for (Eigen::Index i = 0; i < rows; ++i) {
    for (Eigen::Index j = 0; j < cols; ++j) {
      const double s = scores(i, j);
      if (s >= threshold) cand.push_back({s, id_of(i), static_cast<int>(i), static_cast<int>(j)});
    }
  }
  std::sort(cand.begin(), cand.end(), [](const Candidate& a, const Candidate& b) {
    return std::tie(b.score, a.id, a.col) < std::tie(a.score, b.id, b.col);
  });

  std::vector<char> row_used(rows, 0), col_used(cols, 0);
  std::vector<Pair> out;
  for (const auto& c : cand) {
    if (row_used[c.row] || col_used[c.col]) continue;
    row_used[c.row] = col_used[c.col] = 1;
    out.emplace_back(c.row, c.col);
  }
  return out;
}

bool motion_gate(const Box& predicted, const Box& detection, double tau) {
  return iou(predicted, detection) >= tau;
}

}  // namespace mtp::tracker
