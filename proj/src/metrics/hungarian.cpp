#include "mtp/metrics/hungarian.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <utility>
#include <vector>

#include "mtp/error.hpp"

namespace mtp::metrics {

Assignment hungarian(const Eigen::MatrixXd& cost) {
  Assignment out;
  if (cost.rows() == 0 || cost.cols() == 0) return out;
  if (cost.rows() > cost.cols()) {
    out = hungarian(cost.transpose());
    for (auto& [i, j] : out.pairs) std::swap(i, j);
    std::sort(out.pairs.begin(), out.pairs.end());
    return out;
  }
  const int rows = static_cast<int>(cost.rows());
  const int cols = static_cast<int>(cost.cols());

  // Forbidden entries become a penalty larger than any set of allowed ones.
  double span = 0.0;
  for (int i = 0; i < rows; ++i) {
    for (int j = 0; j < cols; ++j) {
      const double c = cost(i, j);
      if (std::isnan(c)) throw NumericError("hungarian: NaN cost");
      if (c == -kForbidden) throw NumericError("hungarian: cost of -inf");
      if (c != kForbidden) span += std::abs(c);
    }
  }
  const double big = 2.0 * span + 1.0;

  // Potentials-based shortest augmenting path for rows <= cols, 1-based with
  // a virtual column 0. O(rows^2 cols).
  const auto a = [&](int i, int j) -> double {
    const double c = cost(i, j);
    return c == kForbidden ? big : c;
  };
  const double inf = std::numeric_limits<double>::infinity();
  std::vector<double> u(rows + 1, 0.0), v(cols + 1, 0.0), minv(cols + 1);
  std::vector<int> p(cols + 1, 0), way(cols + 1, 0);
  std::vector<char> used(cols + 1);
  for (int i = 1; i <= rows; ++i) {
    p[0] = i;
    int j0 = 0;
    std::fill(minv.begin(), minv.end(), inf);
    std::fill(used.begin(), used.end(), 0);
    do {
      used[j0] = 1;
      const int i0 = p[j0];
      double delta = inf;
      int j1 = 0;
      for (int j = 1; j <= cols; ++j) {
        if (used[j]) continue;
        const double cur = a(i0 - 1, j - 1) - u[i0] - v[j];
        if (cur < minv[j]) {
          minv[j] = cur;
          way[j] = j0;
        }
        if (minv[j] < delta) {
          delta = minv[j];
          j1 = j;
        }
      }
      for (int j = 0; j <= cols; ++j) {
        if (used[j]) {
          u[p[j]] += delta;
          v[j] -= delta;
        } else {
          minv[j] -= delta;
        }
      }
      j0 = j1;
    } while (p[j0] != 0);
    do {
      const int j1 = way[j0];
      p[j0] = p[j1];
      j0 = j1;
    } while (j0 != 0);
  }

  std::vector<int> col_of(rows, -1);
  for (int j = 1; j <= cols; ++j) {
    if (p[j] > 0) col_of[p[j] - 1] = j - 1;
  }
  for (int i = 0; i < rows; ++i) {
    const int j = col_of[i];
    if (j < 0 || cost(i, j) == kForbidden) continue;
    out.pairs.emplace_back(i, j);
    out.cost += cost(i, j);
  }
  return out;
}

}  // namespace mtp::metrics
