#pragma once

#include <Eigen/Dense>

#include <optional>

#include "mtp/box.hpp"

namespace mtp::tracker {

/// Something that can produce an appearance embedding for an arbitrary box,
/// used to score extension candidates.
class EmbeddingSource {
 public:
  virtual ~EmbeddingSource() = default;
  virtual std::optional<Eigen::VectorXd> embed(int frame, const Box& box) const = 0;
};

}  // namespace mtp::tracker
