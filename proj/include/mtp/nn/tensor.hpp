#pragma once

#include <Eigen/Dense>

#include <cmath>
#include <concepts>
#include <cstddef>
#include <numeric>
#include <span>
#include <string>
#include <vector>

#include "mtp/error.hpp"

namespace mtp::nn {

/// Owning named-shape container used for checkpoints.
struct Tensor {
  std::vector<std::size_t> shape;
  std::vector<double> data;

  static std::size_t count(const std::vector<std::size_t>& shape) {
    return std::accumulate(shape.begin(), shape.end(), std::size_t{1},
                           std::multiplies<>());
  }
  bool valid() const { return !shape.empty() && count(shape) == data.size(); }
};

/// Non-owning view of one parameter tensor, in the parameter set's storage order.
struct TensorView {
  std::string name;
  std::vector<std::size_t> shape;
  std::span<double> data;
};

/// Anything that can enumerate its tensors in a fixed order (parameters and
/// gradients share the same layout).
template <typename T>
concept TensorCollection = requires(T& t) {
  { t.views() } -> std::same_as<std::vector<TensorView>>;
};

template <typename Derived>
TensorView view_of(std::string name, Eigen::PlainObjectBase<Derived>& m) {
  std::vector<std::size_t> shape;
  if (Derived::ColsAtCompileTime == 1) {
    shape = {static_cast<std::size_t>(m.rows())};
  } else {
    shape = {static_cast<std::size_t>(m.rows()), static_cast<std::size_t>(m.cols())};
  }
  return {std::move(name), std::move(shape),
          std::span<double>(m.data(), static_cast<std::size_t>(m.size()))};
}

}  // namespace mtp::nn
