#pragma once

#include <cmath>
#include <vector>

#include "mtp/nn/tensor.hpp"

namespace mtp::nn {

/// p <- p - lr * g for every parameter. Throws NumericError (leaving `params`
/// untouched) if any gradient entry is non-finite.
template <TensorCollection Params>
void sgd_step(Params& params, Params& grads, double lr) {
  if (!(lr > 0.0)) throw UsageError("sgd_step: learning rate must be positive");
  auto pv = params.views();
  auto gv = grads.views();
  if (pv.size() != gv.size()) throw DimensionError("sgd_step: gradient layout mismatch");
  for (std::size_t t = 0; t < gv.size(); ++t) {
    if (gv[t].data.size() != pv[t].data.size()) {
      throw DimensionError("sgd_step: gradient size mismatch for " + pv[t].name);
    }
    for (double g : gv[t].data) {
      if (!std::isfinite(g)) throw NumericError("sgd_step: non-finite gradient in " + gv[t].name);
    }
  }
  for (std::size_t t = 0; t < pv.size(); ++t) {
    for (std::size_t k = 0; k < pv[t].data.size(); ++k) pv[t].data[k] -= lr * gv[t].data[k];
  }
}

/// Adam, offered for the standalone motion model. Moment buffers follow the
/// parameter layout captured on the first step.
class Adam {
 public:
  explicit Adam(double beta1 = 0.9, double beta2 = 0.999, double epsilon = 1e-8)
      : beta1_(beta1), beta2_(beta2), epsilon_(epsilon) {}

  template <TensorCollection Params>
  void step(Params& params, Params& grads, double lr) {
    auto pv = params.views();
    auto gv = grads.views();
    if (pv.size() != gv.size()) throw DimensionError("adam: gradient layout mismatch");
    if (m_.empty()) {
      for (const auto& v : pv) {
        m_.emplace_back(v.data.size(), 0.0);
        v_.emplace_back(v.data.size(), 0.0);
      }
    }
    for (const auto& g : gv) {
      for (double x : g.data) {
        if (!std::isfinite(x)) throw NumericError("adam: non-finite gradient in " + g.name);
      }
    }
    ++t_;
    const double c1 = 1.0 - std::pow(beta1_, static_cast<double>(t_));
    const double c2 = 1.0 - std::pow(beta2_, static_cast<double>(t_));
    for (std::size_t t = 0; t < pv.size(); ++t) {
      for (std::size_t k = 0; k < pv[t].data.size(); ++k) {
        const double g = gv[t].data[k];
        m_[t][k] = beta1_ * m_[t][k] + (1.0 - beta1_) * g;
        v_[t][k] = beta2_ * v_[t][k] + (1.0 - beta2_) * g * g;
        pv[t].data[k] -= lr * (m_[t][k] / c1) / (std::sqrt(v_[t][k] / c2) + epsilon_);
      }
    }
  }

 private:
  double beta1_, beta2_, epsilon_;
  long t_ = 0;
  std::vector<std::vector<double>> m_, v_;
};

}  // namespace mtp::nn
