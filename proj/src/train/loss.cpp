#include "mtp/train/loss.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>

#include "mtp/error.hpp"

namespace mtp::train {

double example_loss(double p, int label, double beta_pos, double beta_neg) {
  if (label == 1) {
    const double q = 1.0 - p;
    return beta_pos * q * q * -std::log(std::max(p, kProbabilityFloor));
  }
  return beta_neg * p * p * -std::log(std::max(1.0 - p, kProbabilityFloor));
}

double example_loss_grad(double p, int label, double beta_pos, double beta_neg) {
  if (label == 1) {
    const double q = 1.0 - p;
    const double pc = std::max(p, kProbabilityFloor);
    const double dlog = p > kProbabilityFloor ? -1.0 / p : 0.0;
    return beta_pos * (2.0 * q * std::log(pc) + q * q * dlog);
  }
  const double q = 1.0 - p;
  const double qc = std::max(q, kProbabilityFloor);
  const double dlog = q > kProbabilityFloor ? 1.0 / q : 0.0;
  return beta_neg * (-2.0 * p * std::log(qc) + p * p * dlog);
}

BatchLoss batch_loss(std::span<const double> p, std::span<const int> labels, double beta_pos,
                     double beta_neg) {
  if (p.size() != labels.size()) {
    throw DimensionError("batch_loss: " + std::to_string(p.size()) + " scores but " +
                         std::to_string(labels.size()) + " labels");
  }
  if (p.empty()) throw UsageError("batch_loss: empty batch");
  BatchLoss out;
  out.per_example.resize(p.size());
  out.grad.resize(p.size());
  const double n = static_cast<double>(p.size());
  for (std::size_t k = 0; k < p.size(); ++k) {
    if (!std::isfinite(p[k])) throw NumericError("batch_loss: non-finite score at index " + std::to_string(k));
    out.per_example[k] = example_loss(p[k], labels[k], beta_pos, beta_neg);
    out.grad[k] = example_loss_grad(p[k], labels[k], beta_pos, beta_neg) / n;
    out.loss += out.per_example[k];
  }
  out.loss /= n;
  return out;
}

std::vector<std::size_t> mine_hard(std::span<const double> losses, int k) {
  if (k < 1) throw UsageError("mine_hard: k must be >= 1");
  std::vector<std::size_t> idx(losses.size());
  std::iota(idx.begin(), idx.end(), std::size_t{0});
  std::stable_sort(idx.begin(), idx.end(),
                   [&](std::size_t a, std::size_t b) { return losses[a] > losses[b]; });
  if (idx.size() > static_cast<std::size_t>(k)) idx.resize(static_cast<std::size_t>(k));
  return idx;
}

}  // namespace mtp::train
