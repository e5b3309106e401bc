#pragma once

#include <span>
#include <vector>

namespace mtp::train {

/// Probabilities are clamped to [1e-12, 1 - 1e-12] inside the logarithms.
inline constexpr double kProbabilityFloor = 1e-12;

/// alpha * cross-entropy of one proposal: beta_pos (1-p)^2 (-ln p) for a
/// positive, beta_neg p^2 (-ln(1-p)) for a negative.
double example_loss(double p, int label, double beta_pos, double beta_neg);

/// d example_loss / dp, with the weight differentiated as well.
double example_loss_grad(double p, int label, double beta_pos, double beta_neg);

struct BatchLoss {
  double loss = 0.0;                 // mean of per_example
  std::vector<double> per_example;
  std::vector<double> grad;          // d loss / d p_i
};

/// Throws NumericError on a non-finite probability, DimensionError when the
/// spans differ in length, UsageError on an empty batch.
BatchLoss batch_loss(std::span<const double> p, std::span<const int> labels, double beta_pos,
                     double beta_neg);

/// Indices of the k largest losses in decreasing loss order (all when the
/// batch has at most k); equal losses keep the lower index first.
std::vector<std::size_t> mine_hard(std::span<const double> losses, int k);

}  // namespace mtp::train
