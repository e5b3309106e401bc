#pragma once

// Scalar-generic forward pass of a random-episode loss, written directly on
// the layer templates rather than on the gradient tape. Evaluated in long
// double it is the objective of the finite-difference check.

#include "mtp/model/params.hpp"
#include "mtp/nn/gradcheck.hpp"
#include "mtp/train/episodes.hpp"

namespace mtp::app {

/// Mean focal-weighted loss over every track/detection pair of `episode`, with
/// the kink signature of the pass. Instantiated for double and long double.
template <typename Scalar>
nn::Evaluation reference_episode_loss(const model::ModelParams& params,
                                      const train::RandomEpisode& episode, double image_width,
                                      double image_height, double beta_pos, double beta_neg);

}  // namespace mtp::app
