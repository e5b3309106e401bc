#pragma once

// Records the classifier's forward pass on a GradTape so the trainer can
// backpropagate through whole tracking episodes.

#include <Eigen/Dense>

#include <span>

#include "mtp/box.hpp"
#include "mtp/model/params.hpp"
#include "mtp/nn/tape.hpp"

namespace mtp::model {

class GraphBuilder {
 public:
  using Var = nn::GradTape::Var;

  struct State {
    Var h;
    Var c;
  };

  struct MotionStep {
    Var feature;
    State next;
  };

  /// `grads` may be null to record a forward pass without parameter gradients.
  GraphBuilder(nn::GradTape& tape, const ModelParams& params, ModelParams* grads)
      : tape_(tape), params_(params), grads_(grads) {}

  nn::GradTape& tape() { return tape_; }
  const ModelParams& params() const { return params_; }

  State constant_state(const Eigen::VectorXd& h, const Eigen::VectorXd& c);
  State zero_memory();
  State zero_motion();

  Var embed(const Eigen::VectorXd& raw);
  State memory_step(Var x, State prev);
  Var match(State memory, Var x);
  Var pool(std::span<const Var> others);

  /// FC-relu on the normalized box; shared by every track scored against it.
  Var motion_input(const NormalizedBox& box);
  MotionStep motion_step(Var input, State prev);

  /// Head on (m+, m-, motion feature). `m_minus` is ignored without pooling,
  /// `motion_feature` must be valid exactly in joint mode. `appearance_mask`,
  /// when non-null, multiplies the appearance features before concatenation
  /// (inverted dropout).
  Var probability(Var m_plus, Var m_minus, Var motion_feature,
                  const Eigen::VectorXd* appearance_mask = nullptr);

 private:
  template <typename W>
  W* grad_of(W ModelParams::*member) {
    return grads_ ? &(grads_->*member) : nullptr;
  }

  nn::GradTape& tape_;
  const ModelParams& params_;
  ModelParams* grads_;
};

}  // namespace mtp::model
