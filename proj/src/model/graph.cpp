#include "mtp/model/graph.hpp"

namespace mtp::model {

using Eigen::VectorXd;

GraphBuilder::State GraphBuilder::constant_state(const VectorXd& h, const VectorXd& c) {
  return {tape_.constant(h), tape_.constant(c)};
}

GraphBuilder::State GraphBuilder::zero_memory() {
  const auto n = params_.config.hidden;
  return constant_state(VectorXd::Zero(n), VectorXd::Zero(n));
}

GraphBuilder::State GraphBuilder::zero_motion() {
  const auto n = params_.config.motion_hidden;
  return constant_state(VectorXd::Zero(n), VectorXd::Zero(n));
}

GraphBuilder::Var GraphBuilder::embed(const VectorXd& raw) {
  nn::require_dim(raw.size(), params_.config.embed_dim, "embed");
  return tape_.dense(tape_.constant(raw), params_.embed, grad_of(&ModelParams::embed));
}

GraphBuilder::State GraphBuilder::memory_step(Var x, State prev) {
  auto [h, c] = tape_.lstm(x, prev.h, prev.c, params_.appearance_lstm,
                           grad_of(&ModelParams::appearance_lstm));
  return {h, c};
}

GraphBuilder::Var GraphBuilder::match(State memory, Var x) {
  return tape_.bilinear_match(memory.h, x, params_.config.rows);
}

GraphBuilder::Var GraphBuilder::pool(std::span<const Var> others) {
  return tape_.max_pool(others, params_.config.rows);
}

GraphBuilder::Var GraphBuilder::motion_input(const NormalizedBox& box) {
  VectorXd in(4);
  in << box.x, box.y, box.w, box.h;
  return tape_.dense(tape_.constant(in), params_.motion_in, grad_of(&ModelParams::motion_in));
}

GraphBuilder::MotionStep GraphBuilder::motion_step(Var input, State prev) {
  auto [h, c] = tape_.lstm(input, prev.h, prev.c, params_.motion_lstm,
                           grad_of(&ModelParams::motion_lstm));
  const Var feat = tape_.dense(h, params_.motion_out, grad_of(&ModelParams::motion_out));
  return {feat, {h, c}};
}

GraphBuilder::Var GraphBuilder::probability(Var m_plus, Var m_minus, Var motion_feature,
                                            const VectorXd* appearance_mask) {
  const ModelConfig& c = params_.config;
  const bool joint = c.head == HeadMode::kJoint;
  if (joint != motion_feature.valid()) {
    throw UsageError(joint ? "probability: joint head requires a motion feature"
                           : "probability: appearance-only head takes no motion feature");
  }
  const Var m_all = c.pooling ? tape_.concat(m_plus, m_minus) : m_plus;
  if (!joint) {
    Var logits = tape_.dense(m_all, params_.app_out, grad_of(&ModelParams::app_out));
    return tape_.match_probability(logits);
  }
  Var a = tape_.dense(m_all, params_.app_fc1, grad_of(&ModelParams::app_fc1));
  a = tape_.dense(a, params_.app_fc2, grad_of(&ModelParams::app_fc2));
  if (appearance_mask) a = tape_.scale(a, *appearance_mask);
  Var m = tape_.dense(motion_feature, params_.motion_fc1, grad_of(&ModelParams::motion_fc1));
  m = tape_.dense(m, params_.motion_fc2, grad_of(&ModelParams::motion_fc2));
  const Var j = tape_.dense(tape_.concat(a, m), params_.joint_fc, grad_of(&ModelParams::joint_fc));
  const Var logits = tape_.dense(j, params_.joint_out, grad_of(&ModelParams::joint_out));
  return tape_.match_probability(logits);
}

}  // namespace mtp::model
