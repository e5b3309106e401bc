#include "mtp/model/classifier.hpp"

#include <cmath>
#include <sstream>
#include <vector>

#include "mtp/log.hpp"

namespace mtp::model {

using Eigen::VectorXd;

AppearanceMemory zero_memory(const ModelConfig& config) {
  return {VectorXd::Zero(config.hidden), VectorXd::Zero(config.hidden)};
}

MotionState zero_motion(const ModelConfig& config) {
  return {VectorXd::Zero(config.motion_hidden), VectorXd::Zero(config.motion_hidden)};
}

VectorXd embed_detection(const ModelParams& params, const VectorXd& embedding) {
  nn::require_dim(embedding.size(), params.config.embed_dim, "embed_detection");
  return nn::dense_forward(embedding, params.embed);
}

MatchVector bilinear_match(const ModelParams& params, const AppearanceMemory& memory,
                           const VectorXd& x) {
  nn::require_dim(x.size(), params.config.key_dim, "bilinear_match x");
  return nn::bilinear_match(memory.h, x, params.config.rows);
}

MatchVector pool_other_tracks(std::span<const MatchVector> others, Eigen::Index rows) {
  return nn::max_pool<double>(others, rows);
}

MotionFeature motion_feature(const ModelParams& params, const MotionState& state,
                             const NormalizedBox& box) {
  if (params.motion_lstm.empty()) throw UsageError("motion_feature: model has no motion branch");
  for (double v : {box.x, box.y, box.w, box.h}) {
    if (!std::isfinite(v)) throw NumericError("motion_feature: non-finite box coordinate");
    if (v < -1.0 || v > 2.0) {
      std::ostringstream msg;
      msg << "motion_feature: normalized coordinate " << v << " outside [-1, 2]";
      warn(msg.str());
      break;
    }
  }
  VectorXd in(4);
  in << box.x, box.y, box.w, box.h;
  const VectorXd a = nn::dense_forward(in, params.motion_in);
  auto next = nn::lstm_step(a, state.h, state.c, params.motion_lstm);
  VectorXd feat = nn::dense_forward(next.h, params.motion_out);
  return {std::move(feat), MotionState{std::move(next.h), std::move(next.c)}};
}

double score_from_matches(const ModelParams& params, const MatchVector& m_plus,
                          const MatchVector& m_minus, const VectorXd* motion_feat,
                          PoolingSwitch pooling) {
  const ModelConfig& c = params.config;
  const bool joint = c.head == HeadMode::kJoint;
  if (joint != (motion_feat != nullptr)) {
    throw UsageError(joint ? "score: joint head requires a motion input"
                           : "score: appearance-only head takes no motion input");
  }
  VectorXd m_all(c.memory_width());
  if (c.pooling) {
    m_all << m_plus, (pooling == PoolingSwitch::kZeroed ? VectorXd::Zero(c.rows) : m_minus);
  } else {
    m_all = m_plus;
  }
  if (!joint) return nn::match_probability<double>(nn::dense_forward(m_all, params.app_out));

  const VectorXd a = nn::dense_forward(nn::dense_forward(m_all, params.app_fc1), params.app_fc2);
  const VectorXd m =
      nn::dense_forward(nn::dense_forward(*motion_feat, params.motion_fc1), params.motion_fc2);
  VectorXd cat(a.size() + m.size());
  cat << a, m;
  const VectorXd j = nn::dense_forward(cat, params.joint_fc);
  return nn::match_probability<double>(nn::dense_forward(j, params.joint_out));
}

double score_pair(const ModelParams& params, const AppearanceMemory& target,
                  std::span<const AppearanceMemory> others, const VectorXd& x,
                  std::optional<MotionInput> motion, PoolingSwitch pooling) {
  const MatchVector m_plus = bilinear_match(params, target, x);
  std::vector<MatchVector> negatives;
  negatives.reserve(others.size());
  for (const auto& o : others) negatives.push_back(bilinear_match(params, o, x));
  const MatchVector m_minus = pool_other_tracks(negatives, params.config.rows);
  if (motion) {
    if (!motion->state) throw UsageError("score_pair: motion input without a state");
    const MotionFeature mf = motion_feature(params, *motion->state, motion->box);
    return score_from_matches(params, m_plus, m_minus, &mf.feature, pooling);
  }
  return score_from_matches(params, m_plus, m_minus, nullptr, pooling);
}

AppearanceMemory update_memory(const ModelParams& params, const AppearanceMemory& memory,
                               const VectorXd& x) {
  auto next = nn::lstm_step(x, memory.h, memory.c, params.appearance_lstm);
  return {std::move(next.h), std::move(next.c)};
}

TrackInit init_track_state(const ModelParams& params, const VectorXd& x,
                           const NormalizedBox& box) {
  TrackInit init{update_memory(params, zero_memory(params.config), x), zero_motion(params.config)};
  if (params.config.head == HeadMode::kJoint) {
    init.motion = motion_feature(params, init.motion, box).next;
  }
  return init;
}

}  // namespace mtp::model
