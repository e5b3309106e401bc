#pragma once

// Inference path of the track classifier: per-track appearance memory,
// bilinear matching, multi-track pooling, the motion branch, and the head
// that turns them into p(detection belongs to track | all live tracks).

#include <Eigen/Dense>

#include <optional>
#include <span>

#include "mtp/box.hpp"
#include "mtp/model/params.hpp"

namespace mtp::model {

/// Flat LSTM state of one track; h reshapes row-major to rows x key_dim.
struct AppearanceMemory {
  Eigen::VectorXd h;
  Eigen::VectorXd c;
};

struct MotionState {
  Eigen::VectorXd h;
  Eigen::VectorXd c;
};

/// relu(H x): one non-negative response per memory row.
using MatchVector = Eigen::VectorXd;

/// Runtime switch for the pooling ablation: kZeroed forces m- to zero while
/// keeping the trained weights.
enum class PoolingSwitch { kOn, kZeroed };

struct MotionFeature {
  Eigen::VectorXd feature;
  MotionState next;
};

/// Motion input of one pair: the track's motion state and the candidate box.
struct MotionInput {
  const MotionState* state = nullptr;
  NormalizedBox box;
};

AppearanceMemory zero_memory(const ModelConfig& config);
MotionState zero_motion(const ModelConfig& config);

Eigen::VectorXd embed_detection(const ModelParams& params, const Eigen::VectorXd& embedding);

MatchVector bilinear_match(const ModelParams& params, const AppearanceMemory& memory,
                           const Eigen::VectorXd& x);

MatchVector pool_other_tracks(std::span<const MatchVector> others, Eigen::Index rows);

/// FC-relu -> LSTM -> FC-relu on the normalized box. Coordinates outside
/// [-1, 2] are reported through mtp::warn but still processed.
MotionFeature motion_feature(const ModelParams& params, const MotionState& state,
                             const NormalizedBox& box);

/// Head applied to precomputed match vectors. `m_minus` is ignored by the
/// no-pooling architecture; `motion_feat` is required exactly in joint mode.
double score_from_matches(const ModelParams& params, const MatchVector& m_plus,
                          const MatchVector& m_minus, const Eigen::VectorXd* motion_feat,
                          PoolingSwitch pooling = PoolingSwitch::kOn);

/// p(x belongs to target | target and others). Does not touch any memory.
/// Throws UsageError when `motion` presence disagrees with the head mode.
double score_pair(const ModelParams& params, const AppearanceMemory& target,
                  std::span<const AppearanceMemory> others, const Eigen::VectorXd& x,
                  std::optional<MotionInput> motion = std::nullopt,
                  PoolingSwitch pooling = PoolingSwitch::kOn);

AppearanceMemory update_memory(const ModelParams& params, const AppearanceMemory& memory,
                               const Eigen::VectorXd& x);

struct TrackInit {
  AppearanceMemory memory;
  MotionState motion;
};

/// Birth state: one memory step from zero with x, one motion step from zero with the box.
TrackInit init_track_state(const ModelParams& params, const Eigen::VectorXd& x,
                           const NormalizedBox& box);

}  // namespace mtp::model
