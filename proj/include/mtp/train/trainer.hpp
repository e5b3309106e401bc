#pragma once

#include <cstdint>
#include <functional>
#include <iosfwd>
#include <map>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "mtp/model/classifier.hpp"
#include "mtp/model/params.hpp"
#include "mtp/nn/optimizer.hpp"
#include "mtp/train/config.hpp"
#include "mtp/train/episodes.hpp"

namespace mtp::train {

/// Recurrent state of one track carried across truncated-BPTT windows.
struct CarriedTrack {
  model::AppearanceMemory memory;
  model::MotionState motion;
};
using CarriedState = std::map<int, CarriedTrack>;

struct ForwardOptions {
  double beta_pos = 4.0;
  double beta_neg = 1.0;
  /// Top-k hard examples per batch drive the gradient; 0 uses every example.
  int k_hard = 0;
  /// Appearance dropout rate (joint head only); masks drawn from `rng`.
  double dropout = 0.0;
  Rng* rng = nullptr;
};

struct SegmentResult {
  double loss = 0.0;       // mean over batched frames of the full-batch loss
  double objective = 0.0;  // the value whose gradient was accumulated
  int batches = 0;
  int proposals = 0;
  CarriedState state;      // state after the last frame of the segment
};

/// Teacher-forced forward (and, when `grads` is non-null, backward) of the
/// frames in `segment`. Tracks start from `carried` and from births inside the
/// segment; gradients do not flow into `carried`. The objective is the mean
/// over batched frames of each frame's batch loss.
SegmentResult run_segment(const model::ModelParams& params, model::ModelParams* grads,
                          const TrainingSequence& seq, Segment segment, const CarriedState& carried,
                          const ForwardOptions& options);

struct EpisodeResult {
  double loss = 0.0;
  double objective = 0.0;
  int proposals = 0;
  std::uint64_t signature = 0;  // kink signature of the forward pass
};

/// Forward (and backward when `grads` is non-null) of a random episode, with
/// backpropagation through each track's whole clipped history.
EpisodeResult run_random_episode(const model::ModelParams& params, model::ModelParams* grads,
                                 const RandomEpisode& episode, double image_width,
                                 double image_height, const ForwardOptions& options);

struct SegmentTrace {
  Segment segment;
  CarriedState state_in;
  CarriedState state_out;
  double loss = 0.0;
};

/// Sum over windows of the window gradients of an actual episode, without any
/// optimizer step. Returns the mean window loss; `trace` records each window.
double actual_episode_gradient(const model::ModelParams& params, model::ModelParams& grads,
                               const TrainingSequence& seq, int window,
                               const ForwardOptions& options,
                               std::vector<SegmentTrace>* trace = nullptr);

/// Learning rate at 0-based `iteration`: lr times lr_decay for every decay
/// epoch already reached.
double learning_rate(const TrainConfig& cfg, int iteration);

/// First iteration of each dropout phase (phase 0 starts at 0).
std::vector<int> dropout_phase_starts(const TrainConfig& cfg);
double dropout_rate(const TrainConfig& cfg, int iteration);

struct IterationLog {
  int iter = 0;
  std::string phase;  // "actual" or "random"
  double loss = 0.0;
  double lr = 0.0;
  double dropout = 0.0;
};

inline constexpr const char* kLogHeader = "iter,phase,loss,lr,dropout";

/// kLogHeader, then one row per iteration.
void write_log_csv(std::ostream& out, std::span<const IterationLog> log);
void write_log_row(std::ostream& out, const IterationLog& row);

/// Alternates actual-episode windows (even iterations) and random episodes
/// (odd iterations), one optimizer step each.
class Trainer {
 public:
  Trainer(TrainConfig cfg, model::ModelParams params, std::vector<TrainingSequence> data);

  /// Runs one iteration. Throws NumericError with a diagnostic when the loss
  /// or a gradient becomes non-finite.
  const IterationLog& step();
  /// Runs the remaining iterations of the schedule.
  void run(const std::function<void(const IterationLog&)>& on_iteration = {});

  bool finished() const { return iter_ >= cfg_.total_iterations(); }
  int iteration() const { return iter_; }
  const model::ModelParams& params() const { return params_; }
  const std::vector<IterationLog>& log() const { return log_; }

 private:
  ForwardOptions options_for(int iteration);
  double actual_iteration(const ForwardOptions& options);
  double random_iteration(const ForwardOptions& options);
  void start_sequence();

  TrainConfig cfg_;
  model::ModelParams params_;
  model::ModelParams grads_;
  std::vector<TrainingSequence> data_;
  Rng rng_;
  nn::Adam adam_;
  int iter_ = 0;
  std::vector<IterationLog> log_;

  // Actual-episode cursor.
  TrainingSequence current_;
  std::vector<Segment> segments_;
  std::size_t next_segment_ = 0;
  CarriedState carried_;
};

}  // namespace mtp::train
