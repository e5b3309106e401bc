#pragma once

// Glue between modules: whole-sequence tracking, training data from
// synthetic scenes, and the pooling ablation benchmark.

#include <cstdint>
#include <functional>
#include <span>
#include <string>
#include <vector>

#include "mtp/io/embeddings.hpp"
#include "mtp/io/mot.hpp"
#include "mtp/io/run_config.hpp"
#include "mtp/metrics/report.hpp"
#include "mtp/model/params.hpp"
#include "mtp/nn/gradcheck.hpp"
#include "mtp/sim/scenario.hpp"
#include "mtp/train/episodes.hpp"
#include "mtp/train/trainer.hpp"

namespace mtp::app {

struct TrackStats {
  int frames = 0;
  double seconds = 0.0;
  double mean_association_ms = 0.0;
  double frames_per_second() const { return seconds > 0.0 ? frames / seconds : 0.0; }
};

/// Tracks frames 1..last_frame (default: last detection frame), frames
/// without detections included. Every detection must have an embedding.
std::vector<io::MotRecord> track_sequence(const model::ModelParams& params,
                                          const tracker::TrackerConfig& cfg,
                                          std::span<const io::MotRecord> detections,
                                          const io::EmbeddingStore& embeddings,
                                          const tracker::EmbeddingSource* source = nullptr,
                                          TrackStats* stats = nullptr, int last_frame = 0);

train::TrainingSequence scenario_sequence(const sim::Scenario& scenario, std::string name);

using IterationCallback = std::function<void(const train::IterationLog&)>;

/// Trains from `model.init_seed` initialization.
train::Trainer train_model(const model::ModelConfig& model, const train::TrainConfig& cfg,
                           std::vector<train::TrainingSequence> data,
                           const IterationCallback& on_iteration = {});

struct AblationArm {
  std::string name;
  metrics::EvalReport report;
};

struct AblationOptions {
  /// Seeds of the scenes the models are trained on.
  std::vector<std::uint64_t> train_seeds = default_train_seeds();
  /// Length of each training scene; 0 keeps the configured length. Many short
  /// scenes give the classifier more identities to generalize from.
  int train_frames = 100;
  /// Seeds of the held-out evaluation scenes.
  std::vector<std::uint64_t> eval_seeds = {1, 2, 3, 4, 5};

  /// `count` consecutive training seeds starting at 1001.
  static std::vector<std::uint64_t> default_train_seeds(int count = 100);
  /// Also train the no-pooling architecture under the same budget.
  bool retrain_baseline = true;
};

/// Trains the pooled model (and the no-pooling baseline) on `train_seeds`
/// scenes of `config.sim`, then tracks and evaluates every `eval_seeds` scene
/// with: pooled, pooled with m- zeroed at run time, and the baseline.
std::vector<AblationArm> bench_ablation(const io::RunConfig& config, const AblationOptions& options,
                                        const std::function<void(const std::string&)>& progress = {});

/// Finite-difference check of the full classifier loss on a random episode:
/// `tracks` tracks with `history` observations each, scored against
/// `detections` detections (the first min(tracks, detections) of them
/// continuing tracks, in random order). Parameters come from `seed`.
nn::GradCheckReport check_classifier_gradients(const model::ModelConfig& config, std::uint64_t seed,
                                               const nn::GradCheckOptions& options, int tracks = 3,
                                               int detections = 2, int history = 3);

/// Aligned comparison table of the arms' totals (MOTA, IDF1, IDS, MT, ML, Frag, ...).
std::string format_ablation(std::span<const AblationArm> arms);

}  // namespace mtp::app
