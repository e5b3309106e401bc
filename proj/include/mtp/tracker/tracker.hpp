#pragma once

#include <Eigen/Dense>

#include <span>
#include <vector>

#include "mtp/box.hpp"
#include "mtp/io/mot.hpp"
#include "mtp/model/classifier.hpp"
#include "mtp/model/params.hpp"
#include "mtp/tracker/config.hpp"
#include "mtp/tracker/embedding_source.hpp"
#include "mtp/tracker/kalman.hpp"

namespace mtp::tracker {

enum class Source { kDetected, kExtended, kInterpolated };

struct TrackObservation {
  int frame = 0;
  Box box;
  Source source = Source::kDetected;
};

struct Track {
  int id = 0;
  model::AppearanceMemory memory;
  model::MotionState motion;
  KalmanState kalman;
  /// Raw embedding of the last matched detection, used for extensions when
  /// no embedding source is available.
  Eigen::VectorXd last_embedding;
  int matched_count = 0;
  int missed_total = 0;
  int consecutive_missed = 0;
  int last_frame = 0;
  /// Filled only in near-online mode, where smoothing needs the whole track.
  std::vector<TrackObservation> history;
};

struct Detection {
  Box box;
  double conf = 1.0;
  Eigen::VectorXd embedding;
};

/// True iff missed_total > matched_count or consecutive_missed > n_miss.
bool maybe_terminate(const Track& track, const TrackerConfig& cfg);

/// Bytes of the fixed-size recurrent and filter state of a track (history excluded).
std::size_t state_bytes(const Track& track);

struct FrameTiming {
  int tracks = 0;
  int detections = 0;
  double association_ms = 0.0;  // pair scoring plus greedy matching
};

/// Online tracker: one instance per sequence, frames strictly increasing.
class Tracker {
 public:
  /// `source` (optional, not owned) supplies embeddings for extension candidates.
  Tracker(const model::ModelParams& params, TrackerConfig cfg,
          const EmbeddingSource* source = nullptr);

  /// Processes one frame and returns the boxes emitted for it (conf 1). In
  /// near-online mode nothing is emitted until finish(). Throws UsageError
  /// unless `frame` is larger than every previous frame.
  std::vector<io::MotRecord> step_frame(int frame, std::span<const Detection> detections);

  /// Near-online mode: smoothed rows of every track. Online mode: empty.
  std::vector<io::MotRecord> finish();

  const std::vector<Track>& live_tracks() const { return live_; }
  /// Scores of the last frame, rows = live tracks at its start, masked pairs = kMasked.
  const Eigen::MatrixXd& last_scores() const { return last_scores_; }
  const FrameTiming& last_timing() const { return timing_; }

 private:
  struct Extension {
    bool accepted = false;
    model::MotionState motion;
  };
  Extension try_extend(const Track& track, std::size_t index, const Box& predicted, int frame,
                       std::span<const model::AppearanceMemory> memories) const;
  void retire(Track&& track);

  const model::ModelParams& params_;
  TrackerConfig cfg_;
  const EmbeddingSource* source_;
  std::vector<Track> live_;
  std::vector<Track> finished_;
  int next_id_ = 1;
  int last_frame_ = 0;
  bool started_ = false;
  Eigen::MatrixXd last_scores_;
  FrameTiming timing_;
};

/// Fills gaps between a track's observations by linear interpolation and
/// drops extended observations after its last detection.
std::vector<TrackObservation> smooth_track(std::span<const TrackObservation> observations);

/// smooth_track applied to each track.
std::vector<Track> smooth_tracks(std::vector<Track> tracks);

/// Rows ordered by (frame, id).
std::vector<io::MotRecord> to_records(std::span<const Track> tracks);

}  // namespace mtp::tracker
