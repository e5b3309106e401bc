#pragma once

#include <Eigen/Dense>

#include <map>
#include <random>
#include <span>
#include <string>
#include <vector>

#include "mtp/box.hpp"
#include "mtp/io/embeddings.hpp"
#include "mtp/io/mot.hpp"
#include "mtp/train/config.hpp"

namespace mtp::train {

using Rng = std::mt19937_64;

/// One detection with its appearance and the id of the track it belongs to
/// (-1 for false positives).
struct Observation {
  int frame = 0;
  Box box;
  Eigen::VectorXd embedding;
  int track_id = -1;
};

/// A video prepared for training: every frame's detections, labeled.
struct TrainingSequence {
  std::string name;
  double image_width = 1920.0;
  double image_height = 1080.0;
  std::map<int, std::vector<Observation>> frames;

  int first_frame() const { return frames.empty() ? 0 : frames.begin()->first; }
  int last_frame() const { return frames.empty() ? 0 : frames.rbegin()->first; }
};

struct TrackSpan {
  int first = 0;
  int last = 0;
};

std::map<int, TrackSpan> track_spans(const TrainingSequence& seq);

/// Detection matched to a ground-truth id.
struct AssignedDetection {
  int frame = 0;
  int det_index = 0;  // position within the frame, as in embedding files
  int id = 0;
  Box box;
};

/// Per frame, the detection-to-GT assignment maximizing total IoU; pairs
/// below IoU 0.5 are rejected and unmatched detections dropped.
std::vector<AssignedDetection> assign_ids_by_iou(std::span<const io::MotRecord> gt,
                                                 std::span<const io::MotRecord> detections);

/// Labels every detection through assign_ids_by_iou. Unmatched detections stay
/// in the sequence as false positives when `keep_unmatched` is set.
TrainingSequence build_training_sequence(std::string name, std::span<const io::MotRecord> gt,
                                         std::span<const io::MotRecord> detections,
                                         const io::EmbeddingStore& embeddings, double image_width,
                                         double image_height, bool keep_unmatched = true);

/// Drops each observation independently with probability `rate`, keeping the
/// first and the last.
std::vector<Observation> drop_observations(std::span<const Observation> track, double rate, Rng& rng);

/// Draws the rate uniformly from [rate_min, rate_max], then drop_observations.
std::vector<Observation> augment_missing(std::span<const Observation> track, double rate_min,
                                         double rate_max, Rng& rng);

/// augment_missing applied to every track of `seq`; false positives untouched.
TrainingSequence augment_sequence(const TrainingSequence& seq, const TrainConfig& cfg, Rng& rng);

/// M x N proposals of one frame. labels(i, j) = 1 iff detection j belongs to track i.
struct ProposalBatch {
  int frame = 0;
  std::vector<int> track_ids;
  std::vector<int> detection_track_ids;  // -1 for detections of no live track
  Eigen::MatrixXi labels;

  int positives() const { return labels.sum(); }
};

ProposalBatch make_batch(int frame, std::vector<int> track_ids, std::span<const Observation> detections);

/// Tracks taking part in the frame-`frame` batch of an actual episode: born
/// before `frame` and not ended before `frame - 1`.
std::vector<int> live_tracks(const std::map<int, TrackSpan>& spans, int frame);

/// Proposal batches of an actual episode in frame order; frames without a
/// live track or without detections are skipped.
std::vector<ProposalBatch> build_actual_episodes(const TrainingSequence& seq);

struct Segment {
  int first_frame = 0;
  int last_frame = 0;
};

/// Consecutive windows of `window` frames covering the sequence.
std::vector<Segment> segment_windows(const TrainingSequence& seq, int window);

/// Short random episode: histories of up to n_max tracks clipped to start at
/// most max_gap frames before `end_frame`, and every detection at `end_frame`.
struct RandomEpisode {
  int end_frame = 0;
  std::vector<int> track_ids;
  std::vector<std::vector<Observation>> histories;  // per track, frames < end_frame
  std::vector<Observation> detections;
  ProposalBatch batch;
};

/// Throws StateError when no usable end frame is found in `retries` draws.
RandomEpisode build_random_episode(const TrainingSequence& seq, const TrainConfig& cfg, Rng& rng);

}  // namespace mtp::train
