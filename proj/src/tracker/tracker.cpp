#include "mtp/tracker/tracker.hpp"

#include <algorithm>
#include <chrono>

#include "mtp/error.hpp"
#include "mtp/tracker/association.hpp"

namespace mtp::tracker {

using Eigen::VectorXd;
using model::HeadMode;
using model::MatchVector;

bool maybe_terminate(const Track& t, const TrackerConfig& cfg) {
  return t.missed_total > t.matched_count || t.consecutive_missed > cfg.n_miss;
}

std::size_t state_bytes(const Track& t) {
  const auto n = t.memory.h.size() + t.memory.c.size() + t.motion.h.size() + t.motion.c.size() +
                 t.last_embedding.size();
  return static_cast<std::size_t>(n) * sizeof(double) + sizeof(KalmanState) + 5 * sizeof(int);
}

Tracker::Tracker(const model::ModelParams& params, TrackerConfig cfg, const EmbeddingSource* source)
    : params_(params), cfg_(cfg), source_(source) {
  cfg_.validate();
  params_.config.validate();
}

void Tracker::retire(Track&& t) {
  if (cfg_.smoothing == SmoothingMode::kNearOnline) finished_.push_back(std::move(t));
}

Tracker::Extension Tracker::try_extend(const Track& track, std::size_t index, const Box& predicted,
                                       int frame,
                                       std::span<const model::AppearanceMemory> memories) const {
  std::optional<VectorXd> e = source_ ? source_->embed(frame, predicted) : std::nullopt;
  const VectorXd raw = e ? *e : track.last_embedding;
  const VectorXd x = model::embed_detection(params_, raw);
  const MatchVector m_plus = model::bilinear_match(params_, track.memory, x);
  std::vector<MatchVector> others;
  for (std::size_t k = 0; k < memories.size(); ++k) {
    if (k != index) others.push_back(model::bilinear_match(params_, memories[k], x));
  }
  const MatchVector m_minus = model::pool_other_tracks(others, params_.config.rows);
  const auto pooling = cfg_.ablate_pooling ? model::PoolingSwitch::kZeroed : model::PoolingSwitch::kOn;

  Extension ext;
  double p = 0.0;
  if (params_.config.head == HeadMode::kJoint) {
    auto mf = model::motion_feature(params_, track.motion,
                                    normalize(predicted, cfg_.image_width, cfg_.image_height));
    p = model::score_from_matches(params_, m_plus, m_minus, &mf.feature, pooling);
    ext.motion = std::move(mf.next);
  } else {
    p = model::score_from_matches(params_, m_plus, m_minus, nullptr, pooling);
  }
  ext.accepted = p >= cfg_.assoc_threshold;
  return ext;
}

std::vector<io::MotRecord> Tracker::step_frame(int frame, std::span<const Detection> dets) {
  if (started_ && frame <= last_frame_) {
    throw UsageError("step_frame: frame " + std::to_string(frame) + " after frame " +
                     std::to_string(last_frame_));
  }
  started_ = true;
  last_frame_ = frame;
  const bool joint = params_.config.head == HeadMode::kJoint;
  const bool keep_history = cfg_.smoothing == SmoothingMode::kNearOnline;
  const auto pooling = cfg_.ablate_pooling ? model::PoolingSwitch::kZeroed : model::PoolingSwitch::kOn;
  const std::size_t m = live_.size();
  const std::size_t n = dets.size();
  const auto rows = static_cast<Eigen::Index>(params_.config.rows);

  std::vector<KalmanState> predicted;
  predicted.reserve(m);
  for (const auto& t : live_) predicted.push_back(kalman_predict(t.kalman));
  std::vector<VectorXd> x;
  x.reserve(n);
  for (const auto& d : dets) x.push_back(model::embed_detection(params_, d.embedding));

  const auto t0 = std::chrono::steady_clock::now();
  std::vector<MatchVector> match(m * n);
  for (std::size_t i = 0; i < m; ++i) {
    for (std::size_t j = 0; j < n; ++j) match[i * n + j] = model::bilinear_match(params_, live_[i].memory, x[j]);
  }
  // Per detection and row: the best and second-best response over all tracks,
  // so the max over "all but track i" costs O(1).
  Eigen::MatrixXd best = Eigen::MatrixXd::Zero(rows, n), second = Eigen::MatrixXd::Zero(rows, n);
  Eigen::MatrixXi best_of = Eigen::MatrixXi::Constant(rows, n, -1);
  for (std::size_t j = 0; j < n; ++j) {
    for (std::size_t i = 0; i < m; ++i) {
      const MatchVector& v = match[i * n + j];
      for (Eigen::Index k = 0; k < rows; ++k) {
        if (v(k) > best(k, j)) {
          second(k, j) = best(k, j);
          best(k, j) = v(k);
          best_of(k, j) = static_cast<int>(i);
        } else if (v(k) > second(k, j)) {
          second(k, j) = v(k);
        }
      }
    }
  }

  last_scores_ = Eigen::MatrixXd::Constant(m, n, kMasked);
  std::vector<model::MotionState> next_motion(joint ? m * n : 0);
  MatchVector m_minus(rows);
  for (std::size_t i = 0; i < m; ++i) {
    for (std::size_t j = 0; j < n; ++j) {
      if (cfg_.gate == GateMode::kIou && !motion_gate(predicted[i].box(), dets[j].box, cfg_.gate_iou)) {
        continue;
      }
      for (Eigen::Index k = 0; k < rows; ++k) {
        m_minus(k) = best_of(k, j) == static_cast<int>(i) ? second(k, j) : best(k, j);
      }
      if (joint) {
        auto mf = model::motion_feature(params_, live_[i].motion,
                                        normalize(dets[j].box, cfg_.image_width, cfg_.image_height));
        last_scores_(i, j) = model::score_from_matches(params_, match[i * n + j], m_minus, &mf.feature, pooling);
        next_motion[i * n + j] = std::move(mf.next);
      } else {
        last_scores_(i, j) = model::score_from_matches(params_, match[i * n + j], m_minus, nullptr, pooling);
      }
    }
  }
  std::vector<int> ids;
  ids.reserve(m);
  for (const auto& t : live_) ids.push_back(t.id);
  const auto pairs = greedy_associate(last_scores_, cfg_.assoc_threshold, ids);
  const auto t1 = std::chrono::steady_clock::now();
  timing_ = {static_cast<int>(m), static_cast<int>(n),
             std::chrono::duration<double, std::milli>(t1 - t0).count()};

  std::vector<int> det_of(m, -1);
  std::vector<char> det_used(n, 0);
  for (const auto& [i, j] : pairs) {
    det_of[i] = j;
    det_used[j] = 1;
  }

  std::vector<model::AppearanceMemory> memories;
  if (cfg_.extension) {
    for (const auto& t : live_) memories.push_back(t.memory);
  }

  std::vector<io::MotRecord> out;
  const auto emit = [&](const Track& t, const Box& b) {
    out.push_back({frame, t.id, b.left, b.top, b.width, b.height, 1.0});
  };
  for (std::size_t i = 0; i < m; ++i) {
    Track& t = live_[i];
    const int j = det_of[i];
    if (j >= 0) {
      t.memory = model::update_memory(params_, t.memory, x[j]);
      if (joint) t.motion = std::move(next_motion[i * n + j]);
      t.kalman = kalman_update(predicted[i], dets[j].box);
      t.last_embedding = dets[j].embedding;
      ++t.matched_count;
      t.consecutive_missed = 0;
      t.last_frame = frame;
      if (keep_history) t.history.push_back({frame, dets[j].box, Source::kDetected});
      emit(t, dets[j].box);
      continue;
    }
    t.kalman = predicted[i];
    ++t.missed_total;
    if (cfg_.extension) {
      const Box guess = predicted[i].box();
      Extension ext = try_extend(t, i, guess, frame, memories);
      if (ext.accepted) {
        t.kalman = kalman_update(predicted[i], guess);
        if (joint) t.motion = std::move(ext.motion);
        t.consecutive_missed = 0;
        t.last_frame = frame;
        if (keep_history) t.history.push_back({frame, guess, Source::kExtended});
        emit(t, guess);
        continue;
      }
    }
    ++t.consecutive_missed;
  }

  for (std::size_t j = 0; j < n; ++j) {
    if (det_used[j] || dets[j].conf < cfg_.min_birth_conf) continue;
    const auto init = model::init_track_state(
        params_, x[j], normalize(dets[j].box, cfg_.image_width, cfg_.image_height));
    Track t;
    t.id = next_id_++;
    t.memory = init.memory;
    t.motion = init.motion;
    t.kalman = kalman_init(dets[j].box);
    t.last_embedding = dets[j].embedding;
    t.matched_count = 1;
    t.last_frame = frame;
    if (keep_history) t.history.push_back({frame, dets[j].box, Source::kDetected});
    emit(t, dets[j].box);
    live_.push_back(std::move(t));
  }

  std::vector<Track> keep;
  keep.reserve(live_.size());
  for (auto& t : live_) {
    if (maybe_terminate(t, cfg_)) {
      retire(std::move(t));
    } else {
      keep.push_back(std::move(t));
    }
  }
  live_ = std::move(keep);

  std::sort(out.begin(), out.end(), [](const io::MotRecord& a, const io::MotRecord& b) { return a.id < b.id; });
  if (keep_history) return {};
  return out;
}

std::vector<io::MotRecord> Tracker::finish() {
  if (cfg_.smoothing != SmoothingMode::kNearOnline) return {};
  for (auto& t : live_) finished_.push_back(std::move(t));
  live_.clear();
  const auto smoothed = smooth_tracks(std::move(finished_));
  finished_.clear();
  return to_records(smoothed);
}

}  // namespace mtp::tracker
