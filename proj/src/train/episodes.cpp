#include "mtp/train/episodes.hpp"

#include <algorithm>

#include "mtp/error.hpp"
#include "mtp/metrics/hungarian.hpp"

namespace mtp::train {

std::map<int, TrackSpan> track_spans(const TrainingSequence& seq) {
  std::map<int, TrackSpan> spans;
  for (const auto& [frame, dets] : seq.frames) {
    for (const auto& d : dets) {
      if (d.track_id < 0) continue;
      auto [it, fresh] = spans.try_emplace(d.track_id, TrackSpan{frame, frame});
      if (!fresh) {
        it->second.first = std::min(it->second.first, frame);
        it->second.last = std::max(it->second.last, frame);
      }
    }
  }
  return spans;
}

std::vector<AssignedDetection> assign_ids_by_iou(std::span<const io::MotRecord> gt,
                                                 std::span<const io::MotRecord> detections) {
  const auto gt_frames = io::group_by_frame(gt);
  const auto det_frames = io::group_by_frame(detections);
  std::vector<AssignedDetection> out;
  for (const auto& [frame, dets] : det_frames) {
    const auto git = gt_frames.find(frame);
    if (git == gt_frames.end()) continue;
    const auto& g = git->second;
    Eigen::MatrixXd cost(dets.size(), g.size());
    for (std::size_t i = 0; i < dets.size(); ++i) {
      for (std::size_t j = 0; j < g.size(); ++j) {
        const double o = iou(dets[i].box(), g[j].box());
        cost(i, j) = o >= 0.5 ? -o : metrics::kForbidden;
      }
    }
    for (const auto& [i, j] : metrics::hungarian(cost).pairs) {
      out.push_back({frame, i, g[j].id, dets[i].box()});
    }
  }
  return out;
}

TrainingSequence build_training_sequence(std::string name, std::span<const io::MotRecord> gt,
                                         std::span<const io::MotRecord> detections,
                                         const io::EmbeddingStore& embeddings, double image_width,
                                         double image_height, bool keep_unmatched) {
  io::validate_coverage(embeddings, detections);
  std::map<std::pair<int, int>, int> ids;
  for (const auto& a : assign_ids_by_iou(gt, detections)) ids[{a.frame, a.det_index}] = a.id;

  TrainingSequence seq;
  seq.name = std::move(name);
  seq.image_width = image_width;
  seq.image_height = image_height;
  for (const auto& [frame, dets] : io::group_by_frame(detections)) {
    auto& row = seq.frames[frame];
    for (std::size_t k = 0; k < dets.size(); ++k) {
      const auto it = ids.find({frame, static_cast<int>(k)});
      const int id = it == ids.end() ? -1 : it->second;
      if (id < 0 && !keep_unmatched) continue;
      row.push_back({frame, dets[k].box(), embeddings.at(frame, static_cast<int>(k)), id});
    }
  }
  return seq;
}

std::vector<Observation> drop_observations(std::span<const Observation> track, double rate, Rng& rng) {
  std::vector<Observation> out;
  std::bernoulli_distribution drop(rate);
  for (std::size_t k = 0; k < track.size(); ++k) {
    const bool anchor = k == 0 || k + 1 == track.size();
    const bool dropped = drop(rng);
    if (anchor || !dropped) out.push_back(track[k]);
  }
  return out;
}

std::vector<Observation> augment_missing(std::span<const Observation> track, double rate_min,
                                         double rate_max, Rng& rng) {
  std::uniform_real_distribution<double> u(rate_min, rate_max);
  const double rate = u(rng);
  return drop_observations(track, rate, rng);
}

TrainingSequence augment_sequence(const TrainingSequence& seq, const TrainConfig& cfg, Rng& rng) {
  std::map<int, std::vector<Observation>> tracks;
  TrainingSequence out;
  out.name = seq.name;
  out.image_width = seq.image_width;
  out.image_height = seq.image_height;
  for (const auto& [frame, dets] : seq.frames) {
    auto& row = out.frames[frame];
    for (const auto& d : dets) {
      if (d.track_id < 0) {
        row.push_back(d);
      } else {
        tracks[d.track_id].push_back(d);
      }
    }
  }
  for (const auto& [id, obs] : tracks) {
    for (auto& d : augment_missing(obs, cfg.missing_rate_min, cfg.missing_rate_max, rng)) {
      out.frames[d.frame].push_back(std::move(d));
    }
  }
  return out;
}

ProposalBatch make_batch(int frame, std::vector<int> track_ids, std::span<const Observation> detections) {
  ProposalBatch b;
  b.frame = frame;
  b.track_ids = std::move(track_ids);
  b.labels = Eigen::MatrixXi::Zero(static_cast<Eigen::Index>(b.track_ids.size()),
                                   static_cast<Eigen::Index>(detections.size()));
  for (std::size_t j = 0; j < detections.size(); ++j) {
    int owner = -1;
    for (std::size_t i = 0; i < b.track_ids.size(); ++i) {
      if (detections[j].track_id >= 0 && detections[j].track_id == b.track_ids[i]) {
        b.labels(i, j) = 1;
        owner = detections[j].track_id;
      }
    }
    b.detection_track_ids.push_back(owner);
  }
  return b;
}

std::vector<int> live_tracks(const std::map<int, TrackSpan>& spans, int frame) {
  std::vector<int> ids;
  for (const auto& [id, s] : spans) {
    if (s.first < frame && s.last >= frame - 1) ids.push_back(id);
  }
  return ids;
}

std::vector<ProposalBatch> build_actual_episodes(const TrainingSequence& seq) {
  const auto spans = track_spans(seq);
  std::vector<ProposalBatch> out;
  for (const auto& [frame, dets] : seq.frames) {
    auto ids = live_tracks(spans, frame);
    if (ids.empty() || dets.empty()) continue;
    out.push_back(make_batch(frame, std::move(ids), dets));
  }
  return out;
}

std::vector<Segment> segment_windows(const TrainingSequence& seq, int window) {
  if (window < 1) throw UsageError("segment_windows: window must be >= 1");
  std::vector<Segment> out;
  if (seq.frames.empty()) return out;
  const int first = seq.first_frame();
  const int last = seq.last_frame();
  for (long f = first; f <= last; f += window) {
    out.push_back({static_cast<int>(f), static_cast<int>(std::min<long>(last, f + window - 1))});
  }
  return out;
}

RandomEpisode build_random_episode(const TrainingSequence& seq, const TrainConfig& cfg, Rng& rng) {
  std::map<int, std::vector<const Observation*>> tracks;
  for (const auto& [frame, dets] : seq.frames) {
    for (const auto& d : dets) {
      if (d.track_id >= 0) tracks[d.track_id].push_back(&d);
    }
  }
  std::vector<int> frames;
  for (const auto& [f, _] : seq.frames) frames.push_back(f);
  if (frames.empty()) throw StateError("build_random_episode: sequence has no frames");

  std::uniform_int_distribution<std::size_t> pick_frame(0, frames.size() - 1);
  std::uniform_int_distribution<int> pick_gap(1, cfg.max_gap);
  for (int attempt = 0; attempt < cfg.random_episode_retries; ++attempt) {
    const int end = frames[pick_frame(rng)];
    const int start = end - pick_gap(rng);

    // Tracks alive at `end` with at least one observation in [start, end).
    std::vector<int> alive;
    for (const auto& [id, obs] : tracks) {
      if (obs.front()->frame >= end || obs.back()->frame < end) continue;
      const bool seen = std::any_of(obs.begin(), obs.end(), [&](const Observation* o) {
        return o->frame >= start && o->frame < end;
      });
      if (seen) alive.push_back(id);
    }
    if (alive.empty()) continue;
    if (static_cast<int>(alive.size()) > cfg.n_max) {
      std::vector<int> kept;
      std::sample(alive.begin(), alive.end(), std::back_inserter(kept), cfg.n_max, rng);
      alive = std::move(kept);
    }

    RandomEpisode ep;
    ep.end_frame = end;
    ep.track_ids = alive;
    for (int id : alive) {
      std::vector<const Observation*> window;
      for (const Observation* o : tracks.at(id)) {
        if (o->frame >= start && o->frame < end) window.push_back(o);
      }
      std::uniform_int_distribution<std::size_t> clip(0, window.size() - 1);
      const std::size_t from = clip(rng);
      std::vector<Observation> hist;
      for (std::size_t k = from; k < window.size(); ++k) hist.push_back(*window[k]);
      ep.histories.push_back(std::move(hist));
    }
    ep.detections = seq.frames.at(end);
    ep.batch = make_batch(end, ep.track_ids, ep.detections);
    return ep;
  }
  throw StateError("build_random_episode: no frame with a live track after " +
                   std::to_string(cfg.random_episode_retries) + " draws");
}

}  // namespace mtp::train
