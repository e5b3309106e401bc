#include <algorithm>

#include "mtp/tracker/tracker.hpp"

namespace mtp::tracker {

std::vector<TrackObservation> smooth_track(std::span<const TrackObservation> obs) {
  std::size_t end = obs.size();
  while (end > 0 && obs[end - 1].source != Source::kDetected) --end;

  std::vector<TrackObservation> out;
  for (std::size_t k = 0; k < end; ++k) {
    if (!out.empty()) {
      const TrackObservation& a = out.back();
      const TrackObservation& b = obs[k];
      const int gap = b.frame - a.frame;
      for (int f = 1; f < gap; ++f) {
        const double w = static_cast<double>(f) / gap;
        const auto lerp = [w](double u, double v) { return u + w * (v - u); };
        out.push_back({a.frame + f,
                       {lerp(a.box.left, b.box.left), lerp(a.box.top, b.box.top),
                        lerp(a.box.width, b.box.width), lerp(a.box.height, b.box.height)},
                       Source::kInterpolated});
      }
    }
    out.push_back(obs[k]);
  }
  return out;
}

std::vector<Track> smooth_tracks(std::vector<Track> tracks) {
  for (auto& t : tracks) t.history = smooth_track(t.history);
  return tracks;
}

std::vector<io::MotRecord> to_records(std::span<const Track> tracks) {
  std::vector<io::MotRecord> out;
  for (const auto& t : tracks) {
    for (const auto& o : t.history) {
      out.push_back({o.frame, t.id, o.box.left, o.box.top, o.box.width, o.box.height, 1.0});
    }
  }
  std::sort(out.begin(), out.end(), [](const io::MotRecord& a, const io::MotRecord& b) {
    return a.frame != b.frame ? a.frame < b.frame : a.id < b.id;
  });
  return out;
}

}  // namespace mtp::tracker
