#pragma once

#include <map>
#include <span>

#include "mtp/box.hpp"
#include "mtp/io/mot.hpp"

namespace mtp::metrics {

/// Minimum IoU for a prediction to count as covering a ground-truth box.
inline constexpr double kMatchIou = 0.5;

struct FrameObject {
  int id = 0;
  Box box;
};

/// Ground-truth id -> predicted id for one frame.
using Correspondence = std::map<int, int>;

/// CLEAR-MOT frame matching. Pairs from `previous` that are still present and
/// still overlap by at least kMatchIou are kept; the remaining objects are
/// matched by Hungarian on 1 - IoU, pairs below kMatchIou forbidden.
Correspondence match_frame(std::span<const FrameObject> gt, std::span<const FrameObject> pred,
                           const Correspondence& previous);

struct ClearMot {
  long num_gt = 0;  // ground-truth boxes
  long num_pred = 0;
  long tp = 0;
  long fp = 0;
  long fn = 0;
  long idsw = 0;
  long frag = 0;
  int num_tracks = 0;  // ground-truth trajectories
  int mt = 0;          // covered >= 80% of their frames
  int pt = 0;
  int ml = 0;          // covered <= 20%
  double mota = 0.0;
  double motp = 0.0;   // mean IoU of matched pairs

  void finalize();
};

/// Throws EvaluationError when `gt` is empty or an id repeats within a frame.
ClearMot clear_mot(std::span<const io::MotRecord> gt, std::span<const io::MotRecord> pred);

struct IdScores {
  long idtp = 0;
  long idfp = 0;
  long idfn = 0;
  double idf1 = 0.0;
  double idp = 0.0;
  double idr = 0.0;

  void finalize();
};

/// Identity scores under the trajectory matching that maximizes the number of
/// frames where matched trajectories overlap by at least kMatchIou.
/// Throws EvaluationError when `gt` is empty.
IdScores idf1(std::span<const io::MotRecord> gt, std::span<const io::MotRecord> pred);

}  // namespace mtp::metrics
