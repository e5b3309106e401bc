#include "mtp/metrics/clear_mot.hpp"

#include <Eigen/Dense>

#include <set>
#include <vector>

#include "mtp/error.hpp"
#include "mtp/metrics/hungarian.hpp"

namespace mtp::metrics {

namespace {

using Frames = std::map<int, std::vector<FrameObject>>;

Frames by_frame(std::span<const io::MotRecord> records, const char* side) {
  Frames out;
  for (const auto& r : records) out[r.frame].push_back({r.id, r.box()});
  for (const auto& [frame, objs] : out) {
    std::set<int> seen;
    for (const auto& o : objs) {
      if (!seen.insert(o.id).second) {
        throw EvaluationError(std::string(side) + " id " + std::to_string(o.id) +
                              " appears twice in frame " + std::to_string(frame));
      }
    }
  }
  return out;
}

const FrameObject* find_id(std::span<const FrameObject> objs, int id) {
  for (const auto& o : objs) {
    if (o.id == id) return &o;
  }
  return nullptr;
}

}  // namespace

Correspondence match_frame(std::span<const FrameObject> gt, std::span<const FrameObject> pred,
                           const Correspondence& previous) {
  Correspondence out;
  std::set<int> used_pred;
  for (const auto& [gid, pid] : previous) {
    const FrameObject* g = find_id(gt, gid);
    const FrameObject* p = find_id(pred, pid);
    if (g && p && iou(g->box, p->box) >= kMatchIou) {
      out[gid] = pid;
      used_pred.insert(pid);
    }
  }

  std::vector<const FrameObject*> rest_gt, rest_pred;
  for (const auto& g : gt) {
    if (!out.contains(g.id)) rest_gt.push_back(&g);
  }
  for (const auto& p : pred) {
    if (!used_pred.contains(p.id)) rest_pred.push_back(&p);
  }
  if (rest_gt.empty() || rest_pred.empty()) return out;

  Eigen::MatrixXd cost(rest_gt.size(), rest_pred.size());
  for (std::size_t i = 0; i < rest_gt.size(); ++i) {
    for (std::size_t j = 0; j < rest_pred.size(); ++j) {
      const double o = iou(rest_gt[i]->box, rest_pred[j]->box);
      cost(i, j) = o >= kMatchIou ? 1.0 - o : kForbidden;
    }
  }
  for (const auto& [i, j] : hungarian(cost).pairs) out[rest_gt[i]->id] = rest_pred[j]->id;
  return out;
}

void ClearMot::finalize() {
  mota = num_gt > 0 ? 1.0 - static_cast<double>(fn + fp + idsw) / static_cast<double>(num_gt) : 0.0;
}

ClearMot clear_mot(std::span<const io::MotRecord> gt_records,
                   std::span<const io::MotRecord> pred_records) {
  if (gt_records.empty()) throw EvaluationError("clear_mot: ground truth is empty");
  const Frames gt = by_frame(gt_records, "ground-truth");
  const Frames pred = by_frame(pred_records, "predicted");

  struct GtHistory {
    int frames = 0;
    int covered = 0;
    bool tracked_before = false;
    bool tracked_last = false;
    int last_pred = -1;
    bool has_last_pred = false;
  };
  std::map<int, GtHistory> hist;
  ClearMot m;
  double iou_sum = 0.0;
  Correspondence previous;

  std::set<int> frames;
  for (const auto& [f, _] : gt) frames.insert(f);
  for (const auto& [f, _] : pred) frames.insert(f);
  static const std::vector<FrameObject> kNone;

  for (int f : frames) {
    const auto git = gt.find(f);
    const auto pit = pred.find(f);
    const auto& g = git != gt.end() ? git->second : kNone;
    const auto& p = pit != pred.end() ? pit->second : kNone;
    const Correspondence cur = match_frame(g, p, previous);

    m.num_gt += static_cast<long>(g.size());
    m.num_pred += static_cast<long>(p.size());
    m.tp += static_cast<long>(cur.size());
    m.fn += static_cast<long>(g.size() - cur.size());
    m.fp += static_cast<long>(p.size() - cur.size());

    for (const auto& obj : g) {
      GtHistory& h = hist[obj.id];
      ++h.frames;
      const auto it = cur.find(obj.id);
      const bool tracked = it != cur.end();
      if (tracked) {
        ++h.covered;
        if (h.has_last_pred && h.last_pred != it->second) ++m.idsw;
        if (h.tracked_before && !h.tracked_last) ++m.frag;
        h.last_pred = it->second;
        h.has_last_pred = true;
        h.tracked_before = true;
        iou_sum += iou(obj.box, find_id(p, it->second)->box);
      }
      h.tracked_last = tracked;
    }
    previous = cur;
  }

  m.num_tracks = static_cast<int>(hist.size());
  for (const auto& [id, h] : hist) {
    const double coverage = static_cast<double>(h.covered) / static_cast<double>(h.frames);
    if (coverage >= 0.8) {
      ++m.mt;
    } else if (coverage <= 0.2) {
      ++m.ml;
    } else {
      ++m.pt;
    }
  }
  m.motp = m.tp > 0 ? iou_sum / static_cast<double>(m.tp) : 0.0;
  m.finalize();
  return m;
}

void IdScores::finalize() {
  const auto ratio = [](long num, long den) {
    return den > 0 ? static_cast<double>(num) / static_cast<double>(den) : 0.0;
  };
  idp = ratio(idtp, idtp + idfp);
  idr = ratio(idtp, idtp + idfn);
  idf1 = ratio(2 * idtp, 2 * idtp + idfp + idfn);
}

IdScores idf1(std::span<const io::MotRecord> gt_records,
              std::span<const io::MotRecord> pred_records) {
  if (gt_records.empty()) throw EvaluationError("idf1: ground truth is empty");
  const Frames gt = by_frame(gt_records, "ground-truth");
  const Frames pred = by_frame(pred_records, "predicted");

  std::map<int, int> gt_index, pred_index;
  for (const auto& r : gt_records) gt_index.try_emplace(r.id, static_cast<int>(gt_index.size()));
  for (const auto& r : pred_records) pred_index.try_emplace(r.id, static_cast<int>(pred_index.size()));

  IdScores s;
  const long total_gt = static_cast<long>(gt_records.size());
  const long total_pred = static_cast<long>(pred_records.size());
  if (pred_index.empty()) {
    s.idfn = total_gt;
    s.finalize();
    return s;
  }

  Eigen::MatrixXd overlap = Eigen::MatrixXd::Zero(gt_index.size(), pred_index.size());
  for (const auto& [f, gobjs] : gt) {
    const auto pit = pred.find(f);
    if (pit == pred.end()) continue;
    for (const auto& g : gobjs) {
      for (const auto& p : pit->second) {
        if (iou(g.box, p.box) >= kMatchIou) overlap(gt_index[g.id], pred_index[p.id]) += 1.0;
      }
    }
  }
  const Assignment a = hungarian(-overlap);
  for (const auto& [i, j] : a.pairs) s.idtp += static_cast<long>(overlap(i, j));
  s.idfn = total_gt - s.idtp;
  s.idfp = total_pred - s.idtp;
  s.finalize();
  return s;
}

}  // namespace mtp::metrics
