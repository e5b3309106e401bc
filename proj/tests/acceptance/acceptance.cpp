// Acceptance suite: one PASS/FAIL line per criterion, nonzero exit on any failure.

#include <algorithm>
#include <chrono>
#include <cmath>
#include <cstdio>
#include <functional>
#include <numeric>
#include <set>
#include <sstream>
#include <string>

#include "mtp/app/pipeline.hpp"
#include "mtp/error.hpp"
#include "mtp/io/embeddings.hpp"
#include "mtp/io/mot.hpp"
#include "mtp/io/run_config.hpp"
#include "mtp/log.hpp"
#include "mtp/metrics/clear_mot.hpp"
#include "mtp/metrics/hungarian.hpp"
#include "mtp/model/classifier.hpp"
#include "mtp/sim/scenario.hpp"
#include "mtp/tracker/association.hpp"
#include "mtp/tracker/tracker.hpp"
#include "mtp/train/loss.hpp"
#include "mtp/train/trainer.hpp"
#include "oracles.hpp"

using namespace mtp;
using Eigen::MatrixXd;
using Eigen::VectorXd;
using model::HeadMode;
using model::ModelConfig;
using model::ModelParams;

namespace {

struct Outcome {
  bool pass = true;
  std::string detail;
};

// Collects failed checks of one criterion.
class Checks {
 public:
  void require(bool ok, const std::string& what) {
    if (!ok && failures_.size() < 5) failures_.push_back(what);
    if (!ok) ++failed_;
  }
  Outcome outcome(std::string summary) const {
    if (failed_ == 0) return {true, std::move(summary)};
    std::string d = std::to_string(failed_) + " check(s) failed:";
    for (const auto& f : failures_) d += " [" + f + "]";
    return {false, d + "; " + summary};
  }

 private:
  std::vector<std::string> failures_;
  int failed_ = 0;
};

std::string fmt(const char* f, double v) {
  char buf[64];
  std::snprintf(buf, sizeof buf, f, v);
  return buf;
}

double seconds_since(std::chrono::steady_clock::time_point t0) {
  return std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
}

ModelConfig toy(HeadMode head = HeadMode::kAppearanceOnly) {
  ModelConfig c;
  c.embed_dim = 6;
  c.key_dim = 4;
  c.rows = 3;
  c.hidden = 12;
  c.motion_hidden = 5;
  c.motion_feat = 3;
  c.joint_hidden = 6;
  c.head = head;
  return c;
}

train::TrainingSequence toy_scene(int targets, int frames, std::uint64_t seed) {
  sim::ScenarioSpec s;
  s.num_targets = targets;
  s.num_clusters = std::min(2, targets);
  s.frames = frames;
  s.embed_dim = 6;
  s.fp_rate = 0.3;
  s.miss_prob = 0.1;
  s.seed = seed;
  return app::scenario_sequence(sim::generate(s), "toy");
}

io::MotRecord row(int frame, int id, double left) { return {frame, id, left, 0.0, 10.0, 20.0, 1.0}; }

std::vector<io::MotRecord> straight(int id, int first, int last) {
  std::vector<io::MotRecord> out;
  for (int f = first; f <= last; ++f) out.push_back(row(f, id, 100.0 * id + f));
  return out;
}

Outcome gradient_correctness() {
  auto cfg = ModelConfig::desk();
  cfg.head = HeadMode::kJoint;
  nn::GradCheckOptions opts;
  opts.max_coords_per_tensor = 8;
  const auto t0 = std::chrono::steady_clock::now();
  double worst = 0.0;
  for (std::uint64_t seed = 1; seed <= 20; ++seed) {
    opts.sample_seed = seed;
    worst = std::max(worst, app::check_classifier_gradients(cfg, seed, opts, 3, 2).max_rel_error);
  }
  const double secs = seconds_since(t0);
  Checks c;
  c.require(worst < 1e-4, "max relative error " + fmt("%.3g", worst));
  c.require(secs < 60.0, "runtime " + fmt("%.1f s", secs));
  return c.outcome("joint head, 20 seeds, 8 coords per tensor, max rel err " + fmt("%.2e", worst) + " in " +
                   fmt("%.1f s", secs));
}

Outcome loss_oracle() {
  Checks c;
  oracle::Rng rng(7);
  std::uniform_real_distribution<double> u(0.0, 1.0), beta(0.1, 5.0);
  double worst = 0.0;
  for (int trial = 0; trial < 1000; ++trial) {
    const int n = 1 + static_cast<int>(rng() % 40);
    std::vector<double> p(n);
    std::vector<int> y(n);
    for (int i = 0; i < n; ++i) {
      p[i] = u(rng);
      y[i] = u(rng) < 0.3 ? 1 : 0;
    }
    const double bp = beta(rng), bn = beta(rng);
    const auto got = train::batch_loss(p, y, bp, bn);
    double want = 0.0;
    for (int i = 0; i < n; ++i) want += oracle::focal(p[i], y[i], bp, bn);
    want /= n;
    worst = std::max(worst, std::abs(got.loss - want));
  }
  c.require(worst < 1e-12, "oracle difference " + fmt("%.3g", worst));
  const double pos = train::example_loss(0.5, 1, 4.0, 1.0);
  const double neg = train::example_loss(0.5, 0, 4.0, 1.0);
  c.require(fmt("%.4f", pos) == "0.6931", "positive example " + fmt("%.6f", pos));
  c.require(fmt("%.4f", neg) == "0.1733", "negative example " + fmt("%.6f", neg));
  return c.outcome("1000 batches, max diff " + fmt("%.1e", worst) + ", examples " + fmt("%.4f", pos) + " / " +
                   fmt("%.4f", neg));
}

Outcome pooling_algebra() {
  Checks c;
  oracle::Rng rng(3);
  const int rows = 8;
  int cases = 0;
  c.require(model::pool_other_tracks({}, rows) == VectorXd::Zero(rows), "empty set is not zero");
  for (int trial = 0; trial < 1000; ++trial) {
    const int k = 1 + static_cast<int>(rng() % 8);
    std::vector<VectorXd> others;
    for (int i = 0; i < k; ++i) others.push_back(oracle::random_vector(rng, rows).cwiseMax(0.0));
    const VectorXd pooled = model::pool_other_tracks(others, rows);
    auto shuffled = others;
    std::shuffle(shuffled.begin(), shuffled.end(), rng);
    c.require(model::pool_other_tracks(shuffled, rows) == pooled, "permutation changed the pool");
    auto superset = others;
    superset.push_back(oracle::random_vector(rng, rows).cwiseMax(0.0));
    c.require((model::pool_other_tracks(superset, rows).array() >= pooled.array()).all(),
              "superset decreased a coordinate");
    ++cases;
  }
  return c.outcome(std::to_string(cases) + " cases");
}

Outcome greedy_oracle() {
  Checks c;
  oracle::Rng rng(4);
  std::uniform_int_distribution<int> level(0, 10);
  std::uniform_real_distribution<double> u(0.0, 1.0);
  int ties = 0;
  for (int trial = 0; trial < 1000; ++trial) {
    MatrixXd s(6, 6);
    // Coarse levels make ties frequent; some pairs masked.
    for (int i = 0; i < 6; ++i) {
      for (int j = 0; j < 6; ++j) s(i, j) = u(rng) < 0.1 ? tracker::kMasked : level(rng) / 10.0;
    }
    std::set<double> distinct(s.data(), s.data() + s.size());
    if (distinct.size() < 36) ++ties;
    std::vector<int> ids(6);
    std::iota(ids.begin(), ids.end(), 1);
    std::shuffle(ids.begin(), ids.end(), rng);
    const double thr = level(rng) / 10.0;
    const auto got = tracker::greedy_associate(s, thr, ids);
    c.require(got == oracle::greedy(s, thr, ids), "trial " + std::to_string(trial) + " differs");
    const auto higher = tracker::greedy_associate(s, std::min(1.0, thr + 0.25), ids);
    const std::set<tracker::Pair> base(got.begin(), got.end());
    for (const auto& p : higher) c.require(base.contains(p), "threshold raise added a pair");
  }
  return c.outcome("1000 matrices 6x6, " + std::to_string(ties) + " with ties");
}

Outcome truncated_bptt() {
  Checks c;
  const train::ForwardOptions opts;
  const auto params = ModelParams::initialize(toy());
  double worst_toy = 0.0;
  for (std::uint64_t seed = 1; seed <= 5; ++seed) {
    const auto seq = toy_scene(3, 5, seed);
    auto g_full = params.zeros_like();
    oracle::full_bptt(params, g_full, seq, opts.beta_pos, opts.beta_neg);
    for (int window : {5, 1000}) {
      auto g = params.zeros_like();
      train::actual_episode_gradient(params, g, seq, window, opts);
      worst_toy = std::max(worst_toy, oracle::max_abs_diff(g, g_full));
    }
  }
  c.require(worst_toy < 1e-10, "window >= length differs by " + fmt("%.3g", worst_toy));

  const auto seq = toy_scene(3, 25, 11);
  std::vector<train::SegmentTrace> trace;
  auto g = params.zeros_like();
  train::actual_episode_gradient(params, g, seq, 10, opts, &trace);
  std::vector<std::pair<int, int>> segs;
  for (const auto& t : trace) segs.emplace_back(t.segment.first_frame, t.segment.last_frame);
  c.require(segs == std::vector<std::pair<int, int>>{{1, 10}, {11, 20}, {21, 25}}, "segments are not 1-10/11-20/21-25");

  std::map<int, std::map<int, VectorXd>> memory;
  auto g_full = params.zeros_like();
  oracle::full_bptt(params, g_full, seq, opts.beta_pos, opts.beta_neg, &memory);
  double state_gap = 0.0;
  for (std::size_t k = 1; k < trace.size(); ++k) {
    c.require(trace[k].state_in.size() == trace[k - 1].state_out.size(), "carried track count changed");
    for (const auto& [id, t] : trace[k - 1].state_out) {
      const auto it = trace[k].state_in.find(id);
      if (it == trace[k].state_in.end()) {
        c.require(false, "track dropped at a cut");
        continue;
      }
      c.require(it->second.memory.h == t.memory.h && it->second.memory.c == t.memory.c, "state altered at a cut");
      const VectorXd& want = memory.at(trace[k - 1].segment.last_frame).at(id);
      state_gap = std::max(state_gap, (t.memory.h - want).cwiseAbs().maxCoeff());
    }
  }
  c.require(state_gap < 1e-12, "carried state differs from the uncut pass by " + fmt("%.3g", state_gap));

  // Each segment's gradient stops at its first frame: the first one equals full
  // backprop over frames 1-10, and the total differs from full backprop.
  auto head = seq;
  head.frames.erase(head.frames.upper_bound(10), head.frames.end());
  auto g_head = params.zeros_like();
  oracle::full_bptt(params, g_head, head, opts.beta_pos, opts.beta_neg);
  auto g_first = params.zeros_like();
  train::run_segment(params, &g_first, seq, trace[0].segment, {}, opts);
  const double first_gap = oracle::max_abs_diff(g_first, g_head);
  c.require(first_gap < 1e-10, "first segment differs from backprop over 1-10 by " + fmt("%.3g", first_gap));
  const double cut_gap = oracle::max_abs_diff(g, g_full);
  c.require(cut_gap > 1e-8, "windowed gradient equals the uncut one");
  return c.outcome("toys max diff " + fmt("%.1e", worst_toy) + ", cuts at 10 and 20, state gap " +
                   fmt("%.1e", state_gap) + ", cut effect " + fmt("%.1e", cut_gap));
}

Outcome metrics_fixtures() {
  Checks c;
  const auto one = straight(1, 1, 10);
  auto two = one;
  const auto t2 = straight(2, 1, 10);
  two.insert(two.end(), t2.begin(), t2.end());
  const auto perfect = metrics::clear_mot(two, two);
  c.require(perfect.mota == 1.0, "perfect MOTA " + fmt("%g", perfect.mota));
  c.require(metrics::idf1(two, two).idf1 == 1.0, "perfect IDF1");

  auto switched = one;
  for (auto& r : switched) {
    if (r.frame >= 6) r.id = 2;
  }
  const auto sw = metrics::clear_mot(one, switched);
  c.require(sw.idsw == 1, "switch IDSW " + std::to_string(sw.idsw));
  c.require(std::abs(sw.mota - 0.9) < 1e-15, "switch MOTA " + fmt("%.17g", sw.mota));
  const auto split = metrics::idf1(one, switched);
  c.require(split.idf1 == 0.5, "split IDF1 " + fmt("%g", split.idf1));

  oracle::Rng rng(5);
  std::uniform_int_distribution<int> dim(1, 7);
  std::uniform_real_distribution<double> u(0.0, 1.0);
  for (int trial = 0; trial < 500; ++trial) {
    MatrixXd cost(dim(rng), dim(rng));
    for (Eigen::Index i = 0; i < cost.size(); ++i) {
      cost.data()[i] = u(rng) < 0.2 ? metrics::kForbidden : std::round(u(rng) * 100.0) / 10.0;
    }
    const auto got = metrics::hungarian(cost);
    const auto want = oracle::brute_assignment(cost);
    c.require(static_cast<int>(got.pairs.size()) == want.pairs && std::abs(got.cost - want.cost) < 1e-9,
              "hungarian trial " + std::to_string(trial));
  }
  return c.outcome("fixtures exact, hungarian = brute force on 500 matrices up to 7x7");
}

Outcome ablation_trend() {
  const auto t0 = std::chrono::steady_clock::now();
  const auto config = io::parse_config("{}");
  const auto arms = app::bench_ablation(config, app::AblationOptions{});
  const double secs = seconds_since(t0);
  const auto& base = arms.front().report.total;
  const auto& pooled = arms.back().report.total;
  std::string detail;
  for (const auto& a : arms) {
    detail += a.name + ": IDF1 " + fmt("%.1f", 100.0 * a.report.total.identity.idf1) + " IDS " +
              std::to_string(a.report.total.clear.idsw) + " MOTA " +
              fmt("%.1f", 100.0 * a.report.total.clear.mota) + "; ";
  }
  Checks c;
  c.require(pooled.identity.idf1 > base.identity.idf1, "pooled IDF1 not above baseline");
  c.require(pooled.clear.idsw < base.clear.idsw, "pooled IDS not below baseline");
  c.require(secs < 900.0, "runtime " + fmt("%.0f s", secs));
  return c.outcome(detail + fmt("%.0f s", secs));
}

Outcome end_to_end() {
  auto config = io::parse_config("{}");
  sim::ScenarioSpec spec = config.sim;
  spec.frames = 100;
  spec.miss_prob = 0.0;
  spec.fp_rate = 0.0;
  spec.box_jitter = 0.0;
  spec.embedding_noise = 0.0;
  const auto sc = sim::generate(spec);
  const auto trainer = app::train_model(config.model, config.train, {app::scenario_sequence(sc, "noiseless")});
  auto tc = config.tracker;
  tc.image_width = spec.image_width;
  tc.image_height = spec.image_height;
  const auto pred = app::track_sequence(trainer.params(), tc, sc.detections, sc.embeddings);
  const auto m = metrics::clear_mot(sc.gt, pred);
  const auto id = metrics::idf1(sc.gt, pred);
  Checks c;
  c.require(m.mota == 1.0, "MOTA " + fmt("%.4f", m.mota));
  c.require(id.idf1 == 1.0, "IDF1 " + fmt("%.4f", id.idf1));
  c.require(m.idsw == 0, "IDSW " + std::to_string(m.idsw));
  return c.outcome("MOTA " + fmt("%.3f", m.mota) + " IDF1 " + fmt("%.3f", id.idf1) + " IDSW " +
                   std::to_string(m.idsw) + " after " + std::to_string(trainer.log().size()) + " iterations");
}

// Association time of one frame with m live tracks and m detections.
double association_ms(const ModelParams& params, int m, oracle::Rng& rng) {
  tracker::TrackerConfig cfg;
  cfg.image_width = 4000.0;
  cfg.image_height = 4000.0;
  tracker::Tracker trk(params, cfg);
  std::vector<tracker::Detection> dets;
  for (int k = 0; k < m; ++k) {
    dets.push_back({Box{40.0 * (k % 10) * 10.0, 100.0 * (k / 10), 30.0, 80.0}, 1.0,
                    oracle::random_vector(rng, params.config.embed_dim)});
  }
  trk.step_frame(1, dets);
  trk.step_frame(2, dets);
  return trk.last_timing().association_ms;
}

Outcome throughput() {
  Checks c;
  const auto params = ModelParams::initialize(ModelConfig::desk());
  oracle::Rng rng(9);
  std::vector<double> x, y;
  for (int m = 10; m <= 100; m += 10) {
    std::vector<double> reps;
    for (int r = 0; r < 9; ++r) reps.push_back(association_ms(params, m, rng));
    std::nth_element(reps.begin(), reps.begin() + 4, reps.end());
    x.push_back(static_cast<double>(m) * m);
    y.push_back(reps[4]);
  }
  const double n = static_cast<double>(x.size());
  const double mx = std::accumulate(x.begin(), x.end(), 0.0) / n;
  const double my = std::accumulate(y.begin(), y.end(), 0.0) / n;
  double sxy = 0.0, sxx = 0.0, syy = 0.0;
  for (std::size_t i = 0; i < x.size(); ++i) {
    sxy += (x[i] - mx) * (y[i] - my);
    sxx += (x[i] - mx) * (x[i] - mx);
    syy += (y[i] - my) * (y[i] - my);
  }
  const double r2 = syy > 0.0 ? sxy * sxy / (sxx * syy) : 0.0;
  c.require(r2 > 0.95, "R^2 " + fmt("%.4f", r2));

  // Per-track state over a 600-frame scene.
  sim::ScenarioSpec spec;
  spec.embed_dim = ModelConfig::desk().embed_dim;
  spec.frames = 600;
  const auto sc = sim::generate(spec);
  tracker::TrackerConfig tc;
  tc.image_width = spec.image_width;
  tc.image_height = spec.image_height;
  tracker::Tracker trk(params, tc);
  const auto frames = io::group_by_frame(sc.detections);
  std::set<std::size_t> sizes;
  for (const auto& [f, rows] : frames) {
    std::vector<tracker::Detection> dets;
    for (std::size_t k = 0; k < rows.size(); ++k) {
      dets.push_back({rows[k].box(), rows[k].conf, sc.embeddings.at(f, static_cast<int>(k))});
    }
    trk.step_frame(f, dets);
    for (const auto& t : trk.live_tracks()) sizes.insert(tracker::state_bytes(t));
  }
  c.require(sizes.size() == 1, std::to_string(sizes.size()) + " distinct state sizes");
  return c.outcome("R^2 " + fmt("%.4f", r2) + " (" + fmt("%.3f", y.front()) + " ms at 10x10, " +
                   fmt("%.3f", y.back()) + " ms at 100x100), state " +
                   (sizes.empty() ? std::string("?") : std::to_string(*sizes.begin())) + " bytes over 600 frames");
}

Outcome io_and_defaults() {
  Checks c;
  oracle::Rng rng(10);
  std::uniform_real_distribution<double> u(-1e4, 1e4), pos(1e-6, 1e3);
  std::vector<io::MotRecord> rows;
  for (int k = 0; k < 500; ++k) {
    rows.push_back({1 + static_cast<int>(rng() % 50), static_cast<int>(rng() % 20) - 1, u(rng), u(rng), pos(rng),
                    pos(rng), u(rng)});
  }
  std::stable_sort(rows.begin(), rows.end(), [](const io::MotRecord& a, const io::MotRecord& b) {
    return a.frame != b.frame ? a.frame < b.frame : a.id < b.id;
  });
  std::ostringstream mot;
  io::write_mot(mot, rows);
  std::istringstream mot_in(mot.str());
  c.require(io::parse_mot(mot_in) == rows, "MOT round trip");

  io::EmbeddingStore store(32);
  for (int f = 1; f <= 20; ++f) {
    for (int k = 0; k < 5; ++k) store.insert(f, k, oracle::random_vector(rng, 32, 1e3));
  }
  std::ostringstream emb;
  io::write_embeddings(emb, store);
  std::istringstream emb_in(emb.str());
  c.require(io::load_embeddings(emb_in).entries() == store.entries(), "embedding round trip");

  for (auto profile : {io::Profile::kDesk, io::Profile::kFull}) {
    const auto g = io::parse_config("{}", profile);
    c.require(g.tracker.assoc_threshold == 0.5, "threshold");
    c.require(g.tracker.n_miss == 60, "n_miss");
    c.require(g.train.window == 10, "window");
    c.require(g.train.max_gap == 40, "max gap");
    c.require(g.train.n_max == 8, "n_max");
    c.require(g.train.k_hard == 30, "k");
    c.require(g.train.beta_pos == 4.0 && g.train.beta_neg == 1.0, "betas");
  }
  return c.outcome("500 MOT rows and 100 embeddings bit-exact, golden defaults hold for both profiles");
}

struct Criterion {
  const char* id;
  const char* name;
  std::function<Outcome()> run;
};

}  // namespace

int main() {
  set_warning_sink([](const std::string&) {});
  const std::vector<Criterion> criteria = {
      {"C1", "gradient correctness", gradient_correctness},
      {"C2", "loss oracle", loss_oracle},
      {"C3", "pooling algebra", pooling_algebra},
      {"C4", "greedy association oracle", greedy_oracle},
      {"C5", "truncated BPTT", truncated_bptt},
      {"C6", "metrics fixtures", metrics_fixtures},
      {"C7", "ablation trend", ablation_trend},
      {"C8", "end-to-end sanity", end_to_end},
      {"C9", "throughput and fixed state", throughput},
      {"C10", "I/O and golden config", io_and_defaults},
  };
  int failed = 0;
  for (const auto& c : criteria) {
    Outcome o;
    const auto t0 = std::chrono::steady_clock::now();
    try {
      o = c.run();
    } catch (const std::exception& e) {
      o = {false, std::string("exception: ") + e.what()};
    }
    if (!o.pass) ++failed;
    std::printf("%s %s %s: %s (%.1f s)\n", o.pass ? "PASS" : "FAIL", c.id, c.name, o.detail.c_str(),
                seconds_since(t0));
    std::fflush(stdout);
  }
  std::printf("%d/%zu criteria passed\n", static_cast<int>(criteria.size()) - failed, criteria.size());
  return failed == 0 ? 0 : 1;
}
