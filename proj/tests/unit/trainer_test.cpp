#include <gtest/gtest.h>

#include <cmath>
#include <numeric>
#include <sstream>

#include "mtp/app/pipeline.hpp"
#include "mtp/error.hpp"
#include "mtp/sim/scenario.hpp"
#include "mtp/train/trainer.hpp"
#include "oracles.hpp"

using namespace mtp;
using namespace mtp::train;
using mtp::model::HeadMode;
using mtp::model::ModelConfig;
using mtp::model::ModelParams;

namespace {

ModelConfig small(HeadMode head = HeadMode::kAppearanceOnly) {
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

TrainingSequence scene(int targets, int frames, int embed_dim, std::uint64_t seed = 3, double fp = 0.0) {
  sim::ScenarioSpec s;
  s.num_targets = targets;
  s.num_clusters = std::min(2, targets);
  s.frames = frames;
  s.embed_dim = embed_dim;
  s.fp_rate = fp;
  s.miss_prob = 0.1;
  s.seed = seed;
  return app::scenario_sequence(sim::generate(s), "scene");
}

TrainConfig short_schedule(int epochs, int per_epoch) {
  TrainConfig c;
  c.epochs = epochs;
  c.iterations_per_epoch = per_epoch;
  c.lr_decay_epochs = {};
  return c;
}

}  // namespace

TEST(Tbptt, LongWindowEqualsFullBackprop) {
  const auto seq = scene(3, 25, 6);
  const auto params = ModelParams::initialize(small());
  ForwardOptions opts;
  auto g_window = params.zeros_like();
  const double loss = actual_episode_gradient(params, g_window, seq, 1000, opts);
  auto g_full = params.zeros_like();
  const double want = oracle::full_bptt(params, g_full, seq, opts.beta_pos, opts.beta_neg);
  EXPECT_NEAR(loss, want, 1e-12);
  EXPECT_GT(oracle::max_abs(g_full), 1e-6);
  EXPECT_LT(oracle::max_abs_diff(g_window, g_full), 1e-10);

  auto g_exact = params.zeros_like();
  actual_episode_gradient(params, g_exact, seq, 25, opts);
  EXPECT_LT(oracle::max_abs_diff(g_exact, g_full), 1e-10);
}

TEST(Tbptt, WindowsCarryStatesButCutGradients) {
  const auto seq = scene(3, 25, 6);
  const auto params = ModelParams::initialize(small());
  ForwardOptions opts;
  std::vector<SegmentTrace> trace;
  auto g = params.zeros_like();
  actual_episode_gradient(params, g, seq, 10, opts, &trace);
  ASSERT_EQ(trace.size(), 3u);
  EXPECT_EQ(trace[0].segment.last_frame, 10);
  EXPECT_EQ(trace[1].segment.first_frame, 11);
  EXPECT_EQ(trace[1].segment.last_frame, 20);
  EXPECT_EQ(trace[2].segment.first_frame, 21);
  EXPECT_TRUE(trace[0].state_in.empty());

  // States pass across the cut unchanged and equal the uncut forward pass.
  std::map<int, std::map<int, Eigen::VectorXd>> full_memory;
  auto g_full = params.zeros_like();
  oracle::full_bptt(params, g_full, seq, opts.beta_pos, opts.beta_neg, &full_memory);
  for (std::size_t k = 1; k < trace.size(); ++k) {
    ASSERT_EQ(trace[k].state_in.size(), trace[k - 1].state_out.size());
    for (const auto& [id, t] : trace[k - 1].state_out) {
      EXPECT_EQ(trace[k].state_in.at(id).memory.h, t.memory.h);
      EXPECT_EQ(trace[k].state_in.at(id).memory.c, t.memory.c);
      const Eigen::VectorXd& want = full_memory.at(trace[k - 1].segment.last_frame).at(id);
      EXPECT_LT((t.memory.h - want).cwiseAbs().maxCoeff(), 1e-12);
    }
  }

  // The first window's gradient is full backprop over frames 1-10 alone.
  TrainingSequence head = seq;
  head.frames.erase(head.frames.upper_bound(10), head.frames.end());
  auto g_head = params.zeros_like();
  oracle::full_bptt(params, g_head, head, opts.beta_pos, opts.beta_neg);
  auto g_first = params.zeros_like();
  run_segment(params, &g_first, seq, trace[0].segment, {}, opts);
  EXPECT_LT(oracle::max_abs_diff(g_first, g_head), 1e-10);

  // Gradients that would cross a cut are dropped, so the sum differs from full backprop.
  EXPECT_GT(oracle::max_abs_diff(g, g_full), 1e-8);
}

TEST(Tbptt, HardMiningChangesObjectiveNotLoggedLoss) {
  const auto seq = scene(4, 15, 6);
  const auto params = ModelParams::initialize(small());
  ForwardOptions all, mined;
  mined.k_hard = 2;
  const Segment s{1, 15};
  auto g1 = params.zeros_like(), g2 = params.zeros_like();
  const auto a = run_segment(params, &g1, seq, s, {}, all);
  const auto b = run_segment(params, &g2, seq, s, {}, mined);
  EXPECT_EQ(a.loss, b.loss);
  EXPECT_NEAR(a.objective, a.loss, 1e-15);
  EXPECT_GT(b.objective, a.objective);
  EXPECT_GT(oracle::max_abs_diff(g1, g2), 0.0);
}

TEST(Trainer, FirstLossNearUninformativeBaseline) {
  const auto seq = scene(4, 40, 6, 5, 0.5);
  auto cfg = short_schedule(1, 2);
  cfg.augment_missing = false;
  Trainer t(cfg, ModelParams::initialize(small()), {seq});
  const double first = t.step().loss;

  // Every proposal scored at p = 1/2: ln 2 times the focal weight.
  double want = 0.0;
  int batches = 0;
  for (const auto& b : build_actual_episodes(seq)) {
    if (b.frame > cfg.window) break;
    const double pos = b.positives(), n = static_cast<double>(b.labels.size());
    want += std::log(2.0) * (cfg.beta_pos * 0.25 * pos + cfg.beta_neg * 0.25 * (n - pos)) / n;
    ++batches;
  }
  want /= batches;
  EXPECT_NEAR(first, want, 0.3 * want);
}

TEST(Trainer, OverfitsTwoTracks) {
  sim::ScenarioSpec s;
  s.num_targets = 2;
  s.num_clusters = 2;
  s.frames = 50;
  s.miss_prob = 0.0;
  s.fp_rate = 0.0;
  s.seed = 11;
  const auto seq = app::scenario_sequence(sim::generate(s), "two");
  auto cfg = TrainConfig::desk();
  cfg.epochs = 1;
  cfg.iterations_per_epoch = 200;
  cfg.lr_decay_epochs = {};
  Trainer t(cfg, ModelParams::initialize(ModelConfig::desk()), {seq});
  t.run();
  double tail = 0.0;
  for (int k = 180; k < 200; ++k) tail += t.log()[k].loss;
  EXPECT_LT(tail / 20.0, 0.1);
}

TEST(Schedule, LearningRateDecays) {
  const TrainConfig c;  // 12 epochs x 100, decay at 4 and 8
  EXPECT_DOUBLE_EQ(learning_rate(c, 0), 0.005);
  EXPECT_DOUBLE_EQ(learning_rate(c, 399), 0.005);
  EXPECT_DOUBLE_EQ(learning_rate(c, 400), 0.0005);
  EXPECT_NEAR(learning_rate(c, 800), 0.00005, 1e-18);
  EXPECT_NEAR(learning_rate(c, 1199), 0.00005, 1e-18);
}

TEST(Schedule, DropoutPhasesAt19_29_38Of120) {
  auto c = short_schedule(12, 10);
  EXPECT_EQ(dropout_phase_starts(c), (std::vector<int>{0, 19, 29, 38}));
  EXPECT_EQ(dropout_rate(c, 18), 0.9);
  EXPECT_EQ(dropout_rate(c, 19), 0.6);
  EXPECT_EQ(dropout_rate(c, 28), 0.6);
  EXPECT_EQ(dropout_rate(c, 29), 0.3);
  EXPECT_EQ(dropout_rate(c, 37), 0.3);
  EXPECT_EQ(dropout_rate(c, 38), 0.0);
  EXPECT_EQ(dropout_rate(c, 119), 0.0);
}

TEST(Trainer, LogFollowsSchedule) {
  const auto seq = scene(4, 40, 6);
  TrainConfig cfg;
  cfg.epochs = 12;
  cfg.iterations_per_epoch = 10;
  Trainer t(cfg, ModelParams::initialize(small(HeadMode::kJoint)), {seq});
  t.run();
  ASSERT_EQ(t.log().size(), 120u);
  for (const auto& r : t.log()) {
    EXPECT_EQ(r.phase, r.iter % 2 == 0 ? "actual" : "random");
    EXPECT_EQ(r.dropout, dropout_rate(cfg, r.iter));
    EXPECT_EQ(r.lr, learning_rate(cfg, r.iter));
  }
  EXPECT_EQ(t.log()[18].dropout, 0.9);
  EXPECT_EQ(t.log()[19].dropout, 0.6);
  EXPECT_EQ(t.log()[38].dropout, 0.0);
  EXPECT_DOUBLE_EQ(t.log()[40].lr, 0.0005);
  EXPECT_THROW(t.step(), StateError);

  std::ostringstream csv;
  write_log_csv(csv, t.log());
  EXPECT_EQ(csv.str().substr(0, csv.str().find('\n')), kLogHeader);
}

TEST(Trainer, BitStableForASeed) {
  const auto seq = scene(4, 30, 6);
  auto cfg = short_schedule(2, 15);
  Trainer a(cfg, ModelParams::initialize(small(HeadMode::kJoint)), {seq});
  Trainer b(cfg, ModelParams::initialize(small(HeadMode::kJoint)), {seq});
  a.run();
  b.run();
  for (std::size_t k = 0; k < a.log().size(); ++k) EXPECT_EQ(a.log()[k].loss, b.log()[k].loss);
  auto pa = a.params(), pb = b.params();
  EXPECT_EQ(oracle::max_abs_diff(pa, pb), 0.0);
}

TEST(Trainer, NonFiniteInputIsReportedAsDivergence) {
  auto seq = scene(3, 20, 6);
  for (auto& [f, dets] : seq.frames) {
    for (auto& d : dets) d.embedding(0) = std::nan("");
  }
  Trainer t(short_schedule(1, 4), ModelParams::initialize(small()), {seq});
  EXPECT_THROW(t.step(), NumericError);
}

TEST(Trainer, RejectsEmptyDataAndBadConfig) {
  EXPECT_THROW(Trainer(short_schedule(1, 1), ModelParams::initialize(small()), {}), UsageError);
  auto bad = short_schedule(1, 1);
  bad.dropout_rates = {0.5};
  EXPECT_THROW(Trainer(bad, ModelParams::initialize(small()), {scene(2, 5, 6)}), ConfigError);
}

TEST(RandomEpisodeGradient, MatchesFiniteDifferences) {
  nn::GradCheckOptions opts;
  opts.max_coords_per_tensor = 6;
  for (auto head : {HeadMode::kAppearanceOnly, HeadMode::kJoint}) {
    for (std::uint64_t seed : {1u, 2u}) {
      opts.sample_seed = seed;
      const auto r = app::check_classifier_gradients(small(head), seed, opts);
      EXPECT_LT(r.max_rel_error, 1e-4) << "head " << model::to_string(head) << " seed " << seed;
    }
  }
}
