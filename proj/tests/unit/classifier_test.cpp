#include <gtest/gtest.h>

#include <algorithm>
#include <cmath>

#include "mtp/error.hpp"
#include "mtp/log.hpp"
#include "mtp/model/classifier.hpp"
#include "mtp/model/graph.hpp"
#include "oracles.hpp"

using namespace mtp;
using namespace mtp::model;
using Eigen::VectorXd;

namespace {

ModelConfig small(HeadMode head = HeadMode::kAppearanceOnly, bool pooling = true, std::uint64_t seed = 3) {
  ModelConfig c;
  c.embed_dim = 6;
  c.key_dim = 4;
  c.rows = 3;
  c.hidden = 12;
  c.motion_hidden = 5;
  c.motion_feat = 3;
  c.joint_hidden = 6;
  c.head = head;
  c.pooling = pooling;
  c.init_seed = seed;
  return c;
}

AppearanceMemory random_memory(oracle::Rng& rng, const ModelConfig& c) {
  return {oracle::random_vector(rng, c.hidden), oracle::random_vector(rng, c.hidden)};
}

double softmax1(const VectorXd& logits) {
  const double a = std::exp(logits(0)), b = std::exp(logits(1));
  return b / (a + b);
}

}  // namespace

TEST(ModelConfig, FullDimensions) {
  const auto c = ModelConfig::full();
  EXPECT_EQ(c.embed_dim, 2048);
  EXPECT_EQ(c.key_dim, 256);
  EXPECT_EQ(c.rows, 8);
  EXPECT_EQ(c.hidden, 2048);
  EXPECT_EQ(c.motion_hidden, 64);
  EXPECT_EQ(c.motion_feat, 8);
  EXPECT_EQ(c.joint_hidden, 24);
  EXPECT_EQ(c.memory_width(), 16);
  EXPECT_NO_THROW(c.validate());
}

TEST(ModelConfig, HiddenMustEqualRowsTimesKey) {
  ModelConfig c;
  c.rows = 8;
  c.key_dim = 16;
  c.hidden = 100;
  try {
    c.validate();
    FAIL() << "expected ConfigError";
  } catch (const ConfigError& e) {
    EXPECT_EQ(e.key(), "model.hidden");
  }
}

TEST(ModelConfig, JsonRoundTrip) {
  auto c = small(HeadMode::kJoint, false);
  c.gate_variant = nn::GateVariant::kSwapped;
  c.forget_bias = 0.25;
  EXPECT_EQ(model_config_from_json(to_json(c)), c);
}

TEST(Embed, ZeroInputGivesReluOfBias) {
  auto p = ModelParams::initialize(small());
  const VectorXd x = embed_detection(p, VectorXd::Zero(6));
  EXPECT_EQ(x, p.embed.b.cwiseMax(0.0));
  EXPECT_THROW(embed_detection(p, VectorXd::Zero(5)), DimensionError);
}

TEST(Embed, MatchesTripleLoop) {
  oracle::Rng rng(1);
  auto p = ModelParams::initialize(small());
  for (int k = 0; k < 20; ++k) {
    const VectorXd e = oracle::random_vector(rng, 6, 4.0);
    EXPECT_LT((embed_detection(p, e) - oracle::dense(p.embed.W, p.embed.b, e, true)).cwiseAbs().maxCoeff(),
              1e-12);
  }
}

TEST(Pool, Examples) {
  const std::vector<VectorXd> two = {(VectorXd(3) << 1, 0, 2).finished(), (VectorXd(3) << 0, 3, 1).finished()};
  EXPECT_EQ(pool_other_tracks(two, 3), (VectorXd(3) << 1, 3, 2).finished());
  EXPECT_EQ(pool_other_tracks({}, 3), VectorXd::Zero(3));
}

TEST(Pool, PermutationInvariantAndMonotone) {
  oracle::Rng rng(2);
  for (int trial = 0; trial < 1000; ++trial) {
    const int k = 1 + static_cast<int>(rng() % 6);
    std::vector<VectorXd> v;
    for (int i = 0; i < k; ++i) v.push_back(oracle::random_vector(rng, 4).cwiseMax(0.0));
    const VectorXd base = pool_other_tracks(v, 4);
    auto perm = v;
    std::shuffle(perm.begin(), perm.end(), rng);
    ASSERT_EQ(pool_other_tracks(perm, 4), base);
    perm.push_back(oracle::random_vector(rng, 4).cwiseMax(0.0));
    ASSERT_TRUE((pool_other_tracks(perm, 4).array() >= base.array()).all());
    for (const auto& x : v) ASSERT_TRUE((base.array() >= x.array()).all());
  }
}

TEST(Motion, ZeroWeightsGiveZeroFeature) {
  auto p = ModelParams::zeros(small(HeadMode::kJoint));
  const auto f = motion_feature(p, zero_motion(p.config), {0.1, 0.2, 0.05, 0.1});
  EXPECT_EQ(f.feature, VectorXd::Zero(3));
  EXPECT_EQ(f.next.h, VectorXd::Zero(5));
  EXPECT_EQ(f.next.c, VectorXd::Zero(5));
}

TEST(Motion, MatchesComposedOracle) {
  oracle::Rng rng(3);
  auto p = ModelParams::initialize(small(HeadMode::kJoint));
  MotionState s{oracle::random_vector(rng, 5), oracle::random_vector(rng, 5)};
  const NormalizedBox b{0.3, 0.4, 0.1, 0.2};
  const auto got = motion_feature(p, s, b);
  const VectorXd in = (VectorXd(4) << b.x, b.y, b.w, b.h).finished();
  const VectorXd a = oracle::dense(p.motion_in.W, p.motion_in.b, in, true);
  const auto l = oracle::lstm(p.motion_lstm, a, s.h, s.c, false);
  const VectorXd feat = oracle::dense(p.motion_out.W, p.motion_out.b, l.h, true);
  EXPECT_LT((got.feature - feat).cwiseAbs().maxCoeff(), 1e-12);
  EXPECT_LT((got.next.h - l.h).cwiseAbs().maxCoeff(), 1e-12);
}

TEST(Motion, OutOfRangeCoordinateWarns) {
  auto p = ModelParams::initialize(small(HeadMode::kJoint));
  std::vector<std::string> seen;
  auto previous = set_warning_sink([&](const std::string& m) { seen.push_back(m); });
  const auto f = motion_feature(p, zero_motion(p.config), {2.5, 0.1, 0.1, 0.1});
  set_warning_sink(previous);
  EXPECT_EQ(seen.size(), 1u);
  EXPECT_TRUE(f.feature.allFinite());
  EXPECT_THROW(motion_feature(p, zero_motion(p.config), {std::nan(""), 0, 0, 0}), NumericError);
}

TEST(ScorePair, AppearanceHeadMatchesSoftmaxOracle) {
  oracle::Rng rng(4);
  auto p = ModelParams::initialize(small());
  for (int trial = 0; trial < 50; ++trial) {
    const auto target = random_memory(rng, p.config);
    std::vector<AppearanceMemory> others;
    for (int k = 0; k < trial % 4; ++k) others.push_back(random_memory(rng, p.config));
    const VectorXd x = oracle::random_vector(rng, 4);
    const double got = score_pair(p, target, others, x);
    VectorXd m_minus = VectorXd::Zero(3);
    for (const auto& o : others) m_minus = m_minus.cwiseMax(oracle::bilinear(o.h, x, 3));
    VectorXd cat(6);
    cat << oracle::bilinear(target.h, x, 3), m_minus;
    const double want = softmax1(oracle::dense(p.app_out.W, p.app_out.b, cat, false));
    EXPECT_NEAR(got, want, 1e-12);
    EXPECT_GE(got, 0.0);
    EXPECT_LE(got, 1.0);
  }
}

TEST(ScorePair, OthersAreAMultiset) {
  oracle::Rng rng(5);
  auto p = ModelParams::initialize(small());
  const auto target = random_memory(rng, p.config);
  std::vector<AppearanceMemory> others;
  for (int k = 0; k < 4; ++k) others.push_back(random_memory(rng, p.config));
  const VectorXd x = oracle::random_vector(rng, 4);
  const double base = score_pair(p, target, others, x);
  std::reverse(others.begin(), others.end());
  EXPECT_EQ(score_pair(p, target, others, x), base);
}

TEST(ScorePair, DuplicateOfTargetRaisesPooledVector) {
  oracle::Rng rng(6);
  auto p = ModelParams::initialize(small());
  for (int trial = 0; trial < 50; ++trial) {
    const auto target = random_memory(rng, p.config);
    const auto other = random_memory(rng, p.config);
    const VectorXd x = oracle::random_vector(rng, 4);
    const std::vector<VectorXd> without = {bilinear_match(p, other, x)};
    const std::vector<VectorXd> with = {bilinear_match(p, other, x), bilinear_match(p, target, x)};
    const VectorXd a = pool_other_tracks(without, 3), b = pool_other_tracks(with, 3);
    EXPECT_TRUE((b.array() >= a.array()).all());
    EXPECT_TRUE((b.array() >= bilinear_match(p, target, x).array()).all());
  }
}

TEST(ScorePair, NoPoolingIgnoresOthers) {
  oracle::Rng rng(7);
  auto p = ModelParams::initialize(small(HeadMode::kAppearanceOnly, false));
  EXPECT_EQ(p.config.memory_width(), 3);
  const auto target = random_memory(rng, p.config);
  const std::vector<AppearanceMemory> others = {random_memory(rng, p.config)};
  const VectorXd x = oracle::random_vector(rng, 4);
  EXPECT_EQ(score_pair(p, target, others, x), score_pair(p, target, {}, x));
}

TEST(ScorePair, ZeroedPoolingEqualsNoOthers) {
  oracle::Rng rng(8);
  auto p = ModelParams::initialize(small());
  const auto target = random_memory(rng, p.config);
  const std::vector<AppearanceMemory> others = {random_memory(rng, p.config), random_memory(rng, p.config)};
  const VectorXd x = oracle::random_vector(rng, 4);
  EXPECT_EQ(score_pair(p, target, others, x, std::nullopt, PoolingSwitch::kZeroed),
            score_pair(p, target, {}, x));
}

TEST(ScorePair, ModeMismatchIsAUsageError) {
  oracle::Rng rng(9);
  auto app = ModelParams::initialize(small());
  auto joint = ModelParams::initialize(small(HeadMode::kJoint));
  const auto mem = random_memory(rng, app.config);
  const VectorXd x = oracle::random_vector(rng, 4);
  const MotionState ms = zero_motion(joint.config);
  EXPECT_THROW(score_pair(joint, mem, {}, x), UsageError);
  EXPECT_THROW(score_pair(app, mem, {}, x, MotionInput{&ms, {0.1, 0.1, 0.1, 0.1}}), UsageError);
  const double pj = score_pair(joint, mem, {}, x, MotionInput{&ms, {0.1, 0.1, 0.1, 0.1}});
  EXPECT_GE(pj, 0.0);
  EXPECT_LE(pj, 1.0);
}

TEST(ScorePair, TapeForwardEqualsInference) {
  oracle::Rng rng(10);
  for (auto head : {HeadMode::kAppearanceOnly, HeadMode::kJoint}) {
    auto p = ModelParams::initialize(small(head));
    const bool joint = head == HeadMode::kJoint;
    for (int trial = 0; trial < 20; ++trial) {
      const auto target = random_memory(rng, p.config);
      std::vector<AppearanceMemory> others = {random_memory(rng, p.config), random_memory(rng, p.config)};
      const VectorXd raw = oracle::random_vector(rng, 6, 3.0);
      const MotionState ms{oracle::random_vector(rng, 5), oracle::random_vector(rng, 5)};
      const NormalizedBox box{0.2, 0.3, 0.05, 0.2};
      const VectorXd x = embed_detection(p, raw);
      const double want = joint ? score_pair(p, target, others, x, MotionInput{&ms, box})
                                : score_pair(p, target, others, x);

      nn::GradTape tape;
      GraphBuilder g(tape, p, nullptr);
      const auto xv = g.embed(raw);
      const auto mp = g.match(g.constant_state(target.h, target.c), xv);
      std::vector<GraphBuilder::Var> mo;
      for (const auto& o : others) mo.push_back(g.match(g.constant_state(o.h, o.c), xv));
      GraphBuilder::Var feat;
      if (joint) feat = g.motion_step(g.motion_input(box), g.constant_state(ms.h, ms.c)).feature;
      const auto prob = g.probability(mp, g.pool(mo), feat);
      EXPECT_NEAR(tape.value(prob)(0), want, 1e-12);
    }
  }
}

TEST(Memory, UpdateMatchesLstmAndIsOrderSensitive) {
  oracle::Rng rng(11);
  auto p = ModelParams::initialize(small());
  const VectorXd a = oracle::random_vector(rng, 4), b = oracle::random_vector(rng, 4);
  const auto m0 = zero_memory(p.config);
  const auto m1 = update_memory(p, m0, a);
  const auto want = oracle::lstm(p.appearance_lstm, a, m0.h, m0.c, false);
  EXPECT_LT((m1.h - want.h).cwiseAbs().maxCoeff(), 1e-12);
  const auto ab = update_memory(p, update_memory(p, m0, a), b);
  const auto ba = update_memory(p, update_memory(p, m0, b), a);
  EXPECT_GT((ab.h - ba.h).cwiseAbs().maxCoeff(), 1e-9);
}

TEST(Memory, ZeroWeightsStayZero) {
  auto p = ModelParams::zeros(small());
  auto m = zero_memory(p.config);
  oracle::Rng rng(12);
  for (int k = 0; k < 5; ++k) m = update_memory(p, m, oracle::random_vector(rng, 4));
  EXPECT_EQ(m.h, VectorXd::Zero(12));
  EXPECT_EQ(m.c, VectorXd::Zero(12));
}

TEST(InitTrack, DeterministicAndZeroForZeroParams) {
  auto p = ModelParams::initialize(small(HeadMode::kJoint));
  oracle::Rng rng(13);
  const VectorXd x = oracle::random_vector(rng, 4);
  const NormalizedBox box{0.1, 0.2, 0.05, 0.1};
  const auto a = init_track_state(p, x, box), b = init_track_state(p, x, box);
  EXPECT_EQ(a.memory.h, b.memory.h);
  EXPECT_EQ(a.motion.h, b.motion.h);
  EXPECT_GT(a.motion.h.norm(), 0.0);

  auto z = ModelParams::zeros(small(HeadMode::kJoint));
  const auto s = init_track_state(z, x, box);
  EXPECT_EQ(s.memory.h, VectorXd::Zero(12));
  EXPECT_EQ(s.motion.h, VectorXd::Zero(5));
}

TEST(Params, InitializationIsSeededAndForgetBiasSet) {
  auto a = ModelParams::initialize(small());
  auto b = ModelParams::initialize(small());
  auto c = ModelParams::initialize(small(HeadMode::kAppearanceOnly, true, 4));
  EXPECT_EQ(oracle::max_abs_diff(a, b), 0.0);
  EXPECT_GT(oracle::max_abs_diff(a, c), 0.0);
  EXPECT_EQ(a.appearance_lstm.b_f, VectorXd::Constant(12, 1.0));
  const double bound = 1.0 / std::sqrt(16.0);  // fan-in of the memory LSTM: hidden + key
  EXPECT_LE(a.appearance_lstm.W_f.cwiseAbs().maxCoeff(), bound);
}

TEST(Params, CheckpointRoundTrip) {
  auto a = ModelParams::initialize(small(HeadMode::kJoint));
  auto b = ModelParams::from_checkpoint(a.to_checkpoint());
  EXPECT_EQ(b.config, a.config);
  EXPECT_EQ(oracle::max_abs_diff(a, b), 0.0);
}
