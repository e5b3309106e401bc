#include "mtp/app/pipeline.hpp"

#include <algorithm>
#include <chrono>
#include <numeric>
#include <random>
#include <sstream>

#include "mtp/app/reference.hpp"
#include "mtp/tracker/tracker.hpp"

namespace mtp::app {

std::vector<io::MotRecord> track_sequence(const model::ModelParams& params,
                                          const tracker::TrackerConfig& cfg,
                                          std::span<const io::MotRecord> detections,
                                          const io::EmbeddingStore& embeddings,
                                          const tracker::EmbeddingSource* source, TrackStats* stats,
                                          int last_frame) {
  io::validate_coverage(embeddings, detections);
  const auto frames = io::group_by_frame(detections);
  if (last_frame <= 0 && !frames.empty()) last_frame = frames.rbegin()->first;

  tracker::Tracker trk(params, cfg, source);
  std::vector<io::MotRecord> out;
  double assoc_ms = 0.0;
  const auto t0 = std::chrono::steady_clock::now();
  std::vector<tracker::Detection> dets;
  for (int f = 1; f <= last_frame; ++f) {
    dets.clear();
    const auto it = frames.find(f);
    if (it != frames.end()) {
      for (std::size_t k = 0; k < it->second.size(); ++k) {
        const auto& r = it->second[k];
        dets.push_back({r.box(), r.conf, embeddings.at(f, static_cast<int>(k))});
      }
    }
    auto rows = trk.step_frame(f, dets);
    assoc_ms += trk.last_timing().association_ms;
    out.insert(out.end(), rows.begin(), rows.end());
  }
  auto tail = trk.finish();
  out.insert(out.end(), tail.begin(), tail.end());
  const auto t1 = std::chrono::steady_clock::now();
  if (stats) {
    stats->frames = last_frame;
    stats->seconds = std::chrono::duration<double>(t1 - t0).count();
    stats->mean_association_ms = last_frame > 0 ? assoc_ms / last_frame : 0.0;
  }
  return out;
}

train::TrainingSequence scenario_sequence(const sim::Scenario& sc, std::string name) {
  return train::build_training_sequence(std::move(name), sc.gt, sc.detections, sc.embeddings,
                                        sc.spec.image_width, sc.spec.image_height);
}

train::Trainer train_model(const model::ModelConfig& model, const train::TrainConfig& cfg,
                           std::vector<train::TrainingSequence> data,
                           const IterationCallback& on_iteration) {
  train::Trainer trainer(cfg, model::ModelParams::initialize(model), std::move(data));
  trainer.run(on_iteration);
  return trainer;
}

std::vector<std::uint64_t> AblationOptions::default_train_seeds(int count) {
  std::vector<std::uint64_t> seeds(static_cast<std::size_t>(count));
  std::iota(seeds.begin(), seeds.end(), std::uint64_t{1001});
  return seeds;
}

namespace {

metrics::SequenceMetrics run_arm(const model::ModelParams& params, tracker::TrackerConfig cfg,
                                 const sim::Scenario& sc, const std::string& name) {
  cfg.image_width = sc.spec.image_width;
  cfg.image_height = sc.spec.image_height;
  const sim::ScenarioEmbedder embedder(sc);
  const auto pred = track_sequence(params, cfg, sc.detections, sc.embeddings, &embedder, nullptr,
                                   sc.spec.frames);
  return metrics::evaluate_sequence(name, sc.gt, pred);
}

}  // namespace

std::vector<AblationArm> bench_ablation(const io::RunConfig& config, const AblationOptions& options,
                                        const std::function<void(const std::string&)>& progress) {
  const auto say = [&](const std::string& s) {
    if (progress) progress(s);
  };
  std::vector<train::TrainingSequence> data;
  for (auto seed : options.train_seeds) {
    sim::ScenarioSpec spec = config.sim;
    spec.seed = seed;
    if (options.train_frames > 0) spec.frames = options.train_frames;
    data.push_back(scenario_sequence(sim::generate(spec), "train-" + std::to_string(seed)));
  }

  model::ModelConfig pooled_cfg = config.model;
  pooled_cfg.pooling = true;
  say("training pooled model");
  const model::ModelParams pooled = train_model(pooled_cfg, config.train, data).params();

  model::ModelParams baseline;
  if (options.retrain_baseline) {
    model::ModelConfig base_cfg = config.model;
    base_cfg.pooling = false;
    say("training no-pooling baseline");
    baseline = train_model(base_cfg, config.train, data).params();
  }

  std::vector<metrics::SequenceMetrics> on, zeroed, base;
  for (auto seed : options.eval_seeds) {
    sim::ScenarioSpec spec = config.sim;
    spec.seed = seed;
    const sim::Scenario sc = sim::generate(spec);
    const std::string name = "seed-" + std::to_string(seed);
    say("evaluating " + name);
    tracker::TrackerConfig tc = config.tracker;
    tc.ablate_pooling = false;
    on.push_back(run_arm(pooled, tc, sc, name));
    tc.ablate_pooling = true;
    zeroed.push_back(run_arm(pooled, tc, sc, name));
    if (options.retrain_baseline) {
      tc.ablate_pooling = false;
      base.push_back(run_arm(baseline, tc, sc, name));
    }
  }

  std::vector<AblationArm> arms;
  if (options.retrain_baseline) arms.push_back({"baseline (no pooling, retrained)", metrics::combine(std::move(base))});
  arms.push_back({"pooled, m- zeroed", metrics::combine(std::move(zeroed))});
  arms.push_back({"pooled", metrics::combine(std::move(on))});
  return arms;
}

nn::GradCheckReport check_classifier_gradients(const model::ModelConfig& config, std::uint64_t seed,
                                               const nn::GradCheckOptions& options, int tracks,
                                               int detections, int history) {
  model::ModelConfig c = config;
  c.init_seed = seed;
  model::ModelParams params = model::ModelParams::initialize(c);
  model::ModelParams grads = params.zeros_like();

  train::Rng rng(seed ^ 0x9e3779b97f4a7c15ULL);
  std::normal_distribution<double> noise(0.0, 1.0);
  std::uniform_real_distribution<double> pos(0.1, 0.8), size(0.05, 0.2);
  const auto random_obs = [&](int frame, int id) {
    train::Observation o;
    o.frame = frame;
    o.box = {pos(rng) * 1000.0, pos(rng) * 600.0, size(rng) * 1000.0, size(rng) * 600.0};
    o.embedding = Eigen::VectorXd::NullaryExpr(c.embed_dim, [&] { return noise(rng); });
    o.track_id = id;
    return o;
  };

  train::RandomEpisode ep;
  ep.end_frame = history + 1;
  for (int t = 0; t < tracks; ++t) {
    ep.track_ids.push_back(t + 1);
    std::vector<train::Observation> hist;
    for (int f = 1; f <= history; ++f) hist.push_back(random_obs(f, t + 1));
    ep.histories.push_back(std::move(hist));
  }
  for (int d = 0; d < detections; ++d) ep.detections.push_back(random_obs(ep.end_frame, d < tracks ? d + 1 : -1));
  std::shuffle(ep.detections.begin(), ep.detections.end(), rng);
  ep.batch = train::make_batch(ep.end_frame, ep.track_ids, ep.detections);

  const train::ForwardOptions fo;
  const double w = 1000.0, h = 600.0;
  train::run_random_episode(params, &grads, ep, w, h, fo);
  const auto f = [&] {
    return reference_episode_loss<long double>(params, ep, w, h, fo.beta_pos, fo.beta_neg);
  };
  return nn::finite_diff_check(f, params, grads, options);
}

std::string format_ablation(std::span<const AblationArm> arms) {
  std::vector<metrics::SequenceMetrics> rows;
  for (const auto& a : arms) {
    rows.push_back(a.report.total);
    rows.back().name = a.name;
  }
  return metrics::format_rows(rows);
}

}  // namespace mtp::app
