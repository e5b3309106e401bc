// mtp: command-line front end.
//
//   mtp simulate        --config C --out DIR
//   mtp train           --config C --out DIR [--data DIR]...
//   mtp track           --config C --model M --input DIR --out DIR
//   mtp eval            --gt FILE --pred FILE --out DIR
//   mtp gradcheck       --config C
//   mtp bench-ablation  --config C --out DIR
//
// Every command also takes --seed and --profile {desk,full}.

#include <CLI11.hpp>

#include <filesystem>
#include <fstream>
#include <iostream>
#include <optional>

#include "mtp/app/pipeline.hpp"
#include "mtp/error.hpp"
#include "mtp/io/embeddings.hpp"
#include "mtp/io/mot.hpp"
#include "mtp/io/run_config.hpp"
#include "mtp/metrics/report.hpp"
#include "mtp/nn/checkpoint.hpp"
#include "mtp/sim/scenario.hpp"

namespace fs = std::filesystem;
using namespace mtp;

namespace {

struct Common {
  std::string config;
  std::optional<std::uint64_t> seed;
  std::string profile = "desk";
  std::string out = ".";
};

void add_common(CLI::App* cmd, Common& c, bool needs_out) {
  cmd->add_option("--config", c.config, "JSON configuration file")->check(CLI::ExistingFile);
  cmd->add_option("--seed", c.seed, "Overrides every seed in the configuration");
  cmd->add_option("--profile", c.profile, "Model size profile")
      ->check(CLI::IsMember({"desk", "full"}));
  if (needs_out) cmd->add_option("--out", c.out, "Output directory");
}

io::RunConfig load(const Common& c) {
  const auto profile = io::profile_from_string(c.profile);
  io::RunConfig cfg = c.config.empty() ? io::parse_config("{}", profile) : io::load_config(c.config, profile);
  if (c.seed) {
    cfg.sim.seed = *c.seed;
    cfg.train.seed = *c.seed;
    cfg.model.init_seed = *c.seed;
  }
  return cfg;
}

fs::path out_dir(const Common& c) {
  fs::create_directories(c.out);
  return fs::path(c.out);
}

void write_text(const fs::path& path, const std::string& text) {
  std::ofstream out(path);
  if (!out) throw UsageError("cannot write '" + path.string() + "'");
  out << text;
}

int cmd_simulate(const Common& c) {
  const auto cfg = load(c);
  const auto sc = sim::generate(cfg.sim);
  const fs::path dir = out_dir(c);
  sim::write_scenario(sc, dir.string());
  std::cout << "wrote " << sc.gt.size() << " ground-truth rows, " << sc.detections.size()
            << " detections to " << dir.string() << "\n";
  return 0;
}

train::TrainingSequence load_sequence(const fs::path& dir, const io::RunConfig& cfg) {
  const auto gt = io::read_mot_file((dir / "gt.txt").string());
  const auto det = io::read_mot_file((dir / "det.txt").string());
  const auto emb = io::load_embeddings_file((dir / "emb.txt").string());
  return train::build_training_sequence(dir.filename().string(), gt, det, emb,
                                        cfg.tracker.image_width, cfg.tracker.image_height);
}

int cmd_train(const Common& c, const std::vector<std::string>& data_dirs, int scenes) {
  const auto cfg = load(c);
  std::vector<train::TrainingSequence> data;
  for (const auto& d : data_dirs) data.push_back(load_sequence(d, cfg));
  if (data.empty()) {
    for (int k = 0; k < scenes; ++k) {
      sim::ScenarioSpec spec = cfg.sim;
      spec.seed = cfg.sim.seed + static_cast<std::uint64_t>(k);
      data.push_back(app::scenario_sequence(sim::generate(spec), "sim-" + std::to_string(spec.seed)));
    }
  }
  const fs::path dir = out_dir(c);
  std::ofstream log(dir / "train_log.csv");
  log << train::kLogHeader << '\n';
  const int report_every = std::max(1, cfg.train.iterations_per_epoch);
  auto trainer = app::train_model(cfg.model, cfg.train, std::move(data), [&](const train::IterationLog& r) {
    train::write_log_row(log, r);
    if ((r.iter + 1) % report_every == 0) {
      std::cout << "iteration " << r.iter + 1 << "  loss " << r.loss << "  lr " << r.lr << "\n";
    }
  });
  auto params = trainer.params();
  nn::save_checkpoint((dir / "model.ckpt").string(), params.to_checkpoint());
  write_text(dir / "config.json", io::dump_config(cfg) + "\n");
  std::cout << "saved " << (dir / "model.ckpt").string() << "\n";
  return 0;
}

int cmd_track(const Common& c, const std::string& model_path, const std::string& input) {
  const auto cfg = load(c);
  const auto params = model::ModelParams::from_checkpoint(nn::load_checkpoint(model_path));
  const fs::path in(input);
  const auto det = io::read_mot_file((in / "det.txt").string());
  const auto emb = io::load_embeddings_file((in / "emb.txt").string());
  app::TrackStats stats;
  const auto rows = app::track_sequence(params, cfg.tracker, det, emb, nullptr, &stats);
  const fs::path dir = out_dir(c);
  io::write_mot_file((dir / "tracks.txt").string(), rows);
  std::ostringstream timing;
  timing << "frames," << stats.frames << "\nseconds," << stats.seconds << "\nframes_per_second,"
         << stats.frames_per_second() << "\nmean_association_ms," << stats.mean_association_ms << "\n";
  write_text(dir / "timing.csv", timing.str());
  std::cout << rows.size() << " rows over " << stats.frames << " frames, "
            << stats.frames_per_second() << " Hz, mean association " << stats.mean_association_ms
            << " ms\n";
  return 0;
}

int cmd_eval(const Common& c, const std::string& gt_path, const std::string& pred_path,
             const std::string& name) {
  const auto gt = io::read_mot_file(gt_path);
  const auto pred = io::read_mot_file(pred_path);
  const auto report = metrics::combine({metrics::evaluate_sequence(name, gt, pred)});
  const fs::path dir = out_dir(c);
  std::ofstream csv(dir / "report.csv");
  metrics::write_csv(csv, report);
  const std::string table = metrics::format_table(report);
  write_text(dir / "report.txt", table);
  std::cout << table;
  return 0;
}

int cmd_gradcheck(const Common& c, int seeds, std::size_t coords) {
  auto cfg = load(c);
  nn::GradCheckOptions opts;
  opts.max_coords_per_tensor = coords;
  std::map<std::string, double> worst;
  std::vector<std::string> order;
  // Both heads, so every layer is covered.
  for (auto head : {model::HeadMode::kAppearanceOnly, model::HeadMode::kJoint}) {
    cfg.model.head = head;
    for (int s = 0; s < seeds; ++s) {
      const std::uint64_t seed = cfg.model.init_seed + static_cast<std::uint64_t>(s);
      opts.sample_seed = seed;
      const auto r = app::check_classifier_gradients(cfg.model, seed, opts);
      for (const auto& t : r.tensors) {
        if (!worst.contains(t.name)) order.push_back(t.name);
        worst[t.name] = std::max(worst[t.name], t.max_rel_error);
      }
    }
  }
  double overall = 0.0;
  for (const auto& name : order) {
    std::printf("%-28s %.3e\n", name.c_str(), worst[name]);
    overall = std::max(overall, worst[name]);
  }
  std::printf("%-28s %.3e\n", "max", overall);
  return overall < 1e-4 ? 0 : 1;
}

int cmd_bench(const Common& c, int eval_seeds, int train_scenes, int train_frames, bool baseline) {
  const auto cfg = load(c);
  app::AblationOptions opts;
  opts.train_seeds.clear();
  opts.eval_seeds.clear();
  for (int k = 0; k < train_scenes; ++k) opts.train_seeds.push_back(cfg.sim.seed + 1000 + k);
  for (int k = 0; k < eval_seeds; ++k) opts.eval_seeds.push_back(cfg.sim.seed + k);
  opts.train_frames = train_frames;
  opts.retrain_baseline = baseline;
  const auto arms = app::bench_ablation(cfg, opts, [](const std::string& s) { std::cerr << s << "\n"; });
  const std::string table = app::format_ablation(arms);
  std::cout << table;
  const fs::path dir = out_dir(c);
  write_text(dir / "ablation.txt", table);
  std::ofstream csv(dir / "ablation.csv");
  csv << "arm,MOTA,IDF1,IDS,MT,ML,Frag,FP,FN\n";
  for (const auto& a : arms) {
    const auto& m = a.report.total;
    csv << '"' << a.name << "\"," << io::format_double(m.clear.mota) << ',' << io::format_double(m.identity.idf1)
        << ',' << m.clear.idsw << ',' << m.clear.mt << ',' << m.clear.ml << ',' << m.clear.frag << ','
        << m.clear.fp << ',' << m.clear.fn << '\n';
  }
  return 0;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Online multi-object tracker with a pooled bilinear LSTM appearance model"};
  app.require_subcommand(1);

  Common c;
  auto* simulate = app.add_subcommand("simulate", "Generate a synthetic scene");
  add_common(simulate, c, true);

  std::vector<std::string> data_dirs;
  int scenes = 4;
  auto* train = app.add_subcommand("train", "Train the track classifier");
  add_common(train, c, true);
  train->add_option("--data", data_dirs, "Scene directories with gt.txt, det.txt, emb.txt")
      ->check(CLI::ExistingDirectory);
  train->add_option("--scenes", scenes, "Synthetic scenes to train on when no --data is given");

  std::string model_path, input;
  auto* track = app.add_subcommand("track", "Track a detection file");
  add_common(track, c, true);
  track->add_option("--model", model_path, "Checkpoint")->required()->check(CLI::ExistingFile);
  track->add_option("--input", input, "Directory with det.txt and emb.txt")
      ->required()
      ->check(CLI::ExistingDirectory);

  std::string gt_path, pred_path, name = "sequence";
  auto* eval = app.add_subcommand("eval", "Score tracks against ground truth");
  add_common(eval, c, true);
  eval->add_option("--gt", gt_path, "Ground-truth MOT file")->required()->check(CLI::ExistingFile);
  eval->add_option("--pred", pred_path, "Tracker output MOT file")->required()->check(CLI::ExistingFile);
  eval->add_option("--name", name, "Sequence name in the report");

  int grad_seeds = 20;
  std::size_t coords = 24;
  auto* gradcheck = app.add_subcommand("gradcheck", "Finite-difference check of the classifier");
  add_common(gradcheck, c, false);
  gradcheck->add_option("--seeds", grad_seeds, "Random configurations");
  gradcheck->add_option("--coords", coords, "Sampled coordinates per tensor (0 = all)");

  int eval_seeds = 5, train_scenes = 100, train_frames = 100;
  bool no_baseline = false;
  auto* bench = app.add_subcommand("bench-ablation", "Pooling ablation on synthetic scenes");
  add_common(bench, c, true);
  bench->add_option("--eval-seeds", eval_seeds, "Held-out scenes");
  bench->add_option("--train-scenes", train_scenes, "Training scenes");
  bench->add_option("--train-frames", train_frames, "Frames per training scene (0: as configured)");
  bench->add_flag("--no-baseline", no_baseline, "Skip the retrained no-pooling model");

  CLI11_PARSE(app, argc, argv);
  try {
    if (*simulate) return cmd_simulate(c);
    if (*train) return cmd_train(c, data_dirs, scenes);
    if (*track) return cmd_track(c, model_path, input);
    if (*eval) return cmd_eval(c, gt_path, pred_path, name);
    if (*gradcheck) return cmd_gradcheck(c, grad_seeds, coords);
    if (*bench) return cmd_bench(c, eval_seeds, train_scenes, train_frames, !no_baseline);
  } catch (const ConfigError& e) {
    std::cerr << "config error (" << e.key() << "): " << e.what() << "\n";
    return 2;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 1;
  }
  return 0;
}
