#include "mtp/train/trainer.hpp"

#include <cmath>
#include <ostream>

#include "mtp/error.hpp"
#include "mtp/io/mot.hpp"
#include "mtp/model/graph.hpp"
#include "mtp/train/loss.hpp"

namespace mtp::train {

using Eigen::VectorXd;
using model::GraphBuilder;
using model::HeadMode;
using Var = nn::GradTape::Var;
using State = GraphBuilder::State;

namespace {

struct FrameGraph {
  std::vector<Var> x;          // embedded detections
  std::vector<Var> motion_in;  // per detection, joint head only
  std::vector<Var> probs;      // row-major M x N
  std::vector<State> motion_next;
};

/// Embeds the frame's detections and, when `memories` is non-empty, scores
/// every track against every detection with pooling over the other tracks.
FrameGraph score_frame(GraphBuilder& g, std::span<const State> memories,
                       std::span<const State> motions, std::span<const Observation> dets,
                       double image_width, double image_height, const ForwardOptions& opts) {
  const auto& params = g.params();
  const bool joint = params.config.head == HeadMode::kJoint;
  FrameGraph fg;
  for (const auto& d : dets) {
    fg.x.push_back(g.embed(d.embedding));
    if (joint) fg.motion_in.push_back(g.motion_input(normalize(d.box, image_width, image_height)));
  }
  const std::size_t m = memories.size();
  const std::size_t n = dets.size();
  if (m == 0 || n == 0) return fg;

  std::vector<Var> match(m * n);
  for (std::size_t i = 0; i < m; ++i) {
    for (std::size_t j = 0; j < n; ++j) match[i * n + j] = g.match(memories[i], fg.x[j]);
  }
  const auto width = static_cast<Eigen::Index>(params.app_fc2.out());
  const bool drop = joint && opts.dropout > 0.0;
  if (drop && !opts.rng) throw UsageError("dropout requires a random generator");
  std::bernoulli_distribution keep(1.0 - opts.dropout);

  std::vector<Var> others;
  for (std::size_t i = 0; i < m; ++i) {
    for (std::size_t j = 0; j < n; ++j) {
      Var m_minus;
      if (params.config.pooling) {
        others.clear();
        for (std::size_t k = 0; k < m; ++k) {
          if (k != i) others.push_back(match[k * n + j]);
        }
        m_minus = g.pool(others);
      }
      Var feat;
      if (joint) {
        auto step = g.motion_step(fg.motion_in[j], motions[i]);
        feat = step.feature;
        fg.motion_next.push_back(step.next);
      }
      VectorXd mask;
      if (drop) {
        mask.resize(width);
        for (Eigen::Index k = 0; k < width; ++k) {
          mask(k) = keep(*opts.rng) ? 1.0 / (1.0 - opts.dropout) : 0.0;
        }
      }
      fg.probs.push_back(g.probability(match[i * n + j], m_minus, feat, drop ? &mask : nullptr));
    }
  }
  return fg;
}

struct FrameLoss {
  double loss = 0.0;
  double objective = 0.0;
};

/// Batch loss of one frame; appends unscaled output gradients to `seeds`.
FrameLoss frame_loss(const nn::GradTape& tape, const FrameGraph& fg, const Eigen::MatrixXi& labels,
                     const ForwardOptions& opts, std::vector<nn::GradTape::Seed>& seeds) {
  const auto n = labels.cols();
  std::vector<double> p;
  std::vector<int> y;
  for (Eigen::Index i = 0; i < labels.rows(); ++i) {
    for (Eigen::Index j = 0; j < n; ++j) {
      p.push_back(tape.value(fg.probs[i * n + j])(0));
      y.push_back(labels(i, j));
    }
  }
  const BatchLoss bl = batch_loss(p, y, opts.beta_pos, opts.beta_neg);
  FrameLoss out{bl.loss, bl.loss};
  if (opts.k_hard > 0 && p.size() > static_cast<std::size_t>(opts.k_hard)) {
    const auto picked = mine_hard(bl.per_example, opts.k_hard);
    const double scale = 1.0 / static_cast<double>(picked.size());
    out.objective = 0.0;
    for (std::size_t k : picked) {
      out.objective += bl.per_example[k] * scale;
      const double d = example_loss_grad(p[k], y[k], opts.beta_pos, opts.beta_neg) * scale;
      seeds.push_back({fg.probs[k], VectorXd::Constant(1, d)});
    }
  } else {
    for (std::size_t k = 0; k < p.size(); ++k) {
      seeds.push_back({fg.probs[k], VectorXd::Constant(1, bl.grad[k])});
    }
  }
  return out;
}

}  // namespace

SegmentResult run_segment(const model::ModelParams& params, model::ModelParams* grads,
                          const TrainingSequence& seq, Segment segment, const CarriedState& carried,
                          const ForwardOptions& opts) {
  const bool joint = params.config.head == HeadMode::kJoint;
  const auto spans = track_spans(seq);
  nn::GradTape tape;
  GraphBuilder g(tape, params, grads);

  std::map<int, State> mem, mot;
  for (const auto& [id, t] : carried) {
    mem[id] = g.constant_state(t.memory.h, t.memory.c);
    if (joint) mot[id] = g.constant_state(t.motion.h, t.motion.c);
  }

  SegmentResult res;
  std::vector<nn::GradTape::Seed> seeds;
  double objective = 0.0;
  for (auto it = seq.frames.lower_bound(segment.first_frame);
       it != seq.frames.end() && it->first <= segment.last_frame; ++it) {
    const int frame = it->first;
    const auto& dets = it->second;

    std::vector<int> ids;
    std::vector<State> memories, motions;
    for (const auto& [id, s] : mem) {
      ids.push_back(id);
      memories.push_back(s);
      if (joint) motions.push_back(mot.at(id));
    }
    const FrameGraph fg = score_frame(g, memories, motions, dets, seq.image_width, seq.image_height, opts);
    if (!ids.empty() && !dets.empty()) {
      const ProposalBatch batch = make_batch(frame, ids, dets);
      const FrameLoss fl = frame_loss(tape, fg, batch.labels, opts, seeds);
      res.loss += fl.loss;
      objective += fl.objective;
      ++res.batches;
      res.proposals += static_cast<int>(batch.labels.size());
    }

    // Teacher forcing: advance assigned tracks, start new ones.
    const std::size_t n = dets.size();
    for (std::size_t j = 0; j < n; ++j) {
      const int id = dets[j].track_id;
      if (id < 0) continue;
      const auto pos = std::find(ids.begin(), ids.end(), id);
      if (pos != ids.end()) {
        const auto i = static_cast<std::size_t>(pos - ids.begin());
        mem[id] = g.memory_step(fg.x[j], mem.at(id));
        if (joint) mot[id] = fg.motion_next[i * n + j];
      } else if (!mem.contains(id)) {
        mem[id] = g.memory_step(fg.x[j], g.zero_memory());
        if (joint) mot[id] = g.motion_step(fg.motion_in[j], g.zero_motion()).next;
      }
    }
    for (auto m = mem.begin(); m != mem.end();) {
      const auto s = spans.find(m->first);
      if (s == spans.end() || s->second.last < frame) {
        mot.erase(m->first);
        m = mem.erase(m);
      } else {
        ++m;
      }
    }
  }

  if (res.batches > 0) {
    const double scale = 1.0 / res.batches;
    res.loss *= scale;
    res.objective = objective * scale;
    if (grads) {
      for (auto& s : seeds) s.grad *= scale;
      tape.backward(seeds);
    }
  }
  for (const auto& [id, s] : mem) {
    CarriedTrack t{{tape.value(s.h), tape.value(s.c)}, {}};
    if (joint) t.motion = {tape.value(mot.at(id).h), tape.value(mot.at(id).c)};
    res.state.emplace(id, std::move(t));
  }
  return res;
}

EpisodeResult run_random_episode(const model::ModelParams& params, model::ModelParams* grads,
                                 const RandomEpisode& ep, double image_width, double image_height,
                                 const ForwardOptions& opts) {
  const bool joint = params.config.head == HeadMode::kJoint;
  nn::GradTape tape;
  GraphBuilder g(tape, params, grads);
  std::vector<State> memories, motions;
  for (const auto& hist : ep.histories) {
    State m = g.zero_memory();
    State q = joint ? g.zero_motion() : State{};
    for (const auto& o : hist) {
      m = g.memory_step(g.embed(o.embedding), m);
      if (joint) q = g.motion_step(g.motion_input(normalize(o.box, image_width, image_height)), q).next;
    }
    memories.push_back(m);
    if (joint) motions.push_back(q);
  }
  EpisodeResult res;
  if (ep.detections.empty() || memories.empty()) return res;
  const FrameGraph fg = score_frame(g, memories, motions, ep.detections, image_width, image_height, opts);
  std::vector<nn::GradTape::Seed> seeds;
  const FrameLoss fl = frame_loss(tape, fg, ep.batch.labels, opts, seeds);
  res.loss = fl.loss;
  res.objective = fl.objective;
  res.proposals = static_cast<int>(ep.batch.labels.size());
  res.signature = tape.kink_signature();
  if (grads) tape.backward(seeds);
  return res;
}

double actual_episode_gradient(const model::ModelParams& params, model::ModelParams& grads,
                               const TrainingSequence& seq, int window, const ForwardOptions& opts,
                               std::vector<SegmentTrace>* trace) {
  CarriedState carried;
  double total = 0.0;
  int count = 0;
  for (const Segment& s : segment_windows(seq, window)) {
    SegmentResult r = run_segment(params, &grads, seq, s, carried, opts);
    if (trace) trace->push_back({s, carried, r.state, r.loss});
    if (r.batches > 0) {
      total += r.loss;
      ++count;
    }
    carried = std::move(r.state);
  }
  return count > 0 ? total / count : 0.0;
}

double learning_rate(const TrainConfig& cfg, int iteration) {
  const int epoch = iteration / cfg.iterations_per_epoch;
  double lr = cfg.lr;
  for (int e : cfg.lr_decay_epochs) {
    if (epoch >= e) lr *= cfg.lr_decay;
  }
  return lr;
}

std::vector<int> dropout_phase_starts(const TrainConfig& cfg) {
  std::vector<int> starts = {0};
  const double total = cfg.total_iterations();
  for (double b : cfg.dropout_boundaries) starts.push_back(static_cast<int>(std::lround(b * total)));
  return starts;
}

double dropout_rate(const TrainConfig& cfg, int iteration) {
  const auto starts = dropout_phase_starts(cfg);
  std::size_t phase = 0;
  for (std::size_t k = 1; k < starts.size(); ++k) {
    if (iteration >= starts[k]) phase = k;
  }
  return cfg.dropout_rates[phase];
}

void write_log_row(std::ostream& out, const IterationLog& r) {
  out << r.iter << ',' << r.phase << ',' << io::format_double(r.loss) << ','
      << io::format_double(r.lr) << ',' << io::format_double(r.dropout) << '\n';
}

void write_log_csv(std::ostream& out, std::span<const IterationLog> log) {
  out << kLogHeader << '\n';
  for (const auto& r : log) write_log_row(out, r);
}

Trainer::Trainer(TrainConfig cfg, model::ModelParams params, std::vector<TrainingSequence> data)
    : cfg_(std::move(cfg)),
      params_(std::move(params)),
      grads_(params_.zeros_like()),
      data_(std::move(data)),
      rng_(cfg_.seed) {
  cfg_.validate();
  params_.config.validate();
  if (data_.empty()) throw UsageError("Trainer: no training sequences");
}

void Trainer::start_sequence() {
  std::uniform_int_distribution<std::size_t> pick(0, data_.size() - 1);
  const TrainingSequence& src = data_[pick(rng_)];
  current_ = cfg_.augment_missing ? augment_sequence(src, cfg_, rng_) : src;
  segments_ = segment_windows(current_, cfg_.window);
  next_segment_ = 0;
  carried_.clear();
}

ForwardOptions Trainer::options_for(int iteration) {
  ForwardOptions o;
  o.beta_pos = cfg_.beta_pos;
  o.beta_neg = cfg_.beta_neg;
  const int epoch = iteration / cfg_.iterations_per_epoch;
  o.k_hard = epoch >= cfg_.hard_mining_start_epoch ? cfg_.k_hard : 0;
  o.dropout = params_.config.head == HeadMode::kJoint ? dropout_rate(cfg_, iteration) : 0.0;
  o.rng = &rng_;
  return o;
}

double Trainer::actual_iteration(const ForwardOptions& opts) {
  // Skip windows without any proposal; give up after a full pass over the data.
  std::size_t budget = 0;
  for (const auto& s : data_) budget += s.frames.size() + 1;
  for (std::size_t attempt = 0; attempt <= budget; ++attempt) {
    if (next_segment_ >= segments_.size()) start_sequence();
    const Segment s = segments_[next_segment_++];
    SegmentResult r = run_segment(params_, &grads_, current_, s, carried_, opts);
    carried_ = std::move(r.state);
    if (r.batches > 0) return r.loss;
  }
  throw StateError("Trainer: training data has no frame with a live track");
}

double Trainer::random_iteration(const ForwardOptions& opts) {
  std::uniform_int_distribution<std::size_t> pick(0, data_.size() - 1);
  const TrainingSequence& src = data_[pick(rng_)];
  const TrainingSequence seq = cfg_.augment_missing ? augment_sequence(src, cfg_, rng_) : src;
  const RandomEpisode ep = build_random_episode(seq, cfg_, rng_);
  return run_random_episode(params_, &grads_, ep, seq.image_width, seq.image_height, opts).loss;
}

const IterationLog& Trainer::step() {
  if (finished()) throw StateError("Trainer: schedule already complete");
  const ForwardOptions opts = options_for(iter_);
  IterationLog row;
  row.iter = iter_;
  row.phase = iter_ % 2 == 0 ? "actual" : "random";
  row.lr = learning_rate(cfg_, iter_);
  row.dropout = opts.dropout;

  grads_.set_zero();
  row.loss = row.phase == "actual" ? actual_iteration(opts) : random_iteration(opts);
  if (!std::isfinite(row.loss)) {
    throw NumericError("training diverged at iteration " + std::to_string(iter_) + " (" +
                       row.phase + " episode, lr " + io::format_double(row.lr) + "): loss " +
                       io::format_double(row.loss));
  }
  try {
    if (cfg_.optimizer == OptimizerKind::kAdam) {
      adam_.step(params_, grads_, row.lr);
    } else {
      nn::sgd_step(params_, grads_, row.lr);
    }
  } catch (const NumericError& e) {
    throw NumericError("training diverged at iteration " + std::to_string(iter_) + ": " + e.what());
  }
  ++iter_;
  log_.push_back(std::move(row));
  return log_.back();
}

void Trainer::run(const std::function<void(const IterationLog&)>& on_iteration) {
  while (!finished()) {
    const IterationLog& r = step();
    if (on_iteration) on_iteration(r);
  }
}

}  // namespace mtp::train
