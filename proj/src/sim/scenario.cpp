#include "mtp/sim/scenario.hpp"

#include <algorithm>
#include <bit>
#include <cmath>
#include <filesystem>
#include <numbers>
#include <random>

#include "mtp/error.hpp"
#include "mtp/nn/checkpoint.hpp"

namespace mtp::sim {

using Eigen::VectorXd;

void ScenarioSpec::validate() const {
  const auto fail = [](const char* key, const std::string& msg) {
    throw ConfigError(std::string("sim.") + key, msg);
  };
  if (!(image_width > 0.0)) fail("image_width", "must be positive");
  if (!(image_height > 0.0)) fail("image_height", "must be positive");
  if (num_targets < 1) fail("num_targets", "must be >= 1");
  if (num_clusters < 1 || num_clusters > num_targets) {
    fail("num_clusters", "must lie in [1, num_targets]");
  }
  if (!(cluster_offset >= 0.0)) fail("cluster_offset", "must be >= 0");
  if (!(embedding_noise >= 0.0)) fail("embedding_noise", "must be >= 0");
  if (!(miss_prob >= 0.0 && miss_prob <= 1.0)) fail("miss_prob", "must lie in [0, 1]");
  if (!(fp_rate >= 0.0)) fail("fp_rate", "must be >= 0");
  if (!(box_jitter >= 0.0)) fail("box_jitter", "must be >= 0");
  if (frames < 1) fail("frames", "must be >= 1");
  if (!(speed_min >= 0.0 && speed_min <= speed_max)) fail("speed_min", "need 0 <= speed_min <= speed_max");
  if (!(accel_sigma >= 0.0)) fail("accel_sigma", "must be >= 0");
  if (!(box_height_min > 0.0 && box_height_min <= box_height_max)) {
    fail("box_height_min", "need 0 < box_height_min <= box_height_max");
  }
  if (!(aspect > 0.0)) fail("aspect", "must be positive");
  if (box_height_max >= image_height || aspect * box_height_max >= image_width) {
    fail("box_height_max", "boxes must fit inside the image");
  }
  if (!(max_gt_iou >= 0.0 && max_gt_iou <= 1.0)) fail("max_gt_iou", "must lie in [0, 1]");
  if (embed_dim < 1) fail("embed_dim", "must be >= 1");
  if (!(embedding_scale > 0.0)) fail("embedding_scale", "must be positive");
}

namespace {

using Rng = std::mt19937_64;

VectorXd random_unit(Rng& rng, int dim) {
  std::normal_distribution<double> n(0.0, 1.0);
  VectorXd v(dim);
  do {
    for (int k = 0; k < dim; ++k) v(k) = n(rng);
  } while (v.norm() < 1e-9);
  return v.normalized();
}

VectorXd noisy(const VectorXd& base, double sigma, Rng& rng) {
  VectorXd v = base;
  if (sigma > 0.0) {
    std::normal_distribution<double> n(0.0, sigma);
    for (Eigen::Index k = 0; k < v.size(); ++k) v(k) += n(rng);
  }
  return v;
}

struct Target {
  double cx, cy, w, h, vx, vy;
  Box box() const { return Box::from_center(cx, cy, w, h); }
};

bool clear_of_others(const std::vector<Target>& targets, std::size_t self, const Box& b,
                     double max_iou) {
  for (std::size_t j = 0; j < targets.size(); ++j) {
    if (j != self && iou(b, targets[j].box()) > max_iou) return false;
  }
  return true;
}

void clamp_speed(Target& t, double lo, double hi) {
  const double s = std::hypot(t.vx, t.vy);
  if (s < 1e-12) {
    t.vx = lo;
    return;
  }
  const double target = std::clamp(s, lo, hi);
  t.vx *= target / s;
  t.vy *= target / s;
}

// Reflects a centre coordinate so the box of half-size `half` stays in [0, limit].
void reflect(double& c, double& v, double half, double limit) {
  if (c - half < 0.0) {
    c = 2.0 * half - c;
    v = std::abs(v);
  } else if (c + half > limit) {
    c = 2.0 * (limit - half) - c;
    v = -std::abs(v);
  }
  c = std::clamp(c, half, limit - half);
}

Box random_box(const ScenarioSpec& s, Rng& rng) {
  std::uniform_real_distribution<double> uh(s.box_height_min, s.box_height_max);
  const double h = uh(rng);
  const double w = s.aspect * h;
  std::uniform_real_distribution<double> ux(0.0, s.image_width - w);
  std::uniform_real_distribution<double> uy(0.0, s.image_height - h);
  return {ux(rng), uy(rng), w, h};
}

}  // namespace

Scenario generate(const ScenarioSpec& spec) {
  spec.validate();
  Rng rng(spec.seed);
  Scenario sc{spec, {}, {}, io::EmbeddingStore(spec.embed_dim), {}, {}};

  std::vector<VectorXd> centroids;
  for (int k = 0; k < spec.num_clusters; ++k) centroids.push_back(random_unit(rng, spec.embed_dim));
  for (int i = 0; i < spec.num_targets; ++i) {
    const int cluster = i % spec.num_clusters;
    sc.cluster_of.push_back(cluster);
    sc.identities.push_back(spec.embedding_scale *
                            (centroids[cluster] + spec.cluster_offset * random_unit(rng, spec.embed_dim)));
  }

  std::vector<Target> targets;
  std::uniform_real_distribution<double> uspeed(spec.speed_min, spec.speed_max);
  std::uniform_real_distribution<double> uangle(0.0, 2.0 * std::numbers::pi);
  constexpr int kPlacementTries = 10000;
  for (int i = 0; i < spec.num_targets; ++i) {
    bool placed = false;
    for (int attempt = 0; attempt < kPlacementTries && !placed; ++attempt) {
      const Box b = random_box(spec, rng);
      if (!clear_of_others(targets, targets.size(), b, spec.max_gt_iou)) continue;
      const double speed = uspeed(rng);
      const double angle = uangle(rng);
      targets.push_back({b.center_x(), b.center_y(), b.width, b.height, speed * std::cos(angle),
                         speed * std::sin(angle)});
      placed = true;
    }
    if (!placed) {
      throw ConfigError("sim.num_targets", "cannot place " + std::to_string(spec.num_targets) +
                                               " targets with pairwise IoU <= max_gt_iou");
    }
  }

  std::normal_distribution<double> accel(0.0, spec.accel_sigma);
  std::bernoulli_distribution miss(spec.miss_prob);
  std::poisson_distribution<int> fp_count(spec.fp_rate);
  for (int frame = 1; frame <= spec.frames; ++frame) {
    if (frame > 1) {
      for (std::size_t i = 0; i < targets.size(); ++i) {
        Target next = targets[i];
        if (spec.accel_sigma > 0.0) {
          next.vx += accel(rng);
          next.vy += accel(rng);
        }
        clamp_speed(next, spec.speed_min, spec.speed_max);
        next.cx += next.vx;
        next.cy += next.vy;
        reflect(next.cx, next.vx, 0.5 * next.w, spec.image_width);
        reflect(next.cy, next.vy, 0.5 * next.h, spec.image_height);
        if (clear_of_others(targets, i, next.box(), spec.max_gt_iou)) {
          targets[i] = next;
        } else {
          // Collision: stay put and turn around.
          targets[i].vx = -next.vx;
          targets[i].vy = -next.vy;
        }
      }
    }

    struct Pending {
      io::MotRecord rec;
      VectorXd emb;
    };
    std::vector<Pending> dets;
    for (std::size_t i = 0; i < targets.size(); ++i) {
      const Box b = targets[i].box();
      sc.gt.push_back({frame, static_cast<int>(i) + 1, b.left, b.top, b.width, b.height, 1.0});
      if (miss(rng)) continue;
      Box d = b;
      if (spec.box_jitter > 0.0) {
        std::normal_distribution<double> j(0.0, spec.box_jitter * b.height);
        const double cx = b.center_x() + j(rng);
        const double cy = b.center_y() + j(rng);
        const double w = std::max(1.0, b.width + j(rng));
        const double h = std::max(1.0, b.height + j(rng));
        d = Box::from_center(cx, cy, w, h);
      }
      dets.push_back({{frame, -1, d.left, d.top, d.width, d.height, 1.0},
                      noisy(sc.identities[i], spec.embedding_scale * spec.embedding_noise, rng)});
    }
    const int n_fp = spec.fp_rate > 0.0 ? fp_count(rng) : 0;
    for (int k = 0; k < n_fp; ++k) {
      const Box b = random_box(spec, rng);
      dets.push_back({{frame, -1, b.left, b.top, b.width, b.height, 1.0},
                      spec.embedding_scale * random_unit(rng, spec.embed_dim)});
    }
    std::shuffle(dets.begin(), dets.end(), rng);
    for (std::size_t k = 0; k < dets.size(); ++k) {
      sc.detections.push_back(dets[k].rec);
      sc.embeddings.insert(frame, static_cast<int>(k), std::move(dets[k].emb));
    }
  }
  return sc;
}

void write_scenario(const Scenario& scenario, const std::string& dir) {
  std::filesystem::create_directories(dir);
  const std::filesystem::path root(dir);
  io::write_mot_file((root / "gt.txt").string(), scenario.gt);
  io::write_mot_file((root / "det.txt").string(), scenario.detections);
  io::write_embeddings_file((root / "emb.txt").string(), scenario.embeddings);
}

ScenarioEmbedder::ScenarioEmbedder(const Scenario& scenario) : scenario_(scenario) {
  for (const auto& r : scenario.gt) {
    if (static_cast<std::size_t>(r.frame) >= gt_by_frame_.size()) gt_by_frame_.resize(r.frame + 1);
    gt_by_frame_[r.frame].push_back(r);
  }
}

std::optional<VectorXd> ScenarioEmbedder::embed(int frame, const Box& box) const {
  std::string key(reinterpret_cast<const char*>(&scenario_.spec.seed), sizeof(std::uint64_t));
  key.append(reinterpret_cast<const char*>(&frame), sizeof frame);
  for (double v : {box.left, box.top, box.width, box.height}) {
    const auto bits = std::bit_cast<std::uint64_t>(v);
    key.append(reinterpret_cast<const char*>(&bits), sizeof bits);
  }
  Rng rng(nn::fnv1a64(key));

  const io::MotRecord* best = nullptr;
  double best_iou = 0.5;
  if (frame >= 0 && static_cast<std::size_t>(frame) < gt_by_frame_.size()) {
    for (const auto& r : gt_by_frame_[frame]) {
      const double o = iou(box, r.box());
      if (o >= best_iou) {
        best_iou = o;
        best = &r;
      }
    }
  }
  const ScenarioSpec& spec = scenario_.spec;
  if (!best) return VectorXd(spec.embedding_scale * random_unit(rng, spec.embed_dim));
  return noisy(scenario_.identities[best->id - 1], spec.embedding_scale * spec.embedding_noise, rng);
}

}  // namespace mtp::sim
