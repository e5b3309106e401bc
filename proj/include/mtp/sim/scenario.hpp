#pragma once

#include <Eigen/Dense>

#include <cstdint>
#include <optional>
#include <string>
#include <vector>

#include "mtp/box.hpp"
#include "mtp/io/embeddings.hpp"
#include "mtp/io/mot.hpp"
#include "mtp/tracker/embedding_source.hpp"

namespace mtp::sim {

/// Synthetic scene with targets grouped into appearance clusters. Each
/// target's appearance is its cluster centroid (unit vector) plus a fixed
/// personal offset of norm `cluster_offset`; every detection adds isotropic
/// noise of std `embedding_noise`. False positives get random unit vectors.
/// All of this is then multiplied by `embedding_scale`, so the offsets and the
/// noise are relative to the centroid length.
struct ScenarioSpec {
  double image_width = 1280.0;
  double image_height = 720.0;
  int num_targets = 8;
  int num_clusters = 2;
  double cluster_offset = 0.5;    // sigma_c
  double embedding_noise = 0.02;  // sigma_e, per coordinate
  double miss_prob = 0.05;
  double fp_rate = 0.5;      // Poisson mean per frame
  double box_jitter = 0.02;  // std as a fraction of box height
  int frames = 300;
  double speed_min = 1.0;    // pixels per frame
  double speed_max = 6.0;
  double accel_sigma = 0.3;
  double box_height_min = 80.0;
  double box_height_max = 160.0;
  double aspect = 0.4;       // width / height
  double max_gt_iou = 0.5;   // targets never overlap more than this
  int embed_dim = 32;
  double embedding_scale = 6.0;  // length of a centroid in the emitted vectors
  std::uint64_t seed = 1;

  void validate() const;
};

struct Scenario {
  ScenarioSpec spec;
  std::vector<io::MotRecord> gt;
  std::vector<io::MotRecord> detections;
  io::EmbeddingStore embeddings;
  /// Noise-free appearance of each target (index = id - 1).
  std::vector<Eigen::VectorXd> identities;
  std::vector<int> cluster_of;
};

/// Fully determined by `spec` (including its seed).
Scenario generate(const ScenarioSpec& spec);

/// Writes gt.txt, det.txt and emb.txt into `dir` (created if missing).
void write_scenario(const Scenario& scenario, const std::string& dir);

/// Answers embedding queries for arbitrary boxes: a box overlapping a target
/// (IoU >= 0.5) gets that target's appearance with fresh noise, anything else
/// a random unit vector. Deterministic per (frame, box).
class ScenarioEmbedder : public tracker::EmbeddingSource {
 public:
  explicit ScenarioEmbedder(const Scenario& scenario);
  std::optional<Eigen::VectorXd> embed(int frame, const Box& box) const override;

 private:
  const Scenario& scenario_;
  std::vector<std::vector<io::MotRecord>> gt_by_frame_;
};

}  // namespace mtp::sim
