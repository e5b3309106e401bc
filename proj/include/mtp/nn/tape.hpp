#pragma once

#include <Eigen/Dense>

#include <cstdint>
#include <functional>
#include <span>
#include <utility>
#include <vector>

#include "mtp/nn/layers.hpp"

namespace mtp::nn {

/// Reverse-mode record of the classifier's forward pass.
///
/// The tape knows the handful of operations the classifier is built from,
/// not arbitrary expressions. Every operation stores its output as a node and
/// pushes a backward closure; `backward` replays the closures in exact reverse
/// order, so node gradients accumulate additively when a value fans out.
/// Parameter gradients are accumulated into the weight structs passed at
/// record time (pass nullptr to freeze a layer).
class GradTape {
 public:
  struct Var {
    int id = -1;
    bool valid() const { return id >= 0; }
  };

  struct Seed {
    Var var;
    Eigen::VectorXd grad;
  };

  GradTape() = default;
  GradTape(const GradTape&) = delete;
  GradTape& operator=(const GradTape&) = delete;

  /// Leaf value that is not a function of any parameter (inputs, carried state).
  Var constant(Eigen::VectorXd value);

  Var dense(Var x, const DenseWeights<double>& w, DenseWeights<double>* grad);
  std::pair<Var, Var> lstm(Var x, Var h_prev, Var c_prev, const LstmWeights<double>& w,
                           LstmWeights<double>* grad);
  /// relu(reshape(h, rows x |x|) * x)
  Var bilinear_match(Var h, Var x, Eigen::Index rows);
  /// Column-wise max; a fresh zero leaf when `inputs` is empty.
  Var max_pool(std::span<const Var> inputs, Eigen::Index length);
  Var concat(Var a, Var b);
  /// Element-wise product with a fixed vector (dropout masks, ablation zeroing).
  Var scale(Var x, Eigen::VectorXd factors);
  /// Length-1 node holding the softmax probability of class 1 from 2 logits.
  Var match_probability(Var logits);

  const Eigen::VectorXd& value(Var v) const;
  const Eigen::VectorXd& grad(Var v) const;

  /// Runs the recorded operations backwards from the given output gradients.
  /// Throws StateError if nothing has been recorded.
  void backward(std::span<const Seed> seeds);

  /// Hash of every piecewise branch taken (relu activity, max-pool winners).
  /// Two forward passes with equal signatures lie on the same smooth piece.
  std::uint64_t kink_signature() const { return signature_; }

  std::size_t num_nodes() const { return values_.size(); }
  std::size_t num_ops() const { return ops_.size(); }
  void clear();

 private:
  Var push(Eigen::VectorXd value);
  void check(Var v) const;
  void mix(std::uint64_t word);

  std::vector<Eigen::VectorXd> values_;
  std::vector<Eigen::VectorXd> grads_;
  std::vector<std::function<void()>> ops_;
  std::uint64_t signature_ = 1469598103934665603ULL;
};

}  // namespace mtp::nn
