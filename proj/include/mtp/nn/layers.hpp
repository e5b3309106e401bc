#pragma once

// Dense layers used by the track classifier. Everything here is a pure
// function of its inputs and templated on the scalar type; training code
// reuses these for its forward values so the tracker and the trainer never
// disagree about what a layer computes.

#include <Eigen/Dense>

#include <cmath>
#include <span>
#include <string>
#include <vector>

#include "mtp/error.hpp"

namespace mtp::nn {

template <typename Scalar>
using Vector = Eigen::Matrix<Scalar, Eigen::Dynamic, 1>;

template <typename Scalar>
using Matrix = Eigen::Matrix<Scalar, Eigen::Dynamic, Eigen::Dynamic>;

template <typename Scalar>
using RowMajorMatrix = Eigen::Matrix<Scalar, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor>;

enum class Activation { kIdentity, kRelu };

/// Which activations the candidate and output gates use. `kSwapped` uses a
/// sigmoid candidate and a tanh output gate.
enum class GateVariant { kStandard, kSwapped };

template <typename Scalar>
struct DenseWeights {
  Matrix<Scalar> W;
  Vector<Scalar> b;
  Activation activation = Activation::kIdentity;

  Eigen::Index in() const { return W.cols(); }
  Eigen::Index out() const { return W.rows(); }
  bool empty() const { return W.size() == 0; }
};

template <typename Scalar>
struct LstmWeights {
  Matrix<Scalar> W_f, W_i, W_g, W_o;  // hidden x (hidden + input)
  Vector<Scalar> b_f, b_i, b_g, b_o;  // empty when use_bias is false
  bool use_bias = true;
  GateVariant variant = GateVariant::kStandard;

  Eigen::Index hidden() const { return W_f.rows(); }
  Eigen::Index input() const { return W_f.cols() - W_f.rows(); }
  bool empty() const { return W_f.size() == 0; }
};

template <typename Scalar>
struct LstmState {
  Vector<Scalar> h;
  Vector<Scalar> c;
};

/// Gate activations of one step, kept for the backward pass.
template <typename Scalar>
struct LstmCache {
  Vector<Scalar> z;  // [h_prev; x]
  Vector<Scalar> f, i, g, o;
  Vector<Scalar> tanh_c;
};

template <typename Scalar>
Scalar sigmoid(Scalar v) {
  if (v >= Scalar(0)) {
    const Scalar e = std::exp(-v);
    return Scalar(1) / (Scalar(1) + e);
  }
  const Scalar e = std::exp(v);
  return e / (Scalar(1) + e);
}

template <typename Derived>
auto relu(const Eigen::MatrixBase<Derived>& v) {
  return v.cwiseMax(typename Derived::Scalar(0));
}

inline void require_dim(Eigen::Index got, Eigen::Index want, const char* what) {
  if (got != want) {
    throw DimensionError(std::string(what) + ": expected length " + std::to_string(want) +
                         ", got " + std::to_string(got));
  }
}

template <typename Scalar>
Vector<Scalar> dense_forward(const Vector<Scalar>& x, const DenseWeights<Scalar>& p) {
  require_dim(x.size(), p.in(), "dense_forward input");
  require_dim(p.b.size(), p.out(), "dense_forward bias");
  Vector<Scalar> z = p.W * x + p.b;
  if (p.activation == Activation::kRelu) z = relu(z);
  return z;
}

template <typename Scalar>
LstmState<Scalar> lstm_step(const Vector<Scalar>& x, const Vector<Scalar>& h_prev,
                            const Vector<Scalar>& c_prev, const LstmWeights<Scalar>& p,
                            LstmCache<Scalar>* cache = nullptr) {
  const Eigen::Index hidden = p.hidden();
  require_dim(h_prev.size(), hidden, "lstm_step h_prev");
  require_dim(c_prev.size(), hidden, "lstm_step c_prev");
  require_dim(x.size(), p.input(), "lstm_step x");

  Vector<Scalar> z(hidden + x.size());
  z << h_prev, x;

  Vector<Scalar> af = p.W_f * z;
  Vector<Scalar> ai = p.W_i * z;
  Vector<Scalar> ag = p.W_g * z;
  Vector<Scalar> ao = p.W_o * z;
  if (p.use_bias) {
    af += p.b_f;
    ai += p.b_i;
    ag += p.b_g;
    ao += p.b_o;
  }
  const auto sig = [](Scalar v) { return sigmoid(v); };
  const auto th = [](Scalar v) { return std::tanh(v); };

  Vector<Scalar> f = af.unaryExpr(sig);
  Vector<Scalar> i = ai.unaryExpr(sig);
  Vector<Scalar> g, o;
  if (p.variant == GateVariant::kStandard) {
    g = ag.unaryExpr(th);
    o = ao.unaryExpr(sig);
  } else {
    g = ag.unaryExpr(sig);
    o = ao.unaryExpr(th);
  }

  LstmState<Scalar> out;
  out.c = f.cwiseProduct(c_prev) + i.cwiseProduct(g);
  Vector<Scalar> tanh_c = out.c.unaryExpr(th);
  out.h = o.cwiseProduct(tanh_c);

  if (cache) {
    cache->z = std::move(z);
    cache->f = std::move(f);
    cache->i = std::move(i);
    cache->g = std::move(g);
    cache->o = std::move(o);
    cache->tanh_c = std::move(tanh_c);
  }
  return out;
}

/// Row-major view of a flat memory vector as `rows` templates of length x.size().
template <typename Scalar>
Eigen::Map<const RowMajorMatrix<Scalar>> reshape_rows(const Vector<Scalar>& h, Eigen::Index rows,
                                                      Eigen::Index cols) {
  return Eigen::Map<const RowMajorMatrix<Scalar>>(h.data(), rows, cols);
}

/// relu(H x) where H is `h` reshaped to rows x |x|.
template <typename Scalar>
Vector<Scalar> bilinear_match(const Vector<Scalar>& h, const Vector<Scalar>& x, Eigen::Index rows) {
  if (rows <= 0 || h.size() != rows * x.size()) {
    throw DimensionError("bilinear_match: memory length " + std::to_string(h.size()) +
                         " is not rows(" + std::to_string(rows) + ") x key(" +
                         std::to_string(x.size()) + ")");
  }
  return relu(reshape_rows(h, rows, x.size()) * x);
}

/// Column-wise max over the other tracks' match vectors; zero when there are none.
template <typename Scalar>
Vector<Scalar> max_pool(std::span<const Vector<Scalar>> others, Eigen::Index length) {
  if (others.empty()) return Vector<Scalar>::Zero(length);
  Vector<Scalar> out = others.front();
  require_dim(out.size(), length, "max_pool input");
  for (std::size_t k = 1; k < others.size(); ++k) {
    require_dim(others[k].size(), length, "max_pool input");
    out = out.cwiseMax(others[k]);
  }
  return out;
}

/// Probability of the "match" class from a 2-way logit vector (softmax index 1).
template <typename Scalar>
Scalar match_probability(const Vector<Scalar>& logits) {
  require_dim(logits.size(), 2, "match_probability logits");
  return sigmoid(logits(1) - logits(0));
}

}  // namespace mtp::nn
