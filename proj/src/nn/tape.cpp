#include "mtp/nn/tape.hpp"

#include <string>

namespace mtp::nn {

using Eigen::VectorXd;

GradTape::Var GradTape::push(VectorXd value) {
  grads_.push_back(VectorXd::Zero(value.size()));
  values_.push_back(std::move(value));
  return Var{static_cast<int>(values_.size() - 1)};
}

void GradTape::check(Var v) const {
  if (v.id < 0 || static_cast<std::size_t>(v.id) >= values_.size()) {
    throw StateError("GradTape: variable " + std::to_string(v.id) + " is not on this tape");
  }
}

void GradTape::mix(std::uint64_t word) {
  signature_ ^= word;
  signature_ *= 1099511628211ULL;
}

GradTape::Var GradTape::constant(VectorXd value) { return push(std::move(value)); }

const VectorXd& GradTape::value(Var v) const {
  check(v);
  return values_[v.id];
}

const VectorXd& GradTape::grad(Var v) const {
  check(v);
  return grads_[v.id];
}

GradTape::Var GradTape::dense(Var x, const DenseWeights<double>& w, DenseWeights<double>* g) {
  check(x);
  VectorXd y = dense_forward(values_[x.id], w);
  const bool relu_on = w.activation == Activation::kRelu;
  if (relu_on) {
    for (Eigen::Index k = 0; k < y.size(); ++k) mix(y(k) > 0.0 ? 3 : 5);
  }
  const Var out = push(std::move(y));
  ops_.emplace_back([this, x, out, &w, g, relu_on] {
    VectorXd dz = grads_[out.id];
    if (relu_on) {
      dz = (values_[out.id].array() > 0.0).select(dz, 0.0);
    }
    if (g) {
      g->W.noalias() += dz * values_[x.id].transpose();
      g->b += dz;
    }
    grads_[x.id].noalias() += w.W.transpose() * dz;
  });
  return out;
}

std::pair<GradTape::Var, GradTape::Var> GradTape::lstm(Var x, Var h_prev, Var c_prev,
                                                       const LstmWeights<double>& w,
                                                       LstmWeights<double>* g) {
  check(x);
  check(h_prev);
  check(c_prev);
  LstmCache<double> cache;
  LstmState<double> next = lstm_step(values_[x.id], values_[h_prev.id], values_[c_prev.id], w, &cache);
  const Var h = push(std::move(next.h));
  const Var c = push(std::move(next.c));
  ops_.emplace_back([this, x, h_prev, c_prev, h, c, &w, g, cache = std::move(cache)] {
    const Eigen::Index hidden = w.hidden();
    const VectorXd& dh = grads_[h.id];
    const VectorXd tanh_sq = cache.tanh_c.array().square();
    const VectorXd d_o = dh.cwiseProduct(cache.tanh_c);
    const VectorXd dc = grads_[c.id] +
                        dh.cwiseProduct(cache.o).cwiseProduct((1.0 - tanh_sq.array()).matrix());
    const VectorXd d_f = dc.cwiseProduct(values_[c_prev.id]);
    const VectorXd d_i = dc.cwiseProduct(cache.g);
    const VectorXd d_g = dc.cwiseProduct(cache.i);

    const auto sig_grad = [](const VectorXd& act, const VectorXd& up) -> VectorXd {
      return up.array() * act.array() * (1.0 - act.array());
    };
    const auto tanh_grad = [](const VectorXd& act, const VectorXd& up) -> VectorXd {
      return up.array() * (1.0 - act.array().square());
    };

    const VectorXd a_f = sig_grad(cache.f, d_f);
    const VectorXd a_i = sig_grad(cache.i, d_i);
    VectorXd a_g, a_o;
    if (w.variant == GateVariant::kStandard) {
      a_g = tanh_grad(cache.g, d_g);
      a_o = sig_grad(cache.o, d_o);
    } else {
      a_g = sig_grad(cache.g, d_g);
      a_o = tanh_grad(cache.o, d_o);
    }

    if (g) {
      g->W_f.noalias() += a_f * cache.z.transpose();
      g->W_i.noalias() += a_i * cache.z.transpose();
      g->W_g.noalias() += a_g * cache.z.transpose();
      g->W_o.noalias() += a_o * cache.z.transpose();
      if (w.use_bias) {
        g->b_f += a_f;
        g->b_i += a_i;
        g->b_g += a_g;
        g->b_o += a_o;
      }
    }
    VectorXd dz = w.W_f.transpose() * a_f;
    dz.noalias() += w.W_i.transpose() * a_i;
    dz.noalias() += w.W_g.transpose() * a_g;
    dz.noalias() += w.W_o.transpose() * a_o;

    grads_[h_prev.id] += dz.head(hidden);
    grads_[x.id] += dz.tail(dz.size() - hidden);
    grads_[c_prev.id] += dc.cwiseProduct(cache.f);
  });
  return {h, c};
}

GradTape::Var GradTape::bilinear_match(Var h, Var x, Eigen::Index rows) {
  check(h);
  check(x);
  VectorXd y = nn::bilinear_match(values_[h.id], values_[x.id], rows);
  for (Eigen::Index k = 0; k < y.size(); ++k) mix(y(k) > 0.0 ? 7 : 11);
  const Var out = push(std::move(y));
  ops_.emplace_back([this, h, x, out, rows] {
    const VectorXd dpre = (values_[out.id].array() > 0.0).select(grads_[out.id], 0.0);
    const VectorXd& xv = values_[x.id];
    const Eigen::Index cols = xv.size();
    // dH = dpre x^T, written back through the row-major reshape.
    Eigen::Map<RowMajorMatrix<double>> dH(grads_[h.id].data(), rows, cols);
    dH.noalias() += dpre * xv.transpose();
    grads_[x.id].noalias() += reshape_rows(values_[h.id], rows, cols).transpose() * dpre;
  });
  return out;
}

GradTape::Var GradTape::max_pool(std::span<const Var> inputs, Eigen::Index length) {
  if (inputs.empty()) return push(VectorXd::Zero(length));
  std::vector<int> ids;
  ids.reserve(inputs.size());
  for (Var v : inputs) {
    check(v);
    require_dim(values_[v.id].size(), length, "max_pool input");
    ids.push_back(v.id);
  }
  VectorXd y(length);
  std::vector<int> winner(static_cast<std::size_t>(length));
  for (Eigen::Index k = 0; k < length; ++k) {
    int best = 0;
    for (std::size_t n = 1; n < ids.size(); ++n) {
      if (values_[ids[n]](k) > values_[ids[best]](k)) best = static_cast<int>(n);
    }
    winner[static_cast<std::size_t>(k)] = ids[best];
    y(k) = values_[ids[best]](k);
    mix(static_cast<std::uint64_t>(best) + 13);
  }
  const Var out = push(std::move(y));
  ops_.emplace_back([this, out, winner = std::move(winner)] {
    for (std::size_t k = 0; k < winner.size(); ++k) {
      grads_[winner[k]](static_cast<Eigen::Index>(k)) += grads_[out.id](static_cast<Eigen::Index>(k));
    }
  });
  return out;
}

GradTape::Var GradTape::concat(Var a, Var b) {
  check(a);
  check(b);
  VectorXd y(values_[a.id].size() + values_[b.id].size());
  y << values_[a.id], values_[b.id];
  const Var out = push(std::move(y));
  ops_.emplace_back([this, a, b, out] {
    const Eigen::Index na = grads_[a.id].size();
    grads_[a.id] += grads_[out.id].head(na);
    grads_[b.id] += grads_[out.id].tail(grads_[b.id].size());
  });
  return out;
}

GradTape::Var GradTape::scale(Var x, VectorXd factors) {
  check(x);
  require_dim(factors.size(), values_[x.id].size(), "scale factors");
  const Var out = push(values_[x.id].cwiseProduct(factors));
  ops_.emplace_back([this, x, out, factors = std::move(factors)] {
    grads_[x.id] += grads_[out.id].cwiseProduct(factors);
  });
  return out;
}

GradTape::Var GradTape::match_probability(Var logits) {
  check(logits);
  const double p = nn::match_probability(values_[logits.id]);
  const Var out = push(VectorXd::Constant(1, p));
  ops_.emplace_back([this, logits, out, p] {
    const double d = grads_[out.id](0) * p * (1.0 - p);
    grads_[logits.id](0) -= d;
    grads_[logits.id](1) += d;
  });
  return out;
}

void GradTape::backward(std::span<const Seed> seeds) {
  if (ops_.empty()) throw StateError("GradTape::backward called before any forward operation");
  for (auto& g : grads_) g.setZero();
  for (const Seed& s : seeds) {
    check(s.var);
    require_dim(s.grad.size(), values_[s.var.id].size(), "backward seed");
    grads_[s.var.id] += s.grad;
  }
  for (auto it = ops_.rbegin(); it != ops_.rend(); ++it) (*it)();
}

void GradTape::clear() {
  values_.clear();
  grads_.clear();
  ops_.clear();
  signature_ = 1469598103934665603ULL;
}

}  // namespace mtp::nn
