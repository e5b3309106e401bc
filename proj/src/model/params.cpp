#include "mtp/model/params.hpp"

#include <cmath>
#include <random>

namespace mtp::model {

namespace {

Dense make_dense(Eigen::Index in, Eigen::Index out, nn::Activation act) {
  Dense d;
  d.W = Eigen::MatrixXd::Zero(out, in);
  d.b = Eigen::VectorXd::Zero(out);
  d.activation = act;
  return d;
}

Lstm make_lstm(Eigen::Index hidden, Eigen::Index input, const ModelConfig& c) {
  Lstm l;
  for (auto* W : {&l.W_f, &l.W_i, &l.W_g, &l.W_o}) *W = Eigen::MatrixXd::Zero(hidden, hidden + input);
  l.use_bias = c.lstm_bias;
  if (c.lstm_bias) {
    for (auto* b : {&l.b_f, &l.b_i, &l.b_g, &l.b_o}) *b = Eigen::VectorXd::Zero(hidden);
  }
  l.variant = c.gate_variant;
  return l;
}

void fill_uniform(Eigen::MatrixXd& m, double s, std::mt19937_64& rng) {
  std::uniform_real_distribution<double> u(-s, s);
  for (Eigen::Index k = 0; k < m.size(); ++k) m.data()[k] = u(rng);
}

void init_dense(Dense& d, std::mt19937_64& rng) {
  if (d.empty()) return;
  const double s = 1.0 / std::sqrt(static_cast<double>(d.in()));
  fill_uniform(d.W, s, rng);
  std::uniform_real_distribution<double> u(-s, s);
  for (Eigen::Index k = 0; k < d.b.size(); ++k) d.b(k) = u(rng);
}

void init_lstm(Lstm& l, double forget_bias, std::mt19937_64& rng) {
  if (l.empty()) return;
  const double s = 1.0 / std::sqrt(static_cast<double>(l.W_f.cols()));
  for (auto* W : {&l.W_f, &l.W_i, &l.W_g, &l.W_o}) fill_uniform(*W, s, rng);
  if (l.use_bias) {
    l.b_f.setConstant(forget_bias);
    l.b_i.setZero();
    l.b_g.setZero();
    l.b_o.setZero();
  }
}

void add_dense(std::vector<nn::TensorView>& out, const char* name, Dense& d) {
  if (d.empty()) return;
  out.push_back(nn::view_of(std::string(name) + ".W", d.W));
  out.push_back(nn::view_of(std::string(name) + ".b", d.b));
}

void add_lstm(std::vector<nn::TensorView>& out, const char* name, Lstm& l) {
  if (l.empty()) return;
  const std::string n(name);
  out.push_back(nn::view_of(n + ".W_f", l.W_f));
  out.push_back(nn::view_of(n + ".W_i", l.W_i));
  out.push_back(nn::view_of(n + ".W_g", l.W_g));
  out.push_back(nn::view_of(n + ".W_o", l.W_o));
  if (l.use_bias) {
    out.push_back(nn::view_of(n + ".b_f", l.b_f));
    out.push_back(nn::view_of(n + ".b_i", l.b_i));
    out.push_back(nn::view_of(n + ".b_g", l.b_g));
    out.push_back(nn::view_of(n + ".b_o", l.b_o));
  }
}

}  // namespace

ModelParams ModelParams::zeros(const ModelConfig& c) {
  c.validate();
  using nn::Activation;
  ModelParams p;
  p.config = c;
  p.embed = make_dense(c.embed_dim, c.key_dim, Activation::kRelu);
  p.appearance_lstm = make_lstm(c.hidden, c.key_dim, c);
  const int width = c.memory_width();
  if (c.head == HeadMode::kAppearanceOnly) {
    p.app_out = make_dense(width, 2, Activation::kIdentity);
  } else {
    p.app_fc1 = make_dense(width, width, Activation::kRelu);
    p.app_fc2 = make_dense(width, width, Activation::kRelu);
    p.motion_in = make_dense(4, c.motion_hidden, Activation::kRelu);
    p.motion_lstm = make_lstm(c.motion_hidden, c.motion_hidden, c);
    p.motion_out = make_dense(c.motion_hidden, c.motion_feat, Activation::kRelu);
    p.motion_fc1 = make_dense(c.motion_feat, c.motion_feat, Activation::kRelu);
    p.motion_fc2 = make_dense(c.motion_feat, c.motion_feat, Activation::kRelu);
    p.joint_fc = make_dense(width + c.motion_feat, c.joint_hidden, Activation::kRelu);
    p.joint_out = make_dense(c.joint_hidden, 2, Activation::kIdentity);
  }
  return p;
}

ModelParams ModelParams::initialize(const ModelConfig& c) {
  ModelParams p = zeros(c);
  std::mt19937_64 rng(c.init_seed);
  init_dense(p.embed, rng);
  init_lstm(p.appearance_lstm, c.forget_bias, rng);
  for (Dense* d : {&p.app_out, &p.app_fc1, &p.app_fc2, &p.motion_in}) init_dense(*d, rng);
  init_lstm(p.motion_lstm, c.forget_bias, rng);
  for (Dense* d : {&p.motion_out, &p.motion_fc1, &p.motion_fc2, &p.joint_fc, &p.joint_out}) {
    init_dense(*d, rng);
  }
  return p;
}

void ModelParams::set_zero() {
  for (auto& v : views()) std::fill(v.data.begin(), v.data.end(), 0.0);
}

std::vector<nn::TensorView> ModelParams::views() {
  std::vector<nn::TensorView> out;
  add_dense(out, "embed", embed);
  add_lstm(out, "appearance_lstm", appearance_lstm);
  add_dense(out, "app_out", app_out);
  add_dense(out, "app_fc1", app_fc1);
  add_dense(out, "app_fc2", app_fc2);
  add_dense(out, "motion_in", motion_in);
  add_lstm(out, "motion_lstm", motion_lstm);
  add_dense(out, "motion_out", motion_out);
  add_dense(out, "motion_fc1", motion_fc1);
  add_dense(out, "motion_fc2", motion_fc2);
  add_dense(out, "joint_fc", joint_fc);
  add_dense(out, "joint_out", joint_out);
  return out;
}

nn::Checkpoint ModelParams::to_checkpoint() {
  return nn::Checkpoint{to_json(config), nn::to_tensors(*this)};
}

ModelParams ModelParams::from_checkpoint(const nn::Checkpoint& ckpt) {
  ModelParams p = zeros(model_config_from_json(ckpt.config_json));
  nn::from_tensors(ckpt.tensors, p);
  return p;
}

}  // namespace mtp::model
