#include "mtp/app/reference.hpp"

#include <cmath>
#include <cstdint>

#include "mtp/nn/layers.hpp"

namespace mtp::app {

namespace {

template <typename S>
nn::DenseWeights<S> cast(const model::Dense& d) {
  return {d.W.template cast<S>(), d.b.template cast<S>(), d.activation};
}

template <typename S>
nn::LstmWeights<S> cast(const model::Lstm& l) {
  return {l.W_f.template cast<S>(), l.W_i.template cast<S>(), l.W_g.template cast<S>(),
          l.W_o.template cast<S>(), l.b_f.template cast<S>(), l.b_i.template cast<S>(),
          l.b_g.template cast<S>(), l.b_o.template cast<S>(), l.use_bias, l.variant};
}

struct Signature {
  std::uint64_t value = 1469598103934665603ULL;
  void mix(std::uint64_t w) {
    value ^= w;
    value *= 1099511628211ULL;
  }
  template <typename V>
  void activity(const V& v) {
    for (Eigen::Index k = 0; k < v.size(); ++k) mix(v(k) > 0 ? 3 : 5);
  }
};

template <typename S>
struct Net {
  nn::DenseWeights<S> embed, app_out, app_fc1, app_fc2, motion_in, motion_out, motion_fc1,
      motion_fc2, joint_fc, joint_out;
  nn::LstmWeights<S> lstm, motion_lstm;
  Signature sig;

  explicit Net(const model::ModelParams& p)
      : embed(cast<S>(p.embed)),
        app_out(cast<S>(p.app_out)),
        app_fc1(cast<S>(p.app_fc1)),
        app_fc2(cast<S>(p.app_fc2)),
        motion_in(cast<S>(p.motion_in)),
        motion_out(cast<S>(p.motion_out)),
        motion_fc1(cast<S>(p.motion_fc1)),
        motion_fc2(cast<S>(p.motion_fc2)),
        joint_fc(cast<S>(p.joint_fc)),
        joint_out(cast<S>(p.joint_out)),
        lstm(cast<S>(p.appearance_lstm)),
        motion_lstm(cast<S>(p.motion_lstm)) {}

  nn::Vector<S> dense(const nn::Vector<S>& x, const nn::DenseWeights<S>& w) {
    nn::Vector<S> y = nn::dense_forward(x, w);
    if (w.activation == nn::Activation::kRelu) sig.activity(y);
    return y;
  }
};

template <typename S>
nn::Vector<S> box_input(const Box& b, double w, double h) {
  const NormalizedBox n = normalize(b, w, h);
  nn::Vector<S> v(4);
  v << S(n.x), S(n.y), S(n.w), S(n.h);
  return v;
}

}  // namespace

template <typename Scalar>
nn::Evaluation reference_episode_loss(const model::ModelParams& params,
                                      const train::RandomEpisode& ep, double image_width,
                                      double image_height, double beta_pos, double beta_neg) {
  using S = Scalar;
  using Vec = nn::Vector<S>;
  const auto& cfg = params.config;
  const bool joint = cfg.head == model::HeadMode::kJoint;
  Net<S> net(params);

  std::vector<nn::LstmState<S>> mem, mot;
  for (const auto& hist : ep.histories) {
    nn::LstmState<S> a{Vec::Zero(cfg.hidden), Vec::Zero(cfg.hidden)};
    nn::LstmState<S> m{Vec::Zero(cfg.motion_hidden), Vec::Zero(cfg.motion_hidden)};
    for (const auto& o : hist) {
      a = nn::lstm_step<S>(net.dense(o.embedding.cast<S>(), net.embed), a.h, a.c, net.lstm);
      if (joint) {
        m = nn::lstm_step<S>(net.dense(box_input<S>(o.box, image_width, image_height), net.motion_in),
                             m.h, m.c, net.motion_lstm);
      }
    }
    mem.push_back(std::move(a));
    mot.push_back(std::move(m));
  }

  const std::size_t M = mem.size();
  const std::size_t N = ep.detections.size();
  std::vector<Vec> x, motion_in;
  for (const auto& d : ep.detections) {
    x.push_back(net.dense(d.embedding.cast<S>(), net.embed));
    if (joint) motion_in.push_back(net.dense(box_input<S>(d.box, image_width, image_height), net.motion_in));
  }
  std::vector<Vec> match(M * N);
  for (std::size_t i = 0; i < M; ++i) {
    for (std::size_t j = 0; j < N; ++j) {
      match[i * N + j] = nn::bilinear_match<S>(mem[i].h, x[j], cfg.rows);
      net.sig.activity(match[i * N + j]);
    }
  }

  S total = 0;
  for (std::size_t i = 0; i < M; ++i) {
    for (std::size_t j = 0; j < N; ++j) {
      Vec m_all(cfg.memory_width());
      if (cfg.pooling) {
        Vec m_minus = Vec::Zero(cfg.rows);
        if (M > 1) {
          for (Eigen::Index k = 0; k < cfg.rows; ++k) {
            std::size_t win = i == 0 ? 1 : 0;
            for (std::size_t o = 0; o < M; ++o) {
              if (o != i && match[o * N + j](k) > match[win * N + j](k)) win = o;
            }
            m_minus(k) = match[win * N + j](k);
            net.sig.mix(win + 13);
          }
        }
        m_all << match[i * N + j], m_minus;
      } else {
        m_all = match[i * N + j];
      }

      Vec logits;
      if (!joint) {
        logits = net.dense(m_all, net.app_out);
      } else {
        const Vec a = net.dense(net.dense(m_all, net.app_fc1), net.app_fc2);
        const auto step = nn::lstm_step<S>(motion_in[j], mot[i].h, mot[i].c, net.motion_lstm);
        const Vec feat = net.dense(step.h, net.motion_out);
        const Vec b = net.dense(net.dense(feat, net.motion_fc1), net.motion_fc2);
        Vec cat(a.size() + b.size());
        cat << a, b;
        logits = net.dense(net.dense(cat, net.joint_fc), net.joint_out);
      }
      const S p = nn::match_probability<S>(logits);
      const S floor = S(1e-12);
      if (ep.batch.labels(i, j) == 1) {
        total += S(beta_pos) * (1 - p) * (1 - p) * -std::log(std::max(p, floor));
      } else {
        total += S(beta_neg) * p * p * -std::log(std::max(S(1) - p, floor));
      }
    }
  }
  const S mean = total / S(M * N);
  return {static_cast<long double>(mean), net.sig.value};
}

template nn::Evaluation reference_episode_loss<double>(const model::ModelParams&,
                                                       const train::RandomEpisode&, double, double,
                                                       double, double);
template nn::Evaluation reference_episode_loss<long double>(const model::ModelParams&,
                                                            const train::RandomEpisode&, double,
                                                            double, double, double);

}  // namespace mtp::app
