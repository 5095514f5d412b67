#pragma once

#include <Eigen/Dense>

#include <cmath>
#include <stdexcept>
#include <string>
#include <vector>

#include "raylift/body_model.hpp"
#include "raylift/geometry.hpp"
#include "raylift/rng.hpp"

namespace raylift {

struct NetConfig {
  int blocks = 3;
  int dim = 64;
  int heads = 2;
  int window = 30;       // nominal training window T
  int max_cameras = 4;   // camera embedding table size
  int joints = kNumKeypoints;
  int ff_mult = 2;       // feed-forward expansion
  int max_window = 128;  // time encoding table length

  void validate() const {
    if (dim <= 0 || heads <= 0 || dim % heads != 0) {
      throw std::invalid_argument("NetConfig: dim must divide by heads");
    }
    if (window < 2 || window > max_window || blocks <= 0) {
      throw std::invalid_argument("NetConfig: bad window or block count");
    }
  }
};

struct LossWeights {
  double smpl = 1.0;
  double joints3d = 5.0;
  double vertices = 1.0;
  double velocity = 20.0;
};

template <typename S>
using Mat = Eigen::Matrix<S, Eigen::Dynamic, Eigen::Dynamic>;

template <typename S>
struct AttentionParams {
  Mat<S> wq, wk, wv, wo;  // dim x dim
  Mat<S> bq, bk, bv, bo;  // 1 x dim
};

template <typename S>
struct LayerNormParams {
  Mat<S> gamma, beta;  // 1 x dim
};

template <typename S>
struct FeedForwardParams {
  Mat<S> w1, b1, w2, b2;
};

template <typename S>
struct BlockParams {
  LayerNormParams<S> ln_spatial, ln_temporal, ln_ff;
  AttentionParams<S> spatial, temporal;
  FeedForwardParams<S> ff;
  LayerNormParams<S> dec_ln_q, dec_ln_mem, dec_ln_ff;
  AttentionParams<S> cross;
  FeedForwardParams<S> dec_ff;
};

template <typename S>
struct NetParams {
  NetConfig config;
  Mat<S> token_w;       // 7 x dim
  Mat<S> token_b;       // 1 x dim
  Mat<S> camera_embed;  // max_cameras x dim
  Mat<S> joint_embed;   // joints x dim
  Mat<S> readout;       // 1 x dim
  Mat<S> time_encoding; // max_window x dim, fixed sinusoidal (not trained)
  std::vector<BlockParams<S>> blocks;
  LayerNormParams<S> ln_out;
  Mat<S> head_w;  // dim x kStateDim
  Mat<S> head_b;  // 1 x kStateDim
};

// Visits every trainable tensor in a fixed order. The time encoding table
// is fixed by construction and deliberately not visited.
template <typename S, typename F>
void visit_params(NetParams<S>& net, F&& f) {
  auto attn = [&](const std::string& p, AttentionParams<S>& a) {
    f(p + ".wq", a.wq);
    f(p + ".bq", a.bq);
    f(p + ".wk", a.wk);
    f(p + ".bk", a.bk);
    f(p + ".wv", a.wv);
    f(p + ".bv", a.bv);
    f(p + ".wo", a.wo);
    f(p + ".bo", a.bo);
  };
  auto ln = [&](const std::string& p, LayerNormParams<S>& l) {
    f(p + ".gamma", l.gamma);
    f(p + ".beta", l.beta);
  };
  auto ff = [&](const std::string& p, FeedForwardParams<S>& w) {
    f(p + ".w1", w.w1);
    f(p + ".b1", w.b1);
    f(p + ".w2", w.w2);
    f(p + ".b2", w.b2);
  };

  f("token.w", net.token_w);
  f("token.b", net.token_b);
  f("camera_embed", net.camera_embed);
  f("joint_embed", net.joint_embed);
  f("readout", net.readout);
  for (std::size_t i = 0; i < net.blocks.size(); ++i) {
    const std::string p = "block" + std::to_string(i);
    BlockParams<S>& b = net.blocks[i];
    ln(p + ".ln_spatial", b.ln_spatial);
    attn(p + ".spatial", b.spatial);
    ln(p + ".ln_temporal", b.ln_temporal);
    attn(p + ".temporal", b.temporal);
    ln(p + ".ln_ff", b.ln_ff);
    ff(p + ".ff", b.ff);
    ln(p + ".dec_ln_q", b.dec_ln_q);
    ln(p + ".dec_ln_mem", b.dec_ln_mem);
    attn(p + ".cross", b.cross);
    ln(p + ".dec_ln_ff", b.dec_ln_ff);
    ff(p + ".dec_ff", b.dec_ff);
  }
  ln("ln_out", net.ln_out);
  f("head.w", net.head_w);
  f("head.b", net.head_b);
}

namespace detail {

template <typename S>
Mat<S> sinusoidal_table(int rows, int dim) {
  Mat<S> table(rows, dim);
  for (int t = 0; t < rows; ++t) {
    for (int i = 0; i < dim; ++i) {
      const double freq = std::pow(10000.0, -2.0 * (i / 2) / dim);
      const double v = i % 2 == 0 ? std::sin(t * freq) : std::cos(t * freq);
      table(t, i) = static_cast<S>(v);
    }
  }
  return table;
}

}  // namespace detail

// Fresh network: small random weights, zero-initialized output head whose
// bias is the rest pose, so the first prediction is a neutral body at the
// window origin.
template <typename S>
NetParams<S> net_init(const NetConfig& config, std::uint64_t seed) {
  config.validate();
  NetParams<S> net;
  net.config = config;
  Rng rng(Rng::split(seed, 1234));

  auto dense = [&](int rows, int cols) {
    Mat<S> m(rows, cols);
    const double scale = 1.0 / std::sqrt(static_cast<double>(rows));
    for (int r = 0; r < rows; ++r) {
      for (int c = 0; c < cols; ++c) {
        m(r, c) = static_cast<S>(rng.normal(0, scale));
      }
    }
    return m;
  };
  auto small = [&](int rows, int cols) {
    Mat<S> m(rows, cols);
    for (int r = 0; r < rows; ++r) {
      for (int c = 0; c < cols; ++c) {
        m(r, c) = static_cast<S>(rng.normal(0, 0.02));
      }
    }
    return m;
  };
  auto zeros = [](int rows, int cols) { return Mat<S>::Zero(rows, cols).eval(); };
  auto attn = [&]() {
    AttentionParams<S> a;
    a.wq = dense(config.dim, config.dim);
    a.wk = dense(config.dim, config.dim);
    a.wv = dense(config.dim, config.dim);
    a.wo = dense(config.dim, config.dim);
    a.bq = zeros(1, config.dim);
    a.bk = zeros(1, config.dim);
    a.bv = zeros(1, config.dim);
    a.bo = zeros(1, config.dim);
    return a;
  };
  auto ln = [&]() {
    LayerNormParams<S> l;
    l.gamma = Mat<S>::Ones(1, config.dim);
    l.beta = zeros(1, config.dim);
    return l;
  };
  auto ff = [&]() {
    FeedForwardParams<S> w;
    const int hidden = config.dim * config.ff_mult;
    w.w1 = dense(config.dim, hidden);
    w.b1 = zeros(1, hidden);
    w.w2 = dense(hidden, config.dim);
    w.b2 = zeros(1, config.dim);
    return w;
  };

  net.token_w = dense(7, config.dim);
  net.token_b = zeros(1, config.dim);
  net.camera_embed = small(config.max_cameras, config.dim);
  net.joint_embed = small(config.joints, config.dim);
  net.readout = small(1, config.dim);
  net.time_encoding = detail::sinusoidal_table<S>(config.max_window, config.dim);
  for (int b = 0; b < config.blocks; ++b) {
    BlockParams<S> blk;
    blk.ln_spatial = ln();
    blk.spatial = attn();
    blk.ln_temporal = ln();
    blk.temporal = attn();
    blk.ln_ff = ln();
    blk.ff = ff();
    blk.dec_ln_q = ln();
    blk.dec_ln_mem = ln();
    blk.cross = attn();
    blk.dec_ln_ff = ln();
    blk.dec_ff = ff();
    net.blocks.push_back(std::move(blk));
  }
  net.ln_out = ln();
  net.head_w = zeros(config.dim, kStateDim);
  net.head_b = zeros(1, kStateDim);
  const auto rest = BodyState{}.as_vector();
  for (int i = 0; i < kStateDim; ++i) {
    net.head_b(0, i) = static_cast<S>(rest(i));
  }
  return net;
}

template <typename S>
NetParams<S> zero_like(const NetParams<S>& net) {
  NetParams<S> g = net;
  visit_params(g, [](const std::string&, Mat<S>& m) { m.setZero(); });
  g.time_encoding.setZero();
  return g;
}

// ---------------------------------------------------------------------------
// layer primitives with explicit reverse passes

namespace detail {

template <typename S>
struct LnCache {
  Mat<S> xhat;
  Eigen::Matrix<S, Eigen::Dynamic, 1> inv_std;
};

template <typename S>
Mat<S> layer_norm(const Mat<S>& x, const LayerNormParams<S>& p,
                  LnCache<S>& cache) {
  const Eigen::Index n = x.rows(), d = x.cols();
  cache.xhat.resize(n, d);
  cache.inv_std.resize(n);
  Mat<S> out(n, d);
  for (Eigen::Index r = 0; r < n; ++r) {
    const S mu = x.row(r).mean();
    const S var = (x.row(r).array() - mu).square().mean();
    const S inv = S(1) / std::sqrt(var + S(1e-6));
    cache.inv_std(r) = inv;
    cache.xhat.row(r) = (x.row(r).array() - mu) * inv;
    out.row(r) = cache.xhat.row(r).cwiseProduct(p.gamma.row(0)) + p.beta.row(0);
  }
  return out;
}

template <typename S>
Mat<S> layer_norm_backward(const Mat<S>& dy, const LayerNormParams<S>& p,
                           const LnCache<S>& cache, LayerNormParams<S>& grad) {
  const Eigen::Index n = dy.rows(), d = dy.cols();
  Mat<S> dx(n, d);
  for (Eigen::Index r = 0; r < n; ++r) {
    grad.gamma.row(0) += dy.row(r).cwiseProduct(cache.xhat.row(r));
    grad.beta.row(0) += dy.row(r);
    const auto dxhat = dy.row(r).cwiseProduct(p.gamma.row(0));
    const S m1 = dxhat.mean();
    const S m2 = dxhat.cwiseProduct(cache.xhat.row(r)).mean();
    dx.row(r) = cache.inv_std(r) *
                (dxhat.array() - m1 - cache.xhat.row(r).array() * m2);
  }
  return dx;
}

// token index groups for one (frames, cameras) shape
struct Groups {
  std::vector<std::vector<int>> spatial;   // per frame
  std::vector<std::vector<int>> temporal;  // per (camera, joint) track
};

inline Groups make_groups(int frames, int cameras, int joints) {
  Groups g;
  const int s = cameras * joints;
  g.spatial.resize(static_cast<std::size_t>(frames));
  for (int t = 0; t < frames; ++t) {
    auto& v = g.spatial[static_cast<std::size_t>(t)];
    v.resize(static_cast<std::size_t>(s));
    for (int i = 0; i < s; ++i) v[static_cast<std::size_t>(i)] = t * s + i;
  }
  g.temporal.resize(static_cast<std::size_t>(s));
  for (int i = 0; i < s; ++i) {
    auto& v = g.temporal[static_cast<std::size_t>(i)];
    v.resize(static_cast<std::size_t>(frames));
    for (int t = 0; t < frames; ++t) v[static_cast<std::size_t>(t)] = t * s + i;
  }
  return g;
}

template <typename S>
struct AttnCache {
  Mat<S> q, k, v;            // projected, full token sets
  std::vector<Mat<S>> soft;  // softmax per (group * heads + head)
  Mat<S> concat;             // gathered attention output, pre-Wo
};

// Grouped multi-head attention. For self-attention q_src == kv_src and the
// key groups equal the query groups; cross-attention uses one group of all
// queries against all memory tokens.
template <typename S>
Mat<S> attention(const Mat<S>& q_src, const Mat<S>& kv_src,
                 const std::vector<std::vector<int>>& q_groups,
                 const std::vector<std::vector<int>>& k_groups, int heads,
                 const AttentionParams<S>& p, AttnCache<S>& cache) {
  const Eigen::Index dim = q_src.cols();
  const Eigen::Index dh = dim / heads;
  const S scale = S(1) / std::sqrt(static_cast<S>(dh));

  cache.q = (q_src * p.wq).rowwise() + p.bq.row(0);
  cache.k = (kv_src * p.wk).rowwise() + p.bk.row(0);
  cache.v = (kv_src * p.wv).rowwise() + p.bv.row(0);
  cache.concat = Mat<S>::Zero(q_src.rows(), dim);
  cache.soft.assign(q_groups.size() * static_cast<std::size_t>(heads), {});

  for (std::size_t g = 0; g < q_groups.size(); ++g) {
    const auto& qi = q_groups[g];
    const auto& ki = k_groups[g];
    const Eigen::Index nq = static_cast<Eigen::Index>(qi.size());
    const Eigen::Index nk = static_cast<Eigen::Index>(ki.size());
    for (int h = 0; h < heads; ++h) {
      Mat<S> qg(nq, dh), kg(nk, dh), vg(nk, dh);
      for (Eigen::Index r = 0; r < nq; ++r) {
        qg.row(r) = cache.q.row(qi[static_cast<std::size_t>(r)]).segment(h * dh, dh);
      }
      for (Eigen::Index r = 0; r < nk; ++r) {
        kg.row(r) = cache.k.row(ki[static_cast<std::size_t>(r)]).segment(h * dh, dh);
        vg.row(r) = cache.v.row(ki[static_cast<std::size_t>(r)]).segment(h * dh, dh);
      }
      Mat<S> scores = qg * kg.transpose() * scale;
      for (Eigen::Index r = 0; r < nq; ++r) {
        const S mx = scores.row(r).maxCoeff();
        scores.row(r) = (scores.row(r).array() - mx).exp();
        scores.row(r) /= scores.row(r).sum();
      }
      cache.soft[g * static_cast<std::size_t>(heads) +
                 static_cast<std::size_t>(h)] = scores;
      const Mat<S> og = scores * vg;
      for (Eigen::Index r = 0; r < nq; ++r) {
        cache.concat.row(qi[static_cast<std::size_t>(r)]).segment(h * dh, dh) =
            og.row(r);
      }
    }
  }
  return (cache.concat * p.wo).rowwise() + p.bo.row(0);
}

template <typename S>
void attention_backward(const Mat<S>& dout, const Mat<S>& q_src,
                        const Mat<S>& kv_src,
                        const std::vector<std::vector<int>>& q_groups,
                        const std::vector<std::vector<int>>& k_groups,
                        int heads, const AttentionParams<S>& p,
                        const AttnCache<S>& cache, AttentionParams<S>& grad,
                        Mat<S>& dq_src, Mat<S>& dkv_src) {
  const Eigen::Index dim = q_src.cols();
  const Eigen::Index dh = dim / heads;
  const S scale = S(1) / std::sqrt(static_cast<S>(dh));

  grad.wo += cache.concat.transpose() * dout;
  grad.bo += dout.colwise().sum();
  const Mat<S> dconcat = dout * p.wo.transpose();

  Mat<S> dq = Mat<S>::Zero(cache.q.rows(), dim);
  Mat<S> dk = Mat<S>::Zero(cache.k.rows(), dim);
  Mat<S> dv = Mat<S>::Zero(cache.v.rows(), dim);

  for (std::size_t g = 0; g < q_groups.size(); ++g) {
    const auto& qi = q_groups[g];
    const auto& ki = k_groups[g];
    const Eigen::Index nq = static_cast<Eigen::Index>(qi.size());
    const Eigen::Index nk = static_cast<Eigen::Index>(ki.size());
    for (int h = 0; h < heads; ++h) {
      const Mat<S>& soft =
          cache.soft[g * static_cast<std::size_t>(heads) +
                     static_cast<std::size_t>(h)];
      Mat<S> qg(nq, dh), kg(nk, dh), vg(nk, dh), dog(nq, dh);
      for (Eigen::Index r = 0; r < nq; ++r) {
        qg.row(r) = cache.q.row(qi[static_cast<std::size_t>(r)]).segment(h * dh, dh);
        dog.row(r) =
            dconcat.row(qi[static_cast<std::size_t>(r)]).segment(h * dh, dh);
      }
      for (Eigen::Index r = 0; r < nk; ++r) {
        kg.row(r) = cache.k.row(ki[static_cast<std::size_t>(r)]).segment(h * dh, dh);
        vg.row(r) = cache.v.row(ki[static_cast<std::size_t>(r)]).segment(h * dh, dh);
      }

      const Mat<S> dvg = soft.transpose() * dog;
      Mat<S> dsoft = dog * vg.transpose();
      for (Eigen::Index r = 0; r < nq; ++r) {
        const S dot = dsoft.row(r).dot(soft.row(r));
        dsoft.row(r) =
            soft.row(r).cwiseProduct(dsoft.row(r).array() - dot).matrix();
      }
      const Mat<S> dqg = dsoft * kg * scale;
      const Mat<S> dkg = dsoft.transpose() * qg * scale;

      for (Eigen::Index r = 0; r < nq; ++r) {
        dq.row(qi[static_cast<std::size_t>(r)]).segment(h * dh, dh) += dqg.row(r);
      }
      for (Eigen::Index r = 0; r < nk; ++r) {
        dk.row(ki[static_cast<std::size_t>(r)]).segment(h * dh, dh) += dkg.row(r);
        dv.row(ki[static_cast<std::size_t>(r)]).segment(h * dh, dh) += dvg.row(r);
      }
    }
  }

  grad.wq += q_src.transpose() * dq;
  grad.bq += dq.colwise().sum();
  grad.wk += kv_src.transpose() * dk;
  grad.bk += dk.colwise().sum();
  grad.wv += kv_src.transpose() * dv;
  grad.bv += dv.colwise().sum();
  dq_src += dq * p.wq.transpose();
  dkv_src += dk * p.wk.transpose() + dv * p.wv.transpose();
}

template <typename S>
struct FfCache {
  Mat<S> pre;   // x*w1 + b1
  Mat<S> gelu;  // activation output
};

template <typename S>
S gelu(S x) {
  return S(0.5) * x * (S(1) + std::erf(x / std::sqrt(S(2))));
}

template <typename S>
S gelu_grad(S x) {
  const S cdf = S(0.5) * (S(1) + std::erf(x / std::sqrt(S(2))));
  const S pdf = std::exp(S(-0.5) * x * x) / std::sqrt(S(2) * S(M_PI));
  return cdf + x * pdf;
}

template <typename S>
Mat<S> feed_forward(const Mat<S>& x, const FeedForwardParams<S>& p,
                    FfCache<S>& cache) {
  cache.pre = (x * p.w1).rowwise() + p.b1.row(0);
  cache.gelu = cache.pre.unaryExpr([](S v) { return gelu(v); });
  return (cache.gelu * p.w2).rowwise() + p.b2.row(0);
}

template <typename S>
Mat<S> feed_forward_backward(const Mat<S>& dy, const Mat<S>& x,
                             const FeedForwardParams<S>& p,
                             const FfCache<S>& cache,
                             FeedForwardParams<S>& grad) {
  grad.w2 += cache.gelu.transpose() * dy;
  grad.b2 += dy.colwise().sum();
  Mat<S> dg = dy * p.w2.transpose();
  dg = dg.cwiseProduct(cache.pre.unaryExpr([](S v) { return gelu_grad(v); }));
  grad.w1 += x.transpose() * dg;
  grad.b1 += dg.colwise().sum();
  return dg * p.w1.transpose();
}

}  // namespace detail

// ---------------------------------------------------------------------------
// full forward/backward

template <typename S>
struct ForwardCache {
  int frames = 0, cameras = 0, joints = 0;
  detail::Groups groups;
  std::vector<std::vector<int>> cross_q, cross_k;
  Mat<S> features;  // N x 7 input rays
  Mat<S> x0;        // embedded tokens
  Mat<S> q0;        // readout queries
  struct Block {
    Mat<S> x_in, q_in;  // residual stream entering the block
    detail::LnCache<S> ln_spatial, ln_temporal, ln_ff;
    Mat<S> norm_spatial, norm_temporal, norm_ff;
    detail::AttnCache<S> spatial, temporal;
    detail::FfCache<S> ff;
    Mat<S> x_after_spatial, x_after_temporal, x_out;
    detail::LnCache<S> dec_ln_q, dec_ln_mem, dec_ln_ff;
    Mat<S> norm_q, norm_mem, norm_qff;
    detail::AttnCache<S> cross;
    detail::FfCache<S> dec_ff;
    Mat<S> q_after_cross, q_out;
  };
  std::vector<Block> blocks;
  detail::LnCache<S> ln_out;
  Mat<S> norm_out;
};

// Maps a ray-cloud window to per-frame body parameter rows (T x kStateDim),
// expressed in the cloud's local frame.
template <typename S>
Mat<S> net_forward(const NetParams<S>& net, const RayCloud& cloud,
                   ForwardCache<S>* cache_out = nullptr) {
  const NetConfig& cfg = net.config;
  if (cloud.joints != cfg.joints || cloud.cameras > cfg.max_cameras ||
      cloud.frames < 1 || cloud.frames > cfg.max_window) {
    throw std::invalid_argument("net_forward: ray cloud shape mismatch");
  }

  ForwardCache<S> local_cache;
  ForwardCache<S>& c = cache_out ? *cache_out : local_cache;
  const int T = cloud.frames, K = cloud.cameras, J = cloud.joints;
  const int N = T * K * J;
  c.frames = T;
  c.cameras = K;
  c.joints = J;
  c.groups = detail::make_groups(T, K, J);

  c.cross_q.assign(1, std::vector<int>(static_cast<std::size_t>(T)));
  c.cross_k.assign(1, std::vector<int>(static_cast<std::size_t>(N)));
  for (int t = 0; t < T; ++t) c.cross_q[0][static_cast<std::size_t>(t)] = t;
  for (int i = 0; i < N; ++i) c.cross_k[0][static_cast<std::size_t>(i)] = i;

  c.features = cloud.data.cast<S>();
  c.x0.resize(N, cfg.dim);
  for (int t = 0; t < T; ++t) {
    for (int k = 0; k < K; ++k) {
      for (int j = 0; j < J; ++j) {
        const int row = (t * K + k) * J + j;
        c.x0.row(row) = c.features.row(row) * net.token_w + net.token_b.row(0) +
                        net.camera_embed.row(k) + net.joint_embed.row(j) +
                        net.time_encoding.row(t);
      }
    }
  }
  c.q0.resize(T, cfg.dim);
  for (int t = 0; t < T; ++t) {
    c.q0.row(t) = net.readout.row(0) + net.time_encoding.row(t);
  }

  Mat<S> x = c.x0;
  Mat<S> q = c.q0;
  c.blocks.resize(static_cast<std::size_t>(cfg.blocks));
  for (int b = 0; b < cfg.blocks; ++b) {
    auto& bc = c.blocks[static_cast<std::size_t>(b)];
    const auto& bp = net.blocks[static_cast<std::size_t>(b)];
    bc.x_in = x;
    bc.q_in = q;

    bc.norm_spatial = detail::layer_norm(x, bp.ln_spatial, bc.ln_spatial);
    x += detail::attention(bc.norm_spatial, bc.norm_spatial, c.groups.spatial,
                           c.groups.spatial, cfg.heads, bp.spatial, bc.spatial);
    bc.x_after_spatial = x;

    bc.norm_temporal = detail::layer_norm(x, bp.ln_temporal, bc.ln_temporal);
    x += detail::attention(bc.norm_temporal, bc.norm_temporal,
                           c.groups.temporal, c.groups.temporal, cfg.heads,
                           bp.temporal, bc.temporal);
    bc.x_after_temporal = x;

    bc.norm_ff = detail::layer_norm(x, bp.ln_ff, bc.ln_ff);
    x += detail::feed_forward(bc.norm_ff, bp.ff, bc.ff);
    bc.x_out = x;

    // readout queries aggregate this block's features
    bc.norm_q = detail::layer_norm(q, bp.dec_ln_q, bc.dec_ln_q);
    bc.norm_mem = detail::layer_norm(x, bp.dec_ln_mem, bc.dec_ln_mem);
    q += detail::attention(bc.norm_q, bc.norm_mem, c.cross_q, c.cross_k,
                           cfg.heads, bp.cross, bc.cross);
    bc.q_after_cross = q;

    bc.norm_qff = detail::layer_norm(q, bp.dec_ln_ff, bc.dec_ln_ff);
    q += detail::feed_forward(bc.norm_qff, bp.dec_ff, bc.dec_ff);
    bc.q_out = q;
  }

  c.norm_out = detail::layer_norm(q, net.ln_out, c.ln_out);
  return (c.norm_out * net.head_w).rowwise() + net.head_b.row(0);
}

// Exact reverse pass; accumulates into `grad` (shaped like the net).
template <typename S>
void net_backward(const NetParams<S>& net, const ForwardCache<S>& c,
                  const Mat<S>& dpred, NetParams<S>& grad) {
  const NetConfig& cfg = net.config;
  const int T = c.frames, K = c.cameras, J = c.joints;

  grad.head_w += c.norm_out.transpose() * dpred;
  grad.head_b += dpred.colwise().sum();
  Mat<S> dq = detail::layer_norm_backward(Mat<S>(dpred * net.head_w.transpose()),
                                          net.ln_out, c.ln_out, grad.ln_out);
  Mat<S> dx = Mat<S>::Zero(T * K * J, cfg.dim);

  for (int b = cfg.blocks - 1; b >= 0; --b) {
    const auto& bc = c.blocks[static_cast<std::size_t>(b)];
    const auto& bp = net.blocks[static_cast<std::size_t>(b)];
    auto& bg = grad.blocks[static_cast<std::size_t>(b)];

    // decoder feed-forward
    {
      const Mat<S> dff = detail::feed_forward_backward(
          dq, bc.norm_qff, bp.dec_ff, bc.dec_ff, bg.dec_ff);
      dq += detail::layer_norm_backward(dff, bp.dec_ln_ff, bc.dec_ln_ff,
                                        bg.dec_ln_ff);
    }
    // cross attention: gradient flows to both queries and encoder memory
    {
      Mat<S> dnorm_q = Mat<S>::Zero(T, cfg.dim);
      Mat<S> dnorm_mem = Mat<S>::Zero(dx.rows(), cfg.dim);
      detail::attention_backward(dq, bc.norm_q, bc.norm_mem, c.cross_q,
                                 c.cross_k, cfg.heads, bp.cross, bc.cross,
                                 bg.cross, dnorm_q, dnorm_mem);
      dq += detail::layer_norm_backward(dnorm_q, bp.dec_ln_q, bc.dec_ln_q,
                                        bg.dec_ln_q);
      dx += detail::layer_norm_backward(dnorm_mem, bp.dec_ln_mem, bc.dec_ln_mem,
                                        bg.dec_ln_mem);
    }
    // encoder feed-forward
    {
      const Mat<S> dff = detail::feed_forward_backward(dx, bc.norm_ff, bp.ff,
                                                       bc.ff, bg.ff);
      dx += detail::layer_norm_backward(dff, bp.ln_ff, bc.ln_ff, bg.ln_ff);
    }
    // temporal attention
    {
      Mat<S> dnorm = Mat<S>::Zero(dx.rows(), cfg.dim);
      detail::attention_backward(dx, bc.norm_temporal, bc.norm_temporal,
                                 c.groups.temporal, c.groups.temporal,
                                 cfg.heads, bp.temporal, bc.temporal,
                                 bg.temporal, dnorm, dnorm);
      dx += detail::layer_norm_backward(dnorm, bp.ln_temporal, bc.ln_temporal,
                                        bg.ln_temporal);
    }
    // spatial attention
    {
      Mat<S> dnorm = Mat<S>::Zero(dx.rows(), cfg.dim);
      detail::attention_backward(dx, bc.norm_spatial, bc.norm_spatial,
                                 c.groups.spatial, c.groups.spatial, cfg.heads,
                                 bp.spatial, bc.spatial, bg.spatial, dnorm,
                                 dnorm);
      dx += detail::layer_norm_backward(dnorm, bp.ln_spatial, bc.ln_spatial,
                                        bg.ln_spatial);
    }
  }

  // embeddings
  for (int t = 0; t < T; ++t) {
    grad.readout += dq.row(t);
    for (int k = 0; k < K; ++k) {
      for (int j = 0; j < J; ++j) {
        const int row = (t * K + k) * J + j;
        grad.token_w += c.features.row(row).transpose() * dx.row(row);
        grad.token_b += dx.row(row);
        grad.camera_embed.row(k) += dx.row(row);
        grad.joint_embed.row(j) += dx.row(row);
      }
    }
  }
}

// ---------------------------------------------------------------------------
// differentiable forward kinematics and the training loss

namespace detail {

template <typename S>
using V3 = Eigen::Matrix<S, 3, 1>;
template <typename S>
using M3 = Eigen::Matrix<S, 3, 3>;

template <typename S>
struct Rot6Cache {
  V3<S> a1, a2, b1, u2, b2;
  S n1, n2, p;
};

// Gram-Schmidt with clamped norms so degenerate regressor output stays
// finite; the clamp never engages near valid rotations.
template <typename S>
M3<S> rot6d_fwd(const Eigen::Matrix<S, 6, 1>& r, Rot6Cache<S>& c) {
  c.a1 = r.template head<3>();
  c.a2 = r.template tail<3>();
  c.n1 = std::max(c.a1.norm(), S(1e-8));
  c.b1 = c.a1 / c.n1;
  c.p = c.b1.dot(c.a2);
  c.u2 = c.a2 - c.p * c.b1;
  c.n2 = std::max(c.u2.norm(), S(1e-8));
  c.b2 = c.u2 / c.n2;
  M3<S> m;
  m.col(0) = c.b1;
  m.col(1) = c.b2;
  m.col(2) = c.b1.cross(c.b2);
  return m;
}

template <typename S>
Eigen::Matrix<S, 6, 1> rot6d_bwd(const M3<S>& dm, const Rot6Cache<S>& c) {
  V3<S> db1 = dm.col(0);
  V3<S> db2 = dm.col(1);
  const V3<S> db3 = dm.col(2);
  // b3 = b1 x b2
  db1 += c.b2.cross(db3);
  db2 += db3.cross(c.b1);
  // b2 = u2 / n2
  const V3<S> du2 = (db2 - c.b2.dot(db2) * c.b2) / c.n2;
  // u2 = a2 - p b1
  V3<S> da2 = du2;
  const S dp = -c.b1.dot(du2);
  db1 -= c.p * du2;
  // p = b1 . a2
  db1 += dp * c.a2;
  da2 += dp * c.b1;
  // b1 = a1 / n1
  const V3<S> da1 = (db1 - c.b1.dot(db1) * c.b1) / c.n1;
  Eigen::Matrix<S, 6, 1> out;
  out << da1, da2;
  return out;
}

template <typename S>
struct FkCache {
  std::array<Rot6Cache<S>, kNumJoints> rot;
  Rot6Cache<S> root;
  std::array<M3<S>, kNumJoints> local_rot, global_rot;
  std::array<V3<S>, kNumJoints> local_pos, offset;
  std::array<S, kNumJoints> scale;
  M3<S> root_rot;
  V3<S> tau;
};

template <typename S>
void fk_fwd(const Skeleton& skel, const Eigen::Matrix<S, Eigen::Dynamic, 1>& h,
            Eigen::Matrix<S, kNumJoints, 3>& joints,
            Eigen::Matrix<S, kNumSurfacePoints, 3>& surface, FkCache<S>& c) {
  for (int j = 0; j < kNumJoints; ++j) {
    c.local_rot[static_cast<std::size_t>(j)] = rot6d_fwd<S>(
        h.template segment<6>(j * 6), c.rot[static_cast<std::size_t>(j)]);
  }
  c.root_rot =
      rot6d_fwd<S>(h.template segment<6>(kThetaDim + kNumShapeCoeffs), c.root);
  c.tau = h.template tail<3>();

  c.global_rot[0] = c.local_rot[0];
  c.local_pos[0].setZero();
  c.offset[0].setZero();
  c.scale[0] = S(1);
  for (int j = 1; j < kNumJoints; ++j) {
    const int p = skel.parent[static_cast<std::size_t>(j)];
    S s = S(1);
    for (int b = 0; b < kNumShapeCoeffs; ++b) {
      s += static_cast<S>(skel.shape_basis(b, j)) * h(kThetaDim + b);
    }
    c.scale[static_cast<std::size_t>(j)] = s;
    c.offset[static_cast<std::size_t>(j)] =
        skel.rest_offset.row(j).transpose().cast<S>() * s;
    c.global_rot[static_cast<std::size_t>(j)] =
        c.global_rot[static_cast<std::size_t>(p)] *
        c.local_rot[static_cast<std::size_t>(j)];
    c.local_pos[static_cast<std::size_t>(j)] =
        c.local_pos[static_cast<std::size_t>(p)] +
        c.global_rot[static_cast<std::size_t>(p)] *
            c.offset[static_cast<std::size_t>(j)];
  }
  for (int j = 0; j < kNumJoints; ++j) {
    joints.row(j) =
        (c.root_rot * c.local_pos[static_cast<std::size_t>(j)] + c.tau)
            .transpose();
  }
  for (int m = 0; m < kNumSurfacePoints; ++m) {
    const auto& sp = skel.surface[static_cast<std::size_t>(m)];
    const int j = sp.bone_joint;
    const int p = skel.parent[static_cast<std::size_t>(j)];
    const V3<S> local =
        c.local_pos[static_cast<std::size_t>(p)] +
        c.global_rot[static_cast<std::size_t>(p)] *
            (static_cast<S>(sp.along) * c.offset[static_cast<std::size_t>(j)] +
             sp.radial.cast<S>());
    surface.row(m) = (c.root_rot * local + c.tau).transpose();
  }
}

template <typename S>
void fk_bwd(const Skeleton& skel, const FkCache<S>& c,
            const Eigen::Matrix<S, kNumJoints, 3>& djoints,
            const Eigen::Matrix<S, kNumSurfacePoints, 3>& dsurface,
            Eigen::Matrix<S, Eigen::Dynamic, 1>& dh) {
  std::array<V3<S>, kNumJoints> dlocal_pos;
  std::array<M3<S>, kNumJoints> dglobal_rot;
  std::array<V3<S>, kNumJoints> doffset;
  for (int j = 0; j < kNumJoints; ++j) {
    dlocal_pos[static_cast<std::size_t>(j)].setZero();
    dglobal_rot[static_cast<std::size_t>(j)].setZero();
    doffset[static_cast<std::size_t>(j)].setZero();
  }
  M3<S> droot_rot = M3<S>::Zero();
  V3<S> dtau = V3<S>::Zero();

  for (int j = 0; j < kNumJoints; ++j) {
    const V3<S> dj = djoints.row(j).transpose();
    droot_rot += dj * c.local_pos[static_cast<std::size_t>(j)].transpose();
    dlocal_pos[static_cast<std::size_t>(j)] += c.root_rot.transpose() * dj;
    dtau += dj;
  }
  for (int m = 0; m < kNumSurfacePoints; ++m) {
    const auto& sp = skel.surface[static_cast<std::size_t>(m)];
    const int j = sp.bone_joint;
    const int p = skel.parent[static_cast<std::size_t>(j)];
    const V3<S> dv = dsurface.row(m).transpose();
    const V3<S> arm =
        static_cast<S>(sp.along) * c.offset[static_cast<std::size_t>(j)] +
        sp.radial.cast<S>();
    const V3<S> local = c.local_pos[static_cast<std::size_t>(p)] +
                        c.global_rot[static_cast<std::size_t>(p)] * arm;
    droot_rot += dv * local.transpose();
    dtau += dv;
    const V3<S> dlocal = c.root_rot.transpose() * dv;
    dlocal_pos[static_cast<std::size_t>(p)] += dlocal;
    dglobal_rot[static_cast<std::size_t>(p)] += dlocal * arm.transpose();
    doffset[static_cast<std::size_t>(j)] +=
        static_cast<S>(sp.along) *
        (c.global_rot[static_cast<std::size_t>(p)].transpose() * dlocal);
  }

  // reverse topological order: children push into parents
  for (int j = kNumJoints - 1; j >= 1; --j) {
    const int p = skel.parent[static_cast<std::size_t>(j)];
    dlocal_pos[static_cast<std::size_t>(p)] +=
        dlocal_pos[static_cast<std::size_t>(j)];
    dglobal_rot[static_cast<std::size_t>(p)] +=
        dlocal_pos[static_cast<std::size_t>(j)] *
        c.offset[static_cast<std::size_t>(j)].transpose();
    doffset[static_cast<std::size_t>(j)] +=
        c.global_rot[static_cast<std::size_t>(p)].transpose() *
        dlocal_pos[static_cast<std::size_t>(j)];
    dglobal_rot[static_cast<std::size_t>(p)] +=
        dglobal_rot[static_cast<std::size_t>(j)] *
        c.local_rot[static_cast<std::size_t>(j)].transpose();
  }

  for (int j = 0; j < kNumJoints; ++j) {
    M3<S> dlocal_rot;
    if (j == 0) {
      dlocal_rot = dglobal_rot[0];
    } else {
      const int p = skel.parent[static_cast<std::size_t>(j)];
      dlocal_rot = c.global_rot[static_cast<std::size_t>(p)].transpose() *
                   dglobal_rot[static_cast<std::size_t>(j)];
    }
    dh.template segment<6>(j * 6) +=
        rot6d_bwd<S>(dlocal_rot, c.rot[static_cast<std::size_t>(j)]);
    if (j > 0) {
      const S ds =
          skel.rest_offset.row(j).cast<S>().dot(
              doffset[static_cast<std::size_t>(j)].transpose());
      for (int b = 0; b < kNumShapeCoeffs; ++b) {
        dh(kThetaDim + b) += static_cast<S>(skel.shape_basis(b, j)) * ds;
      }
    }
  }
  dh.template segment<6>(kThetaDim + kNumShapeCoeffs) +=
      rot6d_bwd<S>(droot_rot, c.root);
  dh.template tail<3>() += dtau;
}

}  // namespace detail

template <typename S>
struct LossResult {
  S total = 0, smpl = 0, joints3d = 0, vertices = 0, velocity = 0;
  Mat<S> dpred;  // d total / d pred, same shape as pred
};

// Weighted sum of parameter, joint, surface-point and joint-velocity
// penalties between predicted and ground-truth parameter rows (both in the
// window-local frame), with its exact gradient.
template <typename S>
LossResult<S> compute_loss(const Skeleton& skel, const Mat<S>& pred,
                           const Mat<S>& gt, const LossWeights& w,
                           double rate_hz) {
  if (pred.rows() != gt.rows() || pred.cols() != kStateDim ||
      gt.cols() != kStateDim) {
    throw std::invalid_argument("compute_loss: shape mismatch");
  }
  const int T = static_cast<int>(pred.rows());
  const S rate = static_cast<S>(rate_hz);

  LossResult<S> out;
  out.dpred = Mat<S>::Zero(T, kStateDim);

  std::vector<detail::FkCache<S>> caches(static_cast<std::size_t>(T));
  std::vector<Eigen::Matrix<S, kNumJoints, 3>> jp(static_cast<std::size_t>(T)),
      jg(static_cast<std::size_t>(T));
  std::vector<Eigen::Matrix<S, kNumSurfacePoints, 3>> vp(
      static_cast<std::size_t>(T)),
      vg(static_cast<std::size_t>(T));
  std::vector<Eigen::Matrix<S, kNumJoints, 3>> dj(
      static_cast<std::size_t>(T), Eigen::Matrix<S, kNumJoints, 3>::Zero());
  std::vector<Eigen::Matrix<S, kNumSurfacePoints, 3>> dv(
      static_cast<std::size_t>(T),
      Eigen::Matrix<S, kNumSurfacePoints, 3>::Zero());

  detail::FkCache<S> gt_cache;
  for (int t = 0; t < T; ++t) {
    const Eigen::Matrix<S, Eigen::Dynamic, 1> hp = pred.row(t).transpose();
    const Eigen::Matrix<S, Eigen::Dynamic, 1> hg = gt.row(t).transpose();
    detail::fk_fwd(skel, hp, jp[static_cast<std::size_t>(t)],
                   vp[static_cast<std::size_t>(t)],
                   caches[static_cast<std::size_t>(t)]);
    detail::fk_fwd(skel, hg, jg[static_cast<std::size_t>(t)],
                   vg[static_cast<std::size_t>(t)], gt_cache);

    const Eigen::Matrix<S, Eigen::Dynamic, 1> diff = hp - hg;
    out.smpl += diff.squaredNorm() / static_cast<S>(T);
    out.dpred.row(t) += (S(2) * static_cast<S>(w.smpl) / static_cast<S>(T)) *
                        diff.transpose();

    const auto ej = jp[static_cast<std::size_t>(t)] -
                    jg[static_cast<std::size_t>(t)];
    out.joints3d += ej.squaredNorm() / static_cast<S>(T * kNumJoints);
    dj[static_cast<std::size_t>(t)] +=
        (S(2) * static_cast<S>(w.joints3d) /
         static_cast<S>(T * kNumJoints)) *
        ej;

    const auto ev = vp[static_cast<std::size_t>(t)] -
                    vg[static_cast<std::size_t>(t)];
    out.vertices += ev.squaredNorm() / static_cast<S>(T * kNumSurfacePoints);
    dv[static_cast<std::size_t>(t)] +=
        (S(2) * static_cast<S>(w.vertices) /
         static_cast<S>(T * kNumSurfacePoints)) *
        ev;
  }

  if (T >= 2) {
    const S norm = static_cast<S>((T - 1) * kNumJoints);
    for (int t = 0; t + 1 < T; ++t) {
      const auto dp = (jp[static_cast<std::size_t>(t) + 1] -
                       jp[static_cast<std::size_t>(t)]) *
                      rate;
      const auto dg = (jg[static_cast<std::size_t>(t) + 1] -
                       jg[static_cast<std::size_t>(t)]) *
                      rate;
      const auto ed = dp - dg;
      out.velocity += ed.squaredNorm() / norm;
      const auto g = (S(2) * static_cast<S>(w.velocity) / norm) * ed * rate;
      dj[static_cast<std::size_t>(t) + 1] += g;
      dj[static_cast<std::size_t>(t)] -= g;
    }
  }

  for (int t = 0; t < T; ++t) {
    Eigen::Matrix<S, Eigen::Dynamic, 1> dh =
        Eigen::Matrix<S, Eigen::Dynamic, 1>::Zero(kStateDim);
    detail::fk_bwd(skel, caches[static_cast<std::size_t>(t)],
                   dj[static_cast<std::size_t>(t)],
                   dv[static_cast<std::size_t>(t)], dh);
    out.dpred.row(t) += dh.transpose();
  }

  out.total = static_cast<S>(w.smpl) * out.smpl +
              static_cast<S>(w.joints3d) * out.joints3d +
              static_cast<S>(w.vertices) * out.vertices +
              static_cast<S>(w.velocity) * out.velocity;
  return out;
}

// Converts local-frame parameter rows into world-frame body states via the
// cloud's normalizing transform. Rotation blocks are canonicalized through
// Gram-Schmidt; a degenerate block falls back to the identity rotation so
// the output is total.
std::vector<BodyState> states_from_rows(const Eigen::MatrixXd& rows,
                                        const SE3d& frame);

template <typename S>
std::vector<BodyState> net_states(const NetParams<S>& net,
                                  const RayCloud& cloud) {
  const Mat<S> pred = net_forward(net, cloud);
  return states_from_rows(pred.template cast<double>(), cloud.frame);
}

}  // namespace raylift
