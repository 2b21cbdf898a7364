#pragma once

#include <Eigen/Core>
#include <algorithm>
#include <cmath>
#include <cstdint>
#include <numeric>
#include <stdexcept>
#include <vector>

#include "fairmix/rng.hpp"

namespace fairmix {

inline constexpr int kTimeEmbedDims = 16;

struct DiffusionSchedule {
  int T = 0;
  std::vector<double> betas;
  std::vector<double> alpha_bars;
};

// Linear beta schedule; alpha_bars are exact running products of (1 - beta).
inline DiffusionSchedule make_schedule(int T, double beta_start,
                                       double beta_end) {
  if (T < 1) throw std::invalid_argument("make_schedule: T must be >= 1");
  if (!(beta_start > 0.0 && beta_start <= beta_end && beta_end < 1.0))
    throw std::invalid_argument("make_schedule: need 0 < beta_start <= beta_end < 1");
  DiffusionSchedule s;
  s.T = T;
  s.betas.resize(T);
  s.alpha_bars.resize(T);
  double prod = 1.0;
  for (int t = 0; t < T; ++t) {
    s.betas[t] = T == 1 ? beta_start
                        : beta_start + (beta_end - beta_start) * t / (T - 1);
    prod *= 1.0 - s.betas[t];
    s.alpha_bars[t] = prod;
  }
  return s;
}

// One-hot label/attribute conditioning. Index 0 of each block is the null
// value, used for unlabelled data and the unconditional guidance branch.
struct ConditionVector {
  int label = 0;        // 0..num_classes (0 = null)
  int num_classes = 0;  // real classes, block length is num_classes + 1
  int attr = 0;         // 0..num_attrs (0 = null)
  int num_attrs = 0;

  bool is_null() const { return label == 0 && attr == 0; }

  ConditionVector as_null() const {
    ConditionVector c = *this;
    c.label = 0;
    c.attr = 0;
    return c;
  }

  int dims() const { return num_classes + 1 + num_attrs + 1; }

  Eigen::VectorXd encode() const {
    Eigen::VectorXd v = Eigen::VectorXd::Zero(dims());
    v[label] = 1.0;
    v[num_classes + 1 + attr] = 1.0;
    return v;
  }
};

inline Eigen::VectorXd time_embedding(int t, int T) {
  Eigen::VectorXd e(kTimeEmbedDims);
  const double pos = static_cast<double>(t) / std::max(T - 1, 1);
  for (int i = 0; i < kTimeEmbedDims / 2; ++i) {
    const double freq =
        std::pow(10000.0, -2.0 * i / static_cast<double>(kTimeEmbedDims));
    e[2 * i] = std::sin(pos * 1000.0 * freq);
    e[2 * i + 1] = std::cos(pos * 1000.0 * freq);
  }
  return e;
}

// Fully connected noise-prediction network with tanh hidden activations
// (smooth, so gradients check cleanly against finite differences).
struct DenoiserNet {
  int data_dim = 0;
  int num_classes = 0;
  int num_attrs = 0;
  std::vector<Eigen::MatrixXd> W;
  std::vector<Eigen::VectorXd> b;

  int input_dim() const {
    return data_dim + kTimeEmbedDims + num_classes + 1 + num_attrs + 1;
  }
  std::size_t layer_count() const { return W.size(); }

  std::size_t parameter_count() const {
    std::size_t n = 0;
    for (std::size_t l = 0; l < W.size(); ++l)
      n += static_cast<std::size_t>(W[l].size()) + b[l].size();
    return n;
  }
};

inline DenoiserNet make_denoiser(int data_dim, int num_classes, int num_attrs,
                                 const std::vector<int>& hidden,
                                 std::uint64_t seed) {
  DenoiserNet net;
  net.data_dim = data_dim;
  net.num_classes = num_classes;
  net.num_attrs = num_attrs;
  Rng rng(seed);
  std::vector<int> widths;
  widths.push_back(net.input_dim());
  for (int h : hidden) widths.push_back(h);
  widths.push_back(data_dim);
  for (std::size_t l = 0; l + 1 < widths.size(); ++l) {
    const double scale = 1.0 / std::sqrt(static_cast<double>(widths[l]));
    Eigen::MatrixXd w(widths[l + 1], widths[l]);
    for (int r = 0; r < w.rows(); ++r)
      for (int c = 0; c < w.cols(); ++c) w(r, c) = scale * rng.normal();
    net.W.push_back(std::move(w));
    net.b.push_back(Eigen::VectorXd::Zero(widths[l + 1]));
  }
  return net;
}

namespace diffdetail {

struct ForwardCache {
  std::vector<Eigen::VectorXd> activations;  // a0 = input, ..., aL = output
};

inline Eigen::VectorXd net_forward(const DenoiserNet& net,
                                   const Eigen::VectorXd& x, int t, int T,
                                   const ConditionVector& cond,
                                   ForwardCache* cache = nullptr) {
  Eigen::VectorXd in(net.input_dim());
  in << x, time_embedding(t, T), cond.encode();
  Eigen::VectorXd a = in;
  if (cache) cache->activations = {a};
  for (std::size_t l = 0; l < net.layer_count(); ++l) {
    Eigen::VectorXd z = net.W[l] * a + net.b[l];
    a = (l + 1 == net.layer_count()) ? z : z.array().tanh().matrix();
    if (cache) cache->activations.push_back(a);
  }
  return a;
}

}  // namespace diffdetail

// Raw denoiser evaluation: predicted noise for (x_t, t, condition).
inline Eigen::VectorXd denoise(const DenoiserNet& net, const Eigen::VectorXd& xt,
                               int t, int T, const ConditionVector& cond) {
  return diffdetail::net_forward(net, xt, t, T, cond);
}

// Closed-form forward marginal draw: x_t = sqrt(abar_t) x0 + sqrt(1-abar_t) eps.
inline std::pair<Eigen::VectorXd, Eigen::VectorXd> forward_diffuse(
    const Eigen::VectorXd& x0, int t, const DiffusionSchedule& sched,
    std::uint64_t seed) {
  if (t < 0 || t >= sched.T)
    throw std::invalid_argument("forward_diffuse: t out of range");
  Rng rng(seed);
  Eigen::VectorXd eps(x0.size());
  for (int i = 0; i < x0.size(); ++i) eps[i] = rng.normal();
  const double ab = sched.alpha_bars[t];
  Eigen::VectorXd xt = std::sqrt(ab) * x0 + std::sqrt(1.0 - ab) * eps;
  return {xt, eps};
}

struct DiffusionExample {
  Eigen::VectorXd x;
  ConditionVector cond;
  bool labelled = true;  // unlabelled examples always train with null cond
};

// A fixed training item for gradient evaluation: noise and timestep pinned.
struct NoisePredictionItem {
  Eigen::VectorXd x0;
  Eigen::VectorXd eps;
  int t = 0;
  ConditionVector cond;
};

struct NetGradients {
  std::vector<Eigen::MatrixXd> dW;
  std::vector<Eigen::VectorXd> db;
};

inline NetGradients zero_gradients(const DenoiserNet& net) {
  NetGradients g;
  for (std::size_t l = 0; l < net.layer_count(); ++l) {
    g.dW.push_back(Eigen::MatrixXd::Zero(net.W[l].rows(), net.W[l].cols()));
    g.db.push_back(Eigen::VectorXd::Zero(net.b[l].size()));
  }
  return g;
}

// Mean-squared noise-prediction loss over the items, with analytic gradients
// accumulated into grads (which must be zero-initialized by the caller).
inline double denoise_loss_and_grad(const DenoiserNet& net,
                                    const std::vector<NoisePredictionItem>& items,
                                    const DiffusionSchedule& sched,
                                    NetGradients* grads) {
  if (items.empty())
    throw std::invalid_argument("denoise_loss_and_grad: empty batch");
  double loss = 0.0;
  const double inv = 1.0 / items.size();
  for (const auto& item : items) {
    const double ab = sched.alpha_bars[item.t];
    const Eigen::VectorXd xt =
        std::sqrt(ab) * item.x0 + std::sqrt(1.0 - ab) * item.eps;
    diffdetail::ForwardCache cache;
    const Eigen::VectorXd pred =
        diffdetail::net_forward(net, xt, item.t, sched.T, item.cond, &cache);
    const Eigen::VectorXd err = pred - item.eps;
    loss += inv * err.squaredNorm() / net.data_dim;
    if (!grads) continue;
    // Backprop.
    Eigen::VectorXd delta = (2.0 * inv / net.data_dim) * err;
    for (int l = static_cast<int>(net.layer_count()) - 1; l >= 0; --l) {
      grads->dW[l].noalias() += delta * cache.activations[l].transpose();
      grads->db[l] += delta;
      if (l > 0) {
        Eigen::VectorXd upstream = net.W[l].transpose() * delta;
        const auto& a = cache.activations[l];
        delta = (upstream.array() * (1.0 - a.array().square())).matrix();
      }
    }
  }
  return loss;
}

// One seeded pass of mini-batch gradient descent (with momentum) on the noise
// prediction objective. Labelled conditions are replaced by the null condition
// with probability drop_prob; unlabelled examples always train unconditioned.
inline double train_epoch(DenoiserNet& net,
                          const std::vector<DiffusionExample>& data,
                          const DiffusionSchedule& sched, double lr,
                          double drop_prob, std::uint64_t seed,
                          int batch_size = 64, double momentum = 0.9,
                          NetGradients* velocity = nullptr) {
  if (data.empty()) throw std::invalid_argument("train_epoch: empty data");
  if (!(drop_prob >= 0.0 && drop_prob <= 1.0))
    throw std::invalid_argument("train_epoch: drop_prob must be in [0, 1]");
  Rng rng(seed);
  std::vector<std::size_t> order(data.size());
  std::iota(order.begin(), order.end(), 0);
  rng.shuffle(order);

  NetGradients local_vel;
  if (!velocity) {
    local_vel = zero_gradients(net);
    velocity = &local_vel;
  }

  double total_loss = 0.0;
  std::size_t batches = 0;
  for (std::size_t start = 0; start < order.size();
       start += static_cast<std::size_t>(batch_size)) {
    const std::size_t end =
        std::min(order.size(), start + static_cast<std::size_t>(batch_size));
    std::vector<NoisePredictionItem> items;
    items.reserve(end - start);
    for (std::size_t i = start; i < end; ++i) {
      const auto& ex = data[order[i]];
      NoisePredictionItem item;
      item.x0 = ex.x;
      item.t = static_cast<int>(rng.uniform_index(sched.T));
      item.eps.resize(ex.x.size());
      for (int q = 0; q < ex.x.size(); ++q) item.eps[q] = rng.normal();
      const double u = rng.uniform();  // drawn regardless of labelled state
      const bool drop = !ex.labelled || u < drop_prob;
      item.cond = drop ? ex.cond.as_null() : ex.cond;
      items.push_back(std::move(item));
    }
    NetGradients grads = zero_gradients(net);
    total_loss += denoise_loss_and_grad(net, items, sched, &grads);
    ++batches;
    for (std::size_t l = 0; l < net.layer_count(); ++l) {
      velocity->dW[l] = momentum * velocity->dW[l] - lr * grads.dW[l];
      velocity->db[l] = momentum * velocity->db[l] - lr * grads.db[l];
      net.W[l] += velocity->dW[l];
      net.b[l] += velocity->db[l];
    }
  }
  return total_loss / batches;
}

// Classifier-free guidance: (1+w) eps(x,t,cond) - w eps(x,t,null).
inline Eigen::VectorXd cfg_denoise(const DenoiserNet& net,
                                   const Eigen::VectorXd& xt, int t, int T,
                                   const ConditionVector& cond, double w) {
  if (cond.is_null())
    throw std::invalid_argument("cfg_denoise: condition must be non-null");
  const Eigen::VectorXd cond_eps = denoise(net, xt, t, T, cond);
  if (w == 0.0) return cond_eps;
  const Eigen::VectorXd null_eps = denoise(net, xt, t, T, cond.as_null());
  return (1.0 + w) * cond_eps - w * null_eps;
}

// Ancestral reverse-process sampling with guidance at every step. Reverse
// step variance is fixed to beta_t. States are clamped to a large finite box
// so untrained networks still produce finite output.
inline std::vector<Eigen::VectorXd> sample(const DenoiserNet& net,
                                           const DiffusionSchedule& sched,
                                           const ConditionVector& cond,
                                           double w, std::size_t n,
                                           std::uint64_t seed) {
  if (n < 1) throw std::invalid_argument("sample: n must be >= 1");
  Rng root(seed);
  std::vector<Eigen::VectorXd> out;
  out.reserve(n);
  for (std::size_t i = 0; i < n; ++i) {
    Rng rng = root.child(i);
    Eigen::VectorXd x(net.data_dim);
    for (int q = 0; q < net.data_dim; ++q) x[q] = rng.normal();
    for (int t = sched.T - 1; t >= 0; --t) {
      const double beta = sched.betas[t];
      const double ab = sched.alpha_bars[t];
      const Eigen::VectorXd eps = cfg_denoise(net, x, t, sched.T, cond, w);
      x = (x - beta / std::sqrt(1.0 - ab) * eps) / std::sqrt(1.0 - beta);
      if (t > 0) {
        for (int q = 0; q < net.data_dim; ++q)
          x[q] += std::sqrt(beta) * rng.normal();
      }
      x = x.cwiseMax(-1e6).cwiseMin(1e6);
    }
    out.push_back(x);
  }
  return out;
}

// ---- Upsampler degradation preprocessing -----------------------------------

struct DegradeOptions {
  bool enable_antialias = true;  // anti-alias filter applied with prob 0.5
  bool enable_noise = true;      // additive noise applied with prob 0.2
  bool enable_blur = true;       // blur sigma drawn as |N(0, 0.2)|
};

namespace imgdetail {

inline Eigen::MatrixXd smooth3x3(const Eigen::MatrixXd& img) {
  const auto H = img.rows(), W = img.cols();
  auto clampi = [](Eigen::Index v, Eigen::Index n) {
    return std::max<Eigen::Index>(0, std::min(v, n - 1));
  };
  // Separable binomial [1 2 1]/4 pass in each direction.
  Eigen::MatrixXd tmp(H, W), out(H, W);
  for (Eigen::Index r = 0; r < H; ++r)
    for (Eigen::Index c = 0; c < W; ++c)
      tmp(r, c) = 0.25 * (img(clampi(r - 1, H), c) + 2.0 * img(r, c) +
                          img(clampi(r + 1, H), c));
  for (Eigen::Index r = 0; r < H; ++r)
    for (Eigen::Index c = 0; c < W; ++c)
      out(r, c) = 0.25 * (tmp(r, clampi(c - 1, W)) + 2.0 * tmp(r, c) +
                          tmp(r, clampi(c + 1, W)));
  return out;
}

inline Eigen::MatrixXd gaussian_blur7(const Eigen::MatrixXd& img, double sigma) {
  if (sigma < 1e-6) return img;
  Eigen::Matrix<double, 7, 1> kernel;
  double sum = 0.0;
  for (int i = 0; i < 7; ++i) {
    const double d = i - 3;
    kernel[i] = std::exp(-0.5 * d * d / (sigma * sigma));
    sum += kernel[i];
  }
  kernel /= sum;
  const auto H = img.rows(), W = img.cols();
  auto clampi = [](Eigen::Index v, Eigen::Index n) {
    return std::max<Eigen::Index>(0, std::min(v, n - 1));
  };
  Eigen::MatrixXd tmp(H, W), out(H, W);
  for (Eigen::Index r = 0; r < H; ++r)
    for (Eigen::Index c = 0; c < W; ++c) {
      double acc = 0.0;
      for (int k = -3; k <= 3; ++k) acc += kernel[k + 3] * img(clampi(r + k, H), c);
      tmp(r, c) = acc;
    }
  for (Eigen::Index r = 0; r < H; ++r)
    for (Eigen::Index c = 0; c < W; ++c) {
      double acc = 0.0;
      for (int k = -3; k <= 3; ++k) acc += kernel[k + 3] * tmp(r, clampi(c + k, W));
      out(r, c) = acc;
    }
  return out;
}

}  // namespace imgdetail

// Bilinear resize with corner alignment (output corners map onto input
// corners), so a linear ramp is reproduced exactly.
inline Eigen::MatrixXd bilinear_resize(const Eigen::MatrixXd& img,
                                       Eigen::Index H2, Eigen::Index W2) {
  const auto H = img.rows(), W = img.cols();
  Eigen::MatrixXd out(H2, W2);
  const double sr = H2 > 1 ? static_cast<double>(H - 1) / (H2 - 1) : 0.0;
  const double sc = W2 > 1 ? static_cast<double>(W - 1) / (W2 - 1) : 0.0;
  for (Eigen::Index r = 0; r < H2; ++r) {
    const double fr = r * sr;
    const auto r0 = static_cast<Eigen::Index>(std::floor(fr));
    const auto r1 = std::min(r0 + 1, H - 1);
    const double wr = fr - r0;
    for (Eigen::Index c = 0; c < W2; ++c) {
      const double fc = c * sc;
      const auto c0 = static_cast<Eigen::Index>(std::floor(fc));
      const auto c1 = std::min(c0 + 1, W - 1);
      const double wc = fc - c0;
      out(r, c) = (1 - wr) * ((1 - wc) * img(r0, c0) + wc * img(r0, c1)) +
                  wr * ((1 - wc) * img(r1, c0) + wc * img(r1, c1));
    }
  }
  return out;
}

// Quantization to 256 integer bins in [0, 255]; idempotent.
inline Eigen::MatrixXd quantize256(const Eigen::MatrixXd& img) {
  return img.unaryExpr([](double v) {
    return std::round(std::max(0.0, std::min(255.0, v)));
  });
}

// Upsampler training-input degradation: resize (optional anti-alias p=0.5),
// additive Gaussian noise (p=0.2, sigma 4.0 in [0,255] units), 7x7 Gaussian
// blur with sigma = |N(0, 0.2)|, quantize to 256 bins, normalize to [-1, 1].
inline Eigen::MatrixXd degrade_for_upsampler(const Eigen::MatrixXd& img,
                                             Eigen::Index H2, Eigen::Index W2,
                                             std::uint64_t seed,
                                             const DegradeOptions& opts = {}) {
  if (H2 < img.rows() || W2 < img.cols())
    throw std::invalid_argument("degrade_for_upsampler: target smaller than source");
  Rng rng(seed);
  Eigen::MatrixXd work = img;
  if (opts.enable_antialias && rng.uniform() < 0.5)
    work = imgdetail::smooth3x3(work);
  work = bilinear_resize(work, H2, W2);
  if (opts.enable_noise && rng.uniform() < 0.2) {
    for (Eigen::Index r = 0; r < H2; ++r)
      for (Eigen::Index c = 0; c < W2; ++c) work(r, c) += 4.0 * rng.normal();
  }
  if (opts.enable_blur) {
    const double sigma = std::abs(rng.normal(0.0, 0.2));
    work = imgdetail::gaussian_blur7(work, sigma);
  }
  work = quantize256(work);
  return work / 127.5 - Eigen::MatrixXd::Constant(H2, W2, 1.0);
}

}  // namespace fairmix
