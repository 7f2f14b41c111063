#pragma once

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <numeric>
#include <sstream>
#include <stdexcept>
#include <string>
#include <vector>

#include <Eigen/Core>

#include "melgen/rng.hpp"

namespace melgen::vae {

enum class Method { kBeta = 0, kAnnealed = 1, kFactor = 2 };

inline const char* method_name(Method m) {
  switch (m) {
    case Method::kBeta: return "beta";
    case Method::kAnnealed: return "annealed";
    case Method::kFactor: return "factor";
  }
  throw std::invalid_argument("bad method code");
}

struct TrainConfig {
  Method method = Method::kBeta;
  double beta = 1.0;           // beta-VAE regularizer weight
  double kl_threshold = 50.0;  // tau: KL is penalized only above this
  double gamma = 1.0;          // annealed-VAE regularizer weight
  double capacity = 50.0;      // C: target KL
  double gamma_tc = 1.0;       // factor-VAE total-correlation weight

  double learning_rate = 1e-4;
  double adam_beta1 = 0.9, adam_beta2 = 0.999, adam_eps = 1e-8;
  double disc_learning_rate = 1e-4;
  double disc_beta1 = 0.8, disc_beta2 = 0.9, disc_eps = 1e-8;

  int batch = 512;
  int epochs = 50;
  int warmup_epochs = 10;           // regularizer weight 0 (beta / annealed only)
  std::int64_t anneal_iters = 100000;  // exponential ramp length after warm-up

  std::uint64_t seed = 0;
  int subset_size = 10000;
  int latent_dim = 32;
  int hidden_dim = 256;
  int disc_hidden = 256;
  double disc_leak = 0.2;
};

template <class T>
using Mat = Eigen::Matrix<T, Eigen::Dynamic, Eigen::Dynamic>;

// ---- parameters ----

template <class T>
struct Linear {
  Mat<T> w;
  Mat<T> b;  // column vector

  void setZero() {
    w.setZero();
    b.setZero();
  }
};

namespace vae_detail {

// Xavier-uniform weights, zero biases; coefficients drawn in storage order.
template <class T>
void init_linear(Linear<T>& layer, int out_dim, int in_dim, Rng& rng) {
  layer.w.resize(out_dim, in_dim);
  layer.b = Mat<T>::Zero(out_dim, 1);
  const double limit = std::sqrt(6.0 / (in_dim + out_dim));
  for (Eigen::Index j = 0; j < layer.w.cols(); ++j) {
    for (Eigen::Index i = 0; i < layer.w.rows(); ++i) {
      layer.w(i, j) = static_cast<T>((2.0 * rng.uniform01() - 1.0) * limit);
    }
  }
}

}  // namespace vae_detail

// Dense encoder/decoder: one tanh hidden layer each, linear heads.
// Samples live in columns: x is (16*V) x B, z is D x B.
template <class T>
struct MlpParams {
  Linear<T> enc_hidden, enc_mu, enc_logvar, dec_hidden, dec_out;
  int seq_len = 16;
  int vocab = 0, hidden = 0, latent = 0;

  int input_dim() const { return seq_len * vocab; }

  static MlpParams init(int vocab, int hidden, int latent, Rng& rng, int seq_len = 16) {
    MlpParams p;
    p.seq_len = seq_len;
    p.vocab = vocab;
    p.hidden = hidden;
    p.latent = latent;
    const int in = seq_len * vocab;
    vae_detail::init_linear(p.enc_hidden, hidden, in, rng);
    vae_detail::init_linear(p.enc_mu, latent, hidden, rng);
    vae_detail::init_linear(p.enc_logvar, latent, hidden, rng);
    vae_detail::init_linear(p.dec_hidden, hidden, latent, rng);
    vae_detail::init_linear(p.dec_out, in, hidden, rng);
    return p;
  }

  MlpParams zeros_like() const {
    MlpParams g = *this;
    g.enc_hidden.setZero();
    g.enc_mu.setZero();
    g.enc_logvar.setZero();
    g.dec_hidden.setZero();
    g.dec_out.setZero();
    return g;
  }

  std::vector<Mat<T>*> tensors() {
    return {&enc_hidden.w, &enc_hidden.b, &enc_mu.w, &enc_mu.b, &enc_logvar.w,
            &enc_logvar.b, &dec_hidden.w, &dec_hidden.b, &dec_out.w, &dec_out.b};
  }
  std::vector<const Mat<T>*> tensors() const {
    return {&enc_hidden.w, &enc_hidden.b, &enc_mu.w, &enc_mu.b, &enc_logvar.w,
            &enc_logvar.b, &dec_hidden.w, &dec_hidden.b, &dec_out.w, &dec_out.b};
  }
};

// Total-correlation discriminator: two leaky-rectifier hidden layers and
// two output logits (joint vs permuted).
template <class T>
struct Discriminator {
  Linear<T> h1, h2, out;
  double leak = 0.2;

  static Discriminator init(int latent, int hidden, double leak, Rng& rng) {
    Discriminator d;
    d.leak = leak;
    vae_detail::init_linear(d.h1, hidden, latent, rng);
    vae_detail::init_linear(d.h2, hidden, hidden, rng);
    vae_detail::init_linear(d.out, 2, hidden, rng);
    return d;
  }

  Discriminator zeros_like() const {
    Discriminator g = *this;
    g.h1.setZero();
    g.h2.setZero();
    g.out.setZero();
    return g;
  }

  std::vector<Mat<T>*> tensors() { return {&h1.w, &h1.b, &h2.w, &h2.b, &out.w, &out.b}; }
  std::vector<const Mat<T>*> tensors() const { return {&h1.w, &h1.b, &h2.w, &h2.b, &out.w, &out.b}; }
};

// ---- forward pieces ----

template <class T>
void encode(const MlpParams<T>& p, const Mat<T>& x, Mat<T>& mu, Mat<T>& logvar, Mat<T>* hidden_out = nullptr) {
  if (x.rows() != p.input_dim()) throw std::invalid_argument("encoder input has wrong row count");
  Mat<T> h = ((p.enc_hidden.w * x).colwise() + p.enc_hidden.b.col(0)).array().tanh().matrix();
  mu = (p.enc_mu.w * h).colwise() + p.enc_mu.b.col(0);
  logvar = (p.enc_logvar.w * h).colwise() + p.enc_logvar.b.col(0);
  if (hidden_out) *hidden_out = std::move(h);
}

// z = mu + exp(logvar / 2) * noise
template <class T>
Mat<T> reparameterize(const Mat<T>& mu, const Mat<T>& logvar, const Mat<T>& noise) {
  if (mu.rows() != logvar.rows() || mu.cols() != logvar.cols() || mu.rows() != noise.rows() ||
      mu.cols() != noise.cols()) {
    throw std::invalid_argument("reparameterize requires equal shapes");
  }
  return mu.array() + (logvar.array() / 2).exp() * noise.array();
}

template <class T>
Mat<T> decode(const MlpParams<T>& p, const Mat<T>& z, Mat<T>* hidden_out = nullptr) {
  if (z.rows() != p.latent) throw std::invalid_argument("decoder input has wrong row count");
  Mat<T> h = ((p.dec_hidden.w * z).colwise() + p.dec_hidden.b.col(0)).array().tanh().matrix();
  Mat<T> logits = (p.dec_out.w * h).colwise() + p.dec_out.b.col(0);
  if (hidden_out) *hidden_out = std::move(h);
  return logits;
}

// ---- losses ----

// Per-slot softmax cross entropy summed over the 16 slots, mean over the
// batch, in nats. Optionally writes d(ce)/d(logits).
template <class T>
double cross_entropy(const Mat<T>& logits, const Eigen::MatrixXi& targets, int vocab, Mat<T>* dlogits = nullptr) {
  const int seq_len = static_cast<int>(targets.rows());
  if (logits.rows() != static_cast<Eigen::Index>(seq_len) * vocab || logits.cols() != targets.cols()) {
    throw std::invalid_argument("logits and targets are misaligned");
  }
  const Eigen::Index batch = logits.cols();
  if (dlogits) dlogits->resize(logits.rows(), logits.cols());

  double total = 0.0;
  for (Eigen::Index b = 0; b < batch; ++b) {
    for (int s = 0; s < seq_len; ++s) {
      const auto block = logits.col(b).segment(static_cast<Eigen::Index>(s) * vocab, vocab);
      const T peak = block.maxCoeff();
      const double sum_exp = (block.array() - peak).exp().template cast<double>().sum();
      const double lse = static_cast<double>(peak) + std::log(sum_exp);
      const int target = targets(s, b);
      if (target < 0 || target >= vocab) throw std::invalid_argument("target id outside vocabulary");
      total += lse - static_cast<double>(block[target]);
      if (dlogits) {
        auto dblock = dlogits->col(b).segment(static_cast<Eigen::Index>(s) * vocab, vocab);
        dblock = ((block.array() - peak).exp() / static_cast<T>(sum_exp)).matrix();
        dblock[target] -= static_cast<T>(1);
      }
    }
  }
  if (dlogits) *dlogits /= static_cast<T>(batch);
  return total / static_cast<double>(batch);
}

// 0.5 * sum_d(exp(logvar) + mu^2 - 1 - logvar), mean over the batch.
template <class T>
double kl_divergence(const Mat<T>& mu, const Mat<T>& logvar) {
  if (mu.rows() != logvar.rows() || mu.cols() != logvar.cols()) {
    throw std::invalid_argument("kl_divergence requires equal shapes");
  }
  const auto mu_d = mu.template cast<double>().array();
  const auto lv_d = logvar.template cast<double>().array();
  const double total = 0.5 * (lv_d.exp() + mu_d.square() - 1.0 - lv_d).sum();
  return total / static_cast<double>(mu.cols());
}

inline double loss_beta(double ce, double kl, double beta, double tau) {
  return ce + beta * std::max(kl - tau, 0.0);
}

inline double loss_annealed(double ce, double kl, double gamma, double capacity) {
  return ce + gamma * std::abs(kl - capacity);
}

inline double loss_factor(double ce, double kl, double capacity, double gamma_tc, double tc) {
  return ce + std::abs(kl - capacity) + gamma_tc * tc;
}

// Saturating exponential ramp: 0 at t=0, 0.999*target at t=T, clamped to
// target past T. Monotone nondecreasing in t.
inline double anneal(std::int64_t t, double target, std::int64_t total_iters) {
  if (t < 0 || total_iters <= 0) throw std::invalid_argument("anneal requires t >= 0 and T > 0");
  if (t > total_iters) return target;
  constexpr double k = 6.907755278982137;  // ln(1000)
  return target * (1.0 - std::exp(-k * static_cast<double>(t) / static_cast<double>(total_iters)));
}

// ---- total correlation ----

namespace vae_detail {

template <class T>
Mat<T> leaky(const Mat<T>& pre, double leak) {
  return pre.array().max(pre.array() * static_cast<T>(leak)).matrix();
}

template <class T>
Mat<T> leaky_grad(const Mat<T>& pre, double leak) {
  return pre.unaryExpr([leak](T v) { return v > T(0) ? T(1) : static_cast<T>(leak); });
}

template <class T>
struct DiscForward {
  Mat<T> pre1, a1, pre2, a2, logits;  // logits: 2 x B
};

template <class T>
void disc_forward(const Discriminator<T>& d, const Mat<T>& z, DiscForward<T>& f) {
  f.pre1 = (d.h1.w * z).colwise() + d.h1.b.col(0);
  f.a1 = leaky(f.pre1, d.leak);
  f.pre2 = (d.h2.w * f.a1).colwise() + d.h2.b.col(0);
  f.a2 = leaky(f.pre2, d.leak);
  f.logits = (d.out.w * f.a2).colwise() + d.out.b.col(0);
}

}  // namespace vae_detail

// Density-ratio estimate of the total correlation: mean over the batch of
// (joint logit - permuted logit) on the real z batch. Optionally returns
// the gradient with respect to z (discriminator held fixed).
template <class T>
double tc_estimate(const Discriminator<T>& d, const Mat<T>& z, Mat<T>* dz = nullptr) {
  vae_detail::DiscForward<T> f;
  vae_detail::disc_forward(d, z, f);
  const double batch = static_cast<double>(z.cols());
  const double tc = (f.logits.row(0) - f.logits.row(1)).template cast<double>().sum() / batch;
  if (dz) {
    Mat<T> dlogits = Mat<T>::Zero(2, z.cols());
    dlogits.row(0).setConstant(static_cast<T>(1.0 / batch));
    dlogits.row(1).setConstant(static_cast<T>(-1.0 / batch));
    const Mat<T> da2 = (d.out.w.transpose() * dlogits).cwiseProduct(vae_detail::leaky_grad(f.pre2, d.leak));
    const Mat<T> da1 = (d.h2.w.transpose() * da2).cwiseProduct(vae_detail::leaky_grad(f.pre1, d.leak));
    *dz = d.h1.w.transpose() * da1;
  }
  return tc;
}

// Independently shuffles each latent dimension's values across the batch.
template <class T>
Mat<T> permute_dims(const Mat<T>& z, Rng& rng) {
  if (z.cols() < 2) throw std::invalid_argument("permute_dims requires a batch of at least 2");
  Mat<T> out = z;
  std::vector<std::uint32_t> order(static_cast<std::size_t>(z.cols()));
  for (Eigen::Index d = 0; d < z.rows(); ++d) {
    std::iota(order.begin(), order.end(), 0u);
    rng.shuffle(order);
    for (Eigen::Index b = 0; b < z.cols(); ++b) out(d, b) = z(d, order[static_cast<std::size_t>(b)]);
  }
  return out;
}

// ---- full VAE loss with manual gradients ----

struct LossWeights {
  Method method = Method::kBeta;
  double beta = 0.0;       // effective (possibly annealed) value
  double tau = 50.0;
  double gamma = 1.0;
  double capacity = 0.0;   // effective (possibly annealed) value
  double gamma_tc = 0.0;
};

struct LossBreakdown {
  double ce = 0.0, kl = 0.0, tc = 0.0, total = 0.0;
};

namespace vae_detail {

inline double regularizer(const LossWeights& w, double kl, double tc) {
  switch (w.method) {
    case Method::kBeta: return loss_beta(0.0, kl, w.beta, w.tau);
    case Method::kAnnealed: return loss_annealed(0.0, kl, w.gamma, w.capacity);
    case Method::kFactor: return loss_factor(0.0, kl, w.capacity, w.gamma_tc, tc);
  }
  throw std::invalid_argument("bad method code");
}

// d(regularizer)/d(kl); the boundary case uses the inactive branch.
inline double regularizer_kl_slope(const LossWeights& w, double kl) {
  switch (w.method) {
    case Method::kBeta: return kl > w.tau ? w.beta : 0.0;
    case Method::kAnnealed: return kl > w.capacity ? w.gamma : (kl < w.capacity ? -w.gamma : 0.0);
    case Method::kFactor: return kl > w.capacity ? 1.0 : (kl < w.capacity ? -1.0 : 0.0);
  }
  throw std::invalid_argument("bad method code");
}

}  // namespace vae_detail

// Forward pass, loss, and (optionally) gradients for all VAE parameters.
// The discriminator is treated as a constant in this loss; it has its own
// training step. `noise` must match mu's shape.
template <class T>
LossBreakdown vae_loss(const MlpParams<T>& p, const Discriminator<T>* disc, const Mat<T>& x,
                       const Eigen::MatrixXi& targets, const Mat<T>& noise, const LossWeights& w,
                       MlpParams<T>* grads = nullptr, Mat<T>* z_out = nullptr, Mat<T>* logits_out = nullptr) {
  if (w.method == Method::kFactor && disc == nullptr) {
    throw std::invalid_argument("factor method requires a discriminator");
  }
  const Eigen::Index batch = x.cols();
  if (batch == 0) throw std::invalid_argument("empty batch");

  // forward
  Mat<T> h1;
  Mat<T> mu, logvar;
  encode(p, x, mu, logvar, &h1);
  const Mat<T> std_dev = (logvar.array() / 2).exp().matrix();
  Mat<T> z = mu + std_dev.cwiseProduct(noise);
  Mat<T> h2;
  const Mat<T> logits = decode(p, z, &h2);

  LossBreakdown out;
  Mat<T> dlogits;
  out.ce = cross_entropy(logits, targets, p.vocab, grads ? &dlogits : nullptr);
  out.kl = kl_divergence(mu, logvar);

  Mat<T> dz_tc;
  if (w.method == Method::kFactor) {
    out.tc = tc_estimate(*disc, z, grads ? &dz_tc : nullptr);
  }
  out.total = out.ce + vae_detail::regularizer(w, out.kl, out.tc);

  if (z_out) *z_out = z;
  if (logits_out) *logits_out = logits;
  if (!grads) return out;

  // backward: decoder
  grads->dec_out.w.noalias() = dlogits * h2.transpose();
  grads->dec_out.b = dlogits.rowwise().sum();
  const Mat<T> dh2 = (p.dec_out.w.transpose() * dlogits).cwiseProduct((1 - h2.array().square()).matrix());
  grads->dec_hidden.w.noalias() = dh2 * z.transpose();
  grads->dec_hidden.b = dh2.rowwise().sum();
  Mat<T> dz = p.dec_hidden.w.transpose() * dh2;
  if (w.method == Method::kFactor && w.gamma_tc != 0.0) dz += static_cast<T>(w.gamma_tc) * dz_tc;

  // backward: reparameterization and KL
  const double kl_slope = vae_detail::regularizer_kl_slope(w, out.kl);
  const T inv_batch = static_cast<T>(1.0 / static_cast<double>(batch));
  Mat<T> dmu = dz + (static_cast<T>(kl_slope) * inv_batch) * mu;
  Mat<T> dlogvar = (dz.array() * noise.array() * std_dev.array() * T(0.5)).matrix() +
                   ((static_cast<T>(kl_slope) * inv_batch * T(0.5)) *
                    (logvar.array().exp() - T(1)).matrix());

  // backward: encoder
  grads->enc_mu.w.noalias() = dmu * h1.transpose();
  grads->enc_mu.b = dmu.rowwise().sum();
  grads->enc_logvar.w.noalias() = dlogvar * h1.transpose();
  grads->enc_logvar.b = dlogvar.rowwise().sum();
  const Mat<T> dh1 = (p.enc_mu.w.transpose() * dmu + p.enc_logvar.w.transpose() * dlogvar)
                         .cwiseProduct((1 - h1.array().square()).matrix());
  grads->enc_hidden.w.noalias() = dh1 * x.transpose();
  grads->enc_hidden.b = dh1.rowwise().sum();
  return out;
}

// Two-class softmax cross entropy for the discriminator: the real batch
// (label 0) against the dimension-permuted batch (label 1).
template <class T>
double disc_loss(const Discriminator<T>& d, const Mat<T>& z_joint, const Mat<T>& z_perm,
                 Discriminator<T>* grads = nullptr) {
  if (z_joint.rows() != z_perm.rows()) throw std::invalid_argument("latent size mismatch");
  const Eigen::Index b1 = z_joint.cols(), b2 = z_perm.cols();
  Mat<T> z(z_joint.rows(), b1 + b2);
  z.leftCols(b1) = z_joint;
  z.rightCols(b2) = z_perm;

  vae_detail::DiscForward<T> f;
  vae_detail::disc_forward(d, z, f);

  const double n = static_cast<double>(b1 + b2);
  double total = 0.0;
  Mat<T> dlogits;
  if (grads) dlogits.resize(2, b1 + b2);
  for (Eigen::Index c = 0; c < b1 + b2; ++c) {
    const int label = c < b1 ? 0 : 1;
    const T peak = f.logits.col(c).maxCoeff();
    const double e0 = std::exp(static_cast<double>(f.logits(0, c) - peak));
    const double e1 = std::exp(static_cast<double>(f.logits(1, c) - peak));
    const double lse = static_cast<double>(peak) + std::log(e0 + e1);
    total += lse - static_cast<double>(f.logits(label, c));
    if (grads) {
      dlogits(0, c) = static_cast<T>(e0 / (e0 + e1) - (label == 0 ? 1.0 : 0.0));
      dlogits(1, c) = static_cast<T>(e1 / (e0 + e1) - (label == 1 ? 1.0 : 0.0));
    }
  }
  total /= n;
  if (!grads) return total;

  dlogits /= static_cast<T>(n);
  grads->out.w.noalias() = dlogits * f.a2.transpose();
  grads->out.b = dlogits.rowwise().sum();
  const Mat<T> da2 = (d.out.w.transpose() * dlogits).cwiseProduct(vae_detail::leaky_grad(f.pre2, d.leak));
  grads->h2.w.noalias() = da2 * f.a1.transpose();
  grads->h2.b = da2.rowwise().sum();
  const Mat<T> da1 = (d.h2.w.transpose() * da2).cwiseProduct(vae_detail::leaky_grad(f.pre1, d.leak));
  grads->h1.w.noalias() = da1 * z.transpose();
  grads->h1.b = da1.rowwise().sum();
  return total;
}

// ---- ADAM ----

template <class T>
struct AdamState {
  std::vector<Mat<T>> m, v;
  std::int64_t step = 0;

  template <class Tensors>
  static AdamState like(const Tensors& params) {
    AdamState s;
    for (const auto* t : params) {
      s.m.push_back(Mat<T>::Zero(t->rows(), t->cols()));
      s.v.push_back(Mat<T>::Zero(t->rows(), t->cols()));
    }
    return s;
  }
};

// Bias-corrected first/second-moment update.
template <class T>
void adam_step(const std::vector<Mat<T>*>& params, const std::vector<const Mat<T>*>& grads, AdamState<T>& state,
               double lr, double beta1, double beta2, double eps) {
  if (params.size() != grads.size() || params.size() != state.m.size()) {
    throw std::invalid_argument("adam_step tensor lists are misaligned");
  }
  state.step += 1;
  const double bc1 = 1.0 - std::pow(beta1, static_cast<double>(state.step));
  const double bc2 = 1.0 - std::pow(beta2, static_cast<double>(state.step));
  for (std::size_t i = 0; i < params.size(); ++i) {
    Mat<T>& p = *params[i];
    const Mat<T>& g = *grads[i];
    if (p.rows() != g.rows() || p.cols() != g.cols()) throw std::invalid_argument("gradient shape mismatch");
    state.m[i] = static_cast<T>(beta1) * state.m[i] + static_cast<T>(1.0 - beta1) * g;
    state.v[i] = (static_cast<T>(beta2) * state.v[i].array() + static_cast<T>(1.0 - beta2) * g.array().square())
                     .matrix();
    const auto m_hat = state.m[i].array() / static_cast<T>(bc1);
    const auto v_hat = state.v[i].array() / static_cast<T>(bc2);
    p.array() -= static_cast<T>(lr) * m_hat / (v_hat.sqrt() + static_cast<T>(eps));
  }
}

// ---- training ----

struct TrainHistory {
  std::vector<double> ce, kl, loss, accuracy, reg_weight;

  std::string to_csv() const {
    std::ostringstream out;
    out.precision(12);
    out << "epoch,ce,kl,loss,accuracy,reg_weight\n";
    for (std::size_t e = 0; e < loss.size(); ++e) {
      out << e << ',' << ce[e] << ',' << kl[e] << ',' << loss[e] << ',' << accuracy[e] << ',' << reg_weight[e]
          << '\n';
    }
    return out.str();
  }
};

// Token-id dataset: one column per item, one row per slot.
struct Dataset {
  Eigen::MatrixXi targets;  // seq_len x N
  int vocab = 0;
};

// Fraction of slots whose argmax logit (first maximum on ties) equals the
// target token, averaged over the batch.
template <class T>
double reconstruction_accuracy(const Mat<T>& logits, const Eigen::MatrixXi& targets, int vocab) {
  const int seq_len = static_cast<int>(targets.rows());
  if (logits.rows() != static_cast<Eigen::Index>(seq_len) * vocab || logits.cols() != targets.cols()) {
    throw std::invalid_argument("logits and targets are misaligned");
  }
  double correct = 0.0;
  for (Eigen::Index b = 0; b < logits.cols(); ++b) {
    for (int s = 0; s < seq_len; ++s) {
      const auto block = logits.col(b).segment(static_cast<Eigen::Index>(s) * vocab, vocab);
      int best = 0;
      for (int j = 1; j < vocab; ++j) {
        if (block[j] > block[best]) best = j;
      }
      correct += best == targets(s, b);
    }
  }
  return correct / static_cast<double>(logits.cols() * seq_len);
}

template <class T>
struct TrainResult {
  MlpParams<T> params;
  Discriminator<T> disc;       // trained only by the factor method
  Eigen::MatrixXd codes;       // N x D posterior means
  TrainHistory history;
};

namespace vae_detail {

template <class T>
void fill_onehot(const Eigen::MatrixXi& targets, const std::vector<std::uint32_t>& order, Eigen::Index first,
                 Eigen::Index count, int vocab, Mat<T>& x, Eigen::MatrixXi& batch_targets) {
  const int seq_len = static_cast<int>(targets.rows());
  x.setZero();
  for (Eigen::Index b = 0; b < count; ++b) {
    const auto item = order[static_cast<std::size_t>(first + b)];
    for (int s = 0; s < seq_len; ++s) {
      const int id = targets(s, static_cast<Eigen::Index>(item));
      x(static_cast<Eigen::Index>(s) * vocab + id, b) = T(1);
      batch_targets(s, b) = id;
    }
  }
}

template <class T>
void fill_normal(Mat<T>& m, Rng& rng) {
  for (Eigen::Index b = 0; b < m.cols(); ++b) {
    for (Eigen::Index d = 0; d < m.rows(); ++d) m(d, b) = static_cast<T>(rng.normal());
  }
}

}  // namespace vae_detail

// Deterministic training loop: full batches only (N / batch per epoch,
// reshuffled each epoch), regularizer warm-up and annealing per method,
// FactorVAE discriminator step after each VAE step.
template <class T = float>
TrainResult<T> train(const TrainConfig& cfg, const Dataset& data) {
  const Eigen::Index n = data.targets.cols();
  if (n < cfg.batch) throw std::invalid_argument("subset smaller than one batch");
  if (cfg.batch < 1) throw std::invalid_argument("batch must be >= 1");
  if (cfg.method == Method::kFactor && cfg.batch < 2) {
    throw std::invalid_argument("factor method requires batch >= 2");
  }

  const int seq_len = static_cast<int>(data.targets.rows());
  Rng rng(cfg.seed);
  TrainResult<T> result;
  result.params = MlpParams<T>::init(data.vocab, cfg.hidden_dim, cfg.latent_dim, rng, seq_len);
  const bool factor = cfg.method == Method::kFactor;
  if (factor) {
    result.disc = Discriminator<T>::init(cfg.latent_dim, cfg.disc_hidden, cfg.disc_leak, rng);
  }

  auto vae_params = result.params.tensors();
  AdamState<T> vae_state = AdamState<T>::like(vae_params);
  AdamState<T> disc_state;
  std::vector<Mat<T>*> disc_params;
  if (factor) {
    disc_params = result.disc.tensors();
    disc_state = AdamState<T>::like(disc_params);
  }

  MlpParams<T> grads = result.params.zeros_like();
  Discriminator<T> disc_grads = factor ? result.disc.zeros_like() : Discriminator<T>{};

  const Eigen::Index batches_per_epoch = n / cfg.batch;
  std::vector<std::uint32_t> order(static_cast<std::size_t>(n));
  std::iota(order.begin(), order.end(), 0u);

  Mat<T> x(static_cast<Eigen::Index>(seq_len) * data.vocab, cfg.batch);
  Eigen::MatrixXi batch_targets(seq_len, cfg.batch);
  Mat<T> noise(cfg.latent_dim, cfg.batch);

  const bool anneals = cfg.method != Method::kFactor;
  std::int64_t post_warmup_iter = 0;

  for (int epoch = 0; epoch < cfg.epochs; ++epoch) {
    rng.shuffle(order);
    const bool warmup = anneals && epoch < cfg.warmup_epochs;

    double ep_ce = 0.0, ep_kl = 0.0, ep_loss = 0.0, ep_acc = 0.0, ep_weight = 0.0;
    for (Eigen::Index it = 0; it < batches_per_epoch; ++it) {
      LossWeights w;
      w.method = cfg.method;
      w.tau = cfg.kl_threshold;
      w.gamma = cfg.gamma;
      switch (cfg.method) {
        case Method::kBeta:
          w.beta = warmup ? 0.0 : anneal(post_warmup_iter, cfg.beta, cfg.anneal_iters);
          break;
        case Method::kAnnealed:
          w.gamma = warmup ? 0.0 : cfg.gamma;
          w.capacity = warmup ? 0.0 : anneal(post_warmup_iter, cfg.capacity, cfg.anneal_iters);
          break;
        case Method::kFactor:
          w.capacity = cfg.capacity;
          w.gamma_tc = cfg.gamma_tc;
          break;
      }
      if (!warmup) ++post_warmup_iter;

      vae_detail::fill_onehot(data.targets, order, it * cfg.batch, cfg.batch, data.vocab, x, batch_targets);
      vae_detail::fill_normal(noise, rng);

      Mat<T> z, logits;
      const LossBreakdown loss = vae_loss(result.params, factor ? &result.disc : nullptr, x, batch_targets,
                                          noise, w, &grads, &z, &logits);
      if (!std::isfinite(loss.total)) {
        throw std::runtime_error("non-finite loss at epoch " + std::to_string(epoch) + ", iteration " +
                                 std::to_string(it) + " (ce=" + std::to_string(loss.ce) +
                                 ", kl=" + std::to_string(loss.kl) + ")");
      }
      {
        auto grad_list = grads.tensors();
        std::vector<const Mat<T>*> const_grads(grad_list.begin(), grad_list.end());
        adam_step(vae_params, const_grads, vae_state, cfg.learning_rate, cfg.adam_beta1, cfg.adam_beta2,
                  cfg.adam_eps);
      }

      if (factor) {
        const Mat<T> z_perm = permute_dims(z, rng);
        disc_loss(result.disc, z, z_perm, &disc_grads);
        auto dgrad_list = disc_grads.tensors();
        std::vector<const Mat<T>*> const_dgrads(dgrad_list.begin(), dgrad_list.end());
        adam_step(disc_params, const_dgrads, disc_state, cfg.disc_learning_rate, cfg.disc_beta1, cfg.disc_beta2,
                  cfg.disc_eps);
      }

      // epoch stats reflect the forward pass before this step's update
      ep_ce += loss.ce;
      ep_kl += loss.kl;
      ep_loss += loss.total;
      ep_acc += reconstruction_accuracy(logits, batch_targets, data.vocab);
      switch (cfg.method) {
        case Method::kBeta: ep_weight = w.beta; break;
        case Method::kAnnealed: ep_weight = w.capacity; break;
        case Method::kFactor: ep_weight = w.gamma_tc; break;
      }
    }
    const double inv = 1.0 / static_cast<double>(batches_per_epoch);
    result.history.ce.push_back(ep_ce * inv);
    result.history.kl.push_back(ep_kl * inv);
    result.history.loss.push_back(ep_loss * inv);
    result.history.accuracy.push_back(ep_acc * inv);
    result.history.reg_weight.push_back(ep_weight);
  }

  // posterior means for every item, in dataset order
  result.codes.resize(n, cfg.latent_dim);
  std::vector<std::uint32_t> ident(static_cast<std::size_t>(n));
  std::iota(ident.begin(), ident.end(), 0u);
  for (Eigen::Index first = 0; first < n; first += cfg.batch) {
    const Eigen::Index count = std::min<Eigen::Index>(cfg.batch, n - first);
    Mat<T> xb = Mat<T>::Zero(static_cast<Eigen::Index>(seq_len) * data.vocab, count);
    Eigen::MatrixXi tb(seq_len, count);
    vae_detail::fill_onehot(data.targets, ident, first, count, data.vocab, xb, tb);
    Mat<T> mu, logvar;
    encode(result.params, xb, mu, logvar);
    result.codes.middleRows(first, count) = mu.transpose().template cast<double>();
  }
  return result;
}

// ---- gradient checking ----

struct GradCheckResult {
  double max_rel_error = 0.0;
  int coords = 0;
};

// Central finite differences on sampled coordinates against the analytic
// gradients. The reparameterization noise is held fixed.
template <class T>
GradCheckResult grad_check(MlpParams<T>& params, const Discriminator<T>* disc, const Mat<T>& x,
                           const Eigen::MatrixXi& targets, const Mat<T>& noise, const LossWeights& w,
                           int samples_per_tensor, double step, Rng& rng) {
  MlpParams<T> grads = params.zeros_like();
  vae_loss(params, disc, x, targets, noise, w, &grads);

  auto param_list = params.tensors();
  auto grad_list = grads.tensors();

  GradCheckResult result;
  for (std::size_t t = 0; t < param_list.size(); ++t) {
    Mat<T>& tensor = *param_list[t];
    const Eigen::Index size = tensor.size();
    for (int s = 0; s < samples_per_tensor; ++s) {
      const Eigen::Index flat = static_cast<Eigen::Index>(rng.below(static_cast<std::uint64_t>(size)));
      const T saved = tensor(flat);
      tensor(flat) = saved + static_cast<T>(step);
      const double up = vae_loss(params, disc, x, targets, noise, w).total;
      tensor(flat) = saved - static_cast<T>(step);
      const double down = vae_loss(params, disc, x, targets, noise, w).total;
      tensor(flat) = saved;
      const double numeric = (up - down) / (2.0 * step);
      const double analytic = static_cast<double>((*grad_list[t])(flat));
      const double rel = std::abs(analytic - numeric) / std::max(std::abs(analytic) + std::abs(numeric), 1e-5);
      result.max_rel_error = std::max(result.max_rel_error, rel);
      ++result.coords;
    }
  }
  return result;
}

}  // namespace melgen::vae
