#include "plf/training.hpp"

#include <algorithm>
#include <cmath>

#include "binio.hpp"
#include "plf/error.hpp"

namespace plf {

EncoderState EncoderState::identity_init(uint32_t backbone_id, uint32_t dim) {
  if (dim == 0) fail(Errc::invalid_argument, "encoder: dimension must be positive");
  EncoderState s;
  s.backbone_id = backbone_id;
  s.in_dim = s.out_dim = dim;
  s.weight.assign(size_t(dim) * dim, 0.0);
  for (uint32_t i = 0; i < dim; ++i) s.weight[size_t(i) * dim + i] = 1.0;
  s.bias.assign(dim, 0.0);
  s.momentum_weight = s.weight;
  s.momentum_bias = s.bias;
  return s;
}

void EncoderState::round_to_f32() {
  auto snap = [](std::vector<double>& v) {
    for (double& x : v) x = static_cast<double>(static_cast<float>(x));
  };
  snap(weight);
  snap(bias);
  snap(momentum_weight);
  snap(momentum_bias);
}

double learning_rate(int t, const LrSchedule& sched) {
  if (sched.lr_base <= 0.0) fail(Errc::invalid_argument, "learning_rate: lr_base must be > 0");
  if (sched.warmup_iterations < 1)
    fail(Errc::invalid_argument, "learning_rate: warmup_iterations must be >= 1");
  if (t < 1 || t > sched.horizon)
    fail(Errc::invalid_argument, "learning_rate: iteration " + std::to_string(t) +
                                     " outside [1, " + std::to_string(sched.horizon) + "]");
  if (t <= sched.warmup_iterations)
    return sched.lr_base * static_cast<double>(t) / static_cast<double>(sched.warmup_iterations);
  return sched.lr_base;
}

namespace {

std::vector<std::vector<int32_t>> members_by_cluster(const ClusterAssignment& assign) {
  std::vector<std::vector<int32_t>> members(assign.num_clusters);
  for (size_t i = 0; i < assign.labels.size(); ++i) {
    int32_t c = assign.labels[i];
    if (c == kOutlier) continue;
    if (c < 0 || c >= assign.num_clusters)
      fail(Errc::invalid_argument, "cluster label out of range: " + std::to_string(c));
    members[c].push_back(static_cast<int32_t>(i));
  }
  for (int32_t c = 0; c < assign.num_clusters; ++c)
    if (members[c].empty()) fail(Errc::data, "empty cluster id " + std::to_string(c));
  return members;
}

}  // namespace

ProxySet select_proxies(const ClusterAssignment& assign, const FeatureMatrix& feats, Rng& rng,
                        ProxyMode mode) {
  if (assign.labels.size() != feats.rows)
    fail(Errc::invalid_argument, "select_proxies: assignment and features sizes differ");
  if (assign.num_clusters < 1) fail(Errc::invalid_argument, "select_proxies: no clusters");
  auto members = members_by_cluster(assign);

  ProxySet p;
  p.dim = feats.dim;
  p.count = static_cast<uint32_t>(assign.num_clusters);
  p.vectors.resize(size_t(p.count) * p.dim);
  p.source_indices.resize(p.count, -1);
  for (int32_t c = 0; c < assign.num_clusters; ++c) {
    double* dst = p.vectors.data() + size_t(c) * p.dim;
    if (mode == ProxyMode::random_sample) {
      int32_t pick = members[c][rng.uniform_below(members[c].size())];
      p.source_indices[c] = pick;
      auto src = feats.row(static_cast<uint32_t>(pick));
      std::copy(src.begin(), src.end(), dst);
    } else {
      for (int32_t m : members[c]) {
        auto src = feats.row(static_cast<uint32_t>(m));
        for (uint32_t k = 0; k < p.dim; ++k) dst[k] += src[k];
      }
      double sq = 0.0;
      for (uint32_t k = 0; k < p.dim; ++k) sq += dst[k] * dst[k];
      double norm = std::sqrt(sq);
      if (norm < 1e-150) fail(Errc::data, "zero-vector proxy for cluster " + std::to_string(c));
      for (uint32_t k = 0; k < p.dim; ++k) dst[k] /= norm;
    }
  }
  return p;
}

std::vector<Batch> make_batches(const ClusterAssignment& assign, Rng& rng, int clusters_per_batch,
                                int samples_per_cluster) {
  if (clusters_per_batch < 1 || samples_per_cluster < 1)
    fail(Errc::invalid_argument, "make_batches: batch shape must be positive");
  if (assign.num_clusters < clusters_per_batch)
    fail(Errc::data, "too few clusters: " + std::to_string(assign.num_clusters) + " < " +
                         std::to_string(clusters_per_batch));
  auto members = members_by_cluster(assign);

  std::vector<int32_t> perm(assign.num_clusters);
  for (int32_t c = 0; c < assign.num_clusters; ++c) perm[c] = c;
  rng.shuffle(perm);

  const int num_batches = assign.num_clusters / clusters_per_batch;
  std::vector<Batch> batches(num_batches);
  const int k = samples_per_cluster;
  for (int b = 0; b < num_batches; ++b) {
    Batch& batch = batches[b];
    batch.sample_indices.reserve(size_t(clusters_per_batch) * k);
    batch.labels.reserve(size_t(clusters_per_batch) * k);
    for (int slot = 0; slot < clusters_per_batch; ++slot) {
      int32_t c = perm[size_t(b) * clusters_per_batch + slot];
      const auto& mem = members[c];
      if (mem.size() >= static_cast<size_t>(k)) {
        std::vector<int32_t> pool = mem;
        for (int t = 0; t < k; ++t) {
          size_t j = t + rng.uniform_below(pool.size() - t);
          std::swap(pool[t], pool[j]);
          batch.sample_indices.push_back(pool[t]);
          batch.labels.push_back(c);
        }
      } else {
        for (int32_t m : mem) {
          batch.sample_indices.push_back(m);
          batch.labels.push_back(c);
        }
        for (size_t t = mem.size(); t < static_cast<size_t>(k); ++t) {
          batch.sample_indices.push_back(mem[rng.uniform_below(mem.size())]);
          batch.labels.push_back(c);
        }
      }
    }
  }
  return batches;
}

LossResult loss_proxy(const FeatureMatrix& feats, const std::vector<int32_t>& labels,
                      const ProxySet& proxies, double tau) {
  if (tau <= 0.0) fail(Errc::invalid_argument, "loss_proxy: tau must be > 0");
  if (feats.rows == 0) fail(Errc::invalid_argument, "loss_proxy: empty batch");
  if (labels.size() != feats.rows)
    fail(Errc::invalid_argument, "loss_proxy: labels size does not match batch");
  if (proxies.dim != feats.dim)
    fail(Errc::invalid_argument, "loss_proxy: proxy dimension mismatch");
  for (int32_t l : labels)
    if (l < 0 || l >= static_cast<int32_t>(proxies.count))
      fail(Errc::invalid_argument, "loss_proxy: label out of range: " + std::to_string(l));

  const uint32_t n = feats.rows, d = feats.dim, c = proxies.count;
  LossResult res;
  res.grad.assign(size_t(n) * d, 0.0);
  std::vector<double> scores(c);
  std::vector<double> softmax(c);
  const double inv_n = 1.0 / n;
  for (uint32_t i = 0; i < n; ++i) {
    auto f = feats.row(i);
    double mx = -1e300;
    for (uint32_t j = 0; j < c; ++j) {
      auto p = proxies.row(j);
      double dot = 0.0;
      for (uint32_t k = 0; k < d; ++k) dot += f[k] * p[k];
      scores[j] = dot / tau;
      mx = std::max(mx, scores[j]);
    }
    double denom = 0.0;
    for (uint32_t j = 0; j < c; ++j) denom += std::exp(scores[j] - mx);
    double lse = mx + std::log(denom);
    res.value += (lse - scores[labels[i]]) * inv_n;

    for (uint32_t j = 0; j < c; ++j) softmax[j] = std::exp(scores[j] - lse);
    double* g = res.grad.data() + size_t(i) * d;
    for (uint32_t j = 0; j < c; ++j) {
      auto p = proxies.row(j);
      double w = (softmax[j] - (labels[i] == static_cast<int32_t>(j) ? 1.0 : 0.0)) * inv_n / tau;
      for (uint32_t k = 0; k < d; ++k) g[k] += w * p[k];
    }
  }
  return res;
}

LossResult loss_hard(const FeatureMatrix& feats, const std::vector<int32_t>& labels, double tau) {
  if (tau <= 0.0) fail(Errc::invalid_argument, "loss_hard: tau must be > 0");
  if (labels.size() != feats.rows)
    fail(Errc::invalid_argument, "loss_hard: labels size does not match batch");
  const uint32_t n = feats.rows, d = feats.dim;
  for (uint32_t i = 0; i < n; ++i) {
    bool has_pos = false, has_neg = false;
    for (uint32_t j = 0; j < n; ++j) {
      if (j == i) continue;
      (labels[j] == labels[i] ? has_pos : has_neg) = true;
    }
    if (!has_pos || !has_neg)
      fail(Errc::invalid_argument,
           "loss_hard: degenerate batch, sample " + std::to_string(i) +
               " lacks a positive or a negative");
  }

  LossResult res;
  res.grad.assign(size_t(n) * d, 0.0);
  const double inv_n = 1.0 / n;
  for (uint32_t i = 0; i < n; ++i) {
    auto f = feats.row(i);
    double pos_dot = 0.0, neg_dot = 0.0;
    uint32_t pos = n, neg = n;
    for (uint32_t j = 0; j < n; ++j) {
      if (j == i) continue;
      auto fj = feats.row(j);
      double dot = 0.0;
      for (uint32_t k = 0; k < d; ++k) dot += f[k] * fj[k];
      if (labels[j] == labels[i]) {
        if (pos == n || dot < pos_dot) {
          pos = j;
          pos_dot = dot;
        }
      } else if (neg == n || dot > neg_dot) {
        neg = j;
        neg_dot = dot;
      }
    }
    double x = (neg_dot - pos_dot) / tau;
    res.value += (x > 0.0 ? x + std::log1p(std::exp(-x)) : std::log1p(std::exp(x))) * inv_n;
    double sg = 1.0 / (1.0 + std::exp(-x));  // d loss_i / d x
    double w = sg * inv_n / tau;
    double* gi = res.grad.data() + size_t(i) * d;
    double* gp = res.grad.data() + size_t(pos) * d;
    double* gn = res.grad.data() + size_t(neg) * d;
    auto fp = feats.row(pos);
    auto fn = feats.row(neg);
    for (uint32_t k = 0; k < d; ++k) {
      gi[k] += w * (fn[k] - fp[k]);
      gp[k] -= w * f[k];
      gn[k] += w * f[k];
    }
  }
  return res;
}

LossResult loss_total(const FeatureMatrix& feats, const std::vector<int32_t>& labels,
                      const ProxySet& proxies, double tau, double lambda_hard) {
  if (lambda_hard < 0.0) fail(Errc::invalid_argument, "loss_total: lambda_hard must be >= 0");
  LossResult res = loss_proxy(feats, labels, proxies, tau);
  if (lambda_hard > 0.0) {
    LossResult hard = loss_hard(feats, labels, tau);
    res.value += lambda_hard * hard.value;
    for (size_t t = 0; t < res.grad.size(); ++t) res.grad[t] += lambda_hard * hard.grad[t];
  }
  return res;
}

namespace {

FeatureMatrix affine_normalized(const std::vector<double>& weight, const std::vector<double>& bias,
                                uint32_t in_dim, uint32_t out_dim, const FeatureMatrix& raw,
                                std::vector<double>* inv_norms) {
  if (raw.dim != in_dim) fail(Errc::invalid_argument, "encoder: input dimension mismatch");
  FeatureMatrix out;
  out.rows = raw.rows;
  out.dim = out_dim;
  out.backbone_id = raw.backbone_id;
  out.data.resize(size_t(raw.rows) * out_dim);
  if (inv_norms) inv_norms->resize(raw.rows);
  for (uint32_t i = 0; i < raw.rows; ++i) {
    const double* x = raw.data.data() + size_t(i) * in_dim;
    double* y = out.data.data() + size_t(i) * out_dim;
    for (uint32_t j = 0; j < out_dim; ++j) {
      double acc = bias[j];
      for (uint32_t k = 0; k < in_dim; ++k) acc += x[k] * weight[size_t(k) * out_dim + j];
      y[j] = acc;
    }
    double sq = 0.0;
    for (uint32_t j = 0; j < out_dim; ++j) sq += y[j] * y[j];
    double norm = std::sqrt(sq);
    if (norm < 1e-150) fail(Errc::data, "encoder produced zero-vector row " + std::to_string(i));
    double inv = 1.0 / norm;
    for (uint32_t j = 0; j < out_dim; ++j) y[j] *= inv;
    if (inv_norms) (*inv_norms)[i] = inv;
  }
  return out;
}

}  // namespace

ForwardCache encoder_forward_cached(const EncoderState& state, const FeatureMatrix& raw) {
  ForwardCache cache;
  cache.outputs = affine_normalized(state.weight, state.bias, state.in_dim, state.out_dim, raw,
                                    &cache.inv_norm);
  return cache;
}

FeatureMatrix encoder_forward(const EncoderState& state, const FeatureMatrix& raw) {
  return affine_normalized(state.weight, state.bias, state.in_dim, state.out_dim, raw, nullptr);
}

FeatureMatrix momentum_forward(const EncoderState& state, const FeatureMatrix& raw) {
  return affine_normalized(state.momentum_weight, state.momentum_bias, state.in_dim, state.out_dim,
                           raw, nullptr);
}

EncoderGrads encoder_backward(const EncoderState& state, const FeatureMatrix& raw,
                              const ForwardCache& cache, const std::vector<double>& d_outputs) {
  if (raw.dim != state.in_dim) fail(Errc::invalid_argument, "encoder_backward: dimension mismatch");
  if (d_outputs.size() != size_t(raw.rows) * state.out_dim)
    fail(Errc::invalid_argument, "encoder_backward: gradient size mismatch");
  EncoderGrads g;
  g.d_weight.assign(state.weight.size(), 0.0);
  g.d_bias.assign(state.bias.size(), 0.0);
  std::vector<double> du(state.out_dim);
  for (uint32_t i = 0; i < raw.rows; ++i) {
    const double* x = raw.data.data() + size_t(i) * state.in_dim;
    const double* y = cache.outputs.data.data() + size_t(i) * state.out_dim;
    const double* gy = d_outputs.data() + size_t(i) * state.out_dim;
    double dot = 0.0;
    for (uint32_t j = 0; j < state.out_dim; ++j) dot += gy[j] * y[j];
    for (uint32_t j = 0; j < state.out_dim; ++j) du[j] = (gy[j] - dot * y[j]) * cache.inv_norm[i];
    for (uint32_t k = 0; k < state.in_dim; ++k) {
      double xk = x[k];
      double* gw = g.d_weight.data() + size_t(k) * state.out_dim;
      for (uint32_t j = 0; j < state.out_dim; ++j) gw[j] += xk * du[j];
    }
    for (uint32_t j = 0; j < state.out_dim; ++j) g.d_bias[j] += du[j];
  }
  return g;
}

void sgd_step(EncoderState& state, const EncoderGrads& grads, double lr, double weight_decay) {
  if (grads.d_weight.size() != state.weight.size() || grads.d_bias.size() != state.bias.size())
    fail(Errc::invalid_argument, "sgd_step: gradient shape mismatch");
  for (size_t t = 0; t < state.weight.size(); ++t)
    state.weight[t] -= lr * (grads.d_weight[t] + weight_decay * state.weight[t]);
  for (size_t t = 0; t < state.bias.size(); ++t)
    state.bias[t] -= lr * (grads.d_bias[t] + weight_decay * state.bias[t]);
}

void ema_update(EncoderState& state, double beta) {
  if (beta < 0.0 || beta >= 1.0) fail(Errc::invalid_argument, "ema_update: beta must be in [0, 1)");
  for (size_t t = 0; t < state.weight.size(); ++t)
    state.momentum_weight[t] = beta * state.momentum_weight[t] + (1.0 - beta) * state.weight[t];
  for (size_t t = 0; t < state.bias.size(); ++t)
    state.momentum_bias[t] = beta * state.momentum_bias[t] + (1.0 - beta) * state.bias[t];
}

double train_epoch(EncoderState& state, const FeatureMatrix& raw, const std::vector<Batch>& batches,
                   const ProxySet& proxies, double tau, double lambda_hard, double lr, double beta,
                   double weight_decay) {
  double total = 0.0;
  for (const Batch& batch : batches) {
    FeatureMatrix sub;
    sub.rows = static_cast<uint32_t>(batch.sample_indices.size());
    sub.dim = raw.dim;
    sub.backbone_id = raw.backbone_id;
    sub.data.resize(size_t(sub.rows) * sub.dim);
    for (size_t t = 0; t < batch.sample_indices.size(); ++t) {
      auto src = raw.row(static_cast<uint32_t>(batch.sample_indices[t]));
      std::copy(src.begin(), src.end(), sub.data.begin() + t * sub.dim);
    }
    ForwardCache cache = encoder_forward_cached(state, sub);
    LossResult loss = loss_total(cache.outputs, batch.labels, proxies, tau, lambda_hard);
    EncoderGrads grads = encoder_backward(state, sub, cache, loss.grad);
    sgd_step(state, grads, lr, weight_decay);
    ema_update(state, beta);
    total += loss.value;
  }
  return batches.empty() ? 0.0 : total / static_cast<double>(batches.size());
}

static const char kCkptMagic[4] = {'C', 'K', 'P', 'T'};

void save_checkpoint(const EncoderState& state, uint32_t iteration, const std::string& path) {
  auto out = binio::open_out(path);
  binio::write_magic(out, kCkptMagic);
  binio::write_u32(out, 1);
  binio::write_u32(out, state.backbone_id);
  binio::write_u32(out, state.in_dim);
  binio::write_u32(out, state.out_dim);
  binio::write_f32(out, state.weight);
  binio::write_f32(out, state.bias);
  binio::write_f32(out, state.momentum_weight);
  binio::write_f32(out, state.momentum_bias);
  binio::write_u32(out, iteration);
  if (!out) fail(Errc::io, "write failed: " + path);
}

Checkpoint load_checkpoint(const std::string& path) {
  auto in = binio::open_in(path);
  binio::read_magic(in, kCkptMagic, path);
  uint32_t version = binio::read_u32(in, path);
  if (version != 1) fail(Errc::format, "unsupported checkpoint version in " + path);
  Checkpoint ckpt;
  EncoderState& s = ckpt.state;
  s.backbone_id = binio::read_u32(in, path);
  s.in_dim = binio::read_u32(in, path);
  s.out_dim = binio::read_u32(in, path);
  if (s.in_dim == 0 || s.out_dim == 0) fail(Errc::format, "corrupt checkpoint shapes in " + path);
  binio::read_f32(in, s.weight, size_t(s.in_dim) * s.out_dim, path);
  binio::read_f32(in, s.bias, s.out_dim, path);
  binio::read_f32(in, s.momentum_weight, size_t(s.in_dim) * s.out_dim, path);
  binio::read_f32(in, s.momentum_bias, s.out_dim, path);
  ckpt.iteration = binio::read_u32(in, path);
  binio::expect_eof(in, path);
  return ckpt;
}

}  // namespace plf
