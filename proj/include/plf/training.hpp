#pragma once

#include <cstdint>
#include <span>
#include <string>
#include <vector>

#include "plf/clustering.hpp"
#include "plf/features.hpp"
#include "plf/rng.hpp"

namespace plf {

// Per-backbone affine encoder: out = normalize(x W + b), W is
// in_dim x out_dim (input-major rows). Holds the training weights and a
// slow-moving momentum copy used for inference.
struct EncoderState {
  uint32_t backbone_id = 0;
  uint32_t in_dim = 0;
  uint32_t out_dim = 0;
  std::vector<double> weight;
  std::vector<double> bias;
  std::vector<double> momentum_weight;
  std::vector<double> momentum_bias;

  // W = I, b = 0, momentum = training weights: the initial encoder passes
  // normalized inputs through unchanged.
  static EncoderState identity_init(uint32_t backbone_id, uint32_t dim);

  // Snaps every weight to its binary32 value. Called at checkpoint
  // boundaries so the in-memory state equals what a resumed run reloads.
  void round_to_f32();
};

struct LrSchedule {
  double lr_base = 0.00035;
  int warmup_iterations = 10;
  int horizon = 30;  // total number of outer iterations
};

// Linear warmup over the first warmup_iterations, then flat. t is 1-based
// and must lie within [1, horizon].
double learning_rate(int t, const LrSchedule& sched);

enum class ProxyMode {
  random_sample,  // proxy = feature row of a uniformly drawn member
  cluster_mean,   // proxy = normalized mean of member rows
};

// One representative vector per cluster. source_indices holds the sampled
// member per cluster, or -1 in cluster_mean mode.
struct ProxySet {
  uint32_t dim = 0;
  uint32_t count = 0;
  std::vector<double> vectors;  // count x dim, row per cluster id
  std::vector<int32_t> source_indices;

  std::span<const double> row(uint32_t c) const { return {vectors.data() + size_t(c) * dim, dim}; }
};

ProxySet select_proxies(const ClusterAssignment& assign, const FeatureMatrix& feats, Rng& rng,
                        ProxyMode mode = ProxyMode::random_sample);

// One optimization batch: clusters_per_batch distinct clusters with
// samples_per_cluster slots each. labels align with sample_indices.
struct Batch {
  std::vector<int32_t> sample_indices;
  std::vector<int32_t> labels;
};

// Shuffles the cluster ids and consumes them clusters_per_batch at a time,
// so no cluster appears twice in an epoch and floor(C / P) batches come
// back. A cluster with at least samples_per_cluster members contributes
// distinct samples; a smaller cluster contributes every member once and
// fills the rest with replacement.
std::vector<Batch> make_batches(const ClusterAssignment& assign, Rng& rng, int clusters_per_batch,
                                int samples_per_cluster);

// Loss value plus gradient with respect to the batch features (flat,
// row-major, same shape as the feature matrix the loss was fed).
struct LossResult {
  double value = 0.0;
  std::vector<double> grad;
};

// Cross entropy of each feature against the proxy bank under dot-product
// scores scaled by 1/tau; the target class is the feature's own cluster.
// Proxies are constants: no gradient flows to them.
LossResult loss_proxy(const FeatureMatrix& feats, const std::vector<int32_t>& labels,
                      const ProxySet& proxies, double tau);

// Softmax triplet over batch features: for each sample, the hardest positive
// is its least-similar same-label row and the hardest negative its
// most-similar other-label row (ties to the lowest row). Gradients flow to
// the anchor and both selected rows.
LossResult loss_hard(const FeatureMatrix& feats, const std::vector<int32_t>& labels, double tau);

// loss_proxy + lambda_hard * loss_hard. The hard term is skipped entirely
// when lambda_hard is zero.
LossResult loss_total(const FeatureMatrix& feats, const std::vector<int32_t>& labels,
                      const ProxySet& proxies, double tau, double lambda_hard);

struct ForwardCache {
  FeatureMatrix outputs;
  std::vector<double> inv_norm;  // per row: 1 / ||x W + b||
};

ForwardCache encoder_forward_cached(const EncoderState& state, const FeatureMatrix& raw);
FeatureMatrix encoder_forward(const EncoderState& state, const FeatureMatrix& raw);
// Same map under the momentum weights (the inference path).
FeatureMatrix momentum_forward(const EncoderState& state, const FeatureMatrix& raw);

struct EncoderGrads {
  std::vector<double> d_weight;
  std::vector<double> d_bias;
};

// Backpropagates d_loss/d_outputs through the normalization and affine map.
EncoderGrads encoder_backward(const EncoderState& state, const FeatureMatrix& raw,
                              const ForwardCache& cache, const std::vector<double>& d_outputs);

// theta <- theta - lr * (grad + weight_decay * theta), on training weights.
void sgd_step(EncoderState& state, const EncoderGrads& grads, double lr,
              double weight_decay = 0.00035);

// momentum <- beta * momentum + (1 - beta) * training weights.
void ema_update(EncoderState& state, double beta);

// Runs the given batches once: forward, loss, backward, SGD step, momentum
// update per batch. Returns the mean batch loss.
double train_epoch(EncoderState& state, const FeatureMatrix& raw, const std::vector<Batch>& batches,
                   const ProxySet& proxies, double tau, double lambda_hard, double lr, double beta,
                   double weight_decay = 0.00035);

struct Checkpoint {
  EncoderState state;
  uint32_t iteration = 0;
};

void save_checkpoint(const EncoderState& state, uint32_t iteration, const std::string& path);
Checkpoint load_checkpoint(const std::string& path);

}  // namespace plf
