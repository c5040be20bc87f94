#pragma once

#include <cstdint>
#include <span>
#include <string>
#include <vector>

#include "plf/rng.hpp"

namespace plf {

// One labeled sample. Empty identity/camera means the label is absent
// (written as "-" in the metadata file).
struct SampleMeta {
  int32_t index = 0;
  std::string identity;
  std::string camera;
};

// Row-major matrix of per-sample embeddings from one backbone. Values are
// held as doubles in memory; the on-disk format stores binary32, so a
// loaded matrix always holds float-representable values.
struct FeatureMatrix {
  uint32_t rows = 0;
  uint32_t dim = 0;
  uint32_t backbone_id = 0;
  std::vector<double> data;

  std::span<double> row(uint32_t i) { return {data.data() + size_t(i) * dim, dim}; }
  std::span<const double> row(uint32_t i) const { return {data.data() + size_t(i) * dim, dim}; }
};

// Spatial feature maps for one sample, channel-major.
struct FeatureMapStack {
  uint32_t channels = 0;
  uint32_t height = 0;
  uint32_t width = 0;
  std::vector<double> data;  // channels * height * width
};

struct SyntheticSpec {
  uint32_t num_identities = 0;
  uint32_t samples_per_identity = 0;
  uint32_t latent_dim = 0;
  uint32_t num_backbones = 1;
  double noise_sigma = 0.0;   // per-coordinate std of latent and backbone noise
  double separation = 1.0;    // mean inter-identity center distance in latent space
  uint32_t cameras = 4;       // camera labels cycle 0..cameras-1 within an identity
  uint64_t seed = 1;
};

struct SyntheticDataset {
  std::vector<FeatureMatrix> features;  // one matrix per backbone, same row order
  std::vector<SampleMeta> meta;
};

// Per-channel global max pooling plus global average pooling, added
// elementwise. Returns one value per channel.
std::vector<double> fuse_pooling(const FeatureMapStack& maps);

// Scales every row to unit L2 norm. A zero row is an error.
void l2_normalize_rows(FeatureMatrix& f);

// Draws identity centers in latent space, samples each identity around its
// center, pushes every sample through per-backbone random linear maps with
// additive noise, and row-normalizes the result. Backbone m emits
// latent_dim + 8*m dimensions; identities cycle through noise multipliers
// {0.7, 1.0, 1.3} so cluster densities vary. Deterministic given the seed.
SyntheticDataset generate_synthetic(const SyntheticSpec& spec);

FeatureMatrix load_features(const std::string& path);
void save_features(const FeatureMatrix& f, const std::string& path);

std::vector<SampleMeta> load_meta(const std::string& path);
void save_meta(const std::vector<SampleMeta>& meta, const std::string& path);

}  // namespace plf
