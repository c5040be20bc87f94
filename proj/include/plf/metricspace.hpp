#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include "plf/features.hpp"

namespace plf {

enum class DistanceKind : uint8_t {
  euclidean = 0,
  jaccard_reranked = 1,
  ensemble = 2,
};

// Dense row-major distance matrix. Square matrices (euclidean or reranked)
// are symmetric with a zero diagonal; query-gallery matrices are rectangular.
struct DistanceMatrix {
  uint32_t rows = 0;
  uint32_t cols = 0;
  DistanceKind kind = DistanceKind::euclidean;
  std::vector<double> data;

  double at(uint32_t i, uint32_t j) const { return data[size_t(i) * cols + j]; }
  double& at(uint32_t i, uint32_t j) { return data[size_t(i) * cols + j]; }
};

struct RerankParams {
  int k1 = 30;               // reciprocal neighborhood size
  int k2 = 6;                // local expansion neighborhood size
  double mix_weight = 0.0;   // blend of rescaled input distance vs Jaccard distance
  // Binary mode replaces exp(-d) weights with 0/1 set membership; it exists
  // so tests can compare against a plain set-overlap computation.
  enum class Encoding { gaussian, binary } encoding = Encoding::gaussian;
};

// All-pairs Euclidean distances between rows. Row-parallel; each row is
// filled in a fixed serial order so thread count does not change the bits.
DistanceMatrix pairwise_euclidean(const FeatureMatrix& f);

// k-reciprocal re-ranking. Builds reciprocal neighbor sets R(p, k1), expands
// them with half-size reciprocal sets of their members, encodes each sample
// as a sparse weighted neighbor vector, averages it over the k2 nearest
// neighbors, and returns mix_weight * (d / max d) +
// (1 - mix_weight) * jaccard(v_i, v_j). Neighbor ranks order ties by
// ascending index.
DistanceMatrix rerank_kreciprocal(const DistanceMatrix& d, const RerankParams& params);

// Elementwise mean of equally shaped matrices of the same kind.
DistanceMatrix ensemble_distances(const std::vector<const DistanceMatrix*>& mats);

// Rectangular Euclidean distances between query rows and gallery rows.
DistanceMatrix query_gallery_distances(const FeatureMatrix& queries, const FeatureMatrix& gallery);

DistanceMatrix load_distances(const std::string& path);
void save_distances(const DistanceMatrix& d, const std::string& path);

}  // namespace plf
