#pragma once

#include <cstdint>
#include <optional>
#include <string>
#include <vector>

#include "plf/features.hpp"
#include "plf/metricspace.hpp"
#include "plf/training.hpp"

namespace plf {

// Held-out retrieval split with per-backbone raw features for both sides.
struct EvalSplit {
  std::vector<SampleMeta> query_meta;
  std::vector<SampleMeta> gallery_meta;
  std::vector<FeatureMatrix> query_feats;    // one per backbone
  std::vector<FeatureMatrix> gallery_feats;  // one per backbone
};

struct RankingReport {
  double mAP = 0.0;
  double rank1 = 0.0;
  double rank5 = 0.0;
  double rank10 = 0.0;
  uint32_t num_queries = 0;      // queries that entered the averages
  uint32_t skipped_queries = 0;  // queries with no relevant gallery entry left
  std::vector<double> per_query_ap;
};

// Gallery order for each query: entries sharing both identity and camera
// with the query are dropped, the rest sorted by (distance, gallery index).
// Returns original gallery indices.
std::vector<std::vector<int32_t>> rank_gallery(const DistanceMatrix& dist,
                                               const std::vector<SampleMeta>& query_meta,
                                               const std::vector<SampleMeta>& gallery_meta);

// Mean of precision at each relevant position; nullopt when nothing in the
// ranked list is relevant.
std::optional<double> average_precision(const std::vector<char>& ranked_relevance);

// 1 when a relevant entry appears within the first k positions.
int cmc_hit(const std::vector<char>& ranked_relevance, int k);

// Full retrieval evaluation: encodes both sides with each backbone's
// momentum weights (training weights when use_momentum is false), averages
// the per-backbone query-gallery distance matrices, then computes mAP and
// CMC over cross-camera matches. Queries left without a relevant gallery
// entry are skipped and counted.
RankingReport evaluate(const EvalSplit& split, const std::vector<EncoderState>& encoders,
                       bool use_momentum = true);

// Reads backbone_<m>.embf plus meta.tsv from each directory. Identities and
// cameras must be present on every sample.
EvalSplit load_split(const std::string& query_dir, const std::string& gallery_dir,
                     uint32_t num_backbones);

void save_report(const RankingReport& report, const std::string& path);
RankingReport load_report(const std::string& path);

}  // namespace plf
