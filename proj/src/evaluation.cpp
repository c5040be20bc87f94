#include "plf/evaluation.hpp"

#include <algorithm>
#include <filesystem>
#include <fstream>
#include <numeric>

#include "nlohmann/json.hpp"
#include "plf/error.hpp"

namespace plf {

std::vector<std::vector<int32_t>> rank_gallery(const DistanceMatrix& dist,
                                               const std::vector<SampleMeta>& query_meta,
                                               const std::vector<SampleMeta>& gallery_meta) {
  if (dist.rows != query_meta.size() || dist.cols != gallery_meta.size())
    fail(Errc::invalid_argument, "rank_gallery: distance shape does not match metadata");
  std::vector<std::vector<int32_t>> ranked(dist.rows);
  for (uint32_t q = 0; q < dist.rows; ++q) {
    auto& order = ranked[q];
    order.reserve(dist.cols);
    for (uint32_t g = 0; g < dist.cols; ++g) {
      bool same_identity = !query_meta[q].identity.empty() &&
                           query_meta[q].identity == gallery_meta[g].identity;
      bool same_camera =
          !query_meta[q].camera.empty() && query_meta[q].camera == gallery_meta[g].camera;
      if (same_identity && same_camera) continue;
      order.push_back(static_cast<int32_t>(g));
    }
    const double* row = dist.data.data() + size_t(q) * dist.cols;
    std::sort(order.begin(), order.end(), [row](int32_t a, int32_t b) {
      if (row[a] != row[b]) return row[a] < row[b];
      return a < b;
    });
  }
  return ranked;
}

std::optional<double> average_precision(const std::vector<char>& ranked_relevance) {
  size_t relevant = 0;
  double acc = 0.0;
  for (size_t k = 0; k < ranked_relevance.size(); ++k) {
    if (!ranked_relevance[k]) continue;
    ++relevant;
    acc += static_cast<double>(relevant) / static_cast<double>(k + 1);
  }
  if (relevant == 0) return std::nullopt;
  return acc / static_cast<double>(relevant);
}

int cmc_hit(const std::vector<char>& ranked_relevance, int k) {
  if (k < 1) fail(Errc::invalid_argument, "cmc_hit: k must be >= 1");
  size_t limit = std::min(ranked_relevance.size(), static_cast<size_t>(k));
  for (size_t i = 0; i < limit; ++i)
    if (ranked_relevance[i]) return 1;
  return 0;
}

RankingReport evaluate(const EvalSplit& split, const std::vector<EncoderState>& encoders,
                       bool use_momentum) {
  if (encoders.empty()) fail(Errc::invalid_argument, "evaluate: no encoders");
  if (split.query_feats.size() != encoders.size() ||
      split.gallery_feats.size() != encoders.size())
    fail(Errc::invalid_argument, "evaluate: backbone count mismatch");
  for (const auto& m : split.query_meta)
    if (m.identity.empty() || m.camera.empty())
      fail(Errc::data, "evaluate: query sample " + std::to_string(m.index) +
                           " lacks identity or camera");
  for (const auto& m : split.gallery_meta)
    if (m.identity.empty() || m.camera.empty())
      fail(Errc::data, "evaluate: gallery sample " + std::to_string(m.index) +
                           " lacks identity or camera");

  std::vector<DistanceMatrix> dists;
  dists.reserve(encoders.size());
  for (size_t m = 0; m < encoders.size(); ++m) {
    FeatureMatrix fq = use_momentum ? momentum_forward(encoders[m], split.query_feats[m])
                                    : encoder_forward(encoders[m], split.query_feats[m]);
    FeatureMatrix fg = use_momentum ? momentum_forward(encoders[m], split.gallery_feats[m])
                                    : encoder_forward(encoders[m], split.gallery_feats[m]);
    dists.push_back(query_gallery_distances(fq, fg));
  }
  std::vector<const DistanceMatrix*> ptrs;
  for (const auto& d : dists) ptrs.push_back(&d);
  DistanceMatrix mean = ensemble_distances(ptrs);

  auto ranked = rank_gallery(mean, split.query_meta, split.gallery_meta);
  RankingReport report;
  double map_acc = 0.0;
  int r1 = 0, r5 = 0, r10 = 0;
  for (uint32_t q = 0; q < ranked.size(); ++q) {
    std::vector<char> rel(ranked[q].size());
    for (size_t t = 0; t < ranked[q].size(); ++t)
      rel[t] = split.query_meta[q].identity == split.gallery_meta[ranked[q][t]].identity;
    auto ap = average_precision(rel);
    if (!ap) {
      ++report.skipped_queries;
      continue;
    }
    ++report.num_queries;
    report.per_query_ap.push_back(*ap);
    map_acc += *ap;
    r1 += cmc_hit(rel, 1);
    r5 += cmc_hit(rel, 5);
    r10 += cmc_hit(rel, 10);
  }
  if (report.num_queries > 0) {
    double inv = 1.0 / report.num_queries;
    report.mAP = map_acc * inv;
    report.rank1 = r1 * inv;
    report.rank5 = r5 * inv;
    report.rank10 = r10 * inv;
  }
  return report;
}

EvalSplit load_split(const std::string& query_dir, const std::string& gallery_dir,
                     uint32_t num_backbones) {
  namespace fs = std::filesystem;
  EvalSplit split;
  split.query_meta = load_meta((fs::path(query_dir) / "meta.tsv").string());
  split.gallery_meta = load_meta((fs::path(gallery_dir) / "meta.tsv").string());
  for (uint32_t m = 0; m < num_backbones; ++m) {
    std::string name = "backbone_" + std::to_string(m) + ".embf";
    FeatureMatrix fq = load_features((fs::path(query_dir) / name).string());
    FeatureMatrix fg = load_features((fs::path(gallery_dir) / name).string());
    fq.backbone_id = m;
    fg.backbone_id = m;
    if (fq.rows != split.query_meta.size() || fg.rows != split.gallery_meta.size())
      fail(Errc::data, "split features and metadata disagree on sample count");
    split.query_feats.push_back(std::move(fq));
    split.gallery_feats.push_back(std::move(fg));
  }
  return split;
}

void save_report(const RankingReport& report, const std::string& path) {
  nlohmann::ordered_json j;
  j["mAP"] = report.mAP;
  j["rank1"] = report.rank1;
  j["rank5"] = report.rank5;
  j["rank10"] = report.rank10;
  j["num_queries"] = report.num_queries;
  j["skipped_queries"] = report.skipped_queries;
  j["per_query_ap"] = report.per_query_ap;
  std::ofstream out(path, std::ios::trunc);
  if (!out) fail(Errc::io, "cannot open for writing: " + path);
  out << j.dump(2) << '\n';
  if (!out) fail(Errc::io, "write failed: " + path);
}

RankingReport load_report(const std::string& path) {
  std::ifstream in(path);
  if (!in) fail(Errc::io, "cannot open for reading: " + path);
  nlohmann::json j;
  try {
    in >> j;
    RankingReport report;
    report.mAP = j.at("mAP").get<double>();
    report.rank1 = j.at("rank1").get<double>();
    report.rank5 = j.at("rank5").get<double>();
    report.rank10 = j.at("rank10").get<double>();
    report.num_queries = j.at("num_queries").get<uint32_t>();
    report.skipped_queries = j.at("skipped_queries").get<uint32_t>();
    report.per_query_ap = j.at("per_query_ap").get<std::vector<double>>();
    return report;
  } catch (const nlohmann::json::exception& e) {
    fail(Errc::format, "bad report json in " + path + ": " + e.what());
  }
}

}  // namespace plf
