#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <cmath>
#include <cstring>
#include <filesystem>
#include <string>
#include <vector>

#include "doctest.h"
#include "plf.h"
#include "testutil.hpp"

namespace fs = std::filesystem;

TEST_CASE("status names and version strings exist") {
  CHECK(std::string(plf_status_name(PLF_OK)) == "ok");
  CHECK(std::string(plf_status_name(PLF_ERR_INVALID_ARG)) == "invalid argument");
  CHECK(std::string(plf_status_name(PLF_ERR_IO)) == "io error");
  CHECK(std::string(plf_status_name(PLF_ERR_FORMAT)) == "format error");
  CHECK(std::string(plf_status_name(PLF_ERR_DATA)) == "data error");
  CHECK(plf_version() != nullptr);
  CHECK(plf_last_error() != nullptr);
}

TEST_CASE("features handle lifecycle through the C surface") {
  const float data[6] = {3.0f, 4.0f, 0.0f, 5.0f, 0.0f, 12.0f};
  plf_features* f = nullptr;
  REQUIRE(plf_features_create(2, 3, data, &f) == PLF_OK);
  CHECK(plf_features_rows(f) == 2);
  CHECK(plf_features_dim(f) == 3);

  CHECK(plf_features_normalize_rows(f) == PLF_OK);
  float out[6] = {0};
  REQUIRE(plf_features_copy_data(f, out, 6) == PLF_OK);
  CHECK(out[0] == doctest::Approx(0.6f));
  CHECK(out[1] == doctest::Approx(0.8f));
  CHECK(out[5] == doctest::Approx(12.0f / 13.0f));
  CHECK(plf_features_copy_data(f, out, 5) == PLF_ERR_INVALID_ARG);

  testutil::TempDir tmp("plf_capi_feat");
  const auto path = tmp.file("f.embf");
  REQUIRE(plf_features_save(f, path.c_str()) == PLF_OK);
  plf_features* g = nullptr;
  REQUIRE(plf_features_load(path.c_str(), &g) == PLF_OK);
  CHECK(plf_features_rows(g) == 2);
  plf_features_free(g);
  plf_features_free(f);
  plf_features_free(nullptr);  // no-op
}

TEST_CASE("C error paths set codes and messages") {
  plf_features* f = nullptr;
  CHECK(plf_features_create(2, 3, nullptr, &f) == PLF_ERR_INVALID_ARG);
  CHECK(plf_features_load("/nonexistent/path.embf", &f) == PLF_ERR_IO);
  CHECK(std::strlen(plf_last_error()) > 0);

  testutil::TempDir tmp("plf_capi_bad");
  const auto path = tmp.file("bad.embf");
  testutil::write_text(path, "GARBAGE");
  CHECK(plf_features_load(path.c_str(), &f) == PLF_ERR_FORMAT);

  const float zeros[4] = {0, 0, 0, 0};
  REQUIRE(plf_features_create(2, 2, zeros, &f) == PLF_OK);
  CHECK(plf_features_normalize_rows(f) == PLF_ERR_DATA);
  plf_features_free(f);
}

TEST_CASE("pooling fusion through the C surface") {
  const float maps[8] = {1, 2, 3, 4, -1, -1, -1, 7};
  float out[2] = {0, 0};
  REQUIRE(plf_fuse_pooling(maps, 2, 2, 2, out) == PLF_OK);
  CHECK(out[0] == doctest::Approx(6.5));  // max 4 + mean 2.5
  CHECK(out[1] == doctest::Approx(8.0));  // max 7 + mean 1
  CHECK(plf_fuse_pooling(nullptr, 2, 2, 2, out) == PLF_ERR_INVALID_ARG);
}

TEST_CASE("distances, re-ranking, ensembling, clustering through the C surface") {
  // Two well-separated blobs of 6 points each in 2 dims.
  std::vector<float> pts;
  for (int i = 0; i < 12; ++i) {
    float base = i < 6 ? 0.0f : 10.0f;
    pts.push_back(base + 0.01f * static_cast<float>(i));
    pts.push_back(base - 0.01f * static_cast<float>(i % 3));
  }
  plf_features* f = nullptr;
  REQUIRE(plf_features_create(12, 2, pts.data(), &f) == PLF_OK);

  plf_distmat* d = nullptr;
  REQUIRE(plf_pairwise_euclidean(f, &d) == PLF_OK);
  CHECK(plf_distmat_rows(d) == 12);
  CHECK(plf_distmat_cols(d) == 12);
  CHECK(plf_distmat_kind(d) == PLF_DIST_EUCLIDEAN);
  double v = -1.0;
  REQUIRE(plf_distmat_get(d, 0, 0, &v) == PLF_OK);
  CHECK(v == 0.0);
  CHECK(plf_distmat_get(d, 50, 0, &v) == PLF_ERR_INVALID_ARG);

  plf_distmat* r = nullptr;
  REQUIRE(plf_rerank(d, 5, 2, 0.0, &r) == PLF_OK);
  CHECK(plf_distmat_kind(r) == PLF_DIST_JACCARD_RERANKED);
  CHECK(plf_rerank(d, 50, 2, 0.0, &r) == PLF_ERR_INVALID_ARG);

  const plf_distmat* pair[2] = {r, r};
  plf_distmat* e = nullptr;
  REQUIRE(plf_ensemble(pair, 2, &e) == PLF_OK);
  CHECK(plf_distmat_kind(e) == PLF_DIST_ENSEMBLE);
  double re = 0, ee = 0;
  plf_distmat_get(r, 0, 7, &re);
  plf_distmat_get(e, 0, 7, &ee);
  CHECK(re == ee);

  testutil::TempDir tmp("plf_capi_dist");
  const auto dpath = tmp.file("d.dmat");
  REQUIRE(plf_distmat_save(e, dpath.c_str()) == PLF_OK);
  plf_distmat* loaded = nullptr;
  REQUIRE(plf_distmat_load(dpath.c_str(), &loaded) == PLF_OK);
  CHECK(plf_distmat_rows(loaded) == 12);

  plf_clustering* c = nullptr;
  REQUIRE(plf_ensemble_cluster_shortcut(e, 0.4, 0.6, 2, &c) == PLF_OK);
  CHECK(plf_clustering_num_clusters(c) == 2);
  int32_t labels[12];
  REQUIRE(plf_clustering_labels(c, labels, 12) == PLF_OK);
  for (int i = 0; i < 6; ++i) CHECK(labels[i] == 0);
  for (int i = 6; i < 12; ++i) CHECK(labels[i] == 1);
  CHECK(plf_clustering_labels(c, labels, 3) == PLF_ERR_INVALID_ARG);
  const auto apath = tmp.file("a.tsv");
  CHECK(plf_clustering_save(c, apath.c_str()) == PLF_OK);
  CHECK(testutil::read_text(apath).substr(0, 5) == "# C=2");

  plf_clustering* c2 = nullptr;
  const double grid[3] = {0.4, 0.5, 0.6};
  REQUIRE(plf_ensemble_cluster(e, grid, 3, 2, &c2) == PLF_OK);
  CHECK(plf_clustering_num_clusters(c2) == 2);
  plf_clustering* c3 = nullptr;
  REQUIRE(plf_dbscan(e, 0.4, 2, &c3) == PLF_OK);
  CHECK(plf_clustering_num_clusters(c3) == 2);
  CHECK(plf_dbscan(e, -1.0, 2, &c3) == PLF_ERR_INVALID_ARG);

  plf_clustering_free(c3);
  plf_clustering_free(c2);
  plf_clustering_free(c);
  plf_distmat_free(loaded);
  plf_distmat_free(e);
  plf_distmat_free(r);
  plf_distmat_free(d);
  plf_features_free(f);
}

TEST_CASE("drivers run end to end through the C surface") {
  testutil::TempDir tmp("plf_capi_drv");
  const auto spec = tmp.file("synth.spec");
  testutil::write_text(spec,
                       "num_identities = 8\n"
                       "samples_per_identity = 8\n"
                       "latent_dim = 6\n"
                       "num_backbones = 2\n"
                       "noise_sigma = 0.1\n"
                       "separation = 1.0\n"
                       "seed = 3\n"
                       "train_identities = 5\n"
                       "query_per_identity = 2\n");
  const auto data = (tmp.path / "data").string();
  REQUIRE(plf_synth(spec.c_str(), data.c_str()) == PLF_OK);
  CHECK(fs::exists(fs::path(data) / "train" / "backbone_1.embf"));

  const auto cfg = tmp.file("pipe.cfg");
  testutil::write_text(cfg,
                       "num_backbones = 2\n"
                       "iterations = 2\n"
                       "epochs_per_iteration = 1\n"
                       "clusters_per_batch = 2\n"
                       "samples_per_cluster = 3\n"
                       "k1 = 7\n"
                       "k2 = 3\n"
                       "min_pts = 3\n"
                       "eps_list = 0.45,0.65\n"
                       "seed = 4\n");
  const auto run = (tmp.path / "run").string();
  const auto train = (fs::path(data) / "train").string();
  const auto meta = (fs::path(data) / "train" / "meta.tsv").string();
  const auto query = (fs::path(data) / "test" / "query").string();
  const auto gallery = (fs::path(data) / "test" / "gallery").string();
  REQUIRE(plf_pipeline_run(cfg.c_str(), train.c_str(), meta.c_str(), run.c_str(), 0, nullptr,
                           nullptr, 0) == PLF_OK);
  CHECK(fs::exists(fs::path(run) / "manifest.json"));

  const auto report = tmp.file("report.json");
  REQUIRE(plf_evaluate_run(run.c_str(), query.c_str(), gallery.c_str(), 1, report.c_str()) ==
          PLF_OK);
  CHECK(testutil::read_text(report).find("\"mAP\"") != std::string::npos);

  char* text = nullptr;
  REQUIRE(plf_inspect(run.c_str(), "clusters", &text) == PLF_OK);
  REQUIRE(text != nullptr);
  CHECK(std::string(text).find("num_clusters=") != std::string::npos);
  plf_string_free(text);
  CHECK(plf_inspect(run.c_str(), "vibes", &text) == PLF_ERR_INVALID_ARG);

  // Interrupted then resumed via the C driver.
  const auto run2 = (tmp.path / "run2").string();
  REQUIRE(plf_pipeline_run(cfg.c_str(), train.c_str(), meta.c_str(), run2.c_str(), 0, nullptr,
                           nullptr, 1) == PLF_OK);
  REQUIRE(plf_pipeline_resume(run2.c_str()) == PLF_OK);
  CHECK(testutil::same_bytes((fs::path(run) / "manifest.json").string(),
                             (fs::path(run2) / "manifest.json").string()));

  const auto badcfg = tmp.file("bad.cfg");
  testutil::write_text(badcfg, "epochs = 2\n");
  CHECK(plf_pipeline_run(badcfg.c_str(), train.c_str(), meta.c_str(),
                         (tmp.path / "run3").string().c_str(), 0, nullptr, nullptr,
                         0) == PLF_ERR_DATA);
  CHECK(plf_pipeline_run(nullptr, train.c_str(), meta.c_str(),
                         (tmp.path / "run4").string().c_str(), 0, nullptr, nullptr,
                         0) == PLF_ERR_INVALID_ARG);
}
