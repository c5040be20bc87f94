#include "plf.h"

#include <cstdlib>
#include <cstring>
#include <filesystem>
#include <string>

#include "plf/clustering.hpp"
#include "plf/config.hpp"
#include "plf/error.hpp"
#include "plf/features.hpp"
#include "plf/metricspace.hpp"
#include "plf/pipeline.hpp"

struct plf_features {
  plf::FeatureMatrix m;
};
struct plf_distmat {
  plf::DistanceMatrix m;
};
struct plf_clustering {
  plf::ClusterAssignment a;
};

namespace {

thread_local std::string g_last_error;

plf_status status_of(const plf::Error& e) {
  switch (e.code()) {
    case plf::Errc::invalid_argument:
      return PLF_ERR_INVALID_ARG;
    case plf::Errc::io:
      return PLF_ERR_IO;
    case plf::Errc::format:
      return PLF_ERR_FORMAT;
    case plf::Errc::data:
      return PLF_ERR_DATA;
  }
  return PLF_ERR_INTERNAL;
}

template <typename Fn>
plf_status guard(Fn&& fn) {
  try {
    fn();
    g_last_error.clear();
    return PLF_OK;
  } catch (const plf::Error& e) {
    g_last_error = e.what();
    return status_of(e);
  } catch (const std::exception& e) {
    g_last_error = e.what();
    return PLF_ERR_INTERNAL;
  } catch (...) {
    g_last_error = "unknown failure";
    return PLF_ERR_INTERNAL;
  }
}

plf_status require(bool ok, const char* msg) {
  if (ok) return PLF_OK;
  g_last_error = msg;
  return PLF_ERR_INVALID_ARG;
}

}  // namespace

extern "C" {

const char* plf_status_name(plf_status status) {
  switch (status) {
    case PLF_OK:
      return "ok";
    case PLF_ERR_INVALID_ARG:
      return "invalid argument";
    case PLF_ERR_IO:
      return "io error";
    case PLF_ERR_FORMAT:
      return "format error";
    case PLF_ERR_DATA:
      return "data error";
    case PLF_ERR_INTERNAL:
      return "internal error";
  }
  return "unknown";
}

const char* plf_last_error(void) { return g_last_error.c_str(); }

const char* plf_version(void) { return "1.0.0"; }

plf_status plf_features_create(uint32_t rows, uint32_t dim, const float* data,
                               plf_features** out) {
  if (auto s = require(data && out, "features_create: null pointer")) return s;
  return guard([&] {
    auto* f = new plf_features;
    f->m.rows = rows;
    f->m.dim = dim;
    f->m.data.assign(data, data + size_t(rows) * dim);
    *out = f;
  });
}

plf_status plf_features_load(const char* path, plf_features** out) {
  if (auto s = require(path && out, "features_load: null pointer")) return s;
  return guard([&] { *out = new plf_features{plf::load_features(path)}; });
}

plf_status plf_features_save(const plf_features* f, const char* path) {
  if (auto s = require(f && path, "features_save: null pointer")) return s;
  return guard([&] { plf::save_features(f->m, path); });
}

plf_status plf_features_normalize_rows(plf_features* f) {
  if (auto s = require(f != nullptr, "features_normalize_rows: null pointer")) return s;
  return guard([&] { plf::l2_normalize_rows(f->m); });
}

uint32_t plf_features_rows(const plf_features* f) { return f ? f->m.rows : 0; }
uint32_t plf_features_dim(const plf_features* f) { return f ? f->m.dim : 0; }

plf_status plf_features_copy_data(const plf_features* f, float* buffer, size_t buffer_len) {
  if (auto s = require(f && buffer, "features_copy_data: null pointer")) return s;
  if (auto s = require(buffer_len >= f->m.data.size(), "features_copy_data: buffer too small"))
    return s;
  for (size_t i = 0; i < f->m.data.size(); ++i) buffer[i] = static_cast<float>(f->m.data[i]);
  return PLF_OK;
}

void plf_features_free(plf_features* f) { delete f; }

plf_status plf_fuse_pooling(const float* data, uint32_t channels, uint32_t height, uint32_t width,
                            float* out) {
  if (auto s = require(data && out, "fuse_pooling: null pointer")) return s;
  return guard([&] {
    plf::FeatureMapStack stack;
    stack.channels = channels;
    stack.height = height;
    stack.width = width;
    stack.data.assign(data, data + size_t(channels) * height * width);
    auto fused = plf::fuse_pooling(stack);
    for (size_t i = 0; i < fused.size(); ++i) out[i] = static_cast<float>(fused[i]);
  });
}

plf_status plf_pairwise_euclidean(const plf_features* f, plf_distmat** out) {
  if (auto s = require(f && out, "pairwise_euclidean: null pointer")) return s;
  return guard([&] { *out = new plf_distmat{plf::pairwise_euclidean(f->m)}; });
}

plf_status plf_rerank(const plf_distmat* d, int k1, int k2, double mix_weight, plf_distmat** out) {
  if (auto s = require(d && out, "rerank: null pointer")) return s;
  return guard([&] {
    plf::RerankParams params;
    params.k1 = k1;
    params.k2 = k2;
    params.mix_weight = mix_weight;
    *out = new plf_distmat{plf::rerank_kreciprocal(d->m, params)};
  });
}

plf_status plf_ensemble(const plf_distmat* const* mats, size_t count, plf_distmat** out) {
  if (auto s = require(mats && out && count > 0, "ensemble: null or empty input")) return s;
  return guard([&] {
    std::vector<const plf::DistanceMatrix*> ptrs;
    for (size_t i = 0; i < count; ++i) {
      if (!mats[i]) plf::fail(plf::Errc::invalid_argument, "ensemble: null matrix");
      ptrs.push_back(&mats[i]->m);
    }
    *out = new plf_distmat{plf::ensemble_distances(ptrs)};
  });
}

plf_status plf_distmat_load(const char* path, plf_distmat** out) {
  if (auto s = require(path && out, "distmat_load: null pointer")) return s;
  return guard([&] { *out = new plf_distmat{plf::load_distances(path)}; });
}

plf_status plf_distmat_save(const plf_distmat* d, const char* path) {
  if (auto s = require(d && path, "distmat_save: null pointer")) return s;
  return guard([&] { plf::save_distances(d->m, path); });
}

uint32_t plf_distmat_rows(const plf_distmat* d) { return d ? d->m.rows : 0; }
uint32_t plf_distmat_cols(const plf_distmat* d) { return d ? d->m.cols : 0; }
int plf_distmat_kind(const plf_distmat* d) { return d ? static_cast<int>(d->m.kind) : -1; }

plf_status plf_distmat_get(const plf_distmat* d, uint32_t row, uint32_t col, double* out) {
  if (auto s = require(d && out, "distmat_get: null pointer")) return s;
  if (auto s = require(row < d->m.rows && col < d->m.cols, "distmat_get: index out of range"))
    return s;
  *out = d->m.at(row, col);
  return PLF_OK;
}

void plf_distmat_free(plf_distmat* d) { delete d; }

plf_status plf_dbscan(const plf_distmat* d, double eps, int min_pts, plf_clustering** out) {
  if (auto s = require(d && out, "dbscan: null pointer")) return s;
  return guard([&] { *out = new plf_clustering{plf::dbscan(d->m, {eps, min_pts})}; });
}

plf_status plf_ensemble_cluster(const plf_distmat* d, const double* eps_list, size_t eps_count,
                                int min_pts, plf_clustering** out) {
  if (auto s = require(d && eps_list && out, "ensemble_cluster: null pointer")) return s;
  return guard([&] {
    std::vector<double> eps(eps_list, eps_list + eps_count);
    *out = new plf_clustering{plf::ensemble_cluster(d->m, eps, min_pts)};
  });
}

plf_status plf_ensemble_cluster_shortcut(const plf_distmat* d, double eps_min, double eps_max,
                                         int min_pts, plf_clustering** out) {
  if (auto s = require(d && out, "ensemble_cluster_shortcut: null pointer")) return s;
  return guard([&] {
    *out = new plf_clustering{plf::ensemble_cluster_shortcut(d->m, eps_min, eps_max, min_pts)};
  });
}

int32_t plf_clustering_num_clusters(const plf_clustering* c) { return c ? c->a.num_clusters : -1; }

plf_status plf_clustering_labels(const plf_clustering* c, int32_t* labels, size_t labels_len) {
  if (auto s = require(c && labels, "clustering_labels: null pointer")) return s;
  if (auto s = require(labels_len >= c->a.labels.size(), "clustering_labels: buffer too small"))
    return s;
  std::memcpy(labels, c->a.labels.data(), c->a.labels.size() * sizeof(int32_t));
  return PLF_OK;
}

plf_status plf_clustering_save(const plf_clustering* c, const char* path) {
  if (auto s = require(c && path, "clustering_save: null pointer")) return s;
  return guard([&] { plf::save_assignment(c->a, path); });
}

void plf_clustering_free(plf_clustering* c) { delete c; }

plf_status plf_synth(const char* spec_path, const char* out_dir) {
  if (auto s = require(spec_path && out_dir, "synth: null pointer")) return s;
  return guard([&] { plf::synthesize_dataset(plf::load_synth_job(spec_path), out_dir); });
}

plf_status plf_pipeline_run(const char* config_path, const char* features_dir,
                            const char* meta_path, const char* out_dir, int eval_every,
                            const char* query_dir, const char* gallery_dir, int stop_after) {
  if (auto s = require(config_path && features_dir && meta_path && out_dir,
                       "pipeline_run: null pointer"))
    return s;
  return guard([&] {
    plf::PipelineConfig cfg = plf::load_config(config_path);
    auto paths = plf::backbone_paths(features_dir, cfg.num_backbones);
    plf::run_pipeline(cfg, paths, meta_path, out_dir, eval_every,
                      query_dir ? query_dir : "", gallery_dir ? gallery_dir : "", stop_after);
  });
}

plf_status plf_pipeline_resume(const char* run_dir) {
  if (auto s = require(run_dir != nullptr, "pipeline_resume: null pointer")) return s;
  return guard([&] { plf::resume_run(run_dir); });
}

plf_status plf_evaluate_run(const char* run_dir, const char* query_dir, const char* gallery_dir,
                            int use_momentum_weights, const char* report_path) {
  if (auto s = require(run_dir && query_dir && gallery_dir && report_path,
                       "evaluate_run: null pointer"))
    return s;
  return guard([&] {
    auto report =
        plf::evaluate_run(run_dir, query_dir, gallery_dir, use_momentum_weights != 0);
    plf::save_report(report, report_path);
  });
}

plf_status plf_inspect(const char* run_dir, const char* what, char** out) {
  if (auto s = require(run_dir && what && out, "inspect: null pointer")) return s;
  return guard([&] {
    std::string text = plf::inspect_run(run_dir, what);
    char* buf = static_cast<char*>(std::malloc(text.size() + 1));
    if (!buf) plf::fail(plf::Errc::io, "inspect: out of memory");
    std::memcpy(buf, text.c_str(), text.size() + 1);
    *out = buf;
  });
}

void plf_string_free(char* s) { std::free(s); }

}  // extern "C"
