/* C API for the plf pseudo-labeling engine.
 *
 * All functions return a plf_status; PLF_OK means success. On failure a
 * thread-local message is available through plf_last_error(). Objects are
 * opaque handles created through plf_*_create/load calls and released with
 * the matching plf_*_free; freeing NULL is a no-op.
 */
#ifndef PLF_H
#define PLF_H

#include <stddef.h>
#include <stdint.h>

#ifdef __cplusplus
extern "C" {
#endif

typedef enum plf_status {
  PLF_OK = 0,
  PLF_ERR_INVALID_ARG = 1, /* bad parameters or misuse */
  PLF_ERR_IO = 2,          /* file system failure */
  PLF_ERR_FORMAT = 3,      /* malformed or truncated file */
  PLF_ERR_DATA = 4,        /* well-formed but unusable input */
  PLF_ERR_INTERNAL = 5
} plf_status;

const char* plf_status_name(plf_status status);
const char* plf_last_error(void);
const char* plf_version(void);

/* ---- embeddings ---- */

typedef struct plf_features plf_features;

plf_status plf_features_create(uint32_t rows, uint32_t dim, const float* data,
                               plf_features** out);
plf_status plf_features_load(const char* path, plf_features** out);
plf_status plf_features_save(const plf_features* f, const char* path);
plf_status plf_features_normalize_rows(plf_features* f);
uint32_t plf_features_rows(const plf_features* f);
uint32_t plf_features_dim(const plf_features* f);
/* buffer must hold rows*dim floats */
plf_status plf_features_copy_data(const plf_features* f, float* buffer, size_t buffer_len);
void plf_features_free(plf_features* f);

/* Global max pooling plus global average pooling per channel, added
 * elementwise. data is channel-major (channels*height*width); out must hold
 * `channels` floats. */
plf_status plf_fuse_pooling(const float* data, uint32_t channels, uint32_t height, uint32_t width,
                            float* out);

/* ---- distances ---- */

typedef struct plf_distmat plf_distmat;

enum {
  PLF_DIST_EUCLIDEAN = 0,
  PLF_DIST_JACCARD_RERANKED = 1,
  PLF_DIST_ENSEMBLE = 2
};

plf_status plf_pairwise_euclidean(const plf_features* f, plf_distmat** out);
plf_status plf_rerank(const plf_distmat* d, int k1, int k2, double mix_weight, plf_distmat** out);
plf_status plf_ensemble(const plf_distmat* const* mats, size_t count, plf_distmat** out);
plf_status plf_distmat_load(const char* path, plf_distmat** out);
plf_status plf_distmat_save(const plf_distmat* d, const char* path);
uint32_t plf_distmat_rows(const plf_distmat* d);
uint32_t plf_distmat_cols(const plf_distmat* d);
int plf_distmat_kind(const plf_distmat* d);
plf_status plf_distmat_get(const plf_distmat* d, uint32_t row, uint32_t col, double* out);
void plf_distmat_free(plf_distmat* d);

/* ---- clustering ---- */

typedef struct plf_clustering plf_clustering;

plf_status plf_dbscan(const plf_distmat* d, double eps, int min_pts, plf_clustering** out);
plf_status plf_ensemble_cluster(const plf_distmat* d, const double* eps_list, size_t eps_count,
                                int min_pts, plf_clustering** out);
plf_status plf_ensemble_cluster_shortcut(const plf_distmat* d, double eps_min, double eps_max,
                                         int min_pts, plf_clustering** out);
int32_t plf_clustering_num_clusters(const plf_clustering* c);
/* labels buffer must hold one int32 per sample; outliers come back as -1 */
plf_status plf_clustering_labels(const plf_clustering* c, int32_t* labels, size_t labels_len);
plf_status plf_clustering_save(const plf_clustering* c, const char* path);
void plf_clustering_free(plf_clustering* c);

/* ---- end-to-end drivers ---- */

plf_status plf_synth(const char* spec_path, const char* out_dir);

/* query_dir/gallery_dir may be NULL unless eval_every > 0; stop_after = 0
 * runs to completion. */
plf_status plf_pipeline_run(const char* config_path, const char* features_dir,
                            const char* meta_path, const char* out_dir, int eval_every,
                            const char* query_dir, const char* gallery_dir, int stop_after);
plf_status plf_pipeline_resume(const char* run_dir);
plf_status plf_evaluate_run(const char* run_dir, const char* query_dir, const char* gallery_dir,
                            int use_momentum_weights, const char* report_path);
/* *out receives a malloc'd string; release it with plf_string_free. */
plf_status plf_inspect(const char* run_dir, const char* what, char** out);
void plf_string_free(char* s);

#ifdef __cplusplus
}
#endif

#endif /* PLF_H */
