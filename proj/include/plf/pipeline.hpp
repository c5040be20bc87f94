#pragma once

#include <cstdint>
#include <optional>
#include <string>
#include <vector>

#include "plf/config.hpp"
#include "plf/evaluation.hpp"
#include "plf/features.hpp"

namespace plf {

struct IterationRecord {
  int t = 0;
  double lr = 0.0;
  int32_t num_clusters = 0;
  double outlier_fraction = 0.0;
  bool epochs_skipped = false;
  uint64_t steps_per_backbone = 0;
  std::vector<std::vector<double>> epoch_losses;  // [backbone][epoch] mean batch loss
  std::optional<RankingReport> eval;
};

// Durable description of a run. Serialized as manifest.json in the run
// directory after every iteration; wall-clock timings go to a separate
// timings.json so the manifest is byte-stable across repeated runs.
struct RunManifest {
  PipelineConfig config;
  std::vector<std::string> feature_paths;
  std::string meta_path;
  int eval_every = 0;
  std::string query_dir;
  std::string gallery_dir;
  std::vector<IterationRecord> iterations;
  bool completed = false;
};

// Synthetic dataset job: the generator spec plus how to split what it
// produces. The first train_identities identities form the training set;
// the rest are held out, with the first query_per_identity samples of each
// held-out identity as queries and the remainder as gallery.
struct SynthJob {
  SyntheticSpec spec;
  uint32_t train_identities = 0;
  uint32_t query_per_identity = 0;
};

SynthJob load_synth_job(const std::string& path);

// Writes <out>/train/backbone_<m>.embf + meta.tsv, and when identities are
// held out, <out>/test/query and <out>/test/gallery in the same layout.
void synthesize_dataset(const SynthJob& job, const std::string& out_dir);

// Full training loop. Per iteration: encode every sample with each
// backbone's current weights, refine per-backbone distances by k-reciprocal
// re-ranking, average them, cluster with the two-radius outlier-persistent
// procedure, then run the configured epochs of proxy plus hard-triplet
// optimization per backbone (batches and proxy picks are shared across
// backbones through identically derived streams). Checkpoints, the cluster
// assignment, and the manifest are written every iteration. stop_after > 0
// ends the run early after that iteration (resume continues it).
RunManifest run_pipeline(const PipelineConfig& cfg, const std::vector<std::string>& feature_paths,
                         const std::string& meta_path, const std::string& out_dir,
                         int eval_every = 0, const std::string& query_dir = "",
                         const std::string& gallery_dir = "", int stop_after = 0);

// Continues an interrupted run from its manifest and checkpoints. Random
// streams are derived per (seed, iteration, epoch), so the resumed run
// replays exactly what the uninterrupted run would have done. A completed
// run is a no-op.
RunManifest resume_run(const std::string& run_dir);

// Human-readable views of a run directory; `what` is one of
// clusters | losses | purity.
std::string inspect_run(const std::string& run_dir, const std::string& what);

// Evaluates a run's encoders on a held-out split.
RankingReport evaluate_run(const std::string& run_dir, const std::string& query_dir,
                           const std::string& gallery_dir, bool use_momentum = true);

// The run's per-backbone feature files: <dir>/backbone_<m>.embf.
std::vector<std::string> backbone_paths(const std::string& dir, uint32_t num_backbones);

RunManifest load_manifest(const std::string& run_dir);

}  // namespace plf
