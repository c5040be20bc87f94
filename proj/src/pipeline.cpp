#include "plf/pipeline.hpp"

#include <chrono>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <map>

#include "nlohmann/json.hpp"
#include "plf/clustering.hpp"
#include "plf/error.hpp"
#include "plf/metricspace.hpp"

namespace plf {

namespace fs = std::filesystem;
using nlohmann::json;
using nlohmann::ordered_json;

namespace {

std::string assignment_name(int t) {
  char buf[32];
  std::snprintf(buf, sizeof buf, "assignment_%04d.tsv", t);
  return buf;
}

std::string checkpoint_name(uint32_t m) { return "checkpoint_b" + std::to_string(m) + ".ckpt"; }

ordered_json config_to_json(const PipelineConfig& cfg) {
  ordered_json j;
  j["num_backbones"] = cfg.num_backbones;
  j["eps_list"] = cfg.eps_list;
  j["min_pts"] = cfg.min_pts;
  j["k1"] = cfg.k1;
  j["k2"] = cfg.k2;
  j["mix_weight"] = cfg.mix_weight;
  j["tau"] = cfg.tau;
  j["lambda_hard"] = cfg.lambda_hard;
  j["beta"] = cfg.beta;
  j["lr_base"] = cfg.lr_base;
  j["iterations"] = cfg.iterations;
  j["epochs_per_iteration"] = cfg.epochs_per_iteration;
  j["clusters_per_batch"] = cfg.clusters_per_batch;
  j["samples_per_cluster"] = cfg.samples_per_cluster;
  j["proxy_mode"] = cfg.proxy_mode == ProxyMode::random_sample ? "random" : "mean";
  j["seed"] = cfg.seed;
  return j;
}

PipelineConfig config_from_json(const json& j) {
  PipelineConfig cfg;
  cfg.num_backbones = j.at("num_backbones").get<uint32_t>();
  cfg.eps_list = j.at("eps_list").get<std::vector<double>>();
  cfg.min_pts = j.at("min_pts").get<int>();
  cfg.k1 = j.at("k1").get<int>();
  cfg.k2 = j.at("k2").get<int>();
  cfg.mix_weight = j.at("mix_weight").get<double>();
  cfg.tau = j.at("tau").get<double>();
  cfg.lambda_hard = j.at("lambda_hard").get<double>();
  cfg.beta = j.at("beta").get<double>();
  cfg.lr_base = j.at("lr_base").get<double>();
  cfg.iterations = j.at("iterations").get<int>();
  cfg.epochs_per_iteration = j.at("epochs_per_iteration").get<int>();
  cfg.clusters_per_batch = j.at("clusters_per_batch").get<int>();
  cfg.samples_per_cluster = j.at("samples_per_cluster").get<int>();
  cfg.proxy_mode = j.at("proxy_mode").get<std::string>() == "mean" ? ProxyMode::cluster_mean
                                                                   : ProxyMode::random_sample;
  cfg.seed = j.at("seed").get<uint64_t>();
  return cfg;
}

ordered_json report_to_json(const RankingReport& r) {
  ordered_json j;
  j["mAP"] = r.mAP;
  j["rank1"] = r.rank1;
  j["rank5"] = r.rank5;
  j["rank10"] = r.rank10;
  j["num_queries"] = r.num_queries;
  j["skipped_queries"] = r.skipped_queries;
  j["per_query_ap"] = r.per_query_ap;
  return j;
}

RankingReport report_from_json(const json& j) {
  RankingReport r;
  r.mAP = j.at("mAP").get<double>();
  r.rank1 = j.at("rank1").get<double>();
  r.rank5 = j.at("rank5").get<double>();
  r.rank10 = j.at("rank10").get<double>();
  r.num_queries = j.at("num_queries").get<uint32_t>();
  r.skipped_queries = j.at("skipped_queries").get<uint32_t>();
  r.per_query_ap = j.at("per_query_ap").get<std::vector<double>>();
  return r;
}

void write_manifest(const RunManifest& m, const std::string& run_dir) {
  ordered_json j;
  j["format"] = "plf-run-v1";
  j["config"] = config_to_json(m.config);
  j["feature_paths"] = m.feature_paths;
  j["meta_path"] = m.meta_path;
  j["eval_every"] = m.eval_every;
  j["query_dir"] = m.query_dir;
  j["gallery_dir"] = m.gallery_dir;
  j["completed"] = m.completed;
  ordered_json iters = ordered_json::array();
  for (const auto& rec : m.iterations) {
    ordered_json r;
    r["t"] = rec.t;
    r["lr"] = rec.lr;
    r["num_clusters"] = rec.num_clusters;
    r["outlier_fraction"] = rec.outlier_fraction;
    r["epochs_skipped"] = rec.epochs_skipped;
    r["steps_per_backbone"] = rec.steps_per_backbone;
    r["epoch_losses"] = rec.epoch_losses;
    if (rec.eval) r["eval"] = report_to_json(*rec.eval);
    iters.push_back(std::move(r));
  }
  j["iterations"] = std::move(iters);
  std::ofstream out(fs::path(run_dir) / "manifest.json", std::ios::trunc);
  if (!out) fail(Errc::io, "cannot write manifest in " + run_dir);
  out << j.dump(2) << '\n';
  if (!out) fail(Errc::io, "manifest write failed in " + run_dir);
}

struct IterationTiming {
  int t = 0;
  double distances_seconds = 0.0;
  double clustering_seconds = 0.0;
  double training_seconds = 0.0;
  double eval_seconds = 0.0;
};

void write_timings(const std::vector<IterationTiming>& timings, const std::string& run_dir) {
  ordered_json j;
  ordered_json arr = ordered_json::array();
  for (const auto& t : timings) {
    ordered_json r;
    r["t"] = t.t;
    r["distances_seconds"] = t.distances_seconds;
    r["clustering_seconds"] = t.clustering_seconds;
    r["training_seconds"] = t.training_seconds;
    r["eval_seconds"] = t.eval_seconds;
    arr.push_back(std::move(r));
  }
  j["iterations"] = std::move(arr);
  std::ofstream out(fs::path(run_dir) / "timings.json", std::ios::trunc);
  if (out) out << j.dump(2) << '\n';
}

double seconds_since(std::chrono::steady_clock::time_point start) {
  return std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
}

// Runs iterations start_t..end and keeps the run directory artifacts
// current after each one.
void advance_run(RunManifest& manifest, std::vector<EncoderState>& states,
                 const std::vector<FeatureMatrix>& raw, const std::string& run_dir, int start_t,
                 int stop_after, std::vector<IterationTiming>& timings) {
  const PipelineConfig& cfg = manifest.config;
  const uint32_t n = raw.front().rows;
  LrSchedule sched{cfg.lr_base, 10, cfg.iterations};
  RerankParams rr{cfg.k1, cfg.k2, cfg.mix_weight, RerankParams::Encoding::gaussian};

  std::optional<EvalSplit> split;
  if (manifest.eval_every > 0)
    split = load_split(manifest.query_dir, manifest.gallery_dir, cfg.num_backbones);

  int end_t = cfg.iterations;
  if (stop_after > 0 && stop_after < end_t) end_t = stop_after;

  for (int t = start_t; t <= end_t; ++t) {
    IterationTiming timing;
    timing.t = t;
    IterationRecord rec;
    rec.t = t;
    rec.lr = learning_rate(t, sched);

    auto t0 = std::chrono::steady_clock::now();
    std::vector<DistanceMatrix> refined(cfg.num_backbones);
    for (uint32_t m = 0; m < cfg.num_backbones; ++m) {
      FeatureMatrix enc = encoder_forward(states[m], raw[m]);
      DistanceMatrix d = pairwise_euclidean(enc);
      refined[m] = rerank_kreciprocal(d, rr);
    }
    std::vector<const DistanceMatrix*> ptrs;
    for (const auto& d : refined) ptrs.push_back(&d);
    DistanceMatrix mean = ensemble_distances(ptrs);
    refined.clear();
    timing.distances_seconds = seconds_since(t0);

    t0 = std::chrono::steady_clock::now();
    ClusterAssignment assign =
        ensemble_cluster_shortcut(mean, cfg.eps_list.front(), cfg.eps_list.back(), cfg.min_pts);
    save_assignment(assign, (fs::path(run_dir) / assignment_name(t)).string());
    rec.num_clusters = assign.num_clusters;
    uint32_t outliers = 0;
    for (int32_t l : assign.labels) outliers += l == kOutlier;
    rec.outlier_fraction = n == 0 ? 0.0 : double(outliers) / double(n);
    timing.clustering_seconds = seconds_since(t0);

    t0 = std::chrono::steady_clock::now();
    rec.epoch_losses.assign(cfg.num_backbones, {});
    if (assign.num_clusters < cfg.clusters_per_batch) {
      rec.epochs_skipped = true;
      std::fprintf(stderr,
                   "warning: iteration %d found %d clusters, fewer than clusters_per_batch=%d; "
                   "skipping its epochs\n",
                   t, assign.num_clusters, cfg.clusters_per_batch);
    } else {
      std::vector<std::vector<Batch>> batches(cfg.epochs_per_iteration);
      for (int e = 0; e < cfg.epochs_per_iteration; ++e) {
        Rng rng = Rng::derive(cfg.seed, {stream_id(Stream::batches), uint64_t(t), uint64_t(e)});
        batches[e] = make_batches(assign, rng, cfg.clusters_per_batch, cfg.samples_per_cluster);
      }
      rec.steps_per_backbone =
          uint64_t(cfg.epochs_per_iteration) * (assign.num_clusters / cfg.clusters_per_batch);
      for (uint32_t m = 0; m < cfg.num_backbones; ++m) {
        for (int e = 0; e < cfg.epochs_per_iteration; ++e) {
          FeatureMatrix snapshot = encoder_forward(states[m], raw[m]);
          Rng rng = Rng::derive(cfg.seed, {stream_id(Stream::proxies), uint64_t(t), uint64_t(e)});
          ProxySet proxies = select_proxies(assign, snapshot, rng, cfg.proxy_mode);
          double loss = train_epoch(states[m], raw[m], batches[e], proxies, cfg.tau,
                                    cfg.lambda_hard, rec.lr, cfg.beta);
          rec.epoch_losses[m].push_back(loss);
        }
      }
    }
    timing.training_seconds = seconds_since(t0);

    if (manifest.eval_every > 0 && t % manifest.eval_every == 0) {
      t0 = std::chrono::steady_clock::now();
      rec.eval = evaluate(*split, states, true);
      timing.eval_seconds = seconds_since(t0);
    }

    // Checkpoints store binary32; snap the live state to the same values so
    // a resumed run continues from exactly the bits it reloads.
    for (uint32_t m = 0; m < cfg.num_backbones; ++m) {
      states[m].round_to_f32();
      save_checkpoint(states[m], static_cast<uint32_t>(t),
                      (fs::path(run_dir) / checkpoint_name(m)).string());
    }
    manifest.iterations.push_back(std::move(rec));
    manifest.completed = t == cfg.iterations;
    write_manifest(manifest, run_dir);
    timings.push_back(timing);
    write_timings(timings, run_dir);
  }
}

std::vector<FeatureMatrix> load_run_features(const RunManifest& manifest) {
  std::vector<FeatureMatrix> raw;
  raw.reserve(manifest.feature_paths.size());
  uint32_t rows = 0;
  for (uint32_t m = 0; m < manifest.feature_paths.size(); ++m) {
    FeatureMatrix f = load_features(manifest.feature_paths[m]);
    f.backbone_id = m;
    if (m == 0) {
      rows = f.rows;
    } else if (f.rows != rows) {
      fail(Errc::data, "feature files disagree on sample count");
    }
    raw.push_back(std::move(f));
  }
  if (raw.empty() || rows == 0) fail(Errc::data, "no samples to train on");
  return raw;
}

}  // namespace

std::vector<std::string> backbone_paths(const std::string& dir, uint32_t num_backbones) {
  std::vector<std::string> paths;
  for (uint32_t m = 0; m < num_backbones; ++m)
    paths.push_back((fs::path(dir) / ("backbone_" + std::to_string(m) + ".embf")).string());
  return paths;
}

RunManifest run_pipeline(const PipelineConfig& cfg, const std::vector<std::string>& feature_paths,
                         const std::string& meta_path, const std::string& out_dir, int eval_every,
                         const std::string& query_dir, const std::string& gallery_dir,
                         int stop_after) {
  cfg.validate();
  if (feature_paths.size() != cfg.num_backbones)
    fail(Errc::data, "expected " + std::to_string(cfg.num_backbones) + " feature files, got " +
                         std::to_string(feature_paths.size()));
  if (eval_every < 0) fail(Errc::invalid_argument, "eval_every must be >= 0");
  if (eval_every > 0 && (query_dir.empty() || gallery_dir.empty()))
    fail(Errc::invalid_argument, "eval_every requires query and gallery directories");

  RunManifest manifest;
  manifest.config = cfg;
  for (const auto& p : feature_paths)
    manifest.feature_paths.push_back(fs::absolute(p).string());
  manifest.meta_path = fs::absolute(meta_path).string();
  manifest.eval_every = eval_every;
  if (!query_dir.empty()) manifest.query_dir = fs::absolute(query_dir).string();
  if (!gallery_dir.empty()) manifest.gallery_dir = fs::absolute(gallery_dir).string();

  std::error_code ec;
  fs::create_directories(out_dir, ec);
  if (ec) fail(Errc::io, "cannot create run directory " + out_dir);

  auto raw = load_run_features(manifest);
  auto meta = load_meta(manifest.meta_path);
  if (meta.size() != raw.front().rows)
    fail(Errc::data, "metadata and features disagree on sample count");
  save_meta(meta, (fs::path(out_dir) / "meta.tsv").string());

  std::vector<EncoderState> states;
  for (uint32_t m = 0; m < cfg.num_backbones; ++m) {
    states.push_back(EncoderState::identity_init(m, raw[m].dim));
    states[m].round_to_f32();
  }

  std::vector<IterationTiming> timings;
  advance_run(manifest, states, raw, out_dir, 1, stop_after, timings);
  return manifest;
}

RunManifest load_manifest(const std::string& run_dir) {
  fs::path path = fs::path(run_dir) / "manifest.json";
  std::ifstream in(path);
  if (!in) fail(Errc::io, "cannot open manifest: " + path.string());
  json j;
  try {
    in >> j;
    if (j.at("format").get<std::string>() != "plf-run-v1")
      fail(Errc::format, "unknown manifest format in " + path.string());
    RunManifest m;
    m.config = config_from_json(j.at("config"));
    m.feature_paths = j.at("feature_paths").get<std::vector<std::string>>();
    m.meta_path = j.at("meta_path").get<std::string>();
    m.eval_every = j.at("eval_every").get<int>();
    m.query_dir = j.at("query_dir").get<std::string>();
    m.gallery_dir = j.at("gallery_dir").get<std::string>();
    m.completed = j.at("completed").get<bool>();
    for (const auto& r : j.at("iterations")) {
      IterationRecord rec;
      rec.t = r.at("t").get<int>();
      rec.lr = r.at("lr").get<double>();
      rec.num_clusters = r.at("num_clusters").get<int32_t>();
      rec.outlier_fraction = r.at("outlier_fraction").get<double>();
      rec.epochs_skipped = r.at("epochs_skipped").get<bool>();
      rec.steps_per_backbone = r.at("steps_per_backbone").get<uint64_t>();
      rec.epoch_losses = r.at("epoch_losses").get<std::vector<std::vector<double>>>();
      if (r.contains("eval")) rec.eval = report_from_json(r.at("eval"));
      m.iterations.push_back(std::move(rec));
    }
    return m;
  } catch (const Error&) {
    throw;
  } catch (const json::exception& e) {
    fail(Errc::format, "bad manifest in " + path.string() + ": " + e.what());
  }
}

RunManifest resume_run(const std::string& run_dir) {
  RunManifest manifest = load_manifest(run_dir);
  if (manifest.completed) return manifest;

  const int done = static_cast<int>(manifest.iterations.size());
  if (done < 1) fail(Errc::data, "run has no completed iterations to resume from");
  auto raw = load_run_features(manifest);

  std::vector<EncoderState> states;
  for (uint32_t m = 0; m < manifest.config.num_backbones; ++m) {
    fs::path path = fs::path(run_dir) / checkpoint_name(m);
    if (!fs::exists(path)) fail(Errc::data, "missing checkpoint: " + path.string());
    Checkpoint ckpt = load_checkpoint(path.string());
    if (ckpt.iteration != static_cast<uint32_t>(done))
      fail(Errc::format, "corrupt checkpoint: iteration " + std::to_string(ckpt.iteration) +
                             " does not match manifest progress " + std::to_string(done));
    if (ckpt.state.in_dim != raw[m].dim)
      fail(Errc::format, "corrupt checkpoint: dimension mismatch for backbone " +
                             std::to_string(m));
    ckpt.state.backbone_id = m;
    states.push_back(std::move(ckpt.state));
  }

  std::vector<IterationTiming> timings;  // fresh; timings are informational only
  advance_run(manifest, states, raw, run_dir, done + 1, 0, timings);
  return manifest;
}

RankingReport evaluate_run(const std::string& run_dir, const std::string& query_dir,
                           const std::string& gallery_dir, bool use_momentum) {
  RunManifest manifest = load_manifest(run_dir);
  std::vector<EncoderState> states;
  for (uint32_t m = 0; m < manifest.config.num_backbones; ++m) {
    fs::path path = fs::path(run_dir) / checkpoint_name(m);
    if (!fs::exists(path)) fail(Errc::data, "missing checkpoint: " + path.string());
    states.push_back(load_checkpoint(path.string()).state);
  }
  EvalSplit split = load_split(query_dir, gallery_dir, manifest.config.num_backbones);
  return evaluate(split, states, use_momentum);
}

std::string inspect_run(const std::string& run_dir, const std::string& what) {
  RunManifest manifest = load_manifest(run_dir);
  if (manifest.iterations.empty()) fail(Errc::data, "run has no iterations to inspect");

  if (what == "clusters") {
    int last = manifest.iterations.back().t;
    fs::path path = fs::path(run_dir) / assignment_name(last);
    if (!fs::exists(path)) fail(Errc::data, "missing artifact: " + path.string());
    ClusterAssignment assign = load_assignment(path.string());
    size_t outliers = 0;
    std::vector<size_t> sizes(assign.num_clusters, 0);
    for (int32_t l : assign.labels) {
      if (l == kOutlier)
        ++outliers;
      else
        ++sizes[l];
    }
    std::map<size_t, size_t> histogram;
    for (size_t s : sizes) ++histogram[s];
    std::string out;
    out += "iteration=" + std::to_string(last) + "\n";
    out += "num_clusters=" + std::to_string(assign.num_clusters) + "\n";
    out += "num_samples=" + std::to_string(assign.labels.size()) + "\n";
    out += "num_outliers=" + std::to_string(outliers) + "\n";
    for (const auto& [size, count] : histogram)
      out += "cluster_size=" + std::to_string(size) + " count=" + std::to_string(count) + "\n";
    return out;
  }

  if (what == "losses") {
    std::string out = "iteration,epoch,backbone,loss\n";
    for (const auto& rec : manifest.iterations) {
      for (size_t m = 0; m < rec.epoch_losses.size(); ++m) {
        for (size_t e = 0; e < rec.epoch_losses[m].size(); ++e) {
          out += std::to_string(rec.t) + "," + std::to_string(e + 1) + "," + std::to_string(m) +
                 "," + json(rec.epoch_losses[m][e]).dump() + "\n";
        }
      }
    }
    return out;
  }

  if (what == "purity") {
    fs::path meta_path = fs::path(run_dir) / "meta.tsv";
    if (!fs::exists(meta_path)) fail(Errc::data, "missing artifact: " + meta_path.string());
    auto meta = load_meta(meta_path.string());
    for (const auto& m : meta)
      if (m.identity.empty())
        fail(Errc::data, "missing artifact: run metadata carries no identities");
    int last = manifest.iterations.back().t;
    fs::path path = fs::path(run_dir) / assignment_name(last);
    if (!fs::exists(path)) fail(Errc::data, "missing artifact: " + path.string());
    ClusterQuality q = cluster_quality(load_assignment(path.string()), meta);
    auto opt = [](const std::optional<double>& v) {
      return v ? json(*v).dump() : std::string("absent");
    };
    std::string out;
    out += "iteration=" + std::to_string(last) + "\n";
    out += "purity=" + opt(q.purity) + "\n";
    out += "pair_precision=" + opt(q.pair_precision) + "\n";
    out += "pair_recall=" + opt(q.pair_recall) + "\n";
    out += "outlier_fraction=" + json(q.outlier_fraction).dump() + "\n";
    return out;
  }

  fail(Errc::invalid_argument, "inspect: unknown view '" + what +
                                   "' (expected clusters, losses, or purity)");
}

SynthJob load_synth_job(const std::string& path) {
  std::ifstream in(path);
  if (!in) fail(Errc::io, "cannot open for reading: " + path);
  SynthJob job;
  job.spec.num_identities = 20;
  job.spec.samples_per_identity = 30;
  job.spec.latent_dim = 8;
  job.spec.num_backbones = 3;
  job.spec.noise_sigma = 0.1;
  job.spec.separation = 1.0;
  job.train_identities = 10;
  job.query_per_identity = 5;

  std::string line;
  size_t lineno = 0;
  while (std::getline(in, line)) {
    ++lineno;
    size_t hash = line.find('#');
    if (hash != std::string::npos) line.resize(hash);
    size_t first = line.find_first_not_of(" \t\r");
    if (first == std::string::npos) continue;
    size_t last = line.find_last_not_of(" \t\r");
    line = line.substr(first, last - first + 1);
    size_t eq = line.find('=');
    if (eq == std::string::npos)
      fail(Errc::format, "synth spec line " + std::to_string(lineno) + ": expected key=value");
    std::string key = line.substr(0, eq);
    std::string value = line.substr(eq + 1);
    while (!key.empty() && (key.back() == ' ' || key.back() == '\t')) key.pop_back();
    while (!value.empty() && (value.front() == ' ' || value.front() == '\t')) value.erase(0, 1);
    try {
      if (key == "num_identities") {
        job.spec.num_identities = static_cast<uint32_t>(std::stoul(value));
      } else if (key == "samples_per_identity") {
        job.spec.samples_per_identity = static_cast<uint32_t>(std::stoul(value));
      } else if (key == "latent_dim") {
        job.spec.latent_dim = static_cast<uint32_t>(std::stoul(value));
      } else if (key == "num_backbones") {
        job.spec.num_backbones = static_cast<uint32_t>(std::stoul(value));
      } else if (key == "noise_sigma") {
        job.spec.noise_sigma = std::stod(value);
      } else if (key == "separation") {
        job.spec.separation = std::stod(value);
      } else if (key == "cameras") {
        job.spec.cameras = static_cast<uint32_t>(std::stoul(value));
      } else if (key == "seed") {
        job.spec.seed = std::stoull(value);
      } else if (key == "train_identities") {
        job.train_identities = static_cast<uint32_t>(std::stoul(value));
      } else if (key == "query_per_identity") {
        job.query_per_identity = static_cast<uint32_t>(std::stoul(value));
      } else {
        fail(Errc::data,
             "synth spec line " + std::to_string(lineno) + ": unknown key '" + key + "'");
      }
    } catch (const Error&) {
      throw;
    } catch (...) {
      fail(Errc::format,
           "synth spec line " + std::to_string(lineno) + ": bad value for '" + key + "'");
    }
  }
  if (job.train_identities < 1 || job.train_identities > job.spec.num_identities)
    fail(Errc::data, "synth spec: train_identities must be within [1, num_identities]");
  if (job.train_identities < job.spec.num_identities &&
      (job.query_per_identity < 1 || job.query_per_identity >= job.spec.samples_per_identity))
    fail(Errc::data, "synth spec: query_per_identity must be within [1, samples_per_identity)");
  return job;
}

namespace {

// Rows of the full dataset restricted to `keep`, renumbered contiguously.
void write_subset(const SyntheticDataset& data, const std::vector<uint32_t>& keep,
                  const std::string& dir) {
  std::error_code ec;
  fs::create_directories(dir, ec);
  if (ec) fail(Errc::io, "cannot create directory " + dir);
  std::vector<SampleMeta> meta;
  meta.reserve(keep.size());
  for (uint32_t row : keep) {
    SampleMeta m = data.meta[row];
    m.index = static_cast<int32_t>(meta.size());
    meta.push_back(std::move(m));
  }
  save_meta(meta, (fs::path(dir) / "meta.tsv").string());
  for (size_t b = 0; b < data.features.size(); ++b) {
    const FeatureMatrix& src = data.features[b];
    FeatureMatrix sub;
    sub.rows = static_cast<uint32_t>(keep.size());
    sub.dim = src.dim;
    sub.backbone_id = src.backbone_id;
    sub.data.resize(size_t(sub.rows) * sub.dim);
    for (size_t i = 0; i < keep.size(); ++i) {
      auto row = src.row(keep[i]);
      std::copy(row.begin(), row.end(), sub.data.begin() + i * sub.dim);
    }
    save_features(sub, (fs::path(dir) / ("backbone_" + std::to_string(b) + ".embf")).string());
  }
}

}  // namespace

void synthesize_dataset(const SynthJob& job, const std::string& out_dir) {
  SyntheticDataset data = generate_synthetic(job.spec);
  const uint32_t per_id = job.spec.samples_per_identity;

  std::vector<uint32_t> train, query, gallery;
  for (uint32_t row = 0; row < data.meta.size(); ++row) {
    uint32_t identity = row / per_id;
    uint32_t s = row % per_id;
    if (identity < job.train_identities) {
      train.push_back(row);
    } else if (s < job.query_per_identity) {
      query.push_back(row);
    } else {
      gallery.push_back(row);
    }
  }
  write_subset(data, train, (fs::path(out_dir) / "train").string());
  if (!query.empty()) {
    write_subset(data, query, (fs::path(out_dir) / "test" / "query").string());
    write_subset(data, gallery, (fs::path(out_dir) / "test" / "gallery").string());
  }
}

}  // namespace plf
