// Command-line front end. Links only the C API.

#include <cstdio>
#include <string>
#include <vector>

#include "CLI11.hpp"
#include "plf.h"

namespace {

int finish(plf_status status) {
  if (status == PLF_OK) return 0;
  std::fprintf(stderr, "error (%s): %s\n", plf_status_name(status), plf_last_error());
  return status == PLF_ERR_INVALID_ARG ? 1 : 2;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"pseudo-label forge: ensemble-refined clustering and self-training over embeddings"};
  app.require_subcommand(1);

  auto* synth = app.add_subcommand("synth", "generate a synthetic labeled dataset");
  std::string synth_spec, synth_out;
  synth->add_option("--spec", synth_spec, "synthesis spec file (key=value)")->required();
  synth->add_option("--out", synth_out, "output dataset directory")->required();

  auto* pipeline = app.add_subcommand("pipeline", "run the pseudo-label training loop");
  std::string pl_config, pl_features, pl_meta, pl_out, pl_query, pl_gallery;
  int pl_eval_every = 0, pl_stop_after = 0;
  bool pl_resume = false;
  pipeline->add_option("--config", pl_config, "pipeline config file (key=value)");
  pipeline->add_option("--features", pl_features, "directory with backbone_<m>.embf files");
  pipeline->add_option("--meta", pl_meta, "metadata file for the training samples");
  pipeline->add_option("--out", pl_out, "run directory")->required();
  pipeline->add_option("--eval-every", pl_eval_every, "evaluate every n iterations");
  pipeline->add_option("--query", pl_query, "query directory for periodic evaluation");
  pipeline->add_option("--gallery", pl_gallery, "gallery directory for periodic evaluation");
  pipeline->add_option("--stop-after", pl_stop_after, "stop after this iteration (resumable)");
  pipeline->add_flag("--resume", pl_resume, "continue an interrupted run from --out");

  auto* cluster = app.add_subcommand("cluster", "cluster a stored distance matrix");
  std::string cl_dist, cl_out;
  double cl_eps_min = 0.5, cl_eps_max = 0.7;
  int cl_min_pts = 4;
  cluster->add_option("--dist", cl_dist, "distance matrix file")->required();
  cluster->add_option("--eps-min", cl_eps_min, "first clustering radius")->required();
  cluster->add_option("--eps-max", cl_eps_max, "final clustering radius")->required();
  cluster->add_option("--min-pts", cl_min_pts, "core neighborhood size")->required();
  cluster->add_option("--out", cl_out, "assignment output file")->required();

  auto* rerank = app.add_subcommand("rerank", "re-rank pairwise distances of stored embeddings");
  std::string rr_features, rr_out;
  int rr_k1 = 30, rr_k2 = 6;
  double rr_mix = 0.0;
  rerank->add_option("--features", rr_features, "embedding file")->required();
  rerank->add_option("--k1", rr_k1, "reciprocal neighborhood size")->required();
  rerank->add_option("--k2", rr_k2, "expansion neighborhood size")->required();
  rerank->add_option("--mix", rr_mix, "blend weight for the original distances")->required();
  rerank->add_option("--out", rr_out, "distance matrix output file")->required();

  auto* eval = app.add_subcommand("eval", "evaluate a run on a held-out split");
  std::string ev_run, ev_query, ev_gallery, ev_out;
  bool ev_raw = false;
  eval->add_option("--run", ev_run, "run directory")->required();
  eval->add_option("--query", ev_query, "query directory")->required();
  eval->add_option("--gallery", ev_gallery, "gallery directory")->required();
  eval->add_option("--out", ev_out, "report output file (json)")->required();
  eval->add_flag("--raw-weights", ev_raw, "use training weights instead of momentum weights");

  auto* inspect = app.add_subcommand("inspect", "report on a run directory");
  std::string in_run, in_what;
  inspect->add_option("--run", in_run, "run directory")->required();
  inspect->add_option("--what", in_what, "one of: clusters, losses, purity")->required();

  try {
    app.parse(argc, argv);
  } catch (const CLI::CallForHelp& e) {
    return app.exit(e);
  } catch (const CLI::ParseError& e) {
    app.exit(e);
    return 1;
  }

  if (*synth) return finish(plf_synth(synth_spec.c_str(), synth_out.c_str()));

  if (*pipeline) {
    if (pl_resume) return finish(plf_pipeline_resume(pl_out.c_str()));
    if (pl_config.empty() || pl_features.empty() || pl_meta.empty()) {
      std::fprintf(stderr, "error: pipeline requires --config, --features, and --meta\n");
      return 1;
    }
    return finish(plf_pipeline_run(pl_config.c_str(), pl_features.c_str(), pl_meta.c_str(),
                                   pl_out.c_str(), pl_eval_every,
                                   pl_query.empty() ? nullptr : pl_query.c_str(),
                                   pl_gallery.empty() ? nullptr : pl_gallery.c_str(),
                                   pl_stop_after));
  }

  if (*cluster) {
    plf_distmat* d = nullptr;
    plf_status s = plf_distmat_load(cl_dist.c_str(), &d);
    if (s != PLF_OK) return finish(s);
    plf_clustering* c = nullptr;
    s = plf_ensemble_cluster_shortcut(d, cl_eps_min, cl_eps_max, cl_min_pts, &c);
    if (s == PLF_OK) s = plf_clustering_save(c, cl_out.c_str());
    plf_clustering_free(c);
    plf_distmat_free(d);
    return finish(s);
  }

  if (*rerank) {
    plf_features* f = nullptr;
    plf_status s = plf_features_load(rr_features.c_str(), &f);
    if (s != PLF_OK) return finish(s);
    plf_distmat* d = nullptr;
    s = plf_pairwise_euclidean(f, &d);
    plf_features_free(f);
    if (s != PLF_OK) return finish(s);
    plf_distmat* r = nullptr;
    s = plf_rerank(d, rr_k1, rr_k2, rr_mix, &r);
    if (s == PLF_OK) s = plf_distmat_save(r, rr_out.c_str());
    plf_distmat_free(r);
    plf_distmat_free(d);
    return finish(s);
  }

  if (*eval)
    return finish(plf_evaluate_run(ev_run.c_str(), ev_query.c_str(), ev_gallery.c_str(),
                                   ev_raw ? 0 : 1, ev_out.c_str()));

  if (*inspect) {
    char* text = nullptr;
    plf_status s = plf_inspect(in_run.c_str(), in_what.c_str(), &text);
    if (s == PLF_OK) {
      std::fputs(text, stdout);
      plf_string_free(text);
    }
    return finish(s);
  }

  return 1;
}
