// Exercises the installed binary end to end: exit codes, artifacts, flags.
// Usage: test_cli <path-to-binary>

#include <sys/wait.h>

#include <cstdio>
#include <cstdlib>
#include <filesystem>
#include <string>

#include "testutil.hpp"

namespace fs = std::filesystem;

namespace {

int g_failures = 0;

void expect(bool ok, const std::string& what) {
  if (!ok) {
    ++g_failures;
    std::fprintf(stderr, "FAILED: %s\n", what.c_str());
  }
}

int run(const std::string& cmd) {
  int status = std::system((cmd + " >/dev/null 2>&1").c_str());
  if (status == -1) return -1;
  if (WIFEXITED(status)) return WEXITSTATUS(status);
  return -2;
}

}  // namespace

int main(int argc, char** argv) {
  if (argc < 2) {
    std::fprintf(stderr, "usage: test_cli <binary>\n");
    return 2;
  }
  const std::string bin = argv[1];
  testutil::TempDir tmp("plf_cli");
  const std::string dir = tmp.path.string();

  expect(run(bin) == 1, "no subcommand exits 1");
  expect(run(bin + " --help") == 0, "--help exits 0");
  expect(run(bin + " frobnicate") == 1, "unknown subcommand exits 1");
  expect(run(bin + " synth --spec missing.spec") == 1, "missing required option exits 1");

  testutil::write_text(dir + "/synth.spec",
                       "num_identities = 8\n"
                       "samples_per_identity = 8\n"
                       "latent_dim = 6\n"
                       "num_backbones = 2\n"
                       "noise_sigma = 0.1\n"
                       "separation = 1.0\n"
                       "seed = 3\n"
                       "train_identities = 5\n"
                       "query_per_identity = 2\n");
  expect(run(bin + " synth --spec " + dir + "/synth.spec --out " + dir + "/data") == 0,
         "synth exits 0");
  expect(fs::exists(dir + "/data/train/backbone_0.embf"), "synth writes train features");
  expect(fs::exists(dir + "/data/test/gallery/meta.tsv"), "synth writes gallery metadata");
  expect(run(bin + " synth --spec " + dir + "/missing.spec --out " + dir + "/d2") == 2,
         "missing spec exits 2");

  testutil::write_text(dir + "/bad.spec", "num_identities = -\n");
  expect(run(bin + " synth --spec " + dir + "/bad.spec --out " + dir + "/d3") == 2,
         "bad spec value exits 2");

  testutil::write_text(dir + "/pipe.cfg",
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
  const std::string common = " --config " + dir + "/pipe.cfg --features " + dir +
                             "/data/train --meta " + dir + "/data/train/meta.tsv";
  expect(run(bin + " pipeline" + common + " --out " + dir + "/run --eval-every 2 --query " + dir +
             "/data/test/query --gallery " + dir + "/data/test/gallery") == 0,
         "pipeline exits 0");
  expect(fs::exists(dir + "/run/manifest.json"), "pipeline writes manifest");
  expect(fs::exists(dir + "/run/assignment_0002.tsv"), "pipeline writes assignments");

  expect(run(bin + " pipeline --out " + dir + "/run_x") == 1,
         "pipeline without config/features/meta exits 1");
  testutil::write_text(dir + "/bad.cfg", "epochs = 3\n");
  expect(run(bin + " pipeline --config " + dir + "/bad.cfg --features " + dir +
             "/data/train --meta " + dir + "/data/train/meta.tsv --out " + dir + "/run_y") == 2,
         "unknown config key exits 2");

  expect(run(bin + " pipeline" + common + " --out " + dir + "/run2 --stop-after 1") == 0,
         "interrupted pipeline exits 0");
  expect(run(bin + " pipeline --out " + dir + "/run2 --resume") == 0, "resume exits 0");
  expect(testutil::same_bytes(dir + "/run/checkpoint_b0.ckpt", dir + "/run2/checkpoint_b0.ckpt"),
         "resumed checkpoints match the uninterrupted run");
  expect(run(bin + " pipeline --out " + dir + "/nowhere --resume") == 2,
         "resume without a run exits 2");

  expect(run(bin + " eval --run " + dir + "/run --query " + dir + "/data/test/query --gallery " +
             dir + "/data/test/gallery --out " + dir + "/report.json") == 0,
         "eval exits 0");
  expect(testutil::read_text(dir + "/report.json").find("\"mAP\"") != std::string::npos,
         "eval writes a report");
  expect(run(bin + " eval --run " + dir + "/run --query " + dir + "/data/test/query --gallery " +
             dir + "/data/test/gallery --out " + dir + "/report_raw.json --raw-weights") == 0,
         "eval --raw-weights exits 0");
  expect(run(bin + " eval --run " + dir + "/void --query q --gallery g --out o.json") == 2,
         "eval on a missing run exits 2");

  expect(run(bin + " inspect --run " + dir + "/run --what clusters") == 0, "inspect exits 0");
  expect(run(bin + " inspect --run " + dir + "/run --what losses") == 0, "losses view exits 0");
  expect(run(bin + " inspect --run " + dir + "/run --what purity") == 0, "purity view exits 0");
  expect(run(bin + " inspect --run " + dir + "/run --what vibes") == 1,
         "unknown inspect view exits 1");

  // Standalone matrix tooling: rerank a feature file, cluster the result.
  expect(run(bin + " rerank --features " + dir + "/data/train/backbone_0.embf --k1 7 --k2 3 " +
             "--mix 0 --out " + dir + "/train.dmat") == 0,
         "rerank exits 0");
  expect(run(bin + " cluster --dist " + dir + "/train.dmat --eps-min 0.45 --eps-max 0.65 " +
             "--min-pts 3 --out " + dir + "/assign.tsv") == 0,
         "cluster exits 0");
  expect(testutil::read_text(dir + "/assign.tsv").substr(0, 4) == "# C=",
         "cluster writes an assignment");
  expect(run(bin + " rerank --features " + dir + "/data/train/backbone_0.embf --k1 900 --k2 3 " +
             "--mix 0 --out " + dir + "/x.dmat") == 1,
         "oversized k1 exits 1");
  expect(run(bin + " cluster --dist " + dir + "/missing.dmat --eps-min 0.4 --eps-max 0.6 " +
             "--min-pts 3 --out " + dir + "/y.tsv") == 2,
         "missing distance file exits 2");

  if (g_failures == 0) std::printf("test_cli: all checks passed\n");
  return g_failures == 0 ? 0 : 1;
}
