#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include "plf/training.hpp"

namespace plf {

// Pipeline hyperparameters. The file form is flat key=value lines, one key
// per line; '#' starts a comment. Unknown keys are rejected.
struct PipelineConfig {
  uint32_t num_backbones = 3;
  std::vector<double> eps_list = {0.5, 0.55, 0.6, 0.65, 0.7};
  int min_pts = 4;
  int k1 = 30;
  int k2 = 6;
  double mix_weight = 0.0;
  double tau = 0.04;
  double lambda_hard = 0.5;
  double beta = 0.999;
  double lr_base = 0.00035;
  int iterations = 30;
  int epochs_per_iteration = 7;
  int clusters_per_batch = 16;
  int samples_per_cluster = 12;
  ProxyMode proxy_mode = ProxyMode::random_sample;
  uint64_t seed = 1;

  void validate() const;
};

PipelineConfig load_config(const std::string& path);
void save_config(const PipelineConfig& cfg, const std::string& path);

}  // namespace plf
