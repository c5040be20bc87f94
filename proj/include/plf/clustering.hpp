#pragma once

#include <cstdint>
#include <optional>
#include <string>
#include <vector>

#include "plf/features.hpp"
#include "plf/metricspace.hpp"

namespace plf {

constexpr int32_t kOutlier = -1;

// Per-sample cluster labels. Labels are contiguous ids in [0, num_clusters),
// numbered by first occurrence in sample order; outliers carry kOutlier.
// epsilon_trace lists the radii that produced the assignment, in run order.
struct ClusterAssignment {
  std::vector<int32_t> labels;
  int32_t num_clusters = 0;
  std::vector<double> epsilon_trace;
};

struct DbscanParams {
  double epsilon = 0.5;
  int min_pts = 4;
};

// Density clustering over a precomputed distance matrix. Two samples are
// neighbors iff their distance is strictly below epsilon; a sample is a core
// iff its neighborhood, counting itself, holds at least min_pts samples.
// Clusters are the connected components of cores under the neighbor
// relation; a non-core neighbor of a core joins the component of its
// lowest-indexed core neighbor. Samples flagged in `mask` are removed
// entirely (no neighborhood membership) and come back labeled as outliers.
ClusterAssignment dbscan(const DistanceMatrix& d, const DbscanParams& params,
                         const std::vector<bool>* mask = nullptr);

// Runs dbscan at each radius in ascending order. Samples labeled outlier at
// any radius stay masked out of every later run; the final run's labels are
// returned. Outliers therefore never rejoin once detected.
ClusterAssignment ensemble_cluster(const DistanceMatrix& d, const std::vector<double>& eps_list,
                                   int min_pts);

// Equivalent two-run form: mask the outliers of the eps_min run, then run
// once at eps_max.
ClusterAssignment ensemble_cluster_shortcut(const DistanceMatrix& d, double eps_min,
                                            double eps_max, int min_pts);

// Agreement between a clustering and identity labels, over inlier samples.
// Fields are absent when their denominator is empty.
struct ClusterQuality {
  std::optional<double> purity;
  std::optional<double> pair_precision;
  std::optional<double> pair_recall;
  double outlier_fraction = 0.0;
  uint32_t num_inliers = 0;
};

ClusterQuality cluster_quality(const ClusterAssignment& assign,
                               const std::vector<SampleMeta>& truth);

ClusterAssignment load_assignment(const std::string& path);
void save_assignment(const ClusterAssignment& assign, const std::string& path);

}  // namespace plf
