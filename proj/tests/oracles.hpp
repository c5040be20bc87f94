// Independent reference implementations used to check the library.
// Deliberately naive: correctness over speed.
#pragma once

#include <cstdint>
#include <optional>
#include <vector>

namespace oracle {

// Density clustering by explicit reachability closure: find core points,
// then BFS over core-core edges and attach border points to the first
// (lowest-index) core that reaches them.  Labels numbered by first
// occurrence, -1 for outliers.
std::vector<int32_t> dbscan_closure(const std::vector<double>& dist, std::size_t n,
                                    double epsilon, int min_pts,
                                    const std::vector<bool>& masked);

// Set-based k-reciprocal Jaccard distance with no neighborhood expansion
// and binary membership weights: d(i,j) = 1 - |Ri ∩ Rj| / |Ri ∪ Rj| where
// Ri is the expanded reciprocal set of i.
std::vector<double> jaccard_sets(const std::vector<double>& dist, std::size_t n, int k1);

// Central finite difference of a scalar function of a parameter vector.
template <typename F>
double central_diff(F&& f, std::vector<double>& params, std::size_t idx, double h) {
  const double saved = params[idx];
  params[idx] = saved + h;
  const double up = f();
  params[idx] = saved - h;
  const double down = f();
  params[idx] = saved;
  return (up - down) / (2.0 * h);
}

// Retrieval metrics by direct enumeration: for each query, sort gallery by
// distance (ties by index), drop same-identity+same-camera entries, then
// walk the ranked list counting hits.  Returns nullopt AP for queries with
// no relevant gallery sample.
struct RankedQuery {
  std::optional<double> ap;
  bool hit1 = false, hit5 = false, hit10 = false;
};
RankedQuery rank_one_query(const std::vector<double>& dist_row,
                           const std::vector<int>& gallery_ids,
                           const std::vector<int>& gallery_cams, int query_id, int query_cam);

}  // namespace oracle
