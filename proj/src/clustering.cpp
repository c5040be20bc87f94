#include "plf/clustering.hpp"

#include <algorithm>
#include <fstream>
#include <sstream>

#include "nlohmann/json.hpp"
#include "plf/error.hpp"

namespace plf {
namespace {

struct UnionFind {
  std::vector<int32_t> parent;
  explicit UnionFind(size_t n) : parent(n) {
    for (size_t i = 0; i < n; ++i) parent[i] = static_cast<int32_t>(i);
  }
  int32_t find(int32_t x) {
    while (parent[x] != x) {
      parent[x] = parent[parent[x]];
      x = parent[x];
    }
    return x;
  }
  void unite(int32_t a, int32_t b) {
    a = find(a);
    b = find(b);
    if (a != b) parent[b] = a;
  }
};

}  // namespace

ClusterAssignment dbscan(const DistanceMatrix& d, const DbscanParams& params,
                         const std::vector<bool>* mask) {
  if (d.rows != d.cols) fail(Errc::invalid_argument, "dbscan: matrix must be square");
  if (params.epsilon <= 0.0) fail(Errc::invalid_argument, "dbscan: epsilon must be > 0");
  if (params.min_pts < 1) fail(Errc::invalid_argument, "dbscan: min_pts must be >= 1");
  if (mask && mask->size() != d.rows)
    fail(Errc::invalid_argument, "dbscan: mask size does not match matrix");

  const uint32_t n = d.rows;
  const double eps = params.epsilon;
  auto masked = [&](uint32_t i) { return mask && (*mask)[i]; };

  // Core test: neighborhood size counts the sample itself.
  std::vector<char> core(n, 0);
  for (uint32_t i = 0; i < n; ++i) {
    if (masked(i)) continue;
    int count = 0;
    const double* row = d.data.data() + size_t(i) * n;
    for (uint32_t j = 0; j < n; ++j)
      if (!masked(j) && row[j] < eps) ++count;
    core[i] = count >= params.min_pts;
  }

  UnionFind uf(n);
  for (uint32_t i = 0; i < n; ++i) {
    if (!core[i]) continue;
    const double* row = d.data.data() + size_t(i) * n;
    for (uint32_t j = i + 1; j < n; ++j)
      if (core[j] && row[j] < eps) uf.unite(static_cast<int32_t>(i), static_cast<int32_t>(j));
  }

  ClusterAssignment out;
  out.labels.assign(n, kOutlier);
  out.epsilon_trace = {eps};

  // Component root per sample: cores use their own component; a non-core
  // attaches to its lowest-indexed core neighbor, if any.
  std::vector<int32_t> root(n, -1);
  for (uint32_t i = 0; i < n; ++i) {
    if (masked(i)) continue;
    if (core[i]) {
      root[i] = uf.find(static_cast<int32_t>(i));
      continue;
    }
    const double* row = d.data.data() + size_t(i) * n;
    for (uint32_t j = 0; j < n; ++j) {
      if (core[j] && row[j] < eps) {
        root[i] = uf.find(static_cast<int32_t>(j));
        break;
      }
    }
  }

  // Number clusters by first occurrence in sample order.
  std::vector<int32_t> label_of_root(n, -1);
  int32_t next = 0;
  for (uint32_t i = 0; i < n; ++i) {
    if (root[i] < 0) continue;
    if (label_of_root[root[i]] < 0) label_of_root[root[i]] = next++;
    out.labels[i] = label_of_root[root[i]];
  }
  out.num_clusters = next;
  return out;
}

ClusterAssignment ensemble_cluster(const DistanceMatrix& d, const std::vector<double>& eps_list,
                                   int min_pts) {
  if (eps_list.empty()) fail(Errc::invalid_argument, "ensemble_cluster: empty radius list");
  for (size_t i = 1; i < eps_list.size(); ++i)
    if (eps_list[i] < eps_list[i - 1])
      fail(Errc::invalid_argument, "ensemble_cluster: radii must be ascending");

  std::vector<bool> mask(d.rows, false);
  ClusterAssignment result;
  for (double eps : eps_list) {
    result = dbscan(d, {eps, min_pts}, &mask);
    for (uint32_t i = 0; i < d.rows; ++i)
      if (result.labels[i] == kOutlier) mask[i] = true;
  }
  result.epsilon_trace = eps_list;
  return result;
}

ClusterAssignment ensemble_cluster_shortcut(const DistanceMatrix& d, double eps_min,
                                            double eps_max, int min_pts) {
  if (eps_min > eps_max)
    fail(Errc::invalid_argument, "ensemble_cluster_shortcut: eps_min must be <= eps_max");
  ClusterAssignment first = dbscan(d, {eps_min, min_pts}, nullptr);
  std::vector<bool> mask(d.rows, false);
  for (uint32_t i = 0; i < d.rows; ++i)
    if (first.labels[i] == kOutlier) mask[i] = true;
  ClusterAssignment result = dbscan(d, {eps_max, min_pts}, &mask);
  result.epsilon_trace = {eps_min, eps_max};
  return result;
}

ClusterQuality cluster_quality(const ClusterAssignment& assign,
                               const std::vector<SampleMeta>& truth) {
  if (assign.labels.size() != truth.size())
    fail(Errc::invalid_argument, "cluster_quality: assignment and truth sizes differ");
  for (const auto& m : truth)
    if (m.identity.empty())
      fail(Errc::data, "cluster_quality: missing identity for sample " + std::to_string(m.index));

  const size_t n = assign.labels.size();
  ClusterQuality q;
  std::vector<size_t> inliers;
  for (size_t i = 0; i < n; ++i)
    if (assign.labels[i] != kOutlier) inliers.push_back(i);
  q.num_inliers = static_cast<uint32_t>(inliers.size());
  q.outlier_fraction = n == 0 ? 0.0 : double(n - inliers.size()) / double(n);
  if (inliers.empty()) return q;

  // Purity: majority identity share per cluster, sample weighted.
  std::vector<std::vector<size_t>> members(assign.num_clusters);
  for (size_t i : inliers) members[assign.labels[i]].push_back(i);
  size_t majority_total = 0;
  for (const auto& cluster : members) {
    std::vector<std::pair<std::string, size_t>> counts;
    for (size_t i : cluster) {
      auto it = std::find_if(counts.begin(), counts.end(),
                             [&](const auto& c) { return c.first == truth[i].identity; });
      if (it == counts.end())
        counts.emplace_back(truth[i].identity, 1);
      else
        ++it->second;
    }
    size_t best = 0;
    for (const auto& c : counts) best = std::max(best, c.second);
    majority_total += best;
  }
  q.purity = double(majority_total) / double(inliers.size());

  size_t same_cluster = 0, same_identity = 0, both = 0;
  for (size_t a = 0; a < inliers.size(); ++a) {
    for (size_t b = a + 1; b < inliers.size(); ++b) {
      size_t i = inliers[a], j = inliers[b];
      bool sc = assign.labels[i] == assign.labels[j];
      bool si = truth[i].identity == truth[j].identity;
      same_cluster += sc;
      same_identity += si;
      both += sc && si;
    }
  }
  if (same_cluster > 0) q.pair_precision = double(both) / double(same_cluster);
  if (same_identity > 0) q.pair_recall = double(both) / double(same_identity);
  return q;
}

void save_assignment(const ClusterAssignment& assign, const std::string& path) {
  std::ofstream out(path, std::ios::trunc);
  if (!out) fail(Errc::io, "cannot open for writing: " + path);
  out << "# C=" << assign.num_clusters << " eps=";
  for (size_t i = 0; i < assign.epsilon_trace.size(); ++i) {
    if (i) out << ',';
    out << nlohmann::json(assign.epsilon_trace[i]).dump();
  }
  out << '\n';
  for (size_t i = 0; i < assign.labels.size(); ++i) out << i << '\t' << assign.labels[i] << '\n';
  if (!out) fail(Errc::io, "write failed: " + path);
}

ClusterAssignment load_assignment(const std::string& path) {
  std::ifstream in(path);
  if (!in) fail(Errc::io, "cannot open for reading: " + path);
  std::string header;
  if (!std::getline(in, header) || header.rfind("# C=", 0) != 0)
    fail(Errc::format, "bad assignment header in " + path);
  size_t eps_pos = header.find(" eps=");
  if (eps_pos == std::string::npos) fail(Errc::format, "bad assignment header in " + path);

  ClusterAssignment assign;
  try {
    assign.num_clusters = std::stoi(header.substr(4, eps_pos - 4));
    std::string trace = header.substr(eps_pos + 5);
    std::stringstream ss(trace);
    std::string tok;
    while (std::getline(ss, tok, ','))
      if (!tok.empty()) assign.epsilon_trace.push_back(std::stod(tok));
  } catch (...) {
    fail(Errc::format, "bad assignment header in " + path);
  }

  std::string line;
  while (std::getline(in, line)) {
    if (line.empty()) continue;
    size_t tab = line.find('\t');
    if (tab == std::string::npos) fail(Errc::format, "bad assignment line in " + path);
    try {
      size_t idx = std::stoul(line.substr(0, tab));
      int32_t label = std::stoi(line.substr(tab + 1));
      if (idx != assign.labels.size()) fail(Errc::format, "assignment indices not contiguous");
      assign.labels.push_back(label);
    } catch (const Error&) {
      throw;
    } catch (...) {
      fail(Errc::format, "bad assignment line in " + path);
    }
  }
  return assign;
}

}  // namespace plf
