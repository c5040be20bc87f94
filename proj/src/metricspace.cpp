#include "plf/metricspace.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>

#include "binio.hpp"
#include "plf/error.hpp"
#include "plf/parallel.hpp"

namespace plf {

DistanceMatrix pairwise_euclidean(const FeatureMatrix& f) {
  DistanceMatrix d;
  d.rows = d.cols = f.rows;
  d.kind = DistanceKind::euclidean;
  d.data.assign(size_t(f.rows) * f.rows, 0.0);
  parallel_for(f.rows, [&](size_t begin, size_t end) {
    for (size_t i = begin; i < end; ++i) {
      const double* xi = f.data.data() + i * f.dim;
      for (size_t j = 0; j < f.rows; ++j) {
        const double* xj = f.data.data() + j * f.dim;
        double sq = 0.0;
        for (uint32_t k = 0; k < f.dim; ++k) {
          double diff = xi[k] - xj[k];
          sq += diff * diff;
        }
        d.data[i * f.rows + j] = std::sqrt(sq);
      }
    }
  });
  return d;
}

namespace {

// Per-row neighbor ranks: rank[i][j] = position of j when sorting row i by
// (distance, index). Self sits at rank 0 unless another index ties at zero.
std::vector<int32_t> neighbor_ranks(const DistanceMatrix& d) {
  const uint32_t n = d.rows;
  std::vector<int32_t> rank(size_t(n) * n);
  parallel_for(n, [&](size_t begin, size_t end) {
    std::vector<int32_t> order(n);
    for (size_t i = begin; i < end; ++i) {
      std::iota(order.begin(), order.end(), 0);
      const double* row = d.data.data() + i * n;
      std::sort(order.begin(), order.end(), [row](int32_t a, int32_t b) {
        if (row[a] != row[b]) return row[a] < row[b];
        return a < b;
      });
      for (uint32_t r = 0; r < n; ++r) rank[i * n + order[r]] = static_cast<int32_t>(r);
    }
  });
  return rank;
}

// R(p, k): members of p's k-nearest list whose own k-nearest list contains p.
// The ranked list has self at rank 0, so "k nearest" spans ranks 0..k.
std::vector<int32_t> reciprocal_set(const std::vector<int32_t>& rank, uint32_t n, uint32_t p,
                                    int k) {
  std::vector<int32_t> out;
  const int32_t* rp = rank.data() + size_t(p) * n;
  for (uint32_t q = 0; q < n; ++q) {
    if (rp[q] <= k && rank[size_t(q) * n + p] <= k) out.push_back(static_cast<int32_t>(q));
  }
  return out;
}

struct SparseRow {
  std::vector<int32_t> idx;   // ascending
  std::vector<double> val;
  double sum = 0.0;
};

double min_overlap(const SparseRow& a, const SparseRow& b) {
  double acc = 0.0;
  size_t i = 0, j = 0;
  while (i < a.idx.size() && j < b.idx.size()) {
    if (a.idx[i] < b.idx[j]) {
      ++i;
    } else if (a.idx[i] > b.idx[j]) {
      ++j;
    } else {
      acc += std::min(a.val[i], b.val[j]);
      ++i;
      ++j;
    }
  }
  return acc;
}

}  // namespace

DistanceMatrix rerank_kreciprocal(const DistanceMatrix& d, const RerankParams& params) {
  if (d.rows != d.cols) fail(Errc::invalid_argument, "rerank: matrix must be square");
  if (d.kind != DistanceKind::euclidean)
    fail(Errc::invalid_argument, "rerank: input must be a euclidean distance matrix");
  const uint32_t n = d.rows;
  if (params.k1 < 1 || params.k1 >= static_cast<int>(n))
    fail(Errc::invalid_argument, "rerank: requires 1 <= k1 < number of samples");
  if (params.k2 < 1 || params.k2 > params.k1)
    fail(Errc::invalid_argument, "rerank: requires 1 <= k2 <= k1");
  if (params.mix_weight < 0.0 || params.mix_weight > 1.0)
    fail(Errc::invalid_argument, "rerank: mix_weight must be within [0, 1]");

  const auto rank = neighbor_ranks(d);
  const int half = std::max(1, params.k1 / 2);
  const bool binary = params.encoding == RerankParams::Encoding::binary;

  // Expanded reciprocal sets -> sparse weighted encodings.
  std::vector<SparseRow> enc(n);
  parallel_for(n, [&](size_t begin, size_t end) {
    std::vector<char> member(n);
    for (size_t p = begin; p < end; ++p) {
      auto base = reciprocal_set(rank, n, static_cast<uint32_t>(p), params.k1);
      std::fill(member.begin(), member.end(), 0);
      for (int32_t q : base) member[q] = 1;
      std::vector<int32_t> expanded = base;
      for (int32_t q : base) {
        auto sub = reciprocal_set(rank, n, static_cast<uint32_t>(q), half);
        size_t common = 0;
        for (int32_t r : sub) common += member[r] ? 1u : 0u;
        if (3 * common > 2 * sub.size()) {
          for (int32_t r : sub) expanded.push_back(r);
        }
      }
      std::sort(expanded.begin(), expanded.end());
      expanded.erase(std::unique(expanded.begin(), expanded.end()), expanded.end());

      SparseRow& row = enc[p];
      row.idx = std::move(expanded);
      row.val.resize(row.idx.size());
      const double* dp = d.data.data() + p * n;
      for (size_t t = 0; t < row.idx.size(); ++t)
        row.val[t] = binary ? 1.0 : std::exp(-dp[row.idx[t]]);
    }
  });

  // Local expansion: average encodings over each sample's k2 nearest.
  std::vector<SparseRow> exp_enc(n);
  if (params.k2 == 1) {
    exp_enc = enc;
    for (auto& row : exp_enc) row.sum = std::accumulate(row.val.begin(), row.val.end(), 0.0);
  } else {
    parallel_for(n, [&](size_t begin, size_t end) {
      std::vector<int32_t> nbr(params.k2);
      std::vector<double> dense(n);
      for (size_t p = begin; p < end; ++p) {
        const int32_t* rp = rank.data() + p * n;
        for (uint32_t q = 0; q < n; ++q)
          if (rp[q] < params.k2) nbr[rp[q]] = static_cast<int32_t>(q);
        std::fill(dense.begin(), dense.end(), 0.0);
        for (int32_t q : nbr) {
          const SparseRow& src = enc[q];
          for (size_t t = 0; t < src.idx.size(); ++t) dense[src.idx[t]] += src.val[t];
        }
        SparseRow& row = exp_enc[p];
        const double inv = 1.0 / params.k2;
        for (uint32_t q = 0; q < n; ++q) {
          if (dense[q] != 0.0) {
            row.idx.push_back(static_cast<int32_t>(q));
            row.val.push_back(dense[q] * inv);
            row.sum += dense[q] * inv;
          }
        }
      }
    });
  }

  double dmax = 0.0;
  for (double v : d.data) dmax = std::max(dmax, v);
  const double rescale = dmax > 0.0 ? 1.0 / dmax : 0.0;
  const double mix = params.mix_weight;

  DistanceMatrix out;
  out.rows = out.cols = n;
  out.kind = DistanceKind::jaccard_reranked;
  out.data.assign(size_t(n) * n, 0.0);
  parallel_for(n, [&](size_t begin, size_t end) {
    for (size_t i = begin; i < end; ++i) {
      for (size_t j = i + 1; j < n; ++j) {
        double inter = min_overlap(exp_enc[i], exp_enc[j]);
        double uni = exp_enc[i].sum + exp_enc[j].sum - inter;
        double jac = uni > 0.0 ? 1.0 - inter / uni : 1.0;
        double v = mix * (d.data[i * n + j] * rescale) + (1.0 - mix) * jac;
        out.data[i * n + j] = v;
        out.data[j * n + i] = v;
      }
    }
  });
  return out;
}

DistanceMatrix ensemble_distances(const std::vector<const DistanceMatrix*>& mats) {
  if (mats.empty()) fail(Errc::invalid_argument, "ensemble_distances: no matrices");
  const DistanceMatrix& first = *mats.front();
  for (const DistanceMatrix* m : mats) {
    if (m->rows != first.rows || m->cols != first.cols)
      fail(Errc::invalid_argument, "ensemble_distances: shape mismatch");
    if (m->kind != first.kind)
      fail(Errc::invalid_argument, "ensemble_distances: kind mismatch");
  }
  DistanceMatrix out;
  out.rows = first.rows;
  out.cols = first.cols;
  out.kind = DistanceKind::ensemble;
  out.data.assign(first.data.size(), 0.0);
  const double inv = 1.0 / static_cast<double>(mats.size());
  for (size_t t = 0; t < out.data.size(); ++t) {
    double acc = 0.0;
    for (const DistanceMatrix* m : mats) acc += m->data[t];
    out.data[t] = acc * inv;
  }
  return out;
}

DistanceMatrix query_gallery_distances(const FeatureMatrix& queries,
                                       const FeatureMatrix& gallery) {
  if (queries.dim != gallery.dim)
    fail(Errc::invalid_argument, "query_gallery_distances: dimension mismatch");
  DistanceMatrix d;
  d.rows = queries.rows;
  d.cols = gallery.rows;
  d.kind = DistanceKind::euclidean;
  d.data.assign(size_t(d.rows) * d.cols, 0.0);
  parallel_for(d.rows, [&](size_t begin, size_t end) {
    for (size_t i = begin; i < end; ++i) {
      const double* q = queries.data.data() + i * queries.dim;
      for (size_t j = 0; j < d.cols; ++j) {
        const double* g = gallery.data.data() + j * gallery.dim;
        double sq = 0.0;
        for (uint32_t k = 0; k < queries.dim; ++k) {
          double diff = q[k] - g[k];
          sq += diff * diff;
        }
        d.data[i * d.cols + j] = std::sqrt(sq);
      }
    }
  });
  return d;
}

static const char kDmatMagic[4] = {'D', 'M', 'A', 'T'};

DistanceMatrix load_distances(const std::string& path) {
  auto in = binio::open_in(path);
  binio::read_magic(in, kDmatMagic, path);
  uint32_t version = binio::read_u32(in, path);
  if (version != 1) fail(Errc::format, "unsupported distance file version in " + path);
  DistanceMatrix d;
  d.rows = binio::read_u32(in, path);
  d.cols = binio::read_u32(in, path);
  uint8_t kind = binio::read_u8(in, path);
  if (kind > 2) fail(Errc::format, "unknown distance kind in " + path);
  d.kind = static_cast<DistanceKind>(kind);
  binio::read_f32(in, d.data, size_t(d.rows) * d.cols, path);
  binio::expect_eof(in, path);
  return d;
}

void save_distances(const DistanceMatrix& d, const std::string& path) {
  if (d.data.size() != size_t(d.rows) * d.cols)
    fail(Errc::invalid_argument, "save_distances: data size does not match dimensions");
  auto out = binio::open_out(path);
  binio::write_magic(out, kDmatMagic);
  binio::write_u32(out, 1);
  binio::write_u32(out, d.rows);
  binio::write_u32(out, d.cols);
  binio::write_u8(out, static_cast<uint8_t>(d.kind));
  binio::write_f32(out, d.data);
  if (!out) fail(Errc::io, "write failed: " + path);
}

}  // namespace plf
