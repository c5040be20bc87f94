#include "plf/features.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <sstream>

#include "binio.hpp"
#include "plf/error.hpp"

namespace plf {

std::vector<double> fuse_pooling(const FeatureMapStack& maps) {
  if (maps.channels == 0 || maps.height == 0 || maps.width == 0)
    fail(Errc::invalid_argument, "fuse_pooling: empty feature map stack");
  size_t plane = size_t(maps.height) * maps.width;
  if (maps.data.size() != plane * maps.channels)
    fail(Errc::invalid_argument, "fuse_pooling: data size does not match dimensions");

  std::vector<double> out(maps.channels);
  for (uint32_t c = 0; c < maps.channels; ++c) {
    const double* p = maps.data.data() + size_t(c) * plane;
    double mx = p[0];
    double sum = 0.0;
    for (size_t i = 0; i < plane; ++i) {
      mx = std::max(mx, p[i]);
      sum += p[i];
    }
    out[c] = mx + sum / static_cast<double>(plane);
  }
  return out;
}

void l2_normalize_rows(FeatureMatrix& f) {
  for (uint32_t i = 0; i < f.rows; ++i) {
    auto r = f.row(i);
    double sq = 0.0;
    for (double v : r) sq += v * v;
    double norm = std::sqrt(sq);
    if (norm < 1e-150) fail(Errc::data, "zero-vector row " + std::to_string(i));
    for (double& v : r) v /= norm;
  }
}

namespace {

std::vector<std::vector<double>> draw_centers(const SyntheticSpec& spec, Rng& rng) {
  const uint32_t d = spec.latent_dim;
  // Mean pairwise distance of two independent points on a radius-r sphere is
  // about sqrt(2)*r, so scale radii to hit the requested separation.
  const double radius = spec.separation / std::sqrt(2.0);
  const double min_dist = 0.5 * spec.separation;

  std::vector<std::vector<double>> centers;
  centers.reserve(spec.num_identities);
  for (uint32_t i = 0; i < spec.num_identities; ++i) {
    std::vector<double> best;
    double best_min = -1.0;
    for (int attempt = 0; attempt < 200; ++attempt) {
      std::vector<double> c(d);
      double sq = 0.0;
      for (auto& v : c) {
        v = rng.gaussian();
        sq += v * v;
      }
      if (sq == 0.0) continue;
      double scale = radius / std::sqrt(sq);
      for (auto& v : c) v *= scale;
      double nearest = 1e300;
      for (const auto& prev : centers) {
        double s = 0.0;
        for (uint32_t k = 0; k < d; ++k) s += (c[k] - prev[k]) * (c[k] - prev[k]);
        nearest = std::min(nearest, std::sqrt(s));
      }
      if (nearest > best_min) {
        best_min = nearest;
        best = std::move(c);
      }
      if (best_min >= min_dist) break;
    }
    centers.push_back(std::move(best));
  }
  return centers;
}

double identity_noise_multiplier(uint32_t identity) {
  static const double kMult[3] = {0.7, 1.0, 1.3};
  return kMult[identity % 3];
}

}  // namespace

SyntheticDataset generate_synthetic(const SyntheticSpec& spec) {
  if (spec.num_identities == 0 || spec.samples_per_identity == 0 || spec.latent_dim == 0 ||
      spec.num_backbones == 0 || spec.cameras == 0)
    fail(Errc::invalid_argument, "generate_synthetic: counts must be positive");
  if (spec.noise_sigma < 0.0 || spec.separation < 0.0)
    fail(Errc::invalid_argument, "generate_synthetic: noise_sigma/separation must be >= 0");

  const uint32_t n = spec.num_identities * spec.samples_per_identity;
  const uint32_t d = spec.latent_dim;

  Rng rng_centers = Rng::derive(spec.seed, {stream_id(Stream::synth_centers)});
  auto centers = draw_centers(spec, rng_centers);

  Rng rng_latent = Rng::derive(spec.seed, {stream_id(Stream::synth_latent)});
  std::vector<double> latent(size_t(n) * d);
  std::vector<double> noise_mult(n);
  SyntheticDataset out;
  out.meta.resize(n);
  uint32_t row = 0;
  for (uint32_t i = 0; i < spec.num_identities; ++i) {
    double mult = identity_noise_multiplier(i);
    for (uint32_t s = 0; s < spec.samples_per_identity; ++s, ++row) {
      double* x = latent.data() + size_t(row) * d;
      for (uint32_t k = 0; k < d; ++k)
        x[k] = centers[i][k] + spec.noise_sigma * mult * rng_latent.gaussian();
      noise_mult[row] = mult;
      out.meta[row].index = static_cast<int32_t>(row);
      out.meta[row].identity = "id" + std::to_string(i);
      out.meta[row].camera = "cam" + std::to_string(s % spec.cameras);
    }
  }

  out.features.reserve(spec.num_backbones);
  for (uint32_t m = 0; m < spec.num_backbones; ++m) {
    Rng rng_b = Rng::derive(spec.seed, {stream_id(Stream::synth_backbone), m});
    const uint32_t dm = d + 8 * m;
    const double wscale = 1.0 / std::sqrt(static_cast<double>(dm));
    std::vector<double> map(size_t(d) * dm);
    for (auto& w : map) w = wscale * rng_b.gaussian();

    FeatureMatrix f;
    f.rows = n;
    f.dim = dm;
    f.backbone_id = m;
    f.data.resize(size_t(n) * dm);
    for (uint32_t r = 0; r < n; ++r) {
      const double* x = latent.data() + size_t(r) * d;
      double* y = f.data.data() + size_t(r) * dm;
      for (uint32_t j = 0; j < dm; ++j) {
        double acc = 0.0;
        for (uint32_t k = 0; k < d; ++k) acc += x[k] * map[size_t(k) * dm + j];
        y[j] = acc + spec.noise_sigma * noise_mult[r] * rng_b.gaussian();
      }
    }
    l2_normalize_rows(f);
    out.features.push_back(std::move(f));
  }
  return out;
}

static const char kEmbfMagic[4] = {'E', 'M', 'B', 'F'};

FeatureMatrix load_features(const std::string& path) {
  auto in = binio::open_in(path);
  binio::read_magic(in, kEmbfMagic, path);
  uint32_t version = binio::read_u32(in, path);
  if (version != 1) fail(Errc::format, "unsupported embedding file version in " + path);
  FeatureMatrix f;
  f.rows = binio::read_u32(in, path);
  f.dim = binio::read_u32(in, path);
  binio::read_f32(in, f.data, size_t(f.rows) * f.dim, path);
  binio::expect_eof(in, path);
  return f;
}

void save_features(const FeatureMatrix& f, const std::string& path) {
  if (f.data.size() != size_t(f.rows) * f.dim)
    fail(Errc::invalid_argument, "save_features: data size does not match dimensions");
  auto out = binio::open_out(path);
  binio::write_magic(out, kEmbfMagic);
  binio::write_u32(out, 1);
  binio::write_u32(out, f.rows);
  binio::write_u32(out, f.dim);
  binio::write_f32(out, f.data);
  if (!out) fail(Errc::io, "write failed: " + path);
}

std::vector<SampleMeta> load_meta(const std::string& path) {
  std::ifstream in(path);
  if (!in) fail(Errc::io, "cannot open for reading: " + path);
  std::vector<SampleMeta> meta;
  std::string line;
  size_t lineno = 0;
  while (std::getline(in, line)) {
    ++lineno;
    if (line.empty()) continue;
    std::vector<std::string> fields;
    size_t start = 0;
    for (;;) {
      size_t tab = line.find('\t', start);
      if (tab == std::string::npos) {
        fields.push_back(line.substr(start));
        break;
      }
      fields.push_back(line.substr(start, tab - start));
      start = tab + 1;
    }
    if (fields.size() != 3)
      fail(Errc::format, "metadata line " + std::to_string(lineno) + ": expected 3 fields");
    SampleMeta m;
    try {
      m.index = std::stoi(fields[0]);
    } catch (...) {
      fail(Errc::format, "metadata line " + std::to_string(lineno) + ": bad index");
    }
    if (m.index != static_cast<int32_t>(meta.size()))
      fail(Errc::format, "metadata line " + std::to_string(lineno) + ": index not contiguous");
    if (fields[1] != "-") m.identity = fields[1];
    if (fields[2] != "-") m.camera = fields[2];
    meta.push_back(std::move(m));
  }
  return meta;
}

void save_meta(const std::vector<SampleMeta>& meta, const std::string& path) {
  std::ofstream out(path, std::ios::trunc);
  if (!out) fail(Errc::io, "cannot open for writing: " + path);
  for (const auto& m : meta) {
    out << m.index << '\t' << (m.identity.empty() ? "-" : m.identity) << '\t'
        << (m.camera.empty() ? "-" : m.camera) << '\n';
  }
  if (!out) fail(Errc::io, "write failed: " + path);
}

}  // namespace plf
