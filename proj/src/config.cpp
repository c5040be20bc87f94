#include "plf/config.hpp"

#include <fstream>
#include <sstream>

#include "nlohmann/json.hpp"
#include "plf/error.hpp"

namespace plf {

void PipelineConfig::validate() const {
  if (num_backbones < 1) fail(Errc::data, "config: num_backbones must be >= 1");
  if (eps_list.empty()) fail(Errc::data, "config: eps_list must not be empty");
  for (size_t i = 0; i < eps_list.size(); ++i) {
    if (eps_list[i] <= 0.0) fail(Errc::data, "config: eps values must be > 0");
    if (i > 0 && eps_list[i] < eps_list[i - 1])
      fail(Errc::data, "config: eps_list must be ascending");
  }
  if (min_pts < 1) fail(Errc::data, "config: min_pts must be >= 1");
  if (k1 < 1) fail(Errc::data, "config: k1 must be >= 1");
  if (k2 < 1 || k2 > k1) fail(Errc::data, "config: requires 1 <= k2 <= k1");
  if (mix_weight < 0.0 || mix_weight > 1.0)
    fail(Errc::data, "config: mix_weight must be within [0, 1]");
  if (tau <= 0.0) fail(Errc::data, "config: tau must be > 0");
  if (lambda_hard < 0.0) fail(Errc::data, "config: lambda_hard must be >= 0");
  if (beta < 0.0 || beta >= 1.0) fail(Errc::data, "config: beta must be in [0, 1)");
  if (lr_base <= 0.0) fail(Errc::data, "config: lr_base must be > 0");
  if (iterations < 1) fail(Errc::data, "config: iterations must be >= 1");
  if (epochs_per_iteration < 1) fail(Errc::data, "config: epochs_per_iteration must be >= 1");
  if (clusters_per_batch < 2) fail(Errc::data, "config: clusters_per_batch must be >= 2");
  if (samples_per_cluster < 2) fail(Errc::data, "config: samples_per_cluster must be >= 2");
}

namespace {

std::vector<double> parse_eps_list(const std::string& value) {
  std::vector<double> out;
  std::stringstream ss(value);
  std::string tok;
  while (std::getline(ss, tok, ','))
    if (!tok.empty()) out.push_back(std::stod(tok));
  return out;
}

std::string eps_list_to_string(const std::vector<double>& eps) {
  std::string out;
  for (size_t i = 0; i < eps.size(); ++i) {
    if (i) out += ',';
    out += nlohmann::json(eps[i]).dump();
  }
  return out;
}

}  // namespace

PipelineConfig load_config(const std::string& path) {
  std::ifstream in(path);
  if (!in) fail(Errc::io, "cannot open for reading: " + path);
  PipelineConfig cfg;
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
      fail(Errc::format, "config line " + std::to_string(lineno) + ": expected key=value");
    std::string key = line.substr(0, eq);
    std::string value = line.substr(eq + 1);
    while (!key.empty() && (key.back() == ' ' || key.back() == '\t')) key.pop_back();
    while (!value.empty() && (value.front() == ' ' || value.front() == '\t')) value.erase(0, 1);
    try {
      if (key == "num_backbones") {
        cfg.num_backbones = static_cast<uint32_t>(std::stoul(value));
      } else if (key == "eps_list") {
        cfg.eps_list = parse_eps_list(value);
      } else if (key == "min_pts") {
        cfg.min_pts = std::stoi(value);
      } else if (key == "k1") {
        cfg.k1 = std::stoi(value);
      } else if (key == "k2") {
        cfg.k2 = std::stoi(value);
      } else if (key == "mix_weight") {
        cfg.mix_weight = std::stod(value);
      } else if (key == "tau") {
        cfg.tau = std::stod(value);
      } else if (key == "lambda_hard") {
        cfg.lambda_hard = std::stod(value);
      } else if (key == "beta") {
        cfg.beta = std::stod(value);
      } else if (key == "lr_base") {
        cfg.lr_base = std::stod(value);
      } else if (key == "iterations") {
        cfg.iterations = std::stoi(value);
      } else if (key == "epochs_per_iteration") {
        cfg.epochs_per_iteration = std::stoi(value);
      } else if (key == "clusters_per_batch") {
        cfg.clusters_per_batch = std::stoi(value);
      } else if (key == "samples_per_cluster") {
        cfg.samples_per_cluster = std::stoi(value);
      } else if (key == "proxy_mode") {
        if (value == "random") {
          cfg.proxy_mode = ProxyMode::random_sample;
        } else if (value == "mean") {
          cfg.proxy_mode = ProxyMode::cluster_mean;
        } else {
          fail(Errc::data, "config: proxy_mode must be 'random' or 'mean'");
        }
      } else if (key == "seed") {
        cfg.seed = std::stoull(value);
      } else {
        fail(Errc::data, "config line " + std::to_string(lineno) + ": unknown key '" + key + "'");
      }
    } catch (const Error&) {
      throw;
    } catch (...) {
      fail(Errc::format, "config line " + std::to_string(lineno) + ": bad value for '" + key + "'");
    }
  }
  cfg.validate();
  return cfg;
}

void save_config(const PipelineConfig& cfg, const std::string& path) {
  std::ofstream out(path, std::ios::trunc);
  if (!out) fail(Errc::io, "cannot open for writing: " + path);
  auto num = [](double v) { return nlohmann::json(v).dump(); };
  out << "num_backbones=" << cfg.num_backbones << '\n'
      << "eps_list=" << eps_list_to_string(cfg.eps_list) << '\n'
      << "min_pts=" << cfg.min_pts << '\n'
      << "k1=" << cfg.k1 << '\n'
      << "k2=" << cfg.k2 << '\n'
      << "mix_weight=" << num(cfg.mix_weight) << '\n'
      << "tau=" << num(cfg.tau) << '\n'
      << "lambda_hard=" << num(cfg.lambda_hard) << '\n'
      << "beta=" << num(cfg.beta) << '\n'
      << "lr_base=" << num(cfg.lr_base) << '\n'
      << "iterations=" << cfg.iterations << '\n'
      << "epochs_per_iteration=" << cfg.epochs_per_iteration << '\n'
      << "clusters_per_batch=" << cfg.clusters_per_batch << '\n'
      << "samples_per_cluster=" << cfg.samples_per_cluster << '\n'
      << "proxy_mode=" << (cfg.proxy_mode == ProxyMode::random_sample ? "random" : "mean") << '\n'
      << "seed=" << cfg.seed << '\n';
  if (!out) fail(Errc::io, "write failed: " + path);
}

}  // namespace plf
