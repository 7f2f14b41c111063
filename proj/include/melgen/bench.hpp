#pragma once

#include <algorithm>
#include <cstdint>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <numeric>
#include <span>
#include <sstream>
#include <stdexcept>
#include <string>
#include <unordered_set>
#include <vector>

#include "melgen/dataset_io.hpp"
#include "melgen/melody.hpp"
#include "melgen/metrics.hpp"
#include "melgen/vae.hpp"
#include "melgen/version.hpp"

namespace melgen::bench {

struct BenchOptions {
  vae::Method method = vae::Method::kBeta;
  double hp = 1.0;  // beta -> beta, annealed -> C, factor -> gamma_tc
  std::uint64_t seed = 0;
  int subset = 10000;
  int epochs = 50;
  int batch = 512;
  std::filesystem::path out_dir;
  metrics::MetricConfig metric_config;
  int latent_dim = 32;
  int hidden_dim = 256;
  int warmup_epochs = 10;
  std::int64_t anneal_iters = 100000;
};

struct BenchResult {
  vae::TrainConfig config;
  vae::TrainHistory history;
  metrics::MetricReport metrics;
  std::vector<std::uint32_t> subset_indices;
  std::filesystem::path history_csv, codes_csv, factors_csv, metric_report_txt, bench_report_txt;
};

// Uniform seeded draw without replacement, returned in ascending index
// order so emitted files are canonical for a given (count, seed).
inline std::vector<std::uint32_t> draw_subset(int count, std::uint64_t seed) {
  const std::uint32_t n = cardinality();
  if (count <= 0 || static_cast<std::uint32_t>(count) > n) throw std::invalid_argument("bad subset size");
  std::vector<std::uint32_t> out;
  if (static_cast<std::uint32_t>(count) == n) {
    out.resize(n);
    std::iota(out.begin(), out.end(), 0u);
    return out;
  }
  Rng rng(seed);
  std::unordered_set<std::uint32_t> seen;
  seen.reserve(static_cast<std::size_t>(count) * 2);
  out.reserve(static_cast<std::size_t>(count));
  while (out.size() < static_cast<std::size_t>(count)) {
    const auto i = static_cast<std::uint32_t>(rng.below(n));
    if (seen.insert(i).second) out.push_back(i);
  }
  std::sort(out.begin(), out.end());
  return out;
}

inline vae::Dataset make_dataset(std::span<const std::uint32_t> indices) {
  const Vocabulary& vocab = token_vocabulary();
  vae::Dataset data;
  data.vocab = vocab.size();
  data.targets.resize(kSequenceLength, static_cast<Eigen::Index>(indices.size()));
  for (std::size_t c = 0; c < indices.size(); ++c) {
    const auto ids = token_ids(to_tokens(synthesize(index_to_factors(indices[c]))), vocab);
    for (int s = 0; s < kSequenceLength; ++s) data.targets(s, static_cast<Eigen::Index>(c)) = ids[s];
  }
  return data;
}

inline vae::TrainConfig make_train_config(const BenchOptions& opt) {
  vae::TrainConfig cfg;
  cfg.method = opt.method;
  cfg.seed = opt.seed;
  cfg.subset_size = opt.subset;
  cfg.batch = opt.batch;
  cfg.epochs = opt.epochs;
  cfg.warmup_epochs = opt.warmup_epochs;
  cfg.anneal_iters = opt.anneal_iters;
  cfg.latent_dim = opt.latent_dim;
  cfg.hidden_dim = opt.hidden_dim;
  switch (opt.method) {
    case vae::Method::kBeta:
      cfg.beta = opt.hp;
      cfg.kl_threshold = 50.0;
      break;
    case vae::Method::kAnnealed:
      cfg.gamma = 1.0;
      cfg.capacity = opt.hp;
      break;
    case vae::Method::kFactor:
      cfg.gamma = 1.0;
      cfg.capacity = 50.0;
      cfg.gamma_tc = opt.hp;
      cfg.warmup_epochs = 0;  // nothing is warmed up or annealed
      break;
  }
  return cfg;
}

namespace bench_detail {

inline void write_text(const std::filesystem::path& path, const std::string& content) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw std::runtime_error("cannot open for writing: " + path.string());
  out << content;
  if (!out) throw std::runtime_error("write failed: " + path.string());
}

inline std::string format_g(double v) {
  char buf[40];
  std::snprintf(buf, sizeof(buf), "%.9g", v);
  return buf;
}

}  // namespace bench_detail

// Train, export codes + factors, evaluate metrics, write all reports.
// Byte-identical outputs for identical options.
inline BenchResult run_bench(const BenchOptions& opt) {
  namespace fs = std::filesystem;
  if (opt.out_dir.empty()) throw std::invalid_argument("bench requires an output directory");
  fs::create_directories(opt.out_dir);

  BenchResult result;
  result.config = make_train_config(opt);
  result.subset_indices = draw_subset(opt.subset, opt.seed);

  const vae::Dataset data = make_dataset(result.subset_indices);
  auto trained = vae::train<float>(result.config, data);
  result.history = trained.history;

  // history CSV
  result.history_csv = opt.out_dir / "history.csv";
  bench_detail::write_text(result.history_csv, result.history.to_csv());

  // codes CSV (posterior means)
  result.codes_csv = opt.out_dir / "codes.csv";
  {
    std::string out;
    for (int d = 0; d < opt.latent_dim; ++d) {
      if (d) out += ',';
      out += 'z' + std::to_string(d);
    }
    out += '\n';
    for (Eigen::Index r = 0; r < trained.codes.rows(); ++r) {
      for (Eigen::Index d = 0; d < trained.codes.cols(); ++d) {
        if (d) out += ',';
        out += bench_detail::format_g(trained.codes(r, d));
      }
      out += '\n';
    }
    bench_detail::write_text(result.codes_csv, out);
  }

  // factor labels for the subset, aligned row-for-row with the codes
  result.factors_csv = opt.out_dir / "factors.csv";
  {
    std::string out = kFactorsCsvHeader;
    out += '\n';
    for (const std::uint32_t i : result.subset_indices) append_factors_row(i, index_to_factors(i), out);
    bench_detail::write_text(result.factors_csv, out);
  }

  // metric evaluation on the exported codes
  Eigen::MatrixXi labels(static_cast<Eigen::Index>(result.subset_indices.size()), kFactorCount);
  for (std::size_t r = 0; r < result.subset_indices.size(); ++r) {
    const auto codes = csv_codes(index_to_factors(result.subset_indices[r]));
    for (int c = 0; c < kFactorCount; ++c) labels(static_cast<Eigen::Index>(r), c) = codes[c];
  }
  result.metrics = metrics::evaluate(trained.codes, labels, opt.metric_config);

  std::vector<std::string> factor_names;
  for (const auto& [name, options] : FactorSpace::kFactors) factor_names.emplace_back(name);
  result.metric_report_txt = opt.out_dir / "metric_report.txt";
  bench_detail::write_text(result.metric_report_txt, result.metrics.to_text(factor_names));

  // full configuration echo plus final-epoch summary
  result.bench_report_txt = opt.out_dir / "bench_report.txt";
  {
    std::ostringstream out;
    out.precision(12);
    out << "generator = melgen " << kVersion << "\n";
    out << "manifest_version = " << kManifestVersion << "\n";
    out << "method = " << vae::method_name(opt.method) << "\n";
    out << "hp = " << opt.hp << "\n";
    switch (opt.method) {
      case vae::Method::kBeta: out << "hp_maps_to = beta\n"; break;
      case vae::Method::kAnnealed: out << "hp_maps_to = capacity\n"; break;
      case vae::Method::kFactor: out << "hp_maps_to = gamma_tc\n"; break;
    }
    const vae::TrainConfig& c = result.config;
    out << "seed = " << c.seed << "\n";
    out << "subset_size = " << c.subset_size << "\n";
    out << "epochs = " << c.epochs << "\n";
    out << "batch = " << c.batch << "\n";
    out << "warmup_epochs = " << c.warmup_epochs << "\n";
    out << "anneal_iters = " << c.anneal_iters << "\n";
    out << "beta = " << c.beta << "\n";
    out << "kl_threshold = " << c.kl_threshold << "\n";
    out << "gamma = " << c.gamma << "\n";
    out << "capacity = " << c.capacity << "\n";
    out << "gamma_tc = " << c.gamma_tc << "\n";
    out << "learning_rate = " << c.learning_rate << "\n";
    out << "adam_beta1 = " << c.adam_beta1 << "\n";
    out << "adam_beta2 = " << c.adam_beta2 << "\n";
    out << "adam_eps = " << c.adam_eps << "\n";
    out << "disc_learning_rate = " << c.disc_learning_rate << "\n";
    out << "disc_beta1 = " << c.disc_beta1 << "\n";
    out << "disc_beta2 = " << c.disc_beta2 << "\n";
    out << "disc_eps = " << c.disc_eps << "\n";
    out << "disc_hidden = " << c.disc_hidden << "\n";
    out << "disc_leak = " << c.disc_leak << "\n";
    out << "latent_dim = " << c.latent_dim << "\n";
    out << "hidden_dim = " << c.hidden_dim << "\n";
    out << "vocabulary_size = " << token_vocabulary().size() << "\n";
    out << "precision = float32\n";
    out << "architecture = dense encoder/decoder, one tanh hidden layer each (stand-in)\n";
    if (!result.history.loss.empty()) {
      const std::size_t last = result.history.loss.size() - 1;
      out << "final.ce = " << result.history.ce[last] << "\n";
      out << "final.kl = " << result.history.kl[last] << "\n";
      out << "final.loss = " << result.history.loss[last] << "\n";
      out << "final.accuracy = " << result.history.accuracy[last] << "\n";
      out << "final.reg_weight = " << result.history.reg_weight[last] << "\n";
    }
    out << "metrics.mig_mean = " << result.metrics.mig_mean << "\n";
    out << "metrics.modularity_mean = " << result.metrics.modularity_mean << "\n";
    out << "metrics.sap_mean = " << result.metrics.sap_mean << "\n";
    bench_detail::write_text(result.bench_report_txt, out.str());
  }
  return result;
}

}  // namespace melgen::bench
