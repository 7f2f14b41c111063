#include <cstdint>
#include <exception>
#include <filesystem>
#include <iostream>
#include <sstream>
#include <string>
#include <vector>

#include <CLI11.hpp>

#include "melgen/bench.hpp"
#include "melgen/dataset_io.hpp"
#include "melgen/factor_space.hpp"
#include "melgen/melody.hpp"
#include "melgen/metrics.hpp"
#include "melgen/midi.hpp"
#include "melgen/rhythm.hpp"
#include "melgen/version.hpp"

namespace {

using namespace melgen;

struct Range {
  std::uint32_t lo = 0;
  std::uint32_t hi = cardinality();
};

Range parse_range(const std::string& text) {
  const auto sep = text.find("..");
  if (sep == std::string::npos) throw std::invalid_argument("range must look like A..B");
  Range r;
  r.lo = static_cast<std::uint32_t>(std::stoull(text.substr(0, sep)));
  r.hi = static_cast<std::uint32_t>(std::stoull(text.substr(sep + 2)));
  if (r.lo > r.hi || r.hi > cardinality()) throw std::out_of_range("range outside the dataset");
  return r;
}

void print_version_banner() { std::cout << "melgen " << kVersion << " (manifest v" << kManifestVersion << ")\n"; }

int cmd_generate(const std::string& out_dir, const std::string& range_text, const std::string& formats_text,
                 int workers) {
  namespace fs = std::filesystem;
  const Range range = parse_range(range_text);
  fs::create_directories(out_dir);

  bool want_csv = false, want_tokens = false, want_midi = false;
  std::stringstream ss(formats_text);
  std::string fmt;
  while (std::getline(ss, fmt, ',')) {
    if (fmt == "csv") want_csv = true;
    else if (fmt == "tokens") want_tokens = true;
    else if (fmt == "midi") want_midi = true;
    else throw std::invalid_argument("unknown format: " + fmt);
  }
  if (!want_csv && !want_tokens && !want_midi) throw std::invalid_argument("no output formats selected");

  const MidiParams midi_params;
  std::vector<std::pair<std::string, std::string>> digests;
  if (want_csv) {
    const WriteResult r = write_factors_csv(range.lo, range.hi, fs::path(out_dir) / "factors.csv", workers);
    digests.emplace_back("factors_csv", digest_hex(r.digest));
    std::cout << "factors.csv rows = " << r.count << "\n";
  }
  if (want_tokens) {
    const WriteResult r = write_tokens(range.lo, range.hi, fs::path(out_dir) / "tokens.txt", workers);
    digests.emplace_back("tokens_txt", digest_hex(r.digest));
    std::cout << "tokens.txt lines = " << r.count << "\n";
  }
  if (want_midi) {
    const std::uint64_t n = write_midi_files(range.lo, range.hi, fs::path(out_dir) / "midi", midi_params, workers);
    std::cout << "midi files = " << n << "\n";
  }

  const std::string manifest = render_manifest(range.lo, range.hi, midi_params, digests);
  {
    std::ofstream out(fs::path(out_dir) / "manifest.txt", std::ios::binary);
    if (!out) throw std::runtime_error("cannot write manifest");
    out << manifest;
  }
  std::cout << "manifest = " << (fs::path(out_dir) / "manifest.txt").string() << "\n";
  return 0;
}

int cmd_index(const std::string& to_factors, const std::string& from_factors) {
  if (!to_factors.empty()) {
    const auto index = static_cast<std::uint32_t>(std::stoull(to_factors));
    const FactorTuple t = index_to_factors(index);
    const auto codes = csv_codes(t);
    std::cout << "index = " << index << "\n";
    for (int f = 0; f < kFactorCount; ++f) {
      std::cout << FactorSpace::kFactors[f].first << " = " << codes[f];
      if (f == 2) std::cout << " (" << scale_name(t.scale) << ")";
      if (f >= 5) std::cout << (codes[f] == 0 ? " (up)" : " (down)");
      std::cout << "\n";
    }
    return 0;
  }
  std::array<int, kFactorCount> codes{};
  std::stringstream ss(from_factors);
  std::string field;
  int n = 0;
  while (std::getline(ss, field, ',')) {
    if (n >= kFactorCount) throw std::invalid_argument("expected 9 comma-separated factor codes");
    codes[n++] = std::stoi(field);
  }
  if (n != kFactorCount) throw std::invalid_argument("expected 9 comma-separated factor codes");
  std::cout << "index = " << factors_to_index(from_csv_codes(codes)) << "\n";
  return 0;
}

int cmd_verify(const std::string& out_dir, const std::string& range_text) {
  namespace fs = std::filesystem;
  const Range range = parse_range(range_text);

  // index <-> tuple round trip over the range
  std::uint64_t roundtrip_failures = 0;
  for (std::uint32_t i = range.lo; i < range.hi; ++i) {
    if (factors_to_index(index_to_factors(i)) != i) ++roundtrip_failures;
  }
  const UniquenessReport report = verify_uniqueness(range.lo, range.hi);

  std::ostringstream out;
  out << "range = " << range.lo << ".." << range.hi << "\n";
  out << "melodies = " << report.total << "\n";
  out << "roundtrip_failures = " << roundtrip_failures << "\n";
  out << "duplicates = " << report.duplicates << "\n";
  for (const auto& [a, b] : report.collisions) out << "collision = " << a << "," << b << "\n";

  const bool ok = roundtrip_failures == 0 && report.duplicates == 0;
  out << "status = " << (ok ? "ok" : "failed") << "\n";
  std::cout << out.str();
  if (!out_dir.empty()) {
    fs::create_directories(out_dir);
    std::ofstream f(fs::path(out_dir) / "verify_report.txt", std::ios::binary);
    if (!f) throw std::runtime_error("cannot write verify report");
    f << out.str();
  }
  if (!ok) {
    std::cerr << "error: verification failed\n";
    return 2;
  }
  return 0;
}

int cmd_evaluate(const std::string& codes_file, const std::string& factors_file, int bins, double split,
                 std::uint64_t seed, const std::string& out_file) {
  const Eigen::MatrixXd codes = read_codes_csv(codes_file);
  const FactorTable table = read_factors_csv(factors_file);
  metrics::MetricConfig config;
  config.bins = bins;
  config.split = split;
  config.seed = seed;
  const metrics::MetricReport report = metrics::evaluate(codes, table.labels, config);
  std::vector<std::string> names;
  for (const auto& [name, options] : FactorSpace::kFactors) names.emplace_back(name);
  const std::string text = report.to_text(names);
  std::cout << text;
  if (!out_file.empty()) {
    std::ofstream f(out_file, std::ios::binary);
    if (!f) throw std::runtime_error("cannot write report: " + out_file);
    f << text;
  }
  return 0;
}

int cmd_bench(const std::string& method_text, double hp, std::uint64_t seed, int subset, int epochs, int batch,
              const std::string& out_dir) {
  bench::BenchOptions opt;
  if (method_text == "beta") opt.method = vae::Method::kBeta;
  else if (method_text == "annealed") opt.method = vae::Method::kAnnealed;
  else if (method_text == "factor") opt.method = vae::Method::kFactor;
  else throw std::invalid_argument("method must be beta, annealed or factor");
  opt.hp = hp;
  opt.seed = seed;
  opt.subset = subset;
  opt.epochs = epochs;
  opt.batch = batch;
  opt.out_dir = out_dir;
  opt.metric_config.seed = seed;

  const bench::BenchResult result = bench::run_bench(opt);
  std::cout << "history = " << result.history_csv.string() << "\n";
  std::cout << "codes = " << result.codes_csv.string() << "\n";
  std::cout << "factors = " << result.factors_csv.string() << "\n";
  std::cout << "metric_report = " << result.metric_report_txt.string() << "\n";
  std::cout << "bench_report = " << result.bench_report_txt.string() << "\n";
  if (!result.history.accuracy.empty()) {
    std::cout << "final_accuracy = " << result.history.accuracy.back() << "\n";
  }
  std::cout << "mig_mean = " << result.metrics.mig_mean << "\n";
  std::cout << "modularity_mean = " << result.metrics.modularity_mean << "\n";
  std::cout << "sap_mean = " << result.metrics.sap_mean << "\n";
  return 0;
}

int cmd_stats() {
  std::cout << "total_melodies = " << cardinality() << "\n";
  std::cout << "factors:\n";
  for (const auto& [name, options] : FactorSpace::kFactors) {
    std::cout << "  " << name << " = " << options << "\n";
  }
  std::cout << "rhythm_dictionary:\n";
  const auto& patterns = all_patterns();
  for (int r = 0; r < static_cast<int>(patterns.size()); ++r) {
    std::cout << "  " << r << " = " << patterns[r].to_string() << "\n";
  }
  const Vocabulary& vocab = token_vocabulary();
  std::cout << "vocabulary_size = " << vocab.size() << "\n";
  std::cout << "vocabulary:\n";
  for (int i = 0; i < vocab.size(); ++i) std::cout << "  " << i << " = " << vocab.tokens[i] << "\n";
  return 0;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Factored two-bar melody dataset generator and disentanglement benchmark"};
  app.require_subcommand(1);

  // generate
  auto* generate = app.add_subcommand("generate", "Write factor CSV, token lines and MIDI files");
  std::string gen_out;
  std::string gen_range = "0.." + std::to_string(cardinality());
  std::string gen_formats = "csv,tokens";
  int gen_workers = 1;
  generate->add_option("--out", gen_out, "Output directory")->required();
  generate->add_option("--range", gen_range, "Index range A..B (half-open)");
  generate->add_option("--formats", gen_formats, "Comma list of csv,tokens,midi");
  generate->add_option("--workers", gen_workers, "Worker threads for sharded generation");

  // index
  auto* index_cmd = app.add_subcommand("index", "Convert between dataset index and factor tuple");
  std::string to_factors, from_factors;
  index_cmd->add_option("--to-factors", to_factors, "Dataset index to decode");
  index_cmd->add_option("--from-factors", from_factors, "9 comma-separated factor codes");

  // verify
  auto* verify = app.add_subcommand("verify", "Uniqueness and round-trip checks");
  std::string verify_out;
  std::string verify_range = "0.." + std::to_string(cardinality());
  verify->add_option("--out", verify_out, "Directory for verify_report.txt")->required();
  verify->add_option("--range", verify_range, "Index range A..B (half-open)");

  // evaluate
  auto* evaluate = app.add_subcommand("evaluate", "Disentanglement metrics for a codes/factors pair");
  std::string codes_file, factors_file, eval_out;
  int bins = 20;
  double split = 0.2;
  std::uint64_t eval_seed = 0;
  evaluate->add_option("--codes", codes_file, "Latent codes CSV")->required();
  evaluate->add_option("--factors", factors_file, "Factor labels CSV")->required();
  evaluate->add_option("--bins", bins, "Histogram bins per latent dimension");
  evaluate->add_option("--split", split, "Held-out fraction for the SAP classifier");
  evaluate->add_option("--seed", eval_seed, "Split shuffle seed");
  evaluate->add_option("--report", eval_out, "Also write the report to this file");

  // bench
  auto* bench_cmd = app.add_subcommand("bench", "Train a VAE objective, export codes, evaluate metrics");
  std::string method = "beta";
  double hp = 1.0;
  std::uint64_t bench_seed = 0;
  int subset = 10000, epochs = 50, batch = 512;
  std::string bench_out;
  bench_cmd->add_option("--method", method, "beta | annealed | factor")->required();
  bench_cmd->add_option("--hp", hp, "Swept hyperparameter (beta / C / gamma_tc)")->required();
  bench_cmd->add_option("--seed", bench_seed, "Run seed");
  bench_cmd->add_option("--subset", subset, "Training subset size");
  bench_cmd->add_option("--epochs", epochs, "Training epochs");
  bench_cmd->add_option("--batch", batch, "Batch size");
  bench_cmd->add_option("--out", bench_out, "Output directory")->required();

  // stats
  app.add_subcommand("stats", "Print cardinalities, rhythm dictionary and vocabulary");

  try {
    app.parse(argc, argv);
    print_version_banner();
    if (generate->parsed()) return cmd_generate(gen_out, gen_range, gen_formats, gen_workers);
    if (index_cmd->parsed()) {
      if (to_factors.empty() == from_factors.empty()) {
        throw std::invalid_argument("index requires exactly one of --to-factors / --from-factors");
      }
      return cmd_index(to_factors, from_factors);
    }
    if (verify->parsed()) return cmd_verify(verify_out, verify_range);
    if (evaluate->parsed()) return cmd_evaluate(codes_file, factors_file, bins, split, eval_seed, eval_out);
    if (bench_cmd->parsed()) return cmd_bench(method, hp, bench_seed, subset, epochs, batch, bench_out);
    return cmd_stats();
  } catch (const CLI::ParseError& e) {
    if (e.get_exit_code() != 0) std::cerr << "error: " << e.what() << "\n";
    return app.exit(e);
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 1;
  }
}
