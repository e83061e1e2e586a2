// Batch pipeline runner: preprocess -> estimate -> graph -> analyze, plus
// simulate, local and benchmark.

#include "dirinfo/error.hpp"
#include "dirinfo/pipeline.hpp"

#include <CLI11.hpp>

#include <iostream>
#include <optional>
#include <sstream>

namespace fs = std::filesystem;

namespace {

struct Flags {
  std::vector<std::string> inputs;
  std::string config;
  std::string output_dir{"."};
  std::optional<std::uint64_t> seed;
  std::optional<int> jobs;
  std::optional<std::string> lambda;
  std::optional<double> alpha;
  std::optional<double> fdr;
  std::string labels;
  std::vector<std::string> settings;
};

std::vector<std::string> split_commas(const std::string& s) {
  std::vector<std::string> out;
  std::istringstream is(s);
  std::string item;
  while (std::getline(is, item, ',')) {
    if (!item.empty()) out.push_back(item);
  }
  return out;
}

dirinfo::PipelineConfig build_config(const Flags& f) {
  dirinfo::PipelineConfig cfg;
  if (!f.config.empty()) dirinfo::apply_config_file(cfg, f.config);
  for (const auto& s : f.settings) {
    const auto eq = s.find('=');
    if (eq == std::string::npos) dirinfo::fail(dirinfo::ErrorKind::Validation, "--set expects key=value");
    dirinfo::apply_setting(cfg, s.substr(0, eq), s.substr(eq + 1));
  }
  if (f.seed) cfg.seed = *f.seed;
  if (f.jobs) cfg.jobs = *f.jobs;
  if (f.lambda) cfg.lambda_policy = dirinfo::parse_lambda(*f.lambda);
  if (f.alpha) cfg.alpha = *f.alpha;
  if (f.fdr) cfg.fdr_q = *f.fdr;
  cfg.validate();
  return cfg;
}

std::vector<fs::path> paths(const std::vector<std::string>& in) { return {in.begin(), in.end()}; }

fs::path single_input(const Flags& f) {
  if (f.inputs.size() != 1) dirinfo::fail(dirinfo::ErrorKind::Validation, "expected exactly one --input");
  return f.inputs.front();
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Directed-information connectivity pipeline"};
  app.require_subcommand(1);
  app.fallthrough();

  Flags f;
  app.add_option("--input,-i", f.inputs, "Input file(s); repeat for multiple trials or matrices");
  app.add_option("--config,-c", f.config, "key=value config file");
  app.add_option("--output-dir,-o", f.output_dir, "Directory for outputs");
  app.add_option("--seed", f.seed, "Base RNG seed");
  app.add_option("--jobs,-j", f.jobs, "Worker threads for the pair sweep");
  app.add_option("--lambda", f.lambda, "Shrinkage: opt, 0, or a value in [0,1]");
  app.add_option("--alpha", f.alpha, "Per-edge p-value level");
  app.add_option("--fdr", f.fdr, "FDR level for the corrected BH procedure");
  app.add_option("--labels", f.labels, "analyze: comma-separated class label per input matrix");
  app.add_option("--set", f.settings, "Extra config override key=value (repeatable)");

  auto* preprocess = app.add_subcommand("preprocess", "filter, segment, train codebooks, quantize");
  auto* estimate = app.add_subcommand("estimate", "DI and p-value matrices over all ordered pairs");
  auto* graph = app.add_subcommand("graph", "FDR-controlled interaction graph");
  auto* analyze = app.add_subcommand("analyze", "clusters, MDS, kNN classification, ROC");
  auto* simulate = app.add_subcommand("simulate", "synthetic corpus with oracle");
  auto* local = app.add_subcommand("local", "windowed DI surface for one channel pair");
  auto* benchmark = app.add_subcommand("benchmark", "oracle accuracy and timing");

  try {
    app.parse(argc, argv);
  } catch (const CLI::CallForHelp& e) {
    return app.exit(e);
  } catch (const CLI::ParseError& e) {
    app.exit(e);
    return 3;
  }

  try {
    const dirinfo::PipelineConfig cfg = build_config(f);
    const fs::path out = f.output_dir;
    std::vector<fs::path> written;
    if (preprocess->parsed()) {
      written = dirinfo::run_preprocess(paths(f.inputs), cfg, out);
    } else if (estimate->parsed()) {
      written = dirinfo::run_estimate(single_input(f), cfg, out);
    } else if (graph->parsed()) {
      written = dirinfo::run_graph(paths(f.inputs), cfg, out);
    } else if (analyze->parsed()) {
      written = dirinfo::run_analyze(paths(f.inputs), split_commas(f.labels), cfg, out);
    } else if (simulate->parsed()) {
      written = dirinfo::run_simulate(cfg, out);
    } else if (local->parsed()) {
      written = dirinfo::run_local(single_input(f), cfg, out);
    } else if (benchmark->parsed()) {
      written = dirinfo::run_benchmark(cfg, out);
    }
    for (const auto& p : written) std::cout << p.string() << '\n';
    return 0;
  } catch (const dirinfo::Error& e) {
    std::cerr << "error: " << e.what() << '\n';
    return dirinfo::exit_code(e.kind());
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << '\n';
    return 1;
  }
}
