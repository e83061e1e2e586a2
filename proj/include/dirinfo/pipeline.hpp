#pragma once

#include "dirinfo/estimator.hpp"
#include "dirinfo/signal.hpp"
#include "dirinfo/synthetic.hpp"

#include <cstdint>
#include <filesystem>
#include <map>
#include <string>
#include <vector>

namespace dirinfo {

struct PipelineConfig {
  double segment_ms{200.0};
  double overlap_ms{100.0};
  int p_levels{10};
  int markov_order{kDefaultOrder};
  int window_T{7};
  int stride{1};
  double alpha{0.05};
  double fdr_q{0.1};
  int bootstrap_B{200};
  LambdaPolicy lambda_policy{LambdaPolicy::optimize()};
  std::uint64_t seed{0};
  SegmentFeature feature{SegmentFeature::mean};
  double heat_sigma{0.5};

  // Preprocessing.
  double sample_rate_hz{500.0};
  bool filter{true};
  double band_low_hz{0.5};
  double band_high_hz{70.0};
  double notch_hz{0.0};  // 0 disables the notch
  double notch_bw_hz{2.0};

  // Estimation and analysis.
  int lambda_reps{kDefaultBootstrapReps};
  int jobs{1};
  int cluster_k{3};
  int knn_k{1};
  int mds_dims{2};
  std::string local_source;  // empty: first channel
  std::string local_target;  // empty: second channel

  // simulate
  GeneratorSpec sim;
  int sim_trials{1};

  void validate() const;
};

// Flat key=value lines; '#' starts a comment. Unknown keys are errors.
void apply_config_text(PipelineConfig& cfg, const std::string& text, const std::string& origin = "config");
void apply_config_file(PipelineConfig& cfg, const std::filesystem::path& path);
void apply_setting(PipelineConfig& cfg, const std::string& key, const std::string& value);
LambdaPolicy parse_lambda(const std::string& text);
std::string describe_lambda(const LambdaPolicy& p);

// Every command writes its outputs into out_dir (created if needed) and
// returns the list of files written.
std::vector<std::filesystem::path> run_preprocess(const std::vector<std::filesystem::path>& inputs,
                                                  const PipelineConfig& cfg, const std::filesystem::path& out_dir);
std::vector<std::filesystem::path> run_estimate(const std::filesystem::path& features_json, const PipelineConfig& cfg,
                                                const std::filesystem::path& out_dir);
std::vector<std::filesystem::path> run_graph(const std::vector<std::filesystem::path>& inputs,
                                             const PipelineConfig& cfg, const std::filesystem::path& out_dir);
// Inputs are DI matrix CSVs; class_labels is empty or one label per input.
std::vector<std::filesystem::path> run_analyze(const std::vector<std::filesystem::path>& inputs,
                                               const std::vector<std::string>& class_labels,
                                               const PipelineConfig& cfg, const std::filesystem::path& out_dir);
std::vector<std::filesystem::path> run_simulate(const PipelineConfig& cfg, const std::filesystem::path& out_dir);
std::vector<std::filesystem::path> run_local(const std::filesystem::path& features_json, const PipelineConfig& cfg,
                                             const std::filesystem::path& out_dir);
std::vector<std::filesystem::path> run_benchmark(const PipelineConfig& cfg, const std::filesystem::path& out_dir);

// Per-channel data across trials as stored in features.json.
struct FeatureSet {
  std::vector<std::string> labels;
  std::vector<std::vector<Channel>> trials;  // trials[t][c]
};
FeatureSet load_features(const std::filesystem::path& features_json);

}  // namespace dirinfo
