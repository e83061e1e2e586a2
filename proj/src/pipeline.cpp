#include "dirinfo/pipeline.hpp"

#include "dirinfo/analysis.hpp"
#include "dirinfo/baselines.hpp"
#include "dirinfo/error.hpp"
#include "dirinfo/inference.hpp"
#include "dirinfo/serialize.hpp"

#include <algorithm>
#include <atomic>
#include <charconv>
#include <chrono>
#include <cmath>
#include <exception>
#include <iostream>
#include <set>
#include <sstream>
#include <thread>

namespace dirinfo {

namespace fs = std::filesystem;
using nlohmann::json;

// ---------------------------------------------------------------------------
// Configuration

namespace {

std::string trim(const std::string& s) {
  const auto b = s.find_first_not_of(" \t\r");
  if (b == std::string::npos) return {};
  const auto e = s.find_last_not_of(" \t\r");
  return s.substr(b, e - b + 1);
}

double to_double(const std::string& key, const std::string& v) {
  double out = 0.0;
  const auto res = std::from_chars(v.data(), v.data() + v.size(), out);
  if (res.ec != std::errc() || res.ptr != v.data() + v.size() || !std::isfinite(out)) {
    fail(ErrorKind::Validation, key + ": expected a number, got '" + v + "'");
  }
  return out;
}

long long to_int(const std::string& key, const std::string& v) {
  long long out = 0;
  const auto res = std::from_chars(v.data(), v.data() + v.size(), out);
  if (res.ec != std::errc() || res.ptr != v.data() + v.size()) {
    fail(ErrorKind::Validation, key + ": expected an integer, got '" + v + "'");
  }
  return out;
}

bool to_bool(const std::string& key, const std::string& v) {
  if (v == "1" || v == "true" || v == "on" || v == "yes") return true;
  if (v == "0" || v == "false" || v == "off" || v == "no") return false;
  fail(ErrorKind::Validation, key + ": expected a boolean, got '" + v + "'");
}

std::vector<std::pair<int, int>> parse_edges(const std::string& v) {
  // "0-1;2-3"
  std::vector<std::pair<int, int>> edges;
  std::istringstream is(v);
  std::string item;
  while (std::getline(is, item, ';')) {
    item = trim(item);
    if (item.empty()) continue;
    const auto dash = item.find('-');
    if (dash == std::string::npos) fail(ErrorKind::Validation, "sim_edges: expected 'parent-child', got '" + item + "'");
    edges.emplace_back(static_cast<int>(to_int("sim_edges", trim(item.substr(0, dash)))),
                       static_cast<int>(to_int("sim_edges", trim(item.substr(dash + 1)))));
  }
  return edges;
}

}  // namespace

LambdaPolicy parse_lambda(const std::string& text) {
  const std::string t = trim(text);
  if (t == "opt" || t == "optimize") return LambdaPolicy::optimize();
  const double v = to_double("lambda", t);
  if (!(v >= 0.0 && v <= 1.0)) fail(ErrorKind::BadLambda, "lambda must be 'opt' or a value in [0, 1]");
  return LambdaPolicy::fixed(v);
}

std::string describe_lambda(const LambdaPolicy& p) { return p.is_optimize() ? "opt" : format_double(p.value); }

void apply_setting(PipelineConfig& cfg, const std::string& key, const std::string& value) {
  const std::string& v = value;
  if (key == "segment_ms") cfg.segment_ms = to_double(key, v);
  else if (key == "overlap_ms") cfg.overlap_ms = to_double(key, v);
  else if (key == "p_levels") cfg.p_levels = static_cast<int>(to_int(key, v));
  else if (key == "markov_order") cfg.markov_order = static_cast<int>(to_int(key, v));
  else if (key == "window_T") cfg.window_T = static_cast<int>(to_int(key, v));
  else if (key == "stride") cfg.stride = static_cast<int>(to_int(key, v));
  else if (key == "alpha") cfg.alpha = to_double(key, v);
  else if (key == "fdr_q") cfg.fdr_q = to_double(key, v);
  else if (key == "bootstrap_B") cfg.bootstrap_B = static_cast<int>(to_int(key, v));
  else if (key == "lambda_policy" || key == "lambda") cfg.lambda_policy = parse_lambda(v);
  else if (key == "seed") cfg.seed = static_cast<std::uint64_t>(to_int(key, v));
  else if (key == "feature") {
    if (v == "mean") cfg.feature = SegmentFeature::mean;
    else if (v == "energy") cfg.feature = SegmentFeature::energy;
    else fail(ErrorKind::Validation, "feature: expected 'mean' or 'energy'");
  } else if (key == "heat_sigma") cfg.heat_sigma = to_double(key, v);
  else if (key == "sample_rate_hz") cfg.sample_rate_hz = to_double(key, v);
  else if (key == "filter") cfg.filter = to_bool(key, v);
  else if (key == "band_low_hz") cfg.band_low_hz = to_double(key, v);
  else if (key == "band_high_hz") cfg.band_high_hz = to_double(key, v);
  else if (key == "notch_hz") cfg.notch_hz = to_double(key, v);
  else if (key == "notch_bw_hz") cfg.notch_bw_hz = to_double(key, v);
  else if (key == "lambda_reps") cfg.lambda_reps = static_cast<int>(to_int(key, v));
  else if (key == "jobs") cfg.jobs = static_cast<int>(to_int(key, v));
  else if (key == "cluster_k") cfg.cluster_k = static_cast<int>(to_int(key, v));
  else if (key == "knn_k") cfg.knn_k = static_cast<int>(to_int(key, v));
  else if (key == "mds_dims") cfg.mds_dims = static_cast<int>(to_int(key, v));
  else if (key == "local_source") cfg.local_source = v;
  else if (key == "local_target") cfg.local_target = v;
  else if (key == "sim_kind") cfg.sim.kind = parse_generator_kind(v);
  else if (key == "sim_length") cfg.sim.length = static_cast<std::size_t>(to_int(key, v));
  else if (key == "sim_flip") cfg.sim.flip_prob = to_double(key, v);
  else if (key == "sim_coupling") cfg.sim.coupling = to_double(key, v);
  else if (key == "sim_noise") cfg.sim.noise_std = to_double(key, v);
  else if (key == "sim_onset") cfg.sim.onset = static_cast<std::size_t>(to_int(key, v));
  else if (key == "sim_offset") cfg.sim.offset = static_cast<std::size_t>(to_int(key, v));
  else if (key == "sim_nodes") cfg.sim.node_count = static_cast<int>(to_int(key, v));
  else if (key == "sim_edges") cfg.sim.edges = parse_edges(v);
  else if (key == "sim_trials") cfg.sim_trials = static_cast<int>(to_int(key, v));
  else fail(ErrorKind::Validation, "unknown config key '" + key + "'");
}

void apply_config_text(PipelineConfig& cfg, const std::string& text, const std::string& origin) {
  std::istringstream is(text);
  std::string line;
  std::size_t lineno = 0;
  while (std::getline(is, line)) {
    ++lineno;
    if (const auto hash = line.find('#'); hash != std::string::npos) line.resize(hash);
    line = trim(line);
    if (line.empty()) continue;
    const auto eq = line.find('=');
    if (eq == std::string::npos) {
      fail(ErrorKind::Validation, origin + ":" + std::to_string(lineno) + ": expected key=value");
    }
    try {
      apply_setting(cfg, trim(line.substr(0, eq)), trim(line.substr(eq + 1)));
    } catch (const Error& e) {
      fail(e.kind(), origin + ":" + std::to_string(lineno) + ": " + e.detail());
    }
  }
}

void apply_config_file(PipelineConfig& cfg, const fs::path& path) {
  apply_config_text(cfg, read_text(path), path.string());
}

void PipelineConfig::validate() const {
  auto need = [](bool ok, const std::string& msg) {
    if (!ok) fail(ErrorKind::Validation, msg);
  };
  need(segment_ms > 0.0, "segment_ms must be positive");
  need(overlap_ms >= 0.0 && overlap_ms < segment_ms, "overlap_ms must lie in [0, segment_ms)");
  need(p_levels >= 2, "p_levels must be >= 2");
  need(markov_order >= 1, "markov_order must be >= 1");
  need(window_T > markov_order, "window_T must exceed markov_order");
  need(stride >= 1, "stride must be >= 1");
  need(alpha > 0.0 && alpha < 1.0, "alpha must lie in (0, 1)");
  need(fdr_q > 0.0 && fdr_q < 1.0, "fdr_q must lie in (0, 1)");
  need(bootstrap_B >= kMinNullResamples, "bootstrap_B must be >= " + std::to_string(kMinNullResamples));
  need(!lambda_policy.is_optimize() || lambda_reps >= kMinBootstrapReps,
       "lambda_reps must be >= " + std::to_string(kMinBootstrapReps) + " when lambda is optimized");
  need(lambda_reps >= 0, "lambda_reps must be >= 0");
  need(heat_sigma > 0.0, "heat_sigma must be positive");
  need(sample_rate_hz > 0.0, "sample_rate_hz must be positive");
  need(jobs >= 1, "jobs must be >= 1");
  need(cluster_k >= 1, "cluster_k must be >= 1");
  need(knn_k >= 1, "knn_k must be >= 1");
  need(mds_dims >= 1, "mds_dims must be >= 1");
  need(sim_trials >= 1, "sim_trials must be >= 1");
}

namespace {

json config_json(const PipelineConfig& c) {
  return {{"segment_ms", c.segment_ms},
          {"overlap_ms", c.overlap_ms},
          {"p_levels", c.p_levels},
          {"markov_order", c.markov_order},
          {"window_T", c.window_T},
          {"stride", c.stride},
          {"alpha", c.alpha},
          {"fdr_q", c.fdr_q},
          {"bootstrap_B", c.bootstrap_B},
          {"lambda_policy", describe_lambda(c.lambda_policy)},
          {"lambda_reps", c.lambda_reps},
          {"seed", c.seed},
          {"feature", c.feature == SegmentFeature::mean ? "mean" : "energy"},
          {"heat_sigma", c.heat_sigma}};
}

void prepare_dir(const fs::path& dir) {
  std::error_code ec;
  fs::create_directories(dir, ec);
  if (ec) fail(ErrorKind::IoError, dir.string() + ": " + ec.message());
}

// Runs fn(i) for i in [0, n) on `jobs` threads; rethrows the lowest-index failure.
template <class Fn>
void parallel_for(std::size_t n, int jobs, Fn fn) {
  std::vector<std::exception_ptr> errors(n);
  std::atomic<std::size_t> next{0};
  auto worker = [&] {
    for (std::size_t i = next++; i < n; i = next++) {
      try {
        fn(i);
      } catch (...) {
        errors[i] = std::current_exception();
      }
    }
  };
  const auto workers = static_cast<std::size_t>(std::max(1, std::min<int>(jobs, static_cast<int>(n))));
  std::vector<std::thread> pool;
  for (std::size_t w = 1; w < workers; ++w) pool.emplace_back(worker);
  worker();
  for (auto& t : pool) t.join();
  for (auto& e : errors) {
    if (e) std::rethrow_exception(e);
  }
}

// Rescales to zero mean, unit variance; constant input is only centered.
void zscore(std::vector<std::vector<double>*> parts) {
  double sum = 0.0, sq = 0.0;
  std::size_t n = 0;
  for (auto* p : parts) {
    for (double v : *p) {
      sum += v;
      ++n;
    }
  }
  if (n == 0) return;
  const double mean = sum / static_cast<double>(n);
  for (auto* p : parts) {
    for (double v : *p) sq += (v - mean) * (v - mean);
  }
  const double sd = n > 1 ? std::sqrt(sq / static_cast<double>(n - 1)) : 0.0;
  for (auto* p : parts) {
    for (double& v : *p) v = sd > 0.0 ? (v - mean) / sd : v - mean;
  }
}

double seconds_since(std::chrono::steady_clock::time_point t0) {
  return std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
}

}  // namespace

// ---------------------------------------------------------------------------
// preprocess

std::vector<fs::path> run_preprocess(const std::vector<fs::path>& inputs, const PipelineConfig& cfg,
                                     const fs::path& out_dir) {
  cfg.validate();
  if (inputs.empty()) fail(ErrorKind::EmptyInput, "no input recordings");

  std::vector<std::string> labels;
  std::vector<std::vector<FeatureSequence>> trials;
  for (const auto& path : inputs) {
    Recording rec = load_recording(path, cfg.sample_rate_hz);
    try {
      if (labels.empty()) labels = rec.labels;
      if (rec.labels != labels) fail(ErrorKind::ShapeError, "channel labels differ from the first input");
      if (cfg.filter) {
        std::optional<std::pair<double, double>> notch;
        if (cfg.notch_hz > 0.0) notch = std::make_pair(cfg.notch_hz, cfg.notch_bw_hz);
        rec = bandpass_notch(rec, cfg.band_low_hz, cfg.band_high_hz, notch);
      }
      trials.push_back(segment_features(rec, cfg.segment_ms, cfg.overlap_ms, cfg.feature));
    } catch (const Error& e) {
      fail(e.kind(), path.string() + ": " + e.detail());
    }
  }

  json cbs = json::array();
  std::vector<Codebook> codebooks;
  for (std::size_t c = 0; c < labels.size(); ++c) {
    std::vector<double> pooled;
    for (const auto& t : trials) pooled.insert(pooled.end(), t[c].values.begin(), t[c].values.end());
    std::vector<double> trace;
    try {
      codebooks.push_back(train_lloyd_max(pooled, cfg.p_levels, &trace));
    } catch (const Error& e) {
      fail(e.kind(), "channel " + labels[c] + ": " + e.detail());
    }
    json cb = to_json(codebooks.back());
    cb["channel"] = labels[c];
    cb["distortion"] = quantizer_distortion(pooled, codebooks.back());
    cb["iterations"] = trace.size();
    cbs.push_back(cb);
  }

  json jtrials = json::array();
  for (std::size_t t = 0; t < trials.size(); ++t) {
    json chans = json::array();
    for (std::size_t c = 0; c < labels.size(); ++c) {
      const auto q = quantize(trials[t][c], codebooks[c], labels[c]);
      chans.push_back({{"label", labels[c]}, {"features", trials[t][c].values}, {"symbols", q.symbols}});
    }
    jtrials.push_back({{"source", inputs[t].filename().string()}, {"channels", chans}});
  }

  prepare_dir(out_dir);
  const json features{{"config", config_json(cfg)},
                      {"sample_rate_hz", cfg.sample_rate_hz},
                      {"levels", cfg.p_levels},
                      {"labels", labels},
                      {"segments_per_trial", trials.front().front().size()},
                      {"trials", jtrials}};
  const json books{{"levels", cfg.p_levels}, {"codebooks", cbs}};
  const fs::path f1 = out_dir / "features.json";
  const fs::path f2 = out_dir / "codebooks.json";
  write_json(f1, features);
  write_json(f2, books);
  return {f1, f2};
}

FeatureSet load_features(const fs::path& features_json) {
  const json j = read_json(features_json);
  FeatureSet fs_out;
  try {
    fs_out.labels = j.at("labels").get<std::vector<std::string>>();
    const int levels = j.at("levels").get<int>();
    for (const auto& jt : j.at("trials")) {
      std::vector<Channel> chans;
      for (const auto& jc : jt.at("channels")) {
        Channel ch;
        ch.features.values = jc.at("features").get<std::vector<double>>();
        ch.features.source_channel = jc.at("label").get<std::string>();
        ch.symbols.symbols = jc.at("symbols").get<std::vector<int>>();
        ch.symbols.levels = levels;
        ch.symbols.codebook_id = ch.features.source_channel;
        if (ch.symbols.size() != ch.features.size()) fail(ErrorKind::ParseError, "symbols and features differ in length");
        chans.push_back(std::move(ch));
      }
      if (chans.size() != fs_out.labels.size()) fail(ErrorKind::ParseError, "trial channel count differs from labels");
      fs_out.trials.push_back(std::move(chans));
    }
  } catch (const nlohmann::json::exception& e) {
    fail(ErrorKind::ParseError, features_json.string() + ": " + e.what());
  } catch (const Error& e) {
    fail(e.kind(), features_json.string() + ": " + e.detail());
  }
  if (fs_out.trials.empty()) fail(ErrorKind::EmptyInput, features_json.string() + ": no trials");
  return fs_out;
}

// ---------------------------------------------------------------------------
// estimate

std::vector<fs::path> run_estimate(const fs::path& features_json, const PipelineConfig& cfg, const fs::path& out_dir) {
  cfg.validate();
  FeatureSet data = load_features(features_json);
  const std::size_t k = data.labels.size();
  if (k < 2) fail(ErrorKind::ShapeError, "need at least two channels");

  // Regressors are standardized per channel (pooled over trials) so the
  // coefficient cap and shrinkage target do not depend on signal units.
  for (std::size_t c = 0; c < k; ++c) {
    std::vector<std::vector<double>*> parts;
    for (auto& t : data.trials) parts.push_back(&t[c].features.values);
    zscore(parts);
  }

  std::vector<std::pair<std::size_t, std::size_t>> pairs;
  for (std::size_t i = 0; i < k; ++i) {
    for (std::size_t j = 0; j < k; ++j) {
      if (i != j) pairs.emplace_back(i, j);
    }
  }
  std::vector<PairTest> results(pairs.size());
  std::vector<double> elapsed(pairs.size());
  const auto sweep_start = std::chrono::steady_clock::now();
  parallel_for(pairs.size(), cfg.jobs, [&](std::size_t idx) {
    const auto t0 = std::chrono::steady_clock::now();
    const auto [i, j] = pairs[idx];
    std::vector<QuantizedSequence> xs;
    std::vector<FeatureSequence> ys;
    for (const auto& t : data.trials) {
      xs.push_back(t[i].symbols);
      ys.push_back(t[j].features);
    }
    const auto problem = di_problem(xs, ys, cfg.markov_order);
    results[idx] = test_pair(problem, cfg.markov_order, cfg.lambda_policy, cfg.bootstrap_B, cfg.lambda_reps,
                             derive_seed(cfg.seed, i, j));
    elapsed[idx] = seconds_since(t0);
  });
  const double total = seconds_since(sweep_start);
  double slowest = 0.0;
  for (double e : elapsed) slowest = std::max(slowest, e);
  std::cerr << "estimate: " << pairs.size() << " pairs in " << total << " s (" << total / pairs.size()
            << " s/pair wall, slowest pair " << slowest << " s, jobs " << cfg.jobs << ")\n";

  DiMatrix di;
  di.labels = data.labels;
  di.entries.resize(k * k);
  Eigen::MatrixXd pv = Eigen::MatrixXd::Ones(static_cast<Eigen::Index>(k), static_cast<Eigen::Index>(k));
  json jpairs = json::array();
  for (std::size_t idx = 0; idx < pairs.size(); ++idx) {
    const auto [i, j] = pairs[idx];
    const PairTest& r = results[idx];
    di.at(i, j) = r.estimate;
    pv(static_cast<Eigen::Index>(i), static_cast<Eigen::Index>(j)) = r.p;
    jpairs.push_back({{"source", data.labels[i]},
                      {"target", data.labels[j]},
                      {"seed", derive_seed(cfg.seed, i, j)},
                      {"di", r.estimate.value},
                      {"di_clamped", r.estimate.clamped()},
                      {"di_cumulative", r.estimate.cumulative},
                      {"lambda", r.estimate.lambda},
                      {"n_rows", r.estimate.n_rows},
                      {"boot_mean", r.estimate.boot_mean},
                      {"boot_std", r.estimate.boot_std},
                      {"null_mu", r.null.mu},
                      {"null_sigma", r.null.sigma},
                      {"p_value", r.p},
                      {"degenerate_null", r.degenerate_null},
                      {"single_class", r.estimate.single_class}});
  }

  prepare_dir(out_dir);
  const fs::path f_di = out_dir / "di_matrix.csv";
  const fs::path f_cl = out_dir / "di_clamped.csv";
  const fs::path f_pv = out_dir / "pvalues.csv";
  const fs::path f_js = out_dir / "di_matrix.json";
  write_text(f_di, matrix_csv(di.labels, di.values()));
  write_text(f_cl, matrix_csv(di.labels, di.clamped_values()));
  write_text(f_pv, matrix_csv(di.labels, pv));
  write_json(f_js, {{"config", config_json(cfg)},
                    {"labels", di.labels},
                    {"trials", data.trials.size()},
                    {"hypotheses", pairs.size()},
                    {"pairs", jpairs}});
  return {f_di, f_cl, f_pv, f_js};
}

// ---------------------------------------------------------------------------
// graph

std::vector<fs::path> run_graph(const std::vector<fs::path>& inputs, const PipelineConfig& cfg,
                                const fs::path& out_dir) {
  cfg.validate();
  DiMatrix di;
  PValueMatrix pv;
  if (inputs.size() == 1 && inputs[0].extension() == ".json") {
    const json j = read_json(inputs[0]);
    try {
      di.labels = j.at("labels").get<std::vector<std::string>>();
      const auto k = di.labels.size();
      di.entries.assign(k * k, DiEstimate{});
      pv.labels = di.labels;
      pv.entries = Eigen::MatrixXd::Ones(static_cast<Eigen::Index>(k), static_cast<Eigen::Index>(k));
      for (const auto& p : j.at("pairs")) {
        const auto src = std::find(di.labels.begin(), di.labels.end(), p.at("source").get<std::string>());
        const auto dst = std::find(di.labels.begin(), di.labels.end(), p.at("target").get<std::string>());
        if (src == di.labels.end() || dst == di.labels.end()) fail(ErrorKind::ParseError, "pair with unknown label");
        const auto i = static_cast<std::size_t>(src - di.labels.begin());
        const auto jj = static_cast<std::size_t>(dst - di.labels.begin());
        di.at(i, jj).value = p.at("di").get<double>();
        pv.entries(static_cast<Eigen::Index>(i), static_cast<Eigen::Index>(jj)) = p.at("p_value").get<double>();
      }
    } catch (const nlohmann::json::exception& e) {
      fail(ErrorKind::ParseError, inputs[0].string() + ": " + e.what());
    }
  } else if (inputs.size() == 2) {
    const LabeledMatrix d = read_matrix_csv(inputs[0]);
    const LabeledMatrix p = read_matrix_csv(inputs[1]);
    di.labels = d.labels;
    const auto k = d.labels.size();
    di.entries.assign(k * k, DiEstimate{});
    for (std::size_t i = 0; i < k; ++i) {
      for (std::size_t j = 0; j < k; ++j) di.at(i, j).value = d.values(static_cast<Eigen::Index>(i), static_cast<Eigen::Index>(j));
    }
    pv.labels = p.labels;
    pv.entries = p.values;
  } else {
    fail(ErrorKind::Validation, "graph expects di_matrix.json, or di_matrix.csv followed by pvalues.csv");
  }

  // FDR control at fdr_q over all ordered pairs, then the per-edge level alpha.
  InteractionGraph g = build_graph(di, pv, cfg.fdr_q);
  std::erase_if(g.edges, [&](const Edge& e) { return e.p_value > cfg.alpha; });

  prepare_dir(out_dir);
  json jg = to_json(g);
  jg["p_threshold"] = cfg.alpha;
  const fs::path f_dot = out_dir / "graph.dot";
  const fs::path f_js = out_dir / "graph.json";
  write_text(f_dot, graph_dot(g));
  write_json(f_js, jg);
  return {f_dot, f_js};
}

// ---------------------------------------------------------------------------
// analyze

std::vector<fs::path> run_analyze(const std::vector<fs::path>& inputs, const std::vector<std::string>& class_labels,
                                  const PipelineConfig& cfg, const fs::path& out_dir) {
  cfg.validate();
  if (inputs.empty()) fail(ErrorKind::EmptyCorpus, "no DI matrices given");
  if (!class_labels.empty() && class_labels.size() != inputs.size()) {
    fail(ErrorKind::Validation, "need one class label per input matrix");
  }
  std::vector<LabeledMatrix> mats;
  for (const auto& p : inputs) {
    mats.push_back(read_matrix_csv(p));
    if (mats.back().labels != mats.front().labels) fail(ErrorKind::ShapeError, p.string() + ": labels differ");
  }
  const auto& labels = mats.front().labels;
  const auto k = static_cast<int>(labels.size());

  Eigen::MatrixXd mean = Eigen::MatrixXd::Zero(k, k);
  for (const auto& m : mats) mean += m.values;
  mean /= static_cast<double>(mats.size());

  prepare_dir(out_dir);
  std::vector<fs::path> written;

  const DistanceMatrix dist = heat_kernel_distance(mean, labels, cfg.heat_sigma);
  const Clustering cl = kmeans(dist, cfg.cluster_k, cfg.seed);
  json assignment = json::object();
  for (int i = 0; i < k; ++i) assignment[labels[static_cast<std::size_t>(i)]] = cl.assignment[static_cast<std::size_t>(i)];
  json jc{{"k", cfg.cluster_k},
          {"seed", cfg.seed},
          {"restarts", kKmeansRestarts},
          {"heat_sigma", cfg.heat_sigma},
          {"matrices", mats.size()},
          {"assignment", assignment},
          {"objective", cl.objective},
          {"objective_trace", cl.objective_trace}};
  if (k >= 3) jc["elbow_k"] = elbow_k(dist, std::min(k, 8), cfg.seed);
  written.push_back(out_dir / "clusters.json");
  write_json(written.back(), jc);

  if (k >= 2) {
    const int dims = std::min(cfg.mds_dims, k - 1);
    const Eigen::MatrixXd coords = mds(dist, dims);
    std::string csv = "label";
    for (int d = 0; d < dims; ++d) csv += ",dim" + std::to_string(d + 1);
    csv += '\n';
    for (int i = 0; i < k; ++i) {
      csv += labels[static_cast<std::size_t>(i)];
      for (int d = 0; d < dims; ++d) csv += "," + format_double(coords(i, d));
      csv += '\n';
    }
    written.push_back(out_dir / "mds.csv");
    write_text(written.back(), csv);
  }

  if (!class_labels.empty()) {
    const std::set<std::string> uniq(class_labels.begin(), class_labels.end());
    const std::vector<std::string> classes(uniq.begin(), uniq.end());
    LabeledCorpus corpus;
    corpus.channel_labels = labels;
    for (std::size_t i = 0; i < mats.size(); ++i) {
      const auto c = std::find(classes.begin(), classes.end(), class_labels[i]) - classes.begin();
      corpus.add(mats[i].values, static_cast<int>(c));
    }
    corpus.class_count = static_cast<int>(classes.size());
    const LooReport rep = leave_one_out(corpus, cfg.knn_k);
    json confusion = json::array();
    for (int r = 0; r < rep.confusion.rows(); ++r) {
      std::vector<int> row;
      for (int c = 0; c < rep.confusion.cols(); ++c) row.push_back(rep.confusion(r, c));
      confusion.push_back(row);
    }
    std::vector<std::string> predicted;
    for (int p : rep.predicted) predicted.push_back(classes[static_cast<std::size_t>(p)]);
    written.push_back(out_dir / "classification.json");
    write_json(written.back(), {{"method", "leave_one_out_knn"},
                                {"k", cfg.knn_k},
                                {"classes", classes},
                                {"truth", class_labels},
                                {"predicted", predicted},
                                {"accuracy", rep.accuracy},
                                {"confusion", confusion}});

    if (classes.size() == 2) {
      // Leave-one-out score: mean distance to the first class minus mean
      // distance to the second, so larger means "looks like class 2".
      std::vector<double> scores;
      std::vector<int> truth;
      for (std::size_t q = 0; q < mats.size(); ++q) {
        double d[2] = {0.0, 0.0};
        int n[2] = {0, 0};
        for (std::size_t i = 0; i < mats.size(); ++i) {
          if (i == q) continue;
          const int c = corpus.class_labels[i];
          d[c] += matrix_distance(mats[i].values, mats[q].values);
          ++n[c];
        }
        const double m0 = n[0] ? d[0] / n[0] : 0.0;
        const double m1 = n[1] ? d[1] / n[1] : 0.0;
        scores.push_back(m0 - m1);
        truth.push_back(corpus.class_labels[q]);
      }
      written.push_back(out_dir / "roc.csv");
      write_text(written.back(), roc_csv(roc_curve(scores, truth)));
      json jauc{{"positive_class", classes[1]}, {"auc", roc_auc(scores, truth)}};
      written.push_back(out_dir / "roc.json");
      write_json(written.back(), jauc);
    }
  }
  return written;
}

// ---------------------------------------------------------------------------
// simulate

std::vector<fs::path> run_simulate(const PipelineConfig& cfg, const fs::path& out_dir) {
  cfg.validate();
  cfg.sim.validate();
  prepare_dir(out_dir);
  std::vector<fs::path> written;
  json seeds = json::array();
  for (int t = 0; t < cfg.sim_trials; ++t) {
    GeneratorSpec spec = cfg.sim;
    spec.seed = derive_seed(cfg.seed, static_cast<std::uint64_t>(t));
    seeds.push_back(spec.seed);
    const GeneratedData data = generate(spec);
    std::vector<std::vector<double>> cols;
    for (const auto& ch : data.channels) cols.push_back(ch.features.values);
    char name[32];
    std::snprintf(name, sizeof(name), "trial_%03d.csv", t);
    written.push_back(out_dir / name);
    write_text(written.back(), recording_csv(data.labels, cols));
  }

  const GeneratorSpec& s = cfg.sim;
  json oracle{{"kind", to_string(s.kind)},
              {"length", s.length},
              {"trials", cfg.sim_trials},
              {"seed", cfg.seed},
              {"trial_seeds", seeds}};
  switch (s.kind) {
    case GeneratorSpec::Kind::binary_flip_chain:
    case GeneratorSpec::Kind::piecewise_coupled:
    case GeneratorSpec::Kind::planted_graph: oracle["flip_prob"] = s.flip_prob; break;
    case GeneratorSpec::Kind::gaussian_var:
      oracle["coupling"] = s.coupling;
      oracle["noise_std"] = s.noise_std;
      break;
    default: break;
  }
  if (s.kind == GeneratorSpec::Kind::piecewise_coupled) {
    oracle["onset"] = s.onset;
    oracle["offset"] = s.offset;
  }
  if (s.kind == GeneratorSpec::Kind::planted_graph) {
    json edges = json::array();
    for (const auto& [p, c] : s.edges) edges.push_back({{"source", "n" + std::to_string(p)}, {"target", "n" + std::to_string(c)}});
    oracle["node_count"] = s.node_count;
    oracle["edges"] = edges;
  }
  try {
    oracle["exact_di"] = exact_di(s);
  } catch (const Error& e) {
    if (e.kind() != ErrorKind::NoOracle) throw;
    oracle["exact_di"] = nullptr;
  }
  written.push_back(out_dir / "oracle.json");
  write_json(written.back(), oracle);
  return written;
}

// ---------------------------------------------------------------------------
// local

std::vector<fs::path> run_local(const fs::path& features_json, const PipelineConfig& cfg, const fs::path& out_dir) {
  cfg.validate();
  FeatureSet data = load_features(features_json);
  auto find = [&](const std::string& name, std::size_t fallback) {
    if (name.empty()) return fallback;
    const auto it = std::find(data.labels.begin(), data.labels.end(), name);
    if (it == data.labels.end()) fail(ErrorKind::Validation, "unknown channel '" + name + "'");
    return static_cast<std::size_t>(it - data.labels.begin());
  };
  if (data.labels.size() < 2 && (cfg.local_source.empty() || cfg.local_target.empty())) {
    fail(ErrorKind::ShapeError, "need at least two channels");
  }
  const std::size_t src = find(cfg.local_source, 0);
  const std::size_t dst = find(cfg.local_target, 1);
  // Local analysis runs on the first trial.
  auto& trial = data.trials.front();
  zscore({&trial[dst].features.values});

  const LocalDiSurface s = local_di(trial[src].symbols, trial[dst].features, cfg.window_T, cfg.stride,
                                    cfg.markov_order, cfg.lambda_policy, cfg.seed, cfg.lambda_reps);
  prepare_dir(out_dir);
  std::vector<fs::path> written;
  written.push_back(out_dir / "local_di.csv");
  write_text(written.back(), surface_csv(s));
  LocalDiSurface spread = s;
  spread.grid = s.boot_std;
  written.push_back(out_dir / "local_boot_std.csv");
  write_text(written.back(), surface_csv(spread));

  const auto [pi, pj] = s.peak();
  json j{{"source", data.labels[src]},
         {"target", data.labels[dst]},
         {"window_T", s.window_T},
         {"stride", s.stride},
         {"lambda", s.lambda},
         {"seed", cfg.seed},
         {"rows", s.grid.rows()},
         {"cols", s.grid.cols()},
         {"peak", {{"source_offset", pi * s.stride}, {"target_offset", pj * s.stride}, {"di", s.grid(pi, pj)}}}};
  if (std::min(s.grid.rows(), s.grid.cols()) >= 2) j["delta"] = delta_trajectory(s);
  written.push_back(out_dir / "local_di.json");
  write_json(written.back(), j);
  return written;
}

// ---------------------------------------------------------------------------
// benchmark

std::vector<fs::path> run_benchmark(const PipelineConfig& cfg, const fs::path& out_dir) {
  cfg.validate();
  json cases = json::array();

  // Oracle convergence on long binary chains.
  for (double q : {0.05, 0.1, 0.2}) {
    GeneratorSpec spec;
    spec.kind = GeneratorSpec::Kind::binary_flip_chain;
    spec.flip_prob = q;
    spec.length = 10000;
    spec.seed = derive_seed(cfg.seed, 1, static_cast<std::uint64_t>(q * 1000));
    const auto data = generate(spec);
    const auto t0 = std::chrono::steady_clock::now();
    const DiEstimate est = estimate_di(data.channels[0].symbols, data.channels[1].features, 1, cfg.lambda_policy,
                                       spec.seed, cfg.lambda_reps);
    std::cerr << "benchmark: flip chain q=" << q << " n=10000 in " << seconds_since(t0) << " s\n";
    const double oracle = exact_di(spec);
    cases.push_back({{"case", "binary_flip_chain"},
                     {"flip_prob", q},
                     {"length", spec.length},
                     {"di", est.value},
                     {"lambda", est.lambda},
                     {"exact_di", oracle},
                     {"relative_error", std::abs(est.value - oracle) / oracle}});
  }

  // One pair at EEG-segment scale: 59 rows, p_levels symbols, full null.
  {
    GeneratorSpec spec;
    spec.kind = GeneratorSpec::Kind::gaussian_var;
    spec.coupling = 0.8;
    spec.length = 59;
    spec.seed = derive_seed(cfg.seed, 2);
    auto data = generate(spec);
    const Codebook cb = train_lloyd_max(data.channels[0].features.values, cfg.p_levels);
    const QuantizedSequence qx = quantize(data.channels[0].features, cb);
    const auto t0 = std::chrono::steady_clock::now();
    const PairTest r = test_pair(di_problem(qx, data.channels[1].features, cfg.markov_order), cfg.markov_order,
                                 cfg.lambda_policy, cfg.bootstrap_B, cfg.lambda_reps, spec.seed);
    std::cerr << "benchmark: one pair at 59 segments, " << cfg.p_levels << " levels, B=" << cfg.bootstrap_B << " in "
              << seconds_since(t0) << " s\n";
    cases.push_back({{"case", "segment_scale_pair"},
                     {"length", spec.length},
                     {"levels", cfg.p_levels},
                     {"order", cfg.markov_order},
                     {"bootstrap_B", cfg.bootstrap_B},
                     {"di", r.estimate.value},
                     {"lambda", r.estimate.lambda},
                     {"p_value", r.p}});
  }

  // Baselines on the Gaussian chain.
  {
    GeneratorSpec spec;
    spec.kind = GeneratorSpec::Kind::gaussian_var;
    spec.coupling = 0.5;
    spec.length = 10000;
    spec.seed = derive_seed(cfg.seed, 3);
    const auto data = generate(spec);
    cases.push_back({{"case", "granger_gaussian"},
                     {"coupling", spec.coupling},
                     {"granger", granger_measure(data.channels[0].features, data.channels[1].features, 1)},
                     {"expected", std::log(1.25)}});
  }

  prepare_dir(out_dir);
  const fs::path f = out_dir / "benchmark.json";
  write_json(f, {{"seed", cfg.seed}, {"lambda_policy", describe_lambda(cfg.lambda_policy)}, {"cases", cases}});
  return {f};
}

}  // namespace dirinfo
