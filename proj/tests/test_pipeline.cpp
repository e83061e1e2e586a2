#include "dirinfo/pipeline.hpp"
#include "dirinfo/serialize.hpp"
#include "test_util.hpp"

#include <sys/wait.h>

#include <cstdlib>
#include <map>
#include <set>

using namespace dirinfo;
namespace fs = std::filesystem;

namespace {

struct RunResult {
  int code{-1};
  std::string err;
};

// Runs the CLI with stdout/stderr captured next to the outputs.
RunResult cli(const std::string& args, const fs::path& log_dir) {
  const fs::path err = log_dir / "stderr.txt";
  const std::string cmd = std::string(DIRINFO_CLI) + " " + args + " > " + (log_dir / "stdout.txt").string() + " 2> " +
                          err.string();
  const int status = std::system(cmd.c_str());
  RunResult r;
  r.code = WIFEXITED(status) ? WEXITSTATUS(status) : -1;
  r.err = read_text(err);
  return r;
}

std::map<std::string, std::string> snapshot(const fs::path& dir) {
  std::map<std::string, std::string> out;
  for (const auto& e : fs::directory_iterator(dir)) {
    if (e.is_regular_file()) out[e.path().filename().string()] = read_text(e.path());
  }
  return out;
}

void write_noise_recording(const fs::path& path, int channels, int samples, unsigned seed) {
  std::vector<std::string> labels;
  std::vector<std::vector<double>> cols;
  for (int c = 0; c < channels; ++c) {
    labels.push_back("ch" + std::to_string(c));
    cols.push_back(testutil::normal_draws(static_cast<std::size_t>(samples), seed + static_cast<unsigned>(c)));
  }
  write_text(path, recording_csv(labels, cols));
}

// A small planted-graph corpus preprocessed with binary symbols.
const std::string kSimSettings =
    "--set sim_kind=planted_graph --set sim_nodes=4 --set sim_edges=0-1 --set sim_flip=0.1 --set sim_length=120 "
    "--set sim_trials=2";
const std::string kPreSettings =
    "--set filter=0 --set sample_rate_hz=10 --set segment_ms=100 --set overlap_ms=0 --set p_levels=2";
const std::string kEstSettings = "--lambda 0 --set markov_order=1 --set bootstrap_B=100";

}  // namespace

TEST(Cli, MissingInputIsIoExit) {
  const auto dir = testutil::scratch_dir("cli_missing");
  const auto r = cli("preprocess -i " + (dir / "nope.csv").string() + " -o " + dir.string(), dir);
  EXPECT_EQ(r.code, 2) << r.err;
  EXPECT_NE(r.err.find("ParseError"), std::string::npos) << r.err;
}

TEST(Cli, OverlapNotBelowSegmentIsValidationExit) {
  const auto dir = testutil::scratch_dir("cli_overlap");
  write_noise_recording(dir / "rec.csv", 2, 2000, 1);
  write_text(dir / "bad.cfg", "segment_ms = 200\noverlap_ms = 200\n");
  const auto r = cli("preprocess -i " + (dir / "rec.csv").string() + " -c " + (dir / "bad.cfg").string() + " -o " +
                         (dir / "out").string(),
                     dir);
  EXPECT_EQ(r.code, 3) << r.err;
  EXPECT_NE(r.err.find("overlap_ms"), std::string::npos) << r.err;
  EXPECT_FALSE(fs::exists(dir / "out" / "features.json"));
}

TEST(Cli, UsageAndConfigErrorsAreValidationExit) {
  const auto dir = testutil::scratch_dir("cli_usage");
  EXPECT_EQ(cli("", dir).code, 3);
  EXPECT_EQ(cli("estimate --bogus-flag", dir).code, 3);
  EXPECT_EQ(cli("simulate --set nonsense=1 -o " + dir.string(), dir).code, 3);
  EXPECT_EQ(cli("simulate --lambda 2 -o " + dir.string(), dir).code, 3);
  EXPECT_EQ(cli("simulate -c " + (dir / "missing.cfg").string() + " -o " + dir.string(), dir).code, 2);
}

TEST(Cli, EmptyAnalyzeIsValidationExit) {
  const auto dir = testutil::scratch_dir("cli_empty_analyze");
  const auto r = cli("analyze -o " + dir.string(), dir);
  EXPECT_EQ(r.code, 3) << r.err;
  EXPECT_NE(r.err.find("EmptyCorpus"), std::string::npos) << r.err;
}

TEST(Cli, PreprocessBciShape) {
  const auto dir = testutil::scratch_dir("cli_bci");
  write_noise_recording(dir / "bci.csv", 19, 3008, 7);
  const auto r = cli("preprocess -i " + (dir / "bci.csv").string() + " -o " + (dir / "pre").string() +
                         " --set p_levels=3",
                     dir);
  ASSERT_EQ(r.code, 0) << r.err;
  const auto fs_data = load_features(dir / "pre" / "features.json");
  ASSERT_EQ(fs_data.labels.size(), 19u);
  for (const auto& ch : fs_data.trials.front()) {
    EXPECT_EQ(ch.features.size(), 59u);
    EXPECT_EQ(ch.symbols.size(), 59u);
  }
  const auto books = read_json(dir / "pre" / "codebooks.json");
  EXPECT_EQ(books.at("codebooks").size(), 19u);

  // Full ordered-pair sweep: 19 x 18 estimates.
  const auto e = cli("estimate -i " + (dir / "pre" / "features.json").string() + " -o " + (dir / "est").string() +
                         " --lambda 0 --set markov_order=1 --set bootstrap_B=100",
                     dir);
  ASSERT_EQ(e.code, 0) << e.err;
  EXPECT_NE(e.err.find("342 pairs"), std::string::npos) << e.err;
  const auto meta = read_json(dir / "est" / "di_matrix.json");
  EXPECT_EQ(meta.at("hypotheses"), 342);
  EXPECT_EQ(meta.at("pairs").size(), 342u);
  const auto pv = read_matrix_csv(dir / "est" / "pvalues.csv");
  EXPECT_EQ(pv.values.rows(), 19);
  EXPECT_EQ(pv.values.diagonal(), Eigen::VectorXd::Ones(19));
  EXPECT_GE(pv.values.minCoeff(), 0.0);
  EXPECT_LE(pv.values.maxCoeff(), 1.0);
}

TEST(Cli, TwoChannelEstimateGivesTwoEntries) {
  const auto dir = testutil::scratch_dir("cli_two");
  ASSERT_EQ(cli("simulate -o " + (dir / "sim").string() + " --set sim_length=600", dir).code, 0);
  ASSERT_EQ(cli("preprocess -i " + (dir / "sim" / "trial_000.csv").string() + " -o " + (dir / "pre").string() + " " +
                    kPreSettings,
                dir)
                .code,
            0);
  const auto r = cli("estimate -i " + (dir / "pre" / "features.json").string() + " -o " + (dir / "est").string() +
                         " " + kEstSettings,
                     dir);
  ASSERT_EQ(r.code, 0) << r.err;
  EXPECT_EQ(read_json(dir / "est" / "di_matrix.json").at("pairs").size(), 2u);
  const auto oracle = read_json(dir / "sim" / "oracle.json");
  EXPECT_EQ(oracle.at("kind"), "binary_flip_chain");
  EXPECT_NEAR(oracle.at("exact_di").get<double>(), 0.368064, 1e-6);
}

TEST(Cli, FlagsOverrideConfigFile) {
  const auto dir = testutil::scratch_dir("cli_override");
  const std::vector<std::string> labels{"a", "b", "c"};
  Eigen::MatrixXd di = Eigen::MatrixXd::Zero(3, 3);
  di(0, 1) = 0.4;
  Eigen::MatrixXd pv = Eigen::MatrixXd::Ones(3, 3);
  pv(0, 1) = 0.004;
  pv(1, 2) = 0.03;
  write_text(dir / "di.csv", matrix_csv(labels, di));
  write_text(dir / "pv.csv", matrix_csv(labels, pv));
  write_text(dir / "run.cfg", "alpha = 0.2\nfdr_q = 0.5\n");
  const std::string in = "-i " + (dir / "di.csv").string() + " -i " + (dir / "pv.csv").string();
  ASSERT_EQ(cli("graph " + in + " -c " + (dir / "run.cfg").string() + " -o " + (dir / "g1").string(), dir).code, 0);
  ASSERT_EQ(cli("graph " + in + " -c " + (dir / "run.cfg").string() + " --alpha 0.01 -o " + (dir / "g2").string(), dir)
                .code,
            0);
  const auto g1 = read_json(dir / "g1" / "graph.json");
  const auto g2 = read_json(dir / "g2" / "graph.json");
  EXPECT_EQ(g1.at("edges").size(), 2u);
  EXPECT_EQ(g2.at("edges").size(), 1u);
  EXPECT_EQ(g2.at("p_threshold"), 0.01);
  EXPECT_EQ(g2.at("hypotheses"), 6);
}

TEST(Cli, AnalyzeSyntheticCorpus) {
  const auto dir = testutil::scratch_dir("cli_analyze");
  const std::vector<std::string> labels{"a", "b", "c", "d", "e", "f"};
  std::mt19937_64 rng(3);
  std::uniform_real_distribution<double> u(0.0, 0.05);
  std::string inputs, classes;
  for (int r = 0; r < 12; ++r) {
    Eigen::MatrixXd m(6, 6);
    for (int i = 0; i < 6; ++i)
      for (int j = 0; j < 6; ++j) m(i, j) = i == j ? 0.0 : u(rng);
    if (r % 2 == 0) m(0, 1) += 0.5, m(1, 2) += 0.5;
    else m(3, 4) += 0.5, m(5, 3) += 0.5;
    const auto p = dir / ("m" + std::to_string(r) + ".csv");
    write_text(p, matrix_csv(labels, m));
    inputs += " -i " + p.string();
    classes += std::string(classes.empty() ? "" : ",") + (r % 2 ? "rest" : "task");
  }
  const auto res = cli("analyze" + inputs + " --labels " + classes + " -o " + (dir / "out").string(), dir);
  ASSERT_EQ(res.code, 0) << res.err;
  const auto cls = read_json(dir / "out" / "classification.json");
  EXPECT_EQ(cls.at("accuracy"), 1.0);
  EXPECT_EQ(read_json(dir / "out" / "roc.json").at("auc"), 1.0);
  EXPECT_EQ(read_text(dir / "out" / "roc.csv").substr(0, 8), "fpr,tpr\n");
  const auto mds_csv = read_text(dir / "out" / "mds.csv");
  EXPECT_EQ(mds_csv.substr(0, mds_csv.find('\n')), "label,dim1,dim2");

  // One matrix, k = 3: three clusters come out.
  const auto one = cli("analyze -i " + (dir / "m0.csv").string() + " -o " + (dir / "single").string(), dir);
  ASSERT_EQ(one.code, 0) << one.err;
  const auto cl = read_json(dir / "single" / "clusters.json");
  EXPECT_EQ(cl.at("k"), 3);
  std::set<int> ids;
  for (const auto& [name, id] : cl.at("assignment").items()) ids.insert(id.get<int>());
  EXPECT_EQ(ids.size(), 3u);

  EXPECT_EQ(cli("analyze -i " + (dir / "m0.csv").string() + " --labels x,y -o " + (dir / "bad").string(), dir).code, 3);
}

TEST(Cli, EveryCommandIsByteDeterministic) {
  const auto dir = testutil::scratch_dir("cli_determinism");
  std::map<std::string, std::map<std::string, std::string>> first;
  for (int run = 0; run < 2; ++run) {
    const fs::path base = dir / ("run" + std::to_string(run));
    fs::create_directories(base);
    const std::string seed = " --seed 11";
    auto step = [&](const std::string& name, const std::string& args) {
      const auto r = cli(args + " -o " + (base / name).string() + seed, base);
      ASSERT_EQ(r.code, 0) << name << ": " << r.err;
      const auto snap = snapshot(base / name);
      ASSERT_FALSE(snap.empty()) << name;
      if (run == 0) first[name] = snap;
      else EXPECT_EQ(snap, first[name]) << name;
    };
    step("sim", "simulate " + kSimSettings);
    step("pre", "preprocess -i " + (base / "sim" / "trial_000.csv").string() + " -i " +
                    (base / "sim" / "trial_001.csv").string() + " " + kPreSettings);
    const std::string features = (base / "pre" / "features.json").string();
    step("est", "estimate -i " + features + " " + kEstSettings);
    step("est_opt", "estimate -i " + features + " --lambda opt --set markov_order=1 --set bootstrap_B=100");
    step("graph", "graph -i " + (base / "est" / "di_matrix.json").string());
    step("analyze", "analyze -i " + (base / "est" / "di_matrix.csv").string() + " -i " +
                        (base / "est_opt" / "di_matrix.csv").string() + " --labels a,b");
    step("local", "local -i " + features + " --lambda opt --set markov_order=1 --set lambda_reps=20");
    step("bench", "benchmark --lambda 0 --set bootstrap_B=100 --set p_levels=4");
  }
  // Worker count must not change results.
  const auto r = cli("estimate -i " + (dir / "run0" / "pre" / "features.json").string() + " " + kEstSettings +
                         " --seed 11 -j 3 -o " + (dir / "jobs3").string(),
                     dir);
  ASSERT_EQ(r.code, 0) << r.err;
  EXPECT_EQ(snapshot(dir / "jobs3"), first["est"]);
}

TEST(Cli, PlantedEdgeSurvivesGraph) {
  const auto dir = testutil::scratch_dir("cli_planted");
  ASSERT_EQ(cli("simulate -o " + (dir / "sim").string() +
                    " --set sim_kind=planted_graph --set sim_nodes=4 --set sim_edges=0-1 --set sim_flip=0.1 "
                    "--set sim_length=400",
                dir)
                .code,
            0);
  ASSERT_EQ(cli("preprocess -i " + (dir / "sim" / "trial_000.csv").string() + " -o " + (dir / "pre").string() +
                    " --set filter=0 --set sample_rate_hz=10 --set segment_ms=100 --set overlap_ms=0 --set p_levels=2",
                dir)
                .code,
            0);
  ASSERT_EQ(cli("estimate -i " + (dir / "pre" / "features.json").string() + " -o " + (dir / "est").string() + " " +
                    kEstSettings,
                dir)
                .code,
            0);
  ASSERT_EQ(cli("graph -i " + (dir / "est" / "di_matrix.json").string() + " -o " + (dir / "g").string(), dir).code, 0);
  const auto g = read_json(dir / "g" / "graph.json");
  EXPECT_EQ(g.at("hypotheses"), 12);
  bool found = false;
  for (const auto& e : g.at("edges")) found |= e.at("source") == "n0" && e.at("target") == "n1";
  EXPECT_TRUE(found) << g.dump();
  const auto dot = read_text(dir / "g" / "graph.dot");
  EXPECT_NE(dot.find("\"n0\" -> \"n1\""), std::string::npos);
}
