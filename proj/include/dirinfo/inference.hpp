#pragma once

#include "dirinfo/estimator.hpp"

#include <Eigen/Dense>

#include <cstdint>
#include <span>
#include <string>
#include <vector>

namespace dirinfo {

inline constexpr int kMinNullResamples = 100;

struct NullStats {
  double mu{0.0};
  double sigma{0.0};
  int resamples{0};
  double lambda{0.0};  // shrinkage held fixed across all resamples
};

// Mean and std of the contrast over B resamples whose class labels are
// permuted across rows, which breaks the pairing between source windows and
// target regressors. lambda is fixed (normally the full-sample choice).
NullStats bootstrap_null_stats(const ContrastProblem& problem, double lambda, int resamples, std::uint64_t seed);

// Resolves lambda on the full sample per policy, then runs the null above.
NullStats bootstrap_null_stats(const QuantizedSequence& x, const FeatureSequence& y, int order, int resamples,
                               std::uint64_t seed, LambdaPolicy policy = LambdaPolicy::optimize(),
                               int lambda_reps = kDefaultBootstrapReps);

// One-sided: 1 - Phi((di - mu) / sigma).
double p_value(double di, double mu, double sigma);

// Step-up rejection with thresholds (j/m) * alpha / H_m, H_m the m-th harmonic
// number. Returns rejected indices in increasing order.
std::vector<std::size_t> bh_corrected(std::span<const double> pvals, double alpha);
// Same rule without the harmonic correction.
std::vector<std::size_t> bh_plain(std::span<const double> pvals, double alpha);

struct PValueMatrix {
  std::vector<std::string> labels;
  Eigen::MatrixXd entries;  // (i, j) tests i -> j; diagonal 1
};

struct Edge {
  std::string source;
  std::string target;
  double di_value{0.0};
  double p_value{1.0};
};

struct InteractionGraph {
  std::vector<std::string> nodes;
  std::vector<Edge> edges;
  double alpha{0.05};
  std::string fdr_method{"bh_corrected"};
  std::size_t hypotheses{0};
};

InteractionGraph build_graph(const DiMatrix& di, const PValueMatrix& pv, double alpha);

struct PairTest {
  DiEstimate estimate;
  NullStats null;
  double p{1.0};
  bool degenerate_null{false};  // null spread was zero; p reported as 1
};

// Estimate plus permutation null for one ordered pair. lambda is resolved once
// on the full sample and reused for every null resample.
PairTest test_pair(const ContrastProblem& problem, int order, LambdaPolicy policy, int null_resamples,
                   int lambda_reps, std::uint64_t seed);

}  // namespace dirinfo
