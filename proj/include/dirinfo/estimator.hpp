#pragma once

#include "dirinfo/logit.hpp"
#include "dirinfo/signal.hpp"

#include <Eigen/Dense>

#include <cstdint>
#include <span>
#include <string>
#include <utility>
#include <vector>

namespace dirinfo {

struct LambdaPolicy {
  enum class Kind { optimize, fixed };
  Kind kind{Kind::optimize};
  double value{0.0};

  static LambdaPolicy optimize() { return {Kind::optimize, 0.0}; }
  static LambdaPolicy fixed(double lambda) { return {Kind::fixed, lambda}; }
  bool is_optimize() const { return kind == Kind::optimize; }
};

inline constexpr int kDefaultOrder = 2;
inline constexpr int kDefaultBootstrapReps = 30;

// A channel in both representations: raw segment features (used as
// regressors) and their quantized symbols (used as classes).
struct Channel {
  FeatureSequence features;
  QuantizedSequence symbols;
};

struct DiEstimate {
  double value{0.0};       // nats per step
  double cumulative{0.0};  // nats summed over all rows
  double lambda{0.0};
  int order{0};
  int n_rows{0};
  double boot_mean{0.0};
  double boot_std{0.0};
  bool single_class{false};  // only one class observed; value forced to 0

  double clamped() const { return value > 0.0 ? value : 0.0; }
};

struct DiMatrix {
  std::vector<std::string> labels;
  std::vector<DiEstimate> entries;  // row-major, entries[i*K + j] is i -> j

  std::size_t size() const { return labels.size(); }
  const DiEstimate& at(std::size_t i, std::size_t j) const { return entries[i * labels.size() + j]; }
  DiEstimate& at(std::size_t i, std::size_t j) { return entries[i * labels.size() + j]; }
  Eigen::MatrixXd values() const;
  Eigen::MatrixXd clamped_values() const;
};

// Time-localized DI: grid(i, j) is the DI from x window i to y window j,
// window i covering [i*stride, i*stride + window_T).
struct LocalDiSurface {
  Eigen::MatrixXd grid;
  Eigen::MatrixXd boot_std;
  int window_T{0};
  int stride{1};
  double lambda{0.0};

  std::pair<Eigen::Index, Eigen::Index> peak() const;
};

// Pooled directed-information problem for source x -> target y. Row m of a
// trial has class = joint code of (x_m, ..., x_{m-order}), reduced regressors
// (1, y_{m-1}, ..., y_{m-order}) and full regressors (1, y_m, y_{m-1}, ...).
ContrastProblem di_problem(std::span<const QuantizedSequence> x_trials, std::span<const FeatureSequence> y_trials,
                           int order);
ContrastProblem di_problem(const QuantizedSequence& x, const FeatureSequence& y, int order);

// Mutual-information problem for one orientation: class = x_m, reduced = intercept,
// full = (1, y_m, ..., y_{m-order}).
ContrastProblem mi_problem(std::span<const QuantizedSequence> x_trials, std::span<const FeatureSequence> y_trials,
                           int order);

// Fits, selects lambda per policy, and reports the plug-in contrast.
// bootstrap_reps drives the lambda search and the reported bootstrap spread;
// with a fixed policy 0 skips the bootstrap.
DiEstimate estimate_contrast(const ContrastProblem& problem, int order, LambdaPolicy policy, std::uint64_t seed,
                             int bootstrap_reps = kDefaultBootstrapReps);

DiEstimate estimate_di(const QuantizedSequence& x, const FeatureSequence& y, int order, LambdaPolicy policy,
                       std::uint64_t seed, int bootstrap_reps = kDefaultBootstrapReps);

// Symmetrized: the average of the two orientations, so swapping a and b gives
// the identical value.
DiEstimate estimate_mi(const Channel& a, const Channel& b, int order, LambdaPolicy policy, std::uint64_t seed,
                       int bootstrap_reps = kDefaultBootstrapReps);
DiEstimate estimate_mi(std::span<const Channel> a_trials, std::span<const Channel> b_trials, int order,
                       LambdaPolicy policy, std::uint64_t seed, int bootstrap_reps = kDefaultBootstrapReps);

// With an optimize policy, lambda is chosen once on the full aligned
// sequences and then held fixed for every window. `bootstrap_reps` sets the
// per-window bootstrap used for boot_std (0 skips it).
LocalDiSurface local_di(const QuantizedSequence& x, const FeatureSequence& y, int window_T, int stride, int order,
                        LambdaPolicy policy, std::uint64_t seed, int bootstrap_reps = kDefaultBootstrapReps);

// First difference of the surface's main diagonal.
std::vector<double> delta_trajectory(const LocalDiSurface& surface);

QuantizedSequence slice(const QuantizedSequence& q, std::size_t begin, std::size_t count);
FeatureSequence slice(const FeatureSequence& f, std::size_t begin, std::size_t count);

}  // namespace dirinfo
