#include "dirinfo/estimator.hpp"

#include "dirinfo/error.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numeric>

namespace dirinfo {

Eigen::MatrixXd DiMatrix::values() const {
  const auto k = static_cast<Eigen::Index>(size());
  Eigen::MatrixXd m(k, k);
  for (Eigen::Index i = 0; i < k; ++i)
    for (Eigen::Index j = 0; j < k; ++j) m(i, j) = at(static_cast<std::size_t>(i), static_cast<std::size_t>(j)).value;
  return m;
}

Eigen::MatrixXd DiMatrix::clamped_values() const { return values().cwiseMax(0.0); }

std::pair<Eigen::Index, Eigen::Index> LocalDiSurface::peak() const {
  Eigen::Index r = 0, c = 0;
  grid.maxCoeff(&r, &c);
  return {r, c};
}

namespace {

void require_trials(std::size_t nx, std::size_t ny) {
  if (nx != ny) fail(ErrorKind::ShapeError, "source and target trial counts differ");
  if (nx == 0) fail(ErrorKind::EmptyInput, "no trials");
}

int remap_codes(const std::vector<std::int64_t>& codes, std::vector<int>& out) {
  std::vector<std::int64_t> sorted = codes;
  std::sort(sorted.begin(), sorted.end());
  sorted.erase(std::unique(sorted.begin(), sorted.end()), sorted.end());
  out.resize(codes.size());
  for (std::size_t i = 0; i < codes.size(); ++i) {
    out[i] = static_cast<int>(std::lower_bound(sorted.begin(), sorted.end(), codes[i]) - sorted.begin());
  }
  return static_cast<int>(sorted.size());
}

void append_rows(Eigen::MatrixXd& dst, const Eigen::MatrixXd& src) {
  const Eigen::Index at = dst.rows();
  dst.conservativeResize(at + src.rows(), src.cols());
  dst.bottomRows(src.rows()) = src;
}

}  // namespace

ContrastProblem di_problem(std::span<const QuantizedSequence> x_trials, std::span<const FeatureSequence> y_trials,
                           int order) {
  require_trials(x_trials.size(), y_trials.size());
  if (order < 1) fail(ErrorKind::Validation, "Markov order must be >= 1");
  std::vector<std::int64_t> codes;
  ContrastProblem p;
  p.reduced.resize(0, order + 1);
  p.full.resize(0, order + 2);
  for (std::size_t t = 0; t < x_trials.size(); ++t) {
    const auto& x = x_trials[t];
    const auto& y = y_trials[t];
    const std::size_t len = std::min(x.size(), y.size());
    if (len <= static_cast<std::size_t>(order)) {
      fail(ErrorKind::TooShort, "aligned length " + std::to_string(len) + " must exceed the order " +
                                    std::to_string(order));
    }
    const std::int64_t base = std::max(x.levels, 1);
    std::span<const double> yv(y.values.data(), len);
    append_rows(p.reduced, build_design(yv, order, false).rows);
    append_rows(p.full, build_design(yv, order, true).rows);
    for (std::size_t m = static_cast<std::size_t>(order); m < len; ++m) {
      std::int64_t code = 0;
      for (int j = order; j >= 0; --j) {
        const int s = x.symbols[m - static_cast<std::size_t>(j)];
        if (s < 0 || s >= base) fail(ErrorKind::BadInput, "symbol outside the quantizer alphabet");
        code = code * base + s;
      }
      codes.push_back(code);
    }
  }
  p.class_count = remap_codes(codes, p.classes);
  return p;
}

ContrastProblem di_problem(const QuantizedSequence& x, const FeatureSequence& y, int order) {
  return di_problem(std::span<const QuantizedSequence>(&x, 1), std::span<const FeatureSequence>(&y, 1), order);
}

ContrastProblem mi_problem(std::span<const QuantizedSequence> x_trials, std::span<const FeatureSequence> y_trials,
                           int order) {
  require_trials(x_trials.size(), y_trials.size());
  std::vector<std::int64_t> codes;
  ContrastProblem p;
  p.full.resize(0, order + 2);
  for (std::size_t t = 0; t < x_trials.size(); ++t) {
    const auto& x = x_trials[t];
    const auto& y = y_trials[t];
    const std::size_t len = std::min(x.size(), y.size());
    if (len <= static_cast<std::size_t>(order)) fail(ErrorKind::TooShort, "aligned length must exceed the order");
    append_rows(p.full, build_design(std::span<const double>(y.values.data(), len), order, true).rows);
    for (std::size_t m = static_cast<std::size_t>(order); m < len; ++m) codes.push_back(x.symbols[m]);
  }
  p.reduced = Eigen::MatrixXd::Ones(p.full.rows(), 1);
  p.class_count = remap_codes(codes, p.classes);
  return p;
}

DiEstimate estimate_contrast(const ContrastProblem& problem, int order, LambdaPolicy policy, std::uint64_t seed,
                             int bootstrap_reps) {
  if (problem.size() == 0) fail(ErrorKind::TooShort, "no aligned rows");
  if (!policy.is_optimize() && !(policy.value >= 0.0 && policy.value <= 1.0)) {
    fail(ErrorKind::BadLambda, "lambda must lie in [0, 1]");
  }
  DiEstimate est;
  est.order = order;
  est.n_rows = static_cast<int>(problem.size());
  est.lambda = policy.is_optimize() ? 0.0 : policy.value;
  if (problem.class_count <= 1) {
    est.single_class = true;
    return est;
  }

  const FittedContrast fit = fit_contrast(problem);
  if (policy.is_optimize()) {
    if (bootstrap_reps < kMinBootstrapReps) {
      fail(ErrorKind::Validation, "lambda search needs at least " + std::to_string(kMinBootstrapReps) +
                                      " bootstrap replicates");
    }
    if (problem.size() < kMinResampleRows) {
      fail(ErrorKind::TooFewTrials, "only " + std::to_string(problem.size()) + " rows available for resampling");
    }
    const BootstrapEnsemble ens = bootstrap_contrast(problem, bootstrap_reps, seed, {}, &fit);
    const LambdaSearch search = optimize_lambda(problem, fit, ens);
    est.lambda = search.lambda_opt;
    est.boot_mean = search.boot_mean;
    est.boot_std = search.boot_std;
  } else if (bootstrap_reps > 0 && problem.size() >= 2) {
    const BootstrapEnsemble ens = bootstrap_contrast(problem, bootstrap_reps, seed, {}, &fit);
    const auto vals = ens.values(est.lambda, problem);
    const double mean = std::accumulate(vals.begin(), vals.end(), 0.0) / static_cast<double>(vals.size());
    double var = 0.0;
    for (double v : vals) var += (v - mean) * (v - mean);
    est.boot_mean = mean;
    est.boot_std = vals.size() > 1 ? std::sqrt(var / static_cast<double>(vals.size() - 1)) : 0.0;
  }
  est.value = fit.value(est.lambda, problem);
  est.cumulative = est.value * static_cast<double>(est.n_rows);
  return est;
}

DiEstimate estimate_di(const QuantizedSequence& x, const FeatureSequence& y, int order, LambdaPolicy policy,
                       std::uint64_t seed, int bootstrap_reps) {
  return estimate_contrast(di_problem(x, y, order), order, policy, seed, bootstrap_reps);
}

DiEstimate estimate_mi(std::span<const Channel> a_trials, std::span<const Channel> b_trials, int order,
                       LambdaPolicy policy, std::uint64_t seed, int bootstrap_reps) {
  require_trials(a_trials.size(), b_trials.size());
  std::vector<QuantizedSequence> aq, bq;
  std::vector<FeatureSequence> af, bf;
  for (std::size_t t = 0; t < a_trials.size(); ++t) {
    aq.push_back(a_trials[t].symbols);
    af.push_back(a_trials[t].features);
    bq.push_back(b_trials[t].symbols);
    bf.push_back(b_trials[t].features);
  }
  const DiEstimate ab = estimate_contrast(mi_problem(aq, bf, order), order, policy, seed, bootstrap_reps);
  const DiEstimate ba = estimate_contrast(mi_problem(bq, af, order), order, policy, seed, bootstrap_reps);
  DiEstimate est;
  est.order = order;
  est.n_rows = ab.n_rows;
  est.value = 0.5 * (ab.value + ba.value);
  est.cumulative = 0.5 * (ab.cumulative + ba.cumulative);
  est.lambda = 0.5 * (ab.lambda + ba.lambda);
  est.boot_mean = 0.5 * (ab.boot_mean + ba.boot_mean);
  est.boot_std = 0.5 * (ab.boot_std + ba.boot_std);
  est.single_class = ab.single_class && ba.single_class;
  return est;
}

DiEstimate estimate_mi(const Channel& a, const Channel& b, int order, LambdaPolicy policy, std::uint64_t seed,
                       int bootstrap_reps) {
  return estimate_mi(std::span<const Channel>(&a, 1), std::span<const Channel>(&b, 1), order, policy, seed,
                     bootstrap_reps);
}

QuantizedSequence slice(const QuantizedSequence& q, std::size_t begin, std::size_t count) {
  QuantizedSequence out;
  out.levels = q.levels;
  out.codebook_id = q.codebook_id;
  out.symbols.assign(q.symbols.begin() + static_cast<std::ptrdiff_t>(begin),
                     q.symbols.begin() + static_cast<std::ptrdiff_t>(begin + count));
  return out;
}

FeatureSequence slice(const FeatureSequence& f, std::size_t begin, std::size_t count) {
  FeatureSequence out;
  out.segment_len_ms = f.segment_len_ms;
  out.overlap_ms = f.overlap_ms;
  out.source_channel = f.source_channel;
  out.values.assign(f.values.begin() + static_cast<std::ptrdiff_t>(begin),
                    f.values.begin() + static_cast<std::ptrdiff_t>(begin + count));
  return out;
}

LocalDiSurface local_di(const QuantizedSequence& x, const FeatureSequence& y, int window_T, int stride, int order,
                        LambdaPolicy policy, std::uint64_t seed, int bootstrap_reps) {
  if (stride < 1) fail(ErrorKind::BadWindow, "stride must be >= 1");
  if (window_T <= order) fail(ErrorKind::BadWindow, "window must be longer than the Markov order");
  const auto tx = static_cast<std::size_t>(window_T);
  if (tx > x.size() || tx > y.size()) fail(ErrorKind::BadWindow, "window longer than the sequences");

  LocalDiSurface s;
  s.window_T = window_T;
  s.stride = stride;
  if (policy.is_optimize()) {
    s.lambda = estimate_di(x, y, order, policy, seed, bootstrap_reps).lambda;
  } else {
    s.lambda = policy.value;
  }
  const auto rows = static_cast<Eigen::Index>((x.size() - tx) / static_cast<std::size_t>(stride) + 1);
  const auto cols = static_cast<Eigen::Index>((y.size() - tx) / static_cast<std::size_t>(stride) + 1);
  s.grid.resize(rows, cols);
  s.boot_std.resize(rows, cols);
  for (Eigen::Index i = 0; i < rows; ++i) {
    const auto xw = slice(x, static_cast<std::size_t>(i * stride), tx);
    for (Eigen::Index j = 0; j < cols; ++j) {
      const auto yw = slice(y, static_cast<std::size_t>(j * stride), tx);
      // A single full-length cell reuses the global seed so it reproduces estimate_di.
      const std::uint64_t cell_seed =
          rows * cols == 1 ? seed : derive_seed(seed, static_cast<std::uint64_t>(i), static_cast<std::uint64_t>(j));
      const DiEstimate e =
          estimate_contrast(di_problem(xw, yw, order), order, LambdaPolicy::fixed(s.lambda), cell_seed, bootstrap_reps);
      s.grid(i, j) = e.value;
      s.boot_std(i, j) = e.boot_std;
    }
  }
  return s;
}

std::vector<double> delta_trajectory(const LocalDiSurface& surface) {
  const Eigen::Index diag = std::min(surface.grid.rows(), surface.grid.cols());
  if (diag < 2) fail(ErrorKind::TooShort, "need at least two diagonal windows");
  std::vector<double> out;
  out.reserve(static_cast<std::size_t>(diag - 1));
  for (Eigen::Index i = 1; i < diag; ++i) out.push_back(surface.grid(i, i) - surface.grid(i - 1, i - 1));
  return out;
}

}  // namespace dirinfo
