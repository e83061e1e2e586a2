#include "dirinfo/inference.hpp"

#include "dirinfo/error.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <random>

namespace dirinfo {

NullStats bootstrap_null_stats(const ContrastProblem& problem, double lambda, int resamples, std::uint64_t seed) {
  if (resamples < kMinNullResamples) {
    fail(ErrorKind::Validation, "null needs at least " + std::to_string(kMinNullResamples) + " resamples, got " +
                                    std::to_string(resamples));
  }
  if (!(lambda >= 0.0 && lambda <= 1.0)) fail(ErrorKind::BadLambda, "lambda must lie in [0, 1]");
  if (problem.size() < 2) fail(ErrorKind::TooShort, "null needs at least two rows");

  std::vector<double> stats;
  stats.reserve(static_cast<std::size_t>(resamples));
  ContrastProblem shuffled = problem;
  for (int b = 0; b < resamples; ++b) {
    shuffled.classes = problem.classes;
    std::mt19937_64 rng(derive_seed(seed, static_cast<std::uint64_t>(b), 0x6e756c6cULL));
    for (std::size_t i = shuffled.classes.size() - 1; i > 0; --i) {
      std::uniform_int_distribution<std::size_t> pick(0, i);
      std::swap(shuffled.classes[i], shuffled.classes[pick(rng)]);
    }
    if (problem.class_count <= 1) {
      stats.push_back(0.0);
      continue;
    }
    stats.push_back(fit_contrast(shuffled).value(lambda, shuffled));
  }

  NullStats out;
  out.resamples = resamples;
  out.lambda = lambda;
  out.mu = std::accumulate(stats.begin(), stats.end(), 0.0) / static_cast<double>(resamples);
  double var = 0.0;
  for (double s : stats) var += (s - out.mu) * (s - out.mu);
  out.sigma = std::sqrt(var / static_cast<double>(resamples - 1));
  if (!std::isfinite(out.mu) || !std::isfinite(out.sigma)) fail(ErrorKind::NumericalError, "non-finite null statistics");
  if (!(out.sigma > 0.0)) fail(ErrorKind::NumericalError, "null resamples are degenerate (zero spread)");
  return out;
}

NullStats bootstrap_null_stats(const QuantizedSequence& x, const FeatureSequence& y, int order, int resamples,
                               std::uint64_t seed, LambdaPolicy policy, int lambda_reps) {
  if (resamples < kMinNullResamples) {
    fail(ErrorKind::Validation, "null needs at least " + std::to_string(kMinNullResamples) + " resamples");
  }
  const ContrastProblem problem = di_problem(x, y, order);
  const double lambda = estimate_contrast(problem, order, policy, seed, lambda_reps).lambda;
  return bootstrap_null_stats(problem, lambda, resamples, derive_seed(seed, 1));
}

double p_value(double di, double mu, double sigma) {
  if (!(sigma > 0.0)) fail(ErrorKind::BadSigma, "sigma must be positive");
  const double z = (di - mu) / sigma;
  return 0.5 * std::erfc(z / std::sqrt(2.0));
}

namespace {

std::vector<std::size_t> step_up(std::span<const double> pvals, double alpha, double deflate) {
  if (!(alpha > 0.0 && alpha < 1.0)) fail(ErrorKind::Validation, "alpha must lie in (0, 1)");
  for (double p : pvals) {
    if (!(p >= 0.0 && p <= 1.0)) fail(ErrorKind::BadPValue, "p-value outside [0, 1]");
  }
  const std::size_t m = pvals.size();
  std::vector<std::size_t> order(m);
  std::iota(order.begin(), order.end(), 0);
  std::stable_sort(order.begin(), order.end(), [&](std::size_t a, std::size_t b) { return pvals[a] < pvals[b]; });

  std::size_t passing = 0;  // largest 1-based j meeting its threshold
  for (std::size_t j = 1; j <= m; ++j) {
    const double threshold = static_cast<double>(j) / static_cast<double>(m) * alpha / deflate;
    if (pvals[order[j - 1]] <= threshold) passing = j;
  }
  std::vector<std::size_t> rejected;
  if (passing == 0) return rejected;
  const double cut = pvals[order[passing - 1]];
  for (std::size_t i = 0; i < m; ++i) {
    if (pvals[i] <= cut) rejected.push_back(i);
  }
  return rejected;
}

}  // namespace

std::vector<std::size_t> bh_corrected(std::span<const double> pvals, double alpha) {
  double harmonic = 0.0;
  for (std::size_t n = 1; n <= pvals.size(); ++n) harmonic += 1.0 / static_cast<double>(n);
  return step_up(pvals, alpha, std::max(harmonic, 1.0));
}

std::vector<std::size_t> bh_plain(std::span<const double> pvals, double alpha) { return step_up(pvals, alpha, 1.0); }

InteractionGraph build_graph(const DiMatrix& di, const PValueMatrix& pv, double alpha) {
  if (di.labels != pv.labels) fail(ErrorKind::ShapeError, "DI and p-value matrices have different labels");
  const std::size_t k = di.size();
  if (pv.entries.rows() != static_cast<Eigen::Index>(k) || pv.entries.cols() != static_cast<Eigen::Index>(k) ||
      di.entries.size() != k * k) {
    fail(ErrorKind::ShapeError, "matrix dimensions do not match the label count");
  }
  std::vector<std::pair<std::size_t, std::size_t>> pairs;
  std::vector<double> pvals;
  for (std::size_t i = 0; i < k; ++i) {
    for (std::size_t j = 0; j < k; ++j) {
      if (i == j) continue;
      pairs.emplace_back(i, j);
      pvals.push_back(pv.entries(static_cast<Eigen::Index>(i), static_cast<Eigen::Index>(j)));
    }
  }
  InteractionGraph g;
  g.nodes = di.labels;
  g.alpha = alpha;
  g.hypotheses = pvals.size();
  if (pvals.empty()) return g;
  for (std::size_t idx : bh_corrected(pvals, alpha)) {
    const auto [i, j] = pairs[idx];
    g.edges.push_back({di.labels[i], di.labels[j], di.at(i, j).value, pvals[idx]});
  }
  return g;
}

PairTest test_pair(const ContrastProblem& problem, int order, LambdaPolicy policy, int null_resamples,
                   int lambda_reps, std::uint64_t seed) {
  PairTest out;
  out.estimate = estimate_contrast(problem, order, policy, seed, lambda_reps);
  if (out.estimate.single_class) {
    out.degenerate_null = true;
    out.null.resamples = null_resamples;
    out.null.lambda = out.estimate.lambda;
    return out;
  }
  try {
    out.null = bootstrap_null_stats(problem, out.estimate.lambda, null_resamples, derive_seed(seed, 1));
    out.p = p_value(out.estimate.value, out.null.mu, out.null.sigma);
  } catch (const Error& e) {
    if (e.kind() != ErrorKind::NumericalError) throw;
    out.degenerate_null = true;
    out.p = 1.0;
  }
  return out;
}

}  // namespace dirinfo
