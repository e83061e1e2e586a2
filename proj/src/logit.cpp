#include "dirinfo/logit.hpp"

#include "dirinfo/error.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <map>
#include <numeric>
#include <random>

namespace dirinfo {

double ClassDistribution::entropy() const {
  double h = 0.0;
  for (double p : probs) {
    if (p > 0.0) h -= p * std::log(p);
  }
  return h;
}

ConditioningDesign build_design(std::span<const double> y, int order, bool includes_current) {
  if (order < 1) fail(ErrorKind::Validation, "Markov order must be >= 1");
  const auto n = static_cast<Eigen::Index>(y.size());
  if (n <= order) {
    fail(ErrorKind::TooShort, "sequence of length " + std::to_string(n) + " needs more than " +
                                  std::to_string(order) + " values");
  }
  const Eigen::Index rows = n - order;
  const Eigen::Index width = order + 1 + (includes_current ? 1 : 0);
  ConditioningDesign d;
  d.order = order;
  d.includes_current = includes_current;
  d.rows.resize(rows, width);
  for (Eigen::Index r = 0; r < rows; ++r) {
    const Eigen::Index m = r + order;
    Eigen::Index c = 0;
    d.rows(r, c++) = 1.0;
    if (includes_current) d.rows(r, c++) = y[static_cast<std::size_t>(m)];
    for (int lag = 1; lag <= order; ++lag) d.rows(r, c++) = y[static_cast<std::size_t>(m - lag)];
  }
  return d;
}

ConditioningDesign build_design(const FeatureSequence& y, int order, bool includes_current) {
  return build_design(std::span<const double>(y.values), order, includes_current);
}

ConditioningDesign intercept_design(Eigen::Index rows) {
  ConditioningDesign d;
  d.rows = Eigen::MatrixXd::Ones(rows, 1);
  return d;
}

namespace {

// Mean log-likelihood of `classes` under softmax(design * beta'), also
// returning the class probabilities and per-row log-normalizers.
double softmax_log_likelihood(std::span<const int> classes, const Eigen::MatrixXd& beta, const Eigen::MatrixXd& design,
                              Eigen::MatrixXd& probs, Eigen::VectorXd& lse) {
  const Eigen::Index n = design.rows();
  probs.noalias() = design * beta.transpose();
  const Eigen::VectorXd mx = probs.rowwise().maxCoeff();
  Eigen::MatrixXd logits = probs;
  probs = (probs - mx.replicate(1, probs.cols())).array().exp().matrix();
  const Eigen::VectorXd z = probs.rowwise().sum();
  lse = mx + z.array().log().matrix();
  probs = probs.cwiseQuotient(z.replicate(1, probs.cols()));
  double ll = 0.0;
  for (Eigen::Index i = 0; i < n; ++i) ll += logits(i, classes[static_cast<std::size_t>(i)]) - lse(i);
  return ll / static_cast<double>(n);
}

}  // namespace

Eigen::MatrixXd fit_ml(std::span<const int> classes, int class_count, const Eigen::MatrixXd& design,
                       const MlFitOptions& options, MlFitTrace* trace, const Eigen::MatrixXd* warm_start) {
  const Eigen::Index n = design.rows();
  const Eigen::Index d = design.cols();
  if (n == 0) fail(ErrorKind::EmptyInput, "no rows to fit");
  if (static_cast<Eigen::Index>(classes.size()) != n) fail(ErrorKind::ShapeError, "class and design rows differ");
  if (class_count < 1) fail(ErrorKind::BadInput, "class count must be positive");
  if (!design.allFinite()) fail(ErrorKind::BadInput, "non-finite regressor");
  for (int c : classes) {
    if (c < 0 || c >= class_count) fail(ErrorKind::BadInput, "class index out of range");
  }

  const Eigen::Index kc = class_count;
  const double cap = options.coefficient_cap;
  Eigen::MatrixXd init = Eigen::MatrixXd::Zero(kc, d);
  if (warm_start) {
    if (warm_start->rows() != kc || warm_start->cols() != d) fail(ErrorKind::ShapeError, "warm start shape");
    init = warm_start->cwiseMax(-cap).cwiseMin(cap);
    init.row(kc - 1).setZero();
  }
  if (trace) *trace = MlFitTrace{};
  if (kc == 1) {
    if (trace) trace->converged = true;
    return init;
  }

  const Eigen::Index fr = kc - 1;  // free coefficient rows; the last is pinned
  const double inv_n = 1.0 / static_cast<double>(n);
  const Eigen::MatrixXd& x = design;
  Eigen::MatrixXd beta = init;
  Eigen::MatrixXd candidate = init;

  // Softmax state at the current beta; refreshed whenever a step is accepted.
  Eigen::MatrixXd probs(n, kc);
  Eigen::VectorXd lse(n);
  Eigen::MatrixXd cand_probs(n, kc);
  Eigen::VectorXd cand_lse(n);
  const auto evaluate = [&](const Eigen::MatrixXd& b, Eigen::MatrixXd& p, Eigen::VectorXd& l) {
    return softmax_log_likelihood(classes, b, x, p, l);
  };
  double ll = evaluate(beta, probs, lse);

  Eigen::MatrixXd grad(fr, d), dir(fr, d), mask(fr, d);
  Eigen::MatrixXd cg_r(fr, d), cg_z(fr, d), cg_p(fr, d), cg_ap(fr, d);
  Eigen::MatrixXd u(n, fr);
  Eigen::VectorXd row_mean(n);
  std::vector<Eigen::LLT<Eigen::MatrixXd>> factors(static_cast<std::size_t>(fr));
  std::vector<std::vector<Eigen::Index>> block_free(static_cast<std::size_t>(fr));
  std::vector<Eigen::MatrixXd> blocks(static_cast<std::size_t>(fr), Eigen::MatrixXd(d, d));
  double ridge = 0.0;

  // Curvature of the negative mean log-likelihood times v on the free coordinates.
  const auto hess_times = [&](const Eigen::MatrixXd& v, Eigen::MatrixXd& out) {
    const auto pf = probs.leftCols(fr);
    u.noalias() = x * v.transpose();
    row_mean = pf.cwiseProduct(u).rowwise().sum();
    u = pf.cwiseProduct(u - row_mean.replicate(1, fr));
    out.noalias() = u.transpose() * x;
    out = mask.cwiseProduct(out * inv_n + ridge * v);
  };

  // Block-diagonal preconditioner: one small Cholesky per free class row.
  const auto precondition = [&](const Eigen::MatrixXd& r, Eigen::MatrixXd& z) {
    z.setZero();
    for (Eigen::Index k = 0; k < fr; ++k) {
      const auto& f = block_free[static_cast<std::size_t>(k)];
      if (f.empty()) continue;
      const auto& llt = factors[static_cast<std::size_t>(k)];
      Eigen::VectorXd rk(static_cast<Eigen::Index>(f.size()));
      for (std::size_t q = 0; q < f.size(); ++q) rk(static_cast<Eigen::Index>(q)) = r(k, f[q]);
      if (llt.info() == Eigen::Success) rk = llt.solve(rk);
      for (std::size_t q = 0; q < f.size(); ++q) z(k, f[q]) = rk(static_cast<Eigen::Index>(q));
    }
  };

  int it = 0;
  bool converged = false;
  for (;; ++it) {
    if (trace) trace->log_likelihood.push_back(ll * static_cast<double>(n));

    // Ascent gradient of the mean log-likelihood over the free rows.
    Eigen::MatrixXd resid = -probs.leftCols(fr);
    for (Eigen::Index i = 0; i < n; ++i) {
      const int yi = classes[static_cast<std::size_t>(i)];
      if (yi < fr) resid(i, yi) += 1.0;
    }
    grad.noalias() = resid.transpose() * x;
    grad *= inv_n;

    // Projected-gradient size, then the binding set: coordinates at (or
    // within a small margin of) the cap whose gradient points outward.
    const Eigen::MatrixXd moved = (beta.topRows(fr) + grad).cwiseMax(-cap).cwiseMin(cap) - beta.topRows(fr);
    const double pg = moved.cwiseAbs().maxCoeff();
    if (pg < options.gradient_tolerance) {
      converged = true;
      break;
    }
    if (it >= options.max_iterations) break;
    const double margin = std::min(1e-3, moved.norm());
    for (Eigen::Index k = 0; k < fr; ++k) {
      for (Eigen::Index j = 0; j < d; ++j) {
        const double b = beta(k, j);
        const double g = grad(k, j);
        const bool binding = (b >= cap - margin && g > 0.0) || (b <= -cap + margin && g < 0.0);
        mask(k, j) = binding ? 0.0 : 1.0;
      }
    }

    // Diagonal curvature blocks for the preconditioner.
    const Eigen::MatrixXd w = probs.leftCols(fr).cwiseProduct((1.0 - probs.leftCols(fr).array()).matrix());
    double diag_max = 0.0;
    for (Eigen::Index a = 0; a < d; ++a) {
      for (Eigen::Index b = 0; b <= a; ++b) {
        const Eigen::VectorXd hab = w.transpose() * x.col(a).cwiseProduct(x.col(b)) * inv_n;
        for (Eigen::Index k = 0; k < fr; ++k) {
          blocks[static_cast<std::size_t>(k)](a, b) = hab(k);
          blocks[static_cast<std::size_t>(k)](b, a) = hab(k);
        }
        if (a == b) diag_max = std::max(diag_max, hab.maxCoeff());
      }
    }
    ridge = 1e-10 + 1e-8 * diag_max;
    for (Eigen::Index k = 0; k < fr; ++k) {
      auto& f = block_free[static_cast<std::size_t>(k)];
      f.clear();
      for (Eigen::Index j = 0; j < d; ++j) {
        if (mask(k, j) != 0.0) f.push_back(j);
      }
      if (f.empty()) continue;
      const auto m = static_cast<Eigen::Index>(f.size());
      Eigen::MatrixXd a(m, m);
      for (Eigen::Index p = 0; p < m; ++p) {
        for (Eigen::Index q = 0; q < m; ++q) a(p, q) = blocks[static_cast<std::size_t>(k)](f[p], f[q]);
        a(p, p) += ridge;
      }
      factors[static_cast<std::size_t>(k)].compute(a);
    }

    // Truncated Newton step on the free coordinates by preconditioned CG.
    dir.setZero();
    cg_r = mask.cwiseProduct(grad);
    const double r0 = cg_r.norm();
    const double stop = std::min(0.5, std::sqrt(r0)) * r0;
    precondition(cg_r, cg_z);
    cg_p = cg_z;
    double rz = cg_r.cwiseProduct(cg_z).sum();
    const Eigen::Index max_cg = std::min<Eigen::Index>(fr * d, 250);
    for (Eigen::Index cg = 0; cg < max_cg && r0 > 0.0; ++cg) {
      hess_times(cg_p, cg_ap);
      const double pap = cg_p.cwiseProduct(cg_ap).sum();
      if (!(pap > 0.0)) {
        if (cg == 0) dir = cg_z;
        break;
      }
      const double alpha = rz / pap;
      dir += alpha * cg_p;
      cg_r -= alpha * cg_ap;
      if (cg_r.norm() <= stop) break;
      precondition(cg_r, cg_z);
      const double rz_next = cg_r.cwiseProduct(cg_z).sum();
      cg_p = cg_z + (rz_next / rz) * cg_p;
      rz = rz_next;
    }
    dir = mask.cwiseProduct(dir) + (1.0 - mask.array()).matrix().cwiseProduct(grad);

    // Projected Armijo backtracking; falls back to the gradient direction.
    bool accepted = false;
    for (int attempt = 0; attempt < 2 && !accepted; ++attempt) {
      if (attempt == 1) dir = grad;
      double step = 1.0;
      for (int ls = 0; ls < 60; ++ls, step *= 0.5) {
        candidate.topRows(fr) = (beta.topRows(fr) + step * dir).cwiseMax(-cap).cwiseMin(cap);
        const Eigen::MatrixXd delta = candidate.topRows(fr) - beta.topRows(fr);
        const double change = delta.cwiseAbs().maxCoeff();
        if (change == 0.0) break;
        const double ascent = grad.cwiseProduct(delta).sum();
        const double next = evaluate(candidate, cand_probs, cand_lse);
        if (next >= ll + 1e-4 * ascent && next >= ll) {
          beta.swap(candidate);
          probs.swap(cand_probs);
          lse.swap(cand_lse);
          candidate = beta;
          ll = next;
          accepted = true;
          break;
        }
      }
    }
    if (!accepted) break;
  }
  if (trace) {
    trace->iterations = it;
    trace->converged = converged;
  }
  return beta;
}

Eigen::MatrixXd fit_ml(const QuantizedSequence& x, const ConditioningDesign& design, const MlFitOptions& options,
                       MlFitTrace* trace) {
  if (static_cast<Eigen::Index>(x.size()) != design.size()) {
    fail(ErrorKind::ShapeError, "symbols and design rows are not time-aligned");
  }
  return fit_ml(x.symbols, x.levels, design.rows, options, trace);
}

double log_likelihood(std::span<const int> classes, const Eigen::MatrixXd& beta, const Eigen::MatrixXd& design) {
  Eigen::MatrixXd probs;
  Eigen::VectorXd lse;
  return softmax_log_likelihood(classes, beta, design, probs, lse) * static_cast<double>(design.rows());
}

namespace {

Eigen::VectorXd target_impl(const Eigen::MatrixXd& design, bool strict) {
  const Eigen::Index n = design.rows();
  Eigen::VectorXd t = Eigen::VectorXd::Zero(design.cols());
  for (Eigen::Index j = 1; j < design.cols(); ++j) {
    const double mean = design.col(j).mean();
    const double var = n > 1 ? (design.col(j).array() - mean).square().sum() / static_cast<double>(n - 1) : 0.0;
    if (!(var > 0.0)) {
      if (strict) fail(ErrorKind::DegenerateColumn, "regressor column " + std::to_string(j) + " is constant");
      continue;
    }
    t(j) = 1.0 / std::sqrt(var);
  }
  return t;
}

}  // namespace

Eigen::VectorXd shrinkage_target(const Eigen::MatrixXd& design) { return target_impl(design, true); }
Eigen::VectorXd shrinkage_target(const ConditioningDesign& design) { return target_impl(design.rows, true); }
Eigen::VectorXd shrinkage_target_lenient(const Eigen::MatrixXd& design) { return target_impl(design, false); }

Eigen::MatrixXd target_matrix(const Eigen::VectorXd& t, int class_count) {
  return t.transpose().replicate(class_count, 1);
}

Eigen::MatrixXd shrink(const Eigen::MatrixXd& beta_ml, const Eigen::MatrixXd& target, double lambda) {
  if (!(lambda >= 0.0 && lambda <= 1.0)) fail(ErrorKind::BadLambda, "lambda must lie in [0, 1]");
  if (beta_ml.rows() != target.rows() || beta_ml.cols() != target.cols()) {
    fail(ErrorKind::ShapeError, "coefficient and target shapes differ");
  }
  return lambda * target + (1.0 - lambda) * beta_ml;
}

ShrinkageLogitModel ShrinkageLogitModel::make(Eigen::MatrixXd beta_ml, const Eigen::VectorXd& t, double lambda,
                                              int order) {
  ShrinkageLogitModel m;
  m.class_count = static_cast<int>(beta_ml.rows());
  m.regressor_dim = static_cast<int>(beta_ml.cols());
  if (t.size() != beta_ml.cols()) fail(ErrorKind::ShapeError, "target width differs from regressor width");
  m.target = target_matrix(t, m.class_count);
  m.beta = shrink(beta_ml, m.target, lambda);
  m.beta_ml = std::move(beta_ml);
  m.lambda = lambda;
  m.order = order;
  return m;
}

ClassDistribution predict(const ShrinkageLogitModel& model, std::span<const double> row) {
  if (static_cast<int>(row.size()) != model.regressor_dim || model.beta.cols() != model.regressor_dim) {
    fail(ErrorKind::ShapeError, "regressor row width mismatch");
  }
  const Eigen::Index kc = model.beta.rows();
  std::vector<double> logits(static_cast<std::size_t>(kc));
  for (Eigen::Index k = 0; k < kc; ++k) {
    double s = 0.0;
    for (Eigen::Index j = 0; j < model.beta.cols(); ++j) s += model.beta(k, j) * row[static_cast<std::size_t>(j)];
    logits[static_cast<std::size_t>(k)] = s;
  }
  const double mx = *std::max_element(logits.begin(), logits.end());
  ClassDistribution out;
  out.probs.resize(logits.size());
  double z = 0.0;
  for (std::size_t k = 0; k < logits.size(); ++k) {
    out.probs[k] = std::exp(logits[k] - mx);
    z += out.probs[k];
  }
  for (double& p : out.probs) p /= z;
  return out;
}

ClassDistribution predict(const ShrinkageLogitModel& model, const Eigen::VectorXd& row) {
  return predict(model, std::span<const double>(row.data(), static_cast<std::size_t>(row.size())));
}

double mean_entropy(const Eigen::MatrixXd& beta, const Eigen::MatrixXd& design, std::span<const int> rows) {
  if (beta.rows() <= 1) return 0.0;
  Eigen::MatrixXd logits;
  Eigen::VectorXd weights;
  if (rows.empty()) {
    logits.noalias() = design * beta.transpose();
  } else {
    // Resampled selections repeat rows; evaluate each distinct row once.
    std::vector<int> counts(static_cast<std::size_t>(design.rows()), 0);
    for (int r : rows) ++counts[static_cast<std::size_t>(r)];
    Eigen::Index distinct = 0;
    for (int c : counts) distinct += c > 0 ? 1 : 0;
    Eigen::MatrixXd sub(distinct, design.cols());
    weights.resize(distinct);
    Eigen::Index at = 0;
    for (std::size_t r = 0; r < counts.size(); ++r) {
      if (counts[r] == 0) continue;
      sub.row(at) = design.row(static_cast<Eigen::Index>(r));
      weights(at++) = counts[r];
    }
    logits.noalias() = sub * beta.transpose();
  }
  if (logits.rows() == 0) return 0.0;
  // H = lse - sum_k p_k l_k per row.
  const Eigen::VectorXd mx = logits.rowwise().maxCoeff();
  logits -= mx.replicate(1, logits.cols());
  const Eigen::MatrixXd e = logits.array().exp().matrix();
  const Eigen::VectorXd z = e.rowwise().sum();
  const Eigen::VectorXd h = z.array().log().matrix() - e.cwiseProduct(logits).rowwise().sum().cwiseQuotient(z);
  if (weights.size() == 0) return h.mean();
  return h.dot(weights) / static_cast<double>(rows.size());
}

int compact_classes(std::vector<int>& codes) {
  std::vector<int> sorted = codes;
  std::sort(sorted.begin(), sorted.end());
  sorted.erase(std::unique(sorted.begin(), sorted.end()), sorted.end());
  for (int& c : codes) {
    c = static_cast<int>(std::lower_bound(sorted.begin(), sorted.end(), c) - sorted.begin());
  }
  return static_cast<int>(sorted.size());
}

double FittedContrast::value(double lambda, const ContrastProblem& problem, std::span<const int> rows) const {
  if (class_count <= 1) return 0.0;
  const Eigen::MatrixXd br = shrink(beta_reduced_ml, target_matrix(target_reduced, class_count), lambda);
  const Eigen::MatrixXd bf = shrink(beta_full_ml, target_matrix(target_full, class_count), lambda);
  return mean_entropy(br, problem.reduced, rows) - mean_entropy(bf, problem.full, rows);
}

namespace {

// Empirical log-odds against the pinned last class, slopes zero.
Eigen::MatrixXd intercept_start(const ContrastProblem& problem, Eigen::Index width) {
  Eigen::VectorXd counts = Eigen::VectorXd::Zero(problem.class_count);
  for (int c : problem.classes) counts(c) += 1.0;
  Eigen::MatrixXd start = Eigen::MatrixXd::Zero(problem.class_count, width);
  const double last = counts(problem.class_count - 1);
  for (int k = 0; k + 1 < problem.class_count; ++k) {
    if (counts(k) > 0.0 && last > 0.0) start(k, 0) = std::log(counts(k) / last);
  }
  return start;
}

// Full-design start from reduced coefficients: the extra current-value
// column (column 1) enters at zero.
Eigen::MatrixXd widen(const Eigen::MatrixXd& reduced, Eigen::Index full_width) {
  Eigen::MatrixXd start = Eigen::MatrixXd::Zero(reduced.rows(), full_width);
  start.col(0) = reduced.col(0);
  if (full_width == reduced.cols() + 1) start.rightCols(reduced.cols() - 1) = reduced.rightCols(reduced.cols() - 1);
  return start;
}

// Re-expresses coefficients on a subset of classes, re-pinning the new last class.
Eigen::MatrixXd restrict_classes(const Eigen::MatrixXd& beta, const std::vector<int>& kept) {
  Eigen::MatrixXd out(static_cast<Eigen::Index>(kept.size()), beta.cols());
  const Eigen::RowVectorXd pin = beta.row(kept.back());
  for (std::size_t k = 0; k < kept.size(); ++k) out.row(static_cast<Eigen::Index>(k)) = beta.row(kept[k]) - pin;
  return out;
}

}  // namespace

FittedContrast fit_contrast(const ContrastProblem& problem, const MlFitOptions& options, const FittedContrast* warm) {
  if (problem.reduced.rows() != problem.size() || problem.full.rows() != problem.size()) {
    fail(ErrorKind::ShapeError, "contrast designs are not row-aligned with the classes");
  }
  FittedContrast f;
  f.class_count = problem.class_count;
  f.target_reduced = shrinkage_target_lenient(problem.reduced);
  f.target_full = shrinkage_target_lenient(problem.full);
  if (problem.class_count <= 1) {
    f.beta_reduced_ml = Eigen::MatrixXd::Zero(std::max(problem.class_count, 1), problem.reduced.cols());
    f.beta_full_ml = Eigen::MatrixXd::Zero(std::max(problem.class_count, 1), problem.full.cols());
    return f;
  }
  const bool usable = warm && warm->class_count == problem.class_count &&
                      warm->beta_reduced_ml.cols() == problem.reduced.cols() &&
                      warm->beta_full_ml.cols() == problem.full.cols();
  const Eigen::MatrixXd start = usable ? warm->beta_reduced_ml : intercept_start(problem, problem.reduced.cols());
  f.beta_reduced_ml = fit_ml(problem.classes, problem.class_count, problem.reduced, options, nullptr, &start);
  const Eigen::MatrixXd start_full = usable ? warm->beta_full_ml : widen(f.beta_reduced_ml, problem.full.cols());
  f.beta_full_ml = fit_ml(problem.classes, problem.class_count, problem.full, options, nullptr, &start_full);
  return f;
}

std::vector<double> BootstrapEnsemble::values(double lambda, const ContrastProblem& problem) const {
  std::vector<double> out;
  out.reserve(fits.size());
  for (std::size_t r = 0; r < fits.size(); ++r) out.push_back(fits[r].value(lambda, problem, rows[r]));
  return out;
}

std::uint64_t derive_seed(std::uint64_t base, std::uint64_t a, std::uint64_t b) {
  auto mix = [](std::uint64_t z) {
    z += 0x9E3779B97F4A7C15ULL;
    z = (z ^ (z >> 30)) * 0xBF58476D1CE4E5B9ULL;
    z = (z ^ (z >> 27)) * 0x94D049BB133111EBULL;
    return z ^ (z >> 31);
  };
  return mix(mix(mix(base) ^ a) ^ (b * 0xD6E8FEB86659FD93ULL));
}

BootstrapEnsemble bootstrap_contrast(const ContrastProblem& problem, int replicates, std::uint64_t seed,
                                     const MlFitOptions& options, const FittedContrast* warm) {
  const auto n = static_cast<int>(problem.size());
  BootstrapEnsemble ens;
  ens.rows.reserve(static_cast<std::size_t>(replicates));
  ens.fits.reserve(static_cast<std::size_t>(replicates));
  for (int r = 0; r < replicates; ++r) {
    std::mt19937_64 rng(derive_seed(seed, static_cast<std::uint64_t>(r)));
    std::uniform_int_distribution<int> pick(0, n - 1);
    std::vector<int> idx(static_cast<std::size_t>(n));
    for (int& i : idx) i = pick(rng);

    ContrastProblem sub;
    sub.classes.resize(idx.size());
    sub.reduced.resize(n, problem.reduced.cols());
    sub.full.resize(n, problem.full.cols());
    for (int i = 0; i < n; ++i) {
      const int src = idx[static_cast<std::size_t>(i)];
      sub.classes[static_cast<std::size_t>(i)] = problem.classes[static_cast<std::size_t>(src)];
      sub.reduced.row(i) = problem.reduced.row(src);
      sub.full.row(i) = problem.full.row(src);
    }
    std::vector<int> kept = sub.classes;
    std::sort(kept.begin(), kept.end());
    kept.erase(std::unique(kept.begin(), kept.end()), kept.end());
    sub.class_count = compact_classes(sub.classes);
    if (warm && warm->class_count == problem.class_count && sub.class_count > 1) {
      FittedContrast start;
      start.class_count = sub.class_count;
      start.beta_reduced_ml = restrict_classes(warm->beta_reduced_ml, kept);
      start.beta_full_ml = restrict_classes(warm->beta_full_ml, kept);
      ens.fits.push_back(fit_contrast(sub, options, &start));
    } else {
      ens.fits.push_back(fit_contrast(sub, options));
    }
    ens.rows.push_back(std::move(idx));
  }
  return ens;
}

namespace {

struct MeanStd {
  double mean{0.0};
  double var{0.0};
};

MeanStd mean_var(const std::vector<double>& v) {
  MeanStd s;
  if (v.empty()) return s;
  s.mean = std::accumulate(v.begin(), v.end(), 0.0) / static_cast<double>(v.size());
  if (v.size() > 1) {
    double acc = 0.0;
    for (double x : v) acc += (x - s.mean) * (x - s.mean);
    s.var = acc / static_cast<double>(v.size() - 1);
  }
  return s;
}

}  // namespace

LambdaSearch optimize_lambda(const ContrastProblem& problem, const FittedContrast& full_fit,
                             const BootstrapEnsemble& ensemble) {
  const double reference = full_fit.value(0.0, problem);
  std::map<double, double> evaluated;
  auto mse = [&](double lambda) {
    lambda = std::clamp(lambda, 0.0, 1.0);
    if (auto it = evaluated.find(lambda); it != evaluated.end()) return it->second;
    const MeanStd s = mean_var(ensemble.values(lambda, problem));
    const double bias = s.mean - reference;
    const double value = bias * bias + s.var;
    evaluated.emplace(lambda, value);
    return value;
  };

  constexpr int kGrid = 20;
  double best = 0.0;
  double best_mse = std::numeric_limits<double>::infinity();
  for (int g = 0; g <= kGrid; ++g) {
    const double lambda = static_cast<double>(g) / kGrid;
    const double v = mse(lambda);
    if (v < best_mse) {
      best_mse = v;
      best = lambda;
    }
  }

  // Projected descent from the best grid point.
  constexpr double kFdStep = 1e-3;
  constexpr double kStopStep = 1e-3;
  double lambda = best;
  double f = best_mse;
  double eta = -1.0;
  for (int it = 0; it < 200; ++it) {
    const double lo = std::max(0.0, lambda - kFdStep);
    const double hi = std::min(1.0, lambda + kFdStep);
    const double grad = (mse(hi) - mse(lo)) / (hi - lo);
    if (grad == 0.0 || !std::isfinite(grad)) break;
    if (eta < 0.0) eta = (1.0 / kGrid) / std::abs(grad);
    const double cand = std::clamp(lambda - eta * grad, 0.0, 1.0);
    if (std::abs(cand - lambda) < kStopStep) break;
    const double fc = mse(cand);
    if (fc < f) {
      lambda = cand;
      f = fc;
    } else {
      eta *= 0.5;
    }
  }

  LambdaSearch out;
  out.mse_opt = std::numeric_limits<double>::infinity();
  for (const auto& [l, v] : evaluated) {
    out.mse_curve.emplace_back(l, v);
    if (v < out.mse_opt) {
      out.mse_opt = v;
      out.lambda_opt = l;
    }
  }
  const MeanStd s = mean_var(ensemble.values(out.lambda_opt, problem));
  out.boot_mean = s.mean;
  out.boot_std = std::sqrt(s.var);
  return out;
}

LambdaSearch optimize_lambda(const ContrastProblem& problem, int bootstrap_reps, std::uint64_t seed,
                             const MlFitOptions& options) {
  if (bootstrap_reps < kMinBootstrapReps) {
    fail(ErrorKind::Validation, "lambda search needs at least " + std::to_string(kMinBootstrapReps) +
                                    " bootstrap replicates");
  }
  if (problem.size() < kMinResampleRows) {
    fail(ErrorKind::TooFewTrials, "only " + std::to_string(problem.size()) + " rows available for resampling");
  }
  const FittedContrast full = fit_contrast(problem, options);
  const BootstrapEnsemble ens = bootstrap_contrast(problem, bootstrap_reps, seed, options, &full);
  return optimize_lambda(problem, full, ens);
}

LambdaSearch optimize_lambda(const QuantizedSequence& x, const ConditioningDesign& past,
                             const ConditioningDesign& with_current, int bootstrap_reps, std::uint64_t seed) {
  if (static_cast<Eigen::Index>(x.size()) != past.size() || past.size() != with_current.size()) {
    fail(ErrorKind::ShapeError, "symbols and designs are not row-aligned");
  }
  ContrastProblem p;
  p.classes = x.symbols;
  p.class_count = compact_classes(p.classes);
  p.reduced = past.rows;
  p.full = with_current.rows;
  return optimize_lambda(p, bootstrap_reps, seed);
}

}  // namespace dirinfo
