#pragma once

#include "dirinfo/signal.hpp"

#include <Eigen/Dense>

#include <cstdint>
#include <span>
#include <utility>
#include <vector>

namespace dirinfo {

// A point on the probability simplex.
struct ClassDistribution {
  std::vector<double> probs;

  // Shannon entropy in nats.
  double entropy() const;
};

// Regressor rows built from lagged feature values. Column 0 is the constant
// intercept; the remaining columns hold y_m (when includes_current) followed
// by y_{m-1}, ..., y_{m-order}.
struct ConditioningDesign {
  Eigen::MatrixXd rows;
  int order{0};
  bool includes_current{false};

  Eigen::Index size() const { return rows.rows(); }
  Eigen::Index width() const { return rows.cols(); }
};

ConditioningDesign build_design(std::span<const double> y, int order, bool includes_current);
ConditioningDesign build_design(const FeatureSequence& y, int order, bool includes_current);

// Design with only the intercept column.
ConditioningDesign intercept_design(Eigen::Index rows);

struct MlFitOptions {
  int max_iterations{1000};
  // Max-norm of the projected gradient of the per-row mean log-likelihood.
  double gradient_tolerance{1e-6};
  // Box constraint |beta| <= cap guarding against separable samples.
  double coefficient_cap{30.0};
};

struct MlFitTrace {
  std::vector<double> log_likelihood;  // total log-likelihood per iterate
  int iterations{0};
  bool converged{false};
};

// Maximum-likelihood multinomial logit coefficients (class_count x width).
// The last class row is pinned to zero. `warm_start`, when given, must have
// the output shape.
Eigen::MatrixXd fit_ml(std::span<const int> classes, int class_count, const Eigen::MatrixXd& design,
                       const MlFitOptions& options = {}, MlFitTrace* trace = nullptr,
                       const Eigen::MatrixXd* warm_start = nullptr);
Eigen::MatrixXd fit_ml(const QuantizedSequence& x, const ConditioningDesign& design,
                       const MlFitOptions& options = {}, MlFitTrace* trace = nullptr);

double log_likelihood(std::span<const int> classes, const Eigen::MatrixXd& beta, const Eigen::MatrixXd& design);

// t_l = 1/sd(column l), 0 for the intercept. Throws DegenerateColumn on a
// constant non-intercept column.
Eigen::VectorXd shrinkage_target(const ConditioningDesign& design);
Eigen::VectorXd shrinkage_target(const Eigen::MatrixXd& design);

// Same as shrinkage_target but maps constant columns to 0 instead of
// throwing; used inside resampling loops where short windows are common.
Eigen::VectorXd shrinkage_target_lenient(const Eigen::MatrixXd& design);

// Every row equal to t.
Eigen::MatrixXd target_matrix(const Eigen::VectorXd& t, int class_count);

// lambda * target + (1 - lambda) * beta_ml.
Eigen::MatrixXd shrink(const Eigen::MatrixXd& beta_ml, const Eigen::MatrixXd& target, double lambda);

struct ShrinkageLogitModel {
  Eigen::MatrixXd beta_ml;
  Eigen::MatrixXd target;
  double lambda{0.0};
  Eigen::MatrixXd beta;
  int class_count{0};
  int regressor_dim{0};
  int order{0};

  static ShrinkageLogitModel make(Eigen::MatrixXd beta_ml, const Eigen::VectorXd& t, double lambda, int order);
};

ClassDistribution predict(const ShrinkageLogitModel& model, std::span<const double> row);
ClassDistribution predict(const ShrinkageLogitModel& model, const Eigen::VectorXd& row);

// Mean over the selected design rows of the predictive entropy under `beta`.
// An empty `rows` selection means all rows.
double mean_entropy(const Eigen::MatrixXd& beta, const Eigen::MatrixXd& design,
                    std::span<const int> rows = {});

// ---------------------------------------------------------------------------
// Entropy contrast: mean H(class | reduced regressors) - mean H(class | full
// regressors), both evaluated with shrunk coefficients. Directed information
// and the mutual-information baseline are both instances.

struct ContrastProblem {
  std::vector<int> classes;  // compact indices in [0, class_count)
  int class_count{0};
  Eigen::MatrixXd reduced;
  Eigen::MatrixXd full;

  Eigen::Index size() const { return static_cast<Eigen::Index>(classes.size()); }
};

// Remaps arbitrary non-negative class codes to 0..K-1 in increasing code order.
// Returns K.
int compact_classes(std::vector<int>& codes);

struct FittedContrast {
  Eigen::MatrixXd beta_reduced_ml;
  Eigen::MatrixXd beta_full_ml;
  Eigen::VectorXd target_reduced;
  Eigen::VectorXd target_full;
  int class_count{0};

  // Plug-in contrast (nats per row) on the problem's rows, or on `rows` of it.
  double value(double lambda, const ContrastProblem& problem, std::span<const int> rows = {}) const;
};

// Reduced fit starts from the empirical class log-odds and the full fit from
// the reduced optimum, unless `warm` (same class space and widths) is given.
FittedContrast fit_contrast(const ContrastProblem& problem, const MlFitOptions& options = {},
                            const FittedContrast* warm = nullptr);

// Fits of the contrast on resampled row sets, kept for cheap re-evaluation at
// many lambda values.
struct BootstrapEnsemble {
  std::vector<std::vector<int>> rows;  // indices into the source problem
  std::vector<FittedContrast> fits;

  std::vector<double> values(double lambda, const ContrastProblem& problem) const;
};

// Resamples rows with replacement; replicate r draws from an RNG seeded by
// (seed, r) so results do not depend on evaluation order. `warm`, the fit on
// the source problem, seeds every replicate's optimizer.
BootstrapEnsemble bootstrap_contrast(const ContrastProblem& problem, int replicates, std::uint64_t seed,
                                     const MlFitOptions& options = {}, const FittedContrast* warm = nullptr);

struct LambdaSearch {
  double lambda_opt{0.0};
  double mse_opt{0.0};
  std::vector<std::pair<double, double>> mse_curve;  // (lambda, mse), sorted by lambda
  double boot_mean{0.0};  // bootstrap mean of the contrast at lambda_opt
  double boot_std{0.0};
};

inline constexpr int kMinBootstrapReps = 20;
inline constexpr int kMinResampleRows = 8;

// Chooses lambda minimising bootstrap bias^2 + variance. The bias reference is
// the unshrunk contrast on the full sample. Search: 21-point grid, then
// projected finite-difference gradient descent with step halving.
LambdaSearch optimize_lambda(const ContrastProblem& problem, int bootstrap_reps, std::uint64_t seed,
                             const MlFitOptions& options = {});
LambdaSearch optimize_lambda(const QuantizedSequence& x, const ConditioningDesign& past,
                             const ConditioningDesign& with_current, int bootstrap_reps, std::uint64_t seed);

// Same search, reusing an already fitted full sample and bootstrap ensemble.
LambdaSearch optimize_lambda(const ContrastProblem& problem, const FittedContrast& full_fit,
                             const BootstrapEnsemble& ensemble);

// Deterministic 64-bit seed mixing (splitmix64 finalizer over the parts).
std::uint64_t derive_seed(std::uint64_t base, std::uint64_t a, std::uint64_t b = 0);

}  // namespace dirinfo
