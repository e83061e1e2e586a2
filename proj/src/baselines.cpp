#include "dirinfo/baselines.hpp"

#include "dirinfo/error.hpp"

#include <fftw3.h>

#include <algorithm>
#include <cmath>
#include <complex>
#include <mutex>
#include <numbers>

namespace dirinfo {

ShrunkCovariance ledoit_wolf(const Eigen::MatrixXd& data) {
  const Eigen::Index n = data.rows();
  const Eigen::Index p = data.cols();
  if (n < 2) fail(ErrorKind::TooShort, "covariance needs at least two rows");
  const Eigen::MatrixXd centered = data.rowwise() - data.colwise().mean();
  const Eigen::MatrixXd s = centered.transpose() * centered / static_cast<double>(n);
  const double mu = s.trace() / static_cast<double>(p);
  const Eigen::MatrixXd target = mu * Eigen::MatrixXd::Identity(p, p);
  const double delta2 = (s - target).squaredNorm() / static_cast<double>(p);

  // sum_k ||x_k x_k' - S||^2 = sum_k ||x_k||^4 - n ||S||^2
  const double fourth = centered.rowwise().squaredNorm().array().square().sum();
  const double beta_bar2 =
      (fourth - static_cast<double>(n) * s.squaredNorm()) / (static_cast<double>(n) * static_cast<double>(n)) /
      static_cast<double>(p);
  const double beta2 = std::min(std::max(beta_bar2, 0.0), delta2);

  ShrunkCovariance out;
  out.shrinkage = delta2 > 0.0 ? beta2 / delta2 : 1.0;
  out.covariance = out.shrinkage * target + (1.0 - out.shrinkage) * s;
  return out;
}

namespace {

// Variance of the last column conditional on the others under the shrunk covariance.
double conditional_variance(const Eigen::MatrixXd& joint) {
  const Eigen::MatrixXd cov = ledoit_wolf(joint).covariance;
  const Eigen::Index q = cov.rows() - 1;
  const Eigen::MatrixXd sxx = cov.topLeftCorner(q, q);
  const Eigen::VectorXd sxy = cov.topRightCorner(q, 1);
  const Eigen::LDLT<Eigen::MatrixXd> ldlt(sxx);
  if (ldlt.info() != Eigen::Success || !ldlt.isPositive() || ldlt.vectorD().minCoeff() <= 0.0) {
    fail(ErrorKind::NumericalError, "singular regressor covariance after shrinkage");
  }
  const double v = cov(q, q) - sxy.dot(ldlt.solve(sxy));
  if (!(v > 0.0) || !std::isfinite(v)) fail(ErrorKind::NumericalError, "non-positive residual variance");
  return v;
}

Eigen::MatrixXd standardize(Eigen::MatrixXd m) {
  for (Eigen::Index j = 0; j < m.cols(); ++j) {
    const double mean = m.col(j).mean();
    m.col(j).array() -= mean;
    const double sd = std::sqrt(m.col(j).squaredNorm() / static_cast<double>(m.rows()));
    if (sd > 0.0) m.col(j) /= sd;
  }
  return m;
}

}  // namespace

double granger_measure(std::span<const double> x, std::span<const double> y, int ar_order) {
  if (ar_order < 1) fail(ErrorKind::Validation, "AR order must be >= 1");
  const auto n = static_cast<Eigen::Index>(std::min(x.size(), y.size()));
  if (n <= 2 * ar_order) fail(ErrorKind::TooShort, "sequence must be longer than twice the AR order");
  const Eigen::Index rows = n - ar_order;
  Eigen::MatrixXd restricted(rows, ar_order + 1);
  Eigen::MatrixXd full(rows, 2 * ar_order + 1);
  for (Eigen::Index r = 0; r < rows; ++r) {
    const Eigen::Index t = r + ar_order;
    for (int l = 1; l <= ar_order; ++l) {
      restricted(r, l - 1) = y[static_cast<std::size_t>(t - l)];
      full(r, l - 1) = y[static_cast<std::size_t>(t - l)];
      full(r, ar_order + l - 1) = x[static_cast<std::size_t>(t - l)];
    }
    restricted(r, ar_order) = y[static_cast<std::size_t>(t)];
    full(r, 2 * ar_order) = y[static_cast<std::size_t>(t)];
  }
  return std::log(conditional_variance(standardize(restricted)) / conditional_variance(standardize(full)));
}

double granger_measure(const FeatureSequence& x, const FeatureSequence& y, int ar_order) {
  return granger_measure(std::span<const double>(x.values), std::span<const double>(y.values), ar_order);
}

namespace {

// FFTW's planner is not thread-safe.
std::mutex& fftw_planner_mutex() {
  static std::mutex m;
  return m;
}

class RealFft {
 public:
  explicit RealFft(int n) : n_(n) {
    in_ = fftw_alloc_real(static_cast<std::size_t>(n));
    out_ = fftw_alloc_complex(static_cast<std::size_t>(n / 2 + 1));
    std::lock_guard lock(fftw_planner_mutex());
    plan_ = fftw_plan_dft_r2c_1d(n, in_, out_, FFTW_ESTIMATE);
  }
  ~RealFft() {
    {
      std::lock_guard lock(fftw_planner_mutex());
      fftw_destroy_plan(plan_);
    }
    fftw_free(in_);
    fftw_free(out_);
  }
  RealFft(const RealFft&) = delete;
  RealFft& operator=(const RealFft&) = delete;

  std::vector<std::complex<double>> operator()(std::span<const double> x) {
    std::copy(x.begin(), x.end(), in_);
    fftw_execute(plan_);
    std::vector<std::complex<double>> spec(static_cast<std::size_t>(n_ / 2 + 1));
    for (std::size_t k = 0; k < spec.size(); ++k) spec[k] = {out_[k][0], out_[k][1]};
    return spec;
  }

 private:
  int n_;
  double* in_{nullptr};
  fftw_complex* out_{nullptr};
  fftw_plan plan_{nullptr};
};

}  // namespace

CoherencySpectrum imaginary_coherency(std::span<const double> x, std::span<const double> y) {
  constexpr std::size_t kSegments = 8;
  if (x.size() != y.size()) fail(ErrorKind::ShapeError, "coherence needs equal-length sequences");
  if (x.size() < 64) fail(ErrorKind::TooShort, "coherence needs at least 64 samples");

  // 8 segments with 50% overlap span 4.5 segment lengths.
  const std::size_t len = (2 * x.size()) / 9;
  const std::size_t step = len / 2;
  std::vector<double> window(len);
  for (std::size_t i = 0; i < len; ++i) {
    window[i] = 0.5 - 0.5 * std::cos(2.0 * std::numbers::pi * static_cast<double>(i) / static_cast<double>(len));
  }

  RealFft fft(static_cast<int>(len));
  const std::size_t bins = len / 2 + 1;
  std::vector<std::complex<double>> sxy(bins);
  std::vector<double> sxx(bins, 0.0), syy(bins, 0.0);
  std::vector<double> seg(len);
  for (std::size_t s = 0; s < kSegments; ++s) {
    auto taper = [&](std::span<const double> v) {
      const auto part = v.subspan(s * step, len);
      double mean = 0.0;
      for (double a : part) mean += a;
      mean /= static_cast<double>(len);
      for (std::size_t i = 0; i < len; ++i) seg[i] = (part[i] - mean) * window[i];
      return fft(seg);
    };
    const auto fx = taper(x);
    const auto fy = taper(y);
    for (std::size_t k = 0; k < bins; ++k) {
      sxy[k] += fx[k] * std::conj(fy[k]);
      sxx[k] += std::norm(fx[k]);
      syy[k] += std::norm(fy[k]);
    }
  }

  CoherencySpectrum out;
  for (std::size_t k = 1; k + 1 < bins; ++k) {
    const double denom = std::sqrt(sxx[k] * syy[k]);
    out.freq_bins.push_back(static_cast<double>(k) / static_cast<double>(len));
    out.imag.push_back(denom > 0.0 ? sxy[k].imag() / denom : 0.0);
  }
  return out;
}

double coherence_measure(std::span<const double> x, std::span<const double> y) {
  const auto spec = imaginary_coherency(x, y);
  double best = 0.0;
  for (double v : spec.imag) best = std::max(best, std::abs(v));
  return best;
}

double coherence_measure(const FeatureSequence& x, const FeatureSequence& y) {
  return coherence_measure(std::span<const double>(x.values), std::span<const double>(y.values));
}

}  // namespace dirinfo
