#pragma once

#include "dirinfo/signal.hpp"

#include <Eigen/Dense>

#include <span>
#include <vector>

namespace dirinfo {

struct ShrunkCovariance {
  Eigen::MatrixXd covariance;
  double shrinkage{0.0};  // weight on the scaled-identity target, in [0, 1]
};

// Ledoit-Wolf shrinkage of the sample covariance (1/n normalization) of the
// rows of `data` toward mu * I, mu = trace / dimension.
ShrunkCovariance ledoit_wolf(const Eigen::MatrixXd& data);

// ln(restricted / full residual variance) for predicting y_t from its own
// ar_order lags versus its own plus x's lags. Columns are standardized and
// the joint covariance is Ledoit-Wolf shrunk before conditioning.
double granger_measure(std::span<const double> x, std::span<const double> y, int ar_order);
double granger_measure(const FeatureSequence& x, const FeatureSequence& y, int ar_order);

struct CoherencySpectrum {
  std::vector<double> freq_bins;  // in cycles per sample
  std::vector<double> imag;       // Im(coherency) per bin
};

// Welch estimate: 8 Hann-windowed segments with 50% overlap, constant detrend.
CoherencySpectrum imaginary_coherency(std::span<const double> x, std::span<const double> y);

// max over interior frequency bins of |Im(coherency)|.
double coherence_measure(std::span<const double> x, std::span<const double> y);
double coherence_measure(const FeatureSequence& x, const FeatureSequence& y);

}  // namespace dirinfo
