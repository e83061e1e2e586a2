#include "dirinfo/filter.hpp"

#include "dirinfo/error.hpp"

#include <algorithm>
#include <cmath>
#include <complex>
#include <numbers>

namespace dirinfo::filter {

namespace {

// Single-pass |H|^2 at the edge must be 1/sqrt(2) so that two passes give 1/2.
// For a 2nd-order Butterworth, (w/wc)^4 = sqrt(2) - 1 at that point.
const double kEdgeRatio = std::pow(std::numbers::sqrt2 - 1.0, 0.25);

Biquad butterworth_from_k(double k, bool highpass) {
  const double norm = 1.0 / (1.0 + std::numbers::sqrt2 * k + k * k);
  Biquad s;
  if (highpass) {
    s.b0 = norm;
    s.b1 = -2.0 * norm;
    s.b2 = norm;
  } else {
    s.b0 = k * k * norm;
    s.b1 = 2.0 * s.b0;
    s.b2 = s.b0;
  }
  s.a1 = 2.0 * (k * k - 1.0) * norm;
  s.a2 = (1.0 - std::numbers::sqrt2 * k + k * k) * norm;
  return s;
}

double dc_gain(const Biquad& s) { return (s.b0 + s.b1 + s.b2) / (1.0 + s.a1 + s.a2); }

void run_section(const Biquad& s, std::vector<double>& x, double z1, double z2) {
  for (double& v : x) {
    const double in = v;
    const double out = s.b0 * in + z1;
    z1 = s.b1 * in - s.a1 * out + z2;
    z2 = s.b2 * in - s.a2 * out;
    v = out;
  }
}

// Runs the cascade starting from the steady state of a constant input x[0].
void run_cascade_steady(const Cascade& cascade, std::vector<double>& x) {
  if (x.empty()) return;
  double level = x.front();
  for (const Biquad& s : cascade) {
    const double g = dc_gain(s);
    const double z2 = (s.b2 - s.a2 * g) * level;
    const double z1 = (s.b1 - s.a1 * g) * level + z2;
    run_section(s, x, z1, z2);
    level *= g;
  }
}

}  // namespace

Biquad butterworth_lowpass(double cutoff_hz, double sample_rate_hz) {
  return butterworth_from_k(std::tan(std::numbers::pi * cutoff_hz / sample_rate_hz), false);
}

Biquad butterworth_highpass(double cutoff_hz, double sample_rate_hz) {
  return butterworth_from_k(std::tan(std::numbers::pi * cutoff_hz / sample_rate_hz), true);
}

Biquad notch(double center_hz, double bandwidth_hz, double sample_rate_hz) {
  const double w0 = 2.0 * std::numbers::pi * center_hz / sample_rate_hz;
  const double q = center_hz / bandwidth_hz;
  const double alpha = std::sin(w0) / (2.0 * q);
  const double a0 = 1.0 + alpha;
  Biquad s;
  s.b0 = 1.0 / a0;
  s.b1 = -2.0 * std::cos(w0) / a0;
  s.b2 = 1.0 / a0;
  s.a1 = s.b1;
  s.a2 = (1.0 - alpha) / a0;
  return s;
}

Cascade design_zero_phase_band(double low_hz, double high_hz, double notch_center_hz,
                               double notch_bandwidth_hz, double sample_rate_hz) {
  const double nyquist = sample_rate_hz / 2.0;
  if (!(sample_rate_hz > 0.0) || !(low_hz >= 0.0) || !(high_hz > low_hz) || !(high_hz < nyquist)) {
    fail(ErrorKind::BadBand, "band must satisfy 0 <= low < high < sample_rate/2");
  }
  Cascade cascade;
  if (low_hz > 0.0) {
    const double k = std::tan(std::numbers::pi * low_hz / sample_rate_hz) * kEdgeRatio;
    cascade.push_back(butterworth_from_k(k, true));
  }
  {
    const double k = std::tan(std::numbers::pi * high_hz / sample_rate_hz) / kEdgeRatio;
    cascade.push_back(butterworth_from_k(k, false));
  }
  if (notch_bandwidth_hz > 0.0) {
    const double lo = notch_center_hz - notch_bandwidth_hz / 2.0;
    const double hi = notch_center_hz + notch_bandwidth_hz / 2.0;
    if (!(lo > low_hz) || !(hi < high_hz)) {
      fail(ErrorKind::BadBand, "notch band must lie inside the pass band");
    }
    cascade.push_back(notch(notch_center_hz, notch_bandwidth_hz, sample_rate_hz));
  }
  return cascade;
}

double magnitude_response(const Cascade& cascade, double freq_hz, double sample_rate_hz) {
  const double w = 2.0 * std::numbers::pi * freq_hz / sample_rate_hz;
  const std::complex<double> z1 = std::polar(1.0, -w);
  const std::complex<double> z2 = z1 * z1;
  double mag = 1.0;
  for (const Biquad& s : cascade) {
    const std::complex<double> num = s.b0 + s.b1 * z1 + s.b2 * z2;
    const std::complex<double> den = 1.0 + s.a1 * z1 + s.a2 * z2;
    mag *= std::abs(num / den);
  }
  return mag;
}

std::vector<double> lfilter(const Cascade& cascade, std::span<const double> x) {
  std::vector<double> y(x.begin(), x.end());
  for (const Biquad& s : cascade) run_section(s, y, 0.0, 0.0);
  return y;
}

std::vector<double> filtfilt(const Cascade& cascade, std::span<const double> x, std::size_t padlen) {
  const std::size_t n = x.size();
  if (n == 0) return {};
  padlen = std::min(padlen, n - 1);

  std::vector<double> ext;
  ext.reserve(n + 2 * padlen);
  for (std::size_t i = padlen; i >= 1; --i) ext.push_back(2.0 * x.front() - x[i]);
  ext.insert(ext.end(), x.begin(), x.end());
  for (std::size_t i = 1; i <= padlen; ++i) ext.push_back(2.0 * x.back() - x[n - 1 - i]);

  run_cascade_steady(cascade, ext);
  std::reverse(ext.begin(), ext.end());
  run_cascade_steady(cascade, ext);
  std::reverse(ext.begin(), ext.end());

  return {ext.begin() + static_cast<std::ptrdiff_t>(padlen),
          ext.begin() + static_cast<std::ptrdiff_t>(padlen + n)};
}

}  // namespace dirinfo::filter
