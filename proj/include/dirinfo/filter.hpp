#pragma once

#include <span>
#include <vector>

namespace dirinfo::filter {

// Normalized second-order section (a0 == 1), direct form II transposed.
struct Biquad {
  double b0{1.0}, b1{0.0}, b2{0.0};
  double a1{0.0}, a2{0.0};
};

using Cascade = std::vector<Biquad>;

// Second-order Butterworth sections via the prewarped bilinear transform.
// `cutoff_hz` is the -3 dB point of a single pass.
Biquad butterworth_lowpass(double cutoff_hz, double sample_rate_hz);
Biquad butterworth_highpass(double cutoff_hz, double sample_rate_hz);
Biquad notch(double center_hz, double bandwidth_hz, double sample_rate_hz);

// Cascade whose forward-backward magnitude is -3 dB at low_hz and high_hz.
// low_hz == 0 skips the high-pass section; notch_bandwidth_hz <= 0 skips the notch.
Cascade design_zero_phase_band(double low_hz, double high_hz, double notch_center_hz,
                               double notch_bandwidth_hz, double sample_rate_hz);

// |H(e^{jw})| of a single forward pass.
double magnitude_response(const Cascade& cascade, double freq_hz, double sample_rate_hz);

std::vector<double> lfilter(const Cascade& cascade, std::span<const double> x);

// Forward-backward filtering with odd-reflection padding and steady-state
// initial conditions. Linear in x.
std::vector<double> filtfilt(const Cascade& cascade, std::span<const double> x, std::size_t padlen);

}  // namespace dirinfo::filter
