#pragma once

#include <Eigen/Dense>

#include <cstddef>
#include <filesystem>
#include <optional>
#include <span>
#include <string>
#include <utility>
#include <vector>

namespace dirinfo {

// Multichannel recording. samples(t, c) is sample t of channel c; the
// column-major storage makes each channel contiguous.
struct Recording {
  Eigen::MatrixXd samples;
  double sample_rate_hz{0.0};
  std::vector<std::string> labels;

  std::size_t channel_count() const { return static_cast<std::size_t>(samples.cols()); }
  std::size_t length() const { return static_cast<std::size_t>(samples.rows()); }
  std::span<const double> channel(std::size_t c) const {
    return {samples.col(static_cast<Eigen::Index>(c)).data(), length()};
  }

  // Throws BadInput when rate, shape, or label uniqueness is violated.
  void validate() const;
};

// One scalar feature per (possibly overlapping) segment of a channel.
struct FeatureSequence {
  std::vector<double> values;
  double segment_len_ms{0.0};
  double overlap_ms{0.0};
  std::string source_channel;

  std::size_t size() const { return values.size(); }
};

// Scalar quantizer: cell k is [boundaries[k-1], boundaries[k]) with the
// outer cells open to -inf/+inf.
struct Codebook {
  std::vector<double> boundaries;
  std::vector<double> representatives;

  int levels() const { return static_cast<int>(representatives.size()); }
};

struct QuantizedSequence {
  std::vector<int> symbols;
  int levels{0};
  std::string codebook_id;

  std::size_t size() const { return symbols.size(); }
};

enum class SegmentFeature { mean, energy };

Recording load_recording(const std::filesystem::path& path, double sample_rate_hz);

// Zero-phase band-pass (optionally with a band-stop notch) applied to every
// channel. Band edges land at -3 dB of the forward-backward response.
Recording bandpass_notch(const Recording& rec, double low_hz, double high_hz,
                         std::optional<std::pair<double, double>> notch = std::nullopt);

// Number of segments for a channel of `length` samples.
std::size_t segment_count(std::size_t length, std::size_t segment_samples, std::size_t step_samples);

std::vector<FeatureSequence> segment_features(const Recording& rec, double segment_len_ms,
                                              double overlap_ms, SegmentFeature feature);

// Lloyd-Max design. `distortion_trace`, when given, receives the mean squared
// error of every nearest-neighbour partition visited.
Codebook train_lloyd_max(std::span<const double> values, int levels,
                         std::vector<double>* distortion_trace = nullptr);

int quantize_value(double value, const Codebook& cb);
QuantizedSequence quantize(const FeatureSequence& seq, const Codebook& cb, std::string codebook_id = {});

// Mean squared reconstruction error of `values` under `cb`.
double quantizer_distortion(std::span<const double> values, const Codebook& cb);

}  // namespace dirinfo
