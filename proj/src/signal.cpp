#include "dirinfo/signal.hpp"

#include "dirinfo/error.hpp"
#include "dirinfo/filter.hpp"

#include <algorithm>
#include <charconv>
#include <cmath>
#include <fstream>
#include <numeric>
#include <set>
#include <sstream>
#include <string_view>

namespace dirinfo {

namespace {

std::string_view trim(std::string_view s) {
  const auto first = s.find_first_not_of(" \t\r\n");
  if (first == std::string_view::npos) return {};
  const auto last = s.find_last_not_of(" \t\r\n");
  return s.substr(first, last - first + 1);
}

std::vector<std::string_view> split_commas(std::string_view line) {
  std::vector<std::string_view> cells;
  std::size_t start = 0;
  while (true) {
    const auto pos = line.find(',', start);
    cells.push_back(trim(line.substr(start, pos == std::string_view::npos ? pos : pos - start)));
    if (pos == std::string_view::npos) break;
    start = pos + 1;
  }
  return cells;
}

std::size_t samples_for_ms(double ms, double rate_hz) {
  return static_cast<std::size_t>(std::llround(ms * rate_hz / 1000.0));
}

}  // namespace

void Recording::validate() const {
  if (!(sample_rate_hz > 0.0)) fail(ErrorKind::BadInput, "sample rate must be positive");
  if (labels.size() != channel_count()) fail(ErrorKind::BadInput, "label count differs from channel count");
  std::set<std::string> seen(labels.begin(), labels.end());
  if (seen.size() != labels.size()) fail(ErrorKind::BadInput, "channel labels must be unique");
}

Recording load_recording(const std::filesystem::path& path, double sample_rate_hz) {
  std::ifstream in(path);
  if (!in) fail(ErrorKind::ParseError, "cannot open '" + path.string() + "'");

  std::string line;
  std::size_t line_no = 0;
  std::vector<std::string> labels;
  while (std::getline(in, line)) {
    ++line_no;
    if (trim(line).empty()) continue;
    for (auto cell : split_commas(line)) labels.emplace_back(cell);
    break;
  }
  if (labels.empty()) fail(ErrorKind::EmptyInput, "'" + path.string() + "' is empty");

  const std::size_t width = labels.size();
  std::vector<double> flat;
  std::size_t rows = 0;
  while (std::getline(in, line)) {
    ++line_no;
    if (trim(line).empty()) continue;
    const auto cells = split_commas(line);
    if (cells.size() != width) {
      std::ostringstream msg;
      msg << path.string() << ":" << line_no << ": expected " << width << " cells, found " << cells.size();
      fail(ErrorKind::ParseError, msg.str());
    }
    for (auto cell : cells) {
      double v = 0.0;
      const auto [ptr, ec] = std::from_chars(cell.data(), cell.data() + cell.size(), v);
      if (ec != std::errc() || ptr != cell.data() + cell.size() || cell.empty()) {
        std::ostringstream msg;
        msg << path.string() << ":" << line_no << ": non-numeric cell '" << cell << "'";
        fail(ErrorKind::ParseError, msg.str());
      }
      flat.push_back(v);
    }
    ++rows;
  }
  if (rows == 0) fail(ErrorKind::EmptyInput, "'" + path.string() + "' has no sample rows");

  Recording rec;
  rec.sample_rate_hz = sample_rate_hz;
  rec.labels = std::move(labels);
  rec.samples.resize(static_cast<Eigen::Index>(rows), static_cast<Eigen::Index>(width));
  for (std::size_t r = 0; r < rows; ++r) {
    for (std::size_t c = 0; c < width; ++c) {
      rec.samples(static_cast<Eigen::Index>(r), static_cast<Eigen::Index>(c)) = flat[r * width + c];
    }
  }
  rec.validate();
  return rec;
}

Recording bandpass_notch(const Recording& rec, double low_hz, double high_hz,
                         std::optional<std::pair<double, double>> notch) {
  double center = 0.0;
  double width = 0.0;
  if (notch) {
    if (!(notch->second > notch->first)) fail(ErrorKind::BadBand, "notch band must be increasing");
    center = 0.5 * (notch->first + notch->second);
    width = notch->second - notch->first;
  }
  const auto cascade = filter::design_zero_phase_band(low_hz, high_hz, center, width, rec.sample_rate_hz);
  const std::size_t padlen =
      std::max<std::size_t>(3 * (2 * cascade.size() + 1), static_cast<std::size_t>(std::ceil(rec.sample_rate_hz)));

  Recording out = rec;
  for (std::size_t c = 0; c < rec.channel_count(); ++c) {
    const auto filtered = filter::filtfilt(cascade, rec.channel(c), padlen);
    std::copy(filtered.begin(), filtered.end(), out.samples.col(static_cast<Eigen::Index>(c)).data());
  }
  return out;
}

std::size_t segment_count(std::size_t length, std::size_t segment_samples, std::size_t step_samples) {
  if (length < segment_samples) return 0;
  return (length - segment_samples) / step_samples + 1;
}

std::vector<FeatureSequence> segment_features(const Recording& rec, double segment_len_ms,
                                              double overlap_ms, SegmentFeature feature) {
  if (!(overlap_ms >= 0.0) || !(overlap_ms < segment_len_ms)) {
    fail(ErrorKind::Validation, "overlap must satisfy 0 <= overlap < segment length");
  }
  const std::size_t len = samples_for_ms(segment_len_ms, rec.sample_rate_hz);
  const std::size_t overlap = samples_for_ms(overlap_ms, rec.sample_rate_hz);
  if (len < 1) fail(ErrorKind::Validation, "segment shorter than one sample");
  if (overlap >= len) fail(ErrorKind::Validation, "overlap rounds to the full segment");
  if (rec.length() < len) {
    fail(ErrorKind::TooShort, "recording of " + std::to_string(rec.length()) +
                                  " samples is shorter than one segment of " + std::to_string(len));
  }
  const std::size_t step = len - overlap;
  const std::size_t count = segment_count(rec.length(), len, step);

  std::vector<FeatureSequence> out;
  out.reserve(rec.channel_count());
  for (std::size_t c = 0; c < rec.channel_count(); ++c) {
    const auto x = rec.channel(c);
    FeatureSequence seq;
    seq.segment_len_ms = segment_len_ms;
    seq.overlap_ms = overlap_ms;
    seq.source_channel = rec.labels[c];
    seq.values.reserve(count);
    for (std::size_t s = 0; s < count; ++s) {
      const auto seg = x.subspan(s * step, len);
      double acc = 0.0;
      if (feature == SegmentFeature::mean) {
        for (double v : seg) acc += v;
      } else {
        for (double v : seg) acc += v * v;
      }
      seq.values.push_back(acc / static_cast<double>(len));
    }
    out.push_back(std::move(seq));
  }
  return out;
}

namespace {

// Sorted data with prefix sums so every Lloyd step costs O(p log n).
struct SortedSample {
  std::vector<double> x;
  std::vector<double> sum;
  std::vector<double> sumsq;

  explicit SortedSample(std::span<const double> values) : x(values.begin(), values.end()) {
    std::sort(x.begin(), x.end());
    sum.assign(x.size() + 1, 0.0);
    sumsq.assign(x.size() + 1, 0.0);
    for (std::size_t i = 0; i < x.size(); ++i) {
      sum[i + 1] = sum[i] + x[i];
      sumsq[i + 1] = sumsq[i] + x[i] * x[i];
    }
  }

  // Index of the first sample >= b (cells are [b_{k-1}, b_k)).
  std::size_t lower(double b) const {
    return static_cast<std::size_t>(std::lower_bound(x.begin(), x.end(), b) - x.begin());
  }
};

std::vector<double> midpoints(const std::vector<double>& reps) {
  std::vector<double> b(reps.size() - 1);
  for (std::size_t k = 0; k + 1 < reps.size(); ++k) b[k] = 0.5 * (reps[k] + reps[k + 1]);
  return b;
}

std::vector<std::size_t> cell_edges(const SortedSample& s, const std::vector<double>& boundaries) {
  std::vector<std::size_t> edges;
  edges.reserve(boundaries.size() + 2);
  edges.push_back(0);
  for (double b : boundaries) edges.push_back(s.lower(b));
  edges.push_back(s.x.size());
  return edges;
}

double partition_distortion(const SortedSample& s, const std::vector<std::size_t>& edges,
                            const std::vector<double>& reps) {
  double d = 0.0;
  for (std::size_t k = 0; k < reps.size(); ++k) {
    const auto lo = edges[k], hi = edges[k + 1];
    const double cnt = static_cast<double>(hi - lo);
    const double sm = s.sum[hi] - s.sum[lo];
    const double sq = s.sumsq[hi] - s.sumsq[lo];
    d += sq - 2.0 * reps[k] * sm + cnt * reps[k] * reps[k];
  }
  return std::max(d, 0.0) / static_cast<double>(s.x.size());
}

std::vector<double> initial_representatives(const SortedSample& s, int levels) {
  const auto p = static_cast<std::size_t>(levels);
  std::vector<double> reps(p);
  for (std::size_t k = 0; k < p; ++k) {
    const auto idx = static_cast<std::size_t>((static_cast<double>(k) + 0.5) / static_cast<double>(p) *
                                              static_cast<double>(s.x.size()));
    reps[k] = s.x[std::min(idx, s.x.size() - 1)];
  }
  if (std::adjacent_find(reps.begin(), reps.end(), std::greater_equal<>()) == reps.end()) return reps;

  // Heavy ties: spread the initial levels over the distinct values instead.
  std::vector<double> unique = s.x;
  unique.erase(std::unique(unique.begin(), unique.end()), unique.end());
  for (std::size_t k = 0; k < p; ++k) {
    const auto idx = static_cast<std::size_t>((static_cast<double>(k) + 0.5) / static_cast<double>(p) *
                                              static_cast<double>(unique.size()));
    reps[k] = unique[std::min(idx, unique.size() - 1)];
  }
  return reps;
}

}  // namespace

Codebook train_lloyd_max(std::span<const double> values, int levels, std::vector<double>* distortion_trace) {
  if (levels < 2) fail(ErrorKind::DegenerateInput, "quantizer needs at least 2 levels");
  for (double v : values) {
    if (!std::isfinite(v)) fail(ErrorKind::BadInput, "non-finite training value");
  }
  const SortedSample s(values);
  std::size_t distinct = s.x.empty() ? 0 : 1;
  for (std::size_t i = 1; i < s.x.size(); ++i) distinct += s.x[i] != s.x[i - 1] ? 1 : 0;
  if (distinct < static_cast<std::size_t>(levels)) {
    fail(ErrorKind::DegenerateInput, "need at least " + std::to_string(levels) + " distinct values, got " +
                                         std::to_string(distinct));
  }

  constexpr int kMaxIterations = 500;
  constexpr double kRelTol = 1e-8;

  std::vector<double> reps = initial_representatives(s, levels);
  std::vector<double> bounds = midpoints(reps);
  auto edges = cell_edges(s, bounds);
  double distortion = partition_distortion(s, edges, reps);
  if (distortion_trace) distortion_trace->assign(1, distortion);

  for (int it = 0; it < kMaxIterations; ++it) {
    for (std::size_t k = 0; k < reps.size(); ++k) {
      const auto lo = edges[k], hi = edges[k + 1];
      if (hi > lo) {
        reps[k] = (s.sum[hi] - s.sum[lo]) / static_cast<double>(hi - lo);
      } else {
        // Empty cell: park the level mid-cell, which keeps the levels ordered.
        const double left = k == 0 ? bounds.front() - 1.0 : bounds[k - 1];
        const double right = k + 1 == reps.size() ? bounds.back() + 1.0 : bounds[k];
        reps[k] = 0.5 * (left + right);
      }
    }
    bounds = midpoints(reps);
    edges = cell_edges(s, bounds);
    const double next = partition_distortion(s, edges, reps);
    if (distortion_trace) distortion_trace->push_back(next);
    const double change = distortion > 0.0 ? (distortion - next) / distortion : 0.0;
    distortion = next;
    if (std::abs(change) < kRelTol) break;
  }
  return Codebook{std::move(bounds), std::move(reps)};
}

int quantize_value(double value, const Codebook& cb) {
  return static_cast<int>(std::upper_bound(cb.boundaries.begin(), cb.boundaries.end(), value) -
                          cb.boundaries.begin());
}

QuantizedSequence quantize(const FeatureSequence& seq, const Codebook& cb, std::string codebook_id) {
  QuantizedSequence q;
  q.levels = cb.levels();
  q.codebook_id = codebook_id.empty() ? seq.source_channel : std::move(codebook_id);
  q.symbols.reserve(seq.size());
  for (double v : seq.values) q.symbols.push_back(quantize_value(v, cb));
  return q;
}

double quantizer_distortion(std::span<const double> values, const Codebook& cb) {
  if (values.empty()) return 0.0;
  double d = 0.0;
  for (double v : values) {
    const double e = v - cb.representatives[static_cast<std::size_t>(quantize_value(v, cb))];
    d += e * e;
  }
  return d / static_cast<double>(values.size());
}

}  // namespace dirinfo
