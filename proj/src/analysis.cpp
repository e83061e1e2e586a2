#include "dirinfo/analysis.hpp"

#include "dirinfo/error.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <map>
#include <numeric>
#include <random>

namespace dirinfo {

DistanceMatrix heat_kernel_distance(const Eigen::MatrixXd& di, std::vector<std::string> labels, double sigma) {
  if (!(sigma > 0.0)) fail(ErrorKind::Validation, "heat kernel sigma must be positive");
  if (di.rows() != di.cols()) fail(ErrorKind::ShapeError, "DI matrix must be square");
  const Eigen::Index k = di.rows();
  Eigen::MatrixXd s = (0.5 * (di + di.transpose())).cwiseMax(0.0);
  s.diagonal().setZero();
  const double top = k > 0 ? s.maxCoeff() : 0.0;
  if (top > 0.0) s /= top;

  DistanceMatrix out;
  out.labels = std::move(labels);
  out.entries.resize(k, k);
  for (Eigen::Index i = 0; i < k; ++i) {
    out.entries(i, i) = 0.0;
    for (Eigen::Index j = i + 1; j < k; ++j) {
      const double d = std::exp(-s(i, j) / sigma);
      out.entries(i, j) = d;
      out.entries(j, i) = d;
    }
  }
  return out;
}

DistanceMatrix heat_kernel_distance(const DiMatrix& di, double sigma) {
  return heat_kernel_distance(di.values(), di.labels, sigma);
}

namespace {

struct LloydRun {
  std::vector<int> assignment;
  std::vector<double> trace;
};

LloydRun lloyd(const Eigen::MatrixXd& pts, Eigen::MatrixXd centers) {
  const Eigen::Index n = pts.rows();
  const Eigen::Index k = centers.rows();
  LloydRun run;
  run.assignment.assign(static_cast<std::size_t>(n), -1);
  for (int iter = 0; iter < 300; ++iter) {
    bool changed = false;
    double objective = 0.0;
    for (Eigen::Index i = 0; i < n; ++i) {
      int best = 0;
      double best_d = std::numeric_limits<double>::infinity();
      for (Eigen::Index c = 0; c < k; ++c) {
        const double d = (pts.row(i) - centers.row(c)).squaredNorm();
        if (d < best_d) {
          best_d = d;
          best = static_cast<int>(c);
        }
      }
      objective += best_d;
      if (run.assignment[static_cast<std::size_t>(i)] != best) changed = true;
      run.assignment[static_cast<std::size_t>(i)] = best;
    }
    run.trace.push_back(objective);
    if (!changed) break;
    // Update step; an emptied cluster keeps its previous center.
    Eigen::MatrixXd sums = Eigen::MatrixXd::Zero(k, pts.cols());
    std::vector<int> counts(static_cast<std::size_t>(k), 0);
    for (Eigen::Index i = 0; i < n; ++i) {
      const int c = run.assignment[static_cast<std::size_t>(i)];
      sums.row(c) += pts.row(i);
      ++counts[static_cast<std::size_t>(c)];
    }
    for (Eigen::Index c = 0; c < k; ++c) {
      if (counts[static_cast<std::size_t>(c)] > 0) centers.row(c) = sums.row(c) / counts[static_cast<std::size_t>(c)];
    }
  }
  // Objective after the final center update, so the trace ends at the
  // reported value.
  double final_obj = 0.0;
  for (Eigen::Index i = 0; i < n; ++i) {
    double best_d = std::numeric_limits<double>::infinity();
    for (Eigen::Index c = 0; c < k; ++c) best_d = std::min(best_d, (pts.row(i) - centers.row(c)).squaredNorm());
    final_obj += best_d;
  }
  if (final_obj < run.trace.back()) run.trace.push_back(final_obj);
  return run;
}

Eigen::MatrixXd plus_plus_seeds(const Eigen::MatrixXd& pts, Eigen::Index k, std::mt19937_64& rng) {
  const Eigen::Index n = pts.rows();
  Eigen::MatrixXd centers(k, pts.cols());
  std::uniform_int_distribution<Eigen::Index> first(0, n - 1);
  centers.row(0) = pts.row(first(rng));
  std::vector<double> d2(static_cast<std::size_t>(n), std::numeric_limits<double>::infinity());
  for (Eigen::Index c = 1; c < k; ++c) {
    double total = 0.0;
    for (Eigen::Index i = 0; i < n; ++i) {
      auto& d = d2[static_cast<std::size_t>(i)];
      d = std::min(d, (pts.row(i) - centers.row(c - 1)).squaredNorm());
      total += d;
    }
    Eigen::Index pick = 0;
    if (total > 0.0) {
      double u = std::uniform_real_distribution<double>(0.0, total)(rng);
      for (pick = 0; pick < n - 1; ++pick) {
        u -= d2[static_cast<std::size_t>(pick)];
        if (u < 0.0) break;
      }
    } else {
      pick = first(rng);
    }
    centers.row(c) = pts.row(pick);
  }
  return centers;
}

}  // namespace

Clustering kmeans(const Eigen::MatrixXd& points, int k, std::uint64_t seed) {
  const Eigen::Index n = points.rows();
  if (k < 1 || k > n) fail(ErrorKind::BadK, "k must lie in [1, " + std::to_string(n) + "], got " + std::to_string(k));
  Clustering best;
  best.seed = seed;
  best.objective = std::numeric_limits<double>::infinity();
  for (int r = 0; r < kKmeansRestarts; ++r) {
    std::mt19937_64 rng(derive_seed(seed, static_cast<std::uint64_t>(r)));
    LloydRun run = lloyd(points, plus_plus_seeds(points, k, rng));
    if (run.trace.back() < best.objective) {
      best.objective = run.trace.back();
      best.assignment = std::move(run.assignment);
      best.objective_trace = std::move(run.trace);
    }
  }
  return best;
}

Clustering kmeans(const DistanceMatrix& dist, int k, std::uint64_t seed) { return kmeans(dist.entries, k, seed); }

int elbow_k(const DistanceMatrix& dist, int k_max, std::uint64_t seed) {
  const int n = static_cast<int>(dist.entries.rows());
  k_max = std::min(k_max, n);
  if (k_max < 2) fail(ErrorKind::BadK, "elbow needs at least two candidate cluster counts");
  double prev = kmeans(dist, 1, seed).objective;
  int best_k = 2;
  double best_drop = -1.0;
  for (int k = 2; k <= k_max; ++k) {
    const double obj = kmeans(dist, k, seed).objective;
    const double drop = prev > 0.0 ? (prev - obj) / prev : 0.0;
    if (drop > best_drop + 1e-12) {
      best_drop = drop;
      best_k = k;
    }
    prev = obj;
  }
  return best_k;
}

double adjusted_rand_index(std::span<const int> a, std::span<const int> b) {
  if (a.size() != b.size()) fail(ErrorKind::ShapeError, "partitions differ in length");
  std::map<std::pair<int, int>, long long> joint;
  std::map<int, long long> ra, rb;
  for (std::size_t i = 0; i < a.size(); ++i) {
    ++joint[{a[i], b[i]}];
    ++ra[a[i]];
    ++rb[b[i]];
  }
  auto c2 = [](long long v) { return static_cast<double>(v) * static_cast<double>(v - 1) / 2.0; };
  double index = 0.0, sa = 0.0, sb = 0.0;
  for (const auto& [key, v] : joint) index += c2(v);
  for (const auto& [key, v] : ra) sa += c2(v);
  for (const auto& [key, v] : rb) sb += c2(v);
  const double total = c2(static_cast<long long>(a.size()));
  const double expected = total > 0.0 ? sa * sb / total : 0.0;
  const double max_index = 0.5 * (sa + sb);
  if (max_index == expected) return 1.0;
  return (index - expected) / (max_index - expected);
}

Eigen::MatrixXd mds(const Eigen::MatrixXd& dist, int dims) {
  const Eigen::Index n = dist.rows();
  if (dist.cols() != n) fail(ErrorKind::ShapeError, "distance matrix must be square");
  if (dims < 1 || dims >= n) fail(ErrorKind::BadDims, "dims must lie in [1, K), got " + std::to_string(dims));
  const Eigen::MatrixXd centering =
      Eigen::MatrixXd::Identity(n, n) - Eigen::MatrixXd::Constant(n, n, 1.0 / static_cast<double>(n));
  const Eigen::MatrixXd sq = dist.array().square().matrix();
  Eigen::MatrixXd gram = -0.5 * centering * sq * centering;
  gram = 0.5 * (gram + gram.transpose());
  const Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> eig(gram);
  if (eig.info() != Eigen::Success) fail(ErrorKind::NumericalError, "eigendecomposition failed");
  // Eigen sorts ascending.
  Eigen::MatrixXd coords(n, dims);
  for (int d = 0; d < dims; ++d) {
    const Eigen::Index idx = n - 1 - d;
    const double lam = std::max(eig.eigenvalues()(idx), 0.0);
    Eigen::VectorXd v = eig.eigenvectors().col(idx);
    // Sign convention: largest-magnitude component positive, for stable output.
    Eigen::Index arg = 0;
    v.cwiseAbs().maxCoeff(&arg);
    if (v(arg) < 0.0) v = -v;
    coords.col(d) = v * std::sqrt(lam);
  }
  return coords;
}

Eigen::MatrixXd mds(const DistanceMatrix& dist, int dims) { return mds(dist.entries, dims); }

double stress(const Eigen::MatrixXd& dist, const Eigen::MatrixXd& coords) {
  double num = 0.0, den = 0.0;
  for (Eigen::Index i = 0; i < dist.rows(); ++i) {
    for (Eigen::Index j = i + 1; j < dist.rows(); ++j) {
      const double e = (coords.row(i) - coords.row(j)).norm();
      num += (dist(i, j) - e) * (dist(i, j) - e);
      den += dist(i, j) * dist(i, j);
    }
  }
  return den > 0.0 ? std::sqrt(num / den) : 0.0;
}

void LabeledCorpus::add(const Eigen::MatrixXd& di, int label) {
  items.push_back(di);
  class_labels.push_back(label);
  class_count = std::max(class_count, label + 1);
}

void LabeledCorpus::validate() const {
  if (items.empty()) fail(ErrorKind::EmptyCorpus, "corpus has no items");
  if (items.size() != class_labels.size()) fail(ErrorKind::ShapeError, "items and labels differ in count");
  const Eigen::Index k = items.front().rows();
  for (const auto& m : items) {
    if (m.rows() != k || m.cols() != k) fail(ErrorKind::ShapeError, "corpus matrices differ in size");
  }
  for (int l : class_labels) {
    if (l < 0 || l >= class_count) fail(ErrorKind::BadLabels, "class label out of range");
  }
}

double matrix_distance(const Eigen::MatrixXd& a, const Eigen::MatrixXd& b) {
  const Eigen::MatrixXd d = a - b;
  return (0.5 * (d + d.transpose())).norm();
}

namespace {

int vote(const LabeledCorpus& corpus, std::vector<std::pair<double, std::size_t>> dists, int k) {
  std::stable_sort(dists.begin(), dists.end(), [](const auto& l, const auto& r) { return l.first < r.first; });
  std::vector<int> votes(static_cast<std::size_t>(corpus.class_count), 0);
  std::vector<double> dsum(static_cast<std::size_t>(corpus.class_count), 0.0);
  for (int i = 0; i < k; ++i) {
    const int c = corpus.class_labels[dists[static_cast<std::size_t>(i)].second];
    ++votes[static_cast<std::size_t>(c)];
    dsum[static_cast<std::size_t>(c)] += dists[static_cast<std::size_t>(i)].first;
  }
  int best = -1;
  for (int c = 0; c < corpus.class_count; ++c) {
    const auto uc = static_cast<std::size_t>(c);
    if (votes[uc] == 0) continue;
    if (best < 0) {
      best = c;
      continue;
    }
    const auto ub = static_cast<std::size_t>(best);
    const double mean_c = dsum[uc] / votes[uc];
    const double mean_b = dsum[ub] / votes[ub];
    if (votes[uc] > votes[ub] || (votes[uc] == votes[ub] && mean_c < mean_b)) best = c;
  }
  return best;
}

void check_k(int k, std::size_t available) {
  if (k < 1 || static_cast<std::size_t>(k) > available) {
    fail(ErrorKind::Validation, "k must lie in [1, " + std::to_string(available) + "], got " + std::to_string(k));
  }
}

}  // namespace

int knn_classify(const LabeledCorpus& corpus, const Eigen::MatrixXd& query, int k) {
  corpus.validate();
  check_k(k, corpus.items.size());
  if (query.rows() != corpus.items.front().rows() || query.cols() != corpus.items.front().cols()) {
    fail(ErrorKind::ShapeError, "query size differs from corpus matrices");
  }
  std::vector<std::pair<double, std::size_t>> dists;
  for (std::size_t i = 0; i < corpus.items.size(); ++i) dists.emplace_back(matrix_distance(corpus.items[i], query), i);
  return vote(corpus, std::move(dists), k);
}

LooReport leave_one_out(const LabeledCorpus& corpus, int k) {
  corpus.validate();
  if (corpus.items.size() < 2) fail(ErrorKind::EmptyCorpus, "leave-one-out needs at least two items");
  check_k(k, corpus.items.size() - 1);
  LooReport rep;
  rep.confusion = Eigen::MatrixXi::Zero(corpus.class_count, corpus.class_count);
  int correct = 0;
  for (std::size_t q = 0; q < corpus.items.size(); ++q) {
    std::vector<std::pair<double, std::size_t>> dists;
    for (std::size_t i = 0; i < corpus.items.size(); ++i) {
      if (i != q) dists.emplace_back(matrix_distance(corpus.items[i], corpus.items[q]), i);
    }
    const int pred = vote(corpus, std::move(dists), k);
    rep.predicted.push_back(pred);
    ++rep.confusion(corpus.class_labels[q], pred);
    if (pred == corpus.class_labels[q]) ++correct;
  }
  rep.accuracy = static_cast<double>(correct) / static_cast<double>(corpus.items.size());
  return rep;
}

namespace {

void check_binary(std::span<const double> scores, std::span<const int> labels) {
  if (scores.size() != labels.size()) fail(ErrorKind::ShapeError, "scores and labels differ in length");
  bool pos = false, neg = false;
  for (int l : labels) {
    if (l == 1) pos = true;
    else if (l == 0) neg = true;
    else fail(ErrorKind::BadLabels, "labels must be 0 or 1");
  }
  if (!pos || !neg) fail(ErrorKind::BadLabels, "both classes must be present");
}

}  // namespace

double roc_auc(std::span<const double> scores, std::span<const int> labels) {
  check_binary(scores, labels);
  const std::size_t n = scores.size();
  std::vector<std::size_t> idx(n);
  std::iota(idx.begin(), idx.end(), 0);
  std::sort(idx.begin(), idx.end(), [&](std::size_t a, std::size_t b) { return scores[a] < scores[b]; });
  double rank_sum = 0.0;
  std::size_t n_pos = 0;
  for (std::size_t i = 0; i < n;) {
    std::size_t j = i;
    while (j < n && scores[idx[j]] == scores[idx[i]]) ++j;
    const double avg_rank = 0.5 * static_cast<double>(i + 1 + j);  // ranks i+1..j
    for (std::size_t t = i; t < j; ++t) {
      if (labels[idx[t]] == 1) {
        rank_sum += avg_rank;
        ++n_pos;
      }
    }
    i = j;
  }
  const double np = static_cast<double>(n_pos);
  const double nn = static_cast<double>(n - n_pos);
  return (rank_sum - np * (np + 1.0) / 2.0) / (np * nn);
}

std::vector<std::pair<double, double>> roc_curve(std::span<const double> scores, std::span<const int> labels) {
  check_binary(scores, labels);
  const std::size_t n = scores.size();
  std::vector<std::size_t> idx(n);
  std::iota(idx.begin(), idx.end(), 0);
  std::sort(idx.begin(), idx.end(), [&](std::size_t a, std::size_t b) { return scores[a] > scores[b]; });
  const double np = static_cast<double>(std::count(labels.begin(), labels.end(), 1));
  const double nn = static_cast<double>(n) - np;
  std::vector<std::pair<double, double>> pts{{0.0, 0.0}};
  double tp = 0.0, fp = 0.0;
  for (std::size_t i = 0; i < n;) {
    std::size_t j = i;
    while (j < n && scores[idx[j]] == scores[idx[i]]) {
      if (labels[idx[j]] == 1) tp += 1.0;
      else fp += 1.0;
      ++j;
    }
    pts.emplace_back(fp / nn, tp / np);
    i = j;
  }
  return pts;
}

}  // namespace dirinfo
