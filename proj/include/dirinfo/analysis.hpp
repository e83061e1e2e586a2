#pragma once

#include "dirinfo/estimator.hpp"

#include <Eigen/Dense>

#include <cstdint>
#include <span>
#include <string>
#include <utility>
#include <vector>

namespace dirinfo {

struct DistanceMatrix {
  std::vector<std::string> labels;
  Eigen::MatrixXd entries;  // symmetric, zero diagonal
};

inline constexpr double kDefaultHeatSigma = 0.5;

// S = (D + D')/2 rescaled by its largest off-diagonal value (negatives
// clamped to 0), then d = exp(-S / sigma) off the diagonal.
DistanceMatrix heat_kernel_distance(const Eigen::MatrixXd& di, std::vector<std::string> labels, double sigma);
DistanceMatrix heat_kernel_distance(const DiMatrix& di, double sigma);

struct Clustering {
  std::vector<int> assignment;
  double objective{0.0};              // within-cluster sum of squared distances
  std::vector<double> objective_trace;  // Lloyd iterations of the winning restart
  std::uint64_t seed{0};
};

inline constexpr int kKmeansRestarts = 10;

// Rows of the distance matrix are used as coordinates. k-means++ seeding,
// kKmeansRestarts restarts, best objective kept.
Clustering kmeans(const DistanceMatrix& dist, int k, std::uint64_t seed);
Clustering kmeans(const Eigen::MatrixXd& points, int k, std::uint64_t seed);

// Picks k in [2, k_max] at the largest relative drop of the objective from k-1.
int elbow_k(const DistanceMatrix& dist, int k_max, std::uint64_t seed);

double adjusted_rand_index(std::span<const int> a, std::span<const int> b);

// Classical MDS; columns in decreasing eigenvalue order. Negative eigenvalues
// contribute zero coordinates.
Eigen::MatrixXd mds(const DistanceMatrix& dist, int dims);
Eigen::MatrixXd mds(const Eigen::MatrixXd& dist, int dims);

// Kruskal stress-1 of an embedding against the input distances.
double stress(const Eigen::MatrixXd& dist, const Eigen::MatrixXd& coords);

struct LabeledCorpus {
  std::vector<Eigen::MatrixXd> items;  // DI matrices, all K x K
  std::vector<int> class_labels;
  std::vector<std::string> channel_labels;
  int class_count{0};

  void add(const Eigen::MatrixXd& di, int label);
  void validate() const;
};

// Frobenius distance between symmetrized matrices.
double matrix_distance(const Eigen::MatrixXd& a, const Eigen::MatrixXd& b);

// Majority vote among the k nearest; ties go to the class with the smaller
// mean neighbor distance, then the lower class index.
int knn_classify(const LabeledCorpus& corpus, const Eigen::MatrixXd& query, int k);

struct LooReport {
  double accuracy{0.0};
  std::vector<int> predicted;
  Eigen::MatrixXi confusion;  // (true, predicted)
};

LooReport leave_one_out(const LabeledCorpus& corpus, int k);

// Mann-Whitney AUC with average ranks for ties.
double roc_auc(std::span<const double> scores, std::span<const int> labels);

// (fpr, tpr) points from (0,0) to (1,1), tied scores grouped.
std::vector<std::pair<double, double>> roc_curve(std::span<const double> scores, std::span<const int> labels);

}  // namespace dirinfo
