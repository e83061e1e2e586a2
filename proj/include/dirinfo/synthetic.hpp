#pragma once

#include "dirinfo/estimator.hpp"

#include <Eigen/Dense>

#include <cstdint>
#include <string>
#include <utility>
#include <vector>

namespace dirinfo {

struct GeneratorSpec {
  enum class Kind { binary_flip_chain, gaussian_var, independent_null, piecewise_coupled, planted_graph };
  Kind kind{Kind::binary_flip_chain};
  double flip_prob{0.1};   // binary_flip_chain, piecewise_coupled, planted_graph
  double coupling{0.5};    // gaussian_var
  double noise_std{1.0};   // gaussian_var
  std::size_t onset{0};    // piecewise_coupled, half-open [onset, offset)
  std::size_t offset{0};
  int node_count{2};       // planted_graph
  std::vector<std::pair<int, int>> edges;  // planted_graph, (parent, child)
  std::size_t length{1000};
  std::uint64_t seed{0};

  void validate() const;
};

std::string to_string(GeneratorSpec::Kind kind);
GeneratorSpec::Kind parse_generator_kind(const std::string& name);

// Channels are x, y for the pairwise kinds and n0, n1, ... for planted_graph.
// Binary kinds carry symbols with levels = 2 and features equal to the symbol
// values; gaussian_var leaves the symbols empty.
struct GeneratedData {
  std::vector<std::string> labels;
  std::vector<Channel> channels;
};

// binary_flip_chain: x iid Bernoulli(1/2), y_m = x_{m-1} xor Bernoulli(flip).
// gaussian_var: x iid N(0,1), y_t = a x_{t-1} + noise_std * N(0,1).
// independent_null: x, y iid Bernoulli(1/2).
// piecewise_coupled: flip-chain coupling inside [onset, offset), y iid outside.
// planted_graph: each child copies its parent's previous symbol with flips;
// nodes without a parent are iid.
GeneratedData generate(const GeneratorSpec& spec);

// Per-step DI rate from x to y in nats.
double exact_di(const GeneratorSpec& spec);

// Binary entropy in nats.
double binary_entropy(double q);

// Finite-state joint chain over s = x * y_alphabet + y.
struct JointMarkovChain {
  int x_alphabet{2};
  int y_alphabet{2};
  Eigen::VectorXd initial;     // distribution of (x_1, y_1)
  Eigen::MatrixXd transition;  // row s -> next state s'

  int states() const { return x_alphabet * y_alphabet; }
  void validate() const;

  static JointMarkovChain flip_chain(double flip_prob);
  static JointMarkovChain independent(int x_alphabet, int y_alphabet);
};

inline constexpr int kMaxBruteAlphabet = 3;
inline constexpr int kMaxBruteHorizon = 6;

struct BruteForceDi {
  double total{0.0};
  std::vector<double> terms;  // terms[m-1] = I(X^m; Y_m | Y^{m-1})
};

// Exact DI from X to Y over `horizon` steps by enumerating every prefix.
BruteForceDi brute_force_di(const JointMarkovChain& chain, int horizon);

}  // namespace dirinfo
