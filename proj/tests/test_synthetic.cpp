#include "dirinfo/synthetic.hpp"
#include "test_util.hpp"

#include <map>
#include <numbers>

using namespace dirinfo;

namespace {

GeneratorSpec spec_of(GeneratorSpec::Kind kind, std::size_t n, std::uint64_t seed) {
  GeneratorSpec s;
  s.kind = kind;
  s.length = n;
  s.seed = seed;
  return s;
}

// Direct sum of p * log p(y_m | x^m, y^{m-1}) / p(y_m | y^{m-1}) for the last
// step, built from conditional tables rather than entropies.
double last_step_term(const JointMarkovChain& c, int m) {
  const int s = c.states();
  std::map<std::vector<int>, double> joint;  // state sequence -> prob
  for (int a = 0; a < s; ++a) joint[{a}] = c.initial(a);
  for (int t = 1; t < m; ++t) {
    std::map<std::vector<int>, double> next;
    for (const auto& [seq, p] : joint)
      for (int b = 0; b < s; ++b) {
        auto e = seq;
        e.push_back(b);
        next[e] += p * c.transition(seq.back(), b);
      }
    joint = std::move(next);
  }
  const int ay = c.y_alphabet;
  std::map<std::vector<int>, double> xy_prev, y_all, y_prev;
  for (const auto& [seq, p] : joint) {
    std::vector<int> key_xy, key_y, key_yp;
    for (int t = 0; t < m; ++t) {
      key_xy.push_back(seq[static_cast<std::size_t>(t)] / ay);
      key_y.push_back(seq[static_cast<std::size_t>(t)] % ay);
    }
    key_yp.assign(key_y.begin(), key_y.end() - 1);
    for (int v : key_yp) key_xy.push_back(100 + v);
    xy_prev[key_xy] += p;
    y_all[key_y] += p;
    y_prev[key_yp] += p;
  }
  double total = 0.0;
  for (const auto& [seq, p] : joint) {
    if (p <= 0.0) continue;
    std::vector<int> key_xy, key_y;
    for (int t = 0; t < m; ++t) {
      key_xy.push_back(seq[static_cast<std::size_t>(t)] / ay);
      key_y.push_back(seq[static_cast<std::size_t>(t)] % ay);
    }
    std::vector<int> key_yp(key_y.begin(), key_y.end() - 1);
    for (int v : key_yp) key_xy.push_back(100 + v);
    const double cond_full = p / xy_prev[key_xy];
    const double cond_red = y_all[key_y] / y_prev[key_yp];
    total += p * std::log(cond_full / cond_red);
  }
  return total;
}

JointMarkovChain random_chain(int ax, int ay, std::uint64_t seed) {
  std::mt19937_64 rng(seed);
  std::uniform_real_distribution<double> u(0.05, 1.0);
  JointMarkovChain c;
  c.x_alphabet = ax;
  c.y_alphabet = ay;
  const int s = c.states();
  c.initial.resize(s);
  for (int i = 0; i < s; ++i) c.initial(i) = u(rng);
  c.initial /= c.initial.sum();
  c.transition.resize(s, s);
  for (int i = 0; i < s; ++i) {
    for (int j = 0; j < s; ++j) c.transition(i, j) = u(rng);
    c.transition.row(i) /= c.transition.row(i).sum();
  }
  return c;
}

}  // namespace

TEST(Generate, Deterministic) {
  const auto s = spec_of(GeneratorSpec::Kind::independent_null, 100, 42);
  const auto a = generate(s);
  const auto b = generate(s);
  ASSERT_EQ(a.channels.size(), 2u);
  EXPECT_EQ(a.labels, (std::vector<std::string>{"x", "y"}));
  for (std::size_t c = 0; c < 2; ++c) {
    EXPECT_EQ(a.channels[c].symbols.symbols, b.channels[c].symbols.symbols);
    EXPECT_EQ(a.channels[c].features.values, b.channels[c].features.values);
    EXPECT_EQ(a.channels[c].symbols.size(), 100u);
  }
  auto other = s;
  other.seed = 43;
  EXPECT_NE(generate(other).channels[0].symbols.symbols, a.channels[0].symbols.symbols);
}

TEST(Generate, ZeroFlipCopies) {
  auto s = spec_of(GeneratorSpec::Kind::binary_flip_chain, 500, 1);
  s.flip_prob = 0.0;
  const auto d = generate(s);
  const auto& x = d.channels[0].symbols.symbols;
  const auto& y = d.channels[1].symbols.symbols;
  for (std::size_t m = 1; m < x.size(); ++m) EXPECT_EQ(y[m], x[m - 1]);
}

TEST(Generate, FlipRate) {
  auto s = spec_of(GeneratorSpec::Kind::binary_flip_chain, 100000, 2);
  s.flip_prob = 0.1;
  const auto d = generate(s);
  const auto& x = d.channels[0].symbols.symbols;
  const auto& y = d.channels[1].symbols.symbols;
  std::size_t flips = 0;
  for (std::size_t m = 1; m < x.size(); ++m) flips += static_cast<std::size_t>(y[m] != x[m - 1]);
  EXPECT_NEAR(static_cast<double>(flips) / static_cast<double>(x.size() - 1), 0.1, 0.005);
  std::size_t ones = 0;
  for (int v : x) ones += static_cast<std::size_t>(v);
  EXPECT_NEAR(static_cast<double>(ones) / 1e5, 0.5, 0.01);
}

TEST(Generate, GaussianVarRegression) {
  auto s = spec_of(GeneratorSpec::Kind::gaussian_var, 50000, 3);
  s.coupling = 0.7;
  s.noise_std = 0.5;
  const auto d = generate(s);
  EXPECT_TRUE(d.channels[0].symbols.symbols.empty());
  const auto& x = d.channels[0].features.values;
  const auto& y = d.channels[1].features.values;
  double sxy = 0.0, sxx = 0.0;
  for (std::size_t t = 1; t < x.size(); ++t) sxy += x[t - 1] * y[t], sxx += x[t - 1] * x[t - 1];
  const double slope = sxy / sxx;
  EXPECT_NEAR(slope, 0.7, 0.01);
  double rss = 0.0;
  for (std::size_t t = 1; t < x.size(); ++t) rss += std::pow(y[t] - slope * x[t - 1], 2);
  EXPECT_NEAR(std::sqrt(rss / static_cast<double>(x.size() - 1)), 0.5, 0.01);
}

TEST(Generate, PiecewiseCouplingOnlyInsideWindow) {
  auto s = spec_of(GeneratorSpec::Kind::piecewise_coupled, 30000, 4);
  s.flip_prob = 0.0;
  s.onset = 10000;
  s.offset = 20000;
  const auto d = generate(s);
  const auto& x = d.channels[0].symbols.symbols;
  const auto& y = d.channels[1].symbols.symbols;
  std::size_t inside = 0, outside = 0;
  for (std::size_t m = 1; m < x.size(); ++m) {
    const bool agree = y[m] == x[m - 1];
    if (m >= s.onset && m < s.offset) inside += static_cast<std::size_t>(agree);
    else outside += static_cast<std::size_t>(agree);
  }
  EXPECT_EQ(inside, 10000u);
  EXPECT_NEAR(static_cast<double>(outside) / 19999.0, 0.5, 0.02);
}

TEST(Generate, PlantedGraph) {
  auto s = spec_of(GeneratorSpec::Kind::planted_graph, 20000, 5);
  s.node_count = 4;
  s.flip_prob = 0.1;
  s.edges = {{0, 1}, {2, 3}};
  const auto d = generate(s);
  ASSERT_EQ(d.labels, (std::vector<std::string>{"n0", "n1", "n2", "n3"}));
  auto agree = [&](int p, int c) {
    const auto& a = d.channels[static_cast<std::size_t>(p)].symbols.symbols;
    const auto& b = d.channels[static_cast<std::size_t>(c)].symbols.symbols;
    double k = 0.0;
    for (std::size_t m = 1; m < a.size(); ++m) k += a[m - 1] == b[m];
    return k / static_cast<double>(a.size() - 1);
  };
  EXPECT_NEAR(agree(0, 1), 0.9, 0.01);
  EXPECT_NEAR(agree(2, 3), 0.9, 0.01);
  EXPECT_NEAR(agree(1, 0), 0.5, 0.02);
  EXPECT_NEAR(agree(0, 2), 0.5, 0.02);
}

TEST(GeneratorSpec, Validation) {
  auto s = spec_of(GeneratorSpec::Kind::binary_flip_chain, 100, 0);
  s.flip_prob = 1.5;
  EXPECT_ERROR_KIND(generate(s), BadSpec);
  s = spec_of(GeneratorSpec::Kind::piecewise_coupled, 100, 0);
  s.onset = 50;
  s.offset = 50;
  EXPECT_ERROR_KIND(generate(s), BadSpec);
  s.offset = 101;
  EXPECT_ERROR_KIND(generate(s), BadSpec);
  s = spec_of(GeneratorSpec::Kind::planted_graph, 100, 0);
  s.node_count = 3;
  s.edges = {{0, 3}};
  EXPECT_ERROR_KIND(generate(s), BadSpec);
  s.edges = {{0, 1}, {2, 1}};
  EXPECT_ERROR_KIND(generate(s), BadSpec);
  s = spec_of(GeneratorSpec::Kind::gaussian_var, 100, 0);
  s.noise_std = 0.0;
  EXPECT_ERROR_KIND(generate(s), BadSpec);
  EXPECT_EQ(parse_generator_kind("planted_graph"), GeneratorSpec::Kind::planted_graph);
  EXPECT_EQ(to_string(GeneratorSpec::Kind::gaussian_var), "gaussian_var");
  EXPECT_ERROR_KIND(parse_generator_kind("ar2"), BadSpec);
}

TEST(ExactDi, Values) {
  auto s = spec_of(GeneratorSpec::Kind::independent_null, 10, 0);
  EXPECT_EQ(exact_di(s), 0.0);
  s.kind = GeneratorSpec::Kind::binary_flip_chain;
  s.flip_prob = 0.1;
  EXPECT_NEAR(binary_entropy(0.1), 0.325083, 1e-6);
  EXPECT_NEAR(exact_di(s), 0.368064, 1e-6);
  s.kind = GeneratorSpec::Kind::gaussian_var;
  s.coupling = 0.5;
  s.noise_std = 1.0;
  EXPECT_NEAR(exact_di(s), 0.5 * std::log(1.25), 1e-15);
  EXPECT_NEAR(2.0 * exact_di(s), std::log(1.25), 1e-15);
  s.kind = GeneratorSpec::Kind::piecewise_coupled;
  s.onset = 1;
  s.offset = 5;
  EXPECT_ERROR_KIND(exact_di(s), NoOracle);
  s.kind = GeneratorSpec::Kind::planted_graph;
  EXPECT_ERROR_KIND(exact_di(s), NoOracle);
}

TEST(BruteForce, IndependentIsZero) {
  for (int a : {2, 3}) {
    const auto r = brute_force_di(JointMarkovChain::independent(a, a), a == 2 ? 6 : 3);
    EXPECT_NEAR(r.total, 0.0, 1e-12);
  }
}

TEST(BruteForce, FlipChainMatchesRate) {
  auto s = spec_of(GeneratorSpec::Kind::binary_flip_chain, 10, 0);
  s.flip_prob = 0.1;
  const double rate = exact_di(s);
  const auto four = brute_force_di(JointMarkovChain::flip_chain(0.1), 4);
  ASSERT_EQ(four.terms.size(), 4u);
  EXPECT_NEAR(four.terms[0], 0.0, 1e-12);
  EXPECT_NEAR(four.total, 3.0 * rate, 1e-9);
  double prev = four.total;
  for (int m = 5; m <= 6; ++m) {
    const auto r = brute_force_di(JointMarkovChain::flip_chain(0.1), m);
    EXPECT_NEAR(r.total - prev, rate, 1e-9) << m;
    prev = r.total;
  }
}

TEST(BruteForce, TermsMatchDirectConditionalSum) {
  for (std::uint64_t seed = 0; seed < 3; ++seed) {
    const auto c = random_chain(2, 3 - static_cast<int>(seed % 2), seed);
    const auto r = brute_force_di(c, 4);
    for (int m = 1; m <= 4; ++m) EXPECT_NEAR(r.terms[static_cast<std::size_t>(m - 1)], last_step_term(c, m), 1e-12);
    EXPECT_GT(r.total, 0.0);
  }
}

TEST(BruteForce, Limits) {
  EXPECT_ERROR_KIND(brute_force_di(JointMarkovChain::independent(4, 2), 2), TooLarge);
  EXPECT_ERROR_KIND(brute_force_di(JointMarkovChain::flip_chain(0.1), 7), TooLarge);
  auto bad = JointMarkovChain::flip_chain(0.1);
  bad.transition(0, 0) += 0.2;
  EXPECT_ERROR_KIND(brute_force_di(bad, 2), BadSpec);
}
