#include "dirinfo/synthetic.hpp"

#include "dirinfo/error.hpp"

#include <cmath>
#include <numbers>
#include <random>
#include <unordered_map>

namespace dirinfo {

void GeneratorSpec::validate() const {
  if (length < 2) fail(ErrorKind::BadSpec, "length must be at least 2");
  if (!(flip_prob >= 0.0 && flip_prob <= 1.0)) fail(ErrorKind::BadSpec, "flip probability outside [0, 1]");
  switch (kind) {
    case Kind::gaussian_var:
      if (!(noise_std > 0.0) || !std::isfinite(coupling)) fail(ErrorKind::BadSpec, "gaussian_var needs noise_std > 0");
      break;
    case Kind::piecewise_coupled:
      if (!(onset < offset && offset <= length)) fail(ErrorKind::BadSpec, "need onset < offset <= length");
      break;
    case Kind::planted_graph: {
      if (node_count < 2) fail(ErrorKind::BadSpec, "planted graph needs at least two nodes");
      std::vector<int> parent(static_cast<std::size_t>(node_count), -1);
      for (const auto& [p, c] : edges) {
        if (p < 0 || c < 0 || p >= node_count || c >= node_count) fail(ErrorKind::BadSpec, "edge endpoint out of range");
        if (p == c) fail(ErrorKind::BadSpec, "self-loop in planted graph");
        if (parent[static_cast<std::size_t>(c)] >= 0) fail(ErrorKind::BadSpec, "node with more than one parent");
        parent[static_cast<std::size_t>(c)] = p;
      }
      break;
    }
    default:
      break;
  }
}

std::string to_string(GeneratorSpec::Kind kind) {
  switch (kind) {
    case GeneratorSpec::Kind::binary_flip_chain: return "binary_flip_chain";
    case GeneratorSpec::Kind::gaussian_var: return "gaussian_var";
    case GeneratorSpec::Kind::independent_null: return "independent_null";
    case GeneratorSpec::Kind::piecewise_coupled: return "piecewise_coupled";
    case GeneratorSpec::Kind::planted_graph: return "planted_graph";
  }
  return "unknown";
}

GeneratorSpec::Kind parse_generator_kind(const std::string& name) {
  for (auto k : {GeneratorSpec::Kind::binary_flip_chain, GeneratorSpec::Kind::gaussian_var,
                 GeneratorSpec::Kind::independent_null, GeneratorSpec::Kind::piecewise_coupled,
                 GeneratorSpec::Kind::planted_graph}) {
    if (to_string(k) == name) return k;
  }
  fail(ErrorKind::BadSpec, "unknown generator kind '" + name + "'");
}

namespace {

Channel binary_channel(std::vector<int> symbols) {
  Channel ch;
  ch.features.values.assign(symbols.begin(), symbols.end());
  ch.symbols.symbols = std::move(symbols);
  ch.symbols.levels = 2;
  ch.symbols.codebook_id = "binary";
  return ch;
}

}  // namespace

GeneratedData generate(const GeneratorSpec& spec) {
  spec.validate();
  std::mt19937_64 rng(spec.seed);
  std::bernoulli_distribution coin(0.5);
  std::bernoulli_distribution flip(spec.flip_prob);
  const std::size_t n = spec.length;
  GeneratedData out;

  using Kind = GeneratorSpec::Kind;
  if (spec.kind == Kind::gaussian_var) {
    std::normal_distribution<double> gauss(0.0, 1.0);
    Channel x, y;
    x.features.values.resize(n);
    y.features.values.resize(n);
    for (std::size_t t = 0; t < n; ++t) x.features.values[t] = gauss(rng);
    for (std::size_t t = 0; t < n; ++t) {
      const double prev = t > 0 ? x.features.values[t - 1] : gauss(rng);
      y.features.values[t] = spec.coupling * prev + spec.noise_std * gauss(rng);
    }
    out.labels = {"x", "y"};
    out.channels = {std::move(x), std::move(y)};
    return out;
  }

  if (spec.kind == Kind::planted_graph) {
    const auto k = static_cast<std::size_t>(spec.node_count);
    std::vector<int> parent(k, -1);
    for (const auto& [p, c] : spec.edges) parent[static_cast<std::size_t>(c)] = p;
    std::vector<std::vector<int>> sym(k, std::vector<int>(n));
    for (std::size_t t = 0; t < n; ++t) {
      for (std::size_t v = 0; v < k; ++v) {
        const int p = parent[v];
        if (p < 0 || t == 0) {
          sym[v][t] = coin(rng);
        } else {
          sym[v][t] = sym[static_cast<std::size_t>(p)][t - 1] ^ static_cast<int>(flip(rng));
        }
      }
    }
    for (std::size_t v = 0; v < k; ++v) {
      out.labels.push_back("n" + std::to_string(v));
      out.channels.push_back(binary_channel(std::move(sym[v])));
    }
    return out;
  }

  std::vector<int> x(n), y(n);
  for (std::size_t t = 0; t < n; ++t) x[t] = coin(rng);
  for (std::size_t t = 0; t < n; ++t) {
    bool coupled = false;
    if (spec.kind == Kind::binary_flip_chain) coupled = t > 0;
    if (spec.kind == Kind::piecewise_coupled) coupled = t > 0 && t >= spec.onset && t < spec.offset;
    y[t] = coupled ? (x[t - 1] ^ static_cast<int>(flip(rng))) : static_cast<int>(coin(rng));
  }
  out.labels = {"x", "y"};
  out.channels = {binary_channel(std::move(x)), binary_channel(std::move(y))};
  return out;
}

double binary_entropy(double q) {
  if (q <= 0.0 || q >= 1.0) return 0.0;
  return -q * std::log(q) - (1.0 - q) * std::log1p(-q);
}

double exact_di(const GeneratorSpec& spec) {
  spec.validate();
  switch (spec.kind) {
    case GeneratorSpec::Kind::binary_flip_chain: return std::numbers::ln2 - binary_entropy(spec.flip_prob);
    case GeneratorSpec::Kind::gaussian_var:
      return 0.5 * std::log1p(spec.coupling * spec.coupling / (spec.noise_std * spec.noise_std));
    case GeneratorSpec::Kind::independent_null: return 0.0;
    default: fail(ErrorKind::NoOracle, "no analytic DI for " + to_string(spec.kind));
  }
}

void JointMarkovChain::validate() const {
  if (x_alphabet < 1 || y_alphabet < 1) fail(ErrorKind::BadSpec, "alphabets must be non-empty");
  const int s = states();
  if (initial.size() != s || transition.rows() != s || transition.cols() != s) {
    fail(ErrorKind::BadSpec, "chain dimensions do not match the alphabets");
  }
  auto check = [](double total, bool nonneg) {
    if (!nonneg || std::abs(total - 1.0) > 1e-9) fail(ErrorKind::BadSpec, "distribution does not sum to 1");
  };
  check(initial.sum(), (initial.array() >= 0.0).all());
  for (int r = 0; r < s; ++r) check(transition.row(r).sum(), (transition.row(r).array() >= 0.0).all());
}

JointMarkovChain JointMarkovChain::flip_chain(double flip_prob) {
  if (!(flip_prob >= 0.0 && flip_prob <= 1.0)) fail(ErrorKind::BadSpec, "flip probability outside [0, 1]");
  JointMarkovChain c;
  c.initial = Eigen::VectorXd::Constant(4, 0.25);
  c.transition = Eigen::MatrixXd::Zero(4, 4);
  for (int x = 0; x < 2; ++x) {
    for (int y = 0; y < 2; ++y) {
      for (int x2 = 0; x2 < 2; ++x2) {
        for (int y2 = 0; y2 < 2; ++y2) {
          const double py = (y2 == x) ? 1.0 - flip_prob : flip_prob;
          c.transition(x * 2 + y, x2 * 2 + y2) = 0.5 * py;
        }
      }
    }
  }
  return c;
}

JointMarkovChain JointMarkovChain::independent(int x_alphabet, int y_alphabet) {
  JointMarkovChain c;
  c.x_alphabet = x_alphabet;
  c.y_alphabet = y_alphabet;
  const int s = c.states();
  c.initial = Eigen::VectorXd::Constant(s, 1.0 / s);
  c.transition = Eigen::MatrixXd::Constant(s, s, 1.0 / s);
  return c;
}

namespace {

double entropy_of(const std::unordered_map<std::uint64_t, double>& dist) {
  double h = 0.0;
  for (const auto& [key, p] : dist) {
    if (p > 0.0) h -= p * std::log(p);
  }
  return h;
}

}  // namespace

BruteForceDi brute_force_di(const JointMarkovChain& chain, int horizon) {
  if (chain.x_alphabet > kMaxBruteAlphabet || chain.y_alphabet > kMaxBruteAlphabet || horizon > kMaxBruteHorizon) {
    fail(ErrorKind::TooLarge, "enumeration limited to alphabet <= 3 and horizon <= 6");
  }
  if (horizon < 1) fail(ErrorKind::Validation, "horizon must be >= 1");
  chain.validate();
  const int s = chain.states();
  const auto ax = static_cast<std::uint64_t>(chain.x_alphabet);
  const auto ay = static_cast<std::uint64_t>(chain.y_alphabet);

  // Prefix probabilities, indexed by the state sequence in base s.
  std::vector<double> prob(chain.initial.data(), chain.initial.data() + s);
  BruteForceDi out;
  for (int m = 1; m <= horizon; ++m) {
    if (m > 1) {
      std::vector<double> next(prob.size() * static_cast<std::size_t>(s), 0.0);
      for (std::size_t idx = 0; idx < prob.size(); ++idx) {
        const int last = static_cast<int>(idx % static_cast<std::size_t>(s));
        for (int t = 0; t < s; ++t) next[idx * static_cast<std::size_t>(s) + static_cast<std::size_t>(t)] =
            prob[idx] * chain.transition(last, t);
      }
      prob = std::move(next);
    }
    // Marginals needed for I(X^m; Y_m | Y^{m-1}) =
    //   H(Y^m) - H(Y^{m-1}) - H(X^m, Y^m) + H(X^m, Y^{m-1}).
    std::unordered_map<std::uint64_t, double> y_m, y_prev, xy_prev;
    double h_joint = 0.0;
    for (std::size_t idx = 0; idx < prob.size(); ++idx) {
      const double p = prob[idx];
      if (p <= 0.0) continue;
      h_joint -= p * std::log(p);
      std::uint64_t ykey = 0, ypkey = 0, xkey = 0;
      std::size_t rest = idx;
      std::vector<int> states(static_cast<std::size_t>(m));
      for (int k = m - 1; k >= 0; --k) {
        states[static_cast<std::size_t>(k)] = static_cast<int>(rest % static_cast<std::size_t>(s));
        rest /= static_cast<std::size_t>(s);
      }
      for (int k = 0; k < m; ++k) {
        const auto st = static_cast<std::uint64_t>(states[static_cast<std::size_t>(k)]);
        const std::uint64_t xv = st / ay;
        const std::uint64_t yv = st % ay;
        xkey = xkey * ax + xv;
        ykey = ykey * ay + yv;
        if (k < m - 1) ypkey = ypkey * ay + yv;
      }
      y_m[ykey] += p;
      y_prev[ypkey] += p;
      xy_prev[xkey * 1000003ULL + ypkey] += p;  // ypkey < 3^5, so the pairing is injective
    }
    const double term = entropy_of(y_m) - entropy_of(y_prev) - h_joint + entropy_of(xy_prev);
    out.terms.push_back(term);
    out.total += term;
  }
  return out;
}

}  // namespace dirinfo
