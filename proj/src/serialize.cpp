#include "dirinfo/serialize.hpp"

#include "dirinfo/error.hpp"

#include <charconv>
#include <cmath>
#include <fstream>
#include <sstream>

namespace dirinfo {

std::string format_double(double v) {
  if (std::isnan(v)) return "nan";
  if (std::isinf(v)) return v > 0 ? "inf" : "-inf";
  if (v == 0.0) return "0";  // folds -0
  char buf[64];
  const auto res = std::to_chars(buf, buf + sizeof(buf), v);
  return std::string(buf, res.ptr);
}

nlohmann::json to_json(const Codebook& cb) {
  return {{"levels", cb.levels()}, {"boundaries", cb.boundaries}, {"representatives", cb.representatives}};
}

Codebook codebook_from_json(const nlohmann::json& j) {
  Codebook cb;
  try {
    cb.boundaries = j.at("boundaries").get<std::vector<double>>();
    cb.representatives = j.at("representatives").get<std::vector<double>>();
  } catch (const nlohmann::json::exception& e) {
    fail(ErrorKind::ParseError, std::string("codebook: ") + e.what());
  }
  if (cb.representatives.size() != cb.boundaries.size() + 1) fail(ErrorKind::ParseError, "codebook: size mismatch");
  return cb;
}

namespace {

nlohmann::json matrix_json(const Eigen::MatrixXd& m) {
  nlohmann::json rows = nlohmann::json::array();
  for (Eigen::Index i = 0; i < m.rows(); ++i) {
    std::vector<double> r(static_cast<std::size_t>(m.cols()));
    for (Eigen::Index j = 0; j < m.cols(); ++j) r[static_cast<std::size_t>(j)] = m(i, j);
    rows.push_back(r);
  }
  return rows;
}

}  // namespace

nlohmann::json to_json(const ShrinkageLogitModel& model) {
  return {{"class_count", model.class_count}, {"regressor_dim", model.regressor_dim}, {"order", model.order},
          {"lambda", model.lambda},           {"beta", matrix_json(model.beta)},     {"beta_ml", matrix_json(model.beta_ml)},
          {"target", matrix_json(model.target)}};
}

nlohmann::json to_json(const InteractionGraph& g) {
  nlohmann::json edges = nlohmann::json::array();
  for (const auto& e : g.edges) {
    edges.push_back({{"source", e.source}, {"target", e.target}, {"di", e.di_value}, {"p_value", e.p_value}});
  }
  return {{"nodes", g.nodes},
          {"edges", edges},
          {"alpha", g.alpha},
          {"fdr_method", g.fdr_method},
          {"hypotheses", g.hypotheses}};
}

std::string matrix_csv(const std::vector<std::string>& labels, const Eigen::MatrixXd& m) {
  std::string out;
  for (std::size_t i = 0; i < labels.size(); ++i) out += (i ? "," : "") + labels[i];
  out += '\n';
  for (Eigen::Index i = 0; i < m.rows(); ++i) {
    for (Eigen::Index j = 0; j < m.cols(); ++j) out += (j ? "," : "") + format_double(m(i, j));
    out += '\n';
  }
  return out;
}

namespace {

std::vector<std::string> split(const std::string& line, char sep) {
  std::vector<std::string> parts;
  std::string cur;
  std::istringstream is(line);
  while (std::getline(is, cur, sep)) parts.push_back(cur);
  if (!line.empty() && line.back() == sep) parts.emplace_back();
  return parts;
}

std::string trim(std::string s) {
  const auto b = s.find_first_not_of(" \t\r");
  if (b == std::string::npos) return {};
  const auto e = s.find_last_not_of(" \t\r");
  return s.substr(b, e - b + 1);
}

}  // namespace

LabeledMatrix read_matrix_csv(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) fail(ErrorKind::ParseError, path.string() + ": cannot open file");
  std::string line;
  LabeledMatrix out;
  std::size_t lineno = 0;
  std::vector<std::vector<double>> rows;
  while (std::getline(in, line)) {
    ++lineno;
    line = trim(line);
    if (line.empty()) continue;
    auto cells = split(line, ',');
    if (out.labels.empty()) {
      for (auto& c : cells) out.labels.push_back(trim(c));
      continue;
    }
    if (cells.size() != out.labels.size()) {
      fail(ErrorKind::ParseError, path.string() + ":" + std::to_string(lineno) + ": expected " +
                                      std::to_string(out.labels.size()) + " values");
    }
    std::vector<double> r;
    for (auto& c : cells) {
      const std::string t = trim(c);
      double v = 0.0;
      const auto res = std::from_chars(t.data(), t.data() + t.size(), v);
      if (res.ec != std::errc() || res.ptr != t.data() + t.size()) {
        fail(ErrorKind::ParseError, path.string() + ":" + std::to_string(lineno) + ": bad number '" + t + "'");
      }
      r.push_back(v);
    }
    rows.push_back(std::move(r));
  }
  if (out.labels.empty()) fail(ErrorKind::EmptyInput, path.string() + ": empty matrix file");
  if (rows.size() != out.labels.size()) {
    fail(ErrorKind::ParseError, path.string() + ": expected " + std::to_string(out.labels.size()) + " rows, got " +
                                    std::to_string(rows.size()));
  }
  const auto k = static_cast<Eigen::Index>(rows.size());
  out.values.resize(k, k);
  for (Eigen::Index i = 0; i < k; ++i) {
    for (Eigen::Index j = 0; j < k; ++j) out.values(i, j) = rows[static_cast<std::size_t>(i)][static_cast<std::size_t>(j)];
  }
  return out;
}

std::string surface_csv(const LocalDiSurface& s) {
  std::string out = "window";
  for (Eigen::Index j = 0; j < s.grid.cols(); ++j) out += "," + std::to_string(j * s.stride);
  out += '\n';
  for (Eigen::Index i = 0; i < s.grid.rows(); ++i) {
    out += std::to_string(i * s.stride);
    for (Eigen::Index j = 0; j < s.grid.cols(); ++j) out += "," + format_double(s.grid(i, j));
    out += '\n';
  }
  return out;
}

std::string roc_csv(const std::vector<std::pair<double, double>>& points) {
  std::string out = "fpr,tpr\n";
  for (const auto& [f, t] : points) out += format_double(f) + "," + format_double(t) + "\n";
  return out;
}

std::string graph_dot(const InteractionGraph& g) {
  std::string out = "digraph interactions {\n";
  for (const auto& n : g.nodes) out += "  \"" + n + "\";\n";
  for (const auto& e : g.edges) {
    out += "  \"" + e.source + "\" -> \"" + e.target + "\" [di=" + format_double(e.di_value) +
           ", p=" + format_double(e.p_value) + ", label=\"" + format_double(e.di_value) + "\"];\n";
  }
  out += "}\n";
  return out;
}

std::string recording_csv(const std::vector<std::string>& labels, const std::vector<std::vector<double>>& columns) {
  std::string out;
  for (std::size_t i = 0; i < labels.size(); ++i) out += (i ? "," : "") + labels[i];
  out += '\n';
  const std::size_t n = columns.empty() ? 0 : columns.front().size();
  for (std::size_t t = 0; t < n; ++t) {
    for (std::size_t c = 0; c < columns.size(); ++c) out += (c ? "," : "") + format_double(columns[c][t]);
    out += '\n';
  }
  return out;
}

void write_text(const std::filesystem::path& path, const std::string& text) {
  std::ofstream out(path, std::ios::binary);
  if (!out) fail(ErrorKind::IoError, path.string() + ": cannot write");
  out << text;
  if (!out) fail(ErrorKind::IoError, path.string() + ": write failed");
}

std::string read_text(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) fail(ErrorKind::ParseError, path.string() + ": cannot open file");
  std::ostringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

nlohmann::json read_json(const std::filesystem::path& path) {
  try {
    return nlohmann::json::parse(read_text(path));
  } catch (const nlohmann::json::parse_error& e) {
    fail(ErrorKind::ParseError, path.string() + ": " + e.what());
  }
}

void write_json(const std::filesystem::path& path, const nlohmann::json& j) { write_text(path, j.dump(2) + "\n"); }

}  // namespace dirinfo
