#pragma once

#include "dirinfo/analysis.hpp"
#include "dirinfo/estimator.hpp"
#include "dirinfo/inference.hpp"
#include "dirinfo/signal.hpp"

#include <json.hpp>

#include <Eigen/Dense>

#include <filesystem>
#include <string>
#include <utility>
#include <vector>

namespace dirinfo {

// Shortest round-trip decimal form; identical across runs and platforms.
std::string format_double(double v);

nlohmann::json to_json(const Codebook& cb);
Codebook codebook_from_json(const nlohmann::json& j);
nlohmann::json to_json(const ShrinkageLogitModel& model);
nlohmann::json to_json(const InteractionGraph& g);

struct LabeledMatrix {
  std::vector<std::string> labels;
  Eigen::MatrixXd values;
};

// Header row of K labels, then K rows of K numbers.
std::string matrix_csv(const std::vector<std::string>& labels, const Eigen::MatrixXd& m);
LabeledMatrix read_matrix_csv(const std::filesystem::path& path);

// Header: "window", then the target-window offsets tau; one row per source window offset.
std::string surface_csv(const LocalDiSurface& s);
std::string roc_csv(const std::vector<std::pair<double, double>>& points);
std::string graph_dot(const InteractionGraph& g);

// Signal layout understood by load_recording: a header of labels, one row per sample.
std::string recording_csv(const std::vector<std::string>& labels, const std::vector<std::vector<double>>& columns);

void write_text(const std::filesystem::path& path, const std::string& text);
std::string read_text(const std::filesystem::path& path);
nlohmann::json read_json(const std::filesystem::path& path);
void write_json(const std::filesystem::path& path, const nlohmann::json& j);

}  // namespace dirinfo
