#pragma once

#include "cinsight/graph.hpp"
#include "cinsight/series.hpp"

#include <filesystem>
#include <string>

#include <json.hpp>

namespace cinsight {

/// Shortest decimal text that round-trips to the same double.
std::string format_double(double value);

/// Time-major CSV (header of variable names, one row per time step) read
/// into the N x T layout.
MultivariateSeries load_series_csv(const std::filesystem::path& path);
MultivariateSeries parse_series_csv(const std::string& text);
void save_series_csv(const MultivariateSeries& series, const std::filesystem::path& path);

nlohmann::json graph_to_json(const TemporalGraph& graph);
TemporalGraph graph_from_json(const nlohmann::json& doc);

void save_graph_json(const TemporalGraph& graph, const std::filesystem::path& path);
TemporalGraph load_graph_json(const std::filesystem::path& path);

// Truth files use the graph layout plus "has_lags" and "allow_bidirectional".
nlohmann::json truth_to_json(const GroundTruth& truth);
GroundTruth truth_from_json(const nlohmann::json& doc);
void save_truth_json(const GroundTruth& truth, const std::filesystem::path& path);
GroundTruth load_truth_json(const std::filesystem::path& path);

std::string read_text_file(const std::filesystem::path& path);
void write_text_file(const std::filesystem::path& path, const std::string& text);

} // namespace cinsight
