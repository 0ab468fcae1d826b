#include "cinsight/io.hpp"

#include "cinsight/error.hpp"

#include <charconv>
#include <cmath>
#include <fstream>
#include <sstream>

namespace cinsight {

namespace {

std::vector<std::string> split_csv_line(const std::string& line) {
    std::vector<std::string> cells;
    std::string cell;
    std::istringstream is(line);
    while (std::getline(is, cell, ',')) cells.push_back(cell);
    if (!line.empty() && line.back() == ',') cells.emplace_back();
    return cells;
}

std::string trim(std::string s) {
    const auto first = s.find_first_not_of(" \t\r");
    if (first == std::string::npos) return {};
    const auto last = s.find_last_not_of(" \t\r");
    return s.substr(first, last - first + 1);
}

std::size_t edge_index(const nlohmann::json& edge, const char* key) {
    const auto it = edge.find(key);
    if (it == edge.end() || !it->is_number_integer() || it->get<long long>() < 0) {
        throw Error(ErrorKind::Parse,
                    std::string("edge field '") + key + "' must be a non-negative integer");
    }
    return it->get<std::size_t>();
}

std::vector<LaggedEdge> edges_from_json(const nlohmann::json& doc) {
    if (!doc.is_object() || !doc.contains("edges") || !doc["edges"].is_array()) {
        throw Error(ErrorKind::Parse, "graph JSON needs an 'edges' array");
    }
    std::vector<LaggedEdge> edges;
    for (const auto& e : doc["edges"]) {
        if (!e.is_object()) throw Error(ErrorKind::Parse, "edge entries must be objects");
        LaggedEdge edge;
        edge.src = edge_index(e, "src");
        edge.dst = edge_index(e, "dst");
        edge.lag = edge_index(e, "lag");
        const auto score = e.find("score");
        if (score == e.end() || !score->is_number()) {
            throw Error(ErrorKind::Parse, "edge field 'score' must be a number");
        }
        edge.score = score->get<double>();
        edges.push_back(edge);
    }
    return edges;
}

std::size_t n_vars_from_json(const nlohmann::json& doc) {
    if (!doc.is_object() || !doc.contains("n_vars") || !doc["n_vars"].is_number_integer() ||
        doc["n_vars"].get<long long>() < 0) {
        throw Error(ErrorKind::Parse, "graph JSON needs a non-negative integer 'n_vars'");
    }
    return doc["n_vars"].get<std::size_t>();
}

nlohmann::json parse_json_file(const std::filesystem::path& path) {
    try {
        return nlohmann::json::parse(read_text_file(path));
    } catch (const nlohmann::json::parse_error& e) {
        throw Error(ErrorKind::Parse, path.string() + ": " + e.what());
    }
}

} // namespace

std::string format_double(double value) {
    char buf[64];
    auto [end, ec] = std::to_chars(buf, buf + sizeof(buf), value);
    return std::string(buf, end);
}

std::string read_text_file(const std::filesystem::path& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw Error(ErrorKind::Io, "cannot open " + path.string());
    std::ostringstream ss;
    ss << in.rdbuf();
    return ss.str();
}

void write_text_file(const std::filesystem::path& path, const std::string& text) {
    if (path.has_parent_path()) std::filesystem::create_directories(path.parent_path());
    std::ofstream out(path, std::ios::binary | std::ios::trunc);
    if (!out) throw Error(ErrorKind::Io, "cannot write " + path.string());
    out << text;
}

MultivariateSeries parse_series_csv(const std::string& text) {
    std::istringstream in(text);
    std::string line;
    std::size_t line_no = 0;
    std::vector<std::string> header;
    while (std::getline(in, line)) {
        ++line_no;
        if (!trim(line).empty()) {
            for (auto& name : split_csv_line(line)) header.push_back(trim(name));
            break;
        }
    }
    if (header.empty()) throw Error(ErrorKind::Parse, "no header");
    for (std::size_t c = 0; c < header.size(); ++c) {
        if (header[c].empty()) {
            throw Error(ErrorKind::Parse, "empty variable name in header column " +
                                              std::to_string(c + 1));
        }
    }

    const std::size_t n = header.size();
    std::vector<std::vector<double>> columns(n);
    while (std::getline(in, line)) {
        ++line_no;
        if (trim(line).empty()) continue;
        const auto cells = split_csv_line(line);
        if (cells.size() != n) {
            throw Error(ErrorKind::Parse, "row " + std::to_string(line_no) + " has " +
                                              std::to_string(cells.size()) +
                                              " cells, expected " + std::to_string(n));
        }
        for (std::size_t c = 0; c < n; ++c) {
            const std::string cell = trim(cells[c]);
            double v = 0.0;
            const char* first = cell.data();
            const char* last = cell.data() + cell.size();
            if (!cell.empty() && *first == '+') ++first;
            auto [ptr, ec] = std::from_chars(first, last, v);
            if (cell.empty() || ec != std::errc() || ptr != last || !std::isfinite(v)) {
                throw Error(ErrorKind::Parse, "row " + std::to_string(line_no) + ", column " +
                                                  std::to_string(c + 1) + " (" + header[c] +
                                                  "): not a finite number: '" + cell + "'");
            }
            columns[c].push_back(v);
        }
    }
    const std::size_t len = columns[0].size();
    if (len < 2) throw Error(ErrorKind::Parse, "need at least two data rows");
    std::vector<double> values;
    values.reserve(n * len);
    for (const auto& col : columns) values.insert(values.end(), col.begin(), col.end());
    return MultivariateSeries(n, len, std::move(values), std::move(header));
}

MultivariateSeries load_series_csv(const std::filesystem::path& path) {
    try {
        return parse_series_csv(read_text_file(path));
    } catch (const Error& e) {
        if (e.kind() == ErrorKind::Parse) throw Error(ErrorKind::Parse, path.string() + ": " + e.message());
        throw;
    }
}

void save_series_csv(const MultivariateSeries& series, const std::filesystem::path& path) {
    std::string out;
    const auto& names = series.var_names();
    for (std::size_t i = 0; i < names.size(); ++i) {
        if (i) out += ',';
        out += names[i];
    }
    out += '\n';
    for (std::size_t t = 0; t < series.length(); ++t) {
        for (std::size_t i = 0; i < series.n_vars(); ++i) {
            if (i) out += ',';
            out += format_double(series(i, t));
        }
        out += '\n';
    }
    write_text_file(path, out);
}

nlohmann::json graph_to_json(const TemporalGraph& graph) {
    nlohmann::json edges = nlohmann::json::array();
    for (const auto& e : graph.edges()) {
        edges.push_back({{"src", e.src}, {"dst", e.dst}, {"lag", e.lag}, {"score", e.score}});
    }
    return {{"n_vars", graph.n_vars()}, {"edges", std::move(edges)}};
}

TemporalGraph graph_from_json(const nlohmann::json& doc) {
    const bool both = doc.is_object() && doc.value("allow_bidirectional", false);
    return TemporalGraph(n_vars_from_json(doc), edges_from_json(doc),
                         both ? Directionality::AllowBoth : Directionality::SingleDominant);
}

void save_graph_json(const TemporalGraph& graph, const std::filesystem::path& path) {
    write_text_file(path, graph_to_json(graph).dump(2) + "\n");
}

TemporalGraph load_graph_json(const std::filesystem::path& path) {
    return graph_from_json(parse_json_file(path));
}

nlohmann::json truth_to_json(const GroundTruth& truth) {
    auto doc = graph_to_json(truth.graph);
    doc["has_lags"] = truth.has_lags;
    doc["allow_bidirectional"] = truth.graph.directionality() == Directionality::AllowBoth;
    return doc;
}

GroundTruth truth_from_json(const nlohmann::json& doc) {
    const bool has_lags = doc.is_object() && doc.value("has_lags", true);
    return GroundTruth{graph_from_json(doc), has_lags};
}

void save_truth_json(const GroundTruth& truth, const std::filesystem::path& path) {
    write_text_file(path, truth_to_json(truth).dump(2) + "\n");
}

GroundTruth load_truth_json(const std::filesystem::path& path) {
    return truth_from_json(parse_json_file(path));
}

} // namespace cinsight
