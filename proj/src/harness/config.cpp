#include "cinsight/harness.hpp"

#include "cinsight/error.hpp"
#include "cinsight/io.hpp"

#include <set>

#include <yaml-cpp/yaml.h>

namespace cinsight {

std::string_view to_string(DatasetKind kind) {
    switch (kind) {
    case DatasetKind::Motif: return "motif";
    case DatasetKind::Lorenz96: return "lorenz96";
    case DatasetKind::LinearVar: return "var";
    case DatasetKind::Csv: return "csv";
    }
    return "?";
}

DatasetKind parse_dataset_kind(std::string_view s) {
    if (s == "motif") return DatasetKind::Motif;
    if (s == "lorenz96") return DatasetKind::Lorenz96;
    if (s == "var") return DatasetKind::LinearVar;
    if (s == "csv") return DatasetKind::Csv;
    throw Error(ErrorKind::InvalidConfig,
                "unknown dataset '" + std::string(s) + "' (expected motif, lorenz96, var or csv)");
}

void ExperimentConfig::validate() const {
    if (n_seeds < 1) throw Error(ErrorKind::InvalidConfig, "n_seeds must be >= 1");
    if (threads < 1) throw Error(ErrorKind::InvalidConfig, "threads must be >= 1");
    if (!(selection.lambda > 0.0)) throw Error(ErrorKind::InvalidConfig, "lambda must be > 0");
    if (selection.patience < 1) throw Error(ErrorKind::InvalidConfig, "patience must be >= 1");
    predictor.validate();
    if (clamp.mode == ClampMode::Fixed && !(clamp.fixed_value >= 0.0 && clamp.fixed_value <= 1.0)) {
        throw Error(ErrorKind::InvalidConfig, "clamp_value must lie in [0, 1]");
    }
    const auto& d = dataset;
    if (d.kind == DatasetKind::Csv) {
        if (d.series_csv.empty()) throw Error(ErrorKind::InvalidConfig, "csv dataset needs series_csv");
        if (d.truth_json.empty()) throw Error(ErrorKind::InvalidConfig, "csv dataset needs truth_json");
        return;
    }
    if (d.length < 2) throw Error(ErrorKind::InvalidConfig, "length must be >= 2");
    if (!(d.noise_std >= 0.0)) throw Error(ErrorKind::InvalidConfig, "noise_std must be >= 0");
    if (d.kind == DatasetKind::LinearVar || d.kind == DatasetKind::Lorenz96) {
        if (d.n_vars < 1) throw Error(ErrorKind::InvalidConfig, "n_vars must be >= 1");
    }
    if (d.kind == DatasetKind::Lorenz96 && d.n_vars < 4) {
        throw Error(ErrorKind::InvalidConfig, "lorenz96 needs n_vars >= 4");
    }
    if (d.kind == DatasetKind::Motif && !d.lags.empty() &&
        d.lags.size() != motif_topology(d.motif).size()) {
        throw Error(ErrorKind::InvalidConfig,
                    "motif '" + std::string(to_string(d.motif)) + "' needs " +
                        std::to_string(motif_topology(d.motif).size()) + " lags");
    }
}

namespace {

const std::set<std::string>& known_keys() {
    static const std::set<std::string> keys{
        "name",          "dataset",        "motif",         "length",
        "noise_std",     "lags",           "self_weight",   "n_vars",
        "forcing",       "dt",             "burn_in",       "has_lags",
        "n_cross_edges", "max_lag",        "min_weight",    "max_weight",
        "series_csv",    "truth_json",     "backbone",      "window",
        "hidden",        "optimizer",      "learning_rate", "max_epochs",
        "train_patience", "min_rel_improvement", "clamp",   "clamp_value",
        "clamp_t0",      "lambda",         "m_max",         "patience",
        "imputation",    "n_seeds",        "seed",          "out",
        "threads",       "self_loops",     "record_timing"};
    return keys;
}

template <typename T>
T get(const YAML::Node& node, const std::string& key) {
    try {
        return node.as<T>();
    } catch (const YAML::Exception&) {
        throw Error(ErrorKind::InvalidConfig, "bad value for '" + key + "'");
    }
}

template <typename T>
std::vector<T> get_list(const YAML::Node& node, const std::string& key) {
    if (node.IsScalar()) return {get<T>(node, key)};
    if (!node.IsSequence()) throw Error(ErrorKind::InvalidConfig, "'" + key + "' must be a list");
    std::vector<T> out;
    for (const auto& item : node) out.push_back(get<T>(item, key));
    return out;
}

} // namespace

ExperimentConfig parse_experiment_config(const std::string& text) {
    YAML::Node root;
    try {
        root = YAML::Load(text);
    } catch (const YAML::Exception& e) {
        throw Error(ErrorKind::Parse, std::string("config: ") + e.what());
    }
    ExperimentConfig c;
    if (root.IsNull()) return c;
    if (!root.IsMap()) throw Error(ErrorKind::Parse, "config must be a key: value mapping");

    bool self_weight_set = false;
    bool noise_set = false;
    for (const auto& kv : root) {
        const auto key = kv.first.as<std::string>();
        const auto& v = kv.second;
        if (!known_keys().count(key)) throw Error(ErrorKind::InvalidConfig, "unknown key '" + key + "'");
        auto& d = c.dataset;
        auto& p = c.predictor;
        if (key == "name") c.name = get<std::string>(v, key);
        else if (key == "dataset") d.kind = parse_dataset_kind(get<std::string>(v, key));
        else if (key == "motif") d.motif = parse_motif_kind(get<std::string>(v, key));
        else if (key == "length") d.length = get<std::size_t>(v, key);
        else if (key == "noise_std") { d.noise_std = get<double>(v, key); noise_set = true; }
        else if (key == "lags") d.lags = get_list<std::size_t>(v, key);
        else if (key == "self_weight") { d.self_weight = get<double>(v, key); self_weight_set = true; }
        else if (key == "n_vars") d.n_vars = get<std::size_t>(v, key);
        else if (key == "forcing") d.forcing = get<double>(v, key);
        else if (key == "dt") d.dt = get<double>(v, key);
        else if (key == "burn_in") d.burn_in = get<std::size_t>(v, key);
        else if (key == "has_lags") d.has_lags = get<bool>(v, key);
        else if (key == "n_cross_edges") d.n_cross_edges = get<std::size_t>(v, key);
        else if (key == "max_lag") d.max_lag = get<std::size_t>(v, key);
        else if (key == "min_weight") d.min_weight = get<double>(v, key);
        else if (key == "max_weight") d.max_weight = get<double>(v, key);
        else if (key == "series_csv") d.series_csv = get<std::string>(v, key);
        else if (key == "truth_json") d.truth_json = get<std::string>(v, key);
        else if (key == "backbone") p.backbone = parse_backbone(get<std::string>(v, key));
        else if (key == "window") p.window = get<std::size_t>(v, key);
        else if (key == "hidden") p.hidden_sizes = get_list<std::size_t>(v, key);
        else if (key == "optimizer") p.optimizer = parse_optimizer(get<std::string>(v, key));
        else if (key == "learning_rate") p.learning_rate = get<double>(v, key);
        else if (key == "max_epochs") p.max_epochs = get<std::size_t>(v, key);
        else if (key == "train_patience") p.patience = get<std::size_t>(v, key);
        else if (key == "min_rel_improvement") p.min_rel_improvement = get<double>(v, key);
        else if (key == "clamp") c.clamp.mode = parse_clamp_mode(get<std::string>(v, key));
        else if (key == "clamp_value") c.clamp.fixed_value = get<double>(v, key);
        else if (key == "clamp_t0") c.clamp.t0 = get<std::size_t>(v, key);
        else if (key == "lambda") c.selection.lambda = get<double>(v, key);
        else if (key == "m_max") c.selection.m_max = get<std::size_t>(v, key);
        else if (key == "patience") c.selection.patience = get<std::size_t>(v, key);
        else if (key == "imputation") c.selection.imputation = parse_imputation(get<std::string>(v, key));
        else if (key == "n_seeds") c.n_seeds = get<std::size_t>(v, key);
        else if (key == "seed") c.base_seed = get<std::uint64_t>(v, key);
        else if (key == "out") c.out_dir = get<std::string>(v, key);
        else if (key == "threads") c.threads = get<std::size_t>(v, key);
        else if (key == "self_loops") c.include_self_loops = get<bool>(v, key);
        else if (key == "record_timing") c.record_timing = get<bool>(v, key);
    }
    // Per-generator defaults for keys shared between generators.
    if (c.dataset.kind == DatasetKind::LinearVar && self_weight_set) {
        c.dataset.var_self_weight = c.dataset.self_weight;
    }
    if (c.dataset.kind == DatasetKind::Lorenz96 && !noise_set) c.dataset.noise_std = 0.0;
    c.validate();
    return c;
}

ExperimentConfig load_experiment_config(const std::filesystem::path& path) {
    return parse_experiment_config(read_text_file(path));
}

} // namespace cinsight
