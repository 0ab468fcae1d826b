#pragma once

#include "cinsight/datagen.hpp"
#include "cinsight/graphsel.hpp"
#include "cinsight/metrics.hpp"
#include "cinsight/predictor.hpp"
#include "cinsight/probing.hpp"

#include <cstddef>
#include <cstdint>
#include <filesystem>
#include <map>
#include <optional>
#include <string>
#include <vector>

#include <json.hpp>

namespace cinsight {

enum class DatasetKind { Motif, Lorenz96, LinearVar, Csv };

std::string_view to_string(DatasetKind kind);
DatasetKind parse_dataset_kind(std::string_view s);

struct DatasetSpec {
    DatasetKind kind = DatasetKind::Motif;
    std::size_t length = 1000;
    double noise_std = 1.0;
    // motif
    MotifKind motif = MotifKind::Fork;
    std::vector<std::size_t> lags;
    double self_weight = 0.5;
    // lorenz96 + var
    std::size_t n_vars = 10;
    // lorenz96
    double forcing = 8.0;
    double dt = 0.05;
    std::size_t burn_in = 1000;
    bool has_lags = true;
    // var
    std::size_t n_cross_edges = 4;
    std::size_t max_lag = 3;
    double min_weight = 0.5;
    double max_weight = 0.9;
    double var_self_weight = 0.4;
    // csv
    std::filesystem::path series_csv;
    std::filesystem::path truth_json;
};

struct ExperimentConfig {
    std::string name = "experiment";
    DatasetSpec dataset;
    PredictorConfig predictor;
    ClampPolicy clamp;
    SelectionOptions selection;
    std::size_t n_seeds = 1;
    std::uint64_t base_seed = 0;
    std::filesystem::path out_dir; // empty: keep everything in memory
    bool include_self_loops = true;
    std::size_t threads = 1;
    bool record_timing = false; // wall-clock values make reports non-reproducible

    void validate() const;
};

/// Reads the flat `key: value` experiment file documented in the README.
/// Unknown keys are rejected.
ExperimentConfig load_experiment_config(const std::filesystem::path& path);
ExperimentConfig parse_experiment_config(const std::string& text);

/// Data for one seed: generated or loaded series (raw) and its truth.
GeneratedData make_dataset(const DatasetSpec& spec, std::uint64_t seed);

struct SeedRun {
    std::size_t seed_index = 0;
    std::uint64_t seed = 0;
    bool ok = false;
    std::string error;
    StructuralReport report;
    QbicTrace trace;
    std::size_t n_edges = 0;
    std::size_t probe_forward_passes = 0;
    std::size_t select_forward_passes = 0;
    std::size_t qbic_evaluations = 0;
    double runtime_ms = 0.0;
};

struct MetricSummary {
    double mean = 0.0;
    double std = 0.0; // sample standard deviation over seeds (0 for one seed)
    std::size_t count = 0;
};

struct RunReport {
    std::string name;
    std::vector<SeedRun> seeds; // sorted by seed index
    std::map<std::string, MetricSummary> aggregate;
    bool success = false; // at least one seed succeeded
};

/// mean +- std of each metric over the successful seeds.
std::map<std::string, MetricSummary> aggregate_seeds(const std::vector<SeedRun>& seeds);

nlohmann::json to_json(const RunReport& report, bool include_timing);
std::string report_csv(const RunReport& report, bool include_timing);
std::string aggregate_csv(const RunReport& report);

/// generate/load -> normalize -> train -> probe -> select -> evaluate, per seed.
/// Artifacts are written under out_dir/seed_<k>/ when out_dir is set.
RunReport run_pipeline(const ExperimentConfig& config);

struct PermutationAblation {
    RunReport original;
    RunReport permuted;
    std::vector<double> f1_delta; // original - permuted, per seed with both ok
};

PermutationAblation ablate_permuted_signal(const ExperimentConfig& config);

struct ClampSweepRow {
    std::size_t seed_index = 0;
    double clamp_value = 0.0;
    bool ok = false;
    StructuralReport report;
    std::size_t selected_m = 0;
};

std::vector<ClampSweepRow> ablate_clamp_sweep(const ExperimentConfig& config,
                                              const std::vector<double>& grid);

struct QbicCorrelationRow {
    std::size_t seed_index = 0;
    bool ok = false;
    std::string error;
    std::vector<std::pair<std::size_t, double>> qbic; // full trace, no early stop
    std::vector<double> f1;                           // F1 of G^(m) per trace entry
    std::optional<double> pearson;
    std::optional<double> spearman;
    std::size_t selected_m = 0;
    double f1_ratio = 0.0; // F1(m_hat) / max_m F1
};

struct QbicCorrelationSummary {
    std::vector<QbicCorrelationRow> rows;
    std::optional<double> mean_pearson;
    std::optional<double> mean_spearman;
    double mean_f1_ratio = 0.0;
    std::size_t negative_pearson_count = 0;
};

QbicCorrelationSummary ablate_qbic_correlation(const ExperimentConfig& config);

struct BenchRow {
    std::size_t n_vars = 0;
    std::size_t repeats = 0;
    double mean_ms = 0.0;
    double std_ms = 0.0;
    double mean_qbic_evaluations = 0.0;
    // Every repeat matched forward passes == (N + 1) + #Qbic evaluations.
    bool counts_match = true;
    std::vector<std::size_t> forward_passes;
    std::vector<std::size_t> qbic_evaluations;
};

/// Probe + select wall clock per N on random sparse VAR data, using the
/// predictor/selection settings of `base`.
std::vector<BenchRow> bench_runtime(const ExperimentConfig& base,
                                    const std::vector<std::size_t>& n_vars_grid,
                                    std::size_t repeats);

std::string clamp_sweep_csv(const std::vector<ClampSweepRow>& rows);
std::string qbic_correlation_csv(const QbicCorrelationSummary& summary);
std::string bench_csv(const std::vector<BenchRow>& rows);
std::string trace_csv(const QbicTrace& trace);

} // namespace cinsight
