#include "cinsight/harness.hpp"

#include "cinsight/error.hpp"
#include "cinsight/io.hpp"
#include "cinsight/rng.hpp"

#include <algorithm>
#include <atomic>
#include <chrono>
#include <cmath>
#include <functional>
#include <limits>
#include <numeric>
#include <sstream>
#include <thread>

namespace cinsight {

namespace fs = std::filesystem;

GeneratedData make_dataset(const DatasetSpec& spec, std::uint64_t seed) {
    switch (spec.kind) {
    case DatasetKind::Motif: {
        MotifConfig mc;
        mc.kind = spec.motif;
        mc.length = spec.length;
        mc.lags = spec.lags;
        mc.noise_std = spec.noise_std;
        mc.self_weight = spec.self_weight;
        mc.seed = seed;
        return gen_motif(mc);
    }
    case DatasetKind::Lorenz96: {
        Lorenz96Config lc;
        lc.n_vars = spec.n_vars;
        lc.length = spec.length;
        lc.forcing = spec.forcing;
        lc.dt = spec.dt;
        lc.burn_in = spec.burn_in;
        lc.has_lags = spec.has_lags;
        lc.noise_std = spec.noise_std;
        lc.seed = seed;
        return gen_lorenz96(lc);
    }
    case DatasetKind::LinearVar: {
        RandomVarConfig rc;
        rc.n_vars = spec.n_vars;
        rc.n_cross_edges = spec.n_cross_edges;
        rc.max_lag = spec.max_lag;
        rc.min_weight = spec.min_weight;
        rc.max_weight = spec.max_weight;
        rc.self_weight = spec.var_self_weight;
        rc.seed = derive_seed(seed, "var-structure");
        const auto coef = random_sparse_var(rc);
        return gen_linear_var(coef, spec.length, spec.noise_std, derive_seed(seed, "var-noise"));
    }
    case DatasetKind::Csv: {
        auto series = load_series_csv(spec.series_csv);
        auto truth = load_truth_json(spec.truth_json);
        if (truth.graph.n_vars() != series.n_vars()) {
            throw Error(ErrorKind::InvalidInput, "truth has " + std::to_string(truth.graph.n_vars()) +
                                                     " variables, series has " +
                                                     std::to_string(series.n_vars()));
        }
        return GeneratedData{std::move(series), std::move(truth), std::nullopt};
    }
    }
    throw Error(ErrorKind::InvalidConfig, "unknown dataset kind");
}

namespace {

using Clock = std::chrono::steady_clock;

double elapsed_ms(Clock::time_point since) {
    return std::chrono::duration<double, std::milli>(Clock::now() - since).count();
}

std::uint64_t seed_for(const ExperimentConfig& config, std::size_t index) {
    return config.base_seed + index;
}

fs::path seed_dir(const ExperimentConfig& config, std::size_t index) {
    return config.out_dir / ("seed_" + std::to_string(index));
}

std::string describe(const std::exception& e) { return e.what(); }

// Stages shared by the pipeline and every ablation branch.
struct Prepared {
    GeneratedData data;
    MultivariateSeries series; // normalized
    TrainedPredictor predictor;
};

Prepared prepare(const ExperimentConfig& config, std::uint64_t seed) {
    auto data = make_dataset(config.dataset, derive_seed(seed, "data"));
    auto series = normalize_minmax(data.series);
    auto pc = config.predictor;
    pc.seed = derive_seed(seed, "init");
    auto predictor = train(series, pc);
    return Prepared{std::move(data), std::move(series), std::move(predictor)};
}

// Runs `body(i)` for i in [0, count) on up to `threads` workers.
void parallel_for(std::size_t count, std::size_t threads, const std::function<void(std::size_t)>& body) {
    threads = std::max<std::size_t>(1, std::min(threads, count));
    if (threads == 1) {
        for (std::size_t i = 0; i < count; ++i) body(i);
        return;
    }
    std::atomic<std::size_t> next{0};
    std::vector<std::thread> pool;
    for (std::size_t w = 0; w < threads; ++w) {
        pool.emplace_back([&] {
            for (std::size_t i = next++; i < count; i = next++) body(i);
        });
    }
    for (auto& t : pool) t.join();
}

// Selection + evaluation on a given tensor; fills the seed row.
void select_and_score(const ExperimentConfig& config, const Prepared& prep,
                      const InfluenceTensor& tensor, std::size_t probe_passes, SeedRun& row,
                      Selection* selection_out = nullptr) {
    const std::size_t before = prep.predictor.forward_passes();
    auto sel = select_graph(prep.predictor, prep.series, tensor, config.selection);
    row.select_forward_passes = prep.predictor.forward_passes() - before;
    row.probe_forward_passes = probe_passes;
    row.qbic_evaluations = sel.trace.entries.size();
    row.report = evaluate_graph(sel.graph, prep.data.truth, config.include_self_loops);
    row.n_edges = sel.graph.size();
    row.trace = sel.trace;
    row.ok = true;
    if (selection_out) *selection_out = std::move(sel);
}

void persist_seed(const ExperimentConfig& config, std::size_t index, const Prepared& prep,
                  const ProbeResult& probe, const Selection& sel, const SeedRun& row) {
    const auto dir = seed_dir(config, index);
    fs::create_directories(dir);
    save_series_csv(prep.data.series, dir / "series.csv");
    save_truth_json(prep.data.truth, dir / "truth.json");
    save_predictor(prep.predictor, dir / "predictor.json");
    save_tensor(probe, config.clamp, dir / "tensor.bin", dir / "tensor.json");
    save_graph_json(sel.graph, dir / "graph.json");
    write_text_file(dir / "trace.csv", trace_csv(sel.trace));
    write_text_file(dir / "metrics.json", to_json(row.report).dump(2) + "\n");
}

void finish_report(RunReport& report) {
    report.aggregate = aggregate_seeds(report.seeds);
    report.success = std::any_of(report.seeds.begin(), report.seeds.end(),
                                 [](const SeedRun& s) { return s.ok; });
}

void persist_report(const ExperimentConfig& config, const RunReport& report, const std::string& stem) {
    if (config.out_dir.empty()) return;
    write_text_file(config.out_dir / (stem + ".json"),
                    to_json(report, config.record_timing).dump(2) + "\n");
    write_text_file(config.out_dir / (stem + ".csv"), report_csv(report, config.record_timing));
    write_text_file(config.out_dir / (stem + "_aggregate.csv"), aggregate_csv(report));
}

std::string csv_escape(const std::string& s) {
    if (s.find_first_of(",\"\n") == std::string::npos) return s;
    std::string out = "\"";
    for (char c : s) {
        if (c == '"') out += "\"\"";
        else if (c == '\n') out += ' ';
        else out += c;
    }
    return out + "\"";
}

MetricSummary summarize(const std::vector<double>& xs) {
    MetricSummary s;
    s.count = xs.size();
    if (xs.empty()) return s;
    s.mean = std::accumulate(xs.begin(), xs.end(), 0.0) / static_cast<double>(xs.size());
    if (xs.size() > 1) {
        double ss = 0.0;
        for (double x : xs) ss += (x - s.mean) * (x - s.mean);
        s.std = std::sqrt(ss / static_cast<double>(xs.size() - 1));
    }
    return s;
}

// Mirrors the early-stopping rule of select_graph on a full trace.
std::size_t early_stopped_argmin(const std::vector<std::pair<std::size_t, double>>& full,
                                 std::size_t patience) {
    double best = std::numeric_limits<double>::infinity();
    std::size_t since_best = 0;
    std::size_t stop = full.size();
    for (std::size_t k = 0; k < full.size(); ++k) {
        if (full[k].second < best) {
            best = full[k].second;
            since_best = 0;
        } else if (++since_best >= patience) {
            stop = k + 1;
            break;
        }
    }
    return conservative_argmin(std::span(full.data(), stop));
}

} // namespace

std::map<std::string, MetricSummary> aggregate_seeds(const std::vector<SeedRun>& seeds) {
    std::map<std::string, std::vector<double>> cols;
    for (const auto& s : seeds) {
        if (!s.ok) continue;
        const auto& r = s.report;
        cols["precision"].push_back(r.precision);
        cols["recall"].push_back(r.recall);
        cols["f1"].push_back(r.f1);
        cols["tpr"].push_back(r.tpr);
        cols["fdr"].push_back(r.fdr);
        cols["shd_raw"].push_back(static_cast<double>(r.shd_raw));
        cols["shd_normalized"].push_back(r.shd_normalized);
        if (r.pod) cols["pod"].push_back(*r.pod);
        cols["n_edges"].push_back(static_cast<double>(s.n_edges));
        cols["selected_m"].push_back(static_cast<double>(s.trace.selected_m));
    }
    std::map<std::string, MetricSummary> out;
    for (const auto& [k, v] : cols) out[k] = summarize(v);
    return out;
}

nlohmann::json to_json(const RunReport& report, bool include_timing) {
    nlohmann::json seeds = nlohmann::json::array();
    for (const auto& s : report.seeds) {
        nlohmann::json row{{"seed_index", s.seed_index}, {"seed", s.seed}, {"ok", s.ok}};
        if (!s.ok) {
            row["error"] = s.error;
        } else {
            row["metrics"] = to_json(s.report);
            nlohmann::json entries = nlohmann::json::array();
            for (const auto& [m, q] : s.trace.entries) entries.push_back({m, q});
            row["trace"] = {{"entries", entries},
                            {"selected_m", s.trace.selected_m},
                            {"lambda", s.trace.lambda},
                            {"n_valid", s.trace.n_valid}};
            row["n_edges"] = s.n_edges;
            row["probe_forward_passes"] = s.probe_forward_passes;
            row["select_forward_passes"] = s.select_forward_passes;
            row["qbic_evaluations"] = s.qbic_evaluations;
        }
        if (include_timing) row["runtime_ms"] = s.runtime_ms;
        seeds.push_back(std::move(row));
    }
    nlohmann::json agg = nlohmann::json::object();
    for (const auto& [k, v] : report.aggregate) {
        agg[k] = {{"mean", v.mean}, {"std", v.std}, {"count", v.count}};
    }
    return {{"name", report.name}, {"success", report.success}, {"seeds", seeds}, {"aggregate", agg}};
}

std::string report_csv(const RunReport& report, bool include_timing) {
    std::ostringstream os;
    os << "seed_index,seed,ok,precision,recall,f1,tpr,fdr,shd_raw,shd_normalized,pod,n_edges,"
          "selected_m,probe_forward_passes,select_forward_passes";
    if (include_timing) os << ",runtime_ms";
    os << ",error\n";
    for (const auto& s : report.seeds) {
        const auto& r = s.report;
        os << s.seed_index << ',' << s.seed << ',' << (s.ok ? 1 : 0) << ',';
        if (s.ok) {
            os << format_double(r.precision) << ',' << format_double(r.recall) << ','
               << format_double(r.f1) << ',' << format_double(r.tpr) << ',' << format_double(r.fdr)
               << ',' << r.shd_raw << ',' << format_double(r.shd_normalized) << ','
               << (r.pod ? format_double(*r.pod) : "") << ',' << s.n_edges << ','
               << s.trace.selected_m << ',' << s.probe_forward_passes << ','
               << s.select_forward_passes;
        } else {
            os << ",,,,,,,,,,,";
        }
        if (include_timing) os << ',' << format_double(s.runtime_ms);
        os << ',' << csv_escape(s.error) << '\n';
    }
    return os.str();
}

std::string aggregate_csv(const RunReport& report) {
    std::string out = "metric,mean,std,count\n";
    for (const auto& [k, v] : report.aggregate) {
        out += k + "," + format_double(v.mean) + "," + format_double(v.std) + "," +
               std::to_string(v.count) + "\n";
    }
    return out;
}

std::string trace_csv(const QbicTrace& trace) {
    std::string out = "m,qbic\n";
    for (const auto& [m, q] : trace.entries) out += std::to_string(m) + "," + format_double(q) + "\n";
    return out;
}

RunReport run_pipeline(const ExperimentConfig& config) {
    config.validate();
    RunReport report;
    report.name = config.name;
    report.seeds.resize(config.n_seeds);
    parallel_for(config.n_seeds, config.threads, [&](std::size_t k) {
        auto& row = report.seeds[k];
        row.seed_index = k;
        row.seed = seed_for(config, k);
        const auto start = Clock::now();
        try {
            const auto prep = prepare(config, row.seed);
            prep.predictor.reset_forward_passes();
            const auto probe = influence_tensor(prep.predictor, prep.series, config.clamp);
            Selection sel{TemporalGraph(prep.series.n_vars()), {}, {}};
            select_and_score(config, prep, probe.tensor, prep.predictor.forward_passes(), row, &sel);
            row.runtime_ms = elapsed_ms(start);
            if (!config.out_dir.empty()) persist_seed(config, k, prep, probe, sel, row);
        } catch (const std::exception& e) {
            row.ok = false;
            row.error = describe(e);
            row.runtime_ms = elapsed_ms(start);
        }
    });
    finish_report(report);
    persist_report(config, report, "report");
    return report;
}

PermutationAblation ablate_permuted_signal(const ExperimentConfig& config) {
    config.validate();
    PermutationAblation out;
    out.original.name = config.name;
    out.permuted.name = config.name + "-permuted";
    out.original.seeds.resize(config.n_seeds);
    out.permuted.seeds.resize(config.n_seeds);
    parallel_for(config.n_seeds, config.threads, [&](std::size_t k) {
        auto& a = out.original.seeds[k];
        auto& b = out.permuted.seeds[k];
        a.seed_index = b.seed_index = k;
        a.seed = b.seed = seed_for(config, k);
        try {
            const auto prep = prepare(config, a.seed);
            prep.predictor.reset_forward_passes();
            const auto probe = influence_tensor(prep.predictor, prep.series, config.clamp);
            const std::size_t probe_passes = prep.predictor.forward_passes();
            select_and_score(config, prep, probe.tensor, probe_passes, a);
            const auto shuffled = permute_tensor(probe.tensor, derive_seed(a.seed, "permute"));
            select_and_score(config, prep, shuffled, probe_passes, b);
        } catch (const std::exception& e) {
            for (auto* r : {&a, &b}) {
                if (!r->ok) r->error = describe(e);
            }
        }
    });
    finish_report(out.original);
    finish_report(out.permuted);
    for (std::size_t k = 0; k < config.n_seeds; ++k) {
        if (out.original.seeds[k].ok && out.permuted.seeds[k].ok) {
            out.f1_delta.push_back(out.original.seeds[k].report.f1 - out.permuted.seeds[k].report.f1);
        }
    }
    persist_report(config, out.original, "permutation_original");
    persist_report(config, out.permuted, "permutation_permuted");
    return out;
}

std::vector<ClampSweepRow> ablate_clamp_sweep(const ExperimentConfig& config,
                                              const std::vector<double>& grid) {
    config.validate();
    if (grid.empty()) throw Error(ErrorKind::InvalidConfig, "clamp grid is empty");
    for (double x : grid) {
        if (!(x >= 0.0 && x <= 1.0)) {
            throw Error(ErrorKind::InvalidConfig, "clamp grid value " + format_double(x) + " outside [0, 1]");
        }
    }
    std::vector<ClampSweepRow> rows(config.n_seeds * grid.size());
    parallel_for(config.n_seeds, config.threads, [&](std::size_t k) {
        const auto seed = seed_for(config, k);
        for (std::size_t g = 0; g < grid.size(); ++g) {
            auto& row = rows[k * grid.size() + g];
            row.seed_index = k;
            row.clamp_value = grid[g];
        }
        try {
            // Training does not depend on the clamp, so one predictor serves
            // every grid point of the seed.
            const auto prep = prepare(config, seed);
            for (std::size_t g = 0; g < grid.size(); ++g) {
                auto& row = rows[k * grid.size() + g];
                auto policy = config.clamp;
                policy.mode = ClampMode::Fixed;
                policy.fixed_value = grid[g];
                const auto probe = influence_tensor(prep.predictor, prep.series, policy);
                const auto sel = select_graph(prep.predictor, prep.series, probe.tensor, config.selection);
                row.report = evaluate_graph(sel.graph, prep.data.truth, config.include_self_loops);
                row.selected_m = sel.trace.selected_m;
                row.ok = true;
            }
        } catch (const std::exception&) {
            // rows of this seed stay ok = false
        }
    });
    if (!config.out_dir.empty()) write_text_file(config.out_dir / "clamp_sweep.csv", clamp_sweep_csv(rows));
    return rows;
}

QbicCorrelationSummary ablate_qbic_correlation(const ExperimentConfig& config) {
    config.validate();
    QbicCorrelationSummary out;
    out.rows.resize(config.n_seeds);
    parallel_for(config.n_seeds, config.threads, [&](std::size_t k) {
        auto& row = out.rows[k];
        row.seed_index = k;
        try {
            const auto prep = prepare(config, seed_for(config, k));
            const auto probe = influence_tensor(prep.predictor, prep.series, config.clamp);
            auto options = config.selection;
            options.patience = std::numeric_limits<std::size_t>::max();
            const auto sel = select_graph(prep.predictor, prep.series, probe.tensor, options);
            row.qbic = sel.trace.entries;
            std::vector<double> q;
            for (const auto& [m, value] : row.qbic) {
                const auto g = prefix_graph(prep.series.n_vars(), sel.candidates, m);
                row.f1.push_back(evaluate_graph(g, prep.data.truth, config.include_self_loops).f1);
                q.push_back(value);
            }
            for (auto kind : {CorrelationKind::Pearson, CorrelationKind::Spearman}) {
                try {
                    const double r = correlation(q, row.f1, kind);
                    (kind == CorrelationKind::Pearson ? row.pearson : row.spearman) = r;
                } catch (const Error&) {
                    // undefined (constant or too short trace): reported as missing
                }
            }
            row.selected_m = early_stopped_argmin(row.qbic, config.selection.patience);
            const double max_f1 = row.f1.empty() ? 0.0 : *std::max_element(row.f1.begin(), row.f1.end());
            const double sel_f1 = row.selected_m == 0 ? 0.0 : row.f1[row.selected_m - 1];
            row.f1_ratio = max_f1 == 0.0 ? 1.0 : sel_f1 / max_f1;
            row.ok = true;
        } catch (const std::exception& e) {
            row.error = describe(e);
        }
    });
    std::vector<double> pear, spear, ratio;
    for (const auto& r : out.rows) {
        if (!r.ok) continue;
        ratio.push_back(r.f1_ratio);
        if (r.pearson) {
            pear.push_back(*r.pearson);
            if (*r.pearson < 0.0) ++out.negative_pearson_count;
        }
        if (r.spearman) spear.push_back(*r.spearman);
    }
    if (!pear.empty()) out.mean_pearson = summarize(pear).mean;
    if (!spear.empty()) out.mean_spearman = summarize(spear).mean;
    out.mean_f1_ratio = summarize(ratio).mean;
    if (!config.out_dir.empty()) {
        write_text_file(config.out_dir / "qbic_correlation.csv", qbic_correlation_csv(out));
        std::string traces = "seed_index,m,qbic,f1\n";
        for (const auto& r : out.rows) {
            for (std::size_t k = 0; k < r.qbic.size(); ++k) {
                traces += std::to_string(r.seed_index) + "," + std::to_string(r.qbic[k].first) + "," +
                          format_double(r.qbic[k].second) + "," + format_double(r.f1[k]) + "\n";
            }
        }
        write_text_file(config.out_dir / "qbic_traces.csv", traces);
    }
    return out;
}

std::vector<BenchRow> bench_runtime(const ExperimentConfig& base,
                                    const std::vector<std::size_t>& n_vars_grid,
                                    std::size_t repeats) {
    base.validate();
    if (n_vars_grid.empty()) throw Error(ErrorKind::InvalidConfig, "bench grid is empty");
    if (repeats < 1) throw Error(ErrorKind::InvalidConfig, "repeats must be >= 1");
    std::vector<BenchRow> rows;
    for (std::size_t n : n_vars_grid) {
        if (n < 2) throw Error(ErrorKind::InvalidConfig, "bench needs N >= 2");
        auto config = base;
        config.dataset.kind = DatasetKind::LinearVar;
        config.dataset.n_vars = n;
        config.dataset.n_cross_edges = std::min(n, n * (n - 1) / 2);
        BenchRow row;
        row.n_vars = n;
        row.repeats = repeats;
        std::vector<double> ms;
        std::vector<double> evals;
        for (std::size_t r = 0; r < repeats; ++r) {
            const auto prep = prepare(config, seed_for(config, r));
            prep.predictor.reset_forward_passes();
            const auto start = Clock::now();
            const auto probe = influence_tensor(prep.predictor, prep.series, config.clamp);
            const auto sel = select_graph(prep.predictor, prep.series, probe.tensor, config.selection);
            ms.push_back(elapsed_ms(start));
            const std::size_t passes = prep.predictor.forward_passes();
            const std::size_t m = sel.trace.entries.size();
            row.forward_passes.push_back(passes);
            row.qbic_evaluations.push_back(m);
            evals.push_back(static_cast<double>(m));
            if (passes != n + 1 + m) row.counts_match = false;
        }
        const auto s = summarize(ms);
        row.mean_ms = s.mean;
        row.std_ms = s.std;
        row.mean_qbic_evaluations = summarize(evals).mean;
        rows.push_back(std::move(row));
    }
    if (!base.out_dir.empty()) write_text_file(base.out_dir / "bench.csv", bench_csv(rows));
    return rows;
}

std::string clamp_sweep_csv(const std::vector<ClampSweepRow>& rows) {
    std::string out = "seed_index,clamp_value,ok,f1,pod,shd_raw,selected_m\n";
    for (const auto& r : rows) {
        out += std::to_string(r.seed_index) + "," + format_double(r.clamp_value) + "," +
               (r.ok ? "1" : "0") + ",";
        if (r.ok) {
            out += format_double(r.report.f1) + "," + (r.report.pod ? format_double(*r.report.pod) : "") +
                   "," + std::to_string(r.report.shd_raw) + "," + std::to_string(r.selected_m);
        } else {
            out += ",,,";
        }
        out += "\n";
    }
    return out;
}

std::string qbic_correlation_csv(const QbicCorrelationSummary& summary) {
    std::string out = "seed_index,ok,pearson,spearman,selected_m,f1_ratio\n";
    auto opt = [](const std::optional<double>& v) { return v ? format_double(*v) : std::string(); };
    for (const auto& r : summary.rows) {
        out += std::to_string(r.seed_index) + "," + (r.ok ? "1" : "0") + "," + opt(r.pearson) + "," +
               opt(r.spearman) + "," + std::to_string(r.selected_m) + "," +
               (r.ok ? format_double(r.f1_ratio) : "") + "\n";
    }
    out += "mean,," + opt(summary.mean_pearson) + "," + opt(summary.mean_spearman) + ",," +
           format_double(summary.mean_f1_ratio) + "\n";
    return out;
}

std::string bench_csv(const std::vector<BenchRow>& rows) {
    std::string out = "n_vars,repeats,mean_ms,std_ms,mean_qbic_evaluations,forward_passes,counts_match\n";
    for (const auto& r : rows) {
        std::string passes;
        for (std::size_t k = 0; k < r.forward_passes.size(); ++k) {
            if (k) passes += ' ';
            passes += std::to_string(r.forward_passes[k]);
        }
        out += std::to_string(r.n_vars) + "," + std::to_string(r.repeats) + "," + format_double(r.mean_ms) +
               "," + format_double(r.std_ms) + "," + format_double(r.mean_qbic_evaluations) + "," +
               passes + "," + (r.counts_match ? "1" : "0") + "\n";
    }
    return out;
}

} // namespace cinsight
