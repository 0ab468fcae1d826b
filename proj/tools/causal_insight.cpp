#include "cinsight/error.hpp"
#include "cinsight/harness.hpp"
#include "cinsight/io.hpp"
#include "cinsight/rng.hpp"

#include <cstdio>
#include <iostream>
#include <optional>
#include <string>
#include <vector>

#include <CLI11.hpp>

namespace fs = std::filesystem;
using namespace cinsight;

namespace {

struct Common {
    std::string config_path;
    std::optional<std::uint64_t> seed;
    std::optional<std::string> out;
    std::optional<double> lambda;

    void attach(CLI::App* cmd, bool config_required = true) {
        auto* opt = cmd->add_option("--config", config_path, "experiment config file");
        if (config_required) opt->required();
        cmd->add_option("--seed", seed, "override the base seed");
        cmd->add_option("--out", out, "override the output directory");
        cmd->add_option("--lambda", lambda, "override the Qbic penalty weight");
    }

    ExperimentConfig load() const {
        ExperimentConfig c = config_path.empty() ? ExperimentConfig{} : load_experiment_config(config_path);
        if (seed) c.base_seed = *seed;
        if (out) c.out_dir = *out;
        if (lambda) c.selection.lambda = *lambda;
        c.validate();
        return c;
    }
};

fs::path out_dir_or_cwd(const ExperimentConfig& c) { return c.out_dir.empty() ? fs::path(".") : c.out_dir; }

MultivariateSeries normalized_for(const TrainedPredictor& p, const MultivariateSeries& raw) {
    if (!p.input_norm()) return raw;
    return apply_normalization(raw, *p.input_norm());
}

void print_report(const RunReport& r) {
    for (const auto& s : r.seeds) {
        if (s.ok) {
            std::printf("seed %zu: f1=%.4f pod=%s shd=%zu edges=%zu\n", s.seed_index, s.report.f1,
                        s.report.pod ? format_double(*s.report.pod).c_str() : "-", s.report.shd_raw,
                        s.n_edges);
        } else {
            std::printf("seed %zu: failed (%s)\n", s.seed_index, s.error.c_str());
        }
    }
    for (const auto& [k, v] : r.aggregate) {
        std::printf("%s: %.4f +- %.4f (n=%zu)\n", k.c_str(), v.mean, v.std, v.count);
    }
}

bool all_ok(const RunReport& r) {
    for (const auto& s : r.seeds) {
        if (!s.ok) return false;
    }
    return !r.seeds.empty();
}

std::vector<double> parse_doubles(const std::string& s) {
    std::vector<double> out;
    std::size_t pos = 0;
    while (pos <= s.size()) {
        const auto comma = s.find(',', pos);
        const auto item = s.substr(pos, comma == std::string::npos ? std::string::npos : comma - pos);
        try {
            out.push_back(std::stod(item));
        } catch (const std::exception&) {
            throw Error(ErrorKind::InvalidConfig, "bad number '" + item + "' in grid");
        }
        if (comma == std::string::npos) break;
        pos = comma + 1;
    }
    return out;
}

} // namespace

int main(int argc, char** argv) {
    CLI::App app{"Causal discovery by probing a causally masked predictor"};
    app.require_subcommand(1);

    Common common;
    int exit_code = 0;

    auto* gen = app.add_subcommand("generate", "write a synthetic series and its ground truth");
    common.attach(gen);

    auto* trn = app.add_subcommand("train", "train the masked predictor on a series CSV");
    common.attach(trn);
    std::string series_path;
    trn->add_option("--series", series_path, "series CSV (raw values)")->required();

    auto* prb = app.add_subcommand("probe", "compute the influence tensor");
    common.attach(prb);
    std::string predictor_path;
    prb->add_option("--series", series_path, "series CSV")->required();
    prb->add_option("--predictor", predictor_path, "trained predictor JSON")->required();

    auto* sel = app.add_subcommand("select", "rank candidates and select a graph with Qbic");
    common.attach(sel);
    std::string tensor_path;
    std::string tensor_meta;
    sel->add_option("--series", series_path, "series CSV")->required();
    sel->add_option("--predictor", predictor_path, "trained predictor JSON")->required();
    sel->add_option("--tensor", tensor_path, "influence tensor binary")->required();
    sel->add_option("--tensor-meta", tensor_meta, "tensor JSON sidecar");

    auto* evl = app.add_subcommand("evaluate", "score a graph against ground truth");
    common.attach(evl, false);
    std::string graph_path;
    std::string truth_path;
    bool no_self_loops = false;
    evl->add_option("--graph", graph_path, "predicted graph JSON")->required();
    evl->add_option("--truth", truth_path, "ground-truth JSON")->required();
    evl->add_flag("--no-self-loops", no_self_loops, "drop self-loops from both graphs");

    auto* abl = app.add_subcommand("ablate", "run an ablation study");
    common.attach(abl);
    std::string kind = "permute";
    std::string grid = "0,0.25,0.5,0.75,1";
    abl->add_option("--kind", kind, "permute | clamp | qbic")
        ->check(CLI::IsMember({"permute", "clamp", "qbic"}));
    abl->add_option("--grid", grid, "comma-separated clamp values for --kind clamp");

    auto* bch = app.add_subcommand("bench", "time probing + selection for several N");
    common.attach(bch);
    std::string n_grid = "5,10,20";
    std::size_t repeats = 3;
    bch->add_option("--grid", n_grid, "comma-separated variable counts");
    bch->add_option("--repeats", repeats, "series per N");

    auto* run = app.add_subcommand("run", "full pipeline over all seeds");
    common.attach(run);

    CLI11_PARSE(app, argc, argv);

    try {
        if (gen->parsed()) {
            const auto c = common.load();
            const auto data = make_dataset(c.dataset, derive_seed(c.base_seed, "data"));
            const auto dir = out_dir_or_cwd(c);
            save_series_csv(data.series, dir / (c.name + "_series.csv"));
            save_truth_json(data.truth, dir / (c.name + "_truth.json"));
            std::printf("wrote %s and %s\n", (dir / (c.name + "_series.csv")).c_str(),
                        (dir / (c.name + "_truth.json")).c_str());
        } else if (trn->parsed()) {
            const auto c = common.load();
            auto pc = c.predictor;
            pc.seed = derive_seed(c.base_seed, "init");
            const auto p = train(normalize_minmax(load_series_csv(series_path)), pc);
            const auto path = out_dir_or_cwd(c) / "predictor.json";
            save_predictor(p, path);
            std::printf("final loss %.6g after %zu epochs, wrote %s\n", p.final_loss(),
                        p.epoch_losses().size(), path.c_str());
        } else if (prb->parsed()) {
            const auto c = common.load();
            const auto p = load_predictor(predictor_path);
            const auto series = normalized_for(p, load_series_csv(series_path));
            const auto probe = influence_tensor(p, series, c.clamp, c.threads);
            const auto dir = out_dir_or_cwd(c);
            save_tensor(probe, c.clamp, dir / "tensor.bin", dir / "tensor.json");
            std::printf("%zu forward passes, wrote %s\n", p.forward_passes(), (dir / "tensor.bin").c_str());
        } else if (sel->parsed()) {
            const auto c = common.load();
            const auto p = load_predictor(predictor_path);
            const auto series = normalized_for(p, load_series_csv(series_path));
            const auto tensor = load_tensor(
                tensor_path, tensor_meta.empty() ? std::nullopt : std::optional<fs::path>(tensor_meta));
            const auto s = select_graph(p, series, tensor, c.selection);
            const auto dir = out_dir_or_cwd(c);
            save_graph_json(s.graph, dir / "graph.json");
            write_text_file(dir / "trace.csv", trace_csv(s.trace));
            std::printf("selected m=%zu of %zu candidates, wrote %s\n", s.trace.selected_m,
                        s.candidates.size(), (dir / "graph.json").c_str());
        } else if (evl->parsed()) {
            const auto c = common.load();
            const auto r = evaluate_graph(load_graph_json(graph_path), load_truth_json(truth_path),
                                          !no_self_loops && c.include_self_loops);
            const auto dir = out_dir_or_cwd(c);
            write_text_file(dir / "metrics.json", to_json(r).dump(2) + "\n");
            write_text_file(dir / "metrics.csv",
                            "precision,recall,f1,tpr,fdr,shd_raw,shd_normalized,pod\n" +
                                format_double(r.precision) + "," + format_double(r.recall) + "," +
                                format_double(r.f1) + "," + format_double(r.tpr) + "," +
                                format_double(r.fdr) + "," + std::to_string(r.shd_raw) + "," +
                                format_double(r.shd_normalized) + "," +
                                (r.pod ? format_double(*r.pod) : "") + "\n");
            std::printf("f1=%.4f precision=%.4f recall=%.4f shd=%zu pod=%s\n", r.f1, r.precision,
                        r.recall, r.shd_raw, r.pod ? format_double(*r.pod).c_str() : "-");
        } else if (abl->parsed()) {
            const auto c = common.load();
            if (kind == "permute") {
                const auto a = ablate_permuted_signal(c);
                std::printf("original:\n");
                print_report(a.original);
                std::printf("permuted:\n");
                print_report(a.permuted);
                if (!all_ok(a.original) || !all_ok(a.permuted)) exit_code = 1;
            } else if (kind == "clamp") {
                const auto rows = ablate_clamp_sweep(c, parse_doubles(grid));
                std::fputs(clamp_sweep_csv(rows).c_str(), stdout);
                for (const auto& r : rows) {
                    if (!r.ok) exit_code = 1;
                }
            } else {
                const auto s = ablate_qbic_correlation(c);
                std::fputs(qbic_correlation_csv(s).c_str(), stdout);
                for (const auto& r : s.rows) {
                    if (!r.ok) exit_code = 1;
                }
            }
        } else if (bch->parsed()) {
            const auto c = common.load();
            std::vector<std::size_t> ns;
            for (double v : parse_doubles(n_grid)) ns.push_back(static_cast<std::size_t>(v));
            const auto rows = bench_runtime(c, ns, repeats);
            std::fputs(bench_csv(rows).c_str(), stdout);
            for (const auto& r : rows) {
                if (!r.counts_match) exit_code = 1;
            }
        } else if (run->parsed()) {
            const auto c = common.load();
            const auto r = run_pipeline(c);
            print_report(r);
            if (!all_ok(r)) exit_code = 1;
        }
    } catch (const std::exception& e) {
        std::fprintf(stderr, "error: %s\n", e.what());
        return 1;
    }
    return exit_code;
}
