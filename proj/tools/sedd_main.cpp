// Copyright (c) 2025 SEDD Profiler Authors
// SPDX-License-Identifier: Apache-2.0
//
// Command-line front end: ingest-check, train, profile, benchmark,
// probe-layers, visualize, sweep.

#include <CLI11.hpp>
#include <fstream>
#include <iostream>
#include <sstream>

#include "sedd/bench.hpp"
#include "sedd/model_state.hpp"
#include "sedd/runconfig.hpp"
#include "sedd/viz.hpp"

namespace {

using namespace sedd;

struct CommonArgs {
    std::string config_path;
    std::vector<std::string> manifests;
    std::string out_dir;
    int64_t seed = -1;
    bool deterministic = false;
    std::string split_ratios;
};

void add_common(CLI::App* cmd, CommonArgs& args) {
    cmd->add_option("--config", args.config_path, "JSON run configuration file");
    cmd->add_option("--manifest", args.manifests, "dataset manifest (repeatable)");
    cmd->add_option("--out-dir", args.out_dir, "output directory for run artifacts");
    cmd->add_option("--seed", args.seed, "run seed");
    cmd->add_flag("--deterministic", args.deterministic,
                  "record and require deterministic replay");
    cmd->add_option("--split-ratios", args.split_ratios,
                    "train,val,test ratios (e.g. 0.6,0.2,0.2)");
}

RunConfig resolve_config(const CommonArgs& args) {
    RunConfig cfg;
    if (!args.config_path.empty()) cfg = load_runconfig(args.config_path);
    if (!args.manifests.empty()) cfg.manifests = args.manifests;
    if (!args.out_dir.empty()) cfg.out_dir = args.out_dir;
    if (args.seed >= 0) {
        cfg.seed = static_cast<uint64_t>(args.seed);
        cfg.train.seed = cfg.seed;
    }
    if (args.deterministic) cfg.deterministic = true;
    if (!args.split_ratios.empty()) {
        double r[3];
        if (std::sscanf(args.split_ratios.c_str(), "%lf,%lf,%lf", &r[0], &r[1], &r[2]) != 3)
            throw ValidationError("--split-ratios expects three comma-separated values");
        cfg.split_ratios = {r[0], r[1], r[2]};
    }
    return cfg;
}

void write_config_snapshot(const RunConfig& cfg) {
    std::filesystem::create_directories(cfg.out_dir);
    std::ofstream out(std::filesystem::path(cfg.out_dir) / "run_config.json");
    nlohmann::json j = to_json(cfg);
    j["config_hash"] = cfg.config_hash();
    out << j.dump(2) << "\n";
}

std::vector<int> parse_int_list(const std::string& csv, const char* what) {
    std::vector<int> out;
    std::stringstream ss(csv);
    std::string tok;
    while (std::getline(ss, tok, ','))
        if (!tok.empty()) out.push_back(std::stoi(tok));
    if (out.empty()) throw ValidationError(std::string(what) + " list is empty");
    return out;
}

std::vector<double> parse_double_list(const std::string& csv, const char* what) {
    std::vector<double> out;
    std::stringstream ss(csv);
    std::string tok;
    while (std::getline(ss, tok, ','))
        if (!tok.empty()) out.push_back(std::stod(tok));
    if (out.empty()) throw ValidationError(std::string(what) + " list is empty");
    return out;
}

int cmd_ingest_check(const CommonArgs& common, bool decode_all) {
    RunConfig cfg = resolve_config(common);
    LoadedData data = load_and_split(cfg);
    size_t total = 0, decoded = 0;
    for (const auto& m : data.manifests) {
        size_t train_n = records_in_split(m, Split::kTrain).size();
        size_t val_n = records_in_split(m, Split::kVal).size();
        size_t test_n = records_in_split(m, Split::kTest).size();
        std::cout << m.dataset_id << ": label=" << m.class_label
                  << " realism=" << to_string(m.realism) << " records=" << m.records.size()
                  << " splits=" << train_n << "/" << val_n << "/" << test_n << "\n";
        total += m.records.size();
        if (decode_all) {
            for (const auto& rec : m.records) {
                Tensor t = decode_and_preprocess(rec, cfg.preprocess);
                if (!all_finite(t))
                    throw ValidationError("non-finite pixels after preprocessing: " + rec.path);
                ++decoded;
            }
        }
    }
    std::cout << "ok: " << data.manifests.size() << " manifests, " << total << " records";
    if (decode_all) std::cout << ", " << decoded << " decoded";
    std::cout << "\n";
    return 0;
}

int cmd_train(const CommonArgs& common, const std::string& out_ckpt) {
    RunConfig cfg = resolve_config(common);
    write_config_snapshot(cfg);
    LoadedData data = load_and_split(cfg);
    TrainResult result = train(data.manifests, cfg.train, cfg.pipeline_config(),
                               data.registry, cfg.out_dir, cfg.config_hash());
    if (!out_ckpt.empty() && out_ckpt != result.checkpoint_path.string()) {
        std::filesystem::path dst(out_ckpt);
        if (dst.has_parent_path()) std::filesystem::create_directories(dst.parent_path());
        std::filesystem::copy_file(result.checkpoint_path, dst,
                                   std::filesystem::copy_options::overwrite_existing);
        result.checkpoint_path = dst;
    }
    std::cout << "checkpoint: " << result.checkpoint_path.string() << "\n"
              << "log: " << result.log_path.string() << "\n"
              << "reference: " << result.reference_path.string() << "\n";
    if (!result.log.empty())
        std::cout << "final total loss: " << result.log.back().total << "\n";
    return 0;
}

int cmd_profile(const CommonArgs& common, const std::string& checkpoint,
                const std::string& reference, const std::string& manifest_path,
                const std::string& out, const std::string& split, double sigma) {
    RunConfig cfg = resolve_config(common);
    if (sigma > 0.0) cfg.kernel.bandwidth = sigma;
    LabelRegistry scratch;
    DatasetManifest m = load_manifest(manifest_path, scratch);
    const Split eval = split == "all" ? Split::kUnassigned : split_from_string(split);
    if (eval != Split::kUnassigned) {
        bool any = false;
        for (const auto& r : m.records) any |= r.split == eval;
        if (!any) m = split_records(m, cfg.split_ratios, cfg.seed);
    }
    ModelState model = ModelState::load(checkpoint);
    SEDDReport report = profile_dataset(m, load_reference(reference), model, cfg.kernel, eval);
    if (report.config_hash.empty()) report.config_hash = cfg.config_hash();
    report.save(out);
    std::cout << "report: " << out << "\n"
              << "sedd1=" << report.sedd1;
    if (report.sedd2) std::cout << " sedd2=" << *report.sedd2;
    std::cout << " (m=" << report.m << ", n=" << report.n << ")\n";
    return 0;
}

int cmd_benchmark(const CommonArgs& common, const std::string& checkpoint,
                  const std::string& eval_split) {
    RunConfig cfg = resolve_config(common);
    if (!checkpoint.empty()) cfg.checkpoint = checkpoint;
    if (!eval_split.empty()) cfg.eval_split = eval_split;
    write_config_snapshot(cfg);
    BenchmarkResult result = run_benchmark(cfg);
    std::ifstream table(result.table_txt);
    std::cout << table.rdbuf();
    std::cout << "table: " << result.table_csv.string() << "\n";
    return result.any_failed ? 2 : 0;
}

int cmd_probe_layers(const CommonArgs& common, const std::string& layers_csv,
                     int sample_per_dataset) {
    RunConfig cfg = resolve_config(common);
    write_config_snapshot(cfg);
    LoadedData data = load_and_split(cfg);
    std::vector<ImageRecord> sample;
    for (const auto& m : data.manifests) {
        int taken = 0;
        for (const auto& rec : m.records) {
            if (taken++ >= sample_per_dataset) break;
            sample.push_back(rec);
        }
    }
    auto files = probe_layers(sample, parse_int_list(layers_csv, "layers"), cfg.backbone,
                              cfg.preprocess, cfg.out_dir);
    for (const auto& f : files) std::cout << "probe file: " << f.string() << "\n";
    return 0;
}

int cmd_visualize(const CommonArgs& common, const std::vector<std::string>& embedding_files,
                  int cap, double perplexity, int iterations) {
    RunConfig cfg = resolve_config(common);
    if (embedding_files.empty())
        throw ValidationError("visualize needs at least one --embeddings file");
    TsneParams params;
    params.perplexity = perplexity;
    params.iterations = iterations;
    std::vector<std::filesystem::path> files(embedding_files.begin(), embedding_files.end());
    VisualizeResult result =
        run_visualize(files, cap, cfg.seed, cfg.out_dir, params, cfg.config_hash());
    std::cout << "plot: " << result.plot_path.string() << "\n"
              << "coordinates: " << result.coords_path.string() << " (" << result.points
              << " points)\n";
    return 0;
}

int cmd_sweep(const CommonArgs& common, const std::string& tau_csv,
              const std::string& lambda_csv) {
    RunConfig cfg = resolve_config(common);
    write_config_snapshot(cfg);
    SweepResult result = run_hyperparameter_sweep(cfg, parse_double_list(tau_csv, "tau"),
                                                  parse_double_list(lambda_csv, "lambda"));
    std::ifstream table(result.table_txt);
    std::cout << table.rdbuf();
    std::cout << "table: " << result.csv_path.string() << "\n";
    for (const auto& cell : result.cells)
        if (cell.failed) return 2;
    return 0;
}

}  // namespace

int main(int argc, char** argv) {
    CLI::App app{"style-embedding profiler for synthetic-to-real dataset gaps"};
    app.require_subcommand(1);

    CommonArgs common;

    auto* ingest = app.add_subcommand("ingest-check", "validate manifests and preprocessing");
    add_common(ingest, common);
    bool no_decode = false;
    ingest->add_flag("--no-decode", no_decode, "skip decoding every image");

    auto* train_cmd = app.add_subcommand("train", "train the style embedding model");
    add_common(train_cmd, common);
    std::string out_ckpt;
    train_cmd->add_option("--out", out_ckpt, "checkpoint destination path");

    auto* profile = app.add_subcommand("profile", "score one dataset against a reference");
    add_common(profile, common);
    std::string ckpt, reference, manifest_path, report_out = "report.json", split = "all";
    double sigma = -1.0;
    profile->add_option("--checkpoint", ckpt)->required();
    profile->add_option("--reference", reference, "reference embeddings (.tsv) or stats (.json)")
        ->required();
    profile->add_option("--manifest-file", manifest_path, "manifest of the dataset to profile");
    profile->add_option("--out", report_out, "report destination (JSON)");
    profile->add_option("--split", split, "train|val|test|all");
    profile->add_option("--sigma", sigma, "kernel bandwidth override");

    auto* benchmark = app.add_subcommand("benchmark", "train/load and score every dataset");
    add_common(benchmark, common);
    std::string bench_ckpt, bench_split;
    benchmark->add_option("--checkpoint", bench_ckpt, "reuse an existing checkpoint");
    benchmark->add_option("--eval-split", bench_split, "train|val|test|all");

    auto* probe = app.add_subcommand("probe-layers", "dump per-stage flattened features");
    add_common(probe, common);
    std::string layers = "1,4";
    int sample_per_dataset = 30;
    probe->add_option("--layers", layers, "comma-separated stage indices");
    probe->add_option("--sample-per-dataset", sample_per_dataset);

    auto* visualize = app.add_subcommand("visualize", "t-SNE plot of embedding files");
    add_common(visualize, common);
    std::vector<std::string> embedding_files;
    int cap = 1000, tsne_iters = 1000;
    double perplexity = 30.0;
    visualize->add_option("--embeddings", embedding_files, "embedding table (repeatable)");
    visualize->add_option("--cap", cap, "max points per dataset");
    visualize->add_option("--perplexity", perplexity);
    visualize->add_option("--iterations", tsne_iters);

    auto* sweep = app.add_subcommand("sweep", "tau x lambda hyperparameter grid");
    add_common(sweep, common);
    std::string tau_grid = "0.010,0.015,0.030", lambda_grid = "0.2,0.5,1.0";
    sweep->add_option("--tau", tau_grid, "comma-separated tau grid");
    sweep->add_option("--lambda", lambda_grid, "comma-separated lambda grid");

    CLI11_PARSE(app, argc, argv);

    try {
        if (ingest->parsed()) return cmd_ingest_check(common, !no_decode);
        if (train_cmd->parsed()) return cmd_train(common, out_ckpt);
        if (profile->parsed()) {
            if (manifest_path.empty() && !common.manifests.empty())
                manifest_path = common.manifests.front();
            if (manifest_path.empty())
                throw ValidationError("profile needs --manifest-file (or --manifest)");
            return cmd_profile(common, ckpt, reference, manifest_path, report_out, split,
                               sigma);
        }
        if (benchmark->parsed()) return cmd_benchmark(common, bench_ckpt, bench_split);
        if (probe->parsed()) return cmd_probe_layers(common, layers, sample_per_dataset);
        if (visualize->parsed())
            return cmd_visualize(common, embedding_files, cap, perplexity, tsne_iters);
        if (sweep->parsed()) return cmd_sweep(common, tau_grid, lambda_grid);
    } catch (const ValidationError& e) {
        std::cerr << "validation error: " << e.what() << "\n";
        return 1;
    } catch (const ParseError& e) {
        std::cerr << "parse error: " << e.what() << "\n";
        return 1;
    } catch (const ConfigError& e) {
        std::cerr << "config error: " << e.what() << "\n";
        return 1;
    } catch (const Error& e) {
        std::cerr << "error: " << e.what() << "\n";
        return 2;
    } catch (const std::exception& e) {
        std::cerr << "error: " << e.what() << "\n";
        return 2;
    }
    return 0;
}
