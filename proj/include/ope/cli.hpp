#pragma once

#include <filesystem>
#include <iostream>
#include <optional>
#include <string>

#include "ope/config.hpp"
#include "ope/errors.hpp"
#include "ope/eval.hpp"
#include "ope/io.hpp"
#include "ope/train.hpp"

namespace ope::cli {

/// Optional command-line overrides applied on top of the config file.
struct Overrides {
    std::optional<std::uint64_t> seed;
    std::optional<std::string> out_dir;

    RunConfig apply(RunConfig cfg) const {
        if (seed) cfg.seed = *seed;
        if (out_dir) cfg.output_dir = *out_dir;
        return cfg;
    }
};

inline std::filesystem::path ensure_out_dir(const std::string& dir) {
    std::filesystem::path p(dir);
    std::filesystem::create_directories(p);
    return p;
}

/// train: run the configured loop, write checkpoint.json + train_log.jsonl.
/// Returns the checkpoint path. A run aborted by a non-finite loss still
/// writes the last-good checkpoint, then throws.
inline std::string cmd_train(const std::string& config_path, const Overrides& ov = {}) {
    RunConfig cfg = ov.apply(RunConfig::from_file(config_path));
    auto out = ensure_out_dir(cfg.output_dir);
    std::string fingerprint = cfg.fingerprint();

    JsonlLog log((out / "train_log.jsonl").string(),
                 json{{"config_fingerprint", fingerprint}, {"seed", cfg.seed}});
    TrainResult res = train_model(cfg, [&log](const TrainLogRecord& rec) {
        json j{{"step", rec.step},
               {"l_plus", rec.loss.l_plus},
               {"l_minus", rec.loss.l_minus},
               {"l_zero_or_energy", rec.loss.l_zero_or_energy},
               {"total", rec.loss.total}};
        if (rec.has_sampler_stats) {
            j["acceptance_rate"] = rec.acceptance_rate;
            j["mean_g_neg"] = rec.mean_g_neg;
            j["restarts"] = rec.restarts;
        }
        log.write(j);
    });
    log.write(json{{"type", "summary"},
                   {"steps_run", res.steps_run},
                   {"stop_reason", res.stop_reason},
                   {"gamma", res.resolved_gamma}});
    log.flush();

    if (res.standardizer)
        for (const auto& w : res.standardizer->warnings) std::cerr << "warning: " << w << "\n";

    Checkpoint ckpt;
    ckpt.net = res.net;
    ckpt.domain = res.domain;
    ckpt.standardizer = res.standardizer;
    ckpt.rng_seed = cfg.seed;
    ckpt.step = res.steps_run;
    ckpt.config_fingerprint = fingerprint;
    std::string ckpt_path = (out / "checkpoint.json").string();
    ckpt.save(ckpt_path);

    if (res.stop_reason == "non_finite_loss")
        throw NumericError("training aborted on non-finite loss at step " +
                           std::to_string(res.steps_run + 1) + "; last-good checkpoint written to " +
                           ckpt_path);
    return ckpt_path;
}

/// eval: score the config's dataset test split with a trained checkpoint,
/// write metrics.json (a single-trial report).
inline std::string cmd_eval(const std::string& checkpoint_path, const std::string& config_path,
                            const Overrides& ov = {}) {
    RunConfig cfg = ov.apply(RunConfig::from_file(config_path));
    Checkpoint ckpt = Checkpoint::load(checkpoint_path);
    Rng data_rng(derive_seed(cfg.seed, streams::kData));
    BuiltData data = build_dataset(cfg, data_rng, ckpt.standardizer);
    if (data.test.n() == 0) throw DataError("cmd_eval: dataset has no test split");
    double auc = evaluate_auc(ckpt.net, data.test);
    MetricsReport report =
        MetricsReport::from_trials({auc}, {cfg.seed}, ckpt.config_fingerprint);
    auto out = ensure_out_dir(cfg.output_dir);
    std::string path = (out / "metrics.json").string();
    write_json_file(metrics_to_json(report), path);
    return path;
}

/// grid: decision surface of a checkpoint over its stored domain.
/// Writes grid.csv and grid.pgm.
inline std::string cmd_grid(const std::string& checkpoint_path, std::size_t resolution,
                            const std::string& out_dir) {
    Checkpoint ckpt = Checkpoint::load(checkpoint_path);
    if (!ckpt.domain) throw SchemaError("cmd_grid: checkpoint has no stored domain");
    GridDump dump = grid_eval(ckpt.net, *ckpt.domain, resolution);
    auto out = ensure_out_dir(out_dir);
    std::string comment = "config_fingerprint " + ckpt.config_fingerprint;
    std::string csv_path = (out / "grid.csv").string();
    write_grid_csv(dump, csv_path, comment);
    write_grid_pgm(dump, (out / "grid.pgm").string(), comment);
    return csv_path;
}

/// gen-data: materialize the configured dataset as train.csv/test.csv plus a
/// manifest.json with counts and checksums. Data is written raw
/// (unstandardized); standardization is a training-time transform.
inline std::string cmd_gen_data(const std::string& config_path, const Overrides& ov = {}) {
    RunConfig cfg = ov.apply(RunConfig::from_file(config_path));
    cfg.dataset.standardize = false;
    Rng data_rng(derive_seed(cfg.seed, streams::kData));
    BuiltData data = build_dataset(cfg, data_rng);
    auto out = ensure_out_dir(cfg.output_dir);

    std::string train_path = (out / "train.csv").string();
    std::string test_path = (out / "test.csv").string();
    write_csv(data.train, train_path);
    write_csv(data.test, test_path);

    json manifest;
    manifest["source"] = cfg.dataset.type;
    manifest["seed"] = cfg.seed;
    manifest["config_fingerprint"] = cfg.fingerprint();
    manifest["protocol"] = {
        {"subsample_mode",
         cfg.dataset.subsample.mode == SubsampleSpec::Mode::None     ? "none"
         : cfg.dataset.subsample.mode == SubsampleSpec::Mode::Count ? "count"
                                                                    : "classes"},
        {"test_fraction", cfg.dataset.test_fraction}};
    manifest["counts"] = {{"train", data.train.n()},
                          {"train_positive", data.train.count_label(1)},
                          {"train_negative", data.train.count_label(0)},
                          {"test", data.test.n()}};
    manifest["checksums"] = {{"train.csv", fnv1a_hex(read_file_bytes(train_path))},
                             {"test.csv", fnv1a_hex(read_file_bytes(test_path))}};
    std::string manifest_path = (out / "manifest.json").string();
    write_json_file(manifest, manifest_path);
    return manifest_path;
}

/// experiment: repeated-trial protocol, writes metrics.json.
inline std::string cmd_experiment(const std::string& config_path, std::size_t n_trials,
                                  const Overrides& ov = {}) {
    RunConfig cfg = ov.apply(RunConfig::from_file(config_path));
    MetricsReport report = run_experiment(cfg, n_trials);
    auto out = ensure_out_dir(cfg.output_dir);
    std::string path = (out / "metrics.json").string();
    write_json_file(metrics_to_json(report), path);
    return path;
}

/// Machine-readable error envelope for stderr.
inline json error_json(const std::string& kind, const std::string& message) {
    return json{{"error", kind}, {"message", message}};
}

}  // namespace ope::cli
