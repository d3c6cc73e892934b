// egofall command-line tool: extract, train, evaluate, report, synth, plus the demux and
// embed-stub helpers the synthetic configuration uses as external commands.

#include <cstdlib>
#include <ctime>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <optional>
#include <string>
#include <vector>

#include <CLI11.hpp>

#include "egofall/egofall.hpp"

namespace fs = std::filesystem;
using namespace egofall;

namespace {

struct CommonFlags {
    std::string config;
    std::string manifest;
    std::optional<long> seed;
    std::optional<long> jobs;
    std::vector<std::string> overrides;
};

void add_common(CLI::App* cmd, CommonFlags& f) {
    cmd->add_option("--config", f.config, "config file (key = value)");
    cmd->add_option("--manifest", f.manifest, "clip manifest CSV");
    cmd->add_option("--seed", f.seed, "random seed");
    cmd->add_option("--jobs", f.jobs, "worker threads (0 = logical cores)");
    cmd->add_option("--set", f.overrides, "KEY=VALUE config override (repeatable)");
}

std::string self_path(const char* argv0) {
    std::error_code ec;
    auto p = fs::canonical("/proc/self/exe", ec);
    if (ec) {
        p = fs::absolute(argv0, ec);
    }
    return p.string();
}

PipelineConfig resolve_config(const CommonFlags& f) {
    PipelineConfig c;
    if (!f.config.empty()) {
        c = PipelineConfig::load(f.config);
    } else {
        c.apply_environment();
    }
    for (const auto& kv : f.overrides) {
        const auto eq = kv.find('=');
        if (eq == std::string::npos) {
            fail(Errc::BadConfig, "--set expects KEY=VALUE, got '" + kv + "'");
        }
        c.set(detail::trim(kv.substr(0, eq)), detail::trim(kv.substr(eq + 1)));
    }
    if (f.seed) {
        c.set("seed", std::to_string(*f.seed));
    }
    if (f.jobs) {
        c.set("jobs", std::to_string(*f.jobs));
    }
    return c;
}

Manifest resolve_manifest(const CommonFlags& f, const PipelineConfig& c) {
    const std::string path = !f.manifest.empty() ? f.manifest : c.str("manifest");
    if (path.empty()) {
        fail(Errc::BadConfig, "no manifest given (--manifest or the 'manifest' config key)");
    }
    return load_manifest(path, manifest_options(c));
}

unsigned jobs_of(const PipelineConfig& c) {
    const long j = c.integer("jobs");
    return j > 0 ? static_cast<unsigned>(j) : default_jobs();
}

/// SOURCE_DATE_EPOCH, when set, stamps reports; otherwise they carry "unset" so reruns match.
std::string report_timestamp() {
    const char* epoch = std::getenv("SOURCE_DATE_EPOCH");
    if (!epoch || !*epoch) {
        return "unset";
    }
    const std::time_t t = static_cast<std::time_t>(std::strtoll(epoch, nullptr, 10));
    std::tm tm{};
    gmtime_r(&t, &tm);
    char buf[32];
    std::strftime(buf, sizeof buf, "%Y-%m-%dT%H:%M:%SZ", &tm);
    return buf;
}

void log_line(const std::string& s) { std::cerr << s << '\n'; }

} // namespace

int main(int argc, char** argv) {
    CLI::App app{"Multimodal egocentric fall detection pipeline"};
    app.require_subcommand(1);
    const std::string self = self_path(argv[0]);

    CommonFlags common;

    auto* extract = app.add_subcommand("extract", "compute features into the cache");
    add_common(extract, common);
    bool force = false;
    std::string modalities;
    extract->add_flag("--force", force, "recompute existing cache entries");
    extract->add_option("--modalities", modalities, "comma-separated modality list");

    auto* train = app.add_subcommand("train", "train base and fusion models on a split");
    add_common(train, common);
    std::string split = "all";
    std::string model_dir = "models";
    train->add_option("--modalities", modalities, "comma-separated modality list");
    train->add_option("--split", split, "all, fold:I/K or subject:S");
    train->add_option("--out", model_dir, "output directory for .efmd files");

    auto* evaluate = app.add_subcommand("evaluate", "cross-validate and write a report");
    add_common(evaluate, common);
    std::string mode = "internal";
    std::optional<int> k;
    std::string format = "text_table";
    std::string out_path;
    std::string task;
    evaluate->add_option("--mode", mode, "internal or external")->check(CLI::IsMember({"internal", "external"}));
    evaluate->add_option("--k", k, "internal folds");
    evaluate->add_option("--format", format, "text_table, csv or json_lines");
    evaluate->add_option("--out", out_path, "report path (default stdout)");
    evaluate->add_option("--modalities", modalities, "comma-separated modality list");
    evaluate->add_option("--task", task, "binary or multiclass");

    auto* report = app.add_subcommand("report", "render saved JSON-lines reports");
    add_common(report, common);
    std::vector<std::string> inputs;
    report->add_option("--input", inputs, "JSON-lines report (repeatable)")->required();
    report->add_option("--format", format, "text_table, csv or json_lines");

    auto* synth_cmd = app.add_subcommand("synth", "generate the synthetic dataset");
    add_common(synth_cmd, common);
    std::string synth_dir;
    std::size_t clips = 200;
    synth_cmd->add_option("--out", synth_dir, "output directory")->required();
    synth_cmd->add_option("--clips", clips, "number of clips");

    auto* demux = app.add_subcommand("demux", "split a .eraw container into raw streams");
    std::string in_path, video_out, audio_out;
    demux->add_option("--input", in_path)->required();
    demux->add_option("--video-out", video_out)->required();
    demux->add_option("--audio-out", audio_out)->required();

    auto* stub = app.add_subcommand("embed-stub", "thumbnail embedding for one raw frame");
    std::string emb_out;
    stub->add_option("--input", in_path)->required();
    stub->add_option("--output", emb_out)->required();

    CLI11_PARSE(app, argc, argv);

    try {
        if (*demux) {
            demux_raw_container(in_path, video_out, audio_out);
            return 0;
        }
        if (*stub) {
            const auto v = load_frames(in_path);
            if (v.frames.size() != 1) {
                fail(Errc::WrongCount, "expected one frame, got " + std::to_string(v.frames.size()));
            }
            bin::write_file(emb_out, encode_embedding(thumbnail_embedding(v.frames[0])));
            return 0;
        }
        if (*synth_cmd) {
            SynthOptions opt;
            opt.clips = clips;
            opt.seed = common.seed ? static_cast<std::uint64_t>(*common.seed) : 1;
            const auto plan = write_synth_dataset(synth_dir, opt);
            std::cout << "wrote " << plan.size() << " clips to " << synth_dir << '\n';
            return 0;
        }
        if (*report) {
            std::vector<EvaluationReport> reps;
            for (const auto& p : inputs) {
                reps.push_back(load_json_lines_report(p));
            }
            const auto f = parse_report_format(format);
            if (f == ReportFormat::text_table) {
                std::cout << render_table(reps);
            } else {
                for (const auto& r : reps) {
                    std::cout << render_report(r, f);
                }
            }
            return 0;
        }

        auto cfg = resolve_config(common);
        if (!modalities.empty()) {
            cfg.set("fusion.modalities", modalities);
        }
        if (k) {
            cfg.set("eval.k", std::to_string(*k));
        }
        if (!task.empty()) {
            cfg.set("eval.task", task);
        }
        const auto manifest = resolve_manifest(common, cfg);
        const auto settings = extract_settings(cfg, self);
        const auto cache = open_cache(cfg, settings);

        if (*extract) {
            const auto mods = configured_modalities(cfg);
            std::unique_ptr<EmbeddingBackend> backend;
            if (std::find(mods.begin(), mods.end(), Modality::deep) != mods.end()) {
                backend = make_backend(cfg, settings, self);
            }
            const auto summary =
                run_extract(manifest, mods, settings, cache, backend.get(), jobs_of(cfg), force, log_line);
            std::cerr << "extract: " << summary.computed << " entries computed, " << summary.cached
                      << " already cached, " << summary.failures.size() << " clip(s) failed\n";
            for (const auto& f : summary.failures) {
                std::cerr << "  " << f.clip_id << ": " << f.message << '\n';
            }
            return summary.failures.empty() ? 0 : 1;
        }

        auto exp = experiment_config(cfg);
        exp.timestamp = report_timestamp();
        const auto features = load_feature_table(manifest, cache, exp.modalities);

        if (*train) {
            for (const auto& p : train_models(manifest, features, exp, split, model_dir)) {
                std::cout << p.string() << '\n';
            }
            return 0;
        }
        if (*evaluate) {
            exp.mode = mode == "internal" ? EvalMode::internal : EvalMode::external;
            const auto f = parse_report_format(format);
            const auto rep = run_evaluation(manifest, features, exp);
            if (out_path.empty()) {
                std::cout << render_report(rep, f);
            } else {
                emit_report(rep, f, out_path);
            }
            std::cerr << "evaluate: " << to_string(exp.mode) << ", fused accuracy "
                      << (rep.has_system(kAllSystem) ? rep.fused().mean : rep.systems.front().mean) << ", "
                      << rep.guard_checks << " leakage checks\n";
            return 0;
        }
    } catch (const Error& e) {
        std::cerr << "error: " << errc_name(e.code()) << ": " << e.what() << '\n';
        return 2;
    } catch (const std::exception& e) {
        std::cerr << "error: " << e.what() << '\n';
        return 2;
    }
    return 0;
}
