#pragma once

#include <filesystem>
#include <functional>
#include <map>
#include <memory>
#include <mutex>
#include <set>
#include <string>
#include <vector>

#include "audio_features.hpp"
#include "classifiers.hpp"
#include "config.hpp"
#include "decode.hpp"
#include "deep_features.hpp"
#include "evaluation.hpp"
#include "feature_cache.hpp"
#include "parallel.hpp"
#include "temporal.hpp"
#include "visual_features.hpp"

namespace egofall {

inline CacheChannel channel_of(Modality m) {
    switch (m) {
    case Modality::hog: return CacheChannel::hog_seq;
    case Modality::lbp: return CacheChannel::lbp_seq;
    case Modality::flow: return CacheChannel::flow_seq;
    case Modality::deep: return CacheChannel::deep_clip;
    case Modality::audio: return CacheChannel::audio_clip;
    }
    return CacheChannel::hog_seq;
}

/// Everything the per-clip extractors need, resolved from a config.
struct ExtractSettings {
    DecodeOptions decode;
    HandcraftedParams hog = HandcraftedParams::hog();
    HandcraftedParams lbp = HandcraftedParams::lbp();
    HandcraftedParams flow = HandcraftedParams::flow();
    int flow_radius = kDefaultFlowSearchRadius;
    AlignOptions align;
    MfccOptions mfcc;

    ChannelDims dims() const {
        ChannelDims d;
        d.target_len = static_cast<std::uint32_t>(align.target_len);
        d.audio = static_cast<std::uint32_t>(4 * mfcc.n_coeffs);
        return d;
    }
};

/// `self` is substituted for {self} in command templates.
inline ExtractSettings extract_settings(const PipelineConfig& c, const std::string& self = "") {
    ExtractSettings s;
    s.decode.command = c.str("decoder.command");
    s.decode.fps = c.real("video.fps");
    s.decode.sample_rate = static_cast<std::uint32_t>(c.positive("audio.sample_rate"));
    s.decode.extra["self"] = self;
    const int w = static_cast<int>(c.positive("video.work_width"));
    const int h = static_cast<int>(c.positive("video.work_height"));
    s.hog = HandcraftedParams::hog(w, h);
    s.lbp = HandcraftedParams::lbp(w, h);
    s.flow = HandcraftedParams::flow(w, h);
    s.flow_radius = static_cast<int>(c.positive("flow.search_radius"));
    s.align.window_s = c.real("temporal.window_s");
    s.align.fps = s.decode.fps;
    s.align.target_len = static_cast<int>(c.positive("temporal.target_len"));
    const auto& mode = c.str("temporal.align_mode");
    if (mode == "min_peak") {
        s.align.mode = AlignMode::min_peak;
    } else if (mode == "max_peak") {
        s.align.mode = AlignMode::max_peak;
    } else {
        fail(Errc::BadConfig, "temporal.align_mode: '" + mode + "' (expected min_peak or max_peak)");
    }
    s.mfcc.sample_rate = s.decode.sample_rate;
    s.mfcc.frame_len_s = c.real("audio.frame_len_s");
    s.mfcc.hop_s = c.real("audio.hop_s");
    s.mfcc.n_mels = static_cast<int>(c.positive("audio.n_mels"));
    s.mfcc.n_coeffs = static_cast<int>(c.positive("audio.n_coeffs"));
    s.mfcc.log_floor = c.real("audio.log_floor");
    return s;
}

inline ManifestOptions manifest_options(const PipelineConfig& c) {
    ManifestOptions o;
    o.activity_classes = c.list("dataset.activity_classes");
    o.fall_activities = c.list("dataset.fall_activities");
    o.window_s = c.real("temporal.window_s");
    return o;
}

inline std::vector<Modality> configured_modalities(const PipelineConfig& c) {
    return parse_modalities(c.str("fusion.modalities"));
}

inline FeatureCache open_cache(const PipelineConfig& c, const ExtractSettings& s) {
    return FeatureCache(c.str("cache_dir"), s.dims());
}

inline std::unique_ptr<EmbeddingBackend> make_backend(const PipelineConfig& c, const ExtractSettings& s,
                                                      const std::string& self = "") {
    const auto& kind = c.str("deep.backend");
    if (kind == "precomputed") {
        const auto& dir = c.str("deep.precomputed_dir");
        return std::make_unique<PrecomputedBackend>(FeatureCache(dir.empty() ? c.str("cache_dir") : dir, s.dims()));
    }
    if (kind == "external") {
        return std::make_unique<ExternalProcessBackend>(c.str("deep.command"),
                                                        std::map<std::string, std::string>{{"self", self}});
    }
    fail(Errc::BadConfig, "deep.backend: '" + kind + "' (expected precomputed or external)");
}

/// Extracts `channels` from already-decoded raw streams, reading frames one at a time.
inline std::map<CacheChannel, std::vector<float>> extract_from_streams(const ClipRecord& rec,
                                                                       const DecodedStreams& streams,
                                                                       const std::set<CacheChannel>& channels,
                                                                       const ExtractSettings& s,
                                                                       EmbeddingBackend* backend,
                                                                       std::mutex* backend_mu = nullptr) {
    const bool want_hog = channels.count(CacheChannel::hog_seq) > 0;
    const bool want_lbp = channels.count(CacheChannel::lbp_seq) > 0;
    const bool want_flow = channels.count(CacheChannel::flow_seq) > 0;
    const bool want_deep = channels.count(CacheChannel::deep_clip) > 0;
    const bool want_audio = channels.count(CacheChannel::audio_clip) > 0;
    std::map<CacheChannel, std::vector<float>> out;

    FrameReader reader(streams.video);
    check_frame_count(rec, reader.frame_count(), s.decode);
    std::vector<std::size_t> deep_indices;
    std::vector<Image> deep_frames;
    const bool deep_pixels = want_deep && backend && backend->needs_pixels();
    if (want_deep) {
        if (!backend) {
            fail(Errc::BackendUnavailable, "no embedding backend");
        }
        deep_indices = sample_frame_indices(reader.frame_count());
    }

    std::vector<double> hog_sims, lbp_sims, flow_sims;
    FrameDescriptor prev_hog, prev_lbp, prev_flow;
    ByteImage prev_q;
    Image frame;
    std::size_t idx = 0;
    std::size_t next_deep = 0;
    while (reader.next(frame)) {
        check_infrared_frame(rec, frame);
        if (want_hog || want_lbp || want_flow) {
            const auto g = to_work_gray(frame, s.hog);
            if (want_hog) {
                auto d = hog_descriptor_gray(g, s.hog);
                if (idx > 0) {
                    hog_sims.push_back(cosine_similarity(prev_hog, d));
                }
                prev_hog = std::move(d);
            }
            if (want_lbp) {
                auto d = lbp_descriptor_gray(g, s.lbp);
                if (idx > 0) {
                    lbp_sims.push_back(cosine_similarity(prev_lbp, d));
                }
                prev_lbp = std::move(d);
            }
            if (want_flow) {
                auto q = quantize(g);
                if (idx > 0) {
                    auto d = flow_descriptor_from_vectors(block_flow(prev_q, q, s.flow, s.flow_radius), s.flow);
                    if (idx > 1) {
                        flow_sims.push_back(cosine_similarity(prev_flow, d));
                    }
                    prev_flow = std::move(d);
                }
                prev_q = std::move(q);
            }
        }
        if (deep_pixels && next_deep < deep_indices.size() && deep_indices[next_deep] == idx) {
            // sampled indices may repeat on very short clips
            while (next_deep < deep_indices.size() && deep_indices[next_deep] == idx) {
                deep_frames.push_back(resize_for_backbone(frame));
                ++next_deep;
            }
        }
        ++idx;
    }

    auto aligned = [&](const std::vector<double>& sims, const char* what) {
        if (sims.empty()) {
            fail(Errc::TooFewFrames, "clip " + rec.clip_id + ": too few frames for a " + what + " similarity sequence");
        }
        const auto a = truncate_align(sims, s.align);
        return std::vector<float>(a.values.begin(), a.values.end());
    };
    if (want_hog) {
        out[CacheChannel::hog_seq] = aligned(hog_sims, "hog");
    }
    if (want_lbp) {
        out[CacheChannel::lbp_seq] = aligned(lbp_sims, "lbp");
    }
    if (want_flow) {
        out[CacheChannel::flow_seq] = aligned(flow_sims, "flow");
    }
    if (want_deep) {
        std::vector<DeepFrameEmbedding> emb;
        if (backend_mu) {
            std::lock_guard lock(*backend_mu);
            emb = backend->embed(rec.clip_id, deep_frames, deep_indices);
        } else {
            emb = backend->embed(rec.clip_id, deep_frames, deep_indices);
        }
        out[CacheChannel::deep_clip] = build_deep_clip_vector(std::move(emb)).values;
    }
    if (want_audio) {
        const auto audio = load_audio(streams.audio);
        check_audio(rec, audio, s.decode);
        out[CacheChannel::audio_clip] = audio_clip_vector(audio.samples, audio.sample_rate, s.mfcc);
    }
    for (const auto& [ch, v] : out) {
        check_finite(v, "clip " + rec.clip_id + " " + std::string(to_string(ch)));
    }
    return out;
}

/// Decodes one clip with the configured command and extracts `channels`.
inline std::map<CacheChannel, std::vector<float>> extract_clip(const ClipRecord& rec,
                                                               const std::set<CacheChannel>& channels,
                                                               const ExtractSettings& s, EmbeddingBackend* backend,
                                                               std::mutex* backend_mu = nullptr) {
    TempDir tmp("egofall_clip");
    const auto streams = run_decoder(rec, s.decode, tmp.path());
    return extract_from_streams(rec, streams, channels, s, backend, backend_mu);
}

struct ExtractFailure {
    std::string clip_id;
    std::string message;
};

struct ExtractSummary {
    std::size_t computed = 0; // cache entries written
    std::size_t cached = 0;   // entries already present and valid
    std::vector<ExtractFailure> failures;
};

using LogFn = std::function<void(const std::string&)>;

/// Fills the cache for every clip and channel. Valid entries are kept unless `force`; per-clip
/// failures are collected instead of aborting the batch.
inline ExtractSummary run_extract(const Manifest& m, const std::vector<Modality>& modalities, const ExtractSettings& s,
                                  const FeatureCache& cache, EmbeddingBackend* backend, unsigned jobs, bool force,
                                  const LogFn& log = {}) {
    std::mutex mu;
    std::mutex backend_mu;
    ExtractSummary summary;
    std::vector<std::optional<ExtractFailure>> failures(m.records.size());
    auto say = [&](const std::string& line) {
        if (log) {
            std::lock_guard lock(mu);
            log(line);
        }
    };
    parallel_for(m.records.size(), jobs, [&](std::size_t i) {
        const auto& rec = m.records[i];
        try {
            std::set<CacheChannel> todo;
            std::size_t hits = 0;
            for (auto mod : modalities) {
                const auto ch = channel_of(mod);
                if (!force && cache.has_valid(rec.clip_id, ch)) {
                    say("cache hit " + rec.clip_id + " " + std::string(to_string(ch)));
                    ++hits;
                } else {
                    todo.insert(ch);
                }
            }
            std::size_t stored = 0;
            if (!todo.empty()) {
                const auto values = extract_clip(rec, todo, s, backend,
                                                 backend && !backend->concurrent() ? &backend_mu : nullptr);
                for (const auto& [ch, v] : values) {
                    cache.store(rec.clip_id, ch, v);
                    say("cached " + rec.clip_id + " " + std::string(to_string(ch)));
                    ++stored;
                }
            }
            std::lock_guard lock(mu);
            summary.cached += hits;
            summary.computed += stored;
        } catch (const std::exception& e) {
            failures[i] = ExtractFailure{rec.clip_id, e.what()};
            say("FAILED " + rec.clip_id + ": " + e.what());
        }
    });
    for (auto& f : failures) {
        if (f) {
            summary.failures.push_back(std::move(*f));
        }
    }
    return summary;
}

/// Loads classifier inputs for every clip of `m` from the cache.
inline FeatureTable load_feature_table(const Manifest& m, const FeatureCache& cache,
                                       const std::vector<Modality>& modalities) {
    FeatureTable t;
    for (const auto& rec : m.records) {
        for (auto mod : modalities) {
            const auto ch = channel_of(mod);
            auto e = cache.load(rec.clip_id, ch);
            if (!e) {
                fail(Errc::MissingFeatures, "clip " + rec.clip_id + " has no cached '" + std::string(to_string(ch)) +
                                                "' channel (modality " + std::string(to_string(mod)) + ")");
            }
            t.set(rec.clip_id, mod, std::move(e->payload));
        }
    }
    return t;
}

inline ModelKind parse_model_kind(const std::string& s) {
    for (auto k : {ModelKind::rf, ModelKind::svm, ModelKind::mlp}) {
        if (to_string(k) == s) {
            return k;
        }
    }
    fail(Errc::BadConfig, "unknown classifier '" + s + "' (expected rf, svm or mlp)");
}

inline ExperimentConfig experiment_config(const PipelineConfig& c) {
    ExperimentConfig e;
    const auto& task = c.str("eval.task");
    if (task == "binary") {
        e.task = Task::binary;
    } else if (task == "multiclass") {
        e.task = Task::multiclass;
    } else {
        fail(Errc::BadConfig, "eval.task: '" + task + "' (expected binary or multiclass)");
    }
    e.k = static_cast<int>(c.integer("eval.k"));
    e.seed = static_cast<std::uint64_t>(c.integer("seed"));
    e.modalities = configured_modalities(c);
    for (const auto& s : c.list("eval.excluded_subjects")) {
        e.excluded_subjects.insert(s);
    }
    for (auto m : kAllModalities) {
        e.base_kinds[m] = parse_model_kind(c.str("base." + std::string(to_string(m))));
    }
    e.base.rf.trees = static_cast<int>(c.positive("rf.trees"));
    e.base.svm.epochs = static_cast<int>(c.positive("svm.epochs"));
    e.base.svm.lambda = c.real("svm.lambda");
    e.base.mlp.hidden = static_cast<int>(c.positive("mlp.hidden"));
    e.base.mlp.epochs = static_cast<int>(c.integer("mlp.epochs"));
    e.base.mlp.learning_rate = c.real("mlp.lr");
    e.base.mlp.batch_size = static_cast<int>(c.positive("mlp.batch"));
    e.fusion.hidden = static_cast<int>(c.positive("fusion.hidden"));
    e.fusion.epochs = static_cast<int>(c.integer("fusion.epochs"));
    e.fusion.learning_rate = c.real("fusion.lr");
    e.fusion.batch_size = static_cast<int>(c.positive("fusion.batch"));
    e.inner_folds = static_cast<int>(c.positive("fusion.inner_folds"));
    const long jobs = c.integer("jobs");
    e.jobs = jobs > 0 ? static_cast<unsigned>(jobs) : default_jobs();
    e.config_echo = c.echo();
    e.config_fingerprint = c.fingerprint();
    return e;
}

/// Training ids for a split descriptor: "all", "fold:I/K" (fold I of K is held out) or "subject:S".
inline std::vector<std::string> training_ids(const Manifest& m, const std::string& split, const ExperimentConfig& e) {
    const auto kept = detail::without_excluded(m, e.excluded_subjects);
    std::vector<std::string> ids;
    if (split == "all") {
        for (const auto& r : kept.records) {
            ids.push_back(r.clip_id);
        }
        return ids;
    }
    if (split.rfind("fold:", 0) == 0) {
        const auto spec = split.substr(5);
        const auto slash = spec.find('/');
        int i = -1, k = 0;
        try {
            if (slash != std::string::npos) {
                i = std::stoi(spec.substr(0, slash));
                k = std::stoi(spec.substr(slash + 1));
            }
        } catch (const std::exception&) {
        }
        if (i < 0 || k < 2 || i >= k) {
            fail(Errc::BadConfig, "split '" + split + "' (expected fold:I/K with 0 <= I < K)");
        }
        return split_kfold(kept, k, e.seed)[static_cast<std::size_t>(i)].train;
    }
    if (split.rfind("subject:", 0) == 0) {
        const auto subject = split.substr(8);
        for (const auto& r : split_loso(m, e.excluded_subjects)) {
            if (r.held_out_subject == subject) {
                return r.train;
            }
        }
        fail(Errc::BadConfig, "split '" + split + "': unknown or excluded subject");
    }
    fail(Errc::BadConfig, "split '" + split + "' (expected all, fold:I/K or subject:S)");
}

inline std::string split_fingerprint(std::vector<std::string> ids) {
    std::sort(ids.begin(), ids.end());
    std::string canon;
    for (const auto& id : ids) {
        canon += id + "\n";
    }
    return hex64(fnv1a(canon));
}

/// Trains base models and the all-modality fusion model on a split and writes one EFMD file per
/// model into `out_dir`. Returns the written paths.
inline std::vector<std::filesystem::path> train_models(const Manifest& m, const FeatureTable& features,
                                                       const ExperimentConfig& e, const std::string& split,
                                                       const std::filesystem::path& out_dir) {
    const auto train = training_ids(m, split, e);
    const auto stack = train_stack(m, features, e, train, e.seed, "train " + split, false);
    std::map<std::string, std::string> stamp = {
        {"config_fingerprint", e.config_fingerprint},
        {"split", split},
        {"split_fingerprint", split_fingerprint(train)},
        {"task", std::string(to_string(e.task))},
    };
    std::filesystem::create_directories(out_dir);
    std::vector<std::filesystem::path> written;
    auto write = [&](TrainedModel model, const std::string& name) {
        for (const auto& [k, v] : stamp) {
            model.metadata[k] = v;
        }
        const auto p = out_dir / (name + ".efmd");
        bin::write_file_atomic(p, serialize_model(model));
        written.push_back(p);
    };
    for (const auto& [mod, model] : stack.base) {
        write(model, std::string(to_string(mod)));
    }
    if (stack.fused) {
        write(stack.fused->model, "fusion");
    }
    return written;
}

} // namespace egofall
