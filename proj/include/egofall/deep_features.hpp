#pragma once

#include <algorithm>
#include <memory>
#include <span>
#include <string>
#include <vector>

#include "error.hpp"
#include "feature_cache.hpp"
#include "image.hpp"
#include "process.hpp"
#include "raw_stream.hpp"

namespace egofall {

inline constexpr std::size_t kDeepFrameDim = 2048;
inline constexpr std::size_t kDeepFrameCount = 10;
inline constexpr std::size_t kDeepClipDim = kDeepFrameDim * kDeepFrameCount;
inline constexpr int kBackboneInputSize = 224;

struct DeepFrameEmbedding {
    std::vector<float> values;
    std::size_t frame_index = 0;
};

struct DeepClipVector {
    std::vector<float> values;
    std::vector<std::size_t> frame_indices;
};

/// Endpoint-inclusive, equally spaced indices round(i*(n-1)/(count-1)).
inline std::vector<std::size_t> sample_frame_indices(std::size_t n, std::size_t count = kDeepFrameCount) {
    if (count < 1 || n < count) {
        fail(Errc::TooFewFrames, std::to_string(n) + " frames, need at least " + std::to_string(count));
    }
    if (count == 1) {
        return {0};
    }
    std::vector<std::size_t> idx(count);
    const std::size_t span = n - 1, steps = count - 1;
    for (std::size_t i = 0; i < count; ++i) {
        idx[i] = (2 * i * span + steps) / (2 * steps); // round half up
    }
    return idx;
}

inline Image resize_for_backbone(const Image& frame) {
    require_nonempty(frame);
    return resize_bilinear(frame, kBackboneInputSize, kBackboneInputSize);
}

/// Source of per-frame 2048-d embeddings. Input normalization (mean/std) is the backend's job.
class EmbeddingBackend {
public:
    virtual ~EmbeddingBackend() = default;

    /// One embedding per frame, in input order. `frames` are already resized for the backbone;
    /// `frame_indices` are their positions in the clip.
    virtual std::vector<DeepFrameEmbedding> embed(const std::string& clip_id, std::span<const Image> frames,
                                                  std::span<const std::size_t> frame_indices) = 0;

    /// Whether embed() may be called concurrently.
    virtual bool concurrent() const { return false; }

    /// Whether embed() reads pixels; when false callers may pass an empty frame list.
    virtual bool needs_pixels() const { return true; }
};

inline void check_embedding_dim(const std::vector<float>& v, const std::string& where) {
    if (v.size() != kDeepFrameDim) {
        fail(Errc::EmbeddingDimMismatch, where + ": got " + std::to_string(v.size()) + "-d embedding, expected 2048");
    }
    check_finite(v, where);
}

/// Looks embeddings up in a feature cache (deep_frame entries keyed by clip id and frame index).
class PrecomputedBackend : public EmbeddingBackend {
public:
    explicit PrecomputedBackend(FeatureCache cache) : cache_(std::move(cache)) {}

    std::vector<DeepFrameEmbedding> embed(const std::string& clip_id, std::span<const Image>,
                                          std::span<const std::size_t> frame_indices) override {
        std::vector<DeepFrameEmbedding> out;
        for (auto idx : frame_indices) {
            const auto p = cache_.path_for(clip_id, CacheChannel::deep_frame, static_cast<std::uint32_t>(idx));
            std::error_code ec;
            if (!std::filesystem::is_regular_file(p, ec)) {
                fail(Errc::MissingPrecomputedEntry, "clip " + clip_id + " frame " + std::to_string(idx));
            }
            auto e = decode_cache_entry(bin::read_file(p), clip_id);
            const std::string where = "clip " + clip_id + " frame " + std::to_string(idx);
            if (e.channel != CacheChannel::deep_frame || e.frame_index != idx) {
                fail(Errc::BadCacheFile, where + ": entry is not the requested deep_frame");
            }
            check_embedding_dim(e.payload, where);
            out.push_back({std::move(e.payload), idx});
        }
        return out;
    }

    bool concurrent() const override { return true; }
    bool needs_pixels() const override { return false; }

private:
    FeatureCache cache_;
};

/// Runs an external inference command per frame. The command template receives {input}, a raw
/// frame stream holding one frame, and must write an EEMB response to {output}.
class ExternalProcessBackend : public EmbeddingBackend {
public:
    explicit ExternalProcessBackend(std::string command, std::map<std::string, std::string> extra = {})
        : command_(std::move(command)), extra_(std::move(extra)) {}

    std::vector<DeepFrameEmbedding> embed(const std::string& clip_id, std::span<const Image> frames,
                                          std::span<const std::size_t> frame_indices) override {
        if (command_.empty()) {
            fail(Errc::BackendUnavailable, "no embedding command configured");
        }
        if (frames.size() != frame_indices.size()) {
            fail(Errc::WrongCount, "frames and frame indices differ in count");
        }
        TempDir tmp("egofall_embed");
        std::vector<DeepFrameEmbedding> out;
        for (std::size_t i = 0; i < frames.size(); ++i) {
            const auto req = tmp.path() / ("frame" + std::to_string(i) + ".efrm");
            const auto resp = tmp.path() / ("frame" + std::to_string(i) + ".eemb");
            save_frames(req, RawVideo{frames[i].width, frames[i].height, {frames[i]}});
            auto values = extra_;
            values["input"] = req.string();
            values["output"] = resp.string();
            const int status = run_shell(expand_command(command_, values));
            const std::string where = "clip " + clip_id + " frame " + std::to_string(frame_indices[i]);
            if (status != 0) {
                fail(Errc::BackendUnavailable, where + ": embedding command exited with status " + std::to_string(status));
            }
            auto v = decode_embedding(bin::read_file(resp));
            check_embedding_dim(v, where);
            out.push_back({std::move(v), frame_indices[i]});
        }
        return out;
    }

    bool concurrent() const override { return true; }

private:
    std::string command_;
    std::map<std::string, std::string> extra_;
};

/// Stand-in backbone for pipelines without a neural network: the frame downsampled to a
/// 64x32 grayscale thumbnail, scaled to [0, 1]. Served by the CLI's `embed-stub` command.
inline std::vector<float> thumbnail_embedding(const Image& frame) {
    const auto g = resize_bilinear(to_gray(frame), 64, 32);
    std::vector<float> v(g.values.size());
    for (std::size_t i = 0; i < v.size(); ++i) {
        v[i] = g.values[i] / 255.0f;
    }
    return v;
}

/// Concatenates exactly 10 embeddings in ascending frame order.
inline DeepClipVector build_deep_clip_vector(std::vector<DeepFrameEmbedding> embeddings) {
    if (embeddings.size() != kDeepFrameCount) {
        fail(Errc::WrongCount, std::to_string(embeddings.size()) + " embeddings, expected 10");
    }
    for (const auto& e : embeddings) {
        if (e.values.size() != kDeepFrameDim) {
            fail(Errc::WrongDim, "embedding for frame " + std::to_string(e.frame_index) + " has " +
                                     std::to_string(e.values.size()) + " values");
        }
    }
    std::stable_sort(embeddings.begin(), embeddings.end(),
                     [](const auto& a, const auto& b) { return a.frame_index < b.frame_index; });
    DeepClipVector out;
    out.values.reserve(kDeepClipDim);
    for (const auto& e : embeddings) {
        out.values.insert(out.values.end(), e.values.begin(), e.values.end());
        out.frame_indices.push_back(e.frame_index);
    }
    return out;
}

/// Recovers the 10 embeddings laid out by build_deep_clip_vector.
inline std::vector<DeepFrameEmbedding> split_deep_clip_vector(const DeepClipVector& v) {
    if (v.values.size() != kDeepClipDim || v.frame_indices.size() != kDeepFrameCount) {
        fail(Errc::WrongDim, "not a 20480-d clip vector");
    }
    std::vector<DeepFrameEmbedding> out;
    for (std::size_t i = 0; i < kDeepFrameCount; ++i) {
        const auto b = v.values.begin() + static_cast<std::ptrdiff_t>(i * kDeepFrameDim);
        out.push_back({std::vector<float>(b, b + static_cast<std::ptrdiff_t>(kDeepFrameDim)), v.frame_indices[i]});
    }
    return out;
}

} // namespace egofall
