#pragma once

#include <cmath>
#include <cstdint>
#include <filesystem>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

#include "binary_io.hpp"
#include "rng.hpp"

// Feature cache: one file per (clip, channel[, frame]) laid out as
//   <root>/<h[0:2]>/<h>.<channel>[.<frame>].fdsc      h = fnv1a64(clip_id) in hex
// File format: "FDSC", u16 version, u8 channel, u32 rows, u32 cols, [u32 frame_index for deep_frame],
// then rows*cols little-endian f32.
namespace egofall {

enum class CacheChannel : std::uint8_t { hog_seq = 0, lbp_seq = 1, flow_seq = 2, deep_clip = 3, audio_clip = 4, deep_frame = 5 };

inline std::string_view to_string(CacheChannel c) {
    switch (c) {
    case CacheChannel::hog_seq: return "hog_seq";
    case CacheChannel::lbp_seq: return "lbp_seq";
    case CacheChannel::flow_seq: return "flow_seq";
    case CacheChannel::deep_clip: return "deep_clip";
    case CacheChannel::audio_clip: return "audio_clip";
    case CacheChannel::deep_frame: return "deep_frame";
    }
    return "?";
}

inline constexpr std::uint16_t kCacheVersion = 1;

struct FeatureCacheEntry {
    std::string clip_id;
    CacheChannel channel = CacheChannel::hog_seq;
    std::uint32_t rows = 1;
    std::uint32_t cols = 0;
    std::vector<float> payload;
    std::optional<std::uint32_t> frame_index; // deep_frame only

    bool operator==(const FeatureCacheEntry&) const = default;
};

/// Expected row-vector width per channel.
struct ChannelDims {
    std::uint32_t target_len = 238;
    std::uint32_t audio = 52;
    std::uint32_t deep_clip = 20480;
    std::uint32_t deep_frame = 2048;

    std::uint32_t cols(CacheChannel c) const {
        switch (c) {
        case CacheChannel::hog_seq:
        case CacheChannel::lbp_seq:
        case CacheChannel::flow_seq: return target_len;
        case CacheChannel::deep_clip: return deep_clip;
        case CacheChannel::audio_clip: return audio;
        case CacheChannel::deep_frame: return deep_frame;
        }
        return 0;
    }
};

inline void check_finite(std::span<const float> v, const std::string& what) {
    for (float x : v) {
        if (!std::isfinite(x)) {
            fail(Errc::NonFiniteFeature, what + " contains a non-finite value");
        }
    }
}

inline std::vector<std::uint8_t> encode_cache_entry(const FeatureCacheEntry& e) {
    if (e.payload.size() != static_cast<std::size_t>(e.rows) * e.cols) {
        fail(Errc::BadCacheFile, "payload size does not match dims for clip " + e.clip_id);
    }
    if ((e.channel == CacheChannel::deep_frame) != e.frame_index.has_value()) {
        fail(Errc::BadCacheFile, "frame_index must be present exactly for deep_frame entries");
    }
    check_finite(e.payload, "cache entry for clip " + e.clip_id);
    bin::Writer w;
    w.magic("FDSC");
    w.u16(kCacheVersion);
    w.u8(static_cast<std::uint8_t>(e.channel));
    w.u32(e.rows);
    w.u32(e.cols);
    if (e.frame_index) {
        w.u32(*e.frame_index);
    }
    w.f32s(e.payload);
    return w.take();
}

/// clip_id is not stored in the file; the caller supplies it.
inline FeatureCacheEntry decode_cache_entry(std::span<const std::uint8_t> data, std::string clip_id) {
    bin::Reader r(data, Errc::BadCacheFile);
    if (!r.magic("FDSC")) {
        fail(Errc::BadCacheFile, "bad magic");
    }
    if (r.u16() != kCacheVersion) {
        fail(Errc::BadCacheFile, "unsupported cache version");
    }
    FeatureCacheEntry e;
    e.clip_id = std::move(clip_id);
    const auto ch = r.u8();
    if (ch > static_cast<std::uint8_t>(CacheChannel::deep_frame)) {
        fail(Errc::BadCacheFile, "unknown channel id " + std::to_string(ch));
    }
    e.channel = static_cast<CacheChannel>(ch);
    e.rows = r.u32();
    e.cols = r.u32();
    if (e.channel == CacheChannel::deep_frame) {
        e.frame_index = r.u32();
    }
    const std::size_t n = static_cast<std::size_t>(e.rows) * e.cols;
    if (r.remaining() != n * sizeof(float)) {
        fail(Errc::BadCacheFile, "payload length mismatch");
    }
    e.payload = r.f32s(n);
    check_finite(e.payload, "cache entry for clip " + e.clip_id);
    return e;
}

class FeatureCache {
public:
    explicit FeatureCache(std::filesystem::path root, ChannelDims dims = {}) : root_(std::move(root)), dims_(dims) {}

    const std::filesystem::path& root() const { return root_; }
    const ChannelDims& dims() const { return dims_; }

    std::filesystem::path path_for(std::string_view clip_id, CacheChannel ch,
                                   std::optional<std::uint32_t> frame = std::nullopt) const {
        const auto h = hex64(fnv1a(clip_id));
        std::string name = h + "." + std::string(to_string(ch));
        if (frame) {
            name += "." + std::to_string(*frame);
        }
        return root_ / h.substr(0, 2) / (name + ".fdsc");
    }

    void store(const FeatureCacheEntry& e) const {
        if (e.rows != 1 || e.cols != dims_.cols(e.channel)) {
            fail(Errc::BadCacheFile, "clip " + e.clip_id + ": " + std::string(to_string(e.channel)) + " must be 1x" +
                                         std::to_string(dims_.cols(e.channel)) + ", got " + std::to_string(e.rows) +
                                         "x" + std::to_string(e.cols));
        }
        const auto p = path_for(e.clip_id, e.channel, e.frame_index);
        std::filesystem::create_directories(p.parent_path());
        bin::write_file_atomic(p, encode_cache_entry(e));
    }

    void store(const std::string& clip_id, CacheChannel ch, std::vector<float> values,
               std::optional<std::uint32_t> frame = std::nullopt) const {
        FeatureCacheEntry e;
        e.clip_id = clip_id;
        e.channel = ch;
        e.rows = 1;
        e.cols = static_cast<std::uint32_t>(values.size());
        e.payload = std::move(values);
        e.frame_index = frame;
        store(e);
    }

    /// nullopt when absent; throws BadCacheFile when present but invalid.
    std::optional<FeatureCacheEntry> load(const std::string& clip_id, CacheChannel ch,
                                          std::optional<std::uint32_t> frame = std::nullopt) const {
        const auto p = path_for(clip_id, ch, frame);
        std::error_code ec;
        if (!std::filesystem::is_regular_file(p, ec)) {
            return std::nullopt;
        }
        auto e = decode_cache_entry(bin::read_file(p), clip_id);
        if (e.channel != ch || e.rows != 1 || e.cols != dims_.cols(ch) || e.frame_index != frame) {
            fail(Errc::BadCacheFile, p.string() + " does not hold a valid " + std::string(to_string(ch)) + " entry");
        }
        return e;
    }

    /// True when a well-formed entry exists.
    bool has_valid(const std::string& clip_id, CacheChannel ch) const {
        try {
            return load(clip_id, ch).has_value();
        } catch (const Error&) {
            return false;
        }
    }

private:
    std::filesystem::path root_;
    ChannelDims dims_;
};

} // namespace egofall
