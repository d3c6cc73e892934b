#pragma once

#include <cstdint>
#include <filesystem>
#include <fstream>
#include <span>
#include <vector>

#include "binary_io.hpp"
#include "image.hpp"

// Raw decoded media streams:
//   frames: "EFRM" u32 width, u32 height, u32 frame_count, then frame_count * width*height*3 RGB bytes
//   audio:  "EPCM" u32 sample_rate, u32 sample_count, then sample_count i16 samples
//   embedding: "EEMB" u32 dim, then dim f32
// A synthetic media file (".eraw") is a frame stream immediately followed by an audio stream.
namespace egofall {

struct RawVideo {
    int width = 0;
    int height = 0;
    std::vector<Image> frames;
};

struct RawAudio {
    std::uint32_t sample_rate = 16000;
    std::vector<std::int16_t> samples;
};

struct RawClipMedia {
    RawVideo video;
    RawAudio audio;

    std::size_t frame_count() const { return video.frames.size(); }
};

inline void write_frames(bin::Writer& w, const RawVideo& v) {
    w.magic("EFRM");
    w.u32(static_cast<std::uint32_t>(v.width));
    w.u32(static_cast<std::uint32_t>(v.height));
    w.u32(static_cast<std::uint32_t>(v.frames.size()));
    for (const auto& f : v.frames) {
        if (f.width != v.width || f.height != v.height) {
            fail(Errc::SizeMismatch, "frame size differs from stream size");
        }
        w.bytes(f.pixels.data(), f.pixels.size());
    }
}

inline RawVideo read_frames(bin::Reader& r) {
    if (r.remaining() < 16 || !r.magic("EFRM")) {
        fail(Errc::BadStreamHeader, "missing EFRM frame stream header");
    }
    RawVideo v;
    const auto w = r.u32();
    const auto h = r.u32();
    const auto n = r.u32();
    if (w == 0 || h == 0 || w > 16384 || h > 16384) {
        fail(Errc::BadStreamHeader, "implausible frame size " + std::to_string(w) + "x" + std::to_string(h));
    }
    v.width = static_cast<int>(w);
    v.height = static_cast<int>(h);
    const std::size_t frame_bytes = static_cast<std::size_t>(w) * h * 3;
    if (r.remaining() / frame_bytes < n) {
        fail(Errc::StreamTruncated, "header announces " + std::to_string(n) + " frames, data holds " +
                                        std::to_string(r.remaining() / frame_bytes));
    }
    v.frames.reserve(n);
    for (std::uint32_t i = 0; i < n; ++i) {
        Image img(v.width, v.height);
        r.bytes(img.pixels.data(), frame_bytes);
        v.frames.push_back(std::move(img));
    }
    return v;
}

inline void write_audio(bin::Writer& w, const RawAudio& a) {
    w.magic("EPCM");
    w.u32(a.sample_rate);
    w.u32(static_cast<std::uint32_t>(a.samples.size()));
    w.bytes(a.samples.data(), a.samples.size() * sizeof(std::int16_t));
}

inline RawAudio read_audio(bin::Reader& r) {
    if (r.remaining() < 12 || !r.magic("EPCM")) {
        fail(Errc::BadStreamHeader, "missing EPCM audio stream header");
    }
    RawAudio a;
    a.sample_rate = r.u32();
    const auto n = r.u32();
    if (a.sample_rate == 0) {
        fail(Errc::BadStreamHeader, "zero sample rate");
    }
    if (r.remaining() / sizeof(std::int16_t) < n) {
        fail(Errc::StreamTruncated, "header announces " + std::to_string(n) + " samples, data holds " +
                                        std::to_string(r.remaining() / sizeof(std::int16_t)));
    }
    a.samples.resize(n);
    r.bytes(a.samples.data(), n * sizeof(std::int16_t));
    return a;
}

inline RawVideo load_frames(const std::filesystem::path& p) {
    const auto data = bin::read_file(p);
    bin::Reader r(data, Errc::BadStreamHeader);
    return read_frames(r);
}

inline RawAudio load_audio(const std::filesystem::path& p) {
    const auto data = bin::read_file(p);
    bin::Reader r(data, Errc::BadStreamHeader);
    return read_audio(r);
}

inline void save_frames(const std::filesystem::path& p, const RawVideo& v) {
    bin::Writer w;
    write_frames(w, v);
    bin::write_file(p, w.buffer());
}

inline void save_audio(const std::filesystem::path& p, const RawAudio& a) {
    bin::Writer w;
    write_audio(w, a);
    bin::write_file(p, w.buffer());
}

/// Reads a frame stream file one frame at a time.
class FrameReader {
public:
    explicit FrameReader(const std::filesystem::path& p) : in_(p, std::ios::binary) {
        if (!in_) {
            fail(Errc::IoFailure, "cannot open " + p.string());
        }
        std::uint8_t header[16];
        if (!in_.read(reinterpret_cast<char*>(header), sizeof header)) {
            fail(Errc::BadStreamHeader, p.string() + ": missing EFRM frame stream header");
        }
        bin::Reader r(std::span<const std::uint8_t>(header, sizeof header), Errc::BadStreamHeader);
        if (!r.magic("EFRM")) {
            fail(Errc::BadStreamHeader, p.string() + ": missing EFRM frame stream header");
        }
        const auto w = r.u32();
        const auto h = r.u32();
        count_ = r.u32();
        if (w == 0 || h == 0 || w > 16384 || h > 16384) {
            fail(Errc::BadStreamHeader, "implausible frame size " + std::to_string(w) + "x" + std::to_string(h));
        }
        width_ = static_cast<int>(w);
        height_ = static_cast<int>(h);
        std::error_code ec;
        const auto size = std::filesystem::file_size(p, ec);
        const auto frame_bytes = static_cast<std::uintmax_t>(w) * h * 3;
        if (ec || (size - sizeof header) / frame_bytes < count_) {
            fail(Errc::StreamTruncated, p.string() + ": header announces " + std::to_string(count_) +
                                            " frames, data holds fewer");
        }
    }

    int width() const { return width_; }
    int height() const { return height_; }
    std::size_t frame_count() const { return count_; }

    /// Next frame, or false after the last one.
    bool next(Image& img) {
        if (read_ >= count_) {
            return false;
        }
        img = Image(width_, height_);
        if (!in_.read(reinterpret_cast<char*>(img.pixels.data()), static_cast<std::streamsize>(img.pixels.size()))) {
            fail(Errc::StreamTruncated, "frame stream ended at frame " + std::to_string(read_));
        }
        ++read_;
        return true;
    }

private:
    std::ifstream in_;
    int width_ = 0;
    int height_ = 0;
    std::size_t count_ = 0;
    std::size_t read_ = 0;
};

/// Splits a synthetic ".eraw" container into its two raw streams.
inline void demux_raw_container(const std::filesystem::path& input, const std::filesystem::path& video_out,
                                const std::filesystem::path& audio_out) {
    const auto data = bin::read_file(input);
    bin::Reader r(data, Errc::BadStreamHeader);
    const auto video = read_frames(r);
    const auto audio = read_audio(r);
    save_frames(video_out, video);
    save_audio(audio_out, audio);
}

inline std::vector<std::uint8_t> encode_embedding(std::span<const float> v) {
    bin::Writer w;
    w.magic("EEMB");
    w.u32(static_cast<std::uint32_t>(v.size()));
    w.f32s(v);
    return w.take();
}

inline std::vector<float> decode_embedding(std::span<const std::uint8_t> data) {
    bin::Reader r(data, Errc::BadStreamHeader);
    if (data.size() < 8 || !r.magic("EEMB")) {
        fail(Errc::BadStreamHeader, "missing EEMB embedding header");
    }
    const auto dim = r.u32();
    if (r.remaining() != static_cast<std::size_t>(dim) * sizeof(float)) {
        fail(Errc::StreamTruncated, "embedding payload size does not match dim " + std::to_string(dim));
    }
    return r.f32s(dim);
}

} // namespace egofall
