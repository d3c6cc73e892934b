#pragma once

#include <cmath>
#include <cstdlib>
#include <filesystem>
#include <map>
#include <string>

#include "dataset.hpp"
#include "process.hpp"
#include "raw_stream.hpp"

namespace egofall {

struct DecodeOptions {
    /// Template with {input}, {video_out}, {audio_out} placeholders; must write EFRM and EPCM streams.
    std::string command;
    double fps = 30.0;
    std::uint32_t sample_rate = 16000;
    /// Tolerance on the audio sample count, in samples (one MFCC hop by default).
    std::size_t audio_tolerance = 160;
    /// Extra placeholder values, e.g. {self}.
    std::map<std::string, std::string> extra;
};

inline void check_frame_count(const ClipRecord& rec, std::size_t n, const DecodeOptions& opt) {
    const auto expected = static_cast<long>(std::lround(rec.duration_s * opt.fps));
    const auto frames = static_cast<long>(n);
    if (std::labs(frames - expected) > 1) {
        fail(Errc::StreamTruncated, "clip " + rec.clip_id + ": " + std::to_string(frames) + " frames, expected " +
                                        std::to_string(expected) + " +/- 1");
    }
}

inline void check_audio(const ClipRecord& rec, const RawAudio& audio, const DecodeOptions& opt) {
    if (audio.sample_rate != opt.sample_rate) {
        fail(Errc::BadStreamHeader, "clip " + rec.clip_id + ": audio at " + std::to_string(audio.sample_rate) +
                                        " Hz, expected " + std::to_string(opt.sample_rate));
    }
    const auto expected = static_cast<long>(std::lround(rec.duration_s * opt.sample_rate));
    const auto samples = static_cast<long>(audio.samples.size());
    if (static_cast<std::size_t>(std::labs(samples - expected)) > opt.audio_tolerance) {
        fail(Errc::StreamTruncated, "clip " + rec.clip_id + ": " + std::to_string(samples) + " audio samples, expected " +
                                        std::to_string(expected));
    }
}

/// Infrared frames must carry the same value in all three channels.
inline void check_infrared_frame(const ClipRecord& rec, const Image& f) {
    if (rec.camera != Camera::infrared) {
        return;
    }
    for (std::size_t i = 0; i < f.pixels.size(); i += 3) {
        if (f.pixels[i] != f.pixels[i + 1] || f.pixels[i] != f.pixels[i + 2]) {
            fail(Errc::BadStreamHeader, "clip " + rec.clip_id + ": infrared frame is not grayscale-replicated");
        }
    }
}

/// Checks a decoded clip against the record's duration and camera.
inline void validate_media(const ClipRecord& rec, const RawClipMedia& media, const DecodeOptions& opt) {
    check_frame_count(rec, media.frame_count(), opt);
    check_audio(rec, media.audio, opt);
    for (const auto& f : media.video.frames) {
        check_infrared_frame(rec, f);
    }
}

struct DecodedStreams {
    std::filesystem::path video;
    std::filesystem::path audio;
};

/// Runs the decoder command, leaving the raw streams in `dir`.
inline DecodedStreams run_decoder(const ClipRecord& rec, const DecodeOptions& opt, const std::filesystem::path& dir) {
    if (opt.command.empty()) {
        fail(Errc::DecoderSpawnFailure, "no decoder command configured");
    }
    std::error_code ec;
    if (!std::filesystem::is_regular_file(rec.media_path, ec)) {
        fail(Errc::DecoderSpawnFailure, "clip " + rec.clip_id + ": media file " + rec.media_path + " not found");
    }
    DecodedStreams out{dir / "video.efrm", dir / "audio.epcm"};
    auto values = opt.extra;
    values["input"] = rec.media_path;
    values["video_out"] = out.video.string();
    values["audio_out"] = out.audio.string();
    const int status = run_shell(expand_command(opt.command, values));
    if (status != 0) {
        fail(Errc::DecoderSpawnFailure, "clip " + rec.clip_id + ": decoder exited with status " + std::to_string(status));
    }
    if (!std::filesystem::exists(out.video) || !std::filesystem::exists(out.audio)) {
        fail(Errc::BadStreamHeader, "clip " + rec.clip_id + ": decoder produced no output streams");
    }
    return out;
}

/// Runs the external decoder for one clip and loads its raw streams.
inline RawClipMedia decode_clip(const ClipRecord& rec, const DecodeOptions& opt) {
    TempDir tmp("egofall_decode");
    const auto streams = run_decoder(rec, opt, tmp.path());
    RawClipMedia media;
    media.video = load_frames(streams.video);
    media.audio = load_audio(streams.audio);
    validate_media(rec, media, opt);
    return media;
}

} // namespace egofall
