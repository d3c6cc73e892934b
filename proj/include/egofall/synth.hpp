#pragma once

#include <algorithm>
#include <cmath>
#include <filesystem>
#include <fstream>
#include <numbers>
#include <string>
#include <vector>

#include "binary_io.hpp"
#include "dataset.hpp"
#include "raw_stream.hpp"
#include "rng.hpp"

// Synthetic egocentric clips. Nonfall clips pan smoothly over a block texture with a periodically
// varying speed and carry quiet tonal audio. Fall clips start the same way, then jump abruptly
// onto a darker floor texture, stay still, and carry a broadband burst at the event.
namespace egofall {

struct SynthOptions {
    std::size_t clips = 200;
    std::uint64_t seed = 1;
    int width = 64;
    int height = 32;
    double fps = 30.0;
    double duration_s = 8.0;
    std::uint32_t sample_rate = 16000;
    int subjects = 4;
};

struct SynthClip {
    ClipRecord record;
    /// First frame of the fall event (0 for nonfall clips).
    std::size_t event_frame = 0;
    /// Frames spent moving during the event.
    std::size_t event_frames = 0;
};

namespace synth {

inline constexpr int kTextureWidth = 256;
inline constexpr int kTextureHeight = 128;
inline constexpr std::size_t kEventFrames = 4;

const std::vector<std::string> kActivities = {"walking", "fall_forward", "turning", "fall_backward"};

struct SubjectStyle {
    Camera camera;
    TimeOfDay time_of_day;
    double gain;
    double bias;
    double noise;
    double tint[3];
    int cell;
    double audio_gain;
};

inline SubjectStyle subject_style(int s) {
    switch (s % 4) {
    case 0: return {Camera::rgb, TimeOfDay::daytime, 0.85, 20.0, 2.0, {1.0, 0.92, 0.8}, 3, 1.0};
    case 1: return {Camera::rgb, TimeOfDay::daytime, 0.75, 35.0, 2.0, {0.8, 0.9, 1.0}, 2, 0.8};
    case 2: return {Camera::rgb, TimeOfDay::night, 0.35, 8.0, 4.0, {0.9, 0.9, 1.1}, 3, 1.2};
    default: return {Camera::infrared, TimeOfDay::night, 0.7, 25.0, 3.0, {1.0, 1.0, 1.0}, 2, 0.9};
    }
}

/// Tileable block texture, values in [0, 255].
struct Texture {
    int width = 0;
    int height = 0;
    std::vector<float> values;

    float texel(int x, int y) const {
        x = ((x % width) + width) % width;
        y = ((y % height) + height) % height;
        return values[static_cast<std::size_t>(y) * static_cast<std::size_t>(width) + static_cast<std::size_t>(x)];
    }

    /// Bilinear sample with wrap-around.
    float sample(double x, double y) const {
        const double fx = std::floor(x);
        const double fy = std::floor(y);
        const auto x0 = static_cast<int>(fx);
        const auto y0 = static_cast<int>(fy);
        const double ax = x - fx;
        const double ay = y - fy;
        const double top = texel(x0, y0) * (1 - ax) + texel(x0 + 1, y0) * ax;
        const double bot = texel(x0, y0 + 1) * (1 - ax) + texel(x0 + 1, y0 + 1) * ax;
        return static_cast<float>(top * (1 - ay) + bot * ay);
    }
};

inline Texture block_texture(Rng& rng, int cell, double lo, double hi) {
    Texture t{kTextureWidth, kTextureHeight, {}};
    t.values.resize(static_cast<std::size_t>(t.width) * static_cast<std::size_t>(t.height));
    const int cw = (t.width + cell - 1) / cell;
    const int ch = (t.height + cell - 1) / cell;
    std::vector<float> cells(static_cast<std::size_t>(cw) * static_cast<std::size_t>(ch));
    for (auto& c : cells) {
        c = static_cast<float>(rng.uniform(lo, hi));
    }
    for (int y = 0; y < t.height; ++y) {
        for (int x = 0; x < t.width; ++x) {
            t.values[static_cast<std::size_t>(y) * static_cast<std::size_t>(t.width) + static_cast<std::size_t>(x)] =
                cells[static_cast<std::size_t>(y / cell) * static_cast<std::size_t>(cw) + static_cast<std::size_t>(x / cell)];
        }
    }
    return t;
}

} // namespace synth

/// Clip plan for the whole dataset; media is rendered separately by render_synth_clip.
inline std::vector<SynthClip> plan_synth_dataset(const SynthOptions& opt) {
    if (opt.subjects < 1 || opt.clips < 1) {
        fail(Errc::InvalidParams, "synthetic dataset needs at least one clip and one subject");
    }
    std::vector<SynthClip> out;
    const auto frames = static_cast<std::size_t>(std::lround(opt.duration_s * opt.fps));
    for (std::size_t c = 0; c < opt.clips; ++c) {
        const int s = static_cast<int>(c % static_cast<std::size_t>(opt.subjects));
        const std::size_t j = c / static_cast<std::size_t>(opt.subjects);
        const auto style = synth::subject_style(s);
        SynthClip clip;
        auto& r = clip.record;
        char id[32];
        std::snprintf(id, sizeof id, "S%d_%03zu", s + 1, j);
        r.clip_id = id;
        r.media_path = "media/" + r.clip_id + ".eraw";
        r.subject_id = "S" + std::to_string(s + 1);
        r.camera = style.camera;
        r.time_of_day = style.time_of_day;
        r.location = (j / 2) % 2 == 0 ? Location::indoor : Location::outdoor;
        r.placement = j % 3 == 0 ? Placement::neck : Placement::waist;
        r.label_activity = synth::kActivities[j % 4];
        r.label_binary = j % 2 == 1 ? BinaryLabel::fall : BinaryLabel::nonfall;
        r.duration_s = opt.duration_s;
        if (r.label_binary == BinaryLabel::fall) {
            Rng rng(mix_seed(mix_seed(opt.seed, c), 0xe7e));
            // keep the event inside the middle of the clip
            const std::size_t lo = frames * 7 / 16;
            const std::size_t hi = frames * 9 / 16;
            clip.event_frame = lo + rng.index(hi - lo + 1);
            clip.event_frames = synth::kEventFrames;
        }
        out.push_back(std::move(clip));
    }
    return out;
}

inline RawClipMedia render_synth_clip(const SynthClip& clip, std::size_t clip_index, const SynthOptions& opt) {
    const int s = [&] {
        const auto& id = clip.record.subject_id;
        return std::max(0, std::atoi(id.c_str() + 1) - 1);
    }();
    const auto style = synth::subject_style(s);
    Rng subject_rng(mix_seed(opt.seed ^ 0x5b1ec7ULL, static_cast<std::uint64_t>(s)));
    const auto scene = synth::block_texture(subject_rng, style.cell, 40.0, 255.0);
    const auto floor = synth::block_texture(subject_rng, 1, 10.0, 110.0);

    Rng rng(mix_seed(opt.seed, clip_index));
    const bool fall = clip.record.label_binary == BinaryLabel::fall;
    const bool leftward = clip.record.label_activity == "turning";
    const bool upward = clip.record.label_activity == "fall_backward";

    // walking pan: speed v with a periodic +-30% modulation
    const double v = rng.uniform(0.6, 1.0) * (leftward ? -1.0 : 1.0);
    const double period = rng.uniform(25.0, 45.0);
    const double phase = rng.uniform(0.0, 2.0 * std::numbers::pi);
    const double amp = 0.3 * std::abs(v) * period / (2.0 * std::numbers::pi);
    const double x0 = rng.uniform(0.0, synth::kTextureWidth);
    const double y0 = rng.uniform(0.0, synth::kTextureHeight);
    const double jump = rng.uniform(5.0, 8.0);
    const double jump_x = rng.uniform(-2.0, 2.0);
    auto walk_x = [&](double t) {
        return x0 + v * t + amp * (std::sin(2.0 * std::numbers::pi * t / period + phase) - std::sin(phase));
    };

    const auto frames = static_cast<std::size_t>(std::lround(opt.duration_s * opt.fps));
    RawClipMedia media;
    media.video.width = opt.width;
    media.video.height = opt.height;
    const std::size_t te = clip.event_frame;
    for (std::size_t f = 0; f < frames; ++f) {
        double ox = walk_x(static_cast<double>(f));
        double oy = y0;
        const synth::Texture* tex = &scene;
        if (fall && f >= te) {
            const double steps = static_cast<double>(std::min(f - te + 1, clip.event_frames));
            ox = walk_x(static_cast<double>(te) - 1.0) + steps * jump_x;
            oy = y0 + steps * jump * (upward ? -1.0 : 1.0);
            if (f >= te + 2) {
                tex = &floor;
            }
        }
        Image img(opt.width, opt.height);
        for (int y = 0; y < opt.height; ++y) {
            for (int x = 0; x < opt.width; ++x) {
                const double base = tex->sample(x + ox, y + oy);
                if (style.camera == Camera::infrared) {
                    const double val = style.bias + style.gain * base + rng.normal(0.0, style.noise);
                    const auto b = static_cast<std::uint8_t>(std::clamp(std::lround(val), 0L, 255L));
                    img.set(x, y, b, b, b);
                } else {
                    std::uint8_t rgb[3];
                    for (int c = 0; c < 3; ++c) {
                        const double val = style.bias + style.gain * style.tint[c] * base + rng.normal(0.0, style.noise);
                        rgb[c] = static_cast<std::uint8_t>(std::clamp(std::lround(val), 0L, 255L));
                    }
                    img.set(x, y, rgb[0], rgb[1], rgb[2]);
                }
            }
        }
        media.video.frames.push_back(std::move(img));
    }

    const auto n = static_cast<std::size_t>(std::lround(opt.duration_s * opt.sample_rate));
    const double sr = opt.sample_rate;
    std::vector<double> a(n);
    const double f1 = rng.uniform(150.0, 400.0);
    const double f2 = f1 * rng.uniform(1.4, 2.2);
    const double tone = rng.uniform(0.02, 0.05);
    const double mod = rng.uniform(0.2, 0.6);
    for (std::size_t i = 0; i < n; ++i) {
        const double t = static_cast<double>(i) / sr;
        const double env = 1.0 + 0.3 * std::sin(2.0 * std::numbers::pi * mod * t);
        a[i] = tone * env * (std::sin(2.0 * std::numbers::pi * f1 * t) + 0.5 * std::sin(2.0 * std::numbers::pi * f2 * t)) +
               rng.normal(0.0, 0.003);
    }
    if (fall) {
        const auto start = static_cast<std::size_t>(std::lround(static_cast<double>(te) / opt.fps * sr));
        const double peak = rng.uniform(0.4, 0.7);
        const auto len = static_cast<std::size_t>(0.4 * sr);
        for (std::size_t i = 0; i < len && start + i < n; ++i) {
            const double t = static_cast<double>(i) / sr;
            a[start + i] += peak * std::exp(-t / 0.08) * rng.normal(0.0, 1.0);
        }
        if (rng.index(2) == 1) {
            // a shout right after the impact
            const double fy = rng.uniform(300.0, 500.0);
            const auto yell = static_cast<std::size_t>(0.5 * sr);
            const auto ys = start + static_cast<std::size_t>(0.1 * sr);
            for (std::size_t i = 0; i < yell && ys + i < n; ++i) {
                const double t = static_cast<double>(i) / sr;
                const double env = std::sin(std::numbers::pi * t / 0.5);
                a[ys + i] += 0.2 * env * (std::sin(2.0 * std::numbers::pi * fy * t) +
                                          0.5 * std::sin(4.0 * std::numbers::pi * fy * t));
            }
        }
    }
    media.audio.sample_rate = opt.sample_rate;
    media.audio.samples.resize(n);
    for (std::size_t i = 0; i < n; ++i) {
        const double v16 = std::round(a[i] * style.audio_gain * 32767.0);
        media.audio.samples[i] = static_cast<std::int16_t>(std::clamp(v16, -32768.0, 32767.0));
    }
    return media;
}

inline std::vector<std::uint8_t> encode_raw_container(const RawClipMedia& m) {
    bin::Writer w;
    write_frames(w, m.video);
    write_audio(w, m.audio);
    return w.take();
}

/// Text of the config written next to a synthetic dataset.
inline std::string synth_config_text() {
    return "# synthetic dataset; relative paths resolve against this file's directory\n"
           "manifest = manifest.csv\n"
           "cache_dir = cache\n"
           "deep.backend = external\n"
           "deep.command = {self} embed-stub --input {input} --output {output}\n";
}

/// Writes manifest.csv, events.csv, egofall.conf and media/ under `out_dir`.
inline std::vector<SynthClip> write_synth_dataset(const std::filesystem::path& out_dir, const SynthOptions& opt) {
    const auto clips = plan_synth_dataset(opt);
    std::error_code ec;
    std::filesystem::create_directories(out_dir / "media", ec);
    if (ec) {
        fail(Errc::IoFailure, "cannot create " + (out_dir / "media").string() + ": " + ec.message());
    }
    Manifest m;
    for (std::size_t i = 0; i < clips.size(); ++i) {
        bin::write_file_atomic(out_dir / clips[i].record.media_path, encode_raw_container(render_synth_clip(clips[i], i, opt)));
        m.records.push_back(clips[i].record);
    }
    auto write_text = [&](const std::string& name, const std::string& text) {
        std::ofstream out(out_dir / name, std::ios::binary);
        out << text;
        if (!out) {
            fail(Errc::IoFailure, "cannot write " + (out_dir / name).string());
        }
    };
    std::ostringstream manifest;
    write_manifest(manifest, m);
    write_text("manifest.csv", manifest.str());
    std::string events = "clip_id,event_frame,event_frames\n";
    for (const auto& c : clips) {
        if (c.event_frames > 0) {
            events += c.record.clip_id + "," + std::to_string(c.event_frame) + "," + std::to_string(c.event_frames) + "\n";
        }
    }
    write_text("events.csv", events);
    write_text("egofall.conf", synth_config_text());
    return clips;
}

} // namespace egofall
