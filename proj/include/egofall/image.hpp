#pragma once

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <vector>

#include "error.hpp"

namespace egofall {

/// Interleaved 8-bit RGB image, row-major.
struct Image {
    int width = 0;
    int height = 0;
    std::vector<std::uint8_t> pixels; // width * height * 3

    Image() = default;
    Image(int w, int h, std::uint8_t fill = 0)
        : width(w), height(h), pixels(static_cast<std::size_t>(w) * h * 3, fill) {}

    bool empty() const { return width <= 0 || height <= 0 || pixels.empty(); }

    std::uint8_t* at(int x, int y) { return pixels.data() + (static_cast<std::size_t>(y) * width + x) * 3; }
    const std::uint8_t* at(int x, int y) const {
        return pixels.data() + (static_cast<std::size_t>(y) * width + x) * 3;
    }

    void set(int x, int y, std::uint8_t r, std::uint8_t g, std::uint8_t b) {
        auto* p = at(x, y);
        p[0] = r;
        p[1] = g;
        p[2] = b;
    }

    bool operator==(const Image&) const = default;
};

/// Single-channel float image, row-major.
struct GrayImage {
    int width = 0;
    int height = 0;
    std::vector<float> values;

    GrayImage() = default;
    GrayImage(int w, int h, float fill = 0.0f)
        : width(w), height(h), values(static_cast<std::size_t>(w) * h, fill) {}

    float& operator()(int x, int y) { return values[static_cast<std::size_t>(y) * width + x]; }
    float operator()(int x, int y) const { return values[static_cast<std::size_t>(y) * width + x]; }

    /// Clamped access (edge replication outside the image).
    float clamped(int x, int y) const {
        return (*this)(std::clamp(x, 0, width - 1), std::clamp(y, 0, height - 1));
    }
};

inline void require_nonempty(const Image& img) {
    if (img.empty() || img.pixels.size() != static_cast<std::size_t>(img.width) * img.height * 3) {
        fail(Errc::EmptyFrame, "frame is empty or malformed");
    }
}

/// Luma conversion with 0.299/0.587/0.114 weights.
inline GrayImage to_gray(const Image& img) {
    require_nonempty(img);
    GrayImage g(img.width, img.height);
    for (std::size_t i = 0, n = g.values.size(); i < n; ++i) {
        const auto* p = img.pixels.data() + i * 3;
        g.values[i] = static_cast<float>(0.299 * p[0] + 0.587 * p[1] + 0.114 * p[2]);
    }
    return g;
}

namespace detail {

struct Tap {
    int i0, i1;
    double w1; // weight of i1; i0 gets 1 - w1
};

// Half-pixel-center mapping: an identity resize yields w1 == 0 on every tap.
inline std::vector<Tap> bilinear_taps(int src, int dst) {
    std::vector<Tap> taps(static_cast<std::size_t>(dst));
    const double scale = static_cast<double>(src) / dst;
    for (int d = 0; d < dst; ++d) {
        double s = (d + 0.5) * scale - 0.5;
        s = std::clamp(s, 0.0, static_cast<double>(src - 1));
        const int i0 = static_cast<int>(std::floor(s));
        const int i1 = std::min(i0 + 1, src - 1);
        taps[static_cast<std::size_t>(d)] = {i0, i1, s - i0};
    }
    return taps;
}

} // namespace detail

inline GrayImage resize_bilinear(const GrayImage& src, int width, int height) {
    if (src.width <= 0 || src.height <= 0) {
        fail(Errc::EmptyFrame, "cannot resize an empty image");
    }
    if (src.width == width && src.height == height) {
        return src;
    }
    const auto xs = detail::bilinear_taps(src.width, width);
    const auto ys = detail::bilinear_taps(src.height, height);
    GrayImage out(width, height);
    for (int y = 0; y < height; ++y) {
        const auto& ty = ys[static_cast<std::size_t>(y)];
        for (int x = 0; x < width; ++x) {
            const auto& tx = xs[static_cast<std::size_t>(x)];
            const double top = src(tx.i0, ty.i0) * (1 - tx.w1) + src(tx.i1, ty.i0) * tx.w1;
            const double bot = src(tx.i0, ty.i1) * (1 - tx.w1) + src(tx.i1, ty.i1) * tx.w1;
            out(x, y) = static_cast<float>(top * (1 - ty.w1) + bot * ty.w1);
        }
    }
    return out;
}

inline Image resize_bilinear(const Image& src, int width, int height) {
    require_nonempty(src);
    if (src.width == width && src.height == height) {
        return src;
    }
    const auto xs = detail::bilinear_taps(src.width, width);
    const auto ys = detail::bilinear_taps(src.height, height);
    Image out(width, height);
    for (int y = 0; y < height; ++y) {
        const auto& ty = ys[static_cast<std::size_t>(y)];
        for (int x = 0; x < width; ++x) {
            const auto& tx = xs[static_cast<std::size_t>(x)];
            for (int c = 0; c < 3; ++c) {
                const double top = src.at(tx.i0, ty.i0)[c] * (1 - tx.w1) + src.at(tx.i1, ty.i0)[c] * tx.w1;
                const double bot = src.at(tx.i0, ty.i1)[c] * (1 - tx.w1) + src.at(tx.i1, ty.i1)[c] * tx.w1;
                const double v = top * (1 - ty.w1) + bot * ty.w1;
                out.at(x, y)[c] = static_cast<std::uint8_t>(std::clamp(std::lround(v), 0L, 255L));
            }
        }
    }
    return out;
}

} // namespace egofall
