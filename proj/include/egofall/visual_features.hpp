#pragma once

#include <algorithm>
#include <array>
#include <cmath>
#include <cstdint>
#include <numbers>
#include <string_view>
#include <vector>

#include "error.hpp"
#include "image.hpp"

namespace egofall {

enum class VisualChannel { hog, lbp, flow };

inline std::string_view to_string(VisualChannel c) {
    switch (c) {
    case VisualChannel::hog: return "hog";
    case VisualChannel::lbp: return "lbp";
    case VisualChannel::flow: return "flow";
    }
    return "?";
}

/// Dimensionality shared by the three handcrafted channels.
inline constexpr int kHandcraftedDim = 1152;

struct FrameDescriptor {
    VisualChannel channel = VisualChannel::hog;
    std::vector<double> values;
};

/// Working geometry for one handcrafted channel; grid_cols * grid_rows * bins must equal 1152.
class HandcraftedParams {
public:
    HandcraftedParams(int work_width, int work_height, int grid_cols, int grid_rows, int bins)
        : work_width_(work_width), work_height_(work_height), grid_cols_(grid_cols), grid_rows_(grid_rows),
          bins_(bins) {
        if (grid_cols <= 0 || grid_rows <= 0 || bins <= 0 || grid_cols * grid_rows * bins != kHandcraftedDim) {
            fail(Errc::InvalidParams, "grid " + std::to_string(grid_cols) + "x" + std::to_string(grid_rows) + " x " +
                                          std::to_string(bins) + " bins != 1152");
        }
        if (work_width < grid_cols || work_height < grid_rows) {
            fail(Errc::InvalidParams, "working resolution smaller than the cell grid");
        }
    }

    static HandcraftedParams hog(int w = 256, int h = 128) { return {w, h, 16, 8, 9}; }
    static HandcraftedParams lbp(int w = 256, int h = 128) { return {w, h, 8, 4, 36}; }
    static HandcraftedParams flow(int w = 256, int h = 128) { return {w, h, 16, 8, 9}; }

    int work_width() const { return work_width_; }
    int work_height() const { return work_height_; }
    int grid_cols() const { return grid_cols_; }
    int grid_rows() const { return grid_rows_; }
    int bins() const { return bins_; }

    int cell_of(int x, int y) const {
        return (y * grid_rows_ / work_height_) * grid_cols_ + x * grid_cols_ / work_width_;
    }

private:
    int work_width_, work_height_, grid_cols_, grid_rows_, bins_;
};

inline GrayImage to_work_gray(const Image& frame, const HandcraftedParams& p) {
    return resize_bilinear(to_gray(frame), p.work_width(), p.work_height());
}

// ---------------------------------------------------------------------------
// HOG
// ---------------------------------------------------------------------------

/// Central-difference gradients (edge-replicated borders), unsigned orientation in [0, 180),
/// magnitude-weighted hard binning per cell, per-cell L2 normalization.
inline FrameDescriptor hog_descriptor_gray(const GrayImage& g, const HandcraftedParams& p) {
    constexpr double eps = 1e-6;
    const int bins = p.bins();
    const double bin_width = 180.0 / bins;
    std::vector<double> hist(kHandcraftedDim, 0.0);
    for (int y = 0; y < g.height; ++y) {
        for (int x = 0; x < g.width; ++x) {
            const double gx = static_cast<double>(g.clamped(x + 1, y)) - g.clamped(x - 1, y);
            const double gy = static_cast<double>(g.clamped(x, y + 1)) - g.clamped(x, y - 1);
            const double mag = std::hypot(gx, gy);
            if (mag == 0.0) {
                continue;
            }
            double angle = std::atan2(gy, gx) * 180.0 / std::numbers::pi;
            if (angle < 0.0) {
                angle += 180.0;
            }
            angle = std::fmod(angle, 180.0);
            const int bin = std::min(static_cast<int>(angle / bin_width), bins - 1);
            hist[static_cast<std::size_t>(p.cell_of(x, y) * bins + bin)] += mag;
        }
    }
    FrameDescriptor d{VisualChannel::hog, std::vector<double>(kHandcraftedDim)};
    for (int c = 0; c < p.grid_cols() * p.grid_rows(); ++c) {
        double sq = 0.0;
        for (int b = 0; b < bins; ++b) {
            sq += hist[static_cast<std::size_t>(c * bins + b)] * hist[static_cast<std::size_t>(c * bins + b)];
        }
        const double norm = std::sqrt(sq + eps * eps);
        for (int b = 0; b < bins; ++b) {
            const auto i = static_cast<std::size_t>(c * bins + b);
            d.values[i] = hist[i] / norm;
        }
    }
    return d;
}

inline FrameDescriptor hog_descriptor(const Image& frame, const HandcraftedParams& p = HandcraftedParams::hog()) {
    return hog_descriptor_gray(to_work_gray(frame, p), p);
}

// ---------------------------------------------------------------------------
// LBP
// ---------------------------------------------------------------------------

/// 8-neighbour code, neighbour >= centre sets the bit; neighbours run clockwise from the
/// top-left, the first one landing in the most significant bit.
inline std::uint8_t lbp_code(float center, const std::array<float, 8>& clockwise_from_top_left) {
    std::uint8_t code = 0;
    for (int i = 0; i < 8; ++i) {
        if (clockwise_from_top_left[static_cast<std::size_t>(i)] >= center) {
            code = static_cast<std::uint8_t>(code | (1u << (7 - i)));
        }
    }
    return code;
}

inline std::uint8_t rotate_left8(std::uint8_t v, int s) {
    return static_cast<std::uint8_t>(((v << s) | (v >> (8 - s))) & 0xff);
}

/// Smallest value among the 8 circular rotations of a code.
inline std::uint8_t rotation_minimum(std::uint8_t code) {
    std::uint8_t best = code;
    for (int s = 1; s < 8; ++s) {
        best = std::min(best, rotate_left8(code, s));
    }
    return best;
}

/// Maps each 8-bit code to one of the 36 rotation-invariant classes, numbered by ascending rotation minimum.
inline const std::array<std::uint8_t, 256>& rotation_class_table() {
    static const auto table = [] {
        std::array<std::uint8_t, 256> minima{};
        std::vector<std::uint8_t> uniq;
        for (int c = 0; c < 256; ++c) {
            minima[static_cast<std::size_t>(c)] = rotation_minimum(static_cast<std::uint8_t>(c));
            uniq.push_back(minima[static_cast<std::size_t>(c)]);
        }
        std::sort(uniq.begin(), uniq.end());
        uniq.erase(std::unique(uniq.begin(), uniq.end()), uniq.end());
        std::array<std::uint8_t, 256> t{};
        for (int c = 0; c < 256; ++c) {
            const auto it = std::lower_bound(uniq.begin(), uniq.end(), minima[static_cast<std::size_t>(c)]);
            t[static_cast<std::size_t>(c)] = static_cast<std::uint8_t>(it - uniq.begin());
        }
        return t;
    }();
    return table;
}

inline constexpr int kRotationInvariantClasses = 36;

inline int lbp_rotation_class(std::uint8_t code) { return rotation_class_table()[code]; }

inline FrameDescriptor lbp_descriptor_gray(const GrayImage& g, const HandcraftedParams& p) {
    if (p.bins() != kRotationInvariantClasses) {
        fail(Errc::InvalidParams, "LBP needs 36 bins per cell");
    }
    static constexpr int dx[8] = {-1, 0, 1, 1, 1, 0, -1, -1};
    static constexpr int dy[8] = {-1, -1, -1, 0, 1, 1, 1, 0};
    std::vector<double> hist(kHandcraftedDim, 0.0);
    for (int y = 1; y + 1 < g.height; ++y) {
        for (int x = 1; x + 1 < g.width; ++x) {
            std::array<float, 8> nb{};
            for (int i = 0; i < 8; ++i) {
                nb[static_cast<std::size_t>(i)] = g(x + dx[i], y + dy[i]);
            }
            const int cls = lbp_rotation_class(lbp_code(g(x, y), nb));
            hist[static_cast<std::size_t>(p.cell_of(x, y) * p.bins() + cls)] += 1.0;
        }
    }
    FrameDescriptor d{VisualChannel::lbp, std::vector<double>(kHandcraftedDim, 0.0)};
    for (int c = 0; c < p.grid_cols() * p.grid_rows(); ++c) {
        double total = 0.0;
        for (int b = 0; b < p.bins(); ++b) {
            total += hist[static_cast<std::size_t>(c * p.bins() + b)];
        }
        if (total == 0.0) {
            continue;
        }
        for (int b = 0; b < p.bins(); ++b) {
            const auto i = static_cast<std::size_t>(c * p.bins() + b);
            d.values[i] = hist[i] / total;
        }
    }
    return d;
}

inline FrameDescriptor lbp_descriptor(const Image& frame, const HandcraftedParams& p = HandcraftedParams::lbp()) {
    return lbp_descriptor_gray(to_work_gray(frame, p), p);
}

// ---------------------------------------------------------------------------
// Block-matching optical flow
// ---------------------------------------------------------------------------

/// 8-bit working image used by block matching.
struct ByteImage {
    int width = 0;
    int height = 0;
    std::vector<std::uint8_t> values;
};

inline ByteImage quantize(const GrayImage& g) {
    ByteImage b{g.width, g.height, std::vector<std::uint8_t>(g.values.size())};
    for (std::size_t i = 0; i < g.values.size(); ++i) {
        b.values[i] = static_cast<std::uint8_t>(std::clamp(std::lround(g.values[i]), 0L, 255L));
    }
    return b;
}

struct Displacement {
    int dx = 0;
    int dy = 0;
};

/// Candidate displacements ordered by (dx^2 + dy^2, dy, dx); scanning in this order and keeping only
/// strictly smaller costs implements the tie-break rule.
inline std::vector<Displacement> search_order(int radius) {
    std::vector<Displacement> d;
    for (int dy = -radius; dy <= radius; ++dy) {
        for (int dx = -radius; dx <= radius; ++dx) {
            d.push_back({dx, dy});
        }
    }
    std::stable_sort(d.begin(), d.end(), [](const Displacement& a, const Displacement& b) {
        const int ma = a.dx * a.dx + a.dy * a.dy;
        const int mb = b.dx * b.dx + b.dy * b.dy;
        if (ma != mb) return ma < mb;
        if (a.dy != b.dy) return a.dy < b.dy;
        return a.dx < b.dx;
    });
    return d;
}

/// Per-block displacement from `a` to `b` minimising the sum of absolute differences. The search
/// wraps around the image borders.
inline std::vector<Displacement> block_flow(const ByteImage& a, const ByteImage& b, const HandcraftedParams& p,
                                            int radius) {
    const int W = a.width;
    const int H = a.height;
    const int PW = W + 2 * radius;
    std::vector<std::uint8_t> padded(static_cast<std::size_t>(PW) * (H + 2 * radius));
    for (int y = 0; y < H + 2 * radius; ++y) {
        const int sy = ((y - radius) % H + H) % H;
        for (int x = 0; x < PW; ++x) {
            const int sx = ((x - radius) % W + W) % W;
            padded[static_cast<std::size_t>(y) * PW + x] = b.values[static_cast<std::size_t>(sy) * W + sx];
        }
    }
    const auto order = search_order(radius);
    std::vector<Displacement> flow;
    flow.reserve(static_cast<std::size_t>(p.grid_cols() * p.grid_rows()));
    for (int by = 0; by < p.grid_rows(); ++by) {
        const int y0 = by * H / p.grid_rows();
        const int y1 = (by + 1) * H / p.grid_rows();
        for (int bx = 0; bx < p.grid_cols(); ++bx) {
            const int x0 = bx * W / p.grid_cols();
            const int x1 = (bx + 1) * W / p.grid_cols();
            const int bw = x1 - x0;
            long best = -1;
            Displacement best_d{};
            for (const auto& d : order) {
                long sad = 0;
                for (int y = y0; y < y1 && (best < 0 || sad < best); ++y) {
                    const std::uint8_t* ra = a.values.data() + static_cast<std::size_t>(y) * W + x0;
                    const std::uint8_t* rb =
                        padded.data() + static_cast<std::size_t>(y + d.dy + radius) * PW + (x0 + d.dx + radius);
                    int row = 0;
                    for (int x = 0; x < bw; ++x) {
                        row += std::abs(static_cast<int>(ra[x]) - static_cast<int>(rb[x]));
                    }
                    sad += row;
                }
                if (best < 0 || sad < best) {
                    best = sad;
                    best_d = d;
                }
            }
            flow.push_back(best_d);
        }
    }
    return flow;
}

inline constexpr int kDefaultFlowSearchRadius = 7;

/// One flow vector per block, binned by signed orientation in [0, 360) and weighted by its magnitude.
inline FrameDescriptor flow_descriptor_from_vectors(const std::vector<Displacement>& flow, const HandcraftedParams& p) {
    FrameDescriptor d{VisualChannel::flow, std::vector<double>(kHandcraftedDim, 0.0)};
    const double bin_width = 360.0 / p.bins();
    for (std::size_t blk = 0; blk < flow.size(); ++blk) {
        const auto& v = flow[blk];
        if (v.dx == 0 && v.dy == 0) {
            continue;
        }
        const double mag = std::hypot(static_cast<double>(v.dx), static_cast<double>(v.dy));
        double angle = std::atan2(static_cast<double>(v.dy), static_cast<double>(v.dx)) * 180.0 / std::numbers::pi;
        if (angle < 0.0) {
            angle += 360.0;
        }
        const int bin = std::min(static_cast<int>(angle / bin_width), p.bins() - 1);
        d.values[blk * static_cast<std::size_t>(p.bins()) + static_cast<std::size_t>(bin)] = mag;
    }
    return d;
}

inline FrameDescriptor flow_descriptor(const Image& frame_a, const Image& frame_b,
                                       const HandcraftedParams& p = HandcraftedParams::flow(),
                                       int radius = kDefaultFlowSearchRadius) {
    require_nonempty(frame_a);
    require_nonempty(frame_b);
    if (frame_a.width != frame_b.width || frame_a.height != frame_b.height) {
        fail(Errc::SizeMismatch, "flow frames differ in size");
    }
    const auto a = quantize(to_work_gray(frame_a, p));
    const auto b = quantize(to_work_gray(frame_b, p));
    return flow_descriptor_from_vectors(block_flow(a, b, p, radius), p);
}

} // namespace egofall
