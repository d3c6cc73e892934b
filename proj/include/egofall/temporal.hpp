#pragma once

#include <algorithm>
#include <cmath>
#include <span>
#include <string_view>
#include <vector>

#include "error.hpp"
#include "visual_features.hpp"

namespace egofall {

namespace detail {

template <typename T>
double cosine(std::span<const T> a, std::span<const T> b) {
    if (a.size() != b.size()) {
        fail(Errc::LengthMismatch, "cosine of vectors of length " + std::to_string(a.size()) + " and " +
                                       std::to_string(b.size()));
    }
    double dot = 0.0, na = 0.0, nb = 0.0;
    for (std::size_t i = 0; i < a.size(); ++i) {
        const double x = a[i];
        const double y = b[i];
        dot += x * y;
        na += x * x;
        nb += y * y;
    }
    if (na == 0.0 || nb == 0.0) {
        return (na == 0.0 && nb == 0.0) ? 1.0 : 0.0;
    }
    const double c = dot / (std::sqrt(na) * std::sqrt(nb));
    return std::clamp(c, -1.0, 1.0);
}

} // namespace detail

/// Cosine similarity. Zero-norm policy: both zero -> 1, exactly one zero -> 0.
inline double cosine_similarity(std::span<const double> a, std::span<const double> b) { return detail::cosine(a, b); }
inline double cosine_similarity(std::span<const float> a, std::span<const float> b) { return detail::cosine(a, b); }

inline double cosine_similarity(const FrameDescriptor& a, const FrameDescriptor& b) {
    return cosine_similarity(std::span<const double>(a.values), std::span<const double>(b.values));
}

struct SimilaritySequence {
    VisualChannel source_channel = VisualChannel::hog;
    std::vector<double> values;
};

/// Element i is the similarity of descriptors i and i+1.
inline SimilaritySequence similarity_sequence(std::span<const FrameDescriptor> descriptors) {
    if (descriptors.size() < 2) {
        fail(Errc::TooFewFrames, "need at least 2 descriptors, got " + std::to_string(descriptors.size()));
    }
    SimilaritySequence s{descriptors.front().channel, {}};
    s.values.reserve(descriptors.size() - 1);
    for (std::size_t i = 0; i + 1 < descriptors.size(); ++i) {
        s.values.push_back(cosine_similarity(descriptors[i], descriptors[i + 1]));
    }
    return s;
}

enum class AlignMode { min_peak, max_peak };

inline std::string_view to_string(AlignMode m) { return m == AlignMode::min_peak ? "min_peak" : "max_peak"; }

struct AlignOptions {
    double window_s = 8.0;
    double fps = 30.0;
    int target_len = 238;
    AlignMode mode = AlignMode::min_peak;
};

struct AlignedClipVector {
    std::vector<double> values;
    std::size_t peak_index = 0; // in the source sequence
};

/// Index span [begin, end) searched for the extremum: a window of round(window_s * fps) elements
/// centred in the sequence, or the whole sequence when it is shorter.
inline std::pair<std::size_t, std::size_t> search_window(std::size_t n, const AlignOptions& opt) {
    const auto w = static_cast<std::size_t>(std::max(1L, std::lround(opt.window_s * opt.fps)));
    if (w >= n) {
        return {0, n};
    }
    const std::size_t begin = (n - w) / 2;
    return {begin, begin + w};
}

/// Cuts `target_len` elements centred on the window extremum (earliest on ties), which lands at
/// output index target_len / 2; positions beyond the sequence replicate the nearest edge value.
inline AlignedClipVector truncate_align(std::span<const double> seq, const AlignOptions& opt = {}) {
    if (seq.empty()) {
        fail(Errc::EmptySequence, "cannot align an empty similarity sequence");
    }
    if (opt.target_len < 1) {
        fail(Errc::InvalidParams, "target_len must be >= 1");
    }
    const auto [begin, end] = search_window(seq.size(), opt);
    std::size_t peak = begin;
    for (std::size_t i = begin + 1; i < end; ++i) {
        const bool better = opt.mode == AlignMode::min_peak ? seq[i] < seq[peak] : seq[i] > seq[peak];
        if (better) {
            peak = i;
        }
    }
    AlignedClipVector out;
    out.peak_index = peak;
    out.values.resize(static_cast<std::size_t>(opt.target_len));
    const long half = opt.target_len / 2;
    const long last = static_cast<long>(seq.size()) - 1;
    for (long j = 0; j < opt.target_len; ++j) {
        const long src = std::clamp(static_cast<long>(peak) - half + j, 0L, last);
        out.values[static_cast<std::size_t>(j)] = seq[static_cast<std::size_t>(src)];
    }
    return out;
}

inline AlignedClipVector truncate_align(const SimilaritySequence& seq, const AlignOptions& opt = {}) {
    return truncate_align(std::span<const double>(seq.values), opt);
}

} // namespace egofall
