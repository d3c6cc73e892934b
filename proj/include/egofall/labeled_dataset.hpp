#pragma once

#include <algorithm>
#include <cmath>
#include <span>
#include <string>
#include <vector>

#include "error.hpp"

namespace egofall {

using ProbabilityVector = std::vector<double>;

/// N x D row-major features with labels in [0, m).
struct LabeledDataset {
    std::size_t rows = 0;
    std::size_t cols = 0;
    std::vector<float> features;
    std::vector<int> labels;
    int classes = 0;
    std::string channel; // provenance tag

    std::span<const float> row(std::size_t i) const { return {features.data() + i * cols, cols}; }

    void add(std::span<const float> x, int label) {
        if (rows == 0 && cols == 0) {
            cols = x.size();
        }
        if (x.size() != cols) {
            fail(Errc::DimMismatch, "row of length " + std::to_string(x.size()) + " in a " + std::to_string(cols) +
                                        "-column dataset");
        }
        features.insert(features.end(), x.begin(), x.end());
        labels.push_back(label);
        ++rows;
    }

    /// Enforces the training-set contract: finite features, labels in range, every class present.
    void validate() const {
        if (classes < 2) {
            fail(Errc::DegenerateLabels, "need at least 2 classes, have m=" + std::to_string(classes));
        }
        if (rows == 0 || features.size() != rows * cols || labels.size() != rows) {
            fail(Errc::DegenerateLabels, "empty or malformed dataset");
        }
        for (float v : features) {
            if (!std::isfinite(v)) {
                fail(Errc::NonFiniteFeature, "training features of channel '" + channel + "'");
            }
        }
        std::vector<int> count(static_cast<std::size_t>(classes), 0);
        for (int l : labels) {
            if (l < 0 || l >= classes) {
                fail(Errc::DegenerateLabels, "label " + std::to_string(l) + " outside [0, " + std::to_string(classes) + ")");
            }
            ++count[static_cast<std::size_t>(l)];
        }
        for (int c = 0; c < classes; ++c) {
            if (count[static_cast<std::size_t>(c)] == 0) {
                fail(Errc::DegenerateLabels, "class " + std::to_string(c) + " has no training samples (channel '" +
                                                 channel + "')");
            }
        }
    }
};

/// Per-dimension z-score, learned from training rows only. Zero-variance dimensions use std 1.
struct Normalizer {
    std::vector<float> mean;
    std::vector<float> stddev;

    static Normalizer fit(const LabeledDataset& d) {
        Normalizer n;
        std::vector<double> m(d.cols, 0.0), s(d.cols, 0.0);
        for (std::size_t i = 0; i < d.rows; ++i) {
            const auto r = d.row(i);
            for (std::size_t j = 0; j < d.cols; ++j) {
                m[j] += r[j];
            }
        }
        for (auto& v : m) {
            v /= static_cast<double>(d.rows);
        }
        for (std::size_t i = 0; i < d.rows; ++i) {
            const auto r = d.row(i);
            for (std::size_t j = 0; j < d.cols; ++j) {
                const double e = r[j] - m[j];
                s[j] += e * e;
            }
        }
        n.mean.resize(d.cols);
        n.stddev.resize(d.cols);
        for (std::size_t j = 0; j < d.cols; ++j) {
            n.mean[j] = static_cast<float>(m[j]);
            const float sd = static_cast<float>(std::sqrt(s[j] / static_cast<double>(d.rows)));
            n.stddev[j] = (sd > 0.0f && std::isfinite(sd)) ? sd : 1.0f;
        }
        return n;
    }

    std::size_t dim() const { return mean.size(); }

    void apply(std::span<const float> x, std::span<float> out) const {
        for (std::size_t j = 0; j < x.size(); ++j) {
            out[j] = (x[j] - mean[j]) / stddev[j];
        }
    }

    std::vector<float> apply(std::span<const float> x) const {
        std::vector<float> out(x.size());
        apply(x, out);
        return out;
    }

    /// Normalized copy of a whole dataset (labels carried over).
    LabeledDataset apply(const LabeledDataset& d) const {
        LabeledDataset out = d;
        for (std::size_t i = 0; i < d.rows; ++i) {
            apply(d.row(i), std::span<float>(out.features.data() + i * d.cols, d.cols));
        }
        return out;
    }
};

/// Index of the largest entry; ties go to the lowest index.
inline int argmax(std::span<const double> p) {
    int best = 0;
    for (std::size_t i = 1; i < p.size(); ++i) {
        if (p[i] > p[static_cast<std::size_t>(best)]) {
            best = static_cast<int>(i);
        }
    }
    return best;
}

} // namespace egofall
