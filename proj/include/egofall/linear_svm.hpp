#pragma once

#include <cmath>
#include <cstdint>
#include <span>
#include <vector>

#include "labeled_dataset.hpp"
#include "rng.hpp"

namespace egofall {

struct SvmOptions {
    int epochs = 30;
    double lambda = 1e-3;
};

/// One binary (class vs rest) linear scorer with its Platt sigmoid P(y=1|f) = 1 / (1 + exp(a*f + b)).
struct OneVsRestUnit {
    std::vector<float> weights;
    float bias = 0.0f;
    float platt_a = -1.0f;
    float platt_b = 0.0f;
    bool operator==(const OneVsRestUnit&) const = default;
};

struct SvmModel {
    std::vector<OneVsRestUnit> units; // one per class
    bool operator==(const SvmModel&) const = default;
};

inline double svm_margin(const OneVsRestUnit& u, std::span<const float> x) {
    double s = u.bias;
    for (std::size_t j = 0; j < x.size(); ++j) {
        s += static_cast<double>(u.weights[j]) * x[j];
    }
    return s;
}

inline double stable_sigmoid_neg(double z) {
    // 1 / (1 + exp(z)) without overflow
    return z >= 0 ? std::exp(-z) / (1.0 + std::exp(-z)) : 1.0 / (1.0 + std::exp(z));
}

/// Platt sigmoid fit by damped Newton with backtracking (Lin, Lin & Weng's formulation),
/// using smoothed targets. Returns {a, b}.
inline std::pair<double, double> fit_platt(std::span<const double> margins, std::span<const int> positive,
                                           int iterations = 50) {
    double prior1 = 0, prior0 = 0;
    for (int y : positive) {
        (y ? prior1 : prior0) += 1;
    }
    const double hi = (prior1 + 1.0) / (prior1 + 2.0);
    const double lo = 1.0 / (prior0 + 2.0);
    const std::size_t n = margins.size();
    std::vector<double> t(n);
    for (std::size_t i = 0; i < n; ++i) {
        t[i] = positive[i] ? hi : lo;
    }
    constexpr double min_step = 1e-10, sigma = 1e-12, eps = 1e-5;
    double a = 0.0, b = std::log((prior0 + 1.0) / (prior1 + 1.0));
    auto objective = [&](double aa, double bb) {
        double f = 0.0;
        for (std::size_t i = 0; i < n; ++i) {
            const double z = margins[i] * aa + bb;
            f += z >= 0 ? t[i] * z + std::log1p(std::exp(-z)) : (t[i] - 1.0) * z + std::log1p(std::exp(z));
        }
        return f;
    };
    double fval = objective(a, b);
    for (int it = 0; it < iterations; ++it) {
        double h11 = sigma, h22 = sigma, h21 = 0, g1 = 0, g2 = 0;
        for (std::size_t i = 0; i < n; ++i) {
            const double z = margins[i] * a + b;
            const double p = stable_sigmoid_neg(z);
            const double q = 1.0 - p;
            const double d2 = p * q;
            h11 += margins[i] * margins[i] * d2;
            h22 += d2;
            h21 += margins[i] * d2;
            const double d1 = t[i] - p;
            g1 += margins[i] * d1;
            g2 += d1;
        }
        if (std::abs(g1) < eps && std::abs(g2) < eps) {
            break;
        }
        const double det = h11 * h22 - h21 * h21;
        const double da = -(h22 * g1 - h21 * g2) / det;
        const double db = -(-h21 * g1 + h11 * g2) / det;
        const double gd = g1 * da + g2 * db;
        double step = 1.0;
        while (step >= min_step) {
            const double na = a + step * da, nb = b + step * db;
            const double nf = objective(na, nb);
            if (nf < fval + 1e-4 * step * gd) {
                a = na;
                b = nb;
                fval = nf;
                break;
            }
            step /= 2.0;
        }
        if (step < min_step) {
            break;
        }
    }
    return {a, b};
}

/// One-vs-rest linear SVMs trained by Pegasos-style stochastic subgradient descent on the
/// L2-regularized hinge loss (step 1/(lambda*t), bias as a constant-1 feature), each followed by
/// a Platt sigmoid fitted on its training margins. `normalized` must already be z-scored.
inline SvmModel fit_svm(const LabeledDataset& normalized, const SvmOptions& opt, std::uint64_t seed) {
    if (opt.epochs < 0 || !(opt.lambda > 0.0)) {
        fail(Errc::InvalidParams, "SVM needs epochs >= 0 and lambda > 0");
    }
    const auto& d = normalized;
    SvmModel model;
    for (int c = 0; c < d.classes; ++c) {
        Rng rng(mix_seed(seed, static_cast<std::uint64_t>(c)));
        // w = scale * v, so the shrink step costs O(1)
        std::vector<double> v(d.cols + 1, 0.0);
        double scale = 1.0;
        std::vector<std::size_t> order(d.rows);
        for (std::size_t i = 0; i < d.rows; ++i) {
            order[i] = i;
        }
        std::uint64_t t = 0;
        for (int e = 0; e < opt.epochs; ++e) {
            rng.shuffle(order);
            for (auto i : order) {
                ++t;
                const double eta = 1.0 / (opt.lambda * static_cast<double>(t));
                const double y = d.labels[i] == c ? 1.0 : -1.0;
                const auto x = d.row(i);
                double dot = v[d.cols];
                for (std::size_t j = 0; j < d.cols; ++j) {
                    dot += v[j] * x[j];
                }
                const double margin = y * scale * dot;
                const double shrink = 1.0 - eta * opt.lambda;
                if (shrink <= 0.0) {
                    std::fill(v.begin(), v.end(), 0.0);
                    scale = 1.0;
                } else {
                    scale *= shrink;
                }
                if (margin < 1.0) {
                    const double g = eta * y / scale;
                    for (std::size_t j = 0; j < d.cols; ++j) {
                        v[j] += g * x[j];
                    }
                    v[d.cols] += g;
                }
                if (scale < 1e-100) {
                    for (auto& w : v) {
                        w *= scale;
                    }
                    scale = 1.0;
                }
            }
        }
        OneVsRestUnit u;
        u.weights.resize(d.cols);
        for (std::size_t j = 0; j < d.cols; ++j) {
            u.weights[j] = static_cast<float>(scale * v[j]);
        }
        u.bias = static_cast<float>(scale * v[d.cols]);
        std::vector<double> margins(d.rows);
        std::vector<int> positive(d.rows);
        for (std::size_t i = 0; i < d.rows; ++i) {
            margins[i] = svm_margin(u, d.row(i));
            positive[i] = d.labels[i] == c ? 1 : 0;
        }
        const auto [a, b] = fit_platt(margins, positive);
        u.platt_a = static_cast<float>(a);
        u.platt_b = static_cast<float>(b);
        model.units.push_back(std::move(u));
    }
    return model;
}

/// Per-class Platt probabilities renormalized to sum to one.
inline ProbabilityVector svm_proba(const SvmModel& m, std::span<const float> normalized_x) {
    ProbabilityVector p(m.units.size());
    double total = 0.0;
    for (std::size_t c = 0; c < m.units.size(); ++c) {
        const auto& u = m.units[c];
        p[c] = stable_sigmoid_neg(static_cast<double>(u.platt_a) * svm_margin(u, normalized_x) + u.platt_b);
        total += p[c];
    }
    if (!(total > 0.0) || !std::isfinite(total)) {
        std::fill(p.begin(), p.end(), 1.0 / static_cast<double>(p.size()));
        return p;
    }
    for (auto& v : p) {
        v /= total;
    }
    return p;
}

} // namespace egofall
