#pragma once

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <span>
#include <vector>

#include "labeled_dataset.hpp"
#include "rng.hpp"

namespace egofall {

struct MlpOptions {
    int hidden = 128;
    int epochs = 200;
    double learning_rate = 0.05;
    int batch_size = 32;
};

/// One-hidden-layer ReLU network with a softmax output, in double precision for training.
/// Parameter layout in `params`: W1 (hidden x inputs), b1 (hidden), W2 (classes x hidden), b2 (classes).
class MlpNetwork {
public:
    MlpNetwork(std::size_t inputs, std::size_t hidden, std::size_t classes)
        : params(hidden * inputs + hidden + classes * hidden + classes, 0.0), inputs_(inputs), hidden_(hidden),
          classes_(classes) {}

    /// Xavier-uniform hidden weights; output weights use a tenth of the Xavier range so the
    /// untrained network emits small logits. Biases start at zero.
    void initialize(Rng& rng) {
        const double a1 = std::sqrt(6.0 / static_cast<double>(inputs_ + hidden_));
        const double a2 = 0.1 * std::sqrt(6.0 / static_cast<double>(hidden_ + classes_));
        std::fill(params.begin(), params.end(), 0.0);
        for (std::size_t i = 0; i < hidden_ * inputs_; ++i) {
            params[i] = rng.uniform(-a1, a1);
        }
        double* w2 = params.data() + w2_offset();
        for (std::size_t i = 0; i < classes_ * hidden_; ++i) {
            w2[i] = rng.uniform(-a2, a2);
        }
    }

    std::size_t inputs() const { return inputs_; }
    std::size_t hidden() const { return hidden_; }
    std::size_t classes() const { return classes_; }

    std::size_t b1_offset() const { return hidden_ * inputs_; }
    std::size_t w2_offset() const { return b1_offset() + hidden_; }
    std::size_t b2_offset() const { return w2_offset() + classes_ * hidden_; }

    /// Softmax probabilities for one input.
    ProbabilityVector forward(std::span<const float> x) const {
        std::vector<double> h(hidden_);
        return forward(x, h);
    }

    /// Mean cross-entropy over the given rows; when `grad` is non-null it receives the gradient
    /// with respect to `params` (same layout).
    double loss(const LabeledDataset& d, std::span<const std::size_t> rows, std::vector<double>* grad) const {
        if (grad) {
            grad->assign(params.size(), 0.0);
        }
        std::vector<double> h(hidden_), dh(hidden_);
        const double inv_n = 1.0 / static_cast<double>(rows.size());
        double total = 0.0;
        const double* w2 = params.data() + w2_offset();
        for (auto r : rows) {
            const auto x = d.row(r);
            const auto p = forward(x, h);
            const auto y = static_cast<std::size_t>(d.labels[r]);
            total -= std::log(std::max(p[y], 1e-300));
            if (!grad) {
                continue;
            }
            double* g = grad->data();
            std::fill(dh.begin(), dh.end(), 0.0);
            for (std::size_t c = 0; c < classes_; ++c) {
                const double dz = (p[c] - (c == y ? 1.0 : 0.0)) * inv_n;
                g[b2_offset() + c] += dz;
                for (std::size_t k = 0; k < hidden_; ++k) {
                    g[w2_offset() + c * hidden_ + k] += dz * h[k];
                    dh[k] += dz * w2[c * hidden_ + k];
                }
            }
            for (std::size_t k = 0; k < hidden_; ++k) {
                if (h[k] <= 0.0) {
                    continue;
                }
                g[b1_offset() + k] += dh[k];
                double* gw = g + k * inputs_;
                for (std::size_t j = 0; j < inputs_; ++j) {
                    gw[j] += dh[k] * x[j];
                }
            }
        }
        return total * inv_n;
    }

    std::vector<double> params;

private:
    ProbabilityVector forward(std::span<const float> x, std::vector<double>& h) const {
        const double* w1 = params.data();
        const double* b1 = params.data() + b1_offset();
        const double* w2 = params.data() + w2_offset();
        const double* b2 = params.data() + b2_offset();
        for (std::size_t k = 0; k < hidden_; ++k) {
            double s = b1[k];
            const double* row = w1 + k * inputs_;
            for (std::size_t j = 0; j < inputs_; ++j) {
                s += row[j] * x[j];
            }
            h[k] = s > 0.0 ? s : 0.0;
        }
        ProbabilityVector z(classes_);
        for (std::size_t c = 0; c < classes_; ++c) {
            double s = b2[c];
            for (std::size_t k = 0; k < hidden_; ++k) {
                s += w2[c * hidden_ + k] * h[k];
            }
            z[c] = s;
        }
        return softmax(z);
    }

    static ProbabilityVector softmax(ProbabilityVector z) {
        const double mx = *std::max_element(z.begin(), z.end());
        double total = 0.0;
        for (auto& v : z) {
            v = std::exp(v - mx);
            total += v;
        }
        for (auto& v : z) {
            v /= total;
        }
        return z;
    }

    std::size_t inputs_, hidden_, classes_;
};

/// Stored (float) form of a trained network.
struct MlpModel {
    std::uint32_t hidden = 0;
    std::vector<float> params; // MlpNetwork layout
    bool operator==(const MlpModel&) const = default;
};

/// Mini-batch gradient descent on mean cross-entropy over shuffled batches. `normalized` must already
/// be z-scored.
inline MlpModel fit_mlp(const LabeledDataset& normalized, const MlpOptions& opt, std::uint64_t seed) {
    if (opt.hidden < 1 || opt.epochs < 0 || opt.batch_size < 1 || !(opt.learning_rate > 0.0)) {
        fail(Errc::InvalidParams, "MLP needs hidden >= 1, epochs >= 0, batch >= 1, lr > 0");
    }
    const auto& d = normalized;
    Rng rng(seed);
    MlpNetwork net(d.cols, static_cast<std::size_t>(opt.hidden), static_cast<std::size_t>(d.classes));
    net.initialize(rng);
    std::vector<std::size_t> order(d.rows);
    for (std::size_t i = 0; i < d.rows; ++i) {
        order[i] = i;
    }
    std::vector<double> grad;
    for (int e = 0; e < opt.epochs; ++e) {
        rng.shuffle(order);
        for (std::size_t start = 0; start < order.size(); start += static_cast<std::size_t>(opt.batch_size)) {
            const auto end = std::min(order.size(), start + static_cast<std::size_t>(opt.batch_size));
            const double l = net.loss(d, std::span<const std::size_t>(order).subspan(start, end - start), &grad);
            if (!std::isfinite(l)) {
                fail(Errc::DivergedLoss, "loss became non-finite in epoch " + std::to_string(e));
            }
            for (std::size_t i = 0; i < grad.size(); ++i) {
                net.params[i] -= opt.learning_rate * grad[i];
            }
        }
    }
    MlpModel m;
    m.hidden = static_cast<std::uint32_t>(opt.hidden);
    m.params.resize(net.params.size());
    for (std::size_t i = 0; i < net.params.size(); ++i) {
        m.params[i] = static_cast<float>(net.params[i]);
        if (!std::isfinite(m.params[i])) {
            fail(Errc::DivergedLoss, "parameters became non-finite");
        }
    }
    return m;
}

inline ProbabilityVector mlp_proba(const MlpModel& m, std::span<const float> normalized_x, int classes) {
    MlpNetwork net(normalized_x.size(), m.hidden, static_cast<std::size_t>(classes));
    for (std::size_t i = 0; i < m.params.size(); ++i) {
        net.params[i] = m.params[i];
    }
    return net.forward(normalized_x);
}

} // namespace egofall
