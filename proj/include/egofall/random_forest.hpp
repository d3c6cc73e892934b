#pragma once

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <span>
#include <vector>

#include "labeled_dataset.hpp"
#include "rng.hpp"

namespace egofall {

struct RfOptions {
    int trees = 100;
};

struct TreeNode {
    static constexpr std::uint32_t kLeaf = 0xFFFFFFFFu;
    std::uint32_t feature = kLeaf;
    float threshold = 0.0f; // x[feature] <= threshold goes left
    std::uint32_t left = 0;
    std::uint32_t right = 0;
    std::uint32_t label = 0; // leaf class

    bool leaf() const { return feature == kLeaf; }
    bool operator==(const TreeNode&) const = default;
};

using DecisionTree = std::vector<TreeNode>;

struct ForestModel {
    std::vector<DecisionTree> trees;
    bool operator==(const ForestModel&) const = default;
};

namespace detail {

inline double gini(std::span<const int> counts, int total) {
    if (total == 0) {
        return 0.0;
    }
    double s = 0.0;
    for (int c : counts) {
        const double p = static_cast<double>(c) / total;
        s += p * p;
    }
    return 1.0 - s;
}

struct SplitChoice {
    bool found = false;
    std::uint32_t feature = 0;
    float threshold = 0.0f;
    double impurity = 0.0;
};

// CART tree on already-normalized data. Thresholds are training values, so the split a test point
// takes depends only on its rank among the training values of that feature.
class TreeBuilder {
public:
    TreeBuilder(const LabeledDataset& d, std::size_t mtry, Rng& rng) : d_(d), mtry_(mtry), rng_(rng) {}

    DecisionTree build(std::vector<std::size_t> samples) {
        tree_.clear();
        grow(std::move(samples));
        return std::move(tree_);
    }

private:
    std::uint32_t majority(const std::vector<std::size_t>& s) const {
        std::vector<int> counts(static_cast<std::size_t>(d_.classes), 0);
        for (auto i : s) {
            ++counts[static_cast<std::size_t>(d_.labels[i])];
        }
        return static_cast<std::uint32_t>(std::max_element(counts.begin(), counts.end()) - counts.begin());
    }

    SplitChoice best_split(const std::vector<std::size_t>& s) {
        std::vector<std::uint32_t> features(d_.cols);
        for (std::size_t j = 0; j < d_.cols; ++j) {
            features[j] = static_cast<std::uint32_t>(j);
        }
        SplitChoice best;
        std::size_t evaluated = 0;
        std::vector<std::pair<float, int>> vals(s.size());
        std::vector<int> left(static_cast<std::size_t>(d_.classes)), right(static_cast<std::size_t>(d_.classes));
        // Draw features without replacement until mtry non-constant ones have been evaluated.
        for (std::size_t k = 0; k < features.size() && evaluated < mtry_; ++k) {
            std::swap(features[k], features[k + rng_.index(features.size() - k)]);
            const auto f = features[k];
            for (std::size_t i = 0; i < s.size(); ++i) {
                vals[i] = {d_.features[s[i] * d_.cols + f], d_.labels[s[i]]};
            }
            std::sort(vals.begin(), vals.end());
            if (vals.front().first == vals.back().first) {
                continue;
            }
            ++evaluated;
            std::fill(left.begin(), left.end(), 0);
            std::fill(right.begin(), right.end(), 0);
            for (const auto& v : vals) {
                ++right[static_cast<std::size_t>(v.second)];
            }
            const int n = static_cast<int>(vals.size());
            for (int i = 0; i + 1 < n; ++i) {
                ++left[static_cast<std::size_t>(vals[static_cast<std::size_t>(i)].second)];
                --right[static_cast<std::size_t>(vals[static_cast<std::size_t>(i)].second)];
                if (vals[static_cast<std::size_t>(i)].first == vals[static_cast<std::size_t>(i) + 1].first) {
                    continue;
                }
                const int nl = i + 1, nr = n - nl;
                const double imp = (nl * gini(left, nl) + nr * gini(right, nr)) / n;
                if (!best.found || imp < best.impurity) {
                    best = {true, f, vals[static_cast<std::size_t>(i)].first, imp};
                }
            }
        }
        return best;
    }

    std::uint32_t grow(std::vector<std::size_t> s) {
        const auto id = static_cast<std::uint32_t>(tree_.size());
        tree_.push_back({});
        const int first = d_.labels[s.front()];
        const bool pure = std::all_of(s.begin(), s.end(), [&](auto i) { return d_.labels[i] == first; });
        if (pure || s.size() < 2) {
            tree_[id].label = static_cast<std::uint32_t>(first);
            return id;
        }
        const auto split = best_split(s);
        if (!split.found) {
            tree_[id].label = majority(s);
            return id;
        }
        std::vector<std::size_t> ls, rs;
        for (auto i : s) {
            (d_.features[i * d_.cols + split.feature] <= split.threshold ? ls : rs).push_back(i);
        }
        s.clear();
        s.shrink_to_fit();
        const auto l = grow(std::move(ls));
        const auto r = grow(std::move(rs));
        auto& node = tree_[id];
        node.feature = split.feature;
        node.threshold = split.threshold;
        node.left = l;
        node.right = r;
        node.label = 0;
        return id;
    }

    const LabeledDataset& d_;
    std::size_t mtry_;
    Rng& rng_;
    DecisionTree tree_;
};

} // namespace detail

/// Bootstrap forest of Gini CART trees grown to purity, ceil(sqrt(D)) candidate features per split.
/// Tree t draws from an independent stream seeded by (seed, t). `normalized` must already be z-scored.
inline ForestModel fit_forest(const LabeledDataset& normalized, const RfOptions& opt, std::uint64_t seed) {
    if (opt.trees < 1) {
        fail(Errc::InvalidParams, "forest needs at least one tree");
    }
    const auto mtry = static_cast<std::size_t>(std::ceil(std::sqrt(static_cast<double>(normalized.cols))));
    ForestModel f;
    f.trees.reserve(static_cast<std::size_t>(opt.trees));
    for (int t = 0; t < opt.trees; ++t) {
        Rng rng(mix_seed(seed, static_cast<std::uint64_t>(t)));
        std::vector<std::size_t> sample(normalized.rows);
        for (auto& i : sample) {
            i = rng.index(normalized.rows);
        }
        detail::TreeBuilder builder(normalized, mtry, rng);
        f.trees.push_back(builder.build(std::move(sample)));
    }
    return f;
}

inline std::uint32_t tree_predict(const DecisionTree& tree, std::span<const float> x) {
    std::uint32_t n = 0;
    while (!tree[n].leaf()) {
        n = x[tree[n].feature] <= tree[n].threshold ? tree[n].left : tree[n].right;
    }
    return tree[n].label;
}

/// Fraction of trees voting for each class.
inline ProbabilityVector forest_proba(const ForestModel& f, std::span<const float> normalized_x, int classes) {
    ProbabilityVector p(static_cast<std::size_t>(classes), 0.0);
    for (const auto& t : f.trees) {
        p[tree_predict(t, normalized_x)] += 1.0;
    }
    for (auto& v : p) {
        v /= static_cast<double>(f.trees.size());
    }
    return p;
}

} // namespace egofall
