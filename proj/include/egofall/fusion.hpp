#pragma once

#include <algorithm>
#include <map>
#include <string>
#include <string_view>
#include <utility>
#include <vector>

#include "classifiers.hpp"
#include "dataset.hpp"

namespace egofall {

/// Canonical modality order: hog, lbp, flow, deep, audio.
enum class Modality { hog = 0, lbp = 1, flow = 2, deep = 3, audio = 4 };

inline constexpr Modality kAllModalities[] = {Modality::hog, Modality::lbp, Modality::flow, Modality::deep,
                                              Modality::audio};

inline std::string_view to_string(Modality m) {
    switch (m) {
    case Modality::hog: return "hog";
    case Modality::lbp: return "lbp";
    case Modality::flow: return "flow";
    case Modality::deep: return "deep";
    case Modality::audio: return "audio";
    }
    return "?";
}

inline Modality parse_modality(std::string_view s) {
    for (auto m : kAllModalities) {
        if (to_string(m) == s) {
            return m;
        }
    }
    fail(Errc::UnknownEnumValue, "unknown modality '" + std::string(s) + "'");
}

/// Parses "hog,lbp,..." into canonical order; duplicates are rejected.
inline std::vector<Modality> parse_modalities(std::string_view list) {
    std::vector<Modality> out;
    for (const auto& tok : detail::split(list, ',')) {
        if (tok.empty()) {
            continue;
        }
        const auto m = parse_modality(tok);
        if (std::find(out.begin(), out.end(), m) != out.end()) {
            fail(Errc::BadConfig, "modality '" + tok + "' listed twice");
        }
        out.push_back(m);
    }
    std::sort(out.begin(), out.end());
    return out;
}

inline std::string join_modalities(const std::vector<Modality>& ms) {
    std::string s;
    for (auto m : ms) {
        if (!s.empty()) {
            s += ',';
        }
        s += to_string(m);
    }
    return s;
}

inline bool is_visual(Modality m) { return m != Modality::audio; }

/// Per-clip probability vectors, one per modality, all of the same length m.
struct ModalityBundle {
    std::vector<Modality> modalities;
    std::vector<ProbabilityVector> probs;

    std::size_t classes() const { return probs.empty() ? 0 : probs.front().size(); }

    void validate() const {
        if (probs.empty()) {
            fail(Errc::EmptyBundle, "bundle holds no modality outputs");
        }
        if (modalities.size() != probs.size()) {
            fail(Errc::InconsistentBundleShape, "modality tags and probability vectors differ in count");
        }
        for (const auto& p : probs) {
            if (p.size() != probs.front().size() || p.empty()) {
                fail(Errc::InconsistentBundleShape, "modalities disagree on the class count");
            }
        }
    }

    /// Concatenated probabilities, the fusion model's input row.
    std::vector<float> flatten() const {
        std::vector<float> x;
        for (const auto& p : probs) {
            for (double v : p) {
                x.push_back(static_cast<float>(v));
            }
        }
        return x;
    }
};

/// Builds a bundle for `active` (canonical order) from per-modality outputs; every active modality must be present.
inline ModalityBundle assemble_bundle(const std::map<Modality, ProbabilityVector>& outputs,
                                      std::vector<Modality> active) {
    std::sort(active.begin(), active.end());
    ModalityBundle b;
    for (auto m : active) {
        const auto it = outputs.find(m);
        if (it == outputs.end()) {
            fail(Errc::InconsistentBundleShape, "modality '" + std::string(to_string(m)) + "' has no output");
        }
        b.modalities.push_back(m);
        b.probs.push_back(it->second);
    }
    b.validate();
    return b;
}

/// Unweighted mean of the modality distributions.
inline ProbabilityVector fuse_average(const ModalityBundle& bundle) {
    bundle.validate();
    ProbabilityVector out(bundle.classes(), 0.0);
    for (const auto& p : bundle.probs) {
        for (std::size_t i = 0; i < out.size(); ++i) {
            out[i] += p[i];
        }
    }
    for (auto& v : out) {
        v /= static_cast<double>(bundle.probs.size());
    }
    return out;
}

/// Learned late fusion: an MLP over the concatenated bundle, bound to one modality order.
struct FusionModel {
    TrainedModel model;
    std::vector<Modality> order;
};

inline FusionModel train_fusion(const std::vector<std::pair<ModalityBundle, int>>& bundles, const MlpOptions& opt,
                                std::uint64_t seed) {
    if (bundles.empty()) {
        fail(Errc::EmptyBundle, "no fusion training bundles");
    }
    const auto& first = bundles.front().first;
    first.validate();
    LabeledDataset d;
    d.classes = static_cast<int>(first.classes());
    d.channel = "fusion";
    for (const auto& [b, label] : bundles) {
        b.validate();
        if (b.modalities != first.modalities || b.classes() != first.classes()) {
            fail(Errc::InconsistentBundleShape, "fusion bundles differ in modality order or class count");
        }
        d.add(b.flatten(), label);
    }
    FusionModel f;
    f.order = first.modalities;
    f.model = train_mlp(d, opt, seed);
    f.model.metadata["modalities"] = join_modalities(f.order);
    return f;
}

inline ProbabilityVector fuse_predict(const FusionModel& f, const ModalityBundle& bundle) {
    bundle.validate();
    if (bundle.modalities != f.order) {
        fail(Errc::InconsistentBundleShape, "bundle order '" + join_modalities(bundle.modalities) +
                                                "' does not match the model's '" + join_modalities(f.order) + "'");
    }
    if (bundle.classes() != f.model.classes) {
        fail(Errc::InconsistentBundleShape, "bundle has " + std::to_string(bundle.classes()) + " classes, model " +
                                                std::to_string(f.model.classes));
    }
    return predict_proba(f.model, bundle.flatten());
}

inline FusionModel fusion_from_model(TrainedModel m) {
    const auto it = m.metadata.find("modalities");
    if (it == m.metadata.end()) {
        fail(Errc::BadModelFile, "model has no modality-order metadata; not a fusion model");
    }
    FusionModel f;
    f.order = parse_modalities(it->second);
    if (f.order.empty() || f.order.size() * m.classes != m.dim) {
        fail(Errc::BadModelFile, "modality order does not match the model input dimension");
    }
    f.model = std::move(m);
    return f;
}

} // namespace egofall
