#pragma once

#include <cstdint>
#include <filesystem>
#include <map>
#include <span>
#include <string>
#include <string_view>
#include <variant>
#include <vector>

#include "binary_io.hpp"
#include "labeled_dataset.hpp"
#include "linear_svm.hpp"
#include "mlp.hpp"
#include "random_forest.hpp"

namespace egofall {

enum class ModelKind : std::uint8_t { rf = 0, svm = 1, mlp = 2 };

inline std::string_view to_string(ModelKind k) {
    switch (k) {
    case ModelKind::rf: return "rf";
    case ModelKind::svm: return "svm";
    case ModelKind::mlp: return "mlp";
    }
    return "?";
}

/// A trained classifier with its training-split normalization. Immutable once built.
struct TrainedModel {
    ModelKind kind = ModelKind::rf;
    std::uint32_t dim = 0;
    std::uint32_t classes = 0;
    Normalizer normalization;
    std::variant<ForestModel, SvmModel, MlpModel> params;
    /// Free-form provenance (channel, modality order, fingerprints); serialized with the model.
    std::map<std::string, std::string> metadata;

    bool operator==(const TrainedModel& o) const {
        return kind == o.kind && dim == o.dim && classes == o.classes &&
               normalization.mean == o.normalization.mean && normalization.stddev == o.normalization.stddev &&
               params == o.params && metadata == o.metadata;
    }
};

namespace detail {

inline TrainedModel model_shell(ModelKind kind, const LabeledDataset& d, Normalizer norm) {
    TrainedModel m;
    m.kind = kind;
    m.dim = static_cast<std::uint32_t>(d.cols);
    m.classes = static_cast<std::uint32_t>(d.classes);
    m.normalization = std::move(norm);
    if (!d.channel.empty()) {
        m.metadata["channel"] = d.channel;
    }
    return m;
}

} // namespace detail

inline TrainedModel train_rf(const LabeledDataset& data, const RfOptions& opt, std::uint64_t seed) {
    data.validate();
    auto norm = Normalizer::fit(data);
    auto m = detail::model_shell(ModelKind::rf, data, norm);
    m.params = fit_forest(norm.apply(data), opt, seed);
    return m;
}

inline TrainedModel train_svm(const LabeledDataset& data, const SvmOptions& opt, std::uint64_t seed) {
    data.validate();
    auto norm = Normalizer::fit(data);
    auto m = detail::model_shell(ModelKind::svm, data, norm);
    m.params = fit_svm(norm.apply(data), opt, seed);
    return m;
}

inline TrainedModel train_mlp(const LabeledDataset& data, const MlpOptions& opt, std::uint64_t seed) {
    data.validate();
    auto norm = Normalizer::fit(data);
    auto m = detail::model_shell(ModelKind::mlp, data, norm);
    m.params = fit_mlp(norm.apply(data), opt, seed);
    return m;
}

struct ClassifierOptions {
    RfOptions rf;
    SvmOptions svm;
    MlpOptions mlp;
};

inline TrainedModel train_model(ModelKind kind, const LabeledDataset& data, const ClassifierOptions& opt,
                                std::uint64_t seed) {
    switch (kind) {
    case ModelKind::rf: return train_rf(data, opt.rf, seed);
    case ModelKind::svm: return train_svm(data, opt.svm, seed);
    case ModelKind::mlp: return train_mlp(data, opt.mlp, seed);
    }
    fail(Errc::InvalidParams, "unknown model kind");
}

inline ProbabilityVector predict_proba(const TrainedModel& model, std::span<const float> x) {
    if (x.size() != model.dim) {
        fail(Errc::DimMismatch, "input has " + std::to_string(x.size()) + " values, model expects " +
                                    std::to_string(model.dim));
    }
    for (float v : x) {
        if (!std::isfinite(v)) {
            fail(Errc::NonFiniteFeature, "prediction input contains a non-finite value");
        }
    }
    const auto z = model.normalization.apply(x);
    const int m = static_cast<int>(model.classes);
    switch (model.kind) {
    case ModelKind::rf: return forest_proba(std::get<ForestModel>(model.params), z, m);
    case ModelKind::svm: return svm_proba(std::get<SvmModel>(model.params), z);
    case ModelKind::mlp: return mlp_proba(std::get<MlpModel>(model.params), z, m);
    }
    fail(Errc::InvalidParams, "unknown model kind");
}

inline int predict_class(const TrainedModel& model, std::span<const float> x) {
    return argmax(predict_proba(model, x));
}

// ---------------------------------------------------------------------------
// EFMD container: "EFMD", u16 version, u8 kind, u32 D, u32 m, f32[D] mean, f32[D] std,
// kind payload, u32 metadata count, then (str key, str value) pairs; strings are u32 length + bytes.
// ---------------------------------------------------------------------------

inline constexpr std::uint16_t kModelVersion = 1;

inline std::vector<std::uint8_t> serialize_model(const TrainedModel& m) {
    bin::Writer w;
    w.magic("EFMD");
    w.u16(kModelVersion);
    w.u8(static_cast<std::uint8_t>(m.kind));
    w.u32(m.dim);
    w.u32(m.classes);
    w.f32s(m.normalization.mean);
    w.f32s(m.normalization.stddev);
    switch (m.kind) {
    case ModelKind::rf: {
        const auto& f = std::get<ForestModel>(m.params);
        w.u32(static_cast<std::uint32_t>(f.trees.size()));
        for (const auto& t : f.trees) {
            w.u32(static_cast<std::uint32_t>(t.size()));
            for (const auto& n : t) {
                w.u32(n.feature);
                w.f32(n.threshold);
                w.u32(n.left);
                w.u32(n.right);
                w.u32(n.label);
            }
        }
        break;
    }
    case ModelKind::svm: {
        for (const auto& u : std::get<SvmModel>(m.params).units) {
            w.f32s(u.weights);
            w.f32(u.bias);
            w.f32(u.platt_a);
            w.f32(u.platt_b);
        }
        break;
    }
    case ModelKind::mlp: {
        const auto& p = std::get<MlpModel>(m.params);
        w.u32(p.hidden);
        w.f32s(p.params);
        break;
    }
    }
    w.u32(static_cast<std::uint32_t>(m.metadata.size()));
    for (const auto& [k, v] : m.metadata) {
        w.str(k);
        w.str(v);
    }
    return w.take();
}

inline TrainedModel deserialize_model(std::span<const std::uint8_t> data) {
    bin::Reader r(data, Errc::BadModelFile);
    if (!r.magic("EFMD")) {
        fail(Errc::BadModelFile, "bad magic");
    }
    if (r.u16() != kModelVersion) {
        fail(Errc::BadModelFile, "unsupported model version");
    }
    TrainedModel m;
    const auto kind = r.u8();
    if (kind > static_cast<std::uint8_t>(ModelKind::mlp)) {
        fail(Errc::BadModelFile, "unknown model kind " + std::to_string(kind));
    }
    m.kind = static_cast<ModelKind>(kind);
    m.dim = r.u32();
    m.classes = r.u32();
    m.normalization.mean = r.f32s(m.dim);
    m.normalization.stddev = r.f32s(m.dim);
    switch (m.kind) {
    case ModelKind::rf: {
        ForestModel f;
        f.trees.resize(r.u32());
        for (auto& t : f.trees) {
            t.resize(r.u32());
            for (auto& n : t) {
                n.feature = r.u32();
                n.threshold = r.f32();
                n.left = r.u32();
                n.right = r.u32();
                n.label = r.u32();
                const bool bad_split = !n.leaf() && (n.feature >= m.dim || n.left >= t.size() || n.right >= t.size());
                if (bad_split || (n.leaf() && n.label >= m.classes)) {
                    fail(Errc::BadModelFile, "corrupt tree node");
                }
            }
            if (t.empty()) {
                fail(Errc::BadModelFile, "empty tree");
            }
        }
        m.params = std::move(f);
        break;
    }
    case ModelKind::svm: {
        SvmModel s;
        s.units.resize(m.classes);
        for (auto& u : s.units) {
            u.weights = r.f32s(m.dim);
            u.bias = r.f32();
            u.platt_a = r.f32();
            u.platt_b = r.f32();
        }
        m.params = std::move(s);
        break;
    }
    case ModelKind::mlp: {
        MlpModel p;
        p.hidden = r.u32();
        const std::size_t n = static_cast<std::size_t>(p.hidden) * m.dim + p.hidden +
                              static_cast<std::size_t>(m.classes) * p.hidden + m.classes;
        p.params = r.f32s(n);
        m.params = std::move(p);
        break;
    }
    }
    const auto meta = r.u32();
    for (std::uint32_t i = 0; i < meta; ++i) {
        auto k = r.str();
        m.metadata[k] = r.str();
    }
    if (r.remaining() != 0) {
        fail(Errc::BadModelFile, "trailing bytes after model");
    }
    return m;
}

inline void save_model(const std::filesystem::path& p, const TrainedModel& m) {
    bin::write_file_atomic(p, serialize_model(m));
}

inline TrainedModel load_model(const std::filesystem::path& p) { return deserialize_model(bin::read_file(p)); }

} // namespace egofall
