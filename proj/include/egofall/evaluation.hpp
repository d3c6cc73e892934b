#pragma once

#include <algorithm>
#include <atomic>
#include <cmath>
#include <map>
#include <optional>
#include <set>
#include <string>
#include <vector>

#include "classifiers.hpp"
#include "dataset.hpp"
#include "fusion.hpp"
#include "parallel.hpp"

namespace egofall {

/// Per-clip classifier inputs, keyed by clip id and modality.
class FeatureTable {
public:
    void set(const std::string& clip_id, Modality m, std::vector<float> v) { rows_[clip_id][m] = std::move(v); }

    bool has(const std::string& clip_id, Modality m) const {
        const auto it = rows_.find(clip_id);
        return it != rows_.end() && it->second.count(m);
    }

    const std::vector<float>& get(const std::string& clip_id, Modality m) const {
        const auto it = rows_.find(clip_id);
        if (it == rows_.end() || !it->second.count(m)) {
            fail(Errc::MissingFeatures, "no '" + std::string(to_string(m)) + "' features for clip " + clip_id);
        }
        return it->second.at(m);
    }

private:
    std::map<std::string, std::map<Modality, std::vector<float>>> rows_;
};

enum class EvalMode { internal, external };

inline std::string_view to_string(EvalMode m) { return m == EvalMode::internal ? "internal" : "external"; }

inline ModelKind default_base_kind(Modality m) {
    // random forest for handcrafted channels, SVM for deep and audio
    return (m == Modality::deep || m == Modality::audio) ? ModelKind::svm : ModelKind::rf;
}

struct ExperimentConfig {
    Task task = Task::binary;
    EvalMode mode = EvalMode::internal;
    int k = 10;
    std::uint64_t seed = 1;
    std::vector<Modality> modalities{std::begin(kAllModalities), std::end(kAllModalities)};
    std::set<std::string> excluded_subjects;
    ClassifierOptions base;
    std::map<Modality, ModelKind> base_kinds;
    MlpOptions fusion{32, 300, 0.05, 32};
    int inner_folds = 5;
    unsigned jobs = 1;
    /// Resolved configuration, echoed into reports.
    std::map<std::string, std::string> config_echo;
    std::string config_fingerprint;
    std::string timestamp = "unset";

    ModelKind kind_for(Modality m) const {
        const auto it = base_kinds.find(m);
        return it == base_kinds.end() ? default_base_kind(m) : it->second;
    }
};

/// System names in report order: single modalities, visual fusion, all-modality fusion, average baseline.
inline constexpr const char* kVisionSystem = "vision";
inline constexpr const char* kAllSystem = "all";
inline constexpr const char* kAverageSystem = "average";

struct SystemResult {
    std::string name;
    std::vector<double> unit_accuracy;
    double mean = 0.0;
    double std = 0.0;
    std::map<std::string, double> strata;
    std::vector<std::vector<long>> confusion; // [true][predicted]
};

struct EvaluationUnit {
    std::string name; // fold index or held-out subject
    std::size_t test_count = 0;
};

struct EvaluationReport {
    EvalMode mode = EvalMode::internal;
    Task task = Task::binary;
    std::vector<std::string> class_names;
    std::vector<EvaluationUnit> units;
    std::vector<SystemResult> systems;
    std::map<std::string, std::string> config_echo;
    std::string config_fingerprint;
    std::string timestamp;
    std::size_t guard_checks = 0;

    const SystemResult& system(std::string_view name) const {
        for (const auto& s : systems) {
            if (s.name == name) {
                return s;
            }
        }
        fail(Errc::Empty, "report has no system '" + std::string(name) + "'");
    }
    bool has_system(std::string_view name) const {
        return std::any_of(systems.begin(), systems.end(), [&](const auto& s) { return s.name == name; });
    }
    /// The all-modality fusion result.
    const SystemResult& fused() const { return system(kAllSystem); }
};

inline double accuracy(std::span<const int> predictions, std::span<const int> labels) {
    if (predictions.size() != labels.size()) {
        fail(Errc::LengthMismatch, std::to_string(predictions.size()) + " predictions for " +
                                       std::to_string(labels.size()) + " labels");
    }
    if (labels.empty()) {
        fail(Errc::Empty, "accuracy of an empty set");
    }
    std::size_t hit = 0;
    for (std::size_t i = 0; i < labels.size(); ++i) {
        hit += predictions[i] == labels[i] ? 1 : 0;
    }
    return static_cast<double>(hit) / static_cast<double>(labels.size());
}

inline std::pair<double, double> mean_and_population_std(std::span<const double> v) {
    if (v.empty()) {
        return {0.0, 0.0};
    }
    double m = 0.0;
    for (double x : v) {
        m += x;
    }
    m /= static_cast<double>(v.size());
    double s = 0.0;
    for (double x : v) {
        s += (x - m) * (x - m);
    }
    return {m, std::sqrt(s / static_cast<double>(v.size()))};
}

inline std::string stratum_of(const ClipRecord& r) {
    return std::string(r.camera == Camera::rgb ? "rgb" : "infrared") +
           (r.time_of_day == TimeOfDay::daytime ? "_day" : "_night");
}

/// Predicted classes for one split, per system, aligned with the test ids.
struct SplitOutcome {
    std::vector<std::string> test_ids;
    std::map<std::string, std::vector<int>> predictions;
    std::size_t guard_checks = 0;
};

namespace detail {

inline std::vector<std::string> system_names(const std::vector<Modality>& active) {
    std::vector<std::string> names;
    for (auto m : active) {
        names.emplace_back(to_string(m));
    }
    const auto visual = std::count_if(active.begin(), active.end(), is_visual);
    if (visual >= 2 && static_cast<std::size_t>(visual) < active.size()) {
        names.emplace_back(kVisionSystem);
    }
    if (active.size() >= 2) {
        names.emplace_back(kAllSystem);
        names.emplace_back(kAverageSystem);
    }
    return names;
}

class LeakageGuard {
public:
    void disjoint(const std::vector<std::string>& train, const std::vector<std::string>& test, const std::string& what) {
        std::set<std::string> t(train.begin(), train.end());
        for (const auto& id : test) {
            ++checks;
            if (t.count(id)) {
                fail(Errc::LeakageDetected, what + ": clip " + id + " is on both sides of the split");
            }
        }
    }
    void contains(const std::set<std::string>& pool, const std::string& id, const std::string& what) {
        ++checks;
        if (!pool.count(id)) {
            fail(Errc::LeakageDetected, what + ": clip " + id + " is outside the training split");
        }
    }
    std::size_t checks = 0;
};

inline LabeledDataset gather(const Manifest& m, const FeatureTable& ft, const std::vector<std::string>& ids,
                             Modality mod, Task task) {
    LabeledDataset d;
    d.classes = m.class_count(task);
    d.channel = std::string(to_string(mod));
    for (const auto& id : ids) {
        d.add(ft.get(id, mod), m.label(m.find(id), task));
    }
    return d;
}

/// Class-stratified assignment of ids to `k` folds, dealt round-robin after a seeded shuffle.
inline std::vector<int> stratified_folds(const std::vector<int>& labels, int classes, int k, std::uint64_t seed) {
    std::vector<int> fold(labels.size(), 0);
    Rng rng(seed);
    std::size_t dealt = 0;
    for (int c = 0; c < classes; ++c) {
        std::vector<std::size_t> members;
        for (std::size_t i = 0; i < labels.size(); ++i) {
            if (labels[i] == c) {
                members.push_back(i);
            }
        }
        rng.shuffle(members);
        for (auto i : members) {
            fold[i] = static_cast<int>(dealt++ % static_cast<std::size_t>(k));
        }
    }
    return fold;
}

} // namespace detail

/// Base models plus the stacked fusion models trained on one training split.
struct StackModels {
    std::map<Modality, TrainedModel> base;
    std::optional<FusionModel> fused;  // all active modalities
    std::optional<FusionModel> vision; // visual modalities only, when audio is also active
    std::size_t guard_checks = 0;
};

/// Trains every active modality's base model on `train`, then the fusion MLPs on out-of-fold base
/// predictions from class-stratified inner folds of `train`, so no fusion input comes from a base
/// model that saw the clip.
inline StackModels train_stack(const Manifest& manifest, const FeatureTable& features, const ExperimentConfig& cfg,
                               const std::vector<std::string>& train, std::uint64_t seed, const std::string& unit_name,
                               bool with_vision = true) {
    detail::LeakageGuard guard;
    const int m = manifest.class_count(cfg.task);
    const auto& active = cfg.modalities;
    if (active.empty()) {
        fail(Errc::BadConfig, "no modalities configured");
    }
    std::vector<int> train_labels;
    for (const auto& id : train) {
        train_labels.push_back(manifest.label(manifest.find(id), cfg.task));
    }
    std::vector<int> per_class(static_cast<std::size_t>(m), 0);
    for (int l : train_labels) {
        ++per_class[static_cast<std::size_t>(l)];
    }
    const int min_needed = active.size() >= 2 ? 2 : 1;
    for (int c = 0; c < m; ++c) {
        if (per_class[static_cast<std::size_t>(c)] < min_needed) {
            fail(Errc::DegenerateFold, unit_name + ": class '" + manifest.class_names(cfg.task)[static_cast<std::size_t>(c)] +
                                           "' has " + std::to_string(per_class[static_cast<std::size_t>(c)]) +
                                           " training clip(s)");
        }
    }
    auto model_seed = [&](Modality mod, std::uint64_t stage) {
        return mix_seed(mix_seed(seed, static_cast<std::uint64_t>(mod)), stage);
    };

    StackModels out;
    for (auto mod : active) {
        out.base.emplace(mod, train_model(cfg.kind_for(mod), detail::gather(manifest, features, train, mod, cfg.task),
                                          cfg.base, model_seed(mod, 0)));
    }
    if (active.size() < 2) {
        out.guard_checks = guard.checks;
        return out;
    }

    std::map<std::string, std::map<Modality, ProbabilityVector>> oof;
    const std::set<std::string> train_pool(train.begin(), train.end());
    const int inner = std::max(2, std::min(cfg.inner_folds, *std::min_element(per_class.begin(), per_class.end())));
    const auto fold_of = detail::stratified_folds(train_labels, m, inner, mix_seed(seed, 0xf01d));
    for (int j = 0; j < inner; ++j) {
        std::vector<std::string> inner_train, inner_val;
        for (std::size_t i = 0; i < train.size(); ++i) {
            (fold_of[i] == j ? inner_val : inner_train).push_back(train[i]);
        }
        guard.disjoint(inner_train, inner_val, unit_name + " inner fold " + std::to_string(j));
        for (auto mod : active) {
            const auto model = train_model(cfg.kind_for(mod), detail::gather(manifest, features, inner_train, mod, cfg.task),
                                           cfg.base, model_seed(mod, 1 + static_cast<std::uint64_t>(j)));
            for (const auto& id : inner_val) {
                guard.contains(train_pool, id, unit_name + " stacking input");
                oof[id][mod] = predict_proba(model, features.get(id, mod));
            }
        }
    }
    auto fuse = [&](std::vector<Modality> subset, std::uint64_t stage) {
        std::vector<std::pair<ModalityBundle, int>> bundles;
        for (std::size_t i = 0; i < train.size(); ++i) {
            bundles.emplace_back(assemble_bundle(oof.at(train[i]), subset), train_labels[i]);
        }
        return train_fusion(bundles, cfg.fusion, mix_seed(seed, stage));
    };
    std::vector<Modality> visual;
    std::copy_if(active.begin(), active.end(), std::back_inserter(visual), is_visual);
    if (with_vision && visual.size() >= 2 && visual.size() < active.size()) {
        out.vision = fuse(visual, 0xb2);
    }
    out.fused = fuse(active, 0xa11);
    out.guard_checks = guard.checks;
    return out;
}

/// Trains the stack on `train` and predicts `test` with every system.
inline SplitOutcome evaluate_split(const Manifest& manifest, const FeatureTable& features, const ExperimentConfig& cfg,
                                   const std::vector<std::string>& train, const std::vector<std::string>& test,
                                   std::uint64_t seed, const std::string& unit_name) {
    detail::LeakageGuard guard;
    guard.disjoint(train, test, unit_name);
    const auto stack = train_stack(manifest, features, cfg, train, seed, unit_name);
    const auto& active = cfg.modalities;

    SplitOutcome out;
    out.test_ids = test;
    std::map<std::string, std::map<Modality, ProbabilityVector>> test_probs;
    for (const auto& [mod, model] : stack.base) {
        auto& preds = out.predictions[std::string(to_string(mod))];
        for (const auto& id : test) {
            auto p = predict_proba(model, features.get(id, mod));
            preds.push_back(argmax(p));
            test_probs[id][mod] = std::move(p);
        }
    }
    auto predict_fused = [&](const char* name, const FusionModel& fm) {
        auto& preds = out.predictions[name];
        for (const auto& id : test) {
            preds.push_back(argmax(fuse_predict(fm, assemble_bundle(test_probs.at(id), fm.order))));
        }
    };
    if (stack.vision) {
        predict_fused(kVisionSystem, *stack.vision);
    }
    if (stack.fused) {
        predict_fused(kAllSystem, *stack.fused);
        auto& preds = out.predictions[kAverageSystem];
        for (const auto& id : test) {
            preds.push_back(argmax(fuse_average(assemble_bundle(test_probs.at(id), active))));
        }
    }
    out.guard_checks = guard.checks + stack.guard_checks;
    return out;
}

namespace detail {

inline Manifest without_excluded(const Manifest& m, const std::set<std::string>& excluded) {
    Manifest out = m;
    out.records.clear();
    for (const auto& r : m.records) {
        if (!excluded.count(r.subject_id)) {
            out.records.push_back(r);
        }
    }
    if (out.records.empty()) {
        fail(Errc::EmptyManifest, "every subject is excluded");
    }
    out.reindex();
    return out;
}

inline void require_features(const Manifest& m, const FeatureTable& ft, const std::vector<Modality>& active) {
    for (const auto& r : m.records) {
        for (auto mod : active) {
            ft.get(r.clip_id, mod);
        }
    }
}

inline EvaluationReport assemble_report(const Manifest& m, const ExperimentConfig& cfg,
                                        const std::vector<EvaluationUnit>& units,
                                        const std::vector<SplitOutcome>& outcomes, bool with_strata) {
    EvaluationReport rep;
    rep.mode = cfg.mode;
    rep.task = cfg.task;
    rep.class_names = m.class_names(cfg.task);
    rep.units = units;
    rep.config_echo = cfg.config_echo;
    rep.config_fingerprint = cfg.config_fingerprint;
    rep.timestamp = cfg.timestamp;
    const auto classes = static_cast<std::size_t>(m.class_count(cfg.task));
    for (const auto& o : outcomes) {
        rep.guard_checks += o.guard_checks;
    }
    for (const auto& name : system_names(cfg.modalities)) {
        SystemResult s;
        s.name = name;
        s.confusion.assign(classes, std::vector<long>(classes, 0));
        std::map<std::string, std::pair<long, long>> strata; // hits, total
        for (const auto& o : outcomes) {
            const auto& preds = o.predictions.at(name);
            std::vector<int> labels;
            for (std::size_t i = 0; i < o.test_ids.size(); ++i) {
                const auto& rec = m.find(o.test_ids[i]);
                const int y = m.label(rec, cfg.task);
                labels.push_back(y);
                ++s.confusion[static_cast<std::size_t>(y)][static_cast<std::size_t>(preds[i])];
                auto& st = strata[stratum_of(rec)];
                st.first += preds[i] == y ? 1 : 0;
                ++st.second;
            }
            s.unit_accuracy.push_back(accuracy(preds, labels));
        }
        std::tie(s.mean, s.std) = mean_and_population_std(s.unit_accuracy);
        if (with_strata) {
            for (const auto& [k, v] : strata) {
                s.strata[k] = static_cast<double>(v.first) / static_cast<double>(v.second);
            }
        }
        rep.systems.push_back(std::move(s));
    }
    return rep;
}

} // namespace detail

/// k-fold cross-validation over all non-excluded clips.
inline EvaluationReport run_internal(const Manifest& manifest, const FeatureTable& features, ExperimentConfig cfg) {
    cfg.mode = EvalMode::internal;
    const auto m = detail::without_excluded(manifest, cfg.excluded_subjects);
    detail::require_features(m, features, cfg.modalities);
    const auto folds = split_kfold(m, cfg.k, cfg.seed);
    std::vector<EvaluationUnit> units;
    for (std::size_t f = 0; f < folds.size(); ++f) {
        units.push_back({"fold" + std::to_string(f), folds[f].val.size()});
    }
    std::vector<SplitOutcome> outcomes(folds.size());
    parallel_for(folds.size(), cfg.jobs, [&](std::size_t f) {
        outcomes[f] = evaluate_split(m, features, cfg, folds[f].train, folds[f].val, mix_seed(cfg.seed, 1000 + f),
                                     units[f].name);
    });
    return detail::assemble_report(m, cfg, units, outcomes, false);
}

/// Leave-one-subject-out over the non-excluded subjects; strata come from the held-out clips.
inline EvaluationReport run_external(const Manifest& manifest, const FeatureTable& features, ExperimentConfig cfg) {
    cfg.mode = EvalMode::external;
    const auto rounds = split_loso(manifest, cfg.excluded_subjects);
    const auto m = detail::without_excluded(manifest, cfg.excluded_subjects);
    detail::require_features(m, features, cfg.modalities);
    std::vector<EvaluationUnit> units;
    for (const auto& r : rounds) {
        units.push_back({r.held_out_subject, r.test.size()});
    }
    std::vector<SplitOutcome> outcomes(rounds.size());
    parallel_for(rounds.size(), cfg.jobs, [&](std::size_t i) {
        const auto& r = rounds[i];
        std::set<std::string> test_subjects;
        for (const auto& id : r.test) {
            test_subjects.insert(m.find(id).subject_id);
        }
        for (const auto& id : r.train) {
            if (test_subjects.count(m.find(id).subject_id)) {
                fail(Errc::LeakageDetected, "subject " + m.find(id).subject_id + " on both sides of round " +
                                                r.held_out_subject);
            }
        }
        outcomes[i] = evaluate_split(m, features, cfg, r.train, r.test, mix_seed(cfg.seed, 2000 + i), r.held_out_subject);
    });
    return detail::assemble_report(m, cfg, units, outcomes, true);
}

inline EvaluationReport run_evaluation(const Manifest& manifest, const FeatureTable& features, const ExperimentConfig& cfg) {
    return cfg.mode == EvalMode::internal ? run_internal(manifest, features, cfg) : run_external(manifest, features, cfg);
}

} // namespace egofall
