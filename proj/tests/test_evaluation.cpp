#include <numeric>

#include "test_util.hpp"

using namespace egofall;
using egofall::testing::expect_errc;
using egofall::testing::manifest_of;
using egofall::testing::record;

namespace {

struct Fixture {
    Manifest manifest;
    FeatureTable features;
};

/// `per_subject` clips for each subject, alternating classes. Features are 2-d blobs centred on the
/// label (or the flipped label for subjects in `inverted`).
Fixture make_fixture(int subjects, int per_subject, const std::set<std::string>& inverted = {}, std::uint64_t seed = 1) {
    Rng rng(seed);
    std::vector<ClipRecord> rs;
    Fixture fx;
    for (int s = 0; s < subjects; ++s) {
        for (int i = 0; i < per_subject; ++i) {
            const auto subject = "S" + std::to_string(s + 1);
            const bool fall = i % 2 == 1;
            auto r = record(subject + "_" + std::to_string(i), subject, fall ? BinaryLabel::fall : BinaryLabel::nonfall);
            r.camera = s == 0 ? Camera::infrared : Camera::rgb;
            r.time_of_day = s <= 1 ? TimeOfDay::night : TimeOfDay::daytime;
            rs.push_back(r);
            const double c = (fall != static_cast<bool>(inverted.count(subject))) ? 1.0 : -1.0;
            for (auto m : kAllModalities) {
                const double spread = m == Modality::hog ? 3.0 : 0.6;
                fx.features.set(r.clip_id, m,
                                {static_cast<float>(rng.normal(c, spread)), static_cast<float>(rng.normal(0.0, 1.0))});
            }
        }
    }
    fx.manifest = manifest_of(rs);
    return fx;
}

ExperimentConfig fast_config(std::vector<Modality> mods = {std::begin(kAllModalities), std::end(kAllModalities)}) {
    ExperimentConfig cfg;
    cfg.modalities = std::move(mods);
    cfg.base.rf.trees = 15;
    cfg.base.svm.epochs = 10;
    cfg.fusion = {8, 60, 0.05, 16};
    cfg.inner_folds = 3;
    cfg.k = 3;
    return cfg;
}

} // namespace

TEST(Accuracy, Examples) {
    const std::vector<int> y{0, 1, 1, 0};
    EXPECT_EQ(accuracy(y, y), 1.0);
    EXPECT_EQ(accuracy(std::vector<int>{1, 0, 0, 1}, y), 0.0);
    EXPECT_EQ(accuracy(std::vector<int>{0, 1, 1, 1}, y), 0.75);
    const std::vector<double> v{0.5, 1.0};
    const auto [mean, sd] = mean_and_population_std(v);
    EXPECT_DOUBLE_EQ(mean, 0.75);
    EXPECT_DOUBLE_EQ(sd, 0.25);
}

TEST(RunInternal, TwoFoldsOnFourClips) {
    const auto fx = make_fixture(1, 4);
    auto cfg = fast_config({Modality::audio});
    cfg.k = 2;
    // pick a split seed that puts one fall and one non-fall in each half
    auto mixed = [&](const std::vector<Fold>& folds) {
        for (const auto& f : folds) {
            int falls = 0;
            for (const auto& id : f.val) {
                falls += fx.manifest.find(id).label_binary == BinaryLabel::fall;
            }
            if (falls != 1) {
                return false;
            }
        }
        return true;
    };
    while (!mixed(split_kfold(fx.manifest, 2, cfg.seed))) {
        ASSERT_LT(++cfg.seed, 100u);
    }
    const auto rep = run_internal(fx.manifest, fx.features, cfg);
    ASSERT_EQ(rep.units.size(), 2u);
    EXPECT_EQ(rep.system("audio").unit_accuracy.size(), 2u);
    EXPECT_FALSE(rep.has_system(kAllSystem));
}

TEST(RunInternal, ReportInvariants) {
    const auto fx = make_fixture(3, 12);
    const auto rep = run_internal(fx.manifest, fx.features, fast_config());
    EXPECT_EQ(rep.units.size(), 3u);
    EXPECT_GT(rep.guard_checks, 0u);
    for (const auto& name : {"hog", "lbp", "flow", "deep", "audio", "vision", "all", "average"}) {
        ASSERT_TRUE(rep.has_system(name)) << name;
    }
    std::vector<long> per_class(2, 0);
    for (const auto& r : fx.manifest.records) {
        ++per_class[static_cast<std::size_t>(fx.manifest.label(r, Task::binary))];
    }
    for (const auto& s : rep.systems) {
        EXPECT_TRUE(s.strata.empty());
        const double mean = std::accumulate(s.unit_accuracy.begin(), s.unit_accuracy.end(), 0.0) /
                            static_cast<double>(s.unit_accuracy.size());
        EXPECT_NEAR(s.mean, mean, 1e-12);
        for (double a : s.unit_accuracy) {
            EXPECT_GE(a, 0.0);
            EXPECT_LE(a, 1.0);
        }
        for (std::size_t c = 0; c < 2; ++c) {
            EXPECT_EQ(std::accumulate(s.confusion[c].begin(), s.confusion[c].end(), 0L), per_class[c]);
        }
    }
    EXPECT_GE(rep.fused().mean, 0.9);
}

TEST(RunExternal, InvertedSubjectStandsOut) {
    const auto fx = make_fixture(4, 16, {"S3"});
    const auto rep = run_external(fx.manifest, fx.features, fast_config({Modality::lbp, Modality::audio}));
    ASSERT_EQ(rep.units.size(), 4u);
    const auto& fused = rep.fused();
    double others = 0.0, odd = 0.0;
    for (std::size_t i = 0; i < rep.units.size(); ++i) {
        (rep.units[i].name == "S3" ? odd : others) += fused.unit_accuracy[i];
    }
    EXPECT_LT(odd, others / 3.0);
    EXPECT_EQ(fused.strata.size(), 3u);
    EXPECT_TRUE(fused.strata.count("infrared_night"));
    EXPECT_TRUE(fused.strata.count("rgb_night"));
    EXPECT_TRUE(fused.strata.count("rgb_day"));
}

TEST(RunExternal, ExcludedSubjectsAreSkipped) {
    const auto fx = make_fixture(4, 8);
    auto cfg = fast_config({Modality::audio});
    cfg.excluded_subjects = {"S2"};
    const auto rep = run_external(fx.manifest, fx.features, cfg);
    ASSERT_EQ(rep.units.size(), 3u);
    for (const auto& u : rep.units) {
        EXPECT_NE(u.name, "S2");
    }
}

TEST(RunExternal, DegenerateFold) {
    auto fx = make_fixture(3, 4);
    // S1 holds every fall: the round holding S1 out trains on nonfalls only
    std::vector<ClipRecord> rs = fx.manifest.records;
    for (auto& r : rs) {
        r.label_binary = r.subject_id == "S1" ? BinaryLabel::fall : BinaryLabel::nonfall;
        r.label_activity = r.subject_id == "S1" ? "fall_forward" : "walking";
    }
    const auto m = manifest_of(rs);
    expect_errc(Errc::DegenerateFold, [&] { run_external(m, fx.features, fast_config({Modality::audio})); });
}

TEST(RunEvaluation, MissingFeatures) {
    auto fx = make_fixture(2, 4);
    FeatureTable partial;
    for (const auto& r : fx.manifest.records) {
        partial.set(r.clip_id, Modality::hog, fx.features.get(r.clip_id, Modality::hog));
    }
    expect_errc(Errc::MissingFeatures,
                [&] { run_internal(fx.manifest, partial, fast_config({Modality::hog, Modality::audio})); });
}

TEST(LeakageGuard, DetectsOverlap) {
    detail::LeakageGuard g;
    g.disjoint({"a", "b"}, {"c"}, "unit");
    EXPECT_EQ(g.checks, 1u);
    expect_errc(Errc::LeakageDetected, [&] { g.disjoint({"a", "b"}, {"b"}, "unit"); });
    expect_errc(Errc::LeakageDetected, [&] { g.contains({"a"}, "z", "unit"); });
}

TEST(TrainStack, InnerFoldsStayInsideTraining) {
    const auto fx = make_fixture(2, 10);
    std::vector<std::string> train;
    for (const auto& r : fx.manifest.records) {
        if (r.subject_id == "S1") {
            train.push_back(r.clip_id);
        }
    }
    const auto stack = train_stack(fx.manifest, fx.features, fast_config(), train, 1, "unit");
    EXPECT_EQ(stack.base.size(), 5u);
    ASSERT_TRUE(stack.fused);
    ASSERT_TRUE(stack.vision);
    EXPECT_EQ(stack.vision->order, (std::vector<Modality>{Modality::hog, Modality::lbp, Modality::flow, Modality::deep}));
    // one disjointness check per inner validation clip and one pool check per clip and modality
    EXPECT_EQ(stack.guard_checks, train.size() + train.size() * 5);
}

TEST(SystemNames, Layout) {
    EXPECT_EQ(detail::system_names({Modality::hog}), (std::vector<std::string>{"hog"}));
    EXPECT_EQ(detail::system_names({Modality::hog, Modality::lbp}), (std::vector<std::string>{"hog", "lbp", "all", "average"}));
    EXPECT_EQ(detail::system_names({Modality::hog, Modality::lbp, Modality::audio}),
              (std::vector<std::string>{"hog", "lbp", "audio", "vision", "all", "average"}));
}
