// Acceptance checks: prints one PASS/FAIL line per criterion and exits nonzero if any fail.

#include <chrono>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <regex>
#include <set>
#include <sstream>

#include "oracles.hpp"

using namespace egofall;
namespace fs = std::filesystem;
using Clock = std::chrono::steady_clock;

namespace {

int failures = 0;

void verdict(int n, bool ok, const std::string& what, const std::string& detail) {
    std::printf("criterion %d: %s  %s (%s)\n", n, ok ? "PASS" : "FAIL", what.c_str(), detail.c_str());
    std::fflush(stdout);
    failures += ok ? 0 : 1;
}

double seconds_since(Clock::time_point t0) { return std::chrono::duration<double>(Clock::now() - t0).count(); }

std::string fmt(const char* f, double v) {
    char buf[64];
    std::snprintf(buf, sizeof buf, f, v);
    return buf;
}

std::string read_file(const fs::path& p) {
    std::ifstream in(p, std::ios::binary);
    std::ostringstream s;
    s << in.rdbuf();
    return s.str();
}

// 1. MFCC against the naive-DFT reference.
void mfcc_oracle() {
    Rng rng(101);
    const MfccOptions opt;
    double worst = 0.0, impl_time = 0.0;
    for (int s = 0; s < 50; ++s) {
        std::vector<double> x(16000);
        const double amp = rng.uniform(0.01, 1.0);
        for (auto& v : x) {
            v = rng.uniform(-amp, amp);
        }
        const auto t0 = Clock::now();
        const auto c = mfcc(x, 16000, opt);
        impl_time += seconds_since(t0);
        worst = std::max(worst, oracle::max_relative_error(c.values, oracle::naive_mfcc(x, opt)));
    }
    verdict(1, worst <= 1e-6 && impl_time < 10.0, "MFCC matches naive DFT on 50 random 1 s signals",
            "max rel err " + fmt("%.3g", worst) + ", runtime " + fmt("%.2f", impl_time) + " s");
}

// 2. Cosine similarity against direct summation.
void cosine_oracle() {
    Rng rng(202);
    double err = 0.0, sym = 0.0, scale = 0.0, bound = 0.0;
    for (int i = 0; i < 1000; ++i) {
        std::vector<double> a(1152), b(1152);
        for (std::size_t j = 0; j < a.size(); ++j) {
            a[j] = rng.normal();
            b[j] = i % 2 ? rng.uniform() : rng.normal();
        }
        const double c = cosine_similarity(a, b);
        err = std::max(err, std::abs(c - oracle::direct_cosine(a, b)));
        sym = std::max(sym, std::abs(c - cosine_similarity(b, a)));
        const double k = rng.uniform(1e-3, 1e3);
        auto ka = a;
        for (auto& v : ka) {
            v *= k;
        }
        scale = std::max(scale, std::abs(c - cosine_similarity(ka, b)));
        bound = std::max(bound, std::abs(c));
    }
    verdict(2, err <= 1e-9 && sym <= 1e-12 && scale <= 1e-12 && bound <= 1.0 + 1e-12,
            "cosine similarity matches direct summation on 1000 pairs of dim 1152",
            "max err " + fmt("%.3g", err) + ", symmetry " + fmt("%.3g", sym) + ", scale " + fmt("%.3g", scale));
}

// 3. Alignment contract for every length 1..2380 in both modes.
void alignment_contract() {
    Rng rng(303);
    std::size_t bad = 0;
    for (auto mode : {AlignMode::min_peak, AlignMode::max_peak}) {
        AlignOptions opt;
        opt.mode = mode;
        const std::size_t w = 240;
        for (std::size_t n = 1; n <= 2380; ++n) {
            std::vector<double> seq(n);
            for (auto& v : seq) {
                v = rng.uniform(-1.0, 1.0);
            }
            const std::size_t lo = n > w ? (n - w) / 2 : 0, hi = n > w ? lo + w : n;
            std::size_t best = lo;
            for (std::size_t i = lo; i < hi; ++i) {
                if (mode == AlignMode::min_peak ? seq[i] < seq[best] : seq[i] > seq[best]) {
                    best = i;
                }
            }
            const auto out = truncate_align(seq, opt);
            const std::set<double> members(seq.begin(), seq.end());
            bool ok = out.values.size() == 238 && out.values[119] == seq[best] && out.peak_index == best;
            for (double v : out.values) {
                ok = ok && members.count(v);
            }
            bad += ok ? 0 : 1;
        }
    }
    verdict(3, bad == 0, "truncate_align length and centring for lengths 1..2380, both modes",
            std::to_string(bad) + " violations in 4760 cases");
}

// 4. MLP gradients against central differences.
void gradient_check() {
    Rng rng(404);
    double worst = 0.0;
    for (int net_i = 0; net_i < 20; ++net_i) {
        const auto inputs = 2 + rng.index(6), hidden = 2 + rng.index(8), classes = 2 + rng.index(4);
        LabeledDataset d;
        d.classes = static_cast<int>(classes);
        for (int i = 0; i < 5; ++i) {
            std::vector<float> x(inputs);
            for (auto& v : x) {
                v = static_cast<float>(rng.normal());
            }
            d.add(x, static_cast<int>(rng.index(classes)));
        }
        MlpNetwork net(inputs, hidden, classes);
        net.initialize(rng);
        for (auto& p : net.params) {
            p += rng.normal(0.0, 0.3);
        }
        worst = std::max(worst, oracle::gradient_check(net, d, 1e-4));
    }
    verdict(4, worst < 1e-4, "MLP gradients match central differences on 20 networks", "max rel err " + fmt("%.3g", worst));
}

// 5. Every classifier and fusion output is a distribution.
void probability_contracts() {
    Rng rng(505);
    LabeledDataset d;
    d.classes = 3;
    for (int i = 0; i < 90; ++i) {
        const int y = i % 3;
        std::vector<float> x(6);
        for (std::size_t j = 0; j < x.size(); ++j) {
            x[j] = static_cast<float>(rng.normal(j == static_cast<std::size_t>(y) ? 2.0 : 0.0, 1.0));
        }
        d.add(x, y);
    }
    ClassifierOptions opt;
    opt.rf.trees = 30;
    opt.mlp = {16, 50, 0.05, 16};
    double worst_sum = 0.0, min_entry = 1.0;
    auto check = [&](const ProbabilityVector& p) {
        double s = 0.0;
        for (double v : p) {
            s += v;
            min_entry = std::min(min_entry, v);
        }
        worst_sum = std::max(worst_sum, std::abs(s - 1.0));
    };
    std::vector<TrainedModel> models;
    for (auto k : {ModelKind::rf, ModelKind::svm, ModelKind::mlp}) {
        models.push_back(train_model(k, d, opt, 5));
    }
    const std::vector<Modality> mods{Modality::hog, Modality::deep, Modality::audio};
    auto random_bundle = [&] {
        ModalityBundle b;
        for (auto m : mods) {
            ProbabilityVector p(3);
            double s = 0.0;
            for (auto& v : p) {
                v = rng.uniform();
                s += v;
            }
            for (auto& v : p) {
                v /= s;
            }
            b.modalities.push_back(m);
            b.probs.push_back(p);
        }
        return b;
    };
    std::vector<std::pair<ModalityBundle, int>> train;
    for (int i = 0; i < 60; ++i) {
        auto b = random_bundle();
        train.emplace_back(b, argmax(b.probs[0]));
    }
    const auto fusion = train_fusion(train, {16, 50, 0.05, 16}, 9);
    for (int i = 0; i < 1000; ++i) {
        std::vector<float> x(6);
        for (auto& v : x) {
            v = static_cast<float>(rng.uniform(-20.0, 20.0));
        }
        for (const auto& m : models) {
            check(predict_proba(m, x));
        }
        const auto b = random_bundle();
        check(fuse_predict(fusion, b));
        check(fuse_average(b));
    }
    verdict(5, worst_sum <= 1e-6 && min_entry >= 0.0, "classifier and fusion outputs are distributions on 1000 inputs",
            "max |sum-1| " + fmt("%.3g", worst_sum) + ", min entry " + fmt("%.3g", min_entry));
}

// 6. Split hygiene on random manifests, and the leakage guard on end-to-end runs.
void split_hygiene() {
    Rng rng(606);
    std::size_t bad = 0, guard_checks = 0, guard_fired = 0;
    for (int t = 0; t < 100; ++t) {
        const auto subjects = 2 + rng.index(5);
        const auto n = 2 * subjects + rng.index(40);
        std::vector<ClipRecord> rs;
        FeatureTable ft;
        for (std::size_t i = 0; i < n; ++i) {
            ClipRecord r;
            r.clip_id = "c" + std::to_string(i);
            r.subject_id = "P" + std::to_string(i % subjects);
            r.label_binary = (i / subjects) % 2 ? BinaryLabel::fall : BinaryLabel::nonfall;
            r.label_activity = r.label_binary == BinaryLabel::fall ? "fall" : "walk";
            r.media_path = r.clip_id;
            r.duration_s = 8.0;
            rs.push_back(r);
            const float c = r.label_binary == BinaryLabel::fall ? 1.0f : -1.0f;
            ft.set(r.clip_id, Modality::lbp, {c + static_cast<float>(rng.normal()), static_cast<float>(rng.normal())});
            ft.set(r.clip_id, Modality::audio, {c + static_cast<float>(rng.normal()), static_cast<float>(rng.normal())});
        }
        Manifest m;
        m.records = rs;
        m.activity_classes = {"walk", "fall"};
        m.fall_activities = {"fall"};
        m.reindex();

        const int k = 2 + static_cast<int>(rng.index(std::min<std::size_t>(9, n - 1)));
        std::multiset<std::string> seen;
        for (const auto& f : split_kfold(m, k, rng.index(1000))) {
            std::set<std::string> tr(f.train.begin(), f.train.end());
            for (const auto& id : f.val) {
                bad += tr.count(id);
            }
            bad += f.train.size() + f.val.size() == n ? 0 : 1;
            seen.insert(f.val.begin(), f.val.end());
        }
        bad += seen.size() == n && std::set<std::string>(seen.begin(), seen.end()).size() == n ? 0 : 1;

        const auto rounds = split_loso(m);
        bad += rounds.size() == subjects ? 0 : 1;
        for (const auto& r : rounds) {
            for (const auto& id : r.train) {
                bad += m.find(id).subject_id == r.held_out_subject;
            }
            for (const auto& id : r.test) {
                bad += m.find(id).subject_id != r.held_out_subject;
            }
            bad += r.train.size() + r.test.size() == n ? 0 : 1;
        }

        if (t % 10 == 0) {
            ExperimentConfig cfg;
            cfg.modalities = {Modality::lbp, Modality::audio};
            cfg.base.rf.trees = 10;
            cfg.fusion = {8, 30, 0.05, 16};
            cfg.k = 2;
            cfg.inner_folds = 2;
            try {
                guard_checks += run_internal(m, ft, cfg).guard_checks;
                guard_checks += run_external(m, ft, cfg).guard_checks;
            } catch (const Error& e) {
                if (e.code() == Errc::LeakageDetected) {
                    ++guard_fired;
                }
                // degenerate random splits are not hygiene failures
            }
        }
    }
    verdict(6, bad == 0 && guard_fired == 0 && guard_checks > 0,
            "k-fold partitions and LOSO disjointness on 100 random manifests; leakage guard silent",
            std::to_string(bad) + " violations, " + std::to_string(guard_checks) + " guard checks, " +
                std::to_string(guard_fired) + " guard failures");
}

struct RunOutput {
    bool ok = false;
    double seconds = 0.0;
    std::string error;
};

int sh(const fs::path& cwd, const std::string& args, const std::string& log) {
    return run_shell("cd " + shell_quote(cwd.string()) + " && " + shell_quote(EGOFALL_CLI_PATH) + " " + args + " >> " +
                     shell_quote(log) + " 2>&1");
}

/// Full pipeline via the CLI in `dir`: synth, extract, train, evaluate (internal k=5, LOSO, multiclass internal).
RunOutput full_run(const fs::path& dir) {
    RunOutput r;
    const auto t0 = Clock::now();
    fs::create_directories(dir);
    const auto log = (dir / "run.log").string();
    const auto ds = dir / "ds";
    const std::vector<std::pair<fs::path, std::string>> steps{
        {dir, "synth --out ds --clips 200 --seed 1"},
        {ds, "extract --config egofall.conf"},
        {ds, "train --config egofall.conf --out models"},
        {ds, "evaluate --config egofall.conf --k 5 --format json_lines --out internal.jsonl"},
        {ds, "evaluate --config egofall.conf --mode external --format json_lines --out external.jsonl"},
        {ds, "evaluate --config egofall.conf --k 5 --task multiclass --format json_lines --out internal_multi.jsonl"},
        {ds, "report --input internal.jsonl --input internal_multi.jsonl --format text_table"},
    };
    for (const auto& [cwd, args] : steps) {
        if (sh(cwd, args, log) != 0) {
            r.error = "'" + args + "' failed, see " + log;
            return r;
        }
    }
    r.seconds = seconds_since(t0);
    r.ok = true;
    return r;
}

struct FusionCheck {
    double fused = 0.0;
    double best_single = 0.0;
    std::string best_name;
};

FusionCheck fusion_check(const EvaluationReport& rep) {
    FusionCheck f;
    f.fused = rep.fused().mean;
    for (auto m : kAllModalities) {
        const auto& s = rep.system(to_string(m));
        if (s.mean > f.best_single) {
            f.best_single = s.mean;
            f.best_name = s.name;
        }
    }
    return f;
}

bool table_layout_ok(const std::string& table, std::string& why) {
    std::istringstream in(table);
    std::vector<std::string> lines;
    for (std::string l; std::getline(in, l);) {
        lines.push_back(l);
    }
    if (lines.size() != 8) {
        why = std::to_string(lines.size()) + " lines";
        return false;
    }
    if (lines[0] != "Fusion  Features      2 classes         4 classes") {
        why = "header '" + lines[0] + "'";
        return false;
    }
    const std::vector<std::pair<std::string, std::string>> rows{
        {"B1", "HOG"}, {"B1", "LBP"}, {"B1", "Optical flow"}, {"B1", "Deep"}, {"B1", "Audio"}, {"B2", "Vision"}, {"Ours", "All"}};
    const std::regex cells(R"(\d\.\d{3} \(± \d\.\d{2}\) *\d\.\d{3} \(± \d\.\d{2}\))");
    for (std::size_t i = 0; i < rows.size(); ++i) {
        const auto& l = lines[i + 1];
        std::string fusion = rows[i].first, feat = rows[i].second;
        fusion.resize(8, ' ');
        feat.resize(14, ' ');
        const auto prefix = fusion + feat;
        if (l.rfind(prefix, 0) != 0 || !std::regex_match(l.substr(prefix.size()), cells)) {
            why = "row '" + l + "'";
            return false;
        }
    }
    return true;
}

} // namespace

int main() {
    mfcc_oracle();
    cosine_oracle();
    alignment_contract();
    gradient_check();
    probability_contracts();
    split_hygiene();

    TempDir work("egofall_acceptance");
    const auto a = full_run(work.path() / "run_a");
    if (!a.ok) {
        verdict(7, false, "synthetic end-to-end accuracy", a.error);
        verdict(8, false, "determinism across two full runs", "first run failed");
        verdict(9, false, "result table layout", "first run failed");
        return 1;
    }
    const auto ds_a = work.path() / "run_a/ds";
    const auto internal = load_json_lines_report(ds_a / "internal.jsonl");
    const auto external = load_json_lines_report(ds_a / "external.jsonl");
    const auto fi = fusion_check(internal), fe = fusion_check(external);
    const bool acc_ok = fi.fused >= 0.95 && fe.fused >= 0.90 && fi.fused >= fi.best_single - 0.02 &&
                        fe.fused >= fe.best_single - 0.02 && a.seconds < 600.0 && internal.units.size() == 5 &&
                        external.units.size() == 4 && internal.guard_checks > 0 && external.guard_checks > 0;
    verdict(7, acc_ok, "synthetic 200-clip end-to-end accuracy",
            "internal fused " + fmt("%.3f", fi.fused) + " (best single " + fi.best_name + " " + fmt("%.3f", fi.best_single) +
                "), LOSO fused " + fmt("%.3f", fe.fused) + " (best single " + fe.best_name + " " +
                fmt("%.3f", fe.best_single) + "), runtime " + fmt("%.0f", a.seconds) + " s");

    const auto b = full_run(work.path() / "run_b");
    const auto ds_b = work.path() / "run_b/ds";
    std::size_t compared = 0, differing = 0;
    if (b.ok) {
        std::vector<fs::path> files{"internal.jsonl", "external.jsonl", "internal_multi.jsonl"};
        for (const auto& e : fs::directory_iterator(ds_a / "models")) {
            files.push_back(fs::path("models") / e.path().filename());
        }
        for (const auto& f : files) {
            ++compared;
            const auto x = read_file(ds_a / f), y = read_file(ds_b / f);
            differing += (x.empty() || x != y) ? 1 : 0;
        }
    }
    verdict(8, b.ok && compared >= 9 && differing == 0, "two full runs give byte-identical reports and models",
            b.ok ? std::to_string(compared) + " files compared, " + std::to_string(differing) + " differ" : b.error);

    const auto multi = load_json_lines_report(ds_a / "internal_multi.jsonl");
    const auto table = render_table({internal, multi});
    std::string why;
    const bool layout = table_layout_ok(table, why) && format_accuracy_cell(0.978, 0.01) == "0.978 (± 0.01)" &&
                        format_accuracy_cell(0.875, 0.15) == "0.875 (± 0.15)";
    const auto strata = render_table({external});
    const bool footer = strata.find("Strata (2 classes)    infrared_night  rgb_day         rgb_night") != std::string::npos;
    verdict(9, layout && footer, "result table layout (rows B1 x5, B2, Ours; 2-class and multiclass columns; strata footer)",
            layout ? (footer ? "layout matches" : "strata footer missing") : why);
    std::cout << table;
    return failures == 0 ? 0 : 1;
}
