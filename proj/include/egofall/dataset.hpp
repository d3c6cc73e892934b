#pragma once

#include <algorithm>
#include <charconv>
#include <cmath>
#include <filesystem>
#include <fstream>
#include <map>
#include <optional>
#include <set>
#include <sstream>
#include <string>
#include <string_view>
#include <unordered_map>
#include <vector>

#include "error.hpp"
#include "rng.hpp"

namespace egofall {

enum class Camera { rgb, infrared };
enum class TimeOfDay { daytime, night };
enum class Location { indoor, outdoor };
enum class Placement { waist, neck };
enum class BinaryLabel { nonfall, fall };
enum class Task { binary, multiclass };

inline std::string_view to_string(Camera v) { return v == Camera::rgb ? "rgb" : "infrared"; }
inline std::string_view to_string(TimeOfDay v) { return v == TimeOfDay::daytime ? "daytime" : "night"; }
inline std::string_view to_string(Location v) { return v == Location::indoor ? "indoor" : "outdoor"; }
inline std::string_view to_string(Placement v) { return v == Placement::waist ? "waist" : "neck"; }
inline std::string_view to_string(BinaryLabel v) { return v == BinaryLabel::fall ? "fall" : "nonfall"; }
inline std::string_view to_string(Task v) { return v == Task::binary ? "binary" : "multiclass"; }

struct ClipRecord {
    std::string clip_id;
    std::string media_path;
    std::string subject_id;
    Camera camera = Camera::rgb;
    TimeOfDay time_of_day = TimeOfDay::daytime;
    Location location = Location::indoor;
    Placement placement = Placement::waist;
    BinaryLabel label_binary = BinaryLabel::nonfall;
    std::string label_activity;
    double duration_s = 0.0;
};

struct Manifest {
    std::vector<ClipRecord> records;
    std::vector<std::string> activity_classes;
    std::vector<std::string> fall_activities;
    std::unordered_map<std::string, std::size_t> by_id;

    /// Subjects in order of first appearance.
    std::vector<std::string> subjects() const {
        std::vector<std::string> out;
        std::set<std::string> seen;
        for (const auto& r : records) {
            if (seen.insert(r.subject_id).second) {
                out.push_back(r.subject_id);
            }
        }
        return out;
    }

    /// Rebuilds the clip-id lookup; call after editing `records`.
    void reindex() {
        by_id.clear();
        for (std::size_t i = 0; i < records.size(); ++i) {
            by_id.emplace(records[i].clip_id, i);
        }
    }

    const ClipRecord& find(const std::string& clip_id) const {
        if (by_id.size() == records.size()) {
            const auto it = by_id.find(clip_id);
            if (it != by_id.end()) {
                return records[it->second];
            }
        } else {
            for (const auto& r : records) {
                if (r.clip_id == clip_id) {
                    return r;
                }
            }
        }
        fail(Errc::MissingFeatures, "clip " + clip_id + " is not in the manifest");
    }

    int class_count(Task task) const {
        return task == Task::binary ? 2 : static_cast<int>(activity_classes.size());
    }

    std::vector<std::string> class_names(Task task) const {
        if (task == Task::binary) {
            return {"nonfall", "fall"};
        }
        return activity_classes;
    }

    /// Class index of a record: binary uses nonfall=0, fall=1; multiclass indexes activity_classes.
    int label(const ClipRecord& r, Task task) const {
        if (task == Task::binary) {
            return r.label_binary == BinaryLabel::fall ? 1 : 0;
        }
        const auto it = std::find(activity_classes.begin(), activity_classes.end(), r.label_activity);
        return static_cast<int>(it - activity_classes.begin());
    }
};

struct ManifestOptions {
    /// Empty: derived from the manifest in first-appearance order.
    std::vector<std::string> activity_classes;
    /// Empty: every activity seen with a fall label is accepted as a fall activity.
    std::vector<std::string> fall_activities;
    double window_s = 8.0;
};

inline const std::vector<std::string>& manifest_columns() {
    static const std::vector<std::string> cols = {"clip_id",     "media_path", "subject_id", "camera",
                                                  "time_of_day", "location",   "placement",  "label_binary",
                                                  "label_activity", "duration_s"};
    return cols;
}

namespace detail {

inline std::string trim(std::string_view s) {
    const auto b = s.find_first_not_of(" \t\r\n");
    if (b == std::string_view::npos) {
        return {};
    }
    const auto e = s.find_last_not_of(" \t\r\n");
    return std::string(s.substr(b, e - b + 1));
}

inline std::vector<std::string> split(std::string_view line, char sep) {
    std::vector<std::string> out;
    std::size_t start = 0;
    while (true) {
        const auto pos = line.find(sep, start);
        out.push_back(trim(line.substr(start, pos == std::string_view::npos ? std::string_view::npos : pos - start)));
        if (pos == std::string_view::npos) {
            break;
        }
        start = pos + 1;
    }
    return out;
}

template <typename E>
E parse_enum(const std::string& value, std::initializer_list<E> options, const std::string& where) {
    for (E e : options) {
        if (to_string(e) == value) {
            return e;
        }
    }
    fail(Errc::UnknownEnumValue, where + ": unknown value '" + value + "'");
}

} // namespace detail

inline Manifest parse_manifest(std::istream& in, const ManifestOptions& opts = {}) {
    std::string line;
    std::size_t line_no = 0;
    std::vector<std::string> header;
    while (std::getline(in, line)) {
        ++line_no;
        if (!detail::trim(line).empty()) {
            header = detail::split(line, ',');
            break;
        }
    }
    if (header.empty()) {
        fail(Errc::EmptyManifest, "manifest has no header row");
    }
    std::map<std::string, std::size_t> col;
    for (std::size_t i = 0; i < header.size(); ++i) {
        col[header[i]] = i;
    }
    for (const auto& name : manifest_columns()) {
        if (!col.count(name)) {
            fail(Errc::MissingColumn, "header row (line " + std::to_string(line_no) + ") lacks column '" + name + "'");
        }
    }
    if (header.size() != manifest_columns().size()) {
        fail(Errc::MissingColumn, "header row must contain exactly the " +
                                      std::to_string(manifest_columns().size()) + " manifest columns");
    }

    Manifest m;
    m.activity_classes = opts.activity_classes;
    m.fall_activities = opts.fall_activities;
    const bool derive_classes = m.activity_classes.empty();
    {
        std::set<std::string> uniq(m.activity_classes.begin(), m.activity_classes.end());
        if (uniq.size() != m.activity_classes.size()) {
            fail(Errc::ActivityNotInClassList, "activity class list contains duplicates");
        }
    }
    std::set<std::string> ids;
    while (std::getline(in, line)) {
        ++line_no;
        if (detail::trim(line).empty()) {
            continue;
        }
        const auto cells = detail::split(line, ',');
        const std::string where = "row at line " + std::to_string(line_no);
        if (cells.size() != header.size()) {
            fail(Errc::MissingColumn, where + ": expected " + std::to_string(header.size()) + " cells, got " +
                                          std::to_string(cells.size()));
        }
        auto cell = [&](const char* name) { return cells[col.at(name)]; };
        ClipRecord r;
        r.clip_id = cell("clip_id");
        const std::string rw = where + " (clip " + r.clip_id + ")";
        if (r.clip_id.empty()) {
            fail(Errc::InvalidRecord, where + ": empty clip_id");
        }
        r.media_path = cell("media_path");
        r.subject_id = cell("subject_id");
        r.camera = detail::parse_enum(cell("camera"), {Camera::rgb, Camera::infrared}, rw);
        r.time_of_day = detail::parse_enum(cell("time_of_day"), {TimeOfDay::daytime, TimeOfDay::night}, rw);
        r.location = detail::parse_enum(cell("location"), {Location::indoor, Location::outdoor}, rw);
        r.placement = detail::parse_enum(cell("placement"), {Placement::waist, Placement::neck}, rw);
        r.label_binary = detail::parse_enum(cell("label_binary"), {BinaryLabel::nonfall, BinaryLabel::fall}, rw);
        r.label_activity = cell("label_activity");
        const auto dur = cell("duration_s");
        try {
            std::size_t used = 0;
            r.duration_s = std::stod(dur, &used);
            if (used != dur.size() || !std::isfinite(r.duration_s)) {
                throw std::invalid_argument(dur);
            }
        } catch (const std::exception&) {
            fail(Errc::InvalidRecord, rw + ": bad duration_s '" + dur + "'");
        }
        if (r.duration_s < opts.window_s) {
            fail(Errc::InvalidRecord, rw + ": duration " + dur + " s is shorter than the " +
                                          std::to_string(opts.window_s) + " s window");
        }
        if (!ids.insert(r.clip_id).second) {
            fail(Errc::DuplicateClipId, r.clip_id);
        }
        const bool known = std::find(m.activity_classes.begin(), m.activity_classes.end(), r.label_activity) !=
                           m.activity_classes.end();
        if (!known) {
            if (!derive_classes) {
                fail(Errc::ActivityNotInClassList, rw + ": activity '" + r.label_activity + "'");
            }
            m.activity_classes.push_back(r.label_activity);
        }
        if (r.label_binary == BinaryLabel::fall && !opts.fall_activities.empty() &&
            std::find(opts.fall_activities.begin(), opts.fall_activities.end(), r.label_activity) ==
                opts.fall_activities.end()) {
            fail(Errc::ActivityNotInClassList, rw + ": fall label with non-fall activity '" + r.label_activity + "'");
        }
        m.records.push_back(std::move(r));
    }
    if (m.records.empty()) {
        fail(Errc::EmptyManifest, "manifest has no records");
    }
    if (m.fall_activities.empty()) {
        std::set<std::string> seen;
        for (const auto& r : m.records) {
            if (r.label_binary == BinaryLabel::fall && seen.insert(r.label_activity).second) {
                m.fall_activities.push_back(r.label_activity);
            }
        }
    }
    m.reindex();
    return m;
}

inline Manifest load_manifest(const std::filesystem::path& path, const ManifestOptions& opts = {}) {
    std::ifstream in(path);
    if (!in) {
        fail(Errc::IoFailure, "cannot open manifest " + path.string());
    }
    auto m = parse_manifest(in, opts);
    // relative media paths are relative to the manifest's directory
    const auto base = path.parent_path();
    for (auto& r : m.records) {
        if (std::filesystem::path(r.media_path).is_relative()) {
            r.media_path = (base / r.media_path).lexically_normal().string();
        }
    }
    return m;
}

inline void write_manifest(std::ostream& out, const Manifest& m) {
    const auto& cols = manifest_columns();
    for (std::size_t i = 0; i < cols.size(); ++i) {
        out << (i ? "," : "") << cols[i];
    }
    out << '\n';
    for (const auto& r : m.records) {
        std::ostringstream dur;
        dur << r.duration_s;
        out << r.clip_id << ',' << r.media_path << ',' << r.subject_id << ',' << to_string(r.camera) << ','
            << to_string(r.time_of_day) << ',' << to_string(r.location) << ',' << to_string(r.placement) << ','
            << to_string(r.label_binary) << ',' << r.label_activity << ',' << dur.str() << '\n';
    }
}

struct Fold {
    std::vector<std::string> train;
    std::vector<std::string> val;
};

/// Shuffled k-fold partition; fold sizes differ by at most one. Ids keep manifest order within each side.
inline std::vector<Fold> split_kfold(const Manifest& m, int k, std::uint64_t seed) {
    if (k < 2) {
        fail(Errc::KTooSmall, "k=" + std::to_string(k) + " (need k >= 2)");
    }
    const auto n = m.records.size();
    if (static_cast<std::size_t>(k) > n) {
        fail(Errc::KTooLarge, "k=" + std::to_string(k) + " exceeds " + std::to_string(n) + " records");
    }
    std::vector<std::size_t> order(n);
    for (std::size_t i = 0; i < n; ++i) {
        order[i] = i;
    }
    Rng rng(seed);
    rng.shuffle(order);
    std::vector<int> fold_of(n);
    for (std::size_t pos = 0; pos < n; ++pos) {
        fold_of[order[pos]] = static_cast<int>(pos % static_cast<std::size_t>(k));
    }
    std::vector<Fold> folds(static_cast<std::size_t>(k));
    for (std::size_t i = 0; i < n; ++i) {
        for (int f = 0; f < k; ++f) {
            auto& side = fold_of[i] == f ? folds[static_cast<std::size_t>(f)].val : folds[static_cast<std::size_t>(f)].train;
            side.push_back(m.records[i].clip_id);
        }
    }
    return folds;
}

struct SubjectRound {
    std::string held_out_subject;
    std::vector<std::string> train;
    std::vector<std::string> test;
};

/// Leave-one-subject-out rounds over the subjects not in `excluded`.
inline std::vector<SubjectRound> split_loso(const Manifest& m, const std::set<std::string>& excluded = {}) {
    std::vector<std::string> subjects;
    for (const auto& s : m.subjects()) {
        if (!excluded.count(s)) {
            subjects.push_back(s);
        }
    }
    if (subjects.size() < 2) {
        fail(Errc::TooFewSubjects, std::to_string(subjects.size()) + " subject(s) remain after exclusion");
    }
    std::vector<SubjectRound> rounds;
    for (const auto& s : subjects) {
        SubjectRound r;
        r.held_out_subject = s;
        for (const auto& rec : m.records) {
            if (excluded.count(rec.subject_id)) {
                continue;
            }
            (rec.subject_id == s ? r.test : r.train).push_back(rec.clip_id);
        }
        rounds.push_back(std::move(r));
    }
    return rounds;
}

} // namespace egofall
