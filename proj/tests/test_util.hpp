#pragma once

#include <filesystem>
#include <fstream>
#include <sstream>
#include <string>

#include <gtest/gtest.h>

#include "egofall/egofall.hpp"

namespace egofall::testing {

/// Runs `body` and checks it throws egofall::Error with code `code`.
template <typename F>
void expect_errc(Errc code, F&& body) {
    try {
        body();
        ADD_FAILURE() << "expected " << errc_name(code) << ", nothing thrown";
    } catch (const Error& e) {
        EXPECT_EQ(e.code(), code) << "got " << errc_name(e.code()) << ": " << e.what();
    }
}

inline ClipRecord record(const std::string& id, const std::string& subject, BinaryLabel y,
                         const std::string& activity = "") {
    ClipRecord r;
    r.clip_id = id;
    r.media_path = "media/" + id + ".eraw";
    r.subject_id = subject;
    r.label_binary = y;
    r.label_activity = activity.empty() ? (y == BinaryLabel::fall ? "fall_forward" : "walking") : activity;
    r.duration_s = 8.0;
    return r;
}

inline Manifest manifest_of(std::vector<ClipRecord> records) {
    Manifest m;
    m.records = std::move(records);
    for (const auto& r : m.records) {
        if (std::find(m.activity_classes.begin(), m.activity_classes.end(), r.label_activity) ==
            m.activity_classes.end()) {
            m.activity_classes.push_back(r.label_activity);
        }
    }
    m.reindex();
    return m;
}

inline std::string read_text(const std::filesystem::path& p) {
    std::ifstream in(p, std::ios::binary);
    std::ostringstream s;
    s << in.rdbuf();
    return s.str();
}

inline void write_text(const std::filesystem::path& p, const std::string& text) {
    std::ofstream out(p, std::ios::binary);
    out << text;
}

} // namespace egofall::testing
