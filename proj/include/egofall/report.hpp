#pragma once

#include <cstdio>
#include <filesystem>
#include <fstream>
#include <iomanip>
#include <sstream>
#include <string>
#include <vector>

#include <nlohmann/json.hpp>

#include "evaluation.hpp"

namespace egofall {

enum class ReportFormat { text_table, csv, json_lines };

inline ReportFormat parse_report_format(std::string_view s) {
    if (s == "text_table" || s == "text") return ReportFormat::text_table;
    if (s == "csv") return ReportFormat::csv;
    if (s == "json_lines" || s == "jsonl") return ReportFormat::json_lines;
    fail(Errc::UnknownEnumValue, "unknown report format '" + std::string(s) + "'");
}

/// "0.978 (± 0.01)"
inline std::string format_accuracy_cell(double mean, double std) {
    char buf[64];
    std::snprintf(buf, sizeof buf, "%.3f (± %.2f)", mean, std);
    return buf;
}

namespace detail {

struct TableRow {
    std::string fusion;
    std::string features;
    std::string system;
};

inline std::vector<TableRow> table_rows() {
    return {{"B1", "HOG", "hog"},          {"B1", "LBP", "lbp"},     {"B1", "Optical flow", "flow"},
            {"B1", "Deep", "deep"},        {"B1", "Audio", "audio"}, {"B2", "Vision", kVisionSystem},
            {"Ours", "All", kAllSystem}};
}

inline std::string pad(const std::string& s, std::size_t width) {
    // width counts code points; the "±" sign is two bytes
    std::size_t cps = 0;
    for (unsigned char c : s) {
        cps += (c & 0xC0) != 0x80 ? 1 : 0;
    }
    return s + std::string(width > cps ? width - cps : 0, ' ');
}

inline std::string fmt_double(double v) {
    char buf[32];
    std::snprintf(buf, sizeof buf, "%.6f", v);
    return buf;
}

} // namespace detail

/// Accuracy table laid out like the published result tables: one row per baseline/fusion system,
/// one column per task found among `reports`, then illumination strata as footer rows.
inline std::string render_table(const std::vector<EvaluationReport>& reports) {
    const EvaluationReport* by_task[2] = {nullptr, nullptr};
    for (const auto& r : reports) {
        by_task[r.task == Task::binary ? 0 : 1] = &r;
    }
    std::string multi_header = "multiclass";
    if (by_task[1]) {
        multi_header = std::to_string(by_task[1]->class_names.size()) + " classes";
    }
    std::ostringstream out;
    const std::size_t w0 = 8, w1 = 14, w2 = 18;
    out << detail::pad("Fusion", w0) << detail::pad("Features", w1) << detail::pad("2 classes", w2) << multi_header
        << '\n';
    for (const auto& row : detail::table_rows()) {
        bool any = false;
        std::string cells[2] = {"-", "-"};
        for (int t = 0; t < 2; ++t) {
            if (by_task[t] && by_task[t]->has_system(row.system)) {
                const auto& s = by_task[t]->system(row.system);
                cells[t] = format_accuracy_cell(s.mean, s.std);
                any = true;
            }
        }
        if (any) {
            out << detail::pad(row.fusion, w0) << detail::pad(row.features, w1) << detail::pad(cells[0], w2) << cells[1]
                << '\n';
        }
    }
    for (int t = 0; t < 2; ++t) {
        if (!by_task[t]) {
            continue;
        }
        std::set<std::string> strata;
        for (const auto& s : by_task[t]->systems) {
            for (const auto& [k, v] : s.strata) {
                strata.insert(k);
            }
        }
        if (strata.empty()) {
            continue;
        }
        out << '\n'
            << detail::pad(t == 0 ? "Strata (2 classes)" : "Strata (" + multi_header + ")", w0 + w1);
        for (const auto& k : strata) {
            out << detail::pad(k, 16);
        }
        out << '\n';
        for (const auto& row : detail::table_rows()) {
            if (!by_task[t]->has_system(row.system)) {
                continue;
            }
            const auto& s = by_task[t]->system(row.system);
            out << detail::pad(row.fusion, w0) << detail::pad(row.features, w1);
            for (const auto& k : strata) {
                const auto it = s.strata.find(k);
                char buf[32];
                std::snprintf(buf, sizeof buf, "%.3f", it == s.strata.end() ? 0.0 : it->second);
                out << detail::pad(it == s.strata.end() ? "-" : buf, 16);
            }
            out << '\n';
        }
    }
    return out.str();
}

/// One row per unit plus mean and std rows; one accuracy column per system.
inline std::string render_csv(const EvaluationReport& r) {
    std::ostringstream out;
    out << "unit,n";
    for (const auto& s : r.systems) {
        out << ',' << s.name;
    }
    out << '\n';
    for (std::size_t u = 0; u < r.units.size(); ++u) {
        out << r.units[u].name << ',' << r.units[u].test_count;
        for (const auto& s : r.systems) {
            out << ',' << detail::fmt_double(s.unit_accuracy[u]);
        }
        out << '\n';
    }
    for (const char* row : {"mean", "std"}) {
        out << row << ',';
        for (const auto& s : r.systems) {
            out << ',' << detail::fmt_double(std::string_view(row) == "mean" ? s.mean : s.std);
        }
        out << '\n';
    }
    return out.str();
}

inline nlohmann::json summary_json(const EvaluationReport& r) {
    using nlohmann::json;
    json j;
    j["type"] = "summary";
    j["mode"] = std::string(to_string(r.mode));
    j["task"] = std::string(to_string(r.task));
    j["classes"] = r.class_names;
    json units = json::array();
    for (const auto& u : r.units) {
        units.push_back({{"name", u.name}, {"n", u.test_count}});
    }
    j["units"] = units;
    json systems = json::array();
    for (const auto& s : r.systems) {
        systems.push_back({{"name", s.name},
                           {"unit_accuracy", s.unit_accuracy},
                           {"mean", s.mean},
                           {"std", s.std},
                           {"strata", s.strata},
                           {"confusion", s.confusion}});
    }
    j["systems"] = systems;
    j["config"] = r.config_echo;
    j["config_fingerprint"] = r.config_fingerprint;
    j["timestamp"] = r.timestamp;
    j["guard_checks"] = r.guard_checks;
    return j;
}

/// One object per unit, then the summary object.
inline std::string render_json_lines(const EvaluationReport& r) {
    std::ostringstream out;
    for (std::size_t u = 0; u < r.units.size(); ++u) {
        nlohmann::json j;
        j["type"] = "unit";
        j["unit"] = r.units[u].name;
        j["n"] = r.units[u].test_count;
        nlohmann::json acc;
        for (const auto& s : r.systems) {
            acc[s.name] = s.unit_accuracy[u];
        }
        j["accuracy"] = acc;
        out << j.dump() << '\n';
    }
    out << summary_json(r).dump() << '\n';
    return out.str();
}

inline std::string render_report(const EvaluationReport& r, ReportFormat f) {
    switch (f) {
    case ReportFormat::text_table: return render_table({r});
    case ReportFormat::csv: return render_csv(r);
    case ReportFormat::json_lines: return render_json_lines(r);
    }
    return {};
}

inline void emit_report(const EvaluationReport& r, ReportFormat f, const std::filesystem::path& path) {
    std::ofstream out(path, std::ios::binary | std::ios::trunc);
    const auto text = render_report(r, f);
    out << text;
    out.flush();
    if (!out) {
        fail(Errc::IoFailure, "cannot write report " + path.string());
    }
}

/// Reads back the summary object of a JSON-lines report.
inline EvaluationReport parse_json_lines_report(std::istream& in) {
    std::string line;
    while (std::getline(in, line)) {
        if (line.empty()) {
            continue;
        }
        const auto j = nlohmann::json::parse(line, nullptr, false);
        if (j.is_discarded()) {
            fail(Errc::IoFailure, "malformed JSON line in report");
        }
        if (j.value("type", "") != "summary") {
            continue;
        }
        EvaluationReport r;
        r.mode = j.at("mode") == "internal" ? EvalMode::internal : EvalMode::external;
        r.task = j.at("task") == "binary" ? Task::binary : Task::multiclass;
        r.class_names = j.at("classes").get<std::vector<std::string>>();
        for (const auto& u : j.at("units")) {
            r.units.push_back({u.at("name").get<std::string>(), u.at("n").get<std::size_t>()});
        }
        for (const auto& s : j.at("systems")) {
            SystemResult sr;
            sr.name = s.at("name").get<std::string>();
            sr.unit_accuracy = s.at("unit_accuracy").get<std::vector<double>>();
            sr.mean = s.at("mean").get<double>();
            sr.std = s.at("std").get<double>();
            sr.strata = s.at("strata").get<std::map<std::string, double>>();
            sr.confusion = s.at("confusion").get<std::vector<std::vector<long>>>();
            r.systems.push_back(std::move(sr));
        }
        r.config_echo = j.at("config").get<std::map<std::string, std::string>>();
        r.config_fingerprint = j.at("config_fingerprint").get<std::string>();
        r.timestamp = j.at("timestamp").get<std::string>();
        r.guard_checks = j.at("guard_checks").get<std::size_t>();
        return r;
    }
    fail(Errc::IoFailure, "report has no summary line");
}

inline EvaluationReport load_json_lines_report(const std::filesystem::path& p) {
    std::ifstream in(p);
    if (!in) {
        fail(Errc::IoFailure, "cannot open report " + p.string());
    }
    return parse_json_lines_report(in);
}

} // namespace egofall
