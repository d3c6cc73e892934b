#include "test_util.hpp"

using namespace egofall;

namespace {

EvaluationReport sample_report(Task task, bool strata) {
    EvaluationReport r;
    r.mode = strata ? EvalMode::external : EvalMode::internal;
    r.task = task;
    r.class_names = task == Task::binary ? std::vector<std::string>{"fall", "nonfall"}
                                         : std::vector<std::string>{"a", "b", "c", "d"};
    r.units = {{"S1", 3}, {"S2", 4}};
    const std::vector<std::string> names{"hog", "lbp", "flow", "deep", "audio", "vision", "all", "average"};
    for (std::size_t i = 0; i < names.size(); ++i) {
        SystemResult s;
        s.name = names[i];
        s.unit_accuracy = {0.5 + 0.05 * static_cast<double>(i), 0.75};
        const auto [mean, sd] = mean_and_population_std(s.unit_accuracy);
        s.mean = mean;
        s.std = sd;
        if (strata) {
            s.strata = {{"rgb_day", 0.924}, {"infrared_night", 0.913}};
        }
        const auto m = r.class_names.size();
        s.confusion.assign(m, std::vector<long>(m, 0));
        s.confusion[0][0] = 3;
        r.systems.push_back(s);
    }
    r.config_echo = {{"seed", "1"}, {"eval.k", "10"}};
    r.config_fingerprint = "00000000deadbeef";
    r.timestamp = "unset";
    r.guard_checks = 42;
    return r;
}

} // namespace

TEST(Report, AccuracyCell) {
    EXPECT_EQ(format_accuracy_cell(0.978, 0.01), "0.978 (± 0.01)");
    EXPECT_EQ(format_accuracy_cell(0.875, 0.15), "0.875 (± 0.15)");
    EXPECT_EQ(format_accuracy_cell(1.0, 0.0), "1.000 (± 0.00)");
}

TEST(Report, TableRowsAndColumns) {
    auto bin = sample_report(Task::binary, false);
    bin.systems[6].mean = 0.978;
    bin.systems[6].std = 0.01;
    const auto text = render_table({bin, sample_report(Task::multiclass, false)});
    std::istringstream in(text);
    std::vector<std::string> lines;
    for (std::string l; std::getline(in, l);) {
        lines.push_back(l);
    }
    ASSERT_EQ(lines.size(), 8u);
    EXPECT_EQ(lines[0], "Fusion  Features      2 classes         4 classes");
    const char* expected_rows[] = {"B1      HOG ", "B1      LBP ", "B1      Optical flow ", "B1      Deep ",
                                   "B1      Audio ", "B2      Vision ", "Ours    All "};
    for (std::size_t i = 0; i < 7; ++i) {
        EXPECT_EQ(lines[i + 1].rfind(expected_rows[i], 0), 0u) << lines[i + 1];
    }
    EXPECT_NE(lines[7].find("0.978 (± 0.01)"), std::string::npos);
    EXPECT_EQ(text.find("average"), std::string::npos);
}

TEST(Report, EmptyStrataOmitFooter) {
    EXPECT_EQ(render_table({sample_report(Task::binary, false)}).find("Strata"), std::string::npos);
    const auto with = render_table({sample_report(Task::binary, true)});
    EXPECT_NE(with.find("Strata (2 classes)    infrared_night  rgb_day"), std::string::npos);
    EXPECT_NE(with.find("0.924"), std::string::npos);
}

TEST(Report, MissingTaskColumnIsDash) {
    const auto text = render_table({sample_report(Task::binary, false)});
    EXPECT_NE(text.find("Fusion  Features      2 classes         multiclass\n"), std::string::npos);
    EXPECT_NE(text.find(")    -\n"), std::string::npos);
}

TEST(Report, Deterministic) {
    const auto r = sample_report(Task::binary, true);
    for (auto f : {ReportFormat::text_table, ReportFormat::csv, ReportFormat::json_lines}) {
        EXPECT_EQ(render_report(r, f), render_report(r, f));
    }
}

TEST(Report, CsvRows) {
    const auto csv = render_csv(sample_report(Task::binary, false));
    std::istringstream in(csv);
    std::string header, s1, s2, mean, sd;
    std::getline(in, header);
    std::getline(in, s1);
    std::getline(in, s2);
    std::getline(in, mean);
    std::getline(in, sd);
    EXPECT_EQ(header, "unit,n,hog,lbp,flow,deep,audio,vision,all,average");
    EXPECT_EQ(s1.rfind("S1,3,0.500000,0.550000,", 0), 0u);
    EXPECT_EQ(s2.rfind("S2,4,0.750000,", 0), 0u);
    EXPECT_EQ(mean.rfind("mean,,0.625000,", 0), 0u);
    EXPECT_EQ(sd.rfind("std,,0.125000,", 0), 0u);
}

TEST(Report, JsonLinesRoundTrip) {
    const auto r = sample_report(Task::multiclass, true);
    const auto text = render_json_lines(r);
    std::istringstream in(text);
    const auto back = parse_json_lines_report(in);
    EXPECT_EQ(back.mode, r.mode);
    EXPECT_EQ(back.task, r.task);
    EXPECT_EQ(back.class_names, r.class_names);
    ASSERT_EQ(back.systems.size(), r.systems.size());
    for (std::size_t i = 0; i < r.systems.size(); ++i) {
        EXPECT_EQ(back.systems[i].unit_accuracy, r.systems[i].unit_accuracy);
        EXPECT_EQ(back.systems[i].mean, r.systems[i].mean);
        EXPECT_EQ(back.systems[i].strata, r.systems[i].strata);
        EXPECT_EQ(back.systems[i].confusion, r.systems[i].confusion);
    }
    EXPECT_EQ(back.config_echo, r.config_echo);
    EXPECT_EQ(back.guard_checks, 42u);
    EXPECT_EQ(render_json_lines(back), text);
}
