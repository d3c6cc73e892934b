#include <cmath>

#include "test_util.hpp"

using namespace egofall;
using egofall::testing::expect_errc;

namespace {

FrameDescriptor desc(std::vector<double> v) { return {VisualChannel::hog, std::move(v)}; }

} // namespace

TEST(Cosine, Examples) {
    const std::vector<double> a{3, 4};
    EXPECT_DOUBLE_EQ(cosine_similarity(a, a), 1.0);
    EXPECT_DOUBLE_EQ(cosine_similarity(std::vector<double>{1, 0}, std::vector<double>{0, 1}), 0.0);
    const double expected = 32.0 / (std::sqrt(14.0) * std::sqrt(77.0));
    EXPECT_NEAR(cosine_similarity(std::vector<double>{1, 2, 3}, std::vector<double>{4, 5, 6}), expected, 1e-12);
    EXPECT_NEAR(expected, 0.974631846, 1e-9);
}

TEST(Cosine, ZeroNormPolicy) {
    const std::vector<double> z{0, 0, 0}, v{1, 2, 3};
    EXPECT_EQ(cosine_similarity(z, z), 1.0);
    EXPECT_EQ(cosine_similarity(z, v), 0.0);
    EXPECT_EQ(cosine_similarity(v, z), 0.0);
}

TEST(Cosine, LengthMismatch) {
    expect_errc(Errc::LengthMismatch,
                [] { cosine_similarity(std::vector<double>{1, 2}, std::vector<double>{1, 2, 3}); });
}

TEST(Cosine, FloatAndDoubleAgree) {
    const std::vector<float> a{1.5f, -2.0f, 0.25f}, b{0.5f, 4.0f, -1.0f};
    const std::vector<double> ad(a.begin(), a.end()), bd(b.begin(), b.end());
    EXPECT_EQ(cosine_similarity(a, b), cosine_similarity(ad, bd));
}

TEST(SimilaritySequence, Examples) {
    const std::vector<FrameDescriptor> same(3, desc({1, 2, 3}));
    EXPECT_EQ(similarity_sequence(same).values, (std::vector<double>{1.0, 1.0}));

    std::vector<FrameDescriptor> alt;
    for (int i = 0; i < 4; ++i) {
        alt.push_back(desc(i % 2 ? std::vector<double>{0, 1} : std::vector<double>{1, 0}));
    }
    EXPECT_EQ(similarity_sequence(alt).values, (std::vector<double>{0.0, 0.0, 0.0}));

    std::vector<FrameDescriptor> many(240, desc({1, 0}));
    EXPECT_EQ(similarity_sequence(many).values.size(), 239u);
    expect_errc(Errc::TooFewFrames, [] { similarity_sequence(std::vector<FrameDescriptor>(1, desc({1}))); });
}

TEST(TruncateAlign, LengthTargetAlreadyCentred) {
    std::vector<double> seq(238);
    for (std::size_t i = 0; i < seq.size(); ++i) {
        seq[i] = 0.5 + 0.001 * static_cast<double>(i);
    }
    seq[119] = 0.1;
    const auto out = truncate_align(seq);
    EXPECT_EQ(out.values, seq);
    EXPECT_EQ(out.peak_index, 119u);
}

TEST(TruncateAlign, DipInLongSequence) {
    std::vector<double> seq(300, 1.0);
    seq[150] = 0.2;
    const auto out = truncate_align(seq);
    ASSERT_EQ(out.values.size(), 238u);
    EXPECT_EQ(out.values[119], 0.2);
    for (std::size_t i = 0; i < out.values.size(); ++i) {
        if (i != 119) {
            EXPECT_EQ(out.values[i], 1.0);
        }
    }
}

TEST(TruncateAlign, ShortSequenceEdgeReplication) {
    AlignOptions opt;
    opt.target_len = 7;
    const std::vector<double> seq{0.9, 0.8, 0.1, 0.8, 0.9};
    const auto out = truncate_align(seq, opt);
    // minimum at source index 2 lands at output index 3; one edge copy pads each side
    EXPECT_EQ(out.values, (std::vector<double>{0.9, 0.9, 0.8, 0.1, 0.8, 0.9, 0.9}));
    EXPECT_EQ(out.peak_index, 2u);
}

TEST(TruncateAlign, MaxPeakAndTies) {
    AlignOptions opt;
    opt.target_len = 5;
    opt.mode = AlignMode::max_peak;
    const std::vector<double> seq{0.1, 0.7, 0.3, 0.7, 0.2};
    const auto out = truncate_align(seq, opt);
    EXPECT_EQ(out.peak_index, 1u);
    EXPECT_EQ(out.values, (std::vector<double>{0.1, 0.1, 0.7, 0.3, 0.7}));
}

TEST(TruncateAlign, SearchWindowIsCentred) {
    AlignOptions opt;
    opt.window_s = 1.0; // 30 elements
    std::vector<double> seq(100, 1.0);
    seq[5] = 0.0;  // outside the window
    seq[60] = 0.5; // inside [35, 65)
    const auto out = truncate_align(seq, opt);
    EXPECT_EQ(out.peak_index, 60u);
    EXPECT_EQ(search_window(100, opt), (std::pair<std::size_t, std::size_t>{35, 65}));
}

TEST(TruncateAlign, Errors) {
    expect_errc(Errc::EmptySequence, [] { truncate_align(std::vector<double>{}); });
}
