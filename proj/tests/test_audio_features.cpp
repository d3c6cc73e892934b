#include <cmath>
#include <numbers>

#include "oracles.hpp"
#include "test_util.hpp"

using namespace egofall;
using egofall::testing::expect_errc;

namespace {

std::vector<double> sine(double hz, std::size_t n, double amp = 0.5) {
    std::vector<double> x(n);
    for (std::size_t i = 0; i < n; ++i) {
        x[i] = amp * std::sin(2.0 * std::numbers::pi * hz * static_cast<double>(i) / 16000.0);
    }
    return x;
}

MfccMatrix matrix(std::size_t rows, std::size_t cols, const std::function<double(std::size_t, std::size_t)>& f) {
    MfccMatrix m{rows, cols, std::vector<double>(rows * cols)};
    for (std::size_t t = 0; t < rows; ++t) {
        for (std::size_t j = 0; j < cols; ++j) {
            m(t, j) = f(t, j);
        }
    }
    return m;
}

} // namespace

TEST(Mfcc, SilenceIsConstantC0) {
    const std::vector<double> silence(16000, 0.0);
    const auto c = mfcc(silence, 16000);
    ASSERT_EQ(c.cols, 13u);
    const double c0 = std::sqrt(40.0) * std::log(1e-10);
    for (std::size_t t = 0; t < c.rows; ++t) {
        EXPECT_NEAR(c(t, 0), c0, 1e-9);
        for (std::size_t j = 1; j < 13; ++j) {
            EXPECT_NEAR(c(t, j), 0.0, 1e-9);
        }
    }
}

TEST(Mfcc, SineMatchesNaiveDft) {
    const auto x = sine(440.0, 16000);
    const auto c = mfcc(x, 16000);
    EXPECT_EQ(c.rows, 98u);
    const auto ref = oracle::naive_mfcc(x, MfccOptions{});
    ASSERT_EQ(ref.size(), c.values.size());
    EXPECT_LT(oracle::max_relative_error(c.values, ref), 1e-6);
}

TEST(Mfcc, ScalingShiftsOnlyC0) {
    Rng rng(3);
    std::vector<double> x(8000);
    for (auto& v : x) {
        v = rng.uniform(-0.3, 0.3);
    }
    auto y = x;
    for (auto& v : y) {
        v *= 2.5;
    }
    const auto a = mfcc(x, 16000), b = mfcc(y, 16000);
    const double shift = std::sqrt(40.0) * 2.0 * std::log(2.5);
    for (std::size_t t = 0; t < a.rows; ++t) {
        EXPECT_NEAR(b(t, 0) - a(t, 0), shift, 1e-6);
        for (std::size_t j = 1; j < 13; ++j) {
            EXPECT_NEAR(b(t, j), a(t, j), 1e-6);
        }
    }
}

TEST(Mfcc, FftMatchesNaiveDft) {
    Rng rng(17);
    for (std::size_t n : {1u, 2u, 8u, 64u, 512u, 2048u}) {
        std::vector<std::complex<double>> a(n);
        for (auto& v : a) {
            v = {rng.uniform(-1.0, 1.0), 0.0};
        }
        auto fast = a;
        fft(fast);
        double scale = 0.0, err = 0.0;
        for (std::size_t k = 0; k < n; ++k) {
            std::complex<double> s{};
            for (std::size_t j = 0; j < n; ++j) {
                s += a[j] * std::polar(1.0, -2.0 * std::numbers::pi * static_cast<double>(k * j % n) / static_cast<double>(n));
            }
            scale = std::max(scale, std::abs(s));
            err = std::max(err, std::abs(s - fast[k]));
        }
        EXPECT_LE(err, 1e-6 * std::max(1.0, scale)) << "n=" << n;
    }
}

TEST(Mfcc, Errors) {
    expect_errc(Errc::SignalTooShort, [] { mfcc(std::vector<double>(100, 0.1), 16000); });
    expect_errc(Errc::UnsupportedSampleRate, [] { mfcc(std::vector<double>(16000, 0.1), 44100); });
}

TEST(Delta, ConstantAndRamp) {
    const auto flat = delta(matrix(20, 13, [](std::size_t, std::size_t j) { return static_cast<double>(j); }));
    for (double v : flat.values) {
        EXPECT_EQ(v, 0.0);
    }
    const double s = 0.7;
    const auto ramp = delta(matrix(20, 1, [&](std::size_t t, std::size_t) { return s * static_cast<double>(t); }));
    for (std::size_t t = 2; t + 2 < 20; ++t) {
        EXPECT_NEAR(ramp(t, 0), s, 1e-12);
    }
    // at the first frame the replicated edge gives (1 + 2*2) s / 10
    EXPECT_NEAR(ramp(0, 0), 0.5 * s, 1e-12);
    expect_errc(Errc::TooFewFrames, [] { delta(matrix(1, 13, [](std::size_t, std::size_t) { return 0.0; })); });
}

TEST(AggregateAudio, Examples) {
    const auto constant = aggregate_audio(matrix(30, 13, [](std::size_t, std::size_t j) { return 1.0 + j; }));
    ASSERT_EQ(constant.size(), 52u);
    for (std::size_t j = 0; j < 13; ++j) {
        EXPECT_FLOAT_EQ(constant[j], 1.0f + static_cast<float>(j));
        EXPECT_EQ(constant[13 + j], 0.0f);
        EXPECT_EQ(constant[26 + j], 0.0f);
        EXPECT_EQ(constant[39 + j], 0.0f);
    }
    const auto two = aggregate_audio(matrix(2, 13, [](std::size_t t, std::size_t) { return t == 0 ? 0.0 : 2.0; }));
    for (std::size_t j = 0; j < 13; ++j) {
        EXPECT_FLOAT_EQ(two[j], 1.0f);
        EXPECT_FLOAT_EQ(two[13 + j], 1.0f);
    }
}

TEST(AggregateAudio, ClipVectorLength) {
    std::vector<std::int16_t> pcm(128000);
    Rng rng(5);
    for (auto& v : pcm) {
        v = static_cast<std::int16_t>(rng.index(2000)) - 1000;
    }
    const auto v = audio_clip_vector(pcm, 16000);
    EXPECT_EQ(v.size(), 52u);
    for (float x : v) {
        EXPECT_TRUE(std::isfinite(x));
    }
}
