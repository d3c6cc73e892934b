#pragma once

#include <cmath>
#include <complex>
#include <cstdint>
#include <numbers>
#include <span>
#include <vector>

#include "error.hpp"

namespace egofall {

struct MfccOptions {
    std::uint32_t sample_rate = 16000;
    double frame_len_s = 0.025;
    double hop_s = 0.010;
    int n_mels = 40;
    int n_coeffs = 13;
    double log_floor = 1e-10;

    std::size_t frame_len() const { return static_cast<std::size_t>(std::lround(frame_len_s * sample_rate)); }
    std::size_t hop() const { return static_cast<std::size_t>(std::lround(hop_s * sample_rate)); }
    std::size_t fft_size() const {
        std::size_t n = 1;
        while (n < frame_len()) {
            n <<= 1;
        }
        return n;
    }
};

/// T x C coefficients, row-major (one row per analysis frame).
struct MfccMatrix {
    std::size_t rows = 0;
    std::size_t cols = 0;
    std::vector<double> values;

    double operator()(std::size_t t, std::size_t c) const { return values[t * cols + c]; }
    double& operator()(std::size_t t, std::size_t c) { return values[t * cols + c]; }
    std::span<const double> row(std::size_t t) const { return {values.data() + t * cols, cols}; }
};

/// In-place iterative radix-2 FFT. Size must be a power of two.
inline void fft(std::vector<std::complex<double>>& a) {
    const std::size_t n = a.size();
    if (n == 0 || (n & (n - 1)) != 0) {
        fail(Errc::InvalidParams, "FFT size must be a power of two");
    }
    for (std::size_t i = 1, j = 0; i < n; ++i) {
        std::size_t bit = n >> 1;
        for (; j & bit; bit >>= 1) {
            j ^= bit;
        }
        j ^= bit;
        if (i < j) {
            std::swap(a[i], a[j]);
        }
    }
    for (std::size_t len = 2; len <= n; len <<= 1) {
        const double ang = -2.0 * std::numbers::pi / static_cast<double>(len);
        for (std::size_t i = 0; i < n; i += len) {
            for (std::size_t k = 0; k < len / 2; ++k) {
                // per-element twiddles avoid the drift of a running product
                const std::complex<double> w(std::cos(ang * static_cast<double>(k)), std::sin(ang * static_cast<double>(k)));
                const auto u = a[i + k];
                const auto v = a[i + k + len / 2] * w;
                a[i + k] = u + v;
                a[i + k + len / 2] = u - v;
            }
        }
    }
}

inline double hz_to_mel(double hz) { return 2595.0 * std::log10(1.0 + hz / 700.0); }
inline double mel_to_hz(double mel) { return 700.0 * (std::pow(10.0, mel / 2595.0) - 1.0); }

/// n_mels x (fft_size/2 + 1) triangular filters, equally spaced on the mel scale from 0 Hz to Nyquist.
inline std::vector<std::vector<double>> mel_filterbank(const MfccOptions& opt) {
    const std::size_t nfft = opt.fft_size();
    const std::size_t nbins = nfft / 2 + 1;
    const double top = hz_to_mel(opt.sample_rate / 2.0);
    std::vector<double> edges(static_cast<std::size_t>(opt.n_mels) + 2);
    for (std::size_t i = 0; i < edges.size(); ++i) {
        edges[i] = mel_to_hz(top * static_cast<double>(i) / static_cast<double>(opt.n_mels + 1));
    }
    std::vector<std::vector<double>> bank(static_cast<std::size_t>(opt.n_mels), std::vector<double>(nbins, 0.0));
    for (std::size_t m = 0; m < bank.size(); ++m) {
        const double lo = edges[m], mid = edges[m + 1], hi = edges[m + 2];
        for (std::size_t k = 0; k < nbins; ++k) {
            const double f = static_cast<double>(k) * opt.sample_rate / static_cast<double>(nfft);
            double w = 0.0;
            if (f > lo && f <= mid) {
                w = (f - lo) / (mid - lo);
            } else if (f > mid && f < hi) {
                w = (hi - f) / (hi - mid);
            }
            bank[m][k] = w;
        }
    }
    return bank;
}

/// Orthonormal DCT-II, first `keep` coefficients.
inline std::vector<double> dct2_ortho(std::span<const double> x, std::size_t keep) {
    const auto n = x.size();
    std::vector<double> out(keep, 0.0);
    for (std::size_t k = 0; k < keep; ++k) {
        double s = 0.0;
        for (std::size_t i = 0; i < n; ++i) {
            s += x[i] * std::cos(std::numbers::pi * static_cast<double>(k) * (2.0 * static_cast<double>(i) + 1.0) /
                                 (2.0 * static_cast<double>(n)));
        }
        out[k] = s * (k == 0 ? std::sqrt(1.0 / n) : std::sqrt(2.0 / n));
    }
    return out;
}

inline std::size_t mfcc_frame_count(std::size_t num_samples, const MfccOptions& opt) {
    return num_samples < opt.frame_len() ? 0 : 1 + (num_samples - opt.frame_len()) / opt.hop();
}

/// Per frame: periodic Hann window, zero-padded FFT, power spectrum, mel filter energies,
/// natural log with a floor, orthonormal DCT-II.
inline MfccMatrix mfcc(std::span<const double> signal, std::uint32_t sample_rate, const MfccOptions& opt = {}) {
    if (sample_rate != opt.sample_rate) {
        fail(Errc::UnsupportedSampleRate, std::to_string(sample_rate) + " Hz (configured " +
                                              std::to_string(opt.sample_rate) + " Hz)");
    }
    const std::size_t L = opt.frame_len();
    if (signal.size() < L) {
        fail(Errc::SignalTooShort, std::to_string(signal.size()) + " samples, one frame needs " + std::to_string(L));
    }
    const std::size_t nfft = opt.fft_size();
    const auto bank = mel_filterbank(opt);
    std::vector<double> window(L);
    for (std::size_t i = 0; i < L; ++i) {
        window[i] = 0.5 - 0.5 * std::cos(2.0 * std::numbers::pi * static_cast<double>(i) / static_cast<double>(L));
    }

    MfccMatrix out;
    out.rows = mfcc_frame_count(signal.size(), opt);
    out.cols = static_cast<std::size_t>(opt.n_coeffs);
    out.values.resize(out.rows * out.cols);
    std::vector<std::complex<double>> buf(nfft);
    std::vector<double> power(nfft / 2 + 1);
    std::vector<double> logmel(bank.size());
    for (std::size_t t = 0; t < out.rows; ++t) {
        const std::size_t start = t * opt.hop();
        std::fill(buf.begin(), buf.end(), std::complex<double>{});
        for (std::size_t i = 0; i < L; ++i) {
            buf[i] = signal[start + i] * window[i];
        }
        fft(buf);
        for (std::size_t k = 0; k < power.size(); ++k) {
            power[k] = std::norm(buf[k]);
        }
        for (std::size_t m = 0; m < bank.size(); ++m) {
            double e = 0.0;
            for (std::size_t k = 0; k < power.size(); ++k) {
                e += bank[m][k] * power[k];
            }
            logmel[m] = std::log(std::max(e, opt.log_floor));
        }
        const auto c = dct2_ortho(logmel, out.cols);
        std::copy(c.begin(), c.end(), out.values.begin() + static_cast<std::ptrdiff_t>(t * out.cols));
    }
    return out;
}

/// Converts 16-bit PCM to [-1, 1).
inline std::vector<double> pcm_to_double(std::span<const std::int16_t> pcm) {
    std::vector<double> out(pcm.size());
    for (std::size_t i = 0; i < pcm.size(); ++i) {
        out[i] = pcm[i] / 32768.0;
    }
    return out;
}

/// Regression deltas with half-window 2, edge-replicating frames beyond the ends.
inline MfccMatrix delta(const MfccMatrix& c) {
    if (c.rows < 2) {
        fail(Errc::TooFewFrames, "delta needs at least 2 frames");
    }
    constexpr int N = 2;
    constexpr double denom = 2.0 * (1 * 1 + 2 * 2);
    MfccMatrix d{c.rows, c.cols, std::vector<double>(c.values.size())};
    const auto last = static_cast<long>(c.rows) - 1;
    for (long t = 0; t <= last; ++t) {
        for (std::size_t j = 0; j < c.cols; ++j) {
            double s = 0.0;
            for (int k = 1; k <= N; ++k) {
                const auto fwd = static_cast<std::size_t>(std::min(t + k, last));
                const auto back = static_cast<std::size_t>(std::max(t - k, 0L));
                s += k * (c(fwd, j) - c(back, j));
            }
            d(static_cast<std::size_t>(t), j) = s / denom;
        }
    }
    return d;
}

/// [mean(C), popstd(C), mean(delta), popstd(delta)]; 52 values for 13 coefficients.
inline std::vector<float> aggregate_audio(const MfccMatrix& c) {
    if (c.rows < 2) {
        fail(Errc::TooFewFrames, "aggregation needs at least 2 frames");
    }
    const auto d = delta(c);
    std::vector<float> out;
    out.reserve(4 * c.cols);
    auto stats = [&](const MfccMatrix& m, std::vector<double>& mean, std::vector<double>& sd) {
        mean.assign(m.cols, 0.0);
        sd.assign(m.cols, 0.0);
        for (std::size_t t = 0; t < m.rows; ++t) {
            for (std::size_t j = 0; j < m.cols; ++j) {
                mean[j] += m(t, j);
            }
        }
        for (auto& v : mean) {
            v /= static_cast<double>(m.rows);
        }
        for (std::size_t t = 0; t < m.rows; ++t) {
            for (std::size_t j = 0; j < m.cols; ++j) {
                const double e = m(t, j) - mean[j];
                sd[j] += e * e;
            }
        }
        for (auto& v : sd) {
            v = std::sqrt(v / static_cast<double>(m.rows));
        }
    };
    std::vector<double> cm, cs, dm, ds;
    stats(c, cm, cs);
    stats(d, dm, ds);
    for (const auto* part : {&cm, &cs, &dm, &ds}) {
        for (double v : *part) {
            out.push_back(static_cast<float>(v));
        }
    }
    return out;
}

/// Clip-level audio vector straight from PCM.
inline std::vector<float> audio_clip_vector(std::span<const std::int16_t> pcm, std::uint32_t sample_rate,
                                            const MfccOptions& opt = {}) {
    const auto signal = pcm_to_double(pcm);
    return aggregate_audio(mfcc(signal, sample_rate, opt));
}

} // namespace egofall
