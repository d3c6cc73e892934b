#pragma once

#include <atomic>
#include <bit>
#include <cstdint>
#include <cstring>
#include <filesystem>
#include <fstream>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include <unistd.h>

#include "error.hpp"

// Little-endian byte buffer helpers shared by every binary format in the library.
namespace egofall::bin {

static_assert(std::endian::native == std::endian::little, "big-endian hosts are not supported");

class Writer {
public:
    void bytes(const void* p, std::size_t n) {
        const auto* b = static_cast<const std::uint8_t*>(p);
        buf_.insert(buf_.end(), b, b + n);
    }
    void magic(std::string_view m) { bytes(m.data(), m.size()); }
    void u8(std::uint8_t v) { bytes(&v, 1); }
    void u16(std::uint16_t v) { bytes(&v, 2); }
    void u32(std::uint32_t v) { bytes(&v, 4); }
    void i16(std::int16_t v) { bytes(&v, 2); }
    void f32(float v) { bytes(&v, 4); }
    void f32s(std::span<const float> v) { bytes(v.data(), v.size() * sizeof(float)); }
    void str(std::string_view s) {
        u32(static_cast<std::uint32_t>(s.size()));
        bytes(s.data(), s.size());
    }

    const std::vector<std::uint8_t>& buffer() const { return buf_; }
    std::vector<std::uint8_t> take() { return std::move(buf_); }

private:
    std::vector<std::uint8_t> buf_;
};

class Reader {
public:
    Reader(std::span<const std::uint8_t> data, Errc on_error) : data_(data), err_(on_error) {}

    void bytes(void* out, std::size_t n) {
        need(n);
        std::memcpy(out, data_.data() + pos_, n);
        pos_ += n;
    }
    bool magic(std::string_view m) {
        need(m.size());
        const bool ok = std::memcmp(data_.data() + pos_, m.data(), m.size()) == 0;
        pos_ += m.size();
        return ok;
    }
    std::uint8_t u8() { return get<std::uint8_t>(); }
    std::uint16_t u16() { return get<std::uint16_t>(); }
    std::uint32_t u32() { return get<std::uint32_t>(); }
    std::int16_t i16() { return get<std::int16_t>(); }
    float f32() { return get<float>(); }
    std::vector<float> f32s(std::size_t n) {
        need(n * sizeof(float));
        std::vector<float> v(n);
        bytes(v.data(), n * sizeof(float));
        return v;
    }
    std::string str() {
        const auto n = u32();
        need(n);
        std::string s(reinterpret_cast<const char*>(data_.data() + pos_), n);
        pos_ += n;
        return s;
    }

    std::size_t remaining() const { return data_.size() - pos_; }
    std::size_t position() const { return pos_; }

private:
    template <typename T>
    T get() {
        T v;
        bytes(&v, sizeof(T));
        return v;
    }
    void need(std::size_t n) const {
        if (data_.size() - pos_ < n) {
            fail(err_, "unexpected end of data at byte " + std::to_string(pos_));
        }
    }

    std::span<const std::uint8_t> data_;
    std::size_t pos_ = 0;
    Errc err_;
};

inline std::vector<std::uint8_t> read_file(const std::filesystem::path& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) {
        fail(Errc::IoFailure, "cannot open " + path.string());
    }
    std::vector<std::uint8_t> data((std::istreambuf_iterator<char>(in)), std::istreambuf_iterator<char>());
    return data;
}

inline void write_file(const std::filesystem::path& path, std::span<const std::uint8_t> data) {
    std::ofstream out(path, std::ios::binary | std::ios::trunc);
    if (!out) {
        fail(Errc::IoFailure, "cannot write " + path.string());
    }
    out.write(reinterpret_cast<const char*>(data.data()), static_cast<std::streamsize>(data.size()));
    if (!out) {
        fail(Errc::IoFailure, "short write to " + path.string());
    }
}

/// Writes to a sibling temp file and renames it into place, so readers never observe partial files.
inline void write_file_atomic(const std::filesystem::path& path, std::span<const std::uint8_t> data) {
    static std::atomic<unsigned> counter{0};
    auto tmp = path;
    tmp += ".tmp" + std::to_string(::getpid()) + "_" + std::to_string(counter++);
    write_file(tmp, data);
    std::error_code ec;
    std::filesystem::rename(tmp, path, ec);
    if (ec) {
        std::filesystem::remove(tmp, ec);
        fail(Errc::IoFailure, "cannot rename into " + path.string());
    }
}

} // namespace egofall::bin
