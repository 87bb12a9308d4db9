#pragma once

// Little-endian encode/decode helpers shared by the SKC1 and SKCC formats.

#include <bit>
#include <cstdint>
#include <cstring>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include "skcache/errors.hpp"

namespace skcache::detail {

class ByteWriter {
public:
    void bytes(std::string_view raw) { buf_.insert(buf_.end(), raw.begin(), raw.end()); }

    void u8(std::uint8_t v) { buf_.push_back(v); }

    void u16(std::uint16_t v) {
        buf_.push_back(static_cast<std::uint8_t>(v));
        buf_.push_back(static_cast<std::uint8_t>(v >> 8));
    }

    void u32(std::uint32_t v) {
        for (int shift = 0; shift < 32; shift += 8) {
            buf_.push_back(static_cast<std::uint8_t>(v >> shift));
        }
    }

    void f32(float v) { u32(std::bit_cast<std::uint32_t>(v)); }

    void f32s(std::span<const float> values) {
        buf_.reserve(buf_.size() + values.size() * 4);
        for (float v : values) f32(v);
    }

    std::vector<std::uint8_t> take() { return std::move(buf_); }
    std::size_t size() const noexcept { return buf_.size(); }

private:
    std::vector<std::uint8_t> buf_;
};

/// Cursor over an encoded buffer. Every read names what it is reading so
/// truncation errors point at the offending field.
class ByteReader {
public:
    explicit ByteReader(std::span<const std::uint8_t> data) : data_(data) {}

    std::size_t remaining() const noexcept { return data_.size() - pos_; }
    std::size_t offset() const noexcept { return pos_; }

    void require(std::size_t n, const std::string& what) const {
        if (remaining() < n) {
            throw ParseError(ParseError::Kind::Truncated,
                             "truncated input while reading " + what + " (need " +
                                 std::to_string(n) + " bytes at offset " +
                                 std::to_string(pos_) + ", have " +
                                 std::to_string(remaining()) + ")");
        }
    }

    std::string_view bytes(std::size_t n, const std::string& what) {
        require(n, what);
        std::string_view out(reinterpret_cast<const char*>(data_.data() + pos_), n);
        pos_ += n;
        return out;
    }

    std::uint8_t u8(const std::string& what) {
        require(1, what);
        return data_[pos_++];
    }

    std::uint16_t u16(const std::string& what) {
        require(2, what);
        std::uint16_t v = static_cast<std::uint16_t>(data_[pos_]) |
                          static_cast<std::uint16_t>(data_[pos_ + 1] << 8);
        pos_ += 2;
        return v;
    }

    std::uint32_t u32(const std::string& what) {
        require(4, what);
        return u32_unchecked();
    }

    float f32(const std::string& what) {
        require(4, what);
        return std::bit_cast<float>(u32_unchecked());
    }

    void f32s(std::span<float> out, const std::string& what) {
        require(out.size() * 4, what);
        for (float& v : out) v = std::bit_cast<float>(u32_unchecked());
    }

private:
    std::uint32_t u32_unchecked() {
        std::uint32_t v = 0;
        for (int i = 0; i < 4; ++i) {
            v |= static_cast<std::uint32_t>(data_[pos_ + i]) << (8 * i);
        }
        pos_ += 4;
        return v;
    }

    std::span<const std::uint8_t> data_;
    std::size_t pos_ = 0;
};

std::vector<std::uint8_t> read_file_bytes(const std::string& path);
void write_file_bytes(const std::string& path, std::span<const std::uint8_t> bytes);

}  // namespace skcache::detail
