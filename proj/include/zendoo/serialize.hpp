#pragma once

#include <cstdint>
#include <optional>
#include <stdexcept>
#include <string>
#include <vector>

#include "zendoo/digest.hpp"

namespace zendoo {

// Canonical byte serialization used for all hashing and snapshot payloads.
// Integers are big-endian; variable-length data is length-prefixed with a
// 32-bit count. Encoders and decoders must stay bit-exact across modules.

class Writer {
public:
    void u8(uint8_t v) { buf_.push_back(v); }

    void u32(uint32_t v) {
        for (int i = 3; i >= 0; --i) buf_.push_back(static_cast<uint8_t>(v >> (8 * i)));
    }

    void u64(uint64_t v) {
        for (int i = 7; i >= 0; --i) buf_.push_back(static_cast<uint8_t>(v >> (8 * i)));
    }

    void i64(int64_t v) { u64(static_cast<uint64_t>(v)); }

    void digest(const Digest& d) { buf_.insert(buf_.end(), d.bytes.begin(), d.bytes.end()); }

    void bytes(std::span<const uint8_t> data) {
        u32(static_cast<uint32_t>(data.size()));
        buf_.insert(buf_.end(), data.begin(), data.end());
    }

    void bytes(const std::vector<uint8_t>& data) {
        bytes(std::span<const uint8_t>(data.data(), data.size()));
    }

    void raw(std::span<const uint8_t> data) { buf_.insert(buf_.end(), data.begin(), data.end()); }

    template <typename T, typename Fn>
    void list(const std::vector<T>& items, Fn&& encode_one) {
        u32(static_cast<uint32_t>(items.size()));
        for (const T& item : items) encode_one(*this, item);
    }

    const std::vector<uint8_t>& data() const { return buf_; }
    std::vector<uint8_t> take() { return std::move(buf_); }

private:
    std::vector<uint8_t> buf_;
};

struct DecodeError : std::runtime_error {
    explicit DecodeError(const std::string& what) : std::runtime_error(what) {}
};

class Reader {
public:
    explicit Reader(std::span<const uint8_t> data) : data_(data) {}
    explicit Reader(const std::vector<uint8_t>& data)
        : data_(data.data(), data.size()) {}

    uint8_t u8() {
        need(1);
        return data_[pos_++];
    }

    /// Presence/flag byte: anything but 0 or 1 is a malformed encoding, not
    /// an alternate spelling of true.
    bool boolean() {
        uint8_t v = u8();
        if (v > 1) throw DecodeError("flag byte out of range");
        return v == 1;
    }

    uint32_t u32() {
        need(4);
        uint32_t v = 0;
        for (int i = 0; i < 4; ++i) v = (v << 8) | data_[pos_++];
        return v;
    }

    uint64_t u64() {
        need(8);
        uint64_t v = 0;
        for (int i = 0; i < 8; ++i) v = (v << 8) | data_[pos_++];
        return v;
    }

    int64_t i64() { return static_cast<int64_t>(u64()); }

    Digest digest() {
        need(32);
        Digest d;
        std::memcpy(d.bytes.data(), data_.data() + pos_, 32);
        pos_ += 32;
        return d;
    }

    std::vector<uint8_t> bytes() {
        uint32_t n = u32();
        need(n);
        std::vector<uint8_t> out(data_.begin() + pos_, data_.begin() + pos_ + n);
        pos_ += n;
        return out;
    }

    template <typename T, typename Fn>
    std::vector<T> list(Fn&& decode_one) {
        uint32_t n = u32();
        std::vector<T> out;
        out.reserve(n);
        for (uint32_t i = 0; i < n; ++i) out.push_back(decode_one(*this));
        return out;
    }

    bool done() const { return pos_ == data_.size(); }
    size_t remaining() const { return data_.size() - pos_; }

    void expect_done() const {
        if (!done()) throw DecodeError("trailing bytes after decode");
    }

private:
    void need(size_t n) const {
        if (pos_ + n > data_.size()) throw DecodeError("unexpected end of input");
    }

    std::span<const uint8_t> data_;
    size_t pos_ = 0;
};

} // namespace zendoo
