#pragma once

#include <array>
#include <cstdint>
#include <cstring>
#include <span>
#include <stdexcept>
#include <string>
#include <vector>

#include <openssl/sha.h>

namespace zendoo {

/// 32-byte hash value. Equality is byte equality.
struct Digest {
    std::array<uint8_t, 32> bytes{};

    auto operator<=>(const Digest&) const = default;

    std::string hex() const {
        static const char* digits = "0123456789abcdef";
        std::string out;
        out.reserve(64);
        for (uint8_t b : bytes) {
            out.push_back(digits[b >> 4]);
            out.push_back(digits[b & 0x0f]);
        }
        return out;
    }

    static Digest from_hex(const std::string& s) {
        if (s.size() != 64)
            throw std::invalid_argument("Digest::from_hex: need 64 hex chars");
        auto nibble = [](char c) -> int {
            if (c >= '0' && c <= '9') return c - '0';
            if (c >= 'a' && c <= 'f') return c - 'a' + 10;
            if (c >= 'A' && c <= 'F') return c - 'A' + 10;
            throw std::invalid_argument("Digest::from_hex: bad hex char");
        };
        Digest d;
        for (size_t i = 0; i < 32; ++i)
            d.bytes[i] = static_cast<uint8_t>((nibble(s[2 * i]) << 4) | nibble(s[2 * i + 1]));
        return d;
    }
};

inline Digest hash_bytes(std::span<const uint8_t> data) {
    Digest d;
    SHA256(data.data(), data.size(), d.bytes.data());
    return d;
}

inline Digest hash_bytes(const std::vector<uint8_t>& data) {
    return hash_bytes(std::span<const uint8_t>(data.data(), data.size()));
}

// Domain-separation tags. Every hashing context gets its own prefix byte so
// a leaf digest can never collide with a node digest, a tx id with a block
// hash, and so on.
enum class HashTag : uint8_t {
    Leaf = 0x00,
    Node = 0x01,
    NullLeaf = 0x02,
    Transaction = 0x03,
    Block = 0x04,
    Position = 0x05,
    Nullifier = 0x06,
    Address = 0x07,
    Signature = 0x08,
    VerifyingKey = 0x09,
    ProvingKey = 0x0a,
    Binding = 0x0b,
    State = 0x0c,
    EmptyList = 0x0d,
    LeaderSeed = 0x0e,
    Field = 0x0f,
    Nonce = 0x10,
    Body = 0x11,
};

inline Digest hash_tagged(HashTag tag, std::span<const uint8_t> data) {
    std::vector<uint8_t> buf;
    buf.reserve(data.size() + 1);
    buf.push_back(static_cast<uint8_t>(tag));
    buf.insert(buf.end(), data.begin(), data.end());
    return hash_bytes(buf);
}

inline Digest hash_tagged(HashTag tag, const std::vector<uint8_t>& data) {
    return hash_tagged(tag, std::span<const uint8_t>(data.data(), data.size()));
}

/// Hash of a data-block leaf.
inline Digest leaf_hash(std::span<const uint8_t> payload) {
    return hash_tagged(HashTag::Leaf, payload);
}

inline Digest leaf_hash(const Digest& payload) {
    return hash_tagged(HashTag::Leaf, std::span<const uint8_t>(payload.bytes.data(), 32));
}

/// Hash of an internal tree node from its two children.
inline Digest node_hash(const Digest& left, const Digest& right) {
    std::array<uint8_t, 65> buf;
    buf[0] = static_cast<uint8_t>(HashTag::Node);
    std::memcpy(buf.data() + 1, left.bytes.data(), 32);
    std::memcpy(buf.data() + 33, right.bytes.data(), 32);
    Digest d;
    SHA256(buf.data(), buf.size(), d.bytes.data());
    return d;
}

/// Digest standing for an empty leaf slot.
inline const Digest& null_leaf_digest() {
    static const Digest d = hash_tagged(HashTag::NullLeaf, std::span<const uint8_t>{});
    return d;
}

/// Digest standing for an empty list (e.g. an empty BTList commitment).
inline const Digest& empty_list_digest() {
    static const Digest d = hash_tagged(HashTag::EmptyList, std::span<const uint8_t>{});
    return d;
}

} // namespace zendoo
