#pragma once

#include <cstdint>
#include <stdexcept>

#include "zendoo/digest.hpp"
#include "zendoo/serialize.hpp"

namespace zendoo {

/// Unspent output: (addr, amount, nonce). The triple fully determines the
/// UTXO digest and its MST slot.
struct Utxo {
    Digest addr;
    int64_t amount = 0; // >= 1
    Digest nonce;

    auto operator<=>(const Utxo&) const = default;

    // addr || 8-byte big-endian amount || nonce
    std::vector<uint8_t> encode() const {
        Writer w;
        w.digest(addr);
        w.i64(amount);
        w.digest(nonce);
        return w.take();
    }

    static Utxo decode(Reader& r) {
        Utxo u;
        u.addr = r.digest();
        u.amount = r.i64();
        u.nonce = r.digest();
        return u;
    }

    Digest digest() const { return hash_tagged(HashTag::Leaf, encode()); }

    /// Unique identifier of the coins this output holds; consumed on
    /// BTR/CSW withdrawal.
    Digest nullifier() const { return hash_tagged(HashTag::Nullifier, encode()); }
};

/// Slot index of a UTXO in a depth-D state tree. Depends only on the UTXO
/// fields, never on tree contents.
inline uint64_t mst_position(const Utxo& utxo, uint32_t depth) {
    if (depth < 1 || depth > 63)
        throw std::invalid_argument("mst_position: depth out of range");
    Digest h = hash_tagged(HashTag::Position, utxo.encode());
    uint64_t v = 0;
    for (int i = 0; i < 8; ++i) v = (v << 8) | h.bytes[i];
    return v & ((uint64_t{1} << depth) - 1);
}

} // namespace zendoo
