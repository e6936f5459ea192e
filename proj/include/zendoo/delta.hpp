#pragma once

#include <cstdint>
#include <stdexcept>
#include <string>
#include <vector>

#include "zendoo/mst.hpp"
#include "zendoo/serialize.hpp"

namespace zendoo {

/// Bit vector over MST slots: bit b is 1 iff slot b was modified in the
/// covered interval. OR-composition over adjacent intervals gives the delta
/// of the union interval.
struct MstDelta {
    std::vector<bool> bits;

    MstDelta() = default;
    explicit MstDelta(uint64_t length) : bits(length, false) {}

    bool operator==(const MstDelta&) const = default;

    void touch(uint64_t slot) {
        if (slot >= bits.size()) throw std::out_of_range("MstDelta::touch: slot out of range");
        bits[slot] = true;
    }

    bool test(uint64_t slot) const {
        if (slot >= bits.size()) throw std::out_of_range("MstDelta::test: slot out of range");
        return bits[slot];
    }

    /// "11100001"-style rendering, slot 0 first.
    std::string to_string() const {
        std::string s;
        s.reserve(bits.size());
        for (bool b : bits) s.push_back(b ? '1' : '0');
        return s;
    }

    static MstDelta from_string(const std::string& s) {
        MstDelta d(s.size());
        for (size_t i = 0; i < s.size(); ++i) {
            if (s[i] == '1')
                d.bits[i] = true;
            else if (s[i] != '0')
                throw std::invalid_argument("MstDelta::from_string: bad character");
        }
        return d;
    }

    // Packed bits, MSB-first, preceded by the bit count.
    void encode(Writer& w) const {
        w.u64(bits.size());
        uint8_t acc = 0;
        int fill = 0;
        for (bool b : bits) {
            acc = static_cast<uint8_t>((acc << 1) | (b ? 1 : 0));
            if (++fill == 8) {
                w.u8(acc);
                acc = 0;
                fill = 0;
            }
        }
        if (fill > 0) w.u8(static_cast<uint8_t>(acc << (8 - fill)));
    }

    static MstDelta decode(Reader& r) {
        uint64_t n = r.u64();
        if (n > (uint64_t{1} << 32)) throw DecodeError("MstDelta: implausible length");
        MstDelta d(n);
        uint64_t full = n / 8, rest = n % 8;
        uint64_t i = 0;
        for (uint64_t byte = 0; byte < full; ++byte) {
            uint8_t v = r.u8();
            for (int bit = 7; bit >= 0; --bit) d.bits[i++] = (v >> bit) & 1;
        }
        if (rest) {
            uint8_t v = r.u8();
            for (uint64_t bit = 0; bit < rest; ++bit) d.bits[i++] = (v >> (7 - bit)) & 1;
        }
        return d;
    }

    std::vector<uint8_t> encode() const {
        Writer w;
        encode(w);
        return w.take();
    }
};

/// Slots whose content differs between two trees of equal depth. Transient
/// touches (spend-then-refill within the interval) are invisible here; epoch
/// accounting uses a touched-set accumulator instead.
inline MstDelta delta_compute(const MerkleStateTree& before, const MerkleStateTree& after) {
    if (before.depth() != after.depth())
        throw std::invalid_argument("delta_compute: depth mismatch");
    MstDelta d(before.slot_count());
    auto bi = before.slots().begin(), be = before.slots().end();
    auto ai = after.slots().begin(), ae = after.slots().end();
    while (bi != be || ai != ae) {
        if (ai == ae || (bi != be && bi->first < ai->first)) {
            d.bits[bi->first] = true;
            ++bi;
        } else if (bi == be || ai->first < bi->first) {
            d.bits[ai->first] = true;
            ++ai;
        } else {
            if (bi->second != ai->second) d.bits[bi->first] = true;
            ++bi;
            ++ai;
        }
    }
    return d;
}

inline MstDelta delta_or(const MstDelta& a, const MstDelta& b) {
    if (a.bits.size() != b.bits.size())
        throw std::invalid_argument("delta_or: length mismatch");
    MstDelta out(a.bits.size());
    for (size_t i = 0; i < out.bits.size(); ++i) out.bits[i] = a.bits[i] || b.bits[i];
    return out;
}

/// True iff the inclusion proof verifies against the anchor root and the
/// UTXO's slot bit is clear in every delta since the anchor.
inline bool prove_unspent_since(const Utxo& utxo, const Digest& anchor_state_root,
                                const MerkleProof& anchor_inclusion_proof,
                                const std::vector<MstDelta>& deltas) {
    if (!mst_verify_inclusion(anchor_state_root, utxo, anchor_inclusion_proof)) return false;
    uint32_t depth = static_cast<uint32_t>(anchor_inclusion_proof.siblings.size());
    uint64_t slot;
    try {
        slot = mst_position(utxo, depth);
    } catch (const std::invalid_argument&) {
        return false;
    }
    for (const MstDelta& d : deltas) {
        if (slot >= d.bits.size() || d.bits[slot]) return false;
    }
    return true;
}

} // namespace zendoo
