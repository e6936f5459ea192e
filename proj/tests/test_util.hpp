#pragma once

#include <cstdint>
#include <random>

#include "zendoo/utxo.hpp"

namespace zendoo::test {

inline Digest byte_digest(uint8_t b) {
    Digest d;
    d.bytes.fill(b);
    return d;
}

inline Digest seeded_digest(uint64_t seed) {
    Writer w;
    w.u64(seed);
    return hash_bytes(w.data());
}

/// Search nonces until the UTXO lands in the requested slot at the given
/// depth. Cheap at small depths.
inline Utxo mine_utxo_at(const Digest& addr, int64_t amount, uint64_t slot, uint32_t depth,
                         uint64_t salt = 0) {
    for (uint64_t n = 0;; ++n) {
        Writer w;
        w.u64(salt);
        w.u64(n);
        Utxo u{addr, amount, hash_bytes(w.data())};
        if (mst_position(u, depth) == slot) return u;
    }
}

} // namespace zendoo::test
