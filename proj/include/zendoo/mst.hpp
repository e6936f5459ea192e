#pragma once

#include <cstdint>
#include <map>
#include <optional>
#include <stdexcept>
#include <vector>

#include "zendoo/digest.hpp"
#include "zendoo/merkle.hpp"
#include "zendoo/utxo.hpp"

namespace zendoo {

struct CollisionError : std::runtime_error {
    uint64_t slot;
    explicit CollisionError(uint64_t s)
        : std::runtime_error("MST slot already occupied: " + std::to_string(s)), slot(s) {}
};

struct NotFoundError : std::runtime_error {
    explicit NotFoundError(const std::string& what) : std::runtime_error(what) {}
};

/// Empty-subtree digest for a subtree of the given height.
inline const Digest& empty_subtree_digest(uint32_t height) {
    static std::vector<Digest> cache = [] {
        std::vector<Digest> c;
        c.push_back(null_leaf_digest());
        for (int i = 1; i <= 63; ++i) c.push_back(node_hash(c.back(), c.back()));
        return c;
    }();
    if (height >= cache.size())
        throw std::invalid_argument("empty_subtree_digest: height too large");
    return cache[height];
}

/// Fixed-depth Merkle tree over positional UTXO slots. Empty slots hash to
/// the null-leaf digest. Value semantics: mutating operations return a new
/// tree.
class MerkleStateTree {
public:
    explicit MerkleStateTree(uint32_t depth) : depth_(depth) {
        if (depth < 1 || depth > 32)
            throw std::invalid_argument("MerkleStateTree: depth out of range");
    }

    uint32_t depth() const { return depth_; }
    uint64_t slot_count() const { return uint64_t{1} << depth_; }
    const std::map<uint64_t, Utxo>& slots() const { return slots_; }

    std::optional<Utxo> at(uint64_t slot) const {
        auto it = slots_.find(slot);
        if (it == slots_.end()) return std::nullopt;
        return it->second;
    }

    uint64_t position_of(const Utxo& utxo) const { return mst_position(utxo, depth_); }

    bool contains(const Utxo& utxo) const {
        auto it = slots_.find(position_of(utxo));
        return it != slots_.end() && it->second == utxo;
    }

    /// Insert at the UTXO's positional slot; CollisionError if occupied.
    MerkleStateTree insert(const Utxo& utxo) const {
        if (utxo.amount < 1)
            throw std::invalid_argument("MerkleStateTree::insert: amount must be >= 1");
        uint64_t slot = position_of(utxo);
        if (slots_.count(slot)) throw CollisionError(slot);
        MerkleStateTree next = *this;
        next.slots_.emplace(slot, utxo);
        next.root_cache_.reset();
        return next;
    }

    /// Remove the exact UTXO; NotFoundError if the slot is empty or holds a
    /// different output.
    MerkleStateTree remove(const Utxo& utxo) const {
        uint64_t slot = position_of(utxo);
        auto it = slots_.find(slot);
        if (it == slots_.end() || it->second != utxo)
            throw NotFoundError("MerkleStateTree::remove: UTXO not present at slot " +
                                std::to_string(slot));
        MerkleStateTree next = *this;
        next.slots_.erase(slot);
        next.root_cache_.reset();
        return next;
    }

    Digest root() const {
        if (!root_cache_) root_cache_ = subtree_digest(depth_, 0);
        return *root_cache_;
    }

    MerkleProof prove_inclusion(const Utxo& utxo) const {
        if (!contains(utxo))
            throw NotFoundError("MerkleStateTree::prove_inclusion: UTXO not in tree");
        uint64_t slot = position_of(utxo);
        MerkleProof proof;
        proof.leaf_index = slot;
        uint64_t pos = slot;
        for (uint32_t h = 0; h < depth_; ++h) {
            proof.siblings.push_back(subtree_digest(h, pos ^ 1));
            pos >>= 1;
        }
        return proof;
    }

private:
    // Digest of the subtree of the given height whose leaves are slots
    // [index << height, (index + 1) << height).
    Digest subtree_digest(uint32_t height, uint64_t index) const {
        uint64_t lo = index << height;
        uint64_t hi = lo + (uint64_t{1} << height);
        auto it = slots_.lower_bound(lo);
        if (it == slots_.end() || it->first >= hi) return empty_subtree_digest(height);
        if (height == 0) return it->second.digest();
        return node_hash(subtree_digest(height - 1, 2 * index),
                         subtree_digest(height - 1, 2 * index + 1));
    }

    uint32_t depth_;
    std::map<uint64_t, Utxo> slots_;
    mutable std::optional<Digest> root_cache_;
};

inline bool mst_verify_inclusion(const Digest& root, const Utxo& utxo, const MerkleProof& proof) {
    return mht_verify(root, utxo.digest(), proof);
}

} // namespace zendoo
