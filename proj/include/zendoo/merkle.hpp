#pragma once

#include <cstdint>
#include <stdexcept>
#include <vector>

#include "zendoo/digest.hpp"

namespace zendoo {

/// Sibling path from a leaf to the root, bottom-up.
struct MerkleProof {
    uint64_t leaf_index = 0;
    std::vector<Digest> siblings;

    bool operator==(const MerkleProof&) const = default;
};

/// Variable-size Merkle hash tree over a list of leaf digests. Leaves are
/// padded with the null-leaf digest up to the next power of two so every
/// proof at a given size has uniform depth.
class MerkleTree {
public:
    explicit MerkleTree(std::vector<Digest> leaves) : leaves_(std::move(leaves)) {
        if (leaves_.empty())
            throw std::invalid_argument("MerkleTree: empty leaf list");
        size_t padded = 1;
        depth_ = 0;
        while (padded < leaves_.size()) {
            padded <<= 1;
            ++depth_;
        }
        levels_.push_back(leaves_);
        levels_[0].resize(padded, null_leaf_digest());
        for (size_t lvl = 0; lvl < depth_; ++lvl) {
            const auto& below = levels_[lvl];
            std::vector<Digest> above(below.size() / 2);
            for (size_t i = 0; i < above.size(); ++i)
                above[i] = node_hash(below[2 * i], below[2 * i + 1]);
            levels_.push_back(std::move(above));
        }
    }

    const Digest& root() const { return levels_.back()[0]; }
    size_t leaf_count() const { return leaves_.size(); }
    size_t depth() const { return depth_; }
    const std::vector<Digest>& leaves() const { return leaves_; }

    MerkleProof prove(uint64_t index) const {
        if (index >= leaves_.size())
            throw std::out_of_range("MerkleTree::prove: leaf index out of range");
        MerkleProof proof;
        proof.leaf_index = index;
        uint64_t pos = index;
        for (size_t lvl = 0; lvl < depth_; ++lvl) {
            proof.siblings.push_back(levels_[lvl][pos ^ 1]);
            pos >>= 1;
        }
        return proof;
    }

private:
    std::vector<Digest> leaves_;
    size_t depth_ = 0;
    std::vector<std::vector<Digest>> levels_; // levels_[0] = padded leaves
};

inline MerkleTree mht_build(std::vector<Digest> leaves) { return MerkleTree(std::move(leaves)); }

inline MerkleProof mht_prove(const MerkleTree& tree, uint64_t index) { return tree.prove(index); }

/// Recompute the root from (leaf, proof) and compare.
inline bool mht_verify(const Digest& root, const Digest& leaf, const MerkleProof& proof) {
    Digest acc = leaf;
    uint64_t pos = proof.leaf_index;
    for (const Digest& sib : proof.siblings) {
        acc = (pos & 1) ? node_hash(sib, acc) : node_hash(acc, sib);
        pos >>= 1;
    }
    return pos == 0 && acc == root;
}

/// Root of an MHT whose leaves are the given digests hashed with the leaf tag.
inline Digest mht_root_over(const std::vector<Digest>& payloads) {
    if (payloads.empty()) return empty_list_digest();
    std::vector<Digest> leaves;
    leaves.reserve(payloads.size());
    for (const Digest& p : payloads) leaves.push_back(leaf_hash(p));
    return mht_build(std::move(leaves)).root();
}

} // namespace zendoo
