#pragma once

#include <map>
#include <optional>
#include <stdexcept>
#include <vector>

#include "zendoo/mc_types.hpp"
#include "zendoo/merkle.hpp"

namespace zendoo {

// Sidechain transactions commitment: a Merkle root in the MC block header
// covering, per sidechain, a subtree of (TxsHash, WCertHash). Leaves are
// ordered by ledger id and bracketed by min/max sentinel leaves so that both
// membership (mproof) and absence (proofOfNoData) of a ledger id are provable
// against the root alone.

struct DuplicateWCertError : std::runtime_error {
    explicit DuplicateWCertError(const Digest& ledger)
        : std::runtime_error("two withdrawal certificates for sidechain " + ledger.hex()) {}
};

/// SC-related content of one MC block for one sidechain, in block order.
struct ScBlockActivity {
    std::vector<ForwardTransfer> fts;
    std::vector<BtrRequest> btrs;
    std::optional<WithdrawalCertificate> wcert;

    bool empty() const { return fts.empty() && btrs.empty() && !wcert; }
};

/// TxsHash: commits to the block's FTs then BTRs for one sidechain.
inline Digest sc_txs_hash(const std::vector<ForwardTransfer>& fts,
                          const std::vector<BtrRequest>& btrs) {
    std::vector<Digest> leaves;
    for (const auto& ft : fts) leaves.push_back(ft.digest());
    for (const auto& btr : btrs) {
        Writer w;
        btr.encode(w);
        leaves.push_back(hash_tagged(HashTag::Leaf, w.data()));
    }
    if (leaves.empty()) return empty_list_digest();
    return mht_build(std::move(leaves)).root();
}

inline Digest sc_wcert_hash(const std::optional<WithdrawalCertificate>& wcert) {
    if (!wcert) return empty_list_digest();
    return wcert->digest();
}

/// Per-sidechain subtree root: H(TxsHash || WCertHash).
inline Digest sc_subtree_root(const ScBlockActivity& activity) {
    return node_hash(sc_txs_hash(activity.fts, activity.btrs), sc_wcert_hash(activity.wcert));
}

inline Digest sc_leaf_digest(const Digest& ledger_id, const Digest& subtree_root) {
    Writer w;
    w.digest(ledger_id);
    w.digest(subtree_root);
    return hash_tagged(HashTag::Leaf, w.data());
}

inline Digest sentinel_min_id() { return Digest{}; }
inline Digest sentinel_max_id() {
    Digest d;
    d.bytes.fill(0xff);
    return d;
}

class ScCommitmentTree {
public:
    /// Collects per-sidechain activity from a block body. Throws
    /// DuplicateWCertError if one sidechain has two certificates.
    static ScCommitmentTree from_block(const McBlock& block) {
        std::map<Digest, ScBlockActivity> by_ledger;
        for (const auto& tx : block.txs)
            for (const auto& ft : tx.ft_outputs) by_ledger[ft.ledger_id].fts.push_back(ft);
        for (const auto& btr : block.btrs) by_ledger[btr.ledger_id].btrs.push_back(btr);
        for (const auto& cert : block.certs) {
            auto& slot = by_ledger[cert.ledger_id];
            if (slot.wcert) throw DuplicateWCertError(cert.ledger_id);
            slot.wcert = cert;
        }
        return ScCommitmentTree(std::move(by_ledger));
    }

    explicit ScCommitmentTree(std::map<Digest, ScBlockActivity> by_ledger)
        : activity_(std::move(by_ledger)) {
        entries_.emplace_back(sentinel_min_id(), null_leaf_digest());
        for (const auto& [id, act] : activity_) {
            if (id == sentinel_min_id() || id == sentinel_max_id())
                throw std::invalid_argument("ledger id collides with a sentinel");
            entries_.emplace_back(id, sc_subtree_root(act));
        }
        entries_.emplace_back(sentinel_max_id(), null_leaf_digest());
        std::vector<Digest> leaves;
        leaves.reserve(entries_.size());
        for (const auto& [id, sub] : entries_) leaves.push_back(sc_leaf_digest(id, sub));
        tree_.emplace(std::move(leaves));
    }

    Digest root() const { return tree_->root(); }

    const std::map<Digest, ScBlockActivity>& activity() const { return activity_; }

    std::optional<ScBlockActivity> activity_for(const Digest& ledger_id) const {
        auto it = activity_.find(ledger_id);
        if (it == activity_.end()) return std::nullopt;
        return it->second;
    }

    /// Membership proof for a sidechain's subtree root.
    MerkleProof prove_subtree(const Digest& ledger_id) const {
        for (size_t i = 0; i < entries_.size(); ++i)
            if (entries_[i].first == ledger_id) return tree_->prove(i);
        throw std::out_of_range("ledger id not committed in this block");
    }

    struct NeighborLeaf {
        Digest ledger_id;
        Digest subtree_root;
        MerkleProof proof;

        bool operator==(const NeighborLeaf&) const = default;

        void encode(Writer& w) const {
            w.digest(ledger_id);
            w.digest(subtree_root);
            w.u64(proof.leaf_index);
            w.list(proof.siblings, [](Writer& ww, const Digest& d) { ww.digest(d); });
        }

        static NeighborLeaf decode(Reader& r) {
            NeighborLeaf n;
            n.ledger_id = r.digest();
            n.subtree_root = r.digest();
            n.proof.leaf_index = r.u64();
            n.proof.siblings = r.list<Digest>([](Reader& rr) { return rr.digest(); });
            return n;
        }
    };

    /// Adjacent committed leaves bracketing an absent ledger id.
    struct AbsenceProof {
        NeighborLeaf left;
        NeighborLeaf right;

        bool operator==(const AbsenceProof&) const = default;

        void encode(Writer& w) const {
            left.encode(w);
            right.encode(w);
        }

        static AbsenceProof decode(Reader& r) {
            AbsenceProof a;
            a.left = NeighborLeaf::decode(r);
            a.right = NeighborLeaf::decode(r);
            return a;
        }
    };

    AbsenceProof prove_absence(const Digest& ledger_id) const {
        if (activity_.count(ledger_id))
            throw std::invalid_argument("ledger id is present in this block");
        size_t after = 1;
        while (after < entries_.size() && entries_[after].first < ledger_id) ++after;
        AbsenceProof a;
        a.left = NeighborLeaf{entries_[after - 1].first, entries_[after - 1].second,
                              tree_->prove(after - 1)};
        a.right = NeighborLeaf{entries_[after].first, entries_[after].second, tree_->prove(after)};
        return a;
    }

    static bool verify_absence(const Digest& root, const Digest& ledger_id,
                               const AbsenceProof& proof) {
        if (!(proof.left.ledger_id < ledger_id && ledger_id < proof.right.ledger_id)) return false;
        if (proof.right.proof.leaf_index != proof.left.proof.leaf_index + 1) return false;
        return mht_verify(root, sc_leaf_digest(proof.left.ledger_id, proof.left.subtree_root),
                          proof.left.proof) &&
               mht_verify(root, sc_leaf_digest(proof.right.ledger_id, proof.right.subtree_root),
                          proof.right.proof);
    }

private:
    std::map<Digest, ScBlockActivity> activity_;
    std::vector<std::pair<Digest, Digest>> entries_; // (ledger id, subtree root) incl. sentinels
    std::optional<MerkleTree> tree_;
};

/// Commitment digest for a block body; fixed value for a block with no
/// sidechain activity.
inline Digest build_sctx_commitment(const McBlock& block) {
    return ScCommitmentTree::from_block(block).root();
}

} // namespace zendoo
