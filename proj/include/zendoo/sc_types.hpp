#pragma once

#include <algorithm>
#include <cstdint>
#include <optional>
#include <set>
#include <variant>
#include <vector>

#include "zendoo/commitment.hpp"
#include "zendoo/mc_types.hpp"
#include "zendoo/signature.hpp"
#include "zendoo/utxo.hpp"

namespace zendoo {

// Sidechain transactions. Output UTXOs never carry explicit nonces on the
// wire; the nonce is derived from the transaction content and the output
// ordinal, so MST positions are fixed by the transaction itself.

struct ScOutput {
    Address addr;
    int64_t amount = 0;

    bool operator==(const ScOutput&) const = default;

    void encode(Writer& w) const {
        w.digest(addr);
        w.i64(amount);
    }

    static ScOutput decode(Reader& r) {
        ScOutput o;
        o.addr = r.digest();
        o.amount = r.i64();
        return o;
    }
};

inline Digest derive_output_nonce(const Digest& tx_core, uint32_t ordinal) {
    Writer w;
    w.digest(tx_core);
    w.u32(ordinal);
    return hash_tagged(HashTag::Nonce, w.data());
}

struct PaymentTx {
    std::vector<Utxo> inputs;
    std::vector<Signature> signatures; // parallel to inputs
    std::vector<ScOutput> outputs;

    bool operator==(const PaymentTx&) const = default;

    void encode(Writer& w, bool with_signatures = true) const {
        w.list(inputs, [](Writer& ww, const Utxo& u) { ww.raw(u.encode()); });
        if (with_signatures)
            w.list(signatures, [](Writer& ww, const Signature& s) { ww.digest(s); });
        w.list(outputs, [](Writer& ww, const ScOutput& o) { o.encode(ww); });
    }

    static PaymentTx decode(Reader& r) {
        PaymentTx tx;
        tx.inputs = r.list<Utxo>([](Reader& rr) { return Utxo::decode(rr); });
        tx.signatures = r.list<Signature>([](Reader& rr) { return rr.digest(); });
        tx.outputs = r.list<ScOutput>([](Reader& rr) { return ScOutput::decode(rr); });
        return tx;
    }

    /// Signed by every input owner; also the nonce base for outputs.
    Digest sighash() const {
        Writer w;
        encode(w, /*with_signatures=*/false);
        return hash_tagged(HashTag::Transaction, w.data());
    }

    Digest digest() const {
        Writer w;
        encode(w);
        return hash_tagged(HashTag::Transaction, w.data());
    }

    Utxo output_utxo(uint32_t i) const {
        return Utxo{outputs[i].addr, outputs[i].amount, derive_output_nonce(sighash(), i)};
    }
};

/// Syncs one referenced MC block's forward transfers into the sidechain.
/// outputs/rejected are derived from (mcid, fts) and the pre-state; carrying
/// them on the wire lets validators compare against their own derivation.
struct FtTx {
    Digest mcid; // hash of the referenced MC block
    std::vector<ForwardTransfer> fts;
    std::vector<Utxo> outputs;
    std::vector<BackwardTransfer> rejected; // refunds for failed FTs

    bool operator==(const FtTx&) const = default;

    void encode(Writer& w, bool with_derived = true) const {
        w.digest(mcid);
        w.list(fts, [](Writer& ww, const ForwardTransfer& ft) { ft.encode(ww); });
        if (with_derived) {
            w.list(outputs, [](Writer& ww, const Utxo& u) { ww.raw(u.encode()); });
            w.list(rejected, [](Writer& ww, const BackwardTransfer& bt) { bt.encode(ww); });
        }
    }

    static FtTx decode(Reader& r) {
        FtTx tx;
        tx.mcid = r.digest();
        tx.fts = r.list<ForwardTransfer>([](Reader& rr) { return ForwardTransfer::decode(rr); });
        tx.outputs = r.list<Utxo>([](Reader& rr) { return Utxo::decode(rr); });
        tx.rejected =
            r.list<BackwardTransfer>([](Reader& rr) { return BackwardTransfer::decode(rr); });
        return tx;
    }

    /// Nonce base: the underived part only, so outputs can be derived from it.
    Digest core_digest() const {
        Writer w;
        encode(w, /*with_derived=*/false);
        return hash_tagged(HashTag::Transaction, w.data());
    }

    Digest digest() const {
        Writer w;
        encode(w);
        return hash_tagged(HashTag::Transaction, w.data());
    }
};

/// receiverMetadata layout for Latus-bound forward transfers:
/// receiverAddr (32 bytes) || paybackAddr (32 bytes), exactly 64 bytes.
struct FtMetadata {
    Address receiver;
    Address payback;
    bool well_formed = false;
};

inline FtMetadata parse_ft_metadata(const std::vector<uint8_t>& meta) {
    FtMetadata m;
    if (meta.size() >= 32) std::copy(meta.begin(), meta.begin() + 32, m.receiver.bytes.begin());
    if (meta.size() >= 64) std::copy(meta.begin() + 32, meta.begin() + 64, m.payback.bytes.begin());
    m.well_formed = meta.size() == 64;
    // refunds for malformed-but-refundable metadata go to the payback slot
    // when it exists, otherwise burn to the zero address
    return m;
}

inline std::vector<uint8_t> make_ft_metadata(const Address& receiver, const Address& payback) {
    std::vector<uint8_t> meta(64);
    std::copy(receiver.bytes.begin(), receiver.bytes.end(), meta.begin());
    std::copy(payback.bytes.begin(), payback.bytes.end(), meta.begin() + 32);
    return meta;
}

struct BtTx {
    std::vector<Utxo> inputs;
    std::vector<Signature> signatures;
    std::vector<BackwardTransfer> backward_transfers;

    bool operator==(const BtTx&) const = default;

    void encode(Writer& w, bool with_signatures = true) const {
        w.list(inputs, [](Writer& ww, const Utxo& u) { ww.raw(u.encode()); });
        if (with_signatures)
            w.list(signatures, [](Writer& ww, const Signature& s) { ww.digest(s); });
        w.list(backward_transfers,
               [](Writer& ww, const BackwardTransfer& bt) { bt.encode(ww); });
    }

    static BtTx decode(Reader& r) {
        BtTx tx;
        tx.inputs = r.list<Utxo>([](Reader& rr) { return Utxo::decode(rr); });
        tx.signatures = r.list<Signature>([](Reader& rr) { return rr.digest(); });
        tx.backward_transfers =
            r.list<BackwardTransfer>([](Reader& rr) { return BackwardTransfer::decode(rr); });
        return tx;
    }

    Digest sighash() const {
        Writer w;
        encode(w, /*with_signatures=*/false);
        return hash_tagged(HashTag::Transaction, w.data());
    }

    Digest digest() const {
        Writer w;
        encode(w);
        return hash_tagged(HashTag::Transaction, w.data());
    }
};

/// Syncs one referenced MC block's backward transfer requests. BTRs whose
/// committed UTXO is gone are skipped (no state effect); honored ones move
/// the UTXO to inputs and append a backward transfer.
struct BtrTx {
    Digest mcid;
    std::vector<BtrRequest> btrs;
    std::vector<Utxo> inputs;                         // derived
    std::vector<BackwardTransfer> backward_transfers; // derived

    bool operator==(const BtrTx&) const = default;

    void encode(Writer& w) const {
        w.digest(mcid);
        w.list(btrs, [](Writer& ww, const BtrRequest& b) { b.encode(ww); });
        w.list(inputs, [](Writer& ww, const Utxo& u) { ww.raw(u.encode()); });
        w.list(backward_transfers,
               [](Writer& ww, const BackwardTransfer& bt) { bt.encode(ww); });
    }

    static BtrTx decode(Reader& r) {
        BtrTx tx;
        tx.mcid = r.digest();
        tx.btrs = r.list<BtrRequest>([](Reader& rr) { return BtrRequest::decode(rr); });
        tx.inputs = r.list<Utxo>([](Reader& rr) { return Utxo::decode(rr); });
        tx.backward_transfers =
            r.list<BackwardTransfer>([](Reader& rr) { return BackwardTransfer::decode(rr); });
        return tx;
    }

    Digest digest() const {
        Writer w;
        encode(w);
        return hash_tagged(HashTag::Transaction, w.data());
    }
};

using ScTransaction = std::variant<PaymentTx, BtTx, FtTx, BtrTx>;

inline void encode_sc_transaction(Writer& w, const ScTransaction& tx) {
    w.u8(static_cast<uint8_t>(tx.index()));
    std::visit([&](const auto& t) { t.encode(w); }, tx);
}

inline ScTransaction decode_sc_transaction(Reader& r) {
    switch (r.u8()) {
        case 0: return PaymentTx::decode(r);
        case 1: return BtTx::decode(r);
        case 2: return FtTx::decode(r);
        case 3: return BtrTx::decode(r);
        default: throw DecodeError("ScTransaction: unknown variant tag");
    }
}

inline Digest sc_transaction_digest(const ScTransaction& tx) {
    return std::visit([](const auto& t) { return t.digest(); }, tx);
}

/// One referenced MC block, as seen by the sidechain: the header plus either
/// a membership proof with the synced activity or a proof that the block
/// carries nothing for this ledger.
struct McBlockReference {
    McBlockHeader header;
    std::optional<MerkleProof> mproof;
    std::optional<ScCommitmentTree::AbsenceProof> proof_of_no_data;
    std::optional<FtTx> forward_transfers;
    std::optional<BtrTx> bt_requests;
    std::optional<WithdrawalCertificate> wcert;

    bool operator==(const McBlockReference&) const = default;

    void encode(Writer& w) const {
        header.encode(w);
        w.u8(mproof ? 1 : 0);
        if (mproof) {
            w.u64(mproof->leaf_index);
            w.list(mproof->siblings, [](Writer& ww, const Digest& d) { ww.digest(d); });
        }
        w.u8(proof_of_no_data ? 1 : 0);
        if (proof_of_no_data) proof_of_no_data->encode(w);
        w.u8(forward_transfers ? 1 : 0);
        if (forward_transfers) forward_transfers->encode(w);
        w.u8(bt_requests ? 1 : 0);
        if (bt_requests) bt_requests->encode(w);
        w.u8(wcert ? 1 : 0);
        if (wcert) wcert->encode(w);
    }

    static McBlockReference decode(Reader& r) {
        McBlockReference ref;
        ref.header = McBlockHeader::decode(r);
        if (r.boolean()) {
            MerkleProof p;
            p.leaf_index = r.u64();
            p.siblings = r.list<Digest>([](Reader& rr) { return rr.digest(); });
            ref.mproof = std::move(p);
        }
        if (r.boolean()) ref.proof_of_no_data = ScCommitmentTree::AbsenceProof::decode(r);
        if (r.boolean()) ref.forward_transfers = FtTx::decode(r);
        if (r.boolean()) ref.bt_requests = BtrTx::decode(r);
        if (r.boolean()) ref.wcert = WithdrawalCertificate::decode(r);
        return ref;
    }

    bool has_activity() const { return forward_transfers || bt_requests || wcert; }
};

/// A Latus BTR carries the claimed UTXO as a single bytes proofdata field.
inline std::optional<Utxo> btr_claimed_utxo(const BtrRequest& btr) {
    if (btr.proofdata.size() != 1) return std::nullopt;
    const auto* bytes = std::get_if<std::vector<uint8_t>>(&btr.proofdata[0]);
    if (!bytes) return std::nullopt;
    try {
        Reader r(*bytes);
        Utxo u = Utxo::decode(r);
        r.expect_done();
        return u;
    } catch (const DecodeError&) {
        return std::nullopt;
    }
}

/// Derived FT outputs/refunds are a function of (core digest, fts) up to the
/// state-dependent honored/skipped choice; check everything but that choice.
inline bool fttx_well_derived(const FtTx& tx) {
    Digest core = tx.core_digest();
    size_t oi = 0, ri = 0;
    for (uint32_t i = 0; i < tx.fts.size(); ++i) {
        const ForwardTransfer& ft = tx.fts[i];
        FtMetadata meta = parse_ft_metadata(ft.receiver_metadata);
        if (meta.well_formed) {
            Utxo cand{meta.receiver, ft.amount, derive_output_nonce(core, i)};
            if (oi < tx.outputs.size() && tx.outputs[oi] == cand) {
                ++oi;
                continue;
            }
        }
        BackwardTransfer refund{meta.payback, ft.amount};
        if (ri < tx.rejected.size() && tx.rejected[ri] == refund) {
            ++ri;
            continue;
        }
        return false;
    }
    return oi == tx.outputs.size() && ri == tx.rejected.size();
}

/// Same idea for BTR syncs: every honored entry must be the exact UTXO its
/// request commits to; only the honored/skipped choice needs state.
inline bool btrtx_well_derived(const BtrTx& tx) {
    if (tx.backward_transfers.size() != tx.inputs.size()) return false;
    size_t ii = 0;
    std::set<Utxo> seen;
    for (const BtrRequest& btr : tx.btrs) {
        if (ii >= tx.inputs.size()) break;
        std::optional<Utxo> claimed = btr_claimed_utxo(btr);
        if (!claimed || btr.nullifier != claimed->nullifier() || btr.amount != claimed->amount)
            continue;
        if (tx.inputs[ii] != *claimed || seen.count(*claimed)) continue;
        if (!(tx.backward_transfers[ii] == BackwardTransfer{btr.receiver, btr.amount}))
            return false;
        seen.insert(*claimed);
        ++ii;
    }
    return ii == tx.inputs.size();
}

/// Commitment-level check: exactly one of {mproof, proofOfNoData}, the
/// carried activity (or its absence) opens against header.sc_txs_commitment,
/// and derived fields are consistent with their requests. Only the
/// honored/skipped choice is deferred to apply time (it needs the pre-state).
inline bool verify_mc_reference(const McBlockReference& ref, const Digest& ledger_id) {
    if (ref.mproof.has_value() == ref.proof_of_no_data.has_value()) return false;
    Digest block_hash = ref.header.hash();
    if (ref.proof_of_no_data) {
        if (ref.has_activity()) return false;
        return ScCommitmentTree::verify_absence(ref.header.sc_txs_commitment, ledger_id,
                                                *ref.proof_of_no_data);
    }
    if (!ref.has_activity()) return false;
    if (ref.mproof->siblings.size() >= 64 ||
        (ref.mproof->leaf_index >> ref.mproof->siblings.size()) != 0)
        return false;
    if (ref.forward_transfers &&
        (ref.forward_transfers->mcid != block_hash || ref.forward_transfers->fts.empty() ||
         !fttx_well_derived(*ref.forward_transfers)))
        return false;
    if (ref.bt_requests && (ref.bt_requests->mcid != block_hash ||
                            ref.bt_requests->btrs.empty() ||
                            !btrtx_well_derived(*ref.bt_requests)))
        return false;
    if (ref.wcert && ref.wcert->ledger_id != ledger_id) return false;
    ScBlockActivity activity;
    if (ref.forward_transfers) activity.fts = ref.forward_transfers->fts;
    if (ref.bt_requests) activity.btrs = ref.bt_requests->btrs;
    if (ref.wcert) activity.wcert = ref.wcert;
    Digest leaf = sc_leaf_digest(ledger_id, sc_subtree_root(activity));
    return mht_verify(ref.header.sc_txs_commitment, leaf, *ref.mproof);
}

struct ScBlock {
    Digest parent;
    uint64_t height = 0;
    uint64_t epoch = 0; // consensus epoch = slot / slots_per_epoch
    uint64_t slot = 0;  // global, strictly increasing along a chain
    Address forger;
    std::vector<McBlockReference> mc_refs;
    std::vector<ScTransaction> txs;
    Signature forger_signature;

    bool operator==(const ScBlock&) const = default;

    void encode(Writer& w, bool with_signature = true) const {
        w.digest(parent);
        w.u64(height);
        w.u64(epoch);
        w.u64(slot);
        w.digest(forger);
        w.list(mc_refs, [](Writer& ww, const McBlockReference& r) { r.encode(ww); });
        w.u32(static_cast<uint32_t>(txs.size()));
        for (const ScTransaction& tx : txs) encode_sc_transaction(w, tx);
        if (with_signature) w.digest(forger_signature);
    }

    static ScBlock decode(Reader& r) {
        ScBlock b;
        b.parent = r.digest();
        b.height = r.u64();
        b.epoch = r.u64();
        b.slot = r.u64();
        b.forger = r.digest();
        b.mc_refs = r.list<McBlockReference>([](Reader& rr) { return McBlockReference::decode(rr); });
        uint32_t n = r.u32();
        for (uint32_t i = 0; i < n; ++i) b.txs.push_back(decode_sc_transaction(r));
        b.forger_signature = r.digest();
        return b;
    }

    Digest sighash() const {
        Writer w;
        encode(w, /*with_signature=*/false);
        return hash_tagged(HashTag::Block, w.data());
    }

    Digest hash() const {
        Writer w;
        encode(w);
        return hash_tagged(HashTag::Block, w.data());
    }
};

} // namespace zendoo
