#pragma once

#include <optional>
#include <stdexcept>
#include <vector>

#include "zendoo/latus.hpp"
#include "zendoo/mainchain.hpp"

namespace zendoo {

// Recursive state-transition proofs over the transparent backend. A Base
// proof attests one transaction's effect on the sidechain state; Merge
// combines two adjacent proofs; a block proof folds a block's transactions
// and additionally re-checks the carried MC references; the epoch proof is a
// fold of block proofs and feeds the withdrawal-certificate statement.

struct TransitionProof {
    StatementKind kind = StatementKind::Merge;
    Digest from; // digest of the state before
    Digest to;   // digest of the state after
    StatementProof proof;

    bool operator==(const TransitionProof&) const = default;

    void encode(Writer& w) const {
        w.u8(static_cast<uint8_t>(kind));
        w.digest(from);
        w.digest(to);
        proof.encode(w);
    }

    static TransitionProof decode(Reader& r) {
        TransitionProof t;
        t.kind = static_cast<StatementKind>(r.u8());
        t.from = r.digest();
        t.to = r.digest();
        t.proof = StatementProof::decode(r);
        return t;
    }

    PublicInput public_input() const { return PublicInput{{from, to}}; }
};

/// Transition statements share one key family per deployment seed; the
/// MC-facing statements are additionally separated per ledger so one
/// sidechain's certificates never verify under another's key.
struct ProverKeys {
    KeyPair base_payment, base_forward, base_backward, base_btr_sync, base_block, merge;
    KeyPair wcert, btr, csw;

    static ProverKeys make(const Digest& seed, const Digest& ledger_id) {
        Writer w;
        w.digest(seed);
        w.digest(ledger_id);
        Digest ledger_seed = hash_bytes(w.data());
        ProverKeys k;
        k.base_payment = ProofSystem::setup(StatementKind::BasePayment, seed);
        k.base_forward = ProofSystem::setup(StatementKind::BaseForward, seed);
        k.base_backward = ProofSystem::setup(StatementKind::BaseBackward, seed);
        k.base_btr_sync = ProofSystem::setup(StatementKind::BaseBtrSync, seed);
        k.base_block = ProofSystem::setup(StatementKind::BaseBlock, seed);
        k.merge = ProofSystem::setup(StatementKind::Merge, seed);
        k.wcert = ProofSystem::setup(StatementKind::WCert, ledger_seed);
        k.btr = ProofSystem::setup(StatementKind::Btr, ledger_seed);
        k.csw = ProofSystem::setup(StatementKind::Csw, ledger_seed);
        return k;
    }

    const VerifyingKey& vk_of(StatementKind k) const {
        switch (k) {
            case StatementKind::BasePayment: return base_payment.vk;
            case StatementKind::BaseForward: return base_forward.vk;
            case StatementKind::BaseBackward: return base_backward.vk;
            case StatementKind::BaseBtrSync: return base_btr_sync.vk;
            case StatementKind::BaseBlock: return base_block.vk;
            case StatementKind::Merge: return merge.vk;
            case StatementKind::WCert: return wcert.vk;
            case StatementKind::Btr: return btr.vk;
            case StatementKind::Csw: return csw.vk;
        }
        throw ProofError("vk_of: unknown statement kind");
    }

    const ProvingKey& pk_of(StatementKind k) const {
        switch (k) {
            case StatementKind::BasePayment: return base_payment.pk;
            case StatementKind::BaseForward: return base_forward.pk;
            case StatementKind::BaseBackward: return base_backward.pk;
            case StatementKind::BaseBtrSync: return base_btr_sync.pk;
            case StatementKind::BaseBlock: return base_block.pk;
            case StatementKind::Merge: return merge.pk;
            case StatementKind::WCert: return wcert.pk;
            case StatementKind::Btr: return btr.pk;
            case StatementKind::Csw: return csw.pk;
        }
        throw ProofError("pk_of: unknown statement kind");
    }
};

namespace detail {

inline void encode_state_and_tx(Writer& w, const ScState& state, const ScTransaction& tx) {
    state.encode(w);
    encode_sc_transaction(w, tx);
}

inline ScState apply_sc_transaction(ScState state, const ScTransaction& tx,
                                    const KeyRegistry& keys) {
    if (const auto* p = std::get_if<PaymentTx>(&tx)) return apply_payment(std::move(state), *p, keys);
    if (const auto* b = std::get_if<BtTx>(&tx)) return apply_bttx(std::move(state), *b, keys);
    if (const auto* f = std::get_if<FtTx>(&tx)) return apply_fttx(std::move(state), *f);
    return apply_btrtx(std::move(state), std::get<BtrTx>(tx));
}

inline StatementKind base_kind_of(const ScTransaction& tx) {
    switch (tx.index()) {
        case 0: return StatementKind::BasePayment;
        case 1: return StatementKind::BaseBackward;
        case 2: return StatementKind::BaseForward;
        default: return StatementKind::BaseBtrSync;
    }
}

} // namespace detail

/// Builds and checks transition proofs for one sidechain. All provers sharing
/// a ProofSystem must use the same deployment seed; statement predicates are
/// registered once and recurse through the shared key family.
class TransitionProver {
public:
    TransitionProver(ProofSystem& sys, const KeyRegistry& keys, const Digest& ledger_id,
                     const Digest& seed)
        : sys_(&sys), keys_(&keys), ledger_id_(ledger_id),
          pkeys_(ProverKeys::make(seed, ledger_id)) {
        register_predicates(sys, keys, seed);
    }

    const ProverKeys& pkeys() const { return pkeys_; }

    bool verify_transition(const TransitionProof& p) const {
        return sys_->verify(pkeys_.vk_of(p.kind), p.public_input(), p.proof);
    }

    TransitionProof prove_base(const ScTransaction& tx, const ScState& before) const {
        StatementKind kind = detail::base_kind_of(tx);
        ScState after = [&] {
            try {
                return detail::apply_sc_transaction(before, tx, *keys_);
            } catch (const std::exception& e) {
                throw UnsatisfiedError(std::string("prove_base: ") + e.what());
            }
        }();
        TransitionProof t;
        t.kind = kind;
        t.from = before.digest();
        t.to = after.digest();
        Writer w;
        detail::encode_state_and_tx(w, before, tx);
        t.proof = sys_->prove(pkeys_.pk_of(kind), t.public_input(), Witness{w.take()});
        return t;
    }

    TransitionProof prove_merge(const TransitionProof& left, const TransitionProof& right) const {
        if (left.to != right.from)
            throw UnsatisfiedError("prove_merge: transitions are not adjacent");
        TransitionProof t;
        t.kind = StatementKind::Merge;
        t.from = left.from;
        t.to = right.to;
        Writer w;
        w.digest(left.to);
        left.encode(w);
        right.encode(w);
        t.proof = sys_->prove(pkeys_.merge.pk, t.public_input(), Witness{w.take()});
        return t;
    }

    /// Balanced pairwise fold; association only affects the tree shape,
    /// never the endpoints.
    TransitionProof fold_merge(std::vector<TransitionProof> ps) const {
        if (ps.empty()) throw UnsatisfiedError("fold_merge: nothing to fold");
        while (ps.size() > 1) {
            std::vector<TransitionProof> next;
            for (size_t i = 0; i + 1 < ps.size(); i += 2) next.push_back(prove_merge(ps[i], ps[i + 1]));
            if (ps.size() % 2) next.push_back(ps.back());
            ps = std::move(next);
        }
        return ps[0];
    }

    /// Proof that `block` moves the chain from the parent snapshot's state to
    /// its own post-state; covers MC reference validity and contiguity plus a
    /// fold of per-transaction proofs.
    TransitionProof prove_block(const ScChainEntry& parent, const ScBlock& block) const {
        ScState working = parent.state;
        bool reset = parent.completes_epoch.has_value();
        if (reset) working.reset_transients();
        for (const auto& ref : block.mc_refs) {
            if (ref.forward_transfers) working = apply_fttx(std::move(working), *ref.forward_transfers);
            if (ref.bt_requests) working = apply_btrtx(std::move(working), *ref.bt_requests);
        }
        std::optional<TransitionProof> tx_fold;
        if (!block.txs.empty()) {
            std::vector<TransitionProof> bases;
            ScState step = working;
            for (const auto& tx : block.txs) {
                bases.push_back(prove_base(tx, step));
                step = detail::apply_sc_transaction(std::move(step), tx, *keys_);
            }
            tx_fold = fold_merge(std::move(bases));
        }

        TransitionProof t;
        t.kind = StatementKind::BaseBlock;
        t.from = parent.state.digest();
        t.to = tx_fold ? tx_fold->to : working.digest();
        Writer w;
        parent.state.encode(w);
        w.u8(reset ? 1 : 0);
        w.u64(parent.last_mc_ref_height);
        w.digest(parent.last_mc_ref_hash);
        w.digest(ledger_id_);
        block.encode(w);
        w.u8(tx_fold ? 1 : 0);
        if (tx_fold) tx_fold->encode(w);
        t.proof = sys_->prove(pkeys_.base_block.pk, t.public_input(), Witness{w.take()});
        return t;
    }

    /// Fold of block proofs across withdrawal epoch `epoch` on the node's
    /// active chain: from the state after the previous epoch's closing block
    /// to the state after this epoch's closing block.
    TransitionProof prove_epoch(const LatusNode& node, uint64_t epoch) const {
        auto blocks = node.epoch_blocks(epoch);
        if (blocks.empty()) throw UnsatisfiedError("prove_epoch: epoch not closed on this chain");
        std::vector<TransitionProof> parts;
        parts.reserve(blocks.size());
        for (const ScChainEntry* e : blocks) {
            const ScChainEntry* parent = node.entry(e->block.parent);
            parts.push_back(prove_block(*parent, e->block));
        }
        return fold_merge(std::move(parts));
    }

    /// Assemble the certificate for a closed withdrawal epoch, proving the
    /// epoch transition under the MC's certificate statement.
    WithdrawalCertificate generate_wcert(const LatusNode& node, const McChainState& mc,
                                         uint64_t epoch) const {
        auto sum = node.epoch_summary(epoch);
        if (!sum) throw UnsatisfiedError("generate_wcert: epoch not closed on this chain");
        TransitionProof epoch_proof = prove_epoch(node, epoch);

        WithdrawalCertificate cert;
        cert.ledger_id = node.config().ledger_id;
        cert.epoch_id = epoch;
        cert.quality = sum->quality;
        cert.bt_list = sum->bt_list;
        cert.proofdata = {sum->sc_last_hash, sum->mst_root, sum->mst_delta};

        const ScChainEntry* last = node.entry(sum->sc_last_hash);
        Writer w;
        epoch_proof.encode(w);
        sum->end_state.encode(w);
        last->block.encode(w);
        w.u64(last->block.height);
        const ScChainEntry* prev = find_prev_closing(node, *last);
        w.u8(prev ? 1 : 0);
        if (prev) {
            prev->state.encode(w);
            prev->block.encode(w);
        }
        PublicInput input = mc.state().wcert_public_input(node.config(), cert);
        cert.proof = sys_->prove(pkeys_.wcert.pk, input, Witness{w.take()});
        return cert;
    }

    /// Withdrawal request against the last certified state, or an older
    /// certified state plus the chain of later certificates whose deltas show
    /// the slot untouched. `later_certs` are the certificates for epochs
    /// anchor+1 .. w in order; `terminal_block` is the MC block carrying the
    /// newest certificate (B_w).
    WithdrawalRequest build_withdrawal_proof(
        StatementKind kind, const Utxo& utxo, const Secret& owner, const Address& receiver,
        const WithdrawalCertificate& anchor_cert, const MerkleProof& anchor_inclusion,
        const std::vector<WithdrawalCertificate>& later_certs,
        const McBlock& terminal_block) const {
        if (kind != StatementKind::Btr && kind != StatementKind::Csw)
            throw ProofError("build_withdrawal_proof: not a withdrawal statement");
        WithdrawalRequest req;
        req.ledger_id = anchor_cert.ledger_id;
        req.receiver = receiver;
        req.amount = utxo.amount;
        req.nullifier = utxo.nullifier();
        req.proofdata = {utxo.encode()};

        Writer w;
        w.raw(utxo.encode());
        w.digest(owner);
        w.u64(anchor_inclusion.leaf_index);
        w.list(anchor_inclusion.siblings, [](Writer& ww, const Digest& d) { ww.digest(d); });
        anchor_cert.encode(w);
        w.u32(static_cast<uint32_t>(later_certs.size()));
        for (const auto& c : later_certs) c.encode(w);
        terminal_block.encode(w);

        PublicInput input =
            McDerivedState::withdrawal_public_input(terminal_block.hash(), req);
        req.proof = sys_->prove(pkeys_.pk_of(kind), input, Witness{w.take()});
        return req;
    }

    BtrRequest build_btr_proof(const Utxo& utxo, const Secret& owner, const Address& receiver,
                               const WithdrawalCertificate& anchor_cert,
                               const MerkleProof& anchor_inclusion,
                               const std::vector<WithdrawalCertificate>& later_certs,
                               const McBlock& terminal_block) const {
        return build_withdrawal_proof(StatementKind::Btr, utxo, owner, receiver, anchor_cert,
                                      anchor_inclusion, later_certs, terminal_block);
    }

    CswRequest build_csw_proof(const Utxo& utxo, const Secret& owner, const Address& receiver,
                               const WithdrawalCertificate& anchor_cert,
                               const MerkleProof& anchor_inclusion,
                               const std::vector<WithdrawalCertificate>& later_certs,
                               const McBlock& terminal_block) const {
        return build_withdrawal_proof(StatementKind::Csw, utxo, owner, receiver, anchor_cert,
                                      anchor_inclusion, later_certs, terminal_block);
    }

private:
    static const ScChainEntry* find_prev_closing(const LatusNode& node,
                                                 const ScChainEntry& last) {
        const ScChainEntry* cur = &last;
        while (cur->block.height > 0) {
            cur = node.entry(cur->block.parent);
            if (cur->completes_epoch) return cur;
        }
        return nullptr;
    }

    // --- predicates --------------------------------------------------------

    static void register_predicates(ProofSystem& sys, const KeyRegistry& keys,
                                    const Digest& seed) {
        if (sys.has_predicate(StatementKind::BasePayment)) return; // already wired
        const KeyRegistry* kr = &keys;
        // recursion always resolves sub-proof keys from the shared seed
        ProverKeys shared = ProverKeys::make(seed, Digest{});

        auto base_pred = [kr](const ProofSystem&, const PublicInput& in, const Witness& wit,
                              size_t expect_variant) {
            if (in.fields.size() != 2) return false;
            const auto* from = std::get_if<Digest>(&in.fields[0]);
            const auto* to = std::get_if<Digest>(&in.fields[1]);
            if (!from || !to) return false;
            Reader r(wit.bytes);
            ScState before = ScState::decode(r);
            ScTransaction tx = decode_sc_transaction(r);
            r.expect_done();
            if (tx.index() != expect_variant) return false;
            if (before.digest() != *from) return false;
            ScState after = detail::apply_sc_transaction(std::move(before), tx, *kr);
            return after.digest() == *to;
        };
        sys.register_predicate(StatementKind::BasePayment,
                               [base_pred](const ProofSystem& s, const PublicInput& in,
                                           const Witness& w) { return base_pred(s, in, w, 0); });
        sys.register_predicate(StatementKind::BaseBackward,
                               [base_pred](const ProofSystem& s, const PublicInput& in,
                                           const Witness& w) { return base_pred(s, in, w, 1); });
        sys.register_predicate(StatementKind::BaseForward,
                               [base_pred](const ProofSystem& s, const PublicInput& in,
                                           const Witness& w) { return base_pred(s, in, w, 2); });
        sys.register_predicate(StatementKind::BaseBtrSync,
                               [base_pred](const ProofSystem& s, const PublicInput& in,
                                           const Witness& w) { return base_pred(s, in, w, 3); });

        auto verify_sub = [shared](const ProofSystem& s, const TransitionProof& p) {
            switch (p.kind) {
                case StatementKind::BasePayment:
                case StatementKind::BaseForward:
                case StatementKind::BaseBackward:
                case StatementKind::BaseBtrSync:
                case StatementKind::BaseBlock:
                case StatementKind::Merge:
                    return s.verify(shared.vk_of(p.kind), p.public_input(), p.proof);
                default: return false;
            }
        };

        sys.register_predicate(
            StatementKind::Merge,
            [verify_sub](const ProofSystem& s, const PublicInput& in, const Witness& wit) {
                if (in.fields.size() != 2) return false;
                const auto* from = std::get_if<Digest>(&in.fields[0]);
                const auto* to = std::get_if<Digest>(&in.fields[1]);
                if (!from || !to) return false;
                Reader r(wit.bytes);
                Digest mid = r.digest();
                TransitionProof left = TransitionProof::decode(r);
                TransitionProof right = TransitionProof::decode(r);
                r.expect_done();
                if (left.from != *from || left.to != mid || right.from != mid || right.to != *to)
                    return false;
                return verify_sub(s, left) && verify_sub(s, right);
            });

        sys.register_predicate(
            StatementKind::BaseBlock,
            [kr, verify_sub](const ProofSystem& s, const PublicInput& in, const Witness& wit) {
                if (in.fields.size() != 2) return false;
                const auto* from = std::get_if<Digest>(&in.fields[0]);
                const auto* to = std::get_if<Digest>(&in.fields[1]);
                if (!from || !to) return false;
                Reader r(wit.bytes);
                ScState before = ScState::decode(r);
                bool reset = r.boolean();
                uint64_t prev_height = r.u64();
                Digest prev_hash = r.digest();
                Digest ledger = r.digest();
                ScBlock block = ScBlock::decode(r);
                bool has_fold = r.boolean();
                std::optional<TransitionProof> fold;
                if (has_fold) fold = TransitionProof::decode(r);
                r.expect_done();

                if (before.digest() != *from) return false;
                if (!kr->verify(block.forger, block.sighash(), block.forger_signature))
                    return false;
                ScState working = before;
                if (reset) working.reset_transients();
                for (const auto& ref : block.mc_refs) {
                    if (ref.header.height != prev_height + 1) return false;
                    if (prev_hash != Digest{} && ref.header.prev_block != prev_hash) return false;
                    if (!verify_mc_reference(ref, ledger)) return false;
                    if (ref.forward_transfers)
                        working = apply_fttx(std::move(working), *ref.forward_transfers);
                    if (ref.bt_requests)
                        working = apply_btrtx(std::move(working), *ref.bt_requests);
                    prev_height = ref.header.height;
                    prev_hash = ref.header.hash();
                }
                if (block.txs.empty() != !fold.has_value()) return false;
                if (fold) {
                    if (fold->from != working.digest() || fold->to != *to) return false;
                    if (!verify_sub(s, *fold)) return false;
                }
                for (const auto& tx : block.txs)
                    working = detail::apply_sc_transaction(std::move(working), tx, *kr);
                return working.digest() == *to;
            });

        // Withdrawal certificate: (quality, MH(BTList), H(B_last^{i-1}),
        // H(B_last^i), MH(proofdata)) with proofdata (H(SB_last), MST root,
        // mst_delta).
        sys.register_predicate(
            StatementKind::WCert,
            [verify_sub](const ProofSystem& s, const PublicInput& in, const Witness& wit) {
                if (in.fields.size() != 5) return false;
                const auto* quality = std::get_if<uint64_t>(&in.fields[0]);
                const auto* bt_root = std::get_if<Digest>(&in.fields[1]);
                const auto* prev_mc = std::get_if<Digest>(&in.fields[2]);
                const auto* last_mc = std::get_if<Digest>(&in.fields[3]);
                const auto* pd_root = std::get_if<Digest>(&in.fields[4]);
                if (!quality || !bt_root || !prev_mc || !last_mc || !pd_root) return false;
                Reader r(wit.bytes);
                TransitionProof epoch_proof = TransitionProof::decode(r);
                ScState end_state = ScState::decode(r);
                ScBlock sb_last = ScBlock::decode(r);
                uint64_t height = r.u64();
                bool has_prev = r.boolean();
                std::optional<ScState> prev_state;
                std::optional<ScBlock> prev_block;
                if (has_prev) {
                    prev_state = ScState::decode(r);
                    prev_block = ScBlock::decode(r);
                }
                r.expect_done();

                if (*quality != height || sb_last.height != height) return false;
                if (bt_list_root(end_state.backward_transfers) != *bt_root) return false;
                std::vector<Field> pd{sb_last.hash(), end_state.mst.root(),
                                      end_state.epoch_delta};
                if (proofdata_root(pd) != *pd_root) return false;
                if (sb_last.mc_refs.empty() ||
                    sb_last.mc_refs.back().header.hash() != *last_mc)
                    return false;
                if (epoch_proof.to != end_state.digest()) return false;
                if (has_prev) {
                    if (epoch_proof.from != prev_state->digest()) return false;
                    if (prev_block->mc_refs.empty() ||
                        prev_block->mc_refs.back().header.hash() != *prev_mc)
                        return false;
                } else {
                    // first epoch starts from the empty state
                    if (epoch_proof.from != ScState(end_state.mst.depth()).digest())
                        return false;
                }
                return verify_sub(s, epoch_proof);
            });

        // BTR/CSW: (H(B_w), nullifier, receiver, amount, MH(proofdata)) with
        // proofdata = the claimed UTXO; the witness shows inclusion in an
        // anchor certificate's state plus untouched deltas up to B_w's
        // certificate (Appendix-style non-spend chain when anchors differ).
        auto withdrawal_pred = [](const ProofSystem&, const PublicInput& in,
                                  const Witness& wit) {
            if (in.fields.size() != 5) return false;
            const auto* bw_hash = std::get_if<Digest>(&in.fields[0]);
            const auto* nullifier = std::get_if<Digest>(&in.fields[1]);
            const auto* receiver = std::get_if<Digest>(&in.fields[2]);
            const auto* amount = std::get_if<uint64_t>(&in.fields[3]);
            const auto* pd_root = std::get_if<Digest>(&in.fields[4]);
            if (!bw_hash || !nullifier || !receiver || !amount || !pd_root) return false;
            (void)receiver; // any receiver the owner names is fine
            Reader r(wit.bytes);
            Utxo utxo = Utxo::decode(r);
            Secret owner = r.digest();
            MerkleProof inclusion;
            inclusion.leaf_index = r.u64();
            inclusion.siblings = r.list<Digest>([](Reader& rr) { return rr.digest(); });
            WithdrawalCertificate anchor = WithdrawalCertificate::decode(r);
            uint32_t n_later = r.u32();
            std::vector<WithdrawalCertificate> later;
            for (uint32_t i = 0; i < n_later; ++i)
                later.push_back(WithdrawalCertificate::decode(r));
            McBlock terminal = McBlock::decode(r);
            r.expect_done();

            if (utxo.nullifier() != *nullifier) return false;
            if (static_cast<uint64_t>(utxo.amount) != *amount) return false;
            if (address_of(owner) != utxo.addr) return false;
            if (proofdata_root({Field{utxo.encode()}}) != *pd_root) return false;

            auto cert_fields = [](const WithdrawalCertificate& c)
                -> std::optional<std::pair<Digest, MstDelta>> {
                if (c.proofdata.size() != 3) return std::nullopt;
                const auto* root = std::get_if<Digest>(&c.proofdata[1]);
                const auto* delta = std::get_if<MstDelta>(&c.proofdata[2]);
                if (!root || !delta) return std::nullopt;
                return std::make_pair(*root, *delta);
            };
            auto anchor_f = cert_fields(anchor);
            if (!anchor_f) return false;
            if (mst_position(utxo, static_cast<uint32_t>(inclusion.siblings.size())) !=
                inclusion.leaf_index)
                return false;

            uint64_t epoch = anchor.epoch_id;
            std::vector<MstDelta> deltas;
            for (const auto& c : later) {
                if (c.ledger_id != anchor.ledger_id || c.epoch_id != epoch + 1) return false;
                auto f = cert_fields(c);
                if (!f) return false;
                deltas.push_back(f->second);
                epoch = c.epoch_id;
            }
            if (!prove_unspent_since(utxo, anchor_f->first, inclusion, deltas)) return false;
            const WithdrawalCertificate& newest = later.empty() ? anchor : later.back();
            if (terminal.hash() != *bw_hash) return false;
            for (const auto& c : terminal.certs)
                if (c == newest) return true;
            return false;
        };
        sys.register_predicate(StatementKind::Btr, withdrawal_pred);
        sys.register_predicate(StatementKind::Csw, withdrawal_pred);
    }

    ProofSystem* sys_;
    const KeyRegistry* keys_;
    Digest ledger_id_;
    ProverKeys pkeys_;
};

} // namespace zendoo
