#pragma once

#include <algorithm>
#include <map>
#include <optional>
#include <set>
#include <stdexcept>
#include <vector>

#include "zendoo/mainchain.hpp"
#include "zendoo/sc_types.hpp"

namespace zendoo {

struct ScApplyError : std::runtime_error {
    explicit ScApplyError(const std::string& what) : std::runtime_error(what) {}
};

/// Sidechain system state: positional UTXO tree plus the per-withdrawal-epoch
/// transients (pending backward transfers and the touched-slot accumulator).
struct ScState {
    MerkleStateTree mst;
    std::vector<BackwardTransfer> backward_transfers;
    MstDelta epoch_delta;

    explicit ScState(uint32_t depth) : mst(depth), epoch_delta(uint64_t{1} << depth) {}

    bool operator==(const ScState& o) const {
        return mst.depth() == o.mst.depth() && mst.slots() == o.mst.slots() &&
               backward_transfers == o.backward_transfers && epoch_delta == o.epoch_delta;
    }

    void reset_transients() {
        backward_transfers.clear();
        epoch_delta = MstDelta(mst.slot_count());
    }

    /// Every insertion/removal marks its slot in the epoch accumulator, so
    /// transient spend-and-refill still shows up in the delta.
    void insert(const Utxo& u) {
        mst = mst.insert(u);
        epoch_delta.touch(mst.position_of(u));
    }

    void remove(const Utxo& u) {
        mst = mst.remove(u);
        epoch_delta.touch(mst.position_of(u));
    }

    int64_t total_value() const {
        int64_t sum = 0;
        for (const auto& [slot, u] : mst.slots()) sum += u.amount;
        for (const auto& bt : backward_transfers) sum += bt.amount;
        return sum;
    }

    void encode(Writer& w) const {
        w.u32(mst.depth());
        w.u32(static_cast<uint32_t>(mst.slots().size()));
        for (const auto& [slot, u] : mst.slots()) {
            w.u64(slot);
            w.raw(u.encode());
        }
        w.list(backward_transfers,
               [](Writer& ww, const BackwardTransfer& bt) { bt.encode(ww); });
        epoch_delta.encode(w);
    }

    static ScState decode(Reader& r) {
        uint32_t depth = r.u32();
        ScState s(depth);
        uint32_t n = r.u32();
        for (uint32_t i = 0; i < n; ++i) {
            uint64_t slot = r.u64();
            Utxo u = Utxo::decode(r);
            if (s.mst.position_of(u) != slot) throw DecodeError("ScState: slot mismatch");
            s.mst = s.mst.insert(u);
        }
        s.backward_transfers =
            r.list<BackwardTransfer>([](Reader& rr) { return BackwardTransfer::decode(rr); });
        s.epoch_delta = MstDelta::decode(r);
        if (s.epoch_delta.bits.size() != s.mst.slot_count())
            throw DecodeError("ScState: delta length mismatch");
        return s;
    }

    std::vector<uint8_t> encoded() const {
        Writer w;
        encode(w);
        return w.take();
    }

    Digest digest() const { return hash_tagged(HashTag::State, encoded()); }
};

// --- transaction update rules ---------------------------------------------

inline void check_signed_inputs(const std::vector<Utxo>& inputs,
                                const std::vector<Signature>& signatures, const Digest& sighash,
                                const KeyRegistry& keys) {
    if (inputs.empty()) throw ScApplyError("transaction has no inputs");
    if (signatures.size() != inputs.size())
        throw ScApplyError("signature count does not match inputs");
    std::set<Utxo> seen;
    for (size_t i = 0; i < inputs.size(); ++i) {
        if (!seen.insert(inputs[i]).second) throw ScApplyError("duplicate input");
        if (!keys.verify(inputs[i].addr, sighash, signatures[i]))
            throw ScApplyError("bad input signature");
    }
}

/// Two-phase update: remove every input, then insert every output in order.
inline ScState apply_payment(ScState state, const PaymentTx& tx, const KeyRegistry& keys) {
    check_signed_inputs(tx.inputs, tx.signatures, tx.sighash(), keys);
    int64_t in_sum = 0, out_sum = 0;
    for (const auto& u : tx.inputs) in_sum += u.amount;
    for (const auto& o : tx.outputs) out_sum += o.amount;
    if (in_sum < out_sum) throw ScApplyError("payment value imbalance");
    try {
        for (const auto& u : tx.inputs) state.remove(u);
        for (uint32_t i = 0; i < tx.outputs.size(); ++i) state.insert(tx.output_utxo(i));
    } catch (const NotFoundError&) {
        throw ScApplyError("payment input not in state tree");
    } catch (const CollisionError& e) {
        throw ScApplyError("payment output slot collision: " + std::to_string(e.slot));
    }
    return state;
}

/// Inputs leave the tree; the backward transfers wait for the next
/// certificate.
inline ScState apply_bttx(ScState state, const BtTx& tx, const KeyRegistry& keys) {
    check_signed_inputs(tx.inputs, tx.signatures, tx.sighash(), keys);
    int64_t in_sum = 0, out_sum = 0;
    for (const auto& u : tx.inputs) in_sum += u.amount;
    for (const auto& bt : tx.backward_transfers) {
        if (bt.amount < 1) throw ScApplyError("backward transfer amount must be >= 1");
        out_sum += bt.amount;
    }
    if (in_sum < out_sum) throw ScApplyError("backward transfer value imbalance");
    try {
        for (const auto& u : tx.inputs) state.remove(u);
    } catch (const NotFoundError&) {
        throw ScApplyError("backward transfer input not in state tree");
    }
    for (const auto& bt : tx.backward_transfers) state.backward_transfers.push_back(bt);
    return state;
}

/// Derive the sync transaction for one MC block's forward transfers: each
/// valid FT spawns one equal-amount output; malformed metadata or an occupied
/// target slot turns the FT into a refund toward its payback address.
inline FtTx build_fttx(const ScState& state, const Digest& mcid,
                       std::vector<ForwardTransfer> fts) {
    FtTx tx;
    tx.mcid = mcid;
    tx.fts = std::move(fts);
    Digest core = tx.core_digest();
    MerkleStateTree working = state.mst;
    for (uint32_t i = 0; i < tx.fts.size(); ++i) {
        const ForwardTransfer& ft = tx.fts[i];
        FtMetadata meta = parse_ft_metadata(ft.receiver_metadata);
        if (meta.well_formed) {
            Utxo out{meta.receiver, ft.amount, derive_output_nonce(core, i)};
            if (!working.at(working.position_of(out))) {
                working = working.insert(out);
                tx.outputs.push_back(out);
                continue;
            }
        }
        tx.rejected.push_back(BackwardTransfer{meta.payback, ft.amount});
    }
    return tx;
}

inline ScState apply_fttx(ScState state, const FtTx& tx) {
    FtTx expected = build_fttx(state, tx.mcid, tx.fts);
    if (expected != tx) throw ScApplyError("forward transfer sync does not match derivation");
    for (const auto& u : tx.outputs) state.insert(u);
    for (const auto& bt : tx.rejected) state.backward_transfers.push_back(bt);
    return state;
}

/// Honor each BTR whose claimed UTXO is still live and consistent; skip the
/// rest (e.g. the coins were spent in-sidechain before the request synced).
inline BtrTx build_btrtx(const ScState& state, const Digest& mcid,
                         std::vector<BtrRequest> btrs) {
    BtrTx tx;
    tx.mcid = mcid;
    tx.btrs = std::move(btrs);
    MerkleStateTree working = state.mst;
    for (const BtrRequest& btr : tx.btrs) {
        std::optional<Utxo> claimed = btr_claimed_utxo(btr);
        if (!claimed || !working.contains(*claimed)) continue;
        if (btr.nullifier != claimed->nullifier() || btr.amount != claimed->amount) continue;
        working = working.remove(*claimed);
        tx.inputs.push_back(*claimed);
        tx.backward_transfers.push_back(BackwardTransfer{btr.receiver, btr.amount});
    }
    return tx;
}

inline ScState apply_btrtx(ScState state, const BtrTx& tx) {
    BtrTx expected = build_btrtx(state, tx.mcid, tx.btrs);
    if (expected != tx) throw ScApplyError("BTR sync does not match derivation");
    for (const auto& u : tx.inputs) state.remove(u);
    for (const auto& bt : tx.backward_transfers) state.backward_transfers.push_back(bt);
    return state;
}

// --- slot leadership -------------------------------------------------------

struct StakeDistribution {
    std::map<Address, int64_t> stakes;

    int64_t total() const {
        int64_t sum = 0;
        for (const auto& [addr, s] : stakes) sum += s;
        return sum;
    }
};

/// Stake-proportional draw seeded by hash(rand || slot); a pure function of
/// its arguments.
inline Address leader_for_slot(const StakeDistribution& sd, const Digest& rand, uint64_t slot) {
    int64_t total = sd.total();
    if (total <= 0) throw std::invalid_argument("leader_for_slot: total stake must be > 0");
    Writer w;
    w.digest(rand);
    w.u64(slot);
    Digest h = hash_tagged(HashTag::LeaderSeed, w.data());
    uint64_t v = 0;
    for (int i = 0; i < 8; ++i) v = (v << 8) | h.bytes[i];
    int64_t ticket = static_cast<int64_t>(v % static_cast<uint64_t>(total));
    for (const auto& [addr, stake] : sd.stakes) {
        if (ticket < stake) return addr;
        ticket -= stake;
    }
    return sd.stakes.rbegin()->first; // unreachable
}

inline std::vector<Address> select_slot_leaders(const StakeDistribution& sd, const Digest& rand,
                                                uint64_t slots) {
    std::vector<Address> out;
    out.reserve(slots);
    for (uint64_t s = 0; s < slots; ++s) out.push_back(leader_for_slot(sd, rand, s));
    return out;
}

// --- the sidechain node ----------------------------------------------------

enum class ScReason {
    Ok = 0,
    UnknownParent,
    DuplicateBlock,
    BadHeight,
    BadEpoch,
    SlotNotIncreasing,
    WrongLeader,
    BadSignature,
    BadReference,
    UnknownMcBlock,
    NonContiguousRef,
    BoundaryViolation,
    BadTx,
    NotPreferred,
};

inline const char* to_string(ScReason r) {
    switch (r) {
        case ScReason::Ok: return "ok";
        case ScReason::UnknownParent: return "unknown-parent";
        case ScReason::DuplicateBlock: return "duplicate-block";
        case ScReason::BadHeight: return "bad-height";
        case ScReason::BadEpoch: return "bad-epoch";
        case ScReason::SlotNotIncreasing: return "slot-not-increasing";
        case ScReason::WrongLeader: return "wrong-leader";
        case ScReason::BadSignature: return "bad-signature";
        case ScReason::BadReference: return "bad-reference";
        case ScReason::UnknownMcBlock: return "unknown-mc-block";
        case ScReason::NonContiguousRef: return "non-contiguous-ref";
        case ScReason::BoundaryViolation: return "boundary-violation";
        case ScReason::BadTx: return "bad-tx";
        case ScReason::NotPreferred: return "not-preferred";
    }
    return "?";
}

struct ScOutcome {
    ScReason reason = ScReason::Ok;
    std::string detail;

    bool ok() const { return reason == ScReason::Ok; }
    static ScOutcome pass() { return {}; }
    static ScOutcome fail(ScReason r, std::string d = {}) { return ScOutcome{r, std::move(d)}; }
};

/// Snapshot of the chain after one SC block.
struct ScChainEntry {
    ScBlock block;
    ScState state; // post-state
    uint64_t last_mc_ref_height = 0;
    Digest last_mc_ref_hash;
    Digest rand;                            // leader seed of this block's consensus epoch
    std::optional<uint64_t> completes_epoch; // withdrawal epoch whose last MC block this references
    bool starts_new_withdrawal_epoch = false;
    uint64_t arrival = 0;
};

/// End-of-epoch material needed for a withdrawal certificate.
struct EpochSummary {
    uint64_t epoch = 0;
    Digest sc_last_hash; // H(SB_last of the epoch)
    uint64_t quality = 0; // chain height at SB_last
    std::vector<BackwardTransfer> bt_list;
    Digest mst_root;
    MstDelta mst_delta;
    ScState end_state; // state after SB_last (transients not yet reset)
    ScState start_state; // state after SB_last of the previous epoch (transients reset)
};

/// One sidechain node. Reads the MC node for referenced blocks and for fork
/// alignment; keeps per-block state snapshots so an MC reorg only moves the
/// preferred tip, never mutates history.
class LatusNode {
public:
    LatusNode(const McChainState& mc, SidechainConfig cfg, uint32_t mst_depth,
              StakeDistribution stakes, uint64_t slots_per_epoch, const KeyRegistry& keys)
        : mc_(&mc), cfg_(std::move(cfg)), depth_(mst_depth), stakes_(std::move(stakes)),
          slots_per_epoch_(slots_per_epoch), keys_(&keys) {
        if (slots_per_epoch_ < 1) throw std::invalid_argument("slots_per_epoch must be >= 1");
        if (stakes_.total() <= 0) throw std::invalid_argument("total stake must be > 0");
        ScChainEntry genesis{ScBlock{}, ScState(depth_), cfg_.start_block - 1, Digest{},
                             genesis_rand(), std::nullopt, false, arrival_counter_++};
        genesis_hash_ = genesis.block.hash();
        entries_.emplace(genesis_hash_, std::move(genesis));
        tip_ = genesis_hash_;
    }

    const SidechainConfig& config() const { return cfg_; }
    uint32_t mst_depth() const { return depth_; }
    const StakeDistribution& stakes() const { return stakes_; }
    uint64_t slots_per_epoch() const { return slots_per_epoch_; }
    const Digest& genesis_hash() const { return genesis_hash_; }
    const Digest& tip_hash() const { return tip_; }
    const ScChainEntry& tip() const { return entries_.at(tip_); }
    const ScState& tip_state() const { return tip().state; }

    const ScChainEntry* entry(const Digest& hash) const {
        auto it = entries_.find(hash);
        return it == entries_.end() ? nullptr : &it->second;
    }

    Digest rand_for_child(const ScChainEntry& parent, uint64_t child_epoch) const {
        if (child_epoch == parent.block.epoch && &parent != &entries_.at(genesis_hash_))
            return parent.rand;
        Writer w;
        w.digest(parent.block.hash());
        w.u64(child_epoch);
        return hash_tagged(HashTag::LeaderSeed, w.data());
    }

    /// Validate against the parent snapshot, store, and re-run fork choice.
    ScOutcome submit_block(const ScBlock& block) {
        Digest hash = block.hash();
        if (entries_.count(hash)) return ScOutcome::fail(ScReason::DuplicateBlock);
        auto pit = entries_.find(block.parent);
        if (pit == entries_.end()) return ScOutcome::fail(ScReason::UnknownParent);
        const ScChainEntry& parent = pit->second;

        ScChainEntry built{block, ScState(depth_), 0, {}, {}, std::nullopt, false, 0};
        ScOutcome o = validate_and_apply(parent, block, built);
        if (!o.ok()) return o;
        built.arrival = arrival_counter_++;
        entries_.emplace(hash, std::move(built));
        Digest prev_tip = tip_;
        refresh_tip();
        return tip_ == hash || tip_ != prev_tip ? ScOutcome::pass()
                                                : ScOutcome::fail(ScReason::NotPreferred);
    }

    /// Re-run fork choice after the MC view changed (e.g. a reorg). SC blocks
    /// referencing orphaned MC blocks lose alignment and are abandoned.
    void resync() { refresh_tip(); }

    /// True iff the entry's referenced MC chain lies on the MC's active branch.
    bool aligned(const ScChainEntry& e) const {
        if (e.block.height == 0) return true;
        const auto& hashes = mc_->state().chain_hashes();
        return e.last_mc_ref_height < hashes.size() &&
               hashes[e.last_mc_ref_height] == e.last_mc_ref_hash;
    }

    /// Walk the active SC chain for the block closing withdrawal epoch e and
    /// collect certificate material from its snapshot.
    std::optional<EpochSummary> epoch_summary(uint64_t epoch) const {
        const ScChainEntry* cur = &tip();
        while (true) {
            if (cur->completes_epoch && *cur->completes_epoch == epoch) break;
            if (cur->block.height == 0) return std::nullopt;
            cur = &entries_.at(cur->block.parent);
        }
        EpochSummary s{epoch,
                       cur->block.hash(),
                       cur->block.height,
                       cur->state.backward_transfers,
                       cur->state.mst.root(),
                       cur->state.epoch_delta,
                       cur->state,
                       ScState(depth_)};
        // start state: snapshot after the previous epoch's closing block,
        // with transients reset exactly as the next block would see them
        const ScChainEntry* prev = cur;
        do {
            if (prev->block.height == 0) {
                s.start_state = entries_.at(genesis_hash_).state;
                return s;
            }
            prev = &entries_.at(prev->block.parent);
        } while (!prev->completes_epoch);
        s.start_state = prev->state;
        s.start_state.reset_transients();
        return s;
    }

    /// The SC blocks of withdrawal epoch `epoch` on the active chain, oldest
    /// first (SB_0 .. SB_last).
    std::vector<const ScChainEntry*> epoch_blocks(uint64_t epoch) const {
        std::vector<const ScChainEntry*> out;
        const ScChainEntry* cur = &tip();
        // find the closing block
        while (!(cur->completes_epoch && *cur->completes_epoch == epoch)) {
            if (cur->block.height == 0) return {};
            cur = &entries_.at(cur->block.parent);
        }
        while (true) {
            out.push_back(cur);
            if (cur->starts_new_withdrawal_epoch) break; // first block of the epoch
            const ScChainEntry* p = &entries_.at(cur->block.parent);
            if (p->block.height == 0) break; // epoch 0 reaches back to genesis
            cur = p;
        }
        std::reverse(out.begin(), out.end());
        return out;
    }

    const std::map<Digest, ScChainEntry>& entries() const { return entries_; }

    /// Apply one block's references and transactions to a state copy.
    /// Used by validation here and re-used by the transition prover.
    ScState replay_block(const ScChainEntry& parent, const ScBlock& block) const {
        ScState state = parent.state;
        if (parent.completes_epoch) state.reset_transients();
        for (const auto& ref : block.mc_refs) {
            if (ref.forward_transfers) state = apply_fttx(std::move(state), *ref.forward_transfers);
            if (ref.bt_requests) state = apply_btrtx(std::move(state), *ref.bt_requests);
        }
        for (const auto& tx : block.txs) {
            if (const auto* p = std::get_if<PaymentTx>(&tx))
                state = apply_payment(std::move(state), *p, *keys_);
            else if (const auto* b = std::get_if<BtTx>(&tx))
                state = apply_bttx(std::move(state), *b, *keys_);
            else
                throw ScApplyError("sync transactions belong in MC references");
        }
        return state;
    }

    /// MC height of the last withdrawal-epoch boundary at or below `height`,
    /// as an epoch id; nullopt before the first boundary.
    std::optional<uint64_t> boundary_epoch_of(uint64_t mc_height) const {
        if (mc_height < cfg_.start_block) return std::nullopt;
        auto [e, idx] = epoch_of(cfg_, mc_height);
        if (idx == cfg_.epoch_len - 1) return e;
        return std::nullopt;
    }

private:
    Digest genesis_rand() const {
        Writer w;
        w.digest(cfg_.ledger_id);
        w.u64(0);
        return hash_tagged(HashTag::LeaderSeed, w.data());
    }

    ScOutcome validate_and_apply(const ScChainEntry& parent, const ScBlock& block,
                                 ScChainEntry& out) const {
        if (block.height != parent.block.height + 1) return ScOutcome::fail(ScReason::BadHeight);
        if (block.slot <= parent.block.slot && parent.block.height > 0)
            return ScOutcome::fail(ScReason::SlotNotIncreasing);
        if (block.epoch != block.slot / slots_per_epoch_)
            return ScOutcome::fail(ScReason::BadEpoch);
        Digest rand = rand_for_child(parent, block.epoch);
        if (block.forger != leader_for_slot(stakes_, rand, block.slot))
            return ScOutcome::fail(ScReason::WrongLeader);
        if (!keys_->verify(block.forger, block.sighash(), block.forger_signature))
            return ScOutcome::fail(ScReason::BadSignature);

        uint64_t ref_height = parent.last_mc_ref_height;
        Digest ref_hash = parent.last_mc_ref_hash;
        bool saw_boundary = false;
        for (const auto& ref : block.mc_refs) {
            if (saw_boundary) return ScOutcome::fail(ScReason::BoundaryViolation);
            if (ref.header.height != ref_height + 1)
                return ScOutcome::fail(ScReason::NonContiguousRef);
            if (ref_height >= cfg_.start_block && ref.header.prev_block != ref_hash)
                return ScOutcome::fail(ScReason::NonContiguousRef);
            const McBlock* mcb = mc_->block(ref.header.hash());
            if (!mcb || mcb->header != ref.header)
                return ScOutcome::fail(ScReason::UnknownMcBlock);
            if (!verify_mc_reference(ref, cfg_.ledger_id))
                return ScOutcome::fail(ScReason::BadReference);
            ref_height = ref.header.height;
            ref_hash = ref.header.hash();
            if (boundary_epoch_of(ref_height)) {
                saw_boundary = true;
                out.completes_epoch = boundary_epoch_of(ref_height);
            }
        }

        try {
            out.state = replay_block(parent, block);
        } catch (const ScApplyError& e) {
            return ScOutcome::fail(ScReason::BadTx, e.what());
        }
        out.last_mc_ref_height = ref_height;
        out.last_mc_ref_hash = ref_hash;
        out.rand = rand;
        out.starts_new_withdrawal_epoch = parent.completes_epoch.has_value();
        return ScOutcome::pass();
    }

    void refresh_tip() {
        const ScChainEntry* best = &entries_.at(genesis_hash_);
        Digest best_hash = genesis_hash_;
        for (const auto& [hash, e] : entries_) {
            auto better = [&]() {
                bool ea = aligned(e), ba = aligned(*best);
                if (ea != ba) return ea;
                if (e.block.height != best->block.height)
                    return e.block.height > best->block.height;
                return e.arrival < best->arrival;
            };
            if (better()) {
                best = &e;
                best_hash = hash;
            }
        }
        tip_ = best_hash;
    }

    const McChainState* mc_;
    SidechainConfig cfg_;
    uint32_t depth_;
    StakeDistribution stakes_;
    uint64_t slots_per_epoch_;
    const KeyRegistry* keys_;
    std::map<Digest, ScChainEntry> entries_;
    Digest genesis_hash_;
    Digest tip_;
    uint64_t arrival_counter_ = 0;
};

/// Reference for one MC block as the forger would include it; the FT/BTR sync
/// payloads are derived against `state`, which must reflect everything applied
/// earlier in the same SC block.
inline McBlockReference make_mc_reference(const McBlock& mc_block, const Digest& ledger_id,
                                          const ScState& state) {
    McBlockReference ref;
    ref.header = mc_block.header;
    ScCommitmentTree tree = ScCommitmentTree::from_block(mc_block);
    std::optional<ScBlockActivity> activity = tree.activity_for(ledger_id);
    if (!activity) {
        ref.proof_of_no_data = tree.prove_absence(ledger_id);
        return ref;
    }
    ref.mproof = tree.prove_subtree(ledger_id);
    ScState working = state;
    if (!activity->fts.empty()) {
        ref.forward_transfers = build_fttx(working, mc_block.hash(), activity->fts);
        working = apply_fttx(std::move(working), *ref.forward_transfers);
    }
    if (!activity->btrs.empty())
        ref.bt_requests = build_btrtx(working, mc_block.hash(), activity->btrs);
    if (activity->wcert) ref.wcert = activity->wcert;
    return ref;
}

} // namespace zendoo
