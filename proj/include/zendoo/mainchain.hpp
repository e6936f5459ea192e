#pragma once

#include <map>
#include <optional>
#include <set>
#include <stdexcept>
#include <string>
#include <vector>

#include "zendoo/commitment.hpp"
#include "zendoo/mc_types.hpp"
#include "zendoo/proofsys.hpp"
#include "zendoo/signature.hpp"

namespace zendoo {

/// Machine-readable rejection reasons, reported alongside every refused
/// submission.
enum class Reason {
    Ok = 0,
    UnknownParent,
    DuplicateBlock,
    BadHeight,
    BadCommitment,
    BadBodyRoot,
    DuplicateLedgerId,
    InvalidParams,
    UnknownSidechain,
    SidechainCeased,
    SidechainNotStarted,
    SidechainActive,
    MissingInput,
    ImmatureInput,
    DuplicateInput,
    BadSignature,
    ValueImbalance,
    BadAmount,
    WrongEpoch,
    WindowClosed,
    QualityTooLow,
    BadProofdata,
    BadProof,
    SafeguardExceeded,
    DuplicateNullifier,
    NoPriorCert,
    VkNull,
    NotLongest,
};

inline const char* to_string(Reason r) {
    switch (r) {
        case Reason::Ok: return "ok";
        case Reason::UnknownParent: return "unknown-parent";
        case Reason::DuplicateBlock: return "duplicate-block";
        case Reason::BadHeight: return "bad-height";
        case Reason::BadCommitment: return "bad-commitment";
        case Reason::BadBodyRoot: return "bad-body-root";
        case Reason::DuplicateLedgerId: return "duplicate-ledger-id";
        case Reason::InvalidParams: return "invalid-params";
        case Reason::UnknownSidechain: return "unknown-sidechain";
        case Reason::SidechainCeased: return "sidechain-ceased";
        case Reason::SidechainNotStarted: return "sidechain-not-started";
        case Reason::SidechainActive: return "sidechain-active";
        case Reason::MissingInput: return "missing-input";
        case Reason::ImmatureInput: return "immature-input";
        case Reason::DuplicateInput: return "duplicate-input";
        case Reason::BadSignature: return "bad-signature";
        case Reason::ValueImbalance: return "value-imbalance";
        case Reason::BadAmount: return "bad-amount";
        case Reason::WrongEpoch: return "wrong-epoch";
        case Reason::WindowClosed: return "window-closed";
        case Reason::QualityTooLow: return "quality-too-low";
        case Reason::BadProofdata: return "bad-proofdata";
        case Reason::BadProof: return "bad-proof";
        case Reason::SafeguardExceeded: return "safeguard-exceeded";
        case Reason::DuplicateNullifier: return "duplicate-nullifier";
        case Reason::NoPriorCert: return "no-prior-cert";
        case Reason::VkNull: return "vk-null";
        case Reason::NotLongest: return "not-longest";
    }
    return "?";
}

struct Outcome {
    Reason reason = Reason::Ok;

    bool ok() const { return reason == Reason::Ok; }
    static Outcome pass() { return {}; }
    static Outcome fail(Reason r) { return Outcome{r}; }
};

/// (epoch id, index within epoch) of an MC height under a sidechain's
/// withdrawal schedule.
inline std::pair<uint64_t, uint64_t> epoch_of(const SidechainConfig& cfg, uint64_t mc_height) {
    if (mc_height < cfg.start_block)
        throw std::invalid_argument("epoch_of: height precedes sidechain activation");
    uint64_t off = mc_height - cfg.start_block;
    return {off / cfg.epoch_len, off % cfg.epoch_len};
}

/// Height of the first block at which the epoch-i certificate can no longer
/// be submitted (index submit_len of epoch i+1).
inline uint64_t window_close_height(const SidechainConfig& cfg, uint64_t epoch) {
    return cfg.start_block + (epoch + 2) * cfg.epoch_len -
           (cfg.epoch_len - cfg.submit_len);
}

/// Height of the last MC block belonging to epoch i.
inline uint64_t epoch_last_height(const SidechainConfig& cfg, uint64_t epoch) {
    return cfg.start_block + (epoch + 1) * cfg.epoch_len - 1;
}

struct UtxoEntry {
    Address addr;
    int64_t amount = 0;
    uint64_t mature_height = 0;

    bool operator==(const UtxoEntry&) const = default;
};

struct AcceptedCert {
    WithdrawalCertificate cert;
    Digest block_hash; // block the certificate was submitted in
    std::vector<McOutPoint> payouts;
};

enum class SidechainStatus : uint8_t { Active = 0, Ceased = 1 };

struct LedgerState {
    SidechainConfig config;
    SidechainStatus status = SidechainStatus::Active;
    int64_t balance = 0;
    int64_t ft_total = 0;
    int64_t wcert_paid = 0;
    int64_t csw_paid = 0;
    std::map<uint64_t, AcceptedCert> certs; // accepted cert per epoch
    std::set<Digest> nullifiers;
    uint64_t next_unresolved_epoch = 0;

    bool ceased() const { return status == SidechainStatus::Ceased; }

    const AcceptedCert* latest_cert() const {
        if (certs.empty()) return nullptr;
        return &certs.rbegin()->second;
    }
};

/// Registry + UTXO set + chain index derived from one branch of blocks.
/// Rebuilt from genesis on reorg, so the active-chain state is always a
/// pure function of the block sequence.
class McDerivedState {
public:
    McDerivedState(const ProofSystem& proofs, const KeyRegistry& keys, Digest genesis_hash)
        : proofs_(&proofs), keys_(&keys) {
        chain_hashes_.push_back(genesis_hash);
    }

    const std::map<Digest, LedgerState>& registry() const { return registry_; }
    const std::map<McOutPoint, UtxoEntry>& utxos() const { return utxos_; }
    const std::vector<Digest>& chain_hashes() const { return chain_hashes_; }
    uint64_t tip_height() const { return chain_hashes_.size() - 1; }

    const LedgerState* ledger(const Digest& id) const {
        auto it = registry_.find(id);
        return it == registry_.end() ? nullptr : &it->second;
    }

    int64_t balance_at(const Address& addr) const {
        int64_t sum = 0;
        for (const auto& [op, e] : utxos_)
            if (e.addr == addr) sum += e.amount;
        return sum;
    }

    Outcome validate_registration(const SidechainConfig& cfg, uint64_t at_height) const {
        if (registry_.count(cfg.ledger_id)) return Outcome::fail(Reason::DuplicateLedgerId);
        if (cfg.ledger_id == sentinel_min_id() || cfg.ledger_id == sentinel_max_id())
            return Outcome::fail(Reason::InvalidParams);
        if (cfg.epoch_len < 2 || cfg.submit_len < 1 || cfg.submit_len >= cfg.epoch_len)
            return Outcome::fail(Reason::InvalidParams);
        if (cfg.start_block <= at_height) return Outcome::fail(Reason::InvalidParams);
        return Outcome::pass();
    }

    Outcome verify_tx(const McTransaction& tx, uint64_t height) const {
        if (tx.coinbase) {
            if (!tx.inputs.empty()) return Outcome::fail(Reason::InvalidParams);
        } else {
            if (tx.inputs.empty()) return Outcome::fail(Reason::MissingInput);
            int64_t in_sum = 0;
            std::set<McOutPoint> seen;
            for (const auto& in : tx.inputs) {
                if (!seen.insert(in.outpoint).second) return Outcome::fail(Reason::DuplicateInput);
                auto it = utxos_.find(in.outpoint);
                if (it == utxos_.end()) return Outcome::fail(Reason::MissingInput);
                if (height < it->second.mature_height) return Outcome::fail(Reason::ImmatureInput);
                if (!keys_->verify(it->second.addr, tx.sighash(), in.signature))
                    return Outcome::fail(Reason::BadSignature);
                in_sum += it->second.amount;
            }
            int64_t out_sum = 0;
            for (const auto& out : tx.outputs) out_sum += out.amount;
            for (const auto& ft : tx.ft_outputs) out_sum += ft.amount;
            if (in_sum < out_sum) return Outcome::fail(Reason::ValueImbalance);
        }
        for (const auto& out : tx.outputs)
            if (out.amount < 1) return Outcome::fail(Reason::BadAmount);
        for (const auto& ft : tx.ft_outputs) {
            if (ft.amount < 1) return Outcome::fail(Reason::BadAmount);
            Outcome o = check_ft_target(ft, height);
            if (!o.ok()) return o;
        }
        return Outcome::pass();
    }

    /// Whether the sidechain is, or will have been, ceased once the block at
    /// `height` runs its cease sweep. Verification at an intended inclusion
    /// height must use this, not the raw status: the sweep runs before any
    /// block content is applied.
    bool ceased_at(const LedgerState& ls, uint64_t height) const {
        if (ls.ceased()) return true;
        uint64_t e = ls.next_unresolved_epoch;
        while (window_close_height(ls.config, e) <= height) {
            if (!ls.certs.count(e)) return true;
            ++e;
        }
        return false;
    }

    Outcome check_ft_target(const ForwardTransfer& ft, uint64_t height) const {
        const LedgerState* ls = ledger(ft.ledger_id);
        if (!ls) return Outcome::fail(Reason::UnknownSidechain);
        if (ceased_at(*ls, height)) return Outcome::fail(Reason::SidechainCeased);
        if (height < ls->config.start_block) return Outcome::fail(Reason::SidechainNotStarted);
        return Outcome::pass();
    }

    /// The four verification-box rules plus proofdata schema and safeguard.
    Outcome verify_wcert(const WithdrawalCertificate& cert, uint64_t height) const {
        const LedgerState* ls = ledger(cert.ledger_id);
        if (!ls) return Outcome::fail(Reason::UnknownSidechain);
        if (ls->ceased()) return Outcome::fail(Reason::SidechainCeased);
        if (height < ls->config.start_block) return Outcome::fail(Reason::SidechainNotStarted);
        auto [cur_epoch, idx] = epoch_of(ls->config, height);
        if (cur_epoch == 0 || cert.epoch_id != cur_epoch - 1) return Outcome::fail(Reason::WrongEpoch);
        if (idx >= ls->config.submit_len) return Outcome::fail(Reason::WindowClosed);
        // the block at `height` runs its cease sweep before processing certs,
        // so a sidechain due to cease there can no longer be saved
        if (ceased_at(*ls, height)) return Outcome::fail(Reason::SidechainCeased);
        auto prev = ls->certs.find(cert.epoch_id);
        if (prev != ls->certs.end() && cert.quality <= prev->second.cert.quality)
            return Outcome::fail(Reason::QualityTooLow);
        if (!ls->config.wcert_proofdata.matches(cert.proofdata))
            return Outcome::fail(Reason::BadProofdata);
        for (const auto& bt : cert.bt_list)
            if (bt.amount < 1) return Outcome::fail(Reason::BadAmount);
        if (cert.total_amount() > ls->balance) return Outcome::fail(Reason::SafeguardExceeded);
        if (!proofs_->verify(ls->config.wcert_vk, wcert_public_input(ls->config, cert), cert.proof))
            return Outcome::fail(Reason::BadProof);
        return Outcome::pass();
    }

    /// (wcert_sysdata, MH(proofdata)) with the epoch-boundary block hashes
    /// taken from this branch.
    PublicInput wcert_public_input(const SidechainConfig& cfg,
                                   const WithdrawalCertificate& cert) const {
        uint64_t prev_last = epoch_last_height(cfg, cert.epoch_id) - cfg.epoch_len;
        uint64_t last = epoch_last_height(cfg, cert.epoch_id);
        PublicInput in;
        in.fields = {cert.quality, bt_list_root(cert.bt_list), chain_hashes_.at(prev_last),
                     chain_hashes_.at(last), proofdata_root(cert.proofdata)};
        return in;
    }

    static PublicInput withdrawal_public_input(const Digest& cert_block_hash,
                                               const WithdrawalRequest& req) {
        PublicInput in;
        in.fields = {cert_block_hash, req.nullifier, req.receiver,
                     static_cast<uint64_t>(req.amount), proofdata_root(req.proofdata)};
        return in;
    }

    Outcome verify_btr(const BtrRequest& btr, uint64_t height) const {
        const LedgerState* ls = ledger(btr.ledger_id);
        if (!ls) return Outcome::fail(Reason::UnknownSidechain);
        if (ceased_at(*ls, height)) return Outcome::fail(Reason::SidechainCeased);
        if (height < ls->config.start_block) return Outcome::fail(Reason::SidechainNotStarted);
        if (!ls->config.btr_vk) return Outcome::fail(Reason::VkNull);
        if (btr.amount < 1) return Outcome::fail(Reason::BadAmount);
        if (ls->nullifiers.count(btr.nullifier)) return Outcome::fail(Reason::DuplicateNullifier);
        if (!ls->config.btr_proofdata.matches(btr.proofdata))
            return Outcome::fail(Reason::BadProofdata);
        const AcceptedCert* latest = ls->latest_cert();
        if (!latest) return Outcome::fail(Reason::NoPriorCert);
        if (!proofs_->verify(*ls->config.btr_vk,
                             withdrawal_public_input(latest->block_hash, btr), btr.proof))
            return Outcome::fail(Reason::BadProof);
        return Outcome::pass();
    }

    Outcome verify_csw(const CswRequest& csw) const {
        const LedgerState* ls = ledger(csw.ledger_id);
        if (!ls) return Outcome::fail(Reason::UnknownSidechain);
        if (!ls->ceased()) return Outcome::fail(Reason::SidechainActive);
        if (!ls->config.csw_vk) return Outcome::fail(Reason::VkNull);
        if (csw.amount < 1) return Outcome::fail(Reason::BadAmount);
        if (ls->nullifiers.count(csw.nullifier)) return Outcome::fail(Reason::DuplicateNullifier);
        if (!ls->config.csw_proofdata.matches(csw.proofdata))
            return Outcome::fail(Reason::BadProofdata);
        if (csw.amount > ls->balance) return Outcome::fail(Reason::SafeguardExceeded);
        const AcceptedCert* latest = ls->latest_cert();
        if (!latest) return Outcome::fail(Reason::NoPriorCert);
        if (!proofs_->verify(*ls->config.csw_vk,
                             withdrawal_public_input(latest->block_hash, csw), csw.proof))
            return Outcome::fail(Reason::BadProof);
        return Outcome::pass();
    }

    /// Validate and apply one block on top of the current branch tip.
    /// Processing order inside a block: cease sweep, registrations, txs
    /// (with FTs), BTRs, CSWs, then certificates, so a BTR's H(B_w) always
    /// refers to an earlier block.
    Outcome connect_block(const McBlock& block) {
        if (block.header.prev_block != chain_hashes_.back())
            return Outcome::fail(Reason::UnknownParent);
        uint64_t height = chain_hashes_.size();
        if (block.header.height != height) return Outcome::fail(Reason::BadHeight);
        if (block.header.body_root != block.compute_body_root())
            return Outcome::fail(Reason::BadBodyRoot);
        try {
            if (build_sctx_commitment(block) != block.header.sc_txs_commitment)
                return Outcome::fail(Reason::BadCommitment);
        } catch (const std::exception&) {
            return Outcome::fail(Reason::BadCommitment);
        }
        Digest self = block.hash();

        sweep_ceased(height);

        for (const auto& cfg : block.registrations) {
            Outcome o = validate_registration(cfg, height);
            if (!o.ok()) return o;
            LedgerState ls;
            ls.config = cfg;
            registry_.emplace(cfg.ledger_id, std::move(ls));
        }

        for (const auto& tx : block.txs) {
            Outcome o = verify_tx(tx, height);
            if (!o.ok()) return o;
            apply_tx(tx);
        }
        for (const auto& btr : block.btrs) {
            Outcome o = verify_btr(btr, height);
            if (!o.ok()) return o;
            registry_.at(btr.ledger_id).nullifiers.insert(btr.nullifier);
        }
        for (const auto& csw : block.csws) {
            Outcome o = verify_csw(csw);
            if (!o.ok()) return o;
            apply_csw(csw);
        }
        for (const auto& cert : block.certs) {
            Outcome o = verify_wcert(cert, height);
            if (!o.ok()) return o;
            apply_wcert(cert, self);
        }

        for (const auto& [id, ls] : registry_) {
            if (ls.balance < 0 || ls.balance != ls.ft_total - ls.wcert_paid - ls.csw_paid)
                return Outcome::fail(Reason::SafeguardExceeded);
        }

        chain_hashes_.push_back(self);
        return Outcome::pass();
    }

private:
    void sweep_ceased(uint64_t height) {
        for (auto& [id, ls] : registry_) {
            if (ls.ceased()) continue;
            while (window_close_height(ls.config, ls.next_unresolved_epoch) <= height) {
                if (!ls.certs.count(ls.next_unresolved_epoch)) {
                    ls.status = SidechainStatus::Ceased;
                    break;
                }
                ++ls.next_unresolved_epoch;
            }
        }
    }

    void apply_tx(const McTransaction& tx) {
        Digest txid = tx.txid();
        for (const auto& in : tx.inputs) utxos_.erase(in.outpoint);
        for (uint32_t i = 0; i < tx.outputs.size(); ++i)
            utxos_[McOutPoint{txid, i}] = UtxoEntry{tx.outputs[i].addr, tx.outputs[i].amount, 0};
        for (const auto& ft : tx.ft_outputs) {
            LedgerState& ls = registry_.at(ft.ledger_id);
            ls.balance += ft.amount;
            ls.ft_total += ft.amount;
        }
    }

    void apply_wcert(const WithdrawalCertificate& cert, const Digest& block_hash) {
        LedgerState& ls = registry_.at(cert.ledger_id);
        auto prev = ls.certs.find(cert.epoch_id);
        if (prev != ls.certs.end()) {
            // Lower-quality cert superseded in-window: its payouts are still
            // immature, so rolling them back cannot orphan spends.
            int64_t rolled = prev->second.cert.total_amount();
            for (const auto& op : prev->second.payouts) utxos_.erase(op);
            ls.balance += rolled;
            ls.wcert_paid -= rolled;
            ls.certs.erase(prev);
        }
        AcceptedCert acc;
        acc.cert = cert;
        acc.block_hash = block_hash;
        Digest cert_id = cert.digest();
        uint64_t mature = window_close_height(ls.config, cert.epoch_id);
        for (uint32_t i = 0; i < cert.bt_list.size(); ++i) {
            McOutPoint op{cert_id, i};
            utxos_[op] = UtxoEntry{cert.bt_list[i].receiver_addr, cert.bt_list[i].amount, mature};
            acc.payouts.push_back(op);
        }
        ls.balance -= cert.total_amount();
        ls.wcert_paid += cert.total_amount();
        ls.certs.emplace(cert.epoch_id, std::move(acc));
    }

    void apply_csw(const CswRequest& csw) {
        LedgerState& ls = registry_.at(csw.ledger_id);
        ls.nullifiers.insert(csw.nullifier);
        utxos_[McOutPoint{csw.digest(), 0}] = UtxoEntry{csw.receiver, csw.amount, 0};
        ls.balance -= csw.amount;
        ls.csw_paid += csw.amount;
    }

    const ProofSystem* proofs_;
    const KeyRegistry* keys_;
    std::map<Digest, LedgerState> registry_;
    std::map<McOutPoint, UtxoEntry> utxos_;
    std::vector<Digest> chain_hashes_;
};

/// Block store + fork choice. Work is one unit per block, so the best chain
/// is the longest one; equal lengths keep the first-seen tip. On reorg the
/// derived state is rebuilt from genesis along the winning branch.
class McChainState {
public:
    McChainState(const ProofSystem& proofs, const KeyRegistry& keys)
        : proofs_(&proofs), keys_(&keys) {
        McBlock genesis;
        genesis.header.height = 0;
        genesis.header.sc_txs_commitment = build_sctx_commitment(genesis);
        genesis.header.body_root = genesis.compute_body_root();
        genesis_hash_ = genesis.hash();
        blocks_.emplace(genesis_hash_, std::move(genesis));
        arrival_.emplace(genesis_hash_, arrival_counter_++);
        tip_ = genesis_hash_;
        derived_.emplace(*proofs_, *keys_, genesis_hash_);
    }

    const Digest& genesis_hash() const { return genesis_hash_; }
    const Digest& tip() const { return tip_; }
    uint64_t tip_height() const { return blocks_.at(tip_).header.height; }
    const McDerivedState& state() const { return *derived_; }

    const McBlock* block(const Digest& hash) const {
        auto it = blocks_.find(hash);
        return it == blocks_.end() ? nullptr : &it->second;
    }

    const McBlock& block_at_height(uint64_t h) const {
        return blocks_.at(derived_->chain_hashes().at(h));
    }

    /// Validate a block in the context of its parent branch, store it, and
    /// run fork choice.
    Outcome extend_chain(const McBlock& block) {
        Digest hash = block.hash();
        if (blocks_.count(hash)) return Outcome::fail(Reason::DuplicateBlock);
        auto parent = blocks_.find(block.header.prev_block);
        if (parent == blocks_.end()) return Outcome::fail(Reason::UnknownParent);

        if (block.header.prev_block == tip_) {
            McDerivedState next = *derived_;
            Outcome o = next.connect_block(block);
            if (!o.ok()) return o;
            derived_ = std::move(next);
            tip_ = hash;
            blocks_.emplace(hash, block);
            arrival_.emplace(hash, arrival_counter_++);
            return Outcome::pass();
        }

        // Side branch: replay from genesis.
        std::vector<const McBlock*> branch;
        for (const McBlock* b = &parent->second; b->header.height > 0;
             b = &blocks_.at(b->header.prev_block))
            branch.push_back(b);
        McDerivedState replayed(*proofs_, *keys_, genesis_hash_);
        for (auto it = branch.rbegin(); it != branch.rend(); ++it) {
            Outcome o = replayed.connect_block(**it);
            if (!o.ok()) return o; // cannot happen for stored blocks
        }
        Outcome o = replayed.connect_block(block);
        if (!o.ok()) return o;
        blocks_.emplace(hash, block);
        arrival_.emplace(hash, arrival_counter_++);
        if (block.header.height > tip_height()) {
            derived_ = std::move(replayed);
            tip_ = hash;
            return Outcome::pass();
        }
        return Outcome::fail(Reason::NotLongest); // stored, not adopted
    }

private:
    const ProofSystem* proofs_;
    const KeyRegistry* keys_;
    Digest genesis_hash_;
    std::map<Digest, McBlock> blocks_;
    std::map<Digest, uint64_t> arrival_;
    uint64_t arrival_counter_ = 0;
    Digest tip_;
    std::optional<McDerivedState> derived_;
};

} // namespace zendoo
