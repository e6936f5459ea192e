#pragma once

#include <cstdint>
#include <optional>
#include <string>
#include <vector>

#include "zendoo/digest.hpp"
#include "zendoo/proofsys.hpp"
#include "zendoo/serialize.hpp"
#include "zendoo/signature.hpp"

namespace zendoo {

/// Unspendable output crediting a sidechain. receiverMetadata is opaque to
/// the mainchain.
struct ForwardTransfer {
    Digest ledger_id;
    std::vector<uint8_t> receiver_metadata;
    int64_t amount = 0;

    bool operator==(const ForwardTransfer&) const = default;

    void encode(Writer& w) const {
        w.digest(ledger_id);
        w.bytes(receiver_metadata);
        w.i64(amount);
    }

    static ForwardTransfer decode(Reader& r) {
        ForwardTransfer ft;
        ft.ledger_id = r.digest();
        ft.receiver_metadata = r.bytes();
        ft.amount = r.i64();
        return ft;
    }

    Digest digest() const {
        Writer w;
        encode(w);
        return hash_tagged(HashTag::Leaf, w.data());
    }
};

struct BackwardTransfer {
    Address receiver_addr;
    int64_t amount = 0;

    bool operator==(const BackwardTransfer&) const = default;

    void encode(Writer& w) const {
        w.digest(receiver_addr);
        w.i64(amount);
    }

    static BackwardTransfer decode(Reader& r) {
        BackwardTransfer bt;
        bt.receiver_addr = r.digest();
        bt.amount = r.i64();
        return bt;
    }

    Digest digest() const {
        Writer w;
        encode(w);
        return hash_tagged(HashTag::Leaf, w.data());
    }
};

/// Root committing to an ordered BT list.
inline Digest bt_list_root(const std::vector<BackwardTransfer>& bts) {
    std::vector<Digest> leaves;
    leaves.reserve(bts.size());
    for (const auto& bt : bts) leaves.push_back(bt.digest());
    if (leaves.empty()) return empty_list_digest();
    return mht_build(std::move(leaves)).root();
}

struct WithdrawalCertificate {
    Digest ledger_id;
    uint64_t epoch_id = 0;
    uint64_t quality = 0;
    std::vector<BackwardTransfer> bt_list;
    std::vector<Field> proofdata;
    StatementProof proof;

    bool operator==(const WithdrawalCertificate&) const = default;

    void encode(Writer& w) const {
        w.digest(ledger_id);
        w.u64(epoch_id);
        w.u64(quality);
        w.list(bt_list, [](Writer& ww, const BackwardTransfer& bt) { bt.encode(ww); });
        w.u32(static_cast<uint32_t>(proofdata.size()));
        for (const Field& f : proofdata) encode_field(w, f);
        proof.encode(w);
    }

    static WithdrawalCertificate decode(Reader& r) {
        WithdrawalCertificate c;
        c.ledger_id = r.digest();
        c.epoch_id = r.u64();
        c.quality = r.u64();
        c.bt_list = r.list<BackwardTransfer>([](Reader& rr) { return BackwardTransfer::decode(rr); });
        uint32_t n = r.u32();
        for (uint32_t i = 0; i < n; ++i) c.proofdata.push_back(decode_field(r));
        c.proof = StatementProof::decode(r);
        return c;
    }

    Digest digest() const {
        Writer w;
        encode(w);
        return hash_tagged(HashTag::Transaction, w.data());
    }

    int64_t total_amount() const {
        int64_t sum = 0;
        for (const auto& bt : bt_list) sum += bt.amount;
        return sum;
    }
};

/// Mainchain-managed withdrawal: the BTR and CSW share one wire shape.
struct WithdrawalRequest {
    Digest ledger_id;
    Address receiver;
    int64_t amount = 0;
    Digest nullifier;
    std::vector<Field> proofdata;
    StatementProof proof;

    bool operator==(const WithdrawalRequest&) const = default;

    void encode(Writer& w) const {
        w.digest(ledger_id);
        w.digest(receiver);
        w.i64(amount);
        w.digest(nullifier);
        w.u32(static_cast<uint32_t>(proofdata.size()));
        for (const Field& f : proofdata) encode_field(w, f);
        proof.encode(w);
    }

    static WithdrawalRequest decode(Reader& r) {
        WithdrawalRequest q;
        q.ledger_id = r.digest();
        q.receiver = r.digest();
        q.amount = r.i64();
        q.nullifier = r.digest();
        uint32_t n = r.u32();
        for (uint32_t i = 0; i < n; ++i) q.proofdata.push_back(decode_field(r));
        q.proof = StatementProof::decode(r);
        return q;
    }

    Digest digest() const {
        Writer w;
        encode(w);
        return hash_tagged(HashTag::Transaction, w.data());
    }
};

using BtrRequest = WithdrawalRequest;
using CswRequest = WithdrawalRequest;

enum class FieldType : uint8_t { DigestField = 0, IntegerField = 1, BitvectorField = 2, BytesField = 3 };

/// Ordered (name, type) descriptor for a sidechain's proofdata layout.
struct ProofdataSchema {
    std::vector<std::pair<std::string, FieldType>> entries;

    bool operator==(const ProofdataSchema&) const = default;

    bool matches(const std::vector<Field>& fields) const {
        if (fields.size() != entries.size()) return false;
        for (size_t i = 0; i < fields.size(); ++i) {
            FieldType want = entries[i].second;
            bool ok = (want == FieldType::DigestField && std::holds_alternative<Digest>(fields[i])) ||
                      (want == FieldType::IntegerField && std::holds_alternative<uint64_t>(fields[i])) ||
                      (want == FieldType::BitvectorField && std::holds_alternative<MstDelta>(fields[i])) ||
                      (want == FieldType::BytesField &&
                       std::holds_alternative<std::vector<uint8_t>>(fields[i]));
            if (!ok) return false;
        }
        return true;
    }

    void encode(Writer& w) const {
        w.u32(static_cast<uint32_t>(entries.size()));
        for (const auto& [name, type] : entries) {
            w.bytes(std::vector<uint8_t>(name.begin(), name.end()));
            w.u8(static_cast<uint8_t>(type));
        }
    }

    static ProofdataSchema decode(Reader& r) {
        ProofdataSchema s;
        uint32_t n = r.u32();
        for (uint32_t i = 0; i < n; ++i) {
            auto name = r.bytes();
            FieldType t = static_cast<FieldType>(r.u8());
            s.entries.emplace_back(std::string(name.begin(), name.end()), t);
        }
        return s;
    }
};

/// Registration-time sidechain parameters.
struct SidechainConfig {
    Digest ledger_id;
    uint64_t start_block = 0;
    uint64_t epoch_len = 0;   // >= 2
    uint64_t submit_len = 0;  // 1 <= submit_len < epoch_len
    VerifyingKey wcert_vk;
    std::optional<VerifyingKey> btr_vk;
    std::optional<VerifyingKey> csw_vk;
    ProofdataSchema wcert_proofdata;
    ProofdataSchema btr_proofdata;
    ProofdataSchema csw_proofdata;

    bool operator==(const SidechainConfig&) const = default;

    void encode(Writer& w) const {
        w.digest(ledger_id);
        w.u64(start_block);
        w.u64(epoch_len);
        w.u64(submit_len);
        wcert_vk.encode(w);
        w.u8(btr_vk ? 1 : 0);
        if (btr_vk) btr_vk->encode(w);
        w.u8(csw_vk ? 1 : 0);
        if (csw_vk) csw_vk->encode(w);
        wcert_proofdata.encode(w);
        btr_proofdata.encode(w);
        csw_proofdata.encode(w);
    }

    static SidechainConfig decode(Reader& r) {
        SidechainConfig c;
        c.ledger_id = r.digest();
        c.start_block = r.u64();
        c.epoch_len = r.u64();
        c.submit_len = r.u64();
        c.wcert_vk = VerifyingKey::decode(r);
        if (r.boolean()) c.btr_vk = VerifyingKey::decode(r);
        if (r.boolean()) c.csw_vk = VerifyingKey::decode(r);
        c.wcert_proofdata = ProofdataSchema::decode(r);
        c.btr_proofdata = ProofdataSchema::decode(r);
        c.csw_proofdata = ProofdataSchema::decode(r);
        return c;
    }
};

struct McOutPoint {
    Digest txid;
    uint32_t index = 0;

    auto operator<=>(const McOutPoint&) const = default;

    void encode(Writer& w) const {
        w.digest(txid);
        w.u32(index);
    }

    static McOutPoint decode(Reader& r) {
        McOutPoint o;
        o.txid = r.digest();
        o.index = r.u32();
        return o;
    }
};

struct McTxInput {
    McOutPoint outpoint;
    Signature signature;

    bool operator==(const McTxInput&) const = default;
};

struct McTxOutput {
    Address addr;
    int64_t amount = 0;

    bool operator==(const McTxOutput&) const = default;
};

struct McTransaction {
    bool coinbase = false;
    std::vector<McTxInput> inputs;
    std::vector<McTxOutput> outputs;
    std::vector<ForwardTransfer> ft_outputs;

    bool operator==(const McTransaction&) const = default;

    void encode(Writer& w, bool with_signatures = true) const {
        w.u8(coinbase ? 1 : 0);
        w.u32(static_cast<uint32_t>(inputs.size()));
        for (const auto& in : inputs) {
            in.outpoint.encode(w);
            if (with_signatures) w.digest(in.signature);
        }
        w.u32(static_cast<uint32_t>(outputs.size()));
        for (const auto& out : outputs) {
            w.digest(out.addr);
            w.i64(out.amount);
        }
        w.list(ft_outputs, [](Writer& ww, const ForwardTransfer& ft) { ft.encode(ww); });
    }

    static McTransaction decode(Reader& r) {
        McTransaction tx;
        tx.coinbase = r.boolean();
        uint32_t ni = r.u32();
        for (uint32_t i = 0; i < ni; ++i) {
            McTxInput in;
            in.outpoint = McOutPoint::decode(r);
            in.signature = r.digest();
            tx.inputs.push_back(in);
        }
        uint32_t no = r.u32();
        for (uint32_t i = 0; i < no; ++i) {
            McTxOutput out;
            out.addr = r.digest();
            out.amount = r.i64();
            tx.outputs.push_back(out);
        }
        tx.ft_outputs = r.list<ForwardTransfer>([](Reader& rr) { return ForwardTransfer::decode(rr); });
        return tx;
    }

    Digest txid() const {
        Writer w;
        encode(w);
        return hash_tagged(HashTag::Transaction, w.data());
    }

    /// Message signed by every input owner: the tx with signatures blanked.
    Digest sighash() const {
        Writer w;
        encode(w, /*with_signatures=*/false);
        return hash_tagged(HashTag::Transaction, w.data());
    }
};

struct McBlockHeader {
    Digest prev_block;
    uint64_t height = 0;
    Digest sc_txs_commitment;
    Digest body_root; // digest of the full block body
    uint64_t work_nonce = 0;

    bool operator==(const McBlockHeader&) const = default;

    void encode(Writer& w) const {
        w.digest(prev_block);
        w.u64(height);
        w.digest(sc_txs_commitment);
        w.digest(body_root);
        w.u64(work_nonce);
    }

    static McBlockHeader decode(Reader& r) {
        McBlockHeader h;
        h.prev_block = r.digest();
        h.height = r.u64();
        h.sc_txs_commitment = r.digest();
        h.body_root = r.digest();
        h.work_nonce = r.u64();
        return h;
    }

    Digest hash() const {
        Writer w;
        encode(w);
        return hash_tagged(HashTag::Block, w.data());
    }
};

struct McBlock {
    McBlockHeader header;
    std::vector<SidechainConfig> registrations;
    std::vector<McTransaction> txs;
    std::vector<WithdrawalCertificate> certs;
    std::vector<BtrRequest> btrs;
    std::vector<CswRequest> csws;

    bool operator==(const McBlock&) const = default;

    void encode_body(Writer& w) const {
        w.list(registrations, [](Writer& ww, const SidechainConfig& c) { c.encode(ww); });
        w.list(txs, [](Writer& ww, const McTransaction& t) { t.encode(ww); });
        w.list(certs, [](Writer& ww, const WithdrawalCertificate& c) { c.encode(ww); });
        w.list(btrs, [](Writer& ww, const BtrRequest& b) { b.encode(ww); });
        w.list(csws, [](Writer& ww, const CswRequest& c) { c.encode(ww); });
    }

    void encode(Writer& w) const {
        header.encode(w);
        encode_body(w);
    }

    Digest compute_body_root() const {
        Writer w;
        encode_body(w);
        return hash_tagged(HashTag::Body, w.data());
    }

    static McBlock decode(Reader& r) {
        McBlock b;
        b.header = McBlockHeader::decode(r);
        b.registrations = r.list<SidechainConfig>([](Reader& rr) { return SidechainConfig::decode(rr); });
        b.txs = r.list<McTransaction>([](Reader& rr) { return McTransaction::decode(rr); });
        b.certs = r.list<WithdrawalCertificate>([](Reader& rr) { return WithdrawalCertificate::decode(rr); });
        b.btrs = r.list<BtrRequest>([](Reader& rr) { return BtrRequest::decode(rr); });
        b.csws = r.list<CswRequest>([](Reader& rr) { return CswRequest::decode(rr); });
        return b;
    }

    Digest hash() const { return header.hash(); }
};

} // namespace zendoo
