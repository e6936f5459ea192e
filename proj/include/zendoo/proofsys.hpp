#pragma once

#include <cstdint>
#include <functional>
#include <map>
#include <stdexcept>
#include <variant>
#include <vector>

#include "zendoo/delta.hpp"
#include "zendoo/digest.hpp"
#include "zendoo/merkle.hpp"
#include "zendoo/serialize.hpp"

namespace zendoo {

// The proving-system layer mirrors the usual (Setup, Prove, Verify) SNARK
// interface, but the reference backend is transparent: the witness travels
// inside the proof and Verify re-evaluates the statement predicate. Sound
// and complete at desk scale; succinctness is explicitly not provided.

enum class StatementKind : uint8_t {
    WCert = 0,
    Btr = 1,
    Csw = 2,
    BasePayment = 3,
    BaseForward = 4,
    BaseBackward = 5,
    BaseBtrSync = 6,
    BaseBlock = 7,
    Merge = 8,
};

inline const char* to_string(StatementKind k) {
    switch (k) {
        case StatementKind::WCert: return "wcert";
        case StatementKind::Btr: return "btr";
        case StatementKind::Csw: return "csw";
        case StatementKind::BasePayment: return "base-payment";
        case StatementKind::BaseForward: return "base-forward";
        case StatementKind::BaseBackward: return "base-backward";
        case StatementKind::BaseBtrSync: return "base-btr-sync";
        case StatementKind::BaseBlock: return "base-block";
        case StatementKind::Merge: return "merge";
    }
    return "?";
}

/// One typed public-input or proofdata field.
using Field = std::variant<Digest, uint64_t, MstDelta, std::vector<uint8_t>>;

inline void encode_field(Writer& w, const Field& f) {
    if (const auto* d = std::get_if<Digest>(&f)) {
        w.u8(0);
        w.digest(*d);
    } else if (const auto* i = std::get_if<uint64_t>(&f)) {
        w.u8(1);
        w.u64(*i);
    } else if (const auto* bv = std::get_if<MstDelta>(&f)) {
        w.u8(2);
        bv->encode(w);
    } else {
        w.u8(3);
        w.bytes(std::get<std::vector<uint8_t>>(f));
    }
}

inline Field decode_field(Reader& r) {
    switch (r.u8()) {
        case 0: return r.digest();
        case 1: return r.u64();
        case 2: return MstDelta::decode(r);
        case 3: return r.bytes();
        default: throw DecodeError("Field: unknown type tag");
    }
}

/// Ordered typed fields with an injective canonical encoding.
struct PublicInput {
    std::vector<Field> fields;

    bool operator==(const PublicInput&) const = default;

    void encode(Writer& w) const {
        w.u32(static_cast<uint32_t>(fields.size()));
        for (const Field& f : fields) encode_field(w, f);
    }

    std::vector<uint8_t> encode() const {
        Writer w;
        encode(w);
        return w.take();
    }

    static PublicInput decode(Reader& r) {
        PublicInput in;
        uint32_t n = r.u32();
        for (uint32_t i = 0; i < n; ++i) in.fields.push_back(decode_field(r));
        return in;
    }
};

/// Root of a Merkle tree whose leaves are the ordered fields, as passed to
/// the verifier in place of the full field list.
inline Digest proofdata_root(const std::vector<Field>& fields) {
    if (fields.empty()) return empty_list_digest();
    std::vector<Digest> leaves;
    leaves.reserve(fields.size());
    for (const Field& f : fields) {
        Writer w;
        encode_field(w, f);
        leaves.push_back(hash_tagged(HashTag::Field, w.data()));
    }
    return mht_build(std::move(leaves)).root();
}

/// Statement-specific payload, carried in the proof by the transparent
/// backend. Always a canonical byte encoding; predicates decode it.
struct Witness {
    std::vector<uint8_t> bytes;

    bool operator==(const Witness&) const = default;

    Digest digest() const { return hash_bytes(bytes); }
};

struct VerifyingKey {
    StatementKind statement{};
    Digest token;

    bool operator==(const VerifyingKey&) const = default;

    void encode(Writer& w) const {
        w.u8(static_cast<uint8_t>(statement));
        w.digest(token);
    }

    static VerifyingKey decode(Reader& r) {
        VerifyingKey vk;
        vk.statement = static_cast<StatementKind>(r.u8());
        vk.token = r.digest();
        return vk;
    }
};

struct ProvingKey {
    StatementKind statement{};
    Digest token;
    Digest vk_token;
};

struct KeyPair {
    ProvingKey pk;
    VerifyingKey vk;
};

struct StatementProof {
    Digest vk_ref;
    Digest public_binding;
    Witness witness;

    bool operator==(const StatementProof&) const = default;

    void encode(Writer& w) const {
        w.digest(vk_ref);
        w.digest(public_binding);
        w.bytes(witness.bytes);
    }

    static StatementProof decode(Reader& r) {
        StatementProof p;
        p.vk_ref = r.digest();
        p.public_binding = r.digest();
        p.witness.bytes = r.bytes();
        return p;
    }
};

struct UnsatisfiedError : std::runtime_error {
    explicit UnsatisfiedError(const std::string& what) : std::runtime_error(what) {}
};

struct ProofError : std::runtime_error {
    explicit ProofError(const std::string& what) : std::runtime_error(what) {}
};

class ProofSystem {
public:
    using Predicate =
        std::function<bool(const ProofSystem&, const PublicInput&, const Witness&)>;

    /// Bind a statement to its evaluator. Write-once per statement.
    void register_predicate(StatementKind statement, Predicate evaluator) {
        if (predicates_.count(statement))
            throw ProofError(std::string("predicate already registered: ") + to_string(statement));
        predicates_.emplace(statement, std::move(evaluator));
    }

    bool has_predicate(StatementKind statement) const { return predicates_.count(statement) > 0; }

    /// Deterministic in (statement, seed). The security parameter of the
    /// paper interface has no operational role here.
    static KeyPair setup(StatementKind statement, const Digest& seed) {
        auto derive = [&](HashTag tag) {
            Writer w;
            w.u8(static_cast<uint8_t>(statement));
            w.digest(seed);
            return hash_tagged(tag, w.data());
        };
        KeyPair kp;
        kp.vk = VerifyingKey{statement, derive(HashTag::VerifyingKey)};
        kp.pk = ProvingKey{statement, derive(HashTag::ProvingKey), kp.vk.token};
        return kp;
    }

    /// Commits the proof to (vk, public input, witness payload); any
    /// tampering with the carried witness is detectable without re-running
    /// the predicate.
    static Digest binding_digest(const Digest& vk_token, const PublicInput& input,
                                 const Witness& witness = {}) {
        Writer w;
        w.digest(vk_token);
        input.encode(w);
        w.digest(witness.digest());
        return hash_tagged(HashTag::Binding, w.data());
    }

    /// Honest prover: refuses non-satisfying assignments.
    StatementProof prove(const ProvingKey& pk, const PublicInput& input,
                         Witness witness) const {
        const Predicate& pred = predicate(pk.statement);
        if (!pred(*this, input, witness))
            throw UnsatisfiedError(std::string("statement not satisfied: ") +
                                   to_string(pk.statement));
        StatementProof proof;
        proof.vk_ref = pk.vk_token;
        proof.public_binding = binding_digest(pk.vk_token, input, witness);
        proof.witness = std::move(witness);
        return proof;
    }

    /// True iff the proof binds to this vk and public input and the witness
    /// satisfies the statement predicate. Never throws on bad proofs.
    bool verify(const VerifyingKey& vk, const PublicInput& input,
                const StatementProof& proof) const {
        if (proof.vk_ref != vk.token) return false;
        if (proof.public_binding != binding_digest(vk.token, input, proof.witness)) return false;
        auto it = predicates_.find(vk.statement);
        if (it == predicates_.end()) return false;
        try {
            return it->second(*this, input, proof.witness);
        } catch (const std::exception&) {
            return false; // malformed witness
        }
    }

private:
    const Predicate& predicate(StatementKind statement) const {
        auto it = predicates_.find(statement);
        if (it == predicates_.end())
            throw ProofError(std::string("no predicate registered: ") + to_string(statement));
        return it->second;
    }

    std::map<StatementKind, Predicate> predicates_;
};

} // namespace zendoo
