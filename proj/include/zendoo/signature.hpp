#pragma once

#include <map>
#include <optional>

#include "zendoo/digest.hpp"
#include "zendoo/serialize.hpp"

namespace zendoo {

// Keyed-hash signature scheme standing in for ECDSA: sign = H(secret || msg),
// verification goes through a registry of known secrets. Deterministic and
// pluggable behind the same (addr, msg, sig) interface.

using Secret = Digest;
using Address = Digest;
using Signature = Digest;

inline Address address_of(const Secret& secret) {
    return hash_tagged(HashTag::Address, std::span<const uint8_t>(secret.bytes.data(), 32));
}

inline Signature sign_message(const Secret& secret, std::span<const uint8_t> msg) {
    Writer w;
    w.digest(secret);
    w.raw(msg);
    return hash_tagged(HashTag::Signature, w.data());
}

inline Signature sign_message(const Secret& secret, const Digest& msg) {
    return sign_message(secret, std::span<const uint8_t>(msg.bytes.data(), 32));
}

class KeyRegistry {
public:
    Address add_secret(const Secret& secret) {
        Address addr = address_of(secret);
        secrets_[addr] = secret;
        return addr;
    }

    std::optional<Secret> secret_for(const Address& addr) const {
        auto it = secrets_.find(addr);
        if (it == secrets_.end()) return std::nullopt;
        return it->second;
    }

    bool verify(const Address& addr, std::span<const uint8_t> msg, const Signature& sig) const {
        auto it = secrets_.find(addr);
        return it != secrets_.end() && sign_message(it->second, msg) == sig;
    }

    bool verify(const Address& addr, const Digest& msg, const Signature& sig) const {
        return verify(addr, std::span<const uint8_t>(msg.bytes.data(), 32), sig);
    }

private:
    std::map<Address, Secret> secrets_;
};

} // namespace zendoo
