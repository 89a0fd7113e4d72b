#pragma once

#include <array>
#include <compare>
#include <cstdint>
#include <string>

#include "uia/bytes.hpp"
#include "uia/crypto.hpp"

namespace uia {

// Endpoint identifier: hash of the device's public key. Fixed 32 bytes,
// compared bytewise; the lexicographic order is used for tie-breaking.
struct Eid {
    std::array<uint8_t, 32> bytes{};

    auto operator<=>(const Eid&) const = default;
    std::string hex() const { return to_hex(bytes); }
    std::string short_hex() const { return hex().substr(0, 8); }
};

inline Bytes canonical_encode(const PublicKey& pk) {
    return Bytes(pk.bytes.begin(), pk.bytes.end());
}

inline Eid eid_of(const PublicKey& pk) {
    Bytes enc = canonical_encode(pk);
    return Eid{sha256(enc).bytes};
}

struct DeviceIdentity {
    SecretKey private_key;
    PublicKey public_key;
    Eid eid;
};

// Deterministic identity from a numeric seed: the seed is hashed into the
// Ed25519 keypair seed, so equal seeds give identical EIDs across runs.
inline DeviceIdentity generate_identity(uint64_t seed) {
    ByteWriter w;
    w.raw(std::span<const uint8_t>(reinterpret_cast<const uint8_t*>("uia-identity"), 12));
    w.u64(seed);
    Hash256 seed_hash = sha256(w.bytes());
    KeyPair kp = keypair_from_seed(seed_hash.bytes);
    return DeviceIdentity{kp.secret_key, kp.public_key, eid_of(kp.public_key)};
}

inline Signature sign_record(const DeviceIdentity& identity, std::span<const uint8_t> payload) {
    return sign_bytes(identity.private_key, payload);
}

inline bool verify_record(const PublicKey& pk, std::span<const uint8_t> payload,
                          const Signature& sig) {
    return verify_bytes(pk, payload, sig);
}

}  // namespace uia
