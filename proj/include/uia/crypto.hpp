#pragma once

#include <sodium.h>

#include <array>
#include <compare>
#include <cstdint>
#include <span>
#include <stdexcept>
#include <string>

#include "uia/bytes.hpp"

namespace uia {

inline void crypto_setup() {
    static const int rc = sodium_init();
    if (rc < 0) throw std::runtime_error("sodium_init failed");
}

struct Hash256 {
    std::array<uint8_t, 32> bytes{};

    auto operator<=>(const Hash256&) const = default;
    bool is_zero() const {
        for (uint8_t b : bytes)
            if (b != 0) return false;
        return true;
    }
    std::string hex() const { return to_hex(bytes); }
};

inline Hash256 sha256(std::span<const uint8_t> data) {
    crypto_setup();
    Hash256 h;
    crypto_hash_sha256(h.bytes.data(), data.data(), data.size());
    return h;
}

struct PublicKey {
    std::array<uint8_t, crypto_sign_PUBLICKEYBYTES> bytes{};
    auto operator<=>(const PublicKey&) const = default;
};

struct SecretKey {
    std::array<uint8_t, crypto_sign_SECRETKEYBYTES> bytes{};
    auto operator<=>(const SecretKey&) const = default;
};

struct Signature {
    std::array<uint8_t, crypto_sign_BYTES> bytes{};
    auto operator<=>(const Signature&) const = default;
};

struct KeyPair {
    PublicKey public_key;
    SecretKey secret_key;
};

// Ed25519 keypair derived deterministically from a 32-byte seed.
inline KeyPair keypair_from_seed(const std::array<uint8_t, 32>& seed) {
    crypto_setup();
    KeyPair kp;
    crypto_sign_seed_keypair(kp.public_key.bytes.data(), kp.secret_key.bytes.data(), seed.data());
    return kp;
}

inline Signature sign_bytes(const SecretKey& sk, std::span<const uint8_t> payload) {
    crypto_setup();
    Signature sig;
    crypto_sign_detached(sig.bytes.data(), nullptr, payload.data(), payload.size(),
                         sk.bytes.data());
    return sig;
}

inline bool verify_bytes(const PublicKey& pk, std::span<const uint8_t> payload,
                         const Signature& sig) {
    crypto_setup();
    return crypto_sign_verify_detached(sig.bytes.data(), payload.data(), payload.size(),
                                       pk.bytes.data()) == 0;
}

}  // namespace uia
