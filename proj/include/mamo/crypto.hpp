#pragma once

#include <array>
#include <cstdint>
#include <string>
#include <string_view>

namespace mamo::crypto {

inline constexpr std::size_t kKeyBytes = 32;
inline constexpr std::size_t kDigestBytes = 32;
inline constexpr std::size_t kFingerprintBytes = 4;

// Symmetric credential held by one section owner.
struct OwnerKey {
    std::string owner_id;
    std::array<std::uint8_t, kKeyBytes> key_material{};

    // Deterministic per-run key derivation from the simulation seed.
    static OwnerKey derive(std::string owner_id, std::uint64_t seed);
};

std::array<std::uint8_t, kDigestBytes> sha256(std::string_view data);

// Cleartext hint that lets an opener distinguish "not my key" from
// "ciphertext damaged" without weakening the AEAD.
std::array<std::uint8_t, kFingerprintBytes> key_fingerprint(std::string_view owner_id);

// Authenticated encryption behind an interface so the scheme can be
// swapped without touching envelope framing.
class AeadCipher {
public:
    virtual ~AeadCipher() = default;

    virtual std::size_t nonce_bytes() const = 0;
    virtual std::string encrypt(const OwnerKey& key, std::string_view nonce,
                                std::string_view plaintext) const = 0;
    // Returns false when authentication fails.
    virtual bool decrypt(const OwnerKey& key, std::string_view nonce,
                         std::string_view ciphertext, std::string& plaintext_out) const = 0;
};

// Process-wide default: XChaCha20-Poly1305.
const AeadCipher& default_cipher();

}  // namespace mamo::crypto
