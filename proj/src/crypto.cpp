#include "mamo/crypto.hpp"

#include <sodium.h>

#include <cstring>
#include <mutex>
#include <stdexcept>

#include "mamo/errors.hpp"

namespace mamo::crypto {
namespace {

void ensure_sodium() {
    static std::once_flag once;
    std::call_once(once, [] {
        if (sodium_init() < 0) throw std::runtime_error("libsodium initialization failed");
    });
}

class XChaChaCipher final : public AeadCipher {
public:
    std::size_t nonce_bytes() const override {
        return crypto_aead_xchacha20poly1305_ietf_NPUBBYTES;
    }

    std::string encrypt(const OwnerKey& key, std::string_view nonce,
                        std::string_view plaintext) const override {
        ensure_sodium();
        if (nonce.size() != nonce_bytes()) {
            raise(ErrorCode::ConfigError, "bad nonce length for XChaCha20-Poly1305");
        }
        std::string out(plaintext.size() + crypto_aead_xchacha20poly1305_ietf_ABYTES, '\0');
        unsigned long long out_len = 0;
        crypto_aead_xchacha20poly1305_ietf_encrypt(
            reinterpret_cast<unsigned char*>(out.data()), &out_len,
            reinterpret_cast<const unsigned char*>(plaintext.data()), plaintext.size(), nullptr,
            0, nullptr, reinterpret_cast<const unsigned char*>(nonce.data()),
            key.key_material.data());
        out.resize(out_len);
        return out;
    }

    bool decrypt(const OwnerKey& key, std::string_view nonce, std::string_view ciphertext,
                 std::string& plaintext_out) const override {
        ensure_sodium();
        if (nonce.size() != nonce_bytes()) return false;
        if (ciphertext.size() < crypto_aead_xchacha20poly1305_ietf_ABYTES) return false;
        plaintext_out.assign(ciphertext.size() - crypto_aead_xchacha20poly1305_ietf_ABYTES, '\0');
        unsigned long long out_len = 0;
        const int rc = crypto_aead_xchacha20poly1305_ietf_decrypt(
            reinterpret_cast<unsigned char*>(plaintext_out.data()), &out_len, nullptr,
            reinterpret_cast<const unsigned char*>(ciphertext.data()), ciphertext.size(), nullptr,
            0, reinterpret_cast<const unsigned char*>(nonce.data()), key.key_material.data());
        if (rc != 0) return false;
        plaintext_out.resize(out_len);
        return true;
    }
};

}  // namespace

std::array<std::uint8_t, kDigestBytes> sha256(std::string_view data) {
    ensure_sodium();
    std::array<std::uint8_t, kDigestBytes> digest{};
    crypto_hash_sha256(digest.data(), reinterpret_cast<const unsigned char*>(data.data()),
                       data.size());
    return digest;
}

std::array<std::uint8_t, kFingerprintBytes> key_fingerprint(std::string_view owner_id) {
    const auto digest = sha256(std::string("mamo-owner:") + std::string(owner_id));
    std::array<std::uint8_t, kFingerprintBytes> fp{};
    std::memcpy(fp.data(), digest.data(), fp.size());
    return fp;
}

OwnerKey OwnerKey::derive(std::string owner_id, std::uint64_t seed) {
    std::string material = "mamo-key:";
    for (int i = 7; i >= 0; --i) material.push_back(static_cast<char>((seed >> (8 * i)) & 0xFF));
    material += ":";
    material += owner_id;
    OwnerKey key;
    key.owner_id = std::move(owner_id);
    const auto digest = sha256(material);
    std::memcpy(key.key_material.data(), digest.data(), kKeyBytes);
    return key;
}

const AeadCipher& default_cipher() {
    static const XChaChaCipher cipher;
    return cipher;
}

}  // namespace mamo::crypto
