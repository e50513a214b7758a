#include "mamo/envelope.hpp"

#include <algorithm>
#include <cstring>

namespace mamo::envelope {
namespace {

// UTF-8 forms of the four carrier code points, digit value = array index.
// U+200B zero width space, U+200C ZWNJ, U+200D ZWJ, U+2060 word joiner.
constexpr const char* kDigits[4] = {"\xE2\x80\x8B", "\xE2\x80\x8C", "\xE2\x80\x8D",
                                    "\xE2\x81\xA0"};
constexpr std::size_t kDigitBytes = 3;

int digit_value(std::string_view chunk) {
    for (int d = 0; d < 4; ++d) {
        if (chunk == kDigits[d]) return d;
    }
    return -1;
}

std::string random_bytes(std::size_t count, std::mt19937_64& rng) {
    std::string out;
    out.reserve(count);
    std::uint64_t word = 0;
    std::size_t left = 0;
    for (std::size_t i = 0; i < count; ++i) {
        if (left == 0) {
            word = rng();
            left = 8;
        }
        out.push_back(static_cast<char>(word & 0xFF));
        word >>= 8;
        --left;
    }
    return out;
}

void put_u32_be(std::string& out, std::uint32_t v) {
    for (int i = 3; i >= 0; --i) out.push_back(static_cast<char>((v >> (8 * i)) & 0xFF));
}

void put_u64_be(std::string& out, std::uint64_t v) {
    for (int i = 7; i >= 0; --i) out.push_back(static_cast<char>((v >> (8 * i)) & 0xFF));
}

class FrameReader {
public:
    explicit FrameReader(std::string_view frame) : frame_(frame) {}

    std::string_view take(std::size_t n, const char* what) {
        if (frame_.size() - pos_ < n) {
            raise(ErrorCode::MalformedFrame, std::string("truncated frame: ") + what);
        }
        std::string_view out = frame_.substr(pos_, n);
        pos_ += n;
        return out;
    }

    std::uint8_t take_u8(const char* what) {
        return static_cast<std::uint8_t>(take(1, what)[0]);
    }

    std::uint32_t take_u32_be(const char* what) {
        std::string_view b = take(4, what);
        std::uint32_t v = 0;
        for (char c : b) v = (v << 8) | static_cast<std::uint8_t>(c);
        return v;
    }

    std::uint64_t take_u64_be(const char* what) {
        std::string_view b = take(8, what);
        std::uint64_t v = 0;
        for (char c : b) v = (v << 8) | static_cast<std::uint8_t>(c);
        return v;
    }

    bool done() const { return pos_ == frame_.size(); }

private:
    std::string_view frame_;
    std::size_t pos_ = 0;
};

std::uint8_t mode_byte(AuthorizationMode mode) {
    return static_cast<std::uint8_t>(static_cast<int>(mode) + 1);
}

AuthorizationMode mode_from_byte(std::uint8_t b) {
    if (b < 1 || b > 5) raise(ErrorCode::TamperDetected, "invalid mode byte in header");
    return static_cast<AuthorizationMode>(b - 1);
}

std::size_t expected_section_count(Source source) {
    return source == Source::Switch ? 1 : kBillingSectionCount;
}

}  // namespace

const char* to_string(Source source) {
    switch (source) {
    case Source::Handset: return "handset";
    case Source::BaseStationIN: return "in";
    case Source::Switch: return "switch";
    }
    return "unknown";
}

EditRejectedError::EditRejectedError(AuthorizationMode mode, authz::RejectCause cause)
    : MamoError(ErrorCode::EditRejected, std::string("mode=") + authz::to_string(mode) +
                                             " cause=" + authz::to_string(cause)),
      mode_(mode),
      cause_(cause) {}

std::string encode_invisible(std::string_view bytes) {
    std::string out;
    out.reserve(bytes.size() * 4 * kDigitBytes);
    for (char c : bytes) {
        const auto b = static_cast<std::uint8_t>(c);
        out.append(kDigits[(b >> 6) & 3]);
        out.append(kDigits[(b >> 4) & 3]);
        out.append(kDigits[(b >> 2) & 3]);
        out.append(kDigits[b & 3]);
    }
    return out;
}

std::string decode_invisible(std::string_view text) {
    if (text.size() % (4 * kDigitBytes) != 0) {
        raise(ErrorCode::InvalidAlphabet, "carrier text length is not a whole byte count");
    }
    std::string out;
    out.reserve(text.size() / (4 * kDigitBytes));
    for (std::size_t i = 0; i < text.size(); i += 4 * kDigitBytes) {
        int value = 0;
        for (std::size_t d = 0; d < 4; ++d) {
            const int digit = digit_value(text.substr(i + d * kDigitBytes, kDigitBytes));
            if (digit < 0) raise(ErrorCode::InvalidAlphabet, "non-carrier code point");
            value = (value << 2) | digit;
        }
        out.push_back(static_cast<char>(value));
    }
    return out;
}

bool is_invisible_alphabet(std::string_view text) {
    for (std::size_t i = 0; i + kDigitBytes <= text.size(); ++i) {
        if (digit_value(text.substr(i, kDigitBytes)) >= 0) return true;
    }
    return false;
}

SealedSegment seal_segment(std::string_view text, AuthorizationMode mode, const OwnerKey& key,
                           std::size_t padding_len, std::mt19937_64& rng) {
    return seal_segment(text, std::vector<AuthorizationMode>{mode}, key, padding_len, rng);
}

SealedSegment seal_segment(std::string_view text, const std::vector<AuthorizationMode>& modes,
                           const OwnerKey& key, std::size_t padding_len, std::mt19937_64& rng) {
    if (modes.empty()) raise(ErrorCode::IncompatibleModeSet, "segment needs at least one mode");
    if (is_invisible_alphabet(text)) {
        raise(ErrorCode::InvalidText, "body must not contain carrier code points");
    }
    if (padding_len > 0xFFFF) raise(ErrorCode::ConfigError, "padding too large");
    if (key.owner_id.empty() || key.owner_id.size() > 0xFF) {
        raise(ErrorCode::ConfigError, "owner id must be 1..255 bytes");
    }

    std::vector<AuthorizationMode> distinct;
    for (AuthorizationMode m : modes) {
        if (std::find(distinct.begin(), distinct.end(), m) == distinct.end())
            distinct.push_back(m);
    }
    for (AuthorizationMode a : distinct) {
        for (AuthorizationMode b : distinct) {
            if (a != b && !authz::is_compatible(a, b)) {
                raise(ErrorCode::IncompatibleModeSet,
                      std::string(authz::to_string(a)) + " does not admit " +
                          authz::to_string(b));
            }
        }
    }

    const auto digest = crypto::sha256(text);
    std::string plain;
    plain.push_back(static_cast<char>(key.owner_id.size()));
    plain.append(key.owner_id);
    plain.push_back(static_cast<char>(distinct.size()));
    for (AuthorizationMode m : distinct) plain.push_back(static_cast<char>(mode_byte(m)));
    plain.append(reinterpret_cast<const char*>(digest.data()), digest.size());
    plain.push_back(static_cast<char>((padding_len >> 8) & 0xFF));
    plain.push_back(static_cast<char>(padding_len & 0xFF));
    plain.append(random_bytes(padding_len, rng));

    const crypto::AeadCipher& cipher = crypto::default_cipher();
    const std::string nonce = random_bytes(cipher.nonce_bytes(), rng);
    const std::string ciphertext = cipher.encrypt(key, nonce, plain);

    const auto fp = crypto::key_fingerprint(key.owner_id);
    std::string raw;
    raw.append(reinterpret_cast<const char*>(fp.data()), fp.size());
    raw.append(nonce);
    raw.append(ciphertext);

    SealedSegment sealed;
    sealed.header = encode_invisible(raw);
    sealed.body = std::string(text);
    return sealed;
}

OpenedSegment open_segment(const SealedSegment& sealed, const OwnerKey& key) {
    std::string raw;
    try {
        raw = decode_invisible(sealed.header);
    } catch (const MamoError&) {
        raise(ErrorCode::TamperDetected, "rule header distorted");
    }

    const crypto::AeadCipher& cipher = crypto::default_cipher();
    const std::size_t fp_len = crypto::kFingerprintBytes;
    if (raw.size() < fp_len + cipher.nonce_bytes()) {
        raise(ErrorCode::TamperDetected, "rule header too short");
    }

    const auto fp = crypto::key_fingerprint(key.owner_id);
    if (std::memcmp(raw.data(), fp.data(), fp_len) != 0) {
        raise(ErrorCode::WrongKey, "segment is owned by a different key");
    }

    const std::string_view nonce(raw.data() + fp_len, cipher.nonce_bytes());
    const std::string_view ciphertext(raw.data() + fp_len + cipher.nonce_bytes(),
                                      raw.size() - fp_len - cipher.nonce_bytes());
    std::string plain;
    if (!cipher.decrypt(key, nonce, ciphertext, plain)) {
        raise(ErrorCode::TamperDetected, "rule header fails authentication");
    }

    // Header layout: owner, modes, body digest, padding.
    std::size_t pos = 0;
    auto need = [&](std::size_t n, const char* what) {
        if (plain.size() - pos < n) {
            raise(ErrorCode::TamperDetected, std::string("rule header truncated: ") + what);
        }
    };
    need(1, "owner length");
    const std::size_t owner_len = static_cast<std::uint8_t>(plain[pos++]);
    need(owner_len, "owner id");
    std::string owner_id = plain.substr(pos, owner_len);
    pos += owner_len;
    if (owner_id != key.owner_id) raise(ErrorCode::WrongKey, "owner id mismatch");

    need(1, "mode count");
    const std::size_t mode_count = static_cast<std::uint8_t>(plain[pos++]);
    if (mode_count == 0) raise(ErrorCode::TamperDetected, "empty mode set in header");
    need(mode_count, "mode bytes");
    std::vector<AuthorizationMode> modes;
    for (std::size_t i = 0; i < mode_count; ++i) {
        modes.push_back(mode_from_byte(static_cast<std::uint8_t>(plain[pos++])));
    }

    need(crypto::kDigestBytes, "digest");
    std::array<std::uint8_t, crypto::kDigestBytes> digest{};
    std::memcpy(digest.data(), plain.data() + pos, crypto::kDigestBytes);
    pos += crypto::kDigestBytes;

    need(2, "padding length");
    const std::size_t pad_len = (static_cast<std::uint8_t>(plain[pos]) << 8) |
                                static_cast<std::uint8_t>(plain[pos + 1]);
    pos += 2;
    if (plain.size() - pos != pad_len) {
        raise(ErrorCode::TamperDetected, "padding length mismatch");
    }

    if (crypto::sha256(sealed.body) != digest) {
        raise(ErrorCode::TamperDetected, "body does not match sealed digest");
    }

    OpenedSegment opened;
    opened.text = sealed.body;
    opened.modes = std::move(modes);
    opened.owner_id = std::move(owner_id);
    opened.padding_len = pad_len;
    return opened;
}

MamoMessage compose_message(std::uint64_t correlation_id, Source source,
                            std::vector<SealedSegment> sections) {
    if (sections.size() != expected_section_count(source)) {
        raise(ErrorCode::MalformedFrame,
              std::string("wrong section count for source ") + to_string(source));
    }
    MamoMessage m;
    m.correlation_id = correlation_id;
    m.source = source;
    m.sections = std::move(sections);
    return m;
}

std::string serialize_message(const MamoMessage& message) {
    if (message.sections.size() != expected_section_count(message.source) ||
        message.sections.size() > 0xFF) {
        raise(ErrorCode::MalformedFrame, "wrong section count for source");
    }
    std::string out = "MAMO";
    out.push_back(0x01);
    put_u64_be(out, message.correlation_id);
    out.push_back(static_cast<char>(message.source));
    out.push_back(static_cast<char>(message.sections.size()));
    for (const SealedSegment& s : message.sections) {
        put_u32_be(out, static_cast<std::uint32_t>(s.header.size()));
        out.append(s.header);
        put_u32_be(out, static_cast<std::uint32_t>(s.body.size()));
        out.append(s.body);
    }
    return out;
}

MamoMessage parse_message(std::string_view frame) {
    FrameReader reader(frame);
    if (reader.take(4, "magic") != "MAMO") raise(ErrorCode::MalformedFrame, "bad magic");
    if (reader.take_u8("version") != 0x01) raise(ErrorCode::MalformedFrame, "unknown version");

    MamoMessage m;
    m.correlation_id = reader.take_u64_be("correlation id");
    const std::uint8_t source_byte = reader.take_u8("source");
    if (source_byte < 1 || source_byte > 3) raise(ErrorCode::MalformedFrame, "unknown source");
    m.source = static_cast<Source>(source_byte);

    const std::size_t count = reader.take_u8("section count");
    if (count != expected_section_count(m.source)) {
        raise(ErrorCode::MalformedFrame, "wrong section count for source");
    }
    for (std::size_t i = 0; i < count; ++i) {
        SealedSegment s;
        const std::uint32_t header_len = reader.take_u32_be("header length");
        s.header = std::string(reader.take(header_len, "header bytes"));
        const std::uint32_t body_len = reader.take_u32_be("body length");
        s.body = std::string(reader.take(body_len, "body bytes"));
        m.sections.push_back(std::move(s));
    }
    if (!reader.done()) raise(ErrorCode::MalformedFrame, "trailing bytes after last section");
    return m;
}

MamoMessage apply_edit(const MamoMessage& message, std::size_t section_index,
                       std::string_view proposed, const OwnerKey& actor_key,
                       std::mt19937_64& rng) {
    if (section_index >= message.sections.size()) {
        raise(ErrorCode::ConfigError, "section index out of range");
    }
    const OpenedSegment opened = open_segment(message.sections[section_index], actor_key);

    authz::ValidationResult verdict =
        opened.modes.size() == 1
            ? authz::validate_edit(opened.text, proposed, opened.modes.front())
            : authz::combined_validate(opened.text, proposed, opened.modes);
    if (!verdict.accepted) {
        // Attribute the rejection to the most restrictive refusing mode.
        std::vector<AuthorizationMode> sorted = opened.modes;
        std::sort(sorted.begin(), sorted.end());
        for (AuthorizationMode m : sorted) {
            authz::ValidationResult r = authz::validate_edit(opened.text, proposed, m);
            if (!r.accepted) throw EditRejectedError(m, r.cause);
        }
        throw EditRejectedError(opened.modes.front(), verdict.cause);
    }

    MamoMessage edited = message;
    edited.sections[section_index] =
        seal_segment(proposed, opened.modes, actor_key, opened.padding_len, rng);
    return edited;
}

}  // namespace mamo::envelope
