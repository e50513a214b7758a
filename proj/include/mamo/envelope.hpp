#pragma once

#include <cstddef>
#include <cstdint>
#include <random>
#include <string>
#include <string_view>
#include <vector>

#include "mamo/authz.hpp"
#include "mamo/crypto.hpp"
#include "mamo/errors.hpp"

namespace mamo::envelope {

using authz::AuthorizationMode;
using crypto::OwnerKey;

enum class Source : std::uint8_t {
    Handset = 0x01,
    BaseStationIN = 0x02,
    Switch = 0x03,
};

const char* to_string(Source source);

// A segment as it travels: visible body text plus an encrypted rule header
// carried entirely in zero-width code points.
struct SealedSegment {
    std::string header;  // invisible-alphabet encoding of the sealed header
    std::string body;    // plain UTF-8 text

    bool operator==(const SealedSegment&) const = default;
};

// Header contents recovered by the owner's key.
struct OpenedSegment {
    std::string text;  // equals the sealed body once the digest checks out
    std::vector<AuthorizationMode> modes;
    std::string owner_id;
    std::size_t padding_len = 0;

    AuthorizationMode mode() const { return modes.front(); }
};

// Fixed section order of a billing message.
inline constexpr std::size_t kInSection = 0;
inline constexpr std::size_t kHandsetSection = 1;
inline constexpr std::size_t kHousekeepingSection = 2;
inline constexpr std::size_t kBillingSectionCount = 3;

struct MamoMessage {
    std::uint64_t correlation_id = 0;
    Source source = Source::Handset;
    std::vector<SealedSegment> sections;

    bool operator==(const MamoMessage&) const = default;
};

class EditRejectedError : public MamoError {
public:
    EditRejectedError(AuthorizationMode mode, authz::RejectCause cause);

    AuthorizationMode mode() const { return mode_; }
    authz::RejectCause cause() const { return cause_; }

private:
    AuthorizationMode mode_;
    authz::RejectCause cause_;
};

// --- invisible-alphabet codec ---------------------------------------------
// Base-4 over U+200B, U+200C, U+200D, U+2060 (digits 0..3), one byte per
// four code points, most significant digit first.

std::string encode_invisible(std::string_view bytes);
std::string decode_invisible(std::string_view text);  // throws InvalidAlphabet
bool is_invisible_alphabet(std::string_view text);

// --- seal / open -----------------------------------------------------------

SealedSegment seal_segment(std::string_view text, AuthorizationMode mode, const OwnerKey& key,
                           std::size_t padding_len, std::mt19937_64& rng);
SealedSegment seal_segment(std::string_view text, const std::vector<AuthorizationMode>& modes,
                           const OwnerKey& key, std::size_t padding_len, std::mt19937_64& rng);

// Throws WrongKey when the key fingerprint disagrees, TamperDetected when
// decryption or the body digest fails.
OpenedSegment open_segment(const SealedSegment& sealed, const OwnerKey& key);

// --- message framing -------------------------------------------------------
// Handset and IN messages carry exactly kBillingSectionCount sections;
// switch messages carry exactly one (the batch payload).

MamoMessage compose_message(std::uint64_t correlation_id, Source source,
                            std::vector<SealedSegment> sections);
std::string serialize_message(const MamoMessage& message);
MamoMessage parse_message(std::string_view frame);  // throws MalformedFrame

// Opens the section with the actor's key, validates the proposed text under
// the section's modes, and reseals. Throws EditRejectedError when the
// grammar refuses the rewrite.
MamoMessage apply_edit(const MamoMessage& message, std::size_t section_index,
                       std::string_view proposed, const OwnerKey& actor_key,
                       std::mt19937_64& rng);

}  // namespace mamo::envelope
