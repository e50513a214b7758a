#pragma once

#include <cstddef>
#include <string>
#include <string_view>
#include <vector>

namespace mamo::authz {

// Edit-rights mode attached to a message segment. Each mode admits a
// different family of rewrites of the segment text.
enum class AuthorizationMode {
    ReadOnly,
    AddBeginning,
    AddEnd,
    AddWithoutAlter,
    AddWithAlter,
};

inline constexpr AuthorizationMode kAllModes[] = {
    AuthorizationMode::ReadOnly,      AuthorizationMode::AddBeginning,
    AuthorizationMode::AddEnd,        AuthorizationMode::AddWithoutAlter,
    AuthorizationMode::AddWithAlter,
};

const char* to_string(AuthorizationMode mode);

enum class RejectCause {
    None,
    TextAltered,          // ReadOnly: proposed text differs from the original
    NotSuffixOfProposed,  // AddBeginning: original is not a suffix of proposed
    NotPrefixOfProposed,  // AddEnd: original is not a prefix of proposed
    NotSubsequence,       // AddWithoutAlter: original chars lost or reordered
};

const char* to_string(RejectCause cause);

// One inserted run of text. `position` is a byte offset into the original
// (always on a code point boundary); the run goes immediately before it.
struct Insertion {
    std::size_t position = 0;
    std::string text;

    bool operator==(const Insertion&) const = default;
};

// Verdict plus evidence. For the four insert-only modes, replaying the
// witness over the original reproduces the proposed text exactly.
// AddWithAlter places no constraint, so it carries no witness.
struct ValidationResult {
    bool accepted = false;
    std::vector<Insertion> witness;
    RejectCause cause = RejectCause::None;
};

// Decides whether `proposed` is a legal rewrite of `original` under `mode`.
// Text is treated as UTF-8; matching is at code point granularity.
ValidationResult validate_edit(std::string_view original, std::string_view proposed,
                               AuthorizationMode mode);

// Applies witness insertions to the original. Positions must be
// non-decreasing byte offsets within the original.
std::string replay_witness(std::string_view original, const std::vector<Insertion>& witness);

// Asymmetric compatibility: may a segment already authorized as `existing`
// additionally grant `added` to another party? Throws UndefinedDiagonal
// when existing == added.
bool is_compatible(AuthorizationMode existing, AuthorizationMode added);

// Intersection semantics over a non-empty mode set: the edit must be legal
// under every mode. Throws IncompatibleModeSet when any ordered pair of
// distinct modes is not compatible. The returned witness comes from the
// most restrictive accepting mode.
ValidationResult combined_validate(std::string_view original, std::string_view proposed,
                                   const std::vector<AuthorizationMode>& modes);

}  // namespace mamo::authz
