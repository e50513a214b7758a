#include "mamo/authz.hpp"

#include <algorithm>
#include <stdexcept>

#include "mamo/errors.hpp"

namespace mamo::authz {
namespace {

// Length in bytes of the UTF-8 code point starting at `pos`. Stray or
// truncated sequences count as single-byte symbols so validation stays
// total over arbitrary byte strings.
std::size_t code_point_len(std::string_view text, std::size_t pos) {
    const auto lead = static_cast<unsigned char>(text[pos]);
    std::size_t len = 1;
    if (lead >= 0xF0) {
        len = 4;
    } else if (lead >= 0xE0) {
        len = 3;
    } else if (lead >= 0xC0) {
        len = 2;
    } else {
        return 1;
    }
    len = std::min(len, text.size() - pos);
    for (std::size_t i = 1; i < len; ++i) {
        if ((static_cast<unsigned char>(text[pos + i]) & 0xC0) != 0x80) return 1;
    }
    return len;
}

ValidationResult accept(std::vector<Insertion> witness) {
    ValidationResult r;
    r.accepted = true;
    r.witness = std::move(witness);
    return r;
}

ValidationResult reject(RejectCause cause) {
    ValidationResult r;
    r.accepted = false;
    r.cause = cause;
    return r;
}

// Greedy leftmost match of `original` as a code point subsequence of
// `proposed`. Unmatched proposed runs become the insertion witness.
ValidationResult subsequence_witness(std::string_view original, std::string_view proposed) {
    std::vector<Insertion> runs;
    std::size_t oi = 0;
    std::size_t pi = 0;
    while (pi < proposed.size()) {
        const std::size_t plen = code_point_len(proposed, pi);
        if (oi < original.size()) {
            const std::size_t olen = code_point_len(original, oi);
            if (plen == olen && proposed.substr(pi, plen) == original.substr(oi, olen)) {
                oi += olen;
                pi += plen;
                continue;
            }
        }
        if (!runs.empty() && runs.back().position == oi) {
            runs.back().text.append(proposed.substr(pi, plen));
        } else {
            runs.push_back({oi, std::string(proposed.substr(pi, plen))});
        }
        pi += plen;
    }
    if (oi != original.size()) return reject(RejectCause::NotSubsequence);
    return accept(std::move(runs));
}

// Row = mode already on the segment, column = mode being granted.
// Order: ReadOnly, AddBeginning, AddEnd, AddWithoutAlter, AddWithAlter.
constexpr bool kCompatibility[5][5] = {
    {false, true, true, false, false},
    {true, false, true, true, false},
    {true, true, false, true, false},
    {false, true, true, false, false},
    {false, true, true, false, false},
};

std::size_t mode_index(AuthorizationMode mode) { return static_cast<std::size_t>(mode); }

}  // namespace

const char* to_string(AuthorizationMode mode) {
    switch (mode) {
    case AuthorizationMode::ReadOnly: return "ReadOnly";
    case AuthorizationMode::AddBeginning: return "AddBeginning";
    case AuthorizationMode::AddEnd: return "AddEnd";
    case AuthorizationMode::AddWithoutAlter: return "AddWithoutAlter";
    case AuthorizationMode::AddWithAlter: return "AddWithAlter";
    }
    return "Unknown";
}

const char* to_string(RejectCause cause) {
    switch (cause) {
    case RejectCause::None: return "None";
    case RejectCause::TextAltered: return "TextAltered";
    case RejectCause::NotSuffixOfProposed: return "NotSuffixOfProposed";
    case RejectCause::NotPrefixOfProposed: return "NotPrefixOfProposed";
    case RejectCause::NotSubsequence: return "NotSubsequence";
    }
    return "None";
}

ValidationResult validate_edit(std::string_view original, std::string_view proposed,
                               AuthorizationMode mode) {
    switch (mode) {
    case AuthorizationMode::ReadOnly:
        if (proposed == original) return accept({});
        return reject(RejectCause::TextAltered);

    case AuthorizationMode::AddBeginning: {
        if (proposed.size() >= original.size() && proposed.ends_with(original)) {
            std::string_view head = proposed.substr(0, proposed.size() - original.size());
            std::vector<Insertion> witness;
            if (!head.empty()) witness.push_back({0, std::string(head)});
            return accept(std::move(witness));
        }
        return reject(RejectCause::NotSuffixOfProposed);
    }

    case AuthorizationMode::AddEnd: {
        if (proposed.size() >= original.size() && proposed.starts_with(original)) {
            std::string_view tail = proposed.substr(original.size());
            std::vector<Insertion> witness;
            if (!tail.empty()) witness.push_back({original.size(), std::string(tail)});
            return accept(std::move(witness));
        }
        return reject(RejectCause::NotPrefixOfProposed);
    }

    case AuthorizationMode::AddWithoutAlter:
        return subsequence_witness(original, proposed);

    case AuthorizationMode::AddWithAlter:
        return accept({});
    }
    return reject(RejectCause::None);
}

std::string replay_witness(std::string_view original, const std::vector<Insertion>& witness) {
    std::string result;
    std::size_t cursor = 0;
    for (const Insertion& ins : witness) {
        if (ins.position < cursor || ins.position > original.size()) {
            throw std::out_of_range("replay_witness: insertion position out of order");
        }
        result.append(original.substr(cursor, ins.position - cursor));
        result.append(ins.text);
        cursor = ins.position;
    }
    result.append(original.substr(cursor));
    return result;
}

bool is_compatible(AuthorizationMode existing, AuthorizationMode added) {
    if (existing == added) {
        raise(ErrorCode::UndefinedDiagonal,
              std::string("compatibility of ") + to_string(existing) + " with itself");
    }
    return kCompatibility[mode_index(existing)][mode_index(added)];
}

ValidationResult combined_validate(std::string_view original, std::string_view proposed,
                                   const std::vector<AuthorizationMode>& modes) {
    std::vector<AuthorizationMode> distinct;
    for (AuthorizationMode m : modes) {
        if (std::find(distinct.begin(), distinct.end(), m) == distinct.end())
            distinct.push_back(m);
    }
    if (distinct.empty()) raise(ErrorCode::IncompatibleModeSet, "mode set must be non-empty");

    for (AuthorizationMode a : distinct) {
        for (AuthorizationMode b : distinct) {
            if (a == b) continue;
            if (!is_compatible(a, b)) {
                raise(ErrorCode::IncompatibleModeSet,
                      std::string(to_string(a)) + " does not admit " + to_string(b));
            }
        }
    }

    // Evaluate in restrictiveness order so the verdict and witness are
    // deterministic regardless of how the caller ordered the set.
    std::sort(distinct.begin(), distinct.end());
    ValidationResult chosen;
    bool have_chosen = false;
    for (AuthorizationMode m : distinct) {
        ValidationResult r = validate_edit(original, proposed, m);
        if (!r.accepted) return r;
        if (!have_chosen) {
            chosen = std::move(r);
            have_chosen = true;
        }
    }
    return chosen;
}

}  // namespace mamo::authz
