#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <functional>
#include <optional>
#include <random>
#include <string>
#include <vector>

#include "doctest.h"
#include "mamo/envelope.hpp"

using mamo::ErrorCode;
using mamo::MamoError;
using namespace mamo::envelope;
using mamo::authz::AuthorizationMode;
using mamo::crypto::OwnerKey;

namespace {

std::optional<ErrorCode> code_of(const std::function<void()>& f) {
    try {
        f();
    } catch (const MamoError& e) {
        return e.code();
    }
    return std::nullopt;
}

OwnerKey key_for(const std::string& owner) { return OwnerKey::derive(owner, 7); }

}  // namespace

TEST_CASE("invisible codec round-trips every byte value") {
    std::string bytes;
    for (int b = 0; b < 256; ++b) bytes.push_back(static_cast<char>(b));
    const std::string encoded = encode_invisible(bytes);
    CHECK(is_invisible_alphabet(encoded));
    // Four code points per byte, three UTF-8 bytes per code point.
    CHECK(encoded.size() == bytes.size() * 4 * 3);
    CHECK(decode_invisible(encoded) == bytes);

    CHECK(encode_invisible("").empty());
    CHECK(decode_invisible("").empty());
}

TEST_CASE("codec rejects visible or truncated input") {
    CHECK_FALSE(is_invisible_alphabet("abc"));
    CHECK(code_of([] { decode_invisible("abc"); }) == ErrorCode::InvalidAlphabet);

    const std::string encoded = encode_invisible("x");
    // Dropping one code point leaves a dangling digit group.
    const std::string truncated = encoded.substr(0, encoded.size() - 3);
    CHECK(code_of([&] { decode_invisible(truncated); }) == ErrorCode::InvalidAlphabet);

    // A visible character embedded inside an otherwise valid run.
    CHECK(code_of([&] { decode_invisible(encoded + "x"); }) == ErrorCode::InvalidAlphabet);
}

TEST_CASE("seal and open round-trip text, modes, owner and padding") {
    std::mt19937_64 rng(42);
    const OwnerKey key = key_for("handset-owner");
    const SealedSegment sealed =
        seal_segment("signal=17;snr=204", AuthorizationMode::AddEnd, key, 16, rng);

    CHECK(sealed.body == "signal=17;snr=204");
    CHECK(is_invisible_alphabet(sealed.header));

    const OpenedSegment opened = open_segment(sealed, key);
    CHECK(opened.text == "signal=17;snr=204");
    CHECK(opened.mode() == AuthorizationMode::AddEnd);
    CHECK(opened.owner_id == "handset-owner");
    CHECK(opened.padding_len == 16);
}

TEST_CASE("padding only changes the header, never the body") {
    std::mt19937_64 rng(1);
    const OwnerKey key = key_for("o");
    const SealedSegment a = seal_segment("t", AuthorizationMode::ReadOnly, key, 0, rng);
    const SealedSegment b = seal_segment("t", AuthorizationMode::ReadOnly, key, 64, rng);
    CHECK(a.body == b.body);
    CHECK(b.header.size() > a.header.size());
    CHECK(open_segment(a, key).padding_len == 0);
    CHECK(open_segment(b, key).padding_len == 64);
}

TEST_CASE("mode vectors are preserved and checked for compatibility") {
    std::mt19937_64 rng(3);
    const OwnerKey key = key_for("o");
    const std::vector<AuthorizationMode> modes = {AuthorizationMode::AddBeginning,
                                                  AuthorizationMode::AddEnd};
    const SealedSegment sealed = seal_segment("t", modes, key, 0, rng);
    CHECK(open_segment(sealed, key).modes == modes);

    CHECK(code_of([&] {
              std::mt19937_64 r(4);
              seal_segment("t", std::vector<AuthorizationMode>{}, key, 0, r);
          }) == ErrorCode::IncompatibleModeSet);
    CHECK(code_of([&] {
              std::mt19937_64 r(4);
              seal_segment("t",
                           {AuthorizationMode::ReadOnly, AuthorizationMode::AddWithoutAlter},
                           key, 0, r);
          }) == ErrorCode::IncompatibleModeSet);
}

TEST_CASE("opening with a different owner key reports WrongKey") {
    std::mt19937_64 rng(5);
    const SealedSegment sealed =
        seal_segment("t", AuthorizationMode::ReadOnly, key_for("alice"), 8, rng);
    CHECK(code_of([&] { open_segment(sealed, key_for("bob")); }) == ErrorCode::WrongKey);
}

TEST_CASE("body tampering is detected by the sealed digest") {
    std::mt19937_64 rng(6);
    const OwnerKey key = key_for("o");
    SealedSegment sealed = seal_segment("abc", AuthorizationMode::AddEnd, key, 8, rng);
    sealed.body[1] = 'X';
    CHECK(code_of([&] { open_segment(sealed, key); }) == ErrorCode::TamperDetected);

    // Appending without resealing is tampering too, even though the grammar
    // would allow the text under AddEnd.
    SealedSegment appended = seal_segment("abc", AuthorizationMode::AddEnd, key, 8, rng);
    appended.body += "z";
    CHECK(code_of([&] { open_segment(appended, key); }) == ErrorCode::TamperDetected);
}

TEST_CASE("every single-bit corruption of a sealed segment fails to open") {
    std::mt19937_64 rng(7);
    const OwnerKey key = key_for("sweep-owner");
    const SealedSegment sealed =
        seal_segment("duration=61", AuthorizationMode::AddBeginning, key, 4, rng);

    // Untampered control.
    CHECK(open_segment(sealed, key).text == "duration=61");

    std::size_t failures = 0;
    std::size_t total = 0;
    for (int part = 0; part < 2; ++part) {
        const std::string& original = part == 0 ? sealed.header : sealed.body;
        for (std::size_t byte = 0; byte < original.size(); ++byte) {
            for (int bit = 0; bit < 8; ++bit) {
                SealedSegment corrupt = sealed;
                std::string& target = part == 0 ? corrupt.header : corrupt.body;
                target[byte] = static_cast<char>(target[byte] ^ (1 << bit));
                ++total;
                if (code_of([&] { open_segment(corrupt, key); }).has_value()) ++failures;
            }
        }
    }
    CHECK(total > 0);
    CHECK(failures == total);
}

TEST_CASE("frames serialize to the fixed layout and parse back") {
    std::mt19937_64 rng(8);
    const OwnerKey key = key_for("o");
    std::vector<SealedSegment> sections;
    sections.push_back(seal_segment("in", AuthorizationMode::AddBeginning, key, 0, rng));
    sections.push_back(seal_segment("hs", AuthorizationMode::AddEnd, key, 0, rng));
    sections.push_back(seal_segment("", AuthorizationMode::AddWithoutAlter, key, 0, rng));

    const MamoMessage msg = compose_message(0x0102030405060708ULL, Source::BaseStationIN,
                                            std::move(sections));
    const std::string frame = serialize_message(msg);

    REQUIRE(frame.size() >= 15);
    CHECK(frame.substr(0, 4) == "MAMO");
    CHECK(static_cast<unsigned char>(frame[4]) == 0x01);
    const unsigned char corr_be[8] = {0x01, 0x02, 0x03, 0x04, 0x05, 0x06, 0x07, 0x08};
    for (int i = 0; i < 8; ++i) {
        CHECK(static_cast<unsigned char>(frame[5 + i]) == corr_be[i]);
    }
    CHECK(static_cast<unsigned char>(frame[13]) == 0x02);  // base station IN
    CHECK(static_cast<unsigned char>(frame[14]) == 3);     // section count

    CHECK(parse_message(frame) == msg);
}

TEST_CASE("switch frames carry exactly one section") {
    std::mt19937_64 rng(9);
    const OwnerKey key = key_for("switch");
    std::vector<SealedSegment> one;
    one.push_back(seal_segment("{}", AuthorizationMode::ReadOnly, key, 0, rng));
    const MamoMessage msg = compose_message(77, Source::Switch, std::move(one));
    CHECK(parse_message(serialize_message(msg)) == msg);

    std::vector<SealedSegment> two;
    two.push_back(seal_segment("{}", AuthorizationMode::ReadOnly, key, 0, rng));
    two.push_back(seal_segment("{}", AuthorizationMode::ReadOnly, key, 0, rng));
    CHECK(code_of([&] { compose_message(77, Source::Switch, std::move(two)); }) ==
          ErrorCode::MalformedFrame);
}

TEST_CASE("frame parsing rejects malformed input") {
    std::mt19937_64 rng(10);
    const OwnerKey key = key_for("o");
    std::vector<SealedSegment> sections;
    for (int i = 0; i < 3; ++i) {
        sections.push_back(seal_segment("x", AuthorizationMode::AddWithAlter, key, 0, rng));
    }
    const std::string frame =
        serialize_message(compose_message(5, Source::Handset, std::move(sections)));

    CHECK(code_of([] { parse_message(""); }) == ErrorCode::MalformedFrame);
    CHECK(code_of([&] { parse_message(frame.substr(0, frame.size() - 1)); }) ==
          ErrorCode::MalformedFrame);
    CHECK(code_of([&] { parse_message(frame + std::string(1, '\0')); }) ==
          ErrorCode::MalformedFrame);

    std::string bad_magic = frame;
    bad_magic[0] = 'X';
    CHECK(code_of([&] { parse_message(bad_magic); }) == ErrorCode::MalformedFrame);

    std::string bad_version = frame;
    bad_version[4] = 0x02;
    CHECK(code_of([&] { parse_message(bad_version); }) == ErrorCode::MalformedFrame);

    std::string bad_source = frame;
    bad_source[13] = 0x09;
    CHECK(code_of([&] { parse_message(bad_source); }) == ErrorCode::MalformedFrame);
}

TEST_CASE("apply_edit validates, reseals and leaves other sections intact") {
    std::mt19937_64 rng(11);
    const OwnerKey in_key = key_for("in");
    const OwnerKey handset_key = key_for("handset");
    const OwnerKey third_key = key_for("third-party");

    std::vector<SealedSegment> sections;
    sections.push_back(seal_segment("dur=61", AuthorizationMode::AddBeginning, in_key, 0, rng));
    sections.push_back(seal_segment("sig=9", AuthorizationMode::AddEnd, handset_key, 0, rng));
    sections.push_back(seal_segment("", AuthorizationMode::AddWithoutAlter, third_key, 0, rng));
    const MamoMessage msg = compose_message(1, Source::BaseStationIN, std::move(sections));

    SUBCASE("a grammar-approved rewrite succeeds") {
        const MamoMessage edited =
            apply_edit(msg, kInSection, "#rcv=5;dur=61", in_key, rng);
        CHECK(edited.sections[kInSection].body == "#rcv=5;dur=61");
        CHECK(open_segment(edited.sections[kInSection], in_key).text == "#rcv=5;dur=61");
        // Untouched sections stay byte-identical.
        CHECK(edited.sections[kHandsetSection] == msg.sections[kHandsetSection]);
        CHECK(edited.sections[kHousekeepingSection] == msg.sections[kHousekeepingSection]);
        CHECK(edited.correlation_id == msg.correlation_id);
    }

    SUBCASE("a forbidden rewrite raises EditRejectedError") {
        bool caught = false;
        try {
            apply_edit(msg, kInSection, "dur=61;late", in_key, rng);
        } catch (const EditRejectedError& e) {
            caught = true;
            CHECK(e.code() == ErrorCode::EditRejected);
            CHECK(e.mode() == AuthorizationMode::AddBeginning);
            CHECK(e.cause() == mamo::authz::RejectCause::NotSuffixOfProposed);
        }
        CHECK(caught);
    }

    SUBCASE("the wrong actor key cannot edit the section") {
        CHECK(code_of([&] { apply_edit(msg, kInSection, "x;dur=61", handset_key, rng); }) ==
              ErrorCode::WrongKey);
    }
}
