#pragma once

#include <cstdint>
#include <deque>
#include <optional>
#include <random>
#include <string>
#include <string_view>
#include <vector>

#include "mamo/envelope.hpp"
#include "mamo/records.hpp"

namespace mamo::netsim {

using envelope::MamoMessage;
using envelope::Source;

// One call as it actually happened, before any network effects.
struct GroundTruthCall {
    CallId call_id = 0;
    CorrelationId correlation_id = 0;
    std::string caller;
    std::string callee;
    std::int64_t start_time_ms = 0;
    std::int64_t duration_s = 0;
    double signal_strength = 0.0;  // dBm
    double snr = 0.0;              // dB
    Money account_before = 0;
};

void to_json(nlohmann::json& j, const GroundTruthCall& c);
void from_json(const nlohmann::json& j, GroundTruthCall& c);

// Deterministic call population: call_ids 1..count in start-time order,
// distinct start times, distinct correlation_ids.
std::vector<GroundTruthCall> generate_calls(std::size_t count, TimeWindow window,
                                            std::uint64_t seed);

// Keys of the four section owners, derived from the run seed. The billing
// third party holds all of them; each source only ever uses its own.
struct KeyRing {
    crypto::OwnerKey in_key;
    crypto::OwnerKey handset_key;
    crypto::OwnerKey switch_key;
    crypto::OwnerKey third_party_key;

    static KeyRing derive(std::uint64_t seed);
};

// --- section payloads -------------------------------------------------------

struct InPayload {
    CallId call_id = 0;
    std::int64_t start_time_ms = 0;
    std::int64_t charged_duration = 0;
    std::string caller;
    std::string callee;
    Money account_before = 0;

    bool operator==(const InPayload&) const = default;
};

struct HandsetPayload {
    double signal_strength = 0.0;
    double snr = 0.0;

    bool operator==(const HandsetPayload&) const = default;
};

void to_json(nlohmann::json& j, const InPayload& p);
void from_json(const nlohmann::json& j, InPayload& p);
void to_json(nlohmann::json& j, const HandsetPayload& p);
void from_json(const nlohmann::json& j, HandsetPayload& p);

std::string encode_in_payload(const InPayload& p);
std::string encode_handset_payload(const HandsetPayload& p);
// Tolerant of housekeeping annotations around the JSON core.
InPayload decode_in_payload(std::string_view body);
HandsetPayload decode_handset_payload(std::string_view body);

// --- emitters ---------------------------------------------------------------
// Both emitters produce the full three-section layout; sections owned by
// other parties are sealed empty under their canonical keys.

MamoMessage in_emit(const GroundTruthCall& call, const KeyRing& keys, std::mt19937_64& rng);
MamoMessage handset_emit(const GroundTruthCall& call, const KeyRing& keys, std::mt19937_64& rng);

std::int64_t in_emit_time_ms(const GroundTruthCall& call);
std::int64_t handset_emit_time_ms(const GroundTruthCall& call);

// --- AD switch --------------------------------------------------------------
// Buffers x sealed records, restores the buffer into the open schedule, and
// closes the schedule after n restorations. Batches ship only when a probe
// sees low traffic.

class AdSwitch {
public:
    struct Config {
        std::size_t buffer_x = 100;
        std::size_t restorations_n = 10;
        double low_traffic_threshold = 0.3;
        Tariff tariff{};
        std::uint64_t seed = 0;
        crypto::OwnerKey switch_key;  // records are sealed while buffered
    };

    explicit AdSwitch(Config config);

    void ingest(const GroundTruthCall& call);
    // End of run: restores a partial buffer and closes the open schedule.
    void flush();
    // Ships the oldest completed batch when traffic_level is below the
    // threshold; std::nullopt otherwise.
    std::optional<ScheduleBatch> probe(double traffic_level);

    std::size_t buffered_count() const { return buffer_.size(); }
    std::size_t completed_count() const { return completed_.size(); }
    std::size_t ingested_count() const { return ingested_; }
    std::size_t restored_count() const { return restored_; }
    const std::vector<ScheduleBatch>& shipped() const { return shipped_; }

    // Wraps a shipped batch in a single-section switch frame.
    MamoMessage frame_batch(const ScheduleBatch& batch, const crypto::OwnerKey& switch_key,
                            std::mt19937_64& rng) const;
    static ScheduleBatch unframe_batch(const MamoMessage& message,
                                       const crypto::OwnerKey& switch_key);

private:
    void restore_buffer();
    void close_schedule();

    Config config_;
    std::mt19937_64 rng_;
    std::vector<std::pair<envelope::SealedSegment, CallRecord>> buffer_;
    ScheduleBatch current_;
    bool current_open_ = false;
    std::size_t restorations_done_ = 0;
    std::uint64_t next_schedule_seq_ = 1;
    std::deque<ScheduleBatch> completed_;
    std::vector<ScheduleBatch> shipped_;
    std::size_t ingested_ = 0;
    std::size_t restored_ = 0;
};

// --- lossy channel ------------------------------------------------------------

struct ChannelConfig {
    double in_drop_probability = 0.0;
    double handset_loss_probability = 0.0;
    std::uint32_t reorder_window = 0;   // max positions a message may slip
    std::int64_t delay_min_ms = 0;
    std::int64_t delay_max_ms = 0;
    std::uint64_t seed = 0;
};

void to_json(nlohmann::json& j, const ChannelConfig& c);
void from_json(const nlohmann::json& j, ChannelConfig& c);

struct Emission {
    MamoMessage message;
    std::int64_t emit_time_ms = 0;
};

struct Delivery {
    MamoMessage message;
    std::int64_t delivery_time_ms = 0;
};

struct DropRecord {
    CorrelationId correlation_id = 0;
    Source source = Source::Handset;
};

struct DeliveryResult {
    std::vector<Delivery> delivered;
    std::vector<DropRecord> dropped;
};

// Drop, delay and displacement are pure functions of (seed, correlation_id,
// source), so per-message outcomes do not depend on stream order.
DeliveryResult deliver(const std::vector<Emission>& emissions, const ChannelConfig& channel);

}  // namespace mamo::netsim
