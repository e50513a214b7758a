#pragma once

#include <cstdint>
#include <map>
#include <optional>
#include <random>
#include <string>
#include <vector>

#include "mamo/envelope.hpp"
#include "mamo/netsim.hpp"
#include "mamo/records.hpp"

namespace mamo::reconciler {

using envelope::MamoMessage;
using envelope::Source;

// Where a billing record's handset half came from.
enum class Provenance { FullyReconciled, BilledWithoutHandset };

const char* to_string(Provenance p);

struct HandsetFields {
    double signal_strength = 0.0;
    double snr = 0.0;
};

struct Housekeeping {
    std::optional<std::int64_t> in_received_ms;
    std::optional<std::int64_t> handset_received_ms;
    std::string operator_id;
};

// Output of the top reconciliation wing: the paired (or policy-billed)
// record, later tagged with the schedule whose window covers its call.
struct ReconciledRecord {
    CorrelationId correlation_id = 0;
    CallId call_id = 0;
    netsim::InPayload in_fields;
    std::optional<HandsetFields> handset_fields;
    Housekeeping housekeeping;
    std::uint64_t billing_schedule_id = 0;  // 0 until tagged
    Provenance provenance = Provenance::FullyReconciled;
};

void to_json(nlohmann::json& j, const ReconciledRecord& r);
void from_json(const nlohmann::json& j, ReconciledRecord& r);

enum class MissingHandsetPolicy { BillWithoutReconciliation, Reject };
enum class MissingInPolicy { RequestResend, Reject };

struct TimeoutPolicy {
    std::int64_t wait_limit_ms = 3LL * 3600 * 1000;
    MissingHandsetPolicy on_missing_handset = MissingHandsetPolicy::BillWithoutReconciliation;
    MissingInPolicy on_missing_in = MissingInPolicy::Reject;
};

void to_json(nlohmann::json& j, const TimeoutPolicy& p);
void from_json(const nlohmann::json& j, TimeoutPolicy& p);

struct Event {
    enum class Kind {
        Reconciled,
        Logged,
        Duplicate,
        Expired,
        ResendRequested,
        Rejected,
        SwitchRouted,
    };

    Kind kind = Kind::Logged;
    CorrelationId correlation_id = 0;
    Source source = Source::Handset;
    std::int64_t time_ms = 0;
};

const char* to_string(Event::Kind kind);

// Frame routing: switch frames feed the assurance store, the other two
// sources feed the pairing log.
Source classify_source(const MamoMessage& message);

struct Annotations {
    std::int64_t receive_time_ms = 0;
    std::string operator_id;
};

// Stamps receive metadata into the message under the third party's edit
// rights: prefix on the IN section, suffix on the handset section, and an
// entry in the housekeeping section.
MamoMessage add_housekeeping(const MamoMessage& message, const Annotations& notes,
                             const netsim::KeyRing& keys, std::mt19937_64& rng);

// Assigns the schedule whose window covers the record's call start time.
// Throws NoCoveringSchedule when no window matches.
ReconciledRecord tag_schedule(ReconciledRecord record, const std::vector<ScheduleWindow>& table);

// Top-wing pairing over a pending log keyed by correlation_id. First
// message of a pair waits; its counterpart completes the record. Duplicate
// (correlation_id, source) arrivals keep the first copy.
class Reconciler {
public:
    struct Config {
        netsim::KeyRing keys;
        std::string operator_id = "tp-01";
        std::uint64_t seed = 0;
    };

    struct IngestResult {
        std::vector<ReconciledRecord> records;
        std::vector<Event> events;
    };

    explicit Reconciler(Config config);

    IngestResult ingest(const MamoMessage& message, std::int64_t now_ms);
    // Applies the timeout policy to entries older than the wait limit.
    IngestResult expire(std::int64_t now_ms, const TimeoutPolicy& policy);

    std::size_t pending_count() const { return log_.size(); }

private:
    struct PendingEntry {
        MamoMessage message;
        std::int64_t arrival_ms = 0;
        bool resend_requested = false;
    };

    ReconciledRecord build_record(const MamoMessage& in_message, std::int64_t in_received_ms,
                                  const MamoMessage* handset_message,
                                  std::optional<std::int64_t> handset_received_ms) const;

    Config config_;
    std::mt19937_64 rng_;
    std::map<CorrelationId, std::map<Source, PendingEntry>> log_;
};

}  // namespace mamo::reconciler
