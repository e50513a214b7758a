#include "mamo/reconciler.hpp"

#include <algorithm>

#include "mamo/errors.hpp"
#include "mamo/seeds.hpp"

namespace mamo::reconciler {
namespace {

std::string annotation(const Annotations& notes) {
    return "#rcv=" + std::to_string(notes.receive_time_ms) + ";op=" + notes.operator_id;
}

}  // namespace

const char* to_string(Provenance p) {
    switch (p) {
    case Provenance::FullyReconciled: return "fully_reconciled";
    case Provenance::BilledWithoutHandset: return "billed_without_handset";
    }
    return "unknown";
}

const char* to_string(Event::Kind kind) {
    switch (kind) {
    case Event::Kind::Reconciled: return "reconciled";
    case Event::Kind::Logged: return "logged";
    case Event::Kind::Duplicate: return "duplicate";
    case Event::Kind::Expired: return "expired";
    case Event::Kind::ResendRequested: return "resend_requested";
    case Event::Kind::Rejected: return "rejected";
    case Event::Kind::SwitchRouted: return "switch_routed";
    }
    return "unknown";
}

void to_json(nlohmann::json& j, const ReconciledRecord& r) {
    j = nlohmann::json{
        {"correlation_id", r.correlation_id},
        {"call_id", r.call_id},
        {"in", r.in_fields},
        {"billing_schedule_id", r.billing_schedule_id},
        {"provenance", to_string(r.provenance)},
    };
    if (r.handset_fields) {
        j["handset"] = nlohmann::json{{"signal_strength", r.handset_fields->signal_strength},
                                      {"snr", r.handset_fields->snr}};
    } else {
        j["handset"] = nullptr;
    }
    nlohmann::json hk;
    hk["operator_id"] = r.housekeeping.operator_id;
    hk["in_received_ms"] =
        r.housekeeping.in_received_ms ? nlohmann::json(*r.housekeeping.in_received_ms)
                                      : nlohmann::json(nullptr);
    hk["handset_received_ms"] = r.housekeeping.handset_received_ms
                                    ? nlohmann::json(*r.housekeeping.handset_received_ms)
                                    : nlohmann::json(nullptr);
    j["housekeeping"] = std::move(hk);
}

void from_json(const nlohmann::json& j, ReconciledRecord& r) {
    j.at("correlation_id").get_to(r.correlation_id);
    j.at("call_id").get_to(r.call_id);
    j.at("in").get_to(r.in_fields);
    j.at("billing_schedule_id").get_to(r.billing_schedule_id);
    const std::string prov = j.at("provenance").get<std::string>();
    if (prov == "fully_reconciled") {
        r.provenance = Provenance::FullyReconciled;
    } else if (prov == "billed_without_handset") {
        r.provenance = Provenance::BilledWithoutHandset;
    } else {
        raise(ErrorCode::ConfigError, "unknown provenance: " + prov);
    }
    r.handset_fields.reset();
    if (j.contains("handset") && !j.at("handset").is_null()) {
        HandsetFields h;
        j.at("handset").at("signal_strength").get_to(h.signal_strength);
        j.at("handset").at("snr").get_to(h.snr);
        r.handset_fields = h;
    }
    const nlohmann::json& hk = j.at("housekeeping");
    hk.at("operator_id").get_to(r.housekeeping.operator_id);
    r.housekeeping.in_received_ms.reset();
    r.housekeeping.handset_received_ms.reset();
    if (!hk.at("in_received_ms").is_null()) {
        r.housekeeping.in_received_ms = hk.at("in_received_ms").get<std::int64_t>();
    }
    if (!hk.at("handset_received_ms").is_null()) {
        r.housekeeping.handset_received_ms = hk.at("handset_received_ms").get<std::int64_t>();
    }
}

void to_json(nlohmann::json& j, const TimeoutPolicy& p) {
    j = nlohmann::json{
        {"wait_limit_seconds", p.wait_limit_ms / 1000},
        {"on_missing_handset", p.on_missing_handset == MissingHandsetPolicy::BillWithoutReconciliation
                                   ? "bill_without_reconciliation"
                                   : "reject"},
        {"on_missing_in",
         p.on_missing_in == MissingInPolicy::RequestResend ? "request_resend" : "reject"},
    };
}

void from_json(const nlohmann::json& j, TimeoutPolicy& p) {
    p.wait_limit_ms = j.at("wait_limit_seconds").get<std::int64_t>() * 1000;
    const std::string handset = j.at("on_missing_handset").get<std::string>();
    if (handset == "bill_without_reconciliation") {
        p.on_missing_handset = MissingHandsetPolicy::BillWithoutReconciliation;
    } else if (handset == "reject") {
        p.on_missing_handset = MissingHandsetPolicy::Reject;
    } else {
        raise(ErrorCode::ConfigError, "on_missing_handset must be bill_without_reconciliation or reject");
    }
    const std::string in = j.at("on_missing_in").get<std::string>();
    if (in == "request_resend") {
        p.on_missing_in = MissingInPolicy::RequestResend;
    } else if (in == "reject") {
        p.on_missing_in = MissingInPolicy::Reject;
    } else {
        raise(ErrorCode::ConfigError, "on_missing_in must be request_resend or reject");
    }
}

Source classify_source(const MamoMessage& message) { return message.source; }

MamoMessage add_housekeeping(const MamoMessage& message, const Annotations& notes,
                             const netsim::KeyRing& keys, std::mt19937_64& rng) {
    const std::string note = annotation(notes);
    MamoMessage out = message;

    if (message.source == Source::BaseStationIN) {
        const envelope::OpenedSegment in_section =
            envelope::open_segment(out.sections[envelope::kInSection], keys.in_key);
        out = envelope::apply_edit(out, envelope::kInSection, note + "\n" + in_section.text,
                                   keys.in_key, rng);
    } else if (message.source == Source::Handset) {
        const envelope::OpenedSegment handset_section =
            envelope::open_segment(out.sections[envelope::kHandsetSection], keys.handset_key);
        out = envelope::apply_edit(out, envelope::kHandsetSection,
                                   handset_section.text + "\n" + note, keys.handset_key, rng);
    } else {
        raise(ErrorCode::MalformedFrame, "switch frames take no receive annotations");
    }

    const envelope::OpenedSegment hk =
        envelope::open_segment(out.sections[envelope::kHousekeepingSection],
                               keys.third_party_key);
    const std::string hk_text = hk.text.empty() ? note : hk.text + "\n" + note;
    out = envelope::apply_edit(out, envelope::kHousekeepingSection, hk_text,
                               keys.third_party_key, rng);
    return out;
}

ReconciledRecord tag_schedule(ReconciledRecord record, const std::vector<ScheduleWindow>& table) {
    const std::int64_t t = record.in_fields.start_time_ms;
    auto it = std::upper_bound(table.begin(), table.end(), t,
                               [](std::int64_t value, const ScheduleWindow& w) {
                                   return value < w.window.start_ms;
                               });
    if (it != table.begin()) {
        --it;
        if (it->window.contains(t)) {
            record.billing_schedule_id = it->schedule_id;
            return record;
        }
    }
    raise(ErrorCode::NoCoveringSchedule,
          "no schedule window covers call start " + std::to_string(t));
}

Reconciler::Reconciler(Config config)
    : config_(std::move(config)), rng_(subseed(config_.seed, "reconciler")) {}

ReconciledRecord Reconciler::build_record(const MamoMessage& in_message,
                                          std::int64_t in_received_ms,
                                          const MamoMessage* handset_message,
                                          std::optional<std::int64_t> handset_received_ms) const {
    const envelope::OpenedSegment in_section =
        envelope::open_segment(in_message.sections[envelope::kInSection], config_.keys.in_key);

    ReconciledRecord record;
    record.correlation_id = in_message.correlation_id;
    record.in_fields = netsim::decode_in_payload(in_section.text);
    record.call_id = record.in_fields.call_id;
    record.housekeeping.in_received_ms = in_received_ms;
    record.housekeeping.handset_received_ms = handset_received_ms;
    record.housekeeping.operator_id = config_.operator_id;

    if (handset_message) {
        const envelope::OpenedSegment handset_section = envelope::open_segment(
            handset_message->sections[envelope::kHandsetSection], config_.keys.handset_key);
        const netsim::HandsetPayload payload =
            netsim::decode_handset_payload(handset_section.text);
        record.handset_fields = HandsetFields{payload.signal_strength, payload.snr};
        record.provenance = Provenance::FullyReconciled;
    } else {
        record.provenance = Provenance::BilledWithoutHandset;
    }
    return record;
}

Reconciler::IngestResult Reconciler::ingest(const MamoMessage& message, std::int64_t now_ms) {
    IngestResult result;
    const Source source = classify_source(message);
    if (source == Source::Switch) {
        result.events.push_back(
            {Event::Kind::SwitchRouted, message.correlation_id, source, now_ms});
        return result;
    }

    const MamoMessage annotated =
        add_housekeeping(message, {now_ms, config_.operator_id}, config_.keys, rng_);
    auto& entry = log_[message.correlation_id];

    if (entry.count(source) != 0) {
        // First copy wins; repeated deliveries change nothing.
        result.events.push_back(
            {Event::Kind::Duplicate, message.correlation_id, source, now_ms});
        return result;
    }

    const Source counterpart =
        source == Source::BaseStationIN ? Source::Handset : Source::BaseStationIN;
    auto other = entry.find(counterpart);
    if (other == entry.end()) {
        entry.emplace(source, PendingEntry{annotated, now_ms, false});
        result.events.push_back({Event::Kind::Logged, message.correlation_id, source, now_ms});
        return result;
    }

    const PendingEntry pending = std::move(other->second);
    log_.erase(message.correlation_id);
    ReconciledRecord record =
        source == Source::BaseStationIN
            ? build_record(annotated, now_ms, &pending.message, pending.arrival_ms)
            : build_record(pending.message, pending.arrival_ms, &annotated, now_ms);
    result.records.push_back(std::move(record));
    result.events.push_back({Event::Kind::Reconciled, message.correlation_id, source, now_ms});
    return result;
}

Reconciler::IngestResult Reconciler::expire(std::int64_t now_ms, const TimeoutPolicy& policy) {
    IngestResult result;
    std::vector<CorrelationId> to_erase;

    for (auto& [corr, entry] : log_) {
        for (auto& [source, pending] : entry) {
            if (now_ms - pending.arrival_ms <= policy.wait_limit_ms) continue;
            result.events.push_back({Event::Kind::Expired, corr, source, now_ms});

            if (source == Source::BaseStationIN) {
                if (policy.on_missing_handset ==
                    MissingHandsetPolicy::BillWithoutReconciliation) {
                    // Primary billing parameters are all present; bill now.
                    result.records.push_back(
                        build_record(pending.message, pending.arrival_ms, nullptr, {}));
                } else {
                    result.events.push_back({Event::Kind::Rejected, corr, source, now_ms});
                }
                to_erase.push_back(corr);
            } else {
                if (policy.on_missing_in == MissingInPolicy::RequestResend &&
                    !pending.resend_requested) {
                    pending.resend_requested = true;
                    pending.arrival_ms = now_ms;  // restart the wait for the resend
                    result.events.push_back({Event::Kind::ResendRequested, corr, source, now_ms});
                } else {
                    result.events.push_back({Event::Kind::Rejected, corr, source, now_ms});
                    to_erase.push_back(corr);
                }
            }
        }
    }
    for (CorrelationId corr : to_erase) log_.erase(corr);
    return result;
}

}  // namespace mamo::reconciler
