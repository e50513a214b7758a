#include "mamo/netsim.hpp"

#include <algorithm>
#include <set>

#include "mamo/errors.hpp"
#include "mamo/seeds.hpp"

namespace mamo::netsim {
namespace {

// Portable draws: the standard distributions are implementation defined,
// and archive byte-identity depends on these.
double draw_unit(std::mt19937_64& rng) { return to_unit(rng()); }

std::uint64_t draw_below(std::mt19937_64& rng, std::uint64_t n) { return rng() % n; }

std::string draw_subscriber(std::mt19937_64& rng) {
    std::string number = "98";
    for (int i = 0; i < 8; ++i) number.push_back(static_cast<char>('0' + draw_below(rng, 10)));
    return number;
}

std::string strip_annotations(std::string_view body, const char* what) {
    const std::size_t open = body.find('{');
    const std::size_t close = body.rfind('}');
    if (open == std::string_view::npos || close == std::string_view::npos || close < open) {
        raise(ErrorCode::MalformedFrame, std::string("no JSON core in ") + what);
    }
    return std::string(body.substr(open, close - open + 1));
}

nlohmann::json batch_to_json(const ScheduleBatch& batch) {
    nlohmann::json j;
    j["schedule_id"] = batch.schedule_id;
    j["window"] = batch.window;
    j["records"] = batch.records;
    return j;
}

ScheduleBatch batch_from_json(const nlohmann::json& j) {
    ScheduleBatch batch;
    j.at("schedule_id").get_to(batch.schedule_id);
    j.at("window").get_to(batch.window);
    batch.records = j.at("records").get<std::vector<CallRecord>>();
    return batch;
}

}  // namespace

void to_json(nlohmann::json& j, const GroundTruthCall& c) {
    j = nlohmann::json{
        {"call_id", c.call_id},
        {"correlation_id", c.correlation_id},
        {"caller", c.caller},
        {"callee", c.callee},
        {"start_time_ms", c.start_time_ms},
        {"duration_s", c.duration_s},
        {"signal_strength", c.signal_strength},
        {"snr", c.snr},
        {"account_before", c.account_before},
    };
}

void from_json(const nlohmann::json& j, GroundTruthCall& c) {
    j.at("call_id").get_to(c.call_id);
    j.at("correlation_id").get_to(c.correlation_id);
    j.at("caller").get_to(c.caller);
    j.at("callee").get_to(c.callee);
    j.at("start_time_ms").get_to(c.start_time_ms);
    j.at("duration_s").get_to(c.duration_s);
    j.at("signal_strength").get_to(c.signal_strength);
    j.at("snr").get_to(c.snr);
    j.at("account_before").get_to(c.account_before);
}

std::vector<GroundTruthCall> generate_calls(std::size_t count, TimeWindow window,
                                            std::uint64_t seed) {
    const std::int64_t span = window.end_ms - window.start_ms;
    if (span <= 0) raise(ErrorCode::ConfigError, "call window must be non-empty");
    if (count == 0) return {};
    if (static_cast<std::int64_t>(count) > span) {
        raise(ErrorCode::ConfigError, "window too small for distinct call start times");
    }

    std::mt19937_64 rng(seed);

    // Distinct start times keep schedule windows unambiguous.
    std::set<std::int64_t> times;
    if (static_cast<std::int64_t>(count) * 2 <= span) {
        while (times.size() < count) {
            times.insert(window.start_ms + static_cast<std::int64_t>(draw_below(
                                               rng, static_cast<std::uint64_t>(span))));
        }
    } else {
        for (std::size_t i = 0; i < count; ++i) {
            times.insert(window.start_ms + static_cast<std::int64_t>(
                                               (static_cast<std::uint64_t>(span) * i) / count));
        }
    }

    const std::size_t pool_size = std::clamp<std::size_t>(count / 10, 2, 5000);
    std::vector<std::string> pool;
    std::set<std::string> seen;
    while (pool.size() < pool_size) {
        std::string number = draw_subscriber(rng);
        if (seen.insert(number).second) pool.push_back(std::move(number));
    }

    std::set<CorrelationId> correlation_ids;
    std::vector<GroundTruthCall> calls;
    calls.reserve(count);
    CallId next_id = 1;
    for (std::int64_t start : times) {
        GroundTruthCall call;
        call.call_id = next_id++;
        call.start_time_ms = start;
        while (true) {
            const CorrelationId corr = rng();
            if (corr != 0 && correlation_ids.insert(corr).second) {
                call.correlation_id = corr;
                break;
            }
        }
        const std::size_t caller_idx = draw_below(rng, pool.size());
        std::size_t callee_idx = caller_idx;
        while (callee_idx == caller_idx) callee_idx = draw_below(rng, pool.size());
        call.caller = pool[caller_idx];
        call.callee = pool[callee_idx];
        call.duration_s = 1 + static_cast<std::int64_t>(draw_below(rng, 600));
        call.signal_strength = -110.0 + 60.0 * draw_unit(rng);
        call.snr = 30.0 * draw_unit(rng);
        call.account_before = 50'000 + static_cast<Money>(draw_below(rng, 450'001));
        calls.push_back(std::move(call));
    }
    return calls;
}

KeyRing KeyRing::derive(std::uint64_t seed) {
    KeyRing ring;
    ring.in_key = crypto::OwnerKey::derive("in", seed);
    ring.handset_key = crypto::OwnerKey::derive("handset", seed);
    ring.switch_key = crypto::OwnerKey::derive("switch", seed);
    ring.third_party_key = crypto::OwnerKey::derive("third-party", seed);
    return ring;
}

void to_json(nlohmann::json& j, const InPayload& p) {
    j = nlohmann::json{
        {"call_id", p.call_id},
        {"start_time_ms", p.start_time_ms},
        {"charged_duration", p.charged_duration},
        {"caller", p.caller},
        {"callee", p.callee},
        {"account_before", p.account_before},
    };
}

void from_json(const nlohmann::json& j, InPayload& p) {
    j.at("call_id").get_to(p.call_id);
    j.at("start_time_ms").get_to(p.start_time_ms);
    j.at("charged_duration").get_to(p.charged_duration);
    j.at("caller").get_to(p.caller);
    j.at("callee").get_to(p.callee);
    j.at("account_before").get_to(p.account_before);
}

void to_json(nlohmann::json& j, const HandsetPayload& p) {
    j = nlohmann::json{{"signal_strength", p.signal_strength}, {"snr", p.snr}};
}

void from_json(const nlohmann::json& j, HandsetPayload& p) {
    j.at("signal_strength").get_to(p.signal_strength);
    j.at("snr").get_to(p.snr);
}

std::string encode_in_payload(const InPayload& p) { return nlohmann::json(p).dump(); }

std::string encode_handset_payload(const HandsetPayload& p) {
    return nlohmann::json(p).dump();
}

InPayload decode_in_payload(std::string_view body) {
    try {
        return nlohmann::json::parse(strip_annotations(body, "IN payload")).get<InPayload>();
    } catch (const nlohmann::json::exception& e) {
        raise(ErrorCode::MalformedFrame, std::string("IN payload: ") + e.what());
    }
}

HandsetPayload decode_handset_payload(std::string_view body) {
    try {
        return nlohmann::json::parse(strip_annotations(body, "handset payload"))
            .get<HandsetPayload>();
    } catch (const nlohmann::json::exception& e) {
        raise(ErrorCode::MalformedFrame, std::string("handset payload: ") + e.what());
    }
}

namespace {

std::size_t draw_padding(std::mt19937_64& rng) { return static_cast<std::size_t>(rng() % 17); }

MamoMessage emit_message(const GroundTruthCall& call, Source source, const KeyRing& keys,
                         std::mt19937_64& rng) {
    std::string in_text;
    std::string handset_text;
    if (source == Source::BaseStationIN) {
        InPayload p{call.call_id, call.start_time_ms, call.duration_s,
                    call.caller,  call.callee,        call.account_before};
        in_text = encode_in_payload(p);
    } else {
        handset_text = encode_handset_payload({call.signal_strength, call.snr});
    }

    std::vector<envelope::SealedSegment> sections(envelope::kBillingSectionCount);
    sections[envelope::kInSection] = envelope::seal_segment(
        in_text, authz::AuthorizationMode::AddBeginning, keys.in_key, draw_padding(rng), rng);
    sections[envelope::kHandsetSection] =
        envelope::seal_segment(handset_text, authz::AuthorizationMode::AddEnd, keys.handset_key,
                               draw_padding(rng), rng);
    sections[envelope::kHousekeepingSection] =
        envelope::seal_segment("", authz::AuthorizationMode::AddWithoutAlter,
                               keys.third_party_key, draw_padding(rng), rng);
    return envelope::compose_message(call.correlation_id, source, std::move(sections));
}

}  // namespace

MamoMessage in_emit(const GroundTruthCall& call, const KeyRing& keys, std::mt19937_64& rng) {
    return emit_message(call, Source::BaseStationIN, keys, rng);
}

MamoMessage handset_emit(const GroundTruthCall& call, const KeyRing& keys,
                         std::mt19937_64& rng) {
    return emit_message(call, Source::Handset, keys, rng);
}

std::int64_t in_emit_time_ms(const GroundTruthCall& call) {
    return call.start_time_ms + call.duration_s * 1000;
}

std::int64_t handset_emit_time_ms(const GroundTruthCall& call) {
    return in_emit_time_ms(call) + 250;
}

AdSwitch::AdSwitch(Config config) : config_(std::move(config)), rng_(config_.seed) {
    if (config_.buffer_x == 0) raise(ErrorCode::ConfigError, "buffer_x must be positive");
    if (config_.restorations_n == 0) {
        raise(ErrorCode::ConfigError, "restorations_n must be positive");
    }
}

void AdSwitch::ingest(const GroundTruthCall& call) {
    CallRecord record;
    record.call_id = call.call_id;
    record.correlation_id = call.correlation_id;
    record.start_time_ms = call.start_time_ms;
    record.charged_duration = call.duration_s;
    record.final_charge = rate_for_duration(call.duration_s, config_.tariff);
    record.account_before = call.account_before;
    record.account_after = call.account_before - record.final_charge;
    record.caller = call.caller;
    record.callee = call.callee;

    const nlohmann::json j = record;
    envelope::SealedSegment sealed =
        envelope::seal_segment(j.dump(), authz::AuthorizationMode::AddBeginning,
                               config_.switch_key, draw_padding(rng_), rng_);
    buffer_.emplace_back(std::move(sealed), std::move(record));
    ++ingested_;
    if (buffer_.size() >= config_.buffer_x) restore_buffer();
}

void AdSwitch::restore_buffer() {
    if (buffer_.empty()) return;
    if (!current_open_) {
        current_ = ScheduleBatch{};
        current_.schedule_id = next_schedule_seq_++;
        current_open_ = true;
    }
    for (auto& [sealed, record] : buffer_) {
        // Integrity gate: the sealed copy must still match what was buffered.
        const envelope::OpenedSegment opened =
            envelope::open_segment(sealed, config_.switch_key);
        CallRecord restored = nlohmann::json::parse(opened.text).get<CallRecord>();
        if (!(restored == record)) {
            raise(ErrorCode::TamperDetected, "buffered record diverged from sealed copy");
        }
        current_.records.push_back(std::move(restored));
        ++restored_;
    }
    buffer_.clear();
    ++restorations_done_;
    if (restorations_done_ >= config_.restorations_n) close_schedule();
}

void AdSwitch::close_schedule() {
    restorations_done_ = 0;
    if (!current_open_) return;
    if (!current_.records.empty()) {
        current_.window = TimeWindow{current_.records.front().start_time_ms,
                                     current_.records.back().start_time_ms + 1};
        completed_.push_back(std::move(current_));
    }
    current_ = ScheduleBatch{};
    current_open_ = false;
}

void AdSwitch::flush() {
    restore_buffer();
    close_schedule();
}

std::optional<ScheduleBatch> AdSwitch::probe(double traffic_level) {
    if (traffic_level >= config_.low_traffic_threshold) return std::nullopt;
    if (completed_.empty()) return std::nullopt;
    ScheduleBatch batch = std::move(completed_.front());
    completed_.pop_front();
    shipped_.push_back(batch);
    return batch;
}

MamoMessage AdSwitch::frame_batch(const ScheduleBatch& batch, const crypto::OwnerKey& switch_key,
                                  std::mt19937_64& rng) const {
    // One sealed section carries the whole batch; read only once shipped.
    envelope::SealedSegment section =
        envelope::seal_segment(batch_to_json(batch).dump(), authz::AuthorizationMode::ReadOnly,
                               switch_key, draw_padding(rng), rng);
    return envelope::compose_message(batch.schedule_id, Source::Switch, {std::move(section)});
}

ScheduleBatch AdSwitch::unframe_batch(const MamoMessage& message,
                                      const crypto::OwnerKey& switch_key) {
    if (message.source != Source::Switch || message.sections.size() != 1) {
        raise(ErrorCode::MalformedFrame, "not a switch batch frame");
    }
    const envelope::OpenedSegment opened = envelope::open_segment(message.sections[0], switch_key);
    try {
        return batch_from_json(nlohmann::json::parse(opened.text));
    } catch (const nlohmann::json::exception& e) {
        raise(ErrorCode::MalformedFrame, std::string("batch payload: ") + e.what());
    }
}

void to_json(nlohmann::json& j, const ChannelConfig& c) {
    j = nlohmann::json{
        {"in_drop_probability", c.in_drop_probability},
        {"handset_loss_probability", c.handset_loss_probability},
        {"reorder_window", c.reorder_window},
        {"delay_min_ms", c.delay_min_ms},
        {"delay_max_ms", c.delay_max_ms},
        {"seed", c.seed},
    };
}

void from_json(const nlohmann::json& j, ChannelConfig& c) {
    j.at("in_drop_probability").get_to(c.in_drop_probability);
    j.at("handset_loss_probability").get_to(c.handset_loss_probability);
    j.at("reorder_window").get_to(c.reorder_window);
    j.at("delay_min_ms").get_to(c.delay_min_ms);
    j.at("delay_max_ms").get_to(c.delay_max_ms);
    j.at("seed").get_to(c.seed);
}

DeliveryResult deliver(const std::vector<Emission>& emissions, const ChannelConfig& channel) {
    if (channel.in_drop_probability < 0.0 || channel.in_drop_probability > 1.0 ||
        channel.handset_loss_probability < 0.0 || channel.handset_loss_probability > 1.0) {
        raise(ErrorCode::ConfigError, "drop probabilities must lie in [0, 1]");
    }
    if (channel.delay_min_ms < 0 || channel.delay_max_ms < channel.delay_min_ms) {
        raise(ErrorCode::ConfigError, "delay bounds must satisfy 0 <= min <= max");
    }

    struct Pending {
        std::size_t sort_key = 0;
        std::size_t index = 0;
        Delivery delivery;
    };
    std::vector<Pending> pending;
    pending.reserve(emissions.size());
    DeliveryResult result;

    for (std::size_t i = 0; i < emissions.size(); ++i) {
        const Emission& e = emissions[i];
        // Per-message fate is a pure function of (seed, correlation_id,
        // source): stream order cannot change who is dropped or how long a
        // message is delayed.
        const std::uint64_t h =
            mix64(mix64(channel.seed ^ e.message.correlation_id) ^
                  static_cast<std::uint64_t>(e.message.source));

        double drop_p = 0.0;
        if (e.message.source == Source::BaseStationIN) drop_p = channel.in_drop_probability;
        if (e.message.source == Source::Handset) drop_p = channel.handset_loss_probability;
        if (to_unit(mix64(h ^ 0x6D726F70)) < drop_p) {
            result.dropped.push_back({e.message.correlation_id, e.message.source});
            continue;
        }

        std::int64_t delay = channel.delay_min_ms;
        const std::int64_t delay_span = channel.delay_max_ms - channel.delay_min_ms;
        if (delay_span > 0) {
            delay += static_cast<std::int64_t>(
                mix64(h ^ 0x64656C61) % static_cast<std::uint64_t>(delay_span + 1));
        }

        std::size_t displacement = 0;
        if (channel.reorder_window > 0 && e.message.source != Source::Switch) {
            displacement = static_cast<std::size_t>(
                mix64(h ^ 0x736C6970) % (static_cast<std::uint64_t>(channel.reorder_window) + 1));
        }

        Pending p;
        p.sort_key = i + displacement;
        p.index = i;
        p.delivery = Delivery{e.message, e.emit_time_ms + delay};
        pending.push_back(std::move(p));
    }

    std::stable_sort(pending.begin(), pending.end(), [](const Pending& a, const Pending& b) {
        return a.sort_key < b.sort_key;
    });
    result.delivered.reserve(pending.size());
    for (Pending& p : pending) result.delivered.push_back(std::move(p.delivery));
    return result;
}

}  // namespace mamo::netsim
