#include "mamo/pipeline.hpp"

#include <algorithm>
#include <chrono>
#include <cinttypes>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <map>
#include <set>
#include <sstream>

#include "mamo/errors.hpp"
#include "mamo/seeds.hpp"

namespace mamo::pipeline {
namespace fs = std::filesystem;

namespace {

// --- file helpers -----------------------------------------------------------

std::string read_file(const fs::path& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) raise(ErrorCode::IoError, "cannot open " + path.string());
    std::ostringstream buf;
    buf << in.rdbuf();
    return buf.str();
}

void write_file(const fs::path& path, std::string_view content) {
    std::ofstream out(path, std::ios::binary | std::ios::trunc);
    if (!out) raise(ErrorCode::IoError, "cannot write " + path.string());
    out.write(content.data(), static_cast<std::streamsize>(content.size()));
    if (!out) raise(ErrorCode::IoError, "short write to " + path.string());
}

std::vector<std::string> read_lines(const fs::path& path) {
    std::vector<std::string> lines;
    std::istringstream in(read_file(path));
    std::string line;
    while (std::getline(in, line)) {
        if (!line.empty()) lines.push_back(line);
    }
    return lines;
}

template <typename T>
void write_jsonl(const fs::path& path, const std::vector<T>& items) {
    std::string out;
    for (const T& item : items) {
        out += nlohmann::json(item).dump();
        out += '\n';
    }
    write_file(path, out);
}

template <typename T>
std::vector<T> read_jsonl(const fs::path& path) {
    std::vector<T> items;
    for (const std::string& line : read_lines(path)) {
        items.push_back(nlohmann::json::parse(line).get<T>());
    }
    return items;
}

void put_u32_be(std::string& out, std::uint32_t v) {
    for (int i = 3; i >= 0; --i) out.push_back(static_cast<char>((v >> (8 * i)) & 0xFF));
}

void put_u64_be(std::string& out, std::uint64_t v) {
    for (int i = 7; i >= 0; --i) out.push_back(static_cast<char>((v >> (8 * i)) & 0xFF));
}

// Archive id helpers: switch_T<id>.jsonl / billing_Tp<id>.jsonl / assurance_T<id>.jsonl.

std::vector<std::pair<std::uint64_t, fs::path>> archive_files(const fs::path& dir,
                                                              const std::string& prefix) {
    std::vector<std::pair<std::uint64_t, fs::path>> out;
    if (!fs::exists(dir)) return out;
    for (const fs::directory_entry& entry : fs::directory_iterator(dir)) {
        const std::string name = entry.path().filename().string();
        if (!name.starts_with(prefix) || !name.ends_with(".jsonl")) continue;
        const std::string id_part =
            name.substr(prefix.size(), name.size() - prefix.size() - 6);
        if (id_part.empty() ||
            id_part.find_first_not_of("0123456789") != std::string::npos) {
            continue;
        }
        out.emplace_back(std::stoull(id_part), entry.path());
    }
    std::sort(out.begin(), out.end());
    return out;
}

// Stream of timed frames: [u64 BE delivery_ms][u32 BE length][frame bytes]...

struct TimedFrame {
    std::int64_t delivery_ms = 0;
    std::string frame;
};

void write_deliveries(const fs::path& path, const std::vector<TimedFrame>& frames) {
    std::string out;
    for (const TimedFrame& f : frames) {
        put_u64_be(out, static_cast<std::uint64_t>(f.delivery_ms));
        put_u32_be(out, static_cast<std::uint32_t>(f.frame.size()));
        out += f.frame;
    }
    write_file(path, out);
}

std::vector<TimedFrame> read_deliveries(const fs::path& path) {
    const std::string data = read_file(path);
    std::vector<TimedFrame> frames;
    std::size_t pos = 0;
    auto take_be = [&](std::size_t n) -> std::uint64_t {
        if (data.size() - pos < n) raise(ErrorCode::IoError, "truncated delivery stream");
        std::uint64_t v = 0;
        for (std::size_t i = 0; i < n; ++i) {
            v = (v << 8) | static_cast<std::uint8_t>(data[pos++]);
        }
        return v;
    };
    while (pos < data.size()) {
        TimedFrame f;
        f.delivery_ms = static_cast<std::int64_t>(take_be(8));
        const std::size_t len = take_be(4);
        if (data.size() - pos < len) raise(ErrorCode::IoError, "truncated delivery stream");
        f.frame = data.substr(pos, len);
        pos += len;
        frames.push_back(std::move(f));
    }
    return frames;
}

struct DropLine {
    CorrelationId correlation_id = 0;
    std::string source;
};

void to_json(nlohmann::json& j, const DropLine& d) {
    j = nlohmann::json{{"correlation_id", d.correlation_id}, {"source", d.source}};
}

TimeWindow run_window(const RunConfig& config) {
    return TimeWindow{kEpochMs, kEpochMs + config.window_seconds * 1000};
}

}  // namespace

void to_json(nlohmann::json& j, const RunConfig& c) {
    j = nlohmann::json{
        {"call_count", c.call_count},
        {"window_seconds", c.window_seconds},
        {"channel", c.channel},
        {"buffer_x", c.buffer_x},
        {"restorations_n", c.restorations_n},
        {"low_traffic_threshold", c.low_traffic_threshold},
        {"tariff", c.tariff},
        {"timeout_policy", c.timeout_policy},
        {"seed", c.seed},
        {"output_dir", c.output_dir},
    };
}

void from_json(const nlohmann::json& j, RunConfig& c) {
    c = RunConfig{};
    if (j.contains("call_count")) j.at("call_count").get_to(c.call_count);
    if (j.contains("window_seconds")) j.at("window_seconds").get_to(c.window_seconds);
    if (j.contains("channel")) j.at("channel").get_to(c.channel);
    if (j.contains("buffer_x")) j.at("buffer_x").get_to(c.buffer_x);
    if (j.contains("restorations_n")) j.at("restorations_n").get_to(c.restorations_n);
    if (j.contains("low_traffic_threshold")) {
        j.at("low_traffic_threshold").get_to(c.low_traffic_threshold);
    }
    if (j.contains("tariff")) j.at("tariff").get_to(c.tariff);
    if (j.contains("timeout_policy")) j.at("timeout_policy").get_to(c.timeout_policy);
    if (j.contains("seed")) j.at("seed").get_to(c.seed);
    if (j.contains("output_dir")) j.at("output_dir").get_to(c.output_dir);
}

void validate(const RunConfig& config) {
    std::vector<std::string> problems;
    if (config.call_count == 0) problems.push_back("call_count must be positive");
    if (config.window_seconds <= 0) problems.push_back("window_seconds must be positive");
    if (config.window_seconds > 0 &&
        static_cast<std::int64_t>(config.call_count) > config.window_seconds * 1000) {
        problems.push_back("call_count exceeds distinct start times in window");
    }
    if (config.channel.in_drop_probability < 0.0 || config.channel.in_drop_probability > 1.0) {
        problems.push_back("channel.in_drop_probability must lie in [0, 1]");
    }
    if (config.channel.handset_loss_probability < 0.0 ||
        config.channel.handset_loss_probability > 1.0) {
        problems.push_back("channel.handset_loss_probability must lie in [0, 1]");
    }
    if (config.channel.delay_min_ms < 0 ||
        config.channel.delay_max_ms < config.channel.delay_min_ms) {
        problems.push_back("channel delays must satisfy 0 <= delay_min_ms <= delay_max_ms");
    }
    if (config.buffer_x == 0) problems.push_back("buffer_x must be positive");
    if (config.restorations_n == 0) problems.push_back("restorations_n must be positive");
    if (config.low_traffic_threshold < 0.0 || config.low_traffic_threshold > 1.0) {
        problems.push_back("low_traffic_threshold must lie in [0, 1]");
    }
    if (config.tariff.setup_fee < 0) problems.push_back("tariff.setup_fee must be non-negative");
    if (config.tariff.rate_per_second < 0) {
        problems.push_back("tariff.rate_per_second must be non-negative");
    }
    if (config.timeout_policy.wait_limit_ms <= 0) {
        problems.push_back("timeout_policy.wait_limit_seconds must be positive");
    }
    if (config.output_dir.empty()) problems.push_back("output_dir must not be empty");

    if (!problems.empty()) {
        std::string joined;
        for (const std::string& p : problems) {
            if (!joined.empty()) joined += "; ";
            joined += p;
        }
        raise(ErrorCode::ConfigError, joined);
    }
}

RunConfig load_config(const fs::path& path) {
    nlohmann::json j;
    try {
        j = nlohmann::json::parse(read_file(path));
    } catch (const nlohmann::json::exception& e) {
        raise(ErrorCode::ConfigError, std::string("malformed config JSON: ") + e.what());
    }

    static const std::set<std::string> known = {
        "call_count",     "window_seconds",        "channel", "buffer_x",
        "restorations_n", "low_traffic_threshold", "tariff",  "timeout_policy",
        "seed",           "output_dir",
    };
    std::vector<std::string> unknown;
    for (const auto& [key, value] : j.items()) {
        (void)value;
        if (known.count(key) == 0) unknown.push_back(key);
    }
    if (!unknown.empty()) {
        std::string joined;
        for (const std::string& k : unknown) {
            if (!joined.empty()) joined += ", ";
            joined += k;
        }
        raise(ErrorCode::ConfigError, "unknown config fields: " + joined);
    }

    RunConfig config;
    try {
        j.get_to(config);
    } catch (const nlohmann::json::exception& e) {
        raise(ErrorCode::ConfigError, std::string("bad config field type: ") + e.what());
    }
    validate(config);
    return config;
}

// --- simulate ----------------------------------------------------------------

SimulateResult simulate_stage(const RunConfig& config) {
    validate(config);
    const fs::path dir(config.output_dir);
    fs::create_directories(dir);

    const netsim::KeyRing keys = netsim::KeyRing::derive(config.seed);
    const TimeWindow window = run_window(config);
    const std::vector<netsim::GroundTruthCall> calls =
        netsim::generate_calls(config.call_count, window, subseed(config.seed, "calls"));
    write_jsonl(dir / "calls.jsonl", calls);

    // Prepaid accounts: the opening balance is the caller's balance before
    // its first call, booked as one recharge at window start.
    std::map<std::string, assurance::Account> accounts;
    for (const netsim::GroundTruthCall& call : calls) {
        if (accounts.count(call.caller) != 0) continue;
        assurance::Account account;
        account.subscriber_number = call.caller;
        account.balance = call.account_before;
        account.recharge_log.emplace_back(window.start_ms, call.account_before);
        accounts.emplace(call.caller, std::move(account));
    }
    std::vector<assurance::Account> account_rows;
    account_rows.reserve(accounts.size());
    for (const auto& [subscriber, account] : accounts) {
        (void)subscriber;
        account_rows.push_back(account);
    }
    write_jsonl(dir / "accounts.jsonl", account_rows);

    // AD switch consumes every call; nothing is lost on this side.
    netsim::AdSwitch::Config ad_config;
    ad_config.buffer_x = config.buffer_x;
    ad_config.restorations_n = config.restorations_n;
    ad_config.low_traffic_threshold = config.low_traffic_threshold;
    ad_config.tariff = config.tariff;
    ad_config.seed = subseed(config.seed, "switch");
    ad_config.switch_key = keys.switch_key;
    netsim::AdSwitch ad(ad_config);
    for (const netsim::GroundTruthCall& call : calls) ad.ingest(call);
    ad.flush();

    // Handset and IN emissions ride the lossy channel.
    std::mt19937_64 emit_rng(subseed(config.seed, "emit"));
    std::vector<netsim::Emission> emissions;
    emissions.reserve(calls.size() * 2);
    for (const netsim::GroundTruthCall& call : calls) {
        emissions.push_back({netsim::in_emit(call, keys, emit_rng),
                             netsim::in_emit_time_ms(call)});
        emissions.push_back({netsim::handset_emit(call, keys, emit_rng),
                             netsim::handset_emit_time_ms(call)});
    }
    std::stable_sort(emissions.begin(), emissions.end(),
                     [](const netsim::Emission& a, const netsim::Emission& b) {
                         return a.emit_time_ms < b.emit_time_ms;
                     });

    const netsim::DeliveryResult delivered = netsim::deliver(emissions, config.channel);

    SimulateResult result;
    result.call_count = calls.size();
    result.emitted = emissions.size();
    result.delivered = delivered.delivered.size();
    std::vector<DropLine> drop_lines;
    for (const netsim::DropRecord& drop : delivered.dropped) {
        drop_lines.push_back({drop.correlation_id, envelope::to_string(drop.source)});
        if (drop.source == envelope::Source::BaseStationIN) ++result.dropped_in;
        if (drop.source == envelope::Source::Handset) ++result.dropped_handset;
    }
    write_jsonl(dir / "drops.jsonl", drop_lines);

    std::vector<TimedFrame> frames;
    frames.reserve(delivered.delivered.size());
    for (const netsim::Delivery& d : delivered.delivered) {
        frames.push_back({d.delivery_time_ms, envelope::serialize_message(d.message)});
    }

    // Batches ship when a traffic probe sees a quiet network; after too many
    // busy probes the end-of-cycle drain forces the rest out.
    std::mt19937_64 traffic_rng(subseed(config.seed, "traffic"));
    std::mt19937_64 frame_rng(subseed(config.seed, "frames"));
    std::int64_t ship_tick = 0;
    std::size_t busy_probes = 0;
    while (ad.completed_count() > 0) {
        const double traffic =
            busy_probes < 1000 ? to_unit(traffic_rng()) : -1.0;
        const std::optional<ScheduleBatch> batch = ad.probe(traffic);
        if (!batch) {
            ++busy_probes;
            continue;
        }
        ++ship_tick;
        const std::int64_t ship_ms =
            std::max(window.end_ms, batch->window.end_ms) + ship_tick * 1000;
        const netsim::MamoMessage frame = ad.frame_batch(*batch, keys.switch_key, frame_rng);
        frames.push_back({ship_ms, envelope::serialize_message(frame)});
        ++result.switch_batches;
        result.switch_records += batch->records.size();
    }
    write_deliveries(dir / "deliveries.bin", frames);

    nlohmann::json summary{
        {"call_count", result.call_count},
        {"emitted", result.emitted},
        {"delivered", result.delivered},
        {"dropped_in", result.dropped_in},
        {"dropped_handset", result.dropped_handset},
        {"switch_batches", result.switch_batches},
        {"switch_records", result.switch_records},
    };
    write_file(dir / "sim_summary.json", summary.dump(2) + "\n");
    return result;
}

// --- reconcile ---------------------------------------------------------------

ReconcileResult reconcile_stage(const RunConfig& config) {
    validate(config);
    const fs::path dir(config.output_dir);
    const netsim::KeyRing keys = netsim::KeyRing::derive(config.seed);

    const std::vector<TimedFrame> frames = read_deliveries(dir / "deliveries.bin");

    reconciler::Reconciler::Config rc;
    rc.keys = keys;
    rc.seed = config.seed;
    reconciler::Reconciler rec(rc);

    ReconcileResult result;
    std::vector<reconciler::ReconciledRecord> records;
    std::vector<reconciler::Event> events;
    std::vector<ScheduleBatch> switch_batches;
    std::map<CorrelationId, std::int64_t> message_ns;
    std::int64_t max_delivery_ms = 0;

    using clock = std::chrono::steady_clock;
    for (const TimedFrame& tf : frames) {
        max_delivery_ms = std::max(max_delivery_ms, tf.delivery_ms);
        const auto t0 = clock::now();
        const netsim::MamoMessage message = envelope::parse_message(tf.frame);
        if (message.source == envelope::Source::Switch) {
            switch_batches.push_back(netsim::AdSwitch::unframe_batch(message, keys.switch_key));
            reconciler::Reconciler::IngestResult r = rec.ingest(message, tf.delivery_ms);
            const auto t1 = clock::now();
            result.ingest_total_ns +=
                std::chrono::duration_cast<std::chrono::nanoseconds>(t1 - t0).count();
            events.insert(events.end(), r.events.begin(), r.events.end());
            continue;
        }
        ++result.message_count;
        reconciler::Reconciler::IngestResult r = rec.ingest(message, tf.delivery_ms);
        const auto t1 = clock::now();
        const std::int64_t ns =
            std::chrono::duration_cast<std::chrono::nanoseconds>(t1 - t0).count();
        result.ingest_total_ns += ns;
        message_ns[message.correlation_id] += ns;
        for (const reconciler::Event& e : r.events) {
            if (e.kind == reconciler::Event::Kind::Duplicate) ++result.duplicates;
        }
        events.insert(events.end(), r.events.begin(), r.events.end());
        for (reconciler::ReconciledRecord& record : r.records) {
            records.push_back(std::move(record));
        }
    }

    // Final housekeeping: age out whatever never found its counterpart. A
    // second horizon rejects resend requests that were never answered.
    std::int64_t horizon = max_delivery_ms + config.timeout_policy.wait_limit_ms + 1;
    for (int round = 0; round < 2 && rec.pending_count() > 0; ++round) {
        const auto t0 = clock::now();
        reconciler::Reconciler::IngestResult r = rec.expire(horizon, config.timeout_policy);
        const auto t1 = clock::now();
        result.ingest_total_ns +=
            std::chrono::duration_cast<std::chrono::nanoseconds>(t1 - t0).count();
        for (const reconciler::Event& e : r.events) {
            if (e.kind == reconciler::Event::Kind::Rejected) ++result.rejected;
            if (e.kind == reconciler::Event::Kind::ResendRequested) ++result.resend_requests;
        }
        events.insert(events.end(), r.events.begin(), r.events.end());
        for (reconciler::ReconciledRecord& record : r.records) {
            records.push_back(std::move(record));
        }
        horizon += config.timeout_policy.wait_limit_ms + 1;
    }

    // The received batches are the billing-side switch archive and the
    // source of the schedule window table.
    std::sort(switch_batches.begin(), switch_batches.end(),
              [](const ScheduleBatch& a, const ScheduleBatch& b) {
                  return a.schedule_id < b.schedule_id;
              });
    std::vector<ScheduleWindow> window_table;
    for (const ScheduleBatch& batch : switch_batches) {
        nlohmann::json lines;
        std::string text;
        for (const CallRecord& record : batch.records) {
            nlohmann::json j = record;
            j["schedule_id"] = batch.schedule_id;
            text += j.dump();
            text += '\n';
        }
        write_file(dir / ("switch_T" + std::to_string(batch.schedule_id) + ".jsonl"), text);
        window_table.push_back({batch.schedule_id, batch.window});
    }
    std::sort(window_table.begin(), window_table.end(),
              [](const ScheduleWindow& a, const ScheduleWindow& b) {
                  return a.window.start_ms < b.window.start_ms;
              });
    write_file(dir / "schedules.json", nlohmann::json(window_table).dump(2) + "\n");

    // Tag each record and mirror it into its billing archive.
    std::map<std::uint64_t, std::vector<reconciler::ReconciledRecord>> by_schedule;
    for (const ScheduleBatch& batch : switch_batches) by_schedule[batch.schedule_id];
    for (reconciler::ReconciledRecord& record : records) {
        record = reconciler::tag_schedule(std::move(record), window_table);
        if (record.provenance == reconciler::Provenance::FullyReconciled) {
            ++result.reconciled;
        } else {
            ++result.billed_without_handset;
        }
        by_schedule[record.billing_schedule_id].push_back(std::move(record));
    }

    std::size_t record_bytes = 0;
    std::size_t record_count = 0;
    std::vector<std::pair<std::uint64_t, std::int64_t>> batch_ns;
    for (auto& [schedule_id, batch_records] : by_schedule) {
        std::sort(batch_records.begin(), batch_records.end(),
                  [](const reconciler::ReconciledRecord& a, const reconciler::ReconciledRecord& b) {
                      return a.call_id < b.call_id;
                  });
        std::string text;
        std::int64_t ns = 0;
        for (const reconciler::ReconciledRecord& record : batch_records) {
            const std::string line = nlohmann::json(record).dump();
            record_bytes += line.size();
            ++record_count;
            text += line;
            text += '\n';
            auto it = message_ns.find(record.correlation_id);
            if (it != message_ns.end()) ns += it->second;
        }
        write_file(dir / ("billing_Tp" + std::to_string(schedule_id) + ".jsonl"), text);
        batch_ns.emplace_back(schedule_id, ns);
    }
    result.batch_ingest_ns = std::move(batch_ns);
    result.avg_record_size_bytes =
        record_count > 0 ? static_cast<double>(record_bytes) / static_cast<double>(record_count)
                         : 0.0;
    result.avg_ns_per_message =
        result.message_count > 0
            ? static_cast<double>(result.ingest_total_ns) /
                  static_cast<double>(result.message_count)
            : 0.0;

    std::string event_text;
    for (const reconciler::Event& e : events) {
        nlohmann::json j{
            {"kind", reconciler::to_string(e.kind)},
            {"correlation_id", e.correlation_id},
            {"source", envelope::to_string(e.source)},
            {"time_ms", e.time_ms},
        };
        event_text += j.dump();
        event_text += '\n';
    }
    write_file(dir / "reconcile_events.jsonl", event_text);

    nlohmann::json batch_times = nlohmann::json::array();
    for (const auto& [schedule_id, ns] : result.batch_ingest_ns) {
        batch_times.push_back(nlohmann::json{{"schedule_id", schedule_id}, {"ns", ns}});
    }
    nlohmann::json metrics{
        {"message_count", result.message_count},
        {"ingest_total_ns", result.ingest_total_ns},
        {"avg_ns_per_message", result.avg_ns_per_message},
        {"avg_record_size_bytes", result.avg_record_size_bytes},
        {"reconciled", result.reconciled},
        {"billed_without_handset", result.billed_without_handset},
        {"rejected", result.rejected},
        {"duplicates", result.duplicates},
        {"resend_requests", result.resend_requests},
        {"batch_ingest_ns", std::move(batch_times)},
    };
    write_file(dir / "reconcile_metrics.json", metrics.dump(2) + "\n");
    return result;
}

// --- assure --------------------------------------------------------------------

namespace {

ScheduleBatch read_switch_archive(const fs::path& path, std::uint64_t schedule_id) {
    ScheduleBatch batch;
    batch.schedule_id = schedule_id;
    for (const std::string& line : read_lines(path)) {
        const nlohmann::json j = nlohmann::json::parse(line);
        if (j.at("schedule_id").get<std::uint64_t>() != schedule_id) {
            raise(ErrorCode::ScheduleMismatch,
                  "record in " + path.filename().string() + " carries a foreign schedule_id");
        }
        batch.records.push_back(j.get<CallRecord>());
    }
    if (batch.records.empty()) {
        raise(ErrorCode::ScheduleMismatch, path.filename().string() + " holds no records");
    }
    batch.window = TimeWindow{batch.records.front().start_time_ms,
                              batch.records.back().start_time_ms + 1};
    return batch;
}

nlohmann::json merged_entry_json(const assurance::MergedEntry& entry) {
    nlohmann::json j;
    j["call_id"] = entry.call_id;
    j["switch"] = entry.switch_record ? nlohmann::json(*entry.switch_record)
                                      : nlohmann::json(nullptr);
    j["billing"] = entry.billing_record ? nlohmann::json(*entry.billing_record)
                                        : nlohmann::json(nullptr);
    return j;
}

nlohmann::json marks_trailer_json(const assurance::AssuranceFile& file) {
    nlohmann::json params = nlohmann::json::array();
    for (const assurance::ParameterMark& mark : file.parameter_marks) {
        params.push_back(nlohmann::json{{"call_id", mark.call_id},
                                        {"field", mark.field},
                                        {"switch_value", mark.switch_value},
                                        {"billing_value", mark.billing_value}});
    }
    nlohmann::json j;
    j["marks"] = nlohmann::json{
        {"count",
         nlohmann::json{{"match", file.count_mark.match},
                        {"switch_count", file.count_mark.switch_count},
                        {"billing_count", file.count_mark.billing_count}}},
        {"unmatched", file.unmatched_marks},
        {"parameters", std::move(params)},
    };
    j["switch_schedule_id"] = file.switch_schedule_id;
    j["billing_schedule_id"] = file.billing_schedule_id;
    j["window"] = file.window;
    return j;
}

assurance::AssuranceFile read_assurance_file(const fs::path& path) {
    const std::vector<std::string> lines = read_lines(path);
    if (lines.empty()) raise(ErrorCode::IoError, path.string() + " is empty");

    assurance::AssuranceFile file;
    for (std::size_t i = 0; i + 1 < lines.size(); ++i) {
        const nlohmann::json j = nlohmann::json::parse(lines[i]);
        assurance::MergedEntry entry;
        entry.call_id = j.at("call_id").get<CallId>();
        if (!j.at("switch").is_null()) entry.switch_record = j.at("switch").get<CallRecord>();
        if (!j.at("billing").is_null()) entry.billing_record = j.at("billing").get<CallRecord>();
        file.merged.push_back(std::move(entry));
    }
    const nlohmann::json trailer = nlohmann::json::parse(lines.back());
    const nlohmann::json& marks = trailer.at("marks");
    file.count_mark.match = marks.at("count").at("match").get<bool>();
    file.count_mark.switch_count = marks.at("count").at("switch_count").get<std::size_t>();
    file.count_mark.billing_count = marks.at("count").at("billing_count").get<std::size_t>();
    file.unmatched_marks = marks.at("unmatched").get<std::vector<CallId>>();
    for (const nlohmann::json& m : marks.at("parameters")) {
        file.parameter_marks.push_back({m.at("call_id").get<CallId>(),
                                        m.at("field").get<std::string>(),
                                        m.at("switch_value").get<std::string>(),
                                        m.at("billing_value").get<std::string>()});
    }
    file.switch_schedule_id = trailer.at("switch_schedule_id").get<std::uint64_t>();
    file.billing_schedule_id = trailer.at("billing_schedule_id").get<std::uint64_t>();
    trailer.at("window").get_to(file.window);
    return file;
}

}  // namespace

AssureResult assure_stage(const RunConfig& config) {
    validate(config);
    const fs::path dir(config.output_dir);

    const auto switch_files = archive_files(dir, "switch_T");
    const auto billing_files = archive_files(dir, "billing_Tp");
    if (switch_files.empty()) {
        raise(ErrorCode::IoError,
              "no switch archives under " + dir.string() + "; run simulate and reconcile first");
    }
    std::map<std::uint64_t, fs::path> billing_by_id(billing_files.begin(), billing_files.end());
    for (const auto& [schedule_id, path] : billing_files) {
        (void)path;
        bool found = false;
        for (const auto& [sw_id, sw_path] : switch_files) {
            (void)sw_path;
            if (sw_id == schedule_id) found = true;
        }
        if (!found) {
            raise(ErrorCode::ScheduleMismatch,
                  "billing schedule " + std::to_string(schedule_id) + " has no switch mirror");
        }
    }

    AssureResult result;
    for (const auto& [schedule_id, switch_path] : switch_files) {
        const ScheduleBatch switch_batch = read_switch_archive(switch_path, schedule_id);

        ScheduleBatch billing_batch;
        billing_batch.schedule_id = schedule_id;
        billing_batch.window = switch_batch.window;  // T' mirrors the switch schedule
        auto billing_it = billing_by_id.find(schedule_id);
        if (billing_it != billing_by_id.end()) {
            const auto reconciled =
                read_jsonl<reconciler::ReconciledRecord>(billing_it->second);
            billing_batch.records = assurance::rate_records(reconciled, config.tariff);
        }

        assurance::AssuranceFile file = assurance::contrast_parameters(
            assurance::merge_archives(switch_batch, billing_batch),
            assurance::kDefaultContrastFields);

        std::string text;
        for (const assurance::MergedEntry& entry : file.merged) {
            text += merged_entry_json(entry).dump();
            text += '\n';
        }
        text += marks_trailer_json(file).dump();
        text += '\n';
        write_file(dir / ("assurance_T" + std::to_string(schedule_id) + ".jsonl"), text);

        ++result.schedule_pairs;
        result.merged_rows += file.merged.size();
        if (!file.count_mark.match) ++result.count_mismatches;
        for (const assurance::MergedEntry& entry : file.merged) {
            if (entry.switch_record && !entry.billing_record) ++result.unmatched_switch_only;
            if (!entry.switch_record && entry.billing_record) ++result.unmatched_billing_only;
        }
        result.parameter_marks += file.parameter_marks.size();
    }

    nlohmann::json summary{
        {"schedule_pairs", result.schedule_pairs},
        {"merged_rows", result.merged_rows},
        {"count_mismatches", result.count_mismatches},
        {"unmatched_switch_only", result.unmatched_switch_only},
        {"unmatched_billing_only", result.unmatched_billing_only},
        {"parameter_marks", result.parameter_marks},
    };
    write_file(dir / "assure_summary.json", summary.dump(2) + "\n");
    return result;
}

// --- report --------------------------------------------------------------------

assurance::RevenueReport report_stage(const RunConfig& config) {
    validate(config);
    const fs::path dir(config.output_dir);

    std::vector<assurance::AssuranceFile> files;
    for (const auto& [schedule_id, path] : archive_files(dir, "assurance_T")) {
        (void)schedule_id;
        files.push_back(read_assurance_file(path));
    }

    std::map<std::string, assurance::Account> accounts;
    for (assurance::Account& account : read_jsonl<assurance::Account>(dir / "accounts.jsonl")) {
        std::string key = account.subscriber_number;
        accounts.emplace(std::move(key), std::move(account));
    }

    std::vector<assurance::FlaggedCharge> flagged;
    const assurance::RevenueReport report =
        assurance::revenue_report(files, config.tariff, accounts, &flagged);

    write_file(dir / "revenue_report.json", nlohmann::json(report).dump(2) + "\n");
    write_file(dir / "report.csv",
               assurance::report_csv_header() + "\n" + assurance::report_csv_row(report) + "\n");

    std::string flagged_text;
    for (const assurance::FlaggedCharge& f : flagged) {
        nlohmann::json j{{"call_id", f.call_id}, {"caller", f.caller}, {"charge", f.charge}};
        flagged_text += j.dump();
        flagged_text += '\n';
    }
    write_file(dir / "flagged.jsonl", flagged_text);

    std::vector<assurance::Account> final_rows;
    for (const auto& [subscriber, account] : accounts) {
        (void)subscriber;
        final_rows.push_back(account);
    }
    write_jsonl(dir / "accounts_final.jsonl", final_rows);
    return report;
}

RunResult run_pipeline(const RunConfig& config) {
    RunResult result;
    result.sim = simulate_stage(config);
    result.rec = reconcile_stage(config);
    result.assure = assure_stage(config);
    result.report = report_stage(config);

    result.metrics.message_count = result.sim.emitted;
    result.metrics.reconcile_total_ns = result.rec.ingest_total_ns;
    result.metrics.avg_reconcile_ns_per_message = result.rec.avg_ns_per_message;
    result.metrics.avg_record_size_bytes = result.rec.avg_record_size_bytes;
    result.metrics.revenue_before = result.report.balance_before_extended_mamo;
    result.metrics.revenue_after = result.report.balance_after_extended_mamo;
    result.metrics.recovered_pct = result.report.recovered_percentage;

    nlohmann::json metrics{
        {"message_count", result.metrics.message_count},
        {"reconcile_total_ns", result.metrics.reconcile_total_ns},
        {"avg_reconcile_ns_per_message", result.metrics.avg_reconcile_ns_per_message},
        {"avg_record_size_bytes", result.metrics.avg_record_size_bytes},
        {"revenue_before", result.metrics.revenue_before},
        {"revenue_after", result.metrics.revenue_after},
        {"recovered_pct", result.metrics.recovered_pct},
    };
    write_file(fs::path(config.output_dir) / "run_metrics.json", metrics.dump(2) + "\n");
    return result;
}

// --- bench ---------------------------------------------------------------------

std::vector<BenchPoint> run_bench(const RunConfig& base,
                                  const std::vector<std::size_t>& message_counts) {
    std::vector<BenchPoint> points;
    for (std::size_t count : message_counts) {
        RunConfig config = base;
        config.call_count = count / 2;
        config.output_dir =
            (fs::path(base.output_dir) / ("bench_" + std::to_string(count))).string();
        const RunResult run = run_pipeline(config);
        points.push_back({count, run.rec.ingest_total_ns, run.rec.avg_ns_per_message,
                          run.rec.avg_record_size_bytes});
    }
    return points;
}

void write_bench_csv(const std::vector<BenchPoint>& points, const fs::path& path) {
    std::string out = "message_count,reconcile_total_ns,avg_ns_per_message,avg_record_size_bytes\n";
    for (const BenchPoint& p : points) {
        char buf[160];
        std::snprintf(buf, sizeof(buf), "%zu,%" PRId64 ",%.1f,%.1f\n", p.message_count,
                      p.reconcile_total_ns, p.avg_ns_per_message, p.avg_record_size_bytes);
        out += buf;
    }
    write_file(path, out);
}

double scaling_exponent(const std::vector<BenchPoint>& points) {
    if (points.size() < 2) raise(ErrorCode::ConfigError, "need at least two bench points");
    double sx = 0, sy = 0, sxx = 0, sxy = 0;
    const double n = static_cast<double>(points.size());
    for (const BenchPoint& p : points) {
        const double x = std::log(static_cast<double>(p.message_count));
        const double y = std::log(std::max<double>(1.0, static_cast<double>(p.reconcile_total_ns)));
        sx += x;
        sy += y;
        sxx += x * x;
        sxy += x * y;
    }
    return (n * sxy - sx * sy) / (n * sxx - sx * sx);
}

}  // namespace mamo::pipeline
