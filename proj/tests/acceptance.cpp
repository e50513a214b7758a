// Acceptance suite for the billing pipeline. Each criterion prints exactly
// one PASS/FAIL line; the process exits non-zero if any criterion failed.

#include <algorithm>
#include <chrono>
#include <cmath>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <map>
#include <optional>
#include <random>
#include <set>
#include <sstream>
#include <string>
#include <vector>

#include "mamo/assurance.hpp"
#include "mamo/envelope.hpp"
#include "mamo/netsim.hpp"
#include "mamo/pipeline.hpp"
#include "mamo/reconciler.hpp"
#include "support/grammar_oracle.hpp"
#include "support/merge_oracle.hpp"

namespace fs = std::filesystem;
using namespace mamo;
using Clock = std::chrono::steady_clock;

namespace {

struct Criterion {
    std::string detail;  // first failure, or summary numbers on success
    bool ok = true;

    void fail(const std::string& why) {
        if (ok) detail = why;
        ok = false;
    }
};

double seconds_since(Clock::time_point start) {
    return std::chrono::duration<double>(Clock::now() - start).count();
}

std::vector<std::string> strings_up_to(std::string_view sigma, std::size_t max_len) {
    std::vector<std::string> out = {""};
    std::size_t level_start = 0;
    for (std::size_t len = 1; len <= max_len; ++len) {
        const std::size_t level_end = out.size();
        for (std::size_t i = level_start; i < level_end; ++i) {
            for (char c : sigma) out.push_back(out[i] + c);
        }
        level_start = level_end;
    }
    return out;
}

fs::path scratch(const std::string& name) {
    const fs::path dir = fs::path("acceptance_scratch") / name;
    fs::remove_all(dir);
    fs::create_directories(dir);
    return dir;
}

std::string slurp(const fs::path& path) {
    std::ifstream in(path, std::ios::binary);
    std::ostringstream out;
    out << in.rdbuf();
    return out.str();
}

template <typename T>
std::vector<T> read_jsonl_file(const fs::path& path) {
    std::vector<T> out;
    std::ifstream in(path);
    std::string line;
    while (std::getline(in, line)) {
        if (line.empty()) continue;
        out.push_back(nlohmann::json::parse(line).get<T>());
    }
    return out;
}

pipeline::RunConfig base_run_config(const std::string& dir, std::uint64_t seed) {
    pipeline::RunConfig config;
    config.call_count = 100;
    config.window_seconds = 600;
    config.buffer_x = 100;
    config.restorations_n = 10;
    config.low_traffic_threshold = 0.3;
    config.tariff = Tariff{0, 1, Rounding::PerSecond};
    config.seed = seed;
    config.channel.seed = seed;
    config.output_dir = scratch(dir).string();
    return config;
}

Money ground_truth_total(const fs::path& out_dir, const Tariff& tariff) {
    Money total = 0;
    for (const netsim::GroundTruthCall& call :
         read_jsonl_file<netsim::GroundTruthCall>(out_dir / "calls.jsonl")) {
        total += rate_for_duration(call.duration_s, tariff);
    }
    return total;
}

// --- criterion 1: grammar oracle equivalence ---------------------------------

Criterion criterion_grammar_oracle() {
    Criterion c;
    const auto start = Clock::now();

    const std::vector<std::string> originals = strings_up_to("ab", 3);
    const std::vector<std::string> proposals = strings_up_to("ab", 5);
    std::size_t checked = 0;
    std::size_t disagreements = 0;

    for (authz::AuthorizationMode mode : authz::kAllModes) {
        for (const std::string& s : originals) {
            const std::set<std::string> language =
                testsupport::enumerate_language(s, mode, "ab", 5);
            for (const std::string& t : proposals) {
                const bool mine = authz::validate_edit(s, t, mode).accepted;
                const bool oracle = language.count(t) != 0;
                ++checked;
                if (mine != oracle) {
                    ++disagreements;
                    if (c.ok) {
                        c.fail("mode " + std::string(authz::to_string(mode)) + " s=\"" + s +
                               "\" t=\"" + t + "\": validate=" + (mine ? "1" : "0") +
                               " oracle=" + (oracle ? "1" : "0"));
                    }
                }
            }
        }
    }

    const double elapsed = seconds_since(start);
    if (elapsed >= 10.0) c.fail("sweep took " + std::to_string(elapsed) + " s (limit 10)");
    if (c.ok) {
        char buf[128];
        std::snprintf(buf, sizeof(buf), "%zu pairs, %zu disagreements, %.2f s", checked,
                      disagreements, elapsed);
        c.detail = buf;
    }
    return c;
}

// --- criterion 2: compatibility table ----------------------------------------

Criterion criterion_compatibility_table() {
    Criterion c;
    using authz::AuthorizationMode;
    constexpr AuthorizationMode RO = AuthorizationMode::ReadOnly;
    constexpr AuthorizationMode AB = AuthorizationMode::AddBeginning;
    constexpr AuthorizationMode AE = AuthorizationMode::AddEnd;
    constexpr AuthorizationMode AWO = AuthorizationMode::AddWithoutAlter;
    constexpr AuthorizationMode AWA = AuthorizationMode::AddWithAlter;

    const struct {
        AuthorizationMode existing;
        AuthorizationMode added;
        bool expected;
    } cells[20] = {
        {RO, AB, true},   {RO, AE, true},   {RO, AWO, false}, {RO, AWA, false},
        {AB, RO, true},   {AB, AE, true},   {AB, AWO, true},  {AB, AWA, false},
        {AE, RO, true},   {AE, AB, true},   {AE, AWO, true},  {AE, AWA, false},
        {AWO, RO, false}, {AWO, AB, true},  {AWO, AE, true},  {AWO, AWA, false},
        {AWA, RO, false}, {AWA, AB, true},  {AWA, AE, true},  {AWA, AWO, false},
    };

    for (const auto& cell : cells) {
        bool got = false;
        try {
            got = authz::is_compatible(cell.existing, cell.added);
        } catch (const MamoError& e) {
            c.fail(std::string("unexpected error on off-diagonal cell: ") + e.what());
            continue;
        }
        if (got != cell.expected) {
            c.fail(std::string("cell (") + authz::to_string(cell.existing) + ", " +
                   authz::to_string(cell.added) + ") = " + (got ? "Y" : "N") + ", table says " +
                   (cell.expected ? "Y" : "N"));
        }
    }
    for (authz::AuthorizationMode m : authz::kAllModes) {
        try {
            authz::is_compatible(m, m);
            c.fail(std::string("diagonal (") + authz::to_string(m) + ") did not raise");
        } catch (const MamoError& e) {
            if (e.code() != ErrorCode::UndefinedDiagonal) {
                c.fail(std::string("diagonal raised wrong code: ") + e.what());
            }
        }
    }
    if (c.ok) c.detail = "20 cells exact, 5 diagonal cells undefined";
    return c;
}

// --- criterion 3: tamper evidence ---------------------------------------------

Criterion criterion_tamper_evidence() {
    Criterion c;
    std::mt19937_64 rng(0xACCE55);
    std::size_t corruptions = 0;
    std::size_t detected = 0;
    std::size_t clean_failures = 0;

    for (int seg = 0; seg < 10; ++seg) {
        const std::size_t text_len = rng() % 65;
        std::string text;
        for (std::size_t i = 0; i < text_len; ++i) {
            text.push_back(static_cast<char>('!' + rng() % 94));
        }
        const auto mode = authz::kAllModes[rng() % std::size(authz::kAllModes)];
        const crypto::OwnerKey key =
            crypto::OwnerKey::derive("owner-" + std::to_string(seg), rng());
        const std::size_t padding = rng() % 32;
        const envelope::SealedSegment sealed =
            envelope::seal_segment(text, mode, key, padding, rng);

        try {
            const envelope::OpenedSegment opened = envelope::open_segment(sealed, key);
            if (opened.text != text) {
                ++clean_failures;
                c.fail("clean open returned different text for segment " + std::to_string(seg));
            }
        } catch (const MamoError& e) {
            ++clean_failures;
            c.fail("clean open failed for segment " + std::to_string(seg) + ": " + e.what());
        }

        for (int part = 0; part < 2; ++part) {
            const std::string& original = part == 0 ? sealed.header : sealed.body;
            for (std::size_t byte = 0; byte < original.size(); ++byte) {
                for (int bit = 0; bit < 8; ++bit) {
                    envelope::SealedSegment corrupt = sealed;
                    std::string& target = part == 0 ? corrupt.header : corrupt.body;
                    target[byte] = static_cast<char>(target[byte] ^ (1 << bit));
                    ++corruptions;
                    try {
                        envelope::open_segment(corrupt, key);
                        c.fail("segment " + std::to_string(seg) + " " +
                               (part == 0 ? "header" : "body") + " byte " +
                               std::to_string(byte) + " bit " + std::to_string(bit) +
                               " opened after corruption");
                    } catch (const MamoError&) {
                        ++detected;
                    }
                }
            }
        }
    }

    if (c.ok) {
        char buf[128];
        std::snprintf(buf, sizeof(buf), "%zu corruptions all detected, %zu false failures",
                      corruptions, clean_failures);
        c.detail = buf;
    }
    return c;
}

// --- criterion 4: revenue recovery at scale ------------------------------------

Criterion criterion_revenue_recovery() {
    Criterion c;
    pipeline::RunConfig config = base_run_config("revenue_recovery", 20'26'01);
    config.call_count = 10'000;
    config.channel.in_drop_probability = 0.05;
    config.channel.reorder_window = 50;

    const pipeline::RunResult result = pipeline::run_pipeline(config);
    const fs::path dir(config.output_dir);

    const Money truth = ground_truth_total(dir, config.tariff);
    if (result.report.balance_after_extended_mamo != truth) {
        c.fail("after=" + std::to_string(result.report.balance_after_extended_mamo) +
               " truth=" + std::to_string(truth));
    }

    if (result.sim.dropped_in == 0) c.fail("expected drops at p=0.05");
    if (result.assure.unmatched_switch_only != result.sim.dropped_in) {
        c.fail("unmatched=" + std::to_string(result.assure.unmatched_switch_only) +
               " dropped=" + std::to_string(result.sim.dropped_in));
    }

    // The recovered amount must equal the rated charges of exactly the calls
    // whose IN record the channel dropped (per-run identity, no tolerance).
    std::map<CorrelationId, Money> charge_by_corr;
    for (const netsim::GroundTruthCall& call :
         read_jsonl_file<netsim::GroundTruthCall>(dir / "calls.jsonl")) {
        charge_by_corr[call.correlation_id] = rate_for_duration(call.duration_s, config.tariff);
    }
    Money shortfall = 0;
    std::ifstream drops(dir / "drops.jsonl");
    std::string line;
    while (std::getline(drops, line)) {
        if (line.empty()) continue;
        const nlohmann::json j = nlohmann::json::parse(line);
        if (j.at("source").get<std::string>() != "in") continue;
        shortfall += charge_by_corr.at(j.at("correlation_id").get<CorrelationId>());
    }
    if (result.report.recovered_amount != shortfall) {
        c.fail("recovered=" + std::to_string(result.report.recovered_amount) +
               " drop shortfall=" + std::to_string(shortfall));
    }

    const double expected_pct =
        100.0 * static_cast<double>(result.report.recovered_amount) /
        static_cast<double>(result.report.balance_before_extended_mamo);
    if (std::abs(result.report.recovered_percentage - expected_pct) > 1e-9) {
        c.fail("pct=" + std::to_string(result.report.recovered_percentage) +
               " expected=" + std::to_string(expected_pct));
    }

    if (c.ok) {
        char buf[160];
        std::snprintf(buf, sizeof(buf),
                      "10000 calls, %zu drops, recovered=%lld of %lld (%.2f%%)",
                      result.sim.dropped_in,
                      static_cast<long long>(result.report.recovered_amount),
                      static_cast<long long>(truth), result.report.recovered_percentage);
        c.detail = buf;
    }
    return c;
}

// --- criterion 5: exception handling -------------------------------------------

Criterion criterion_exception_handling() {
    Criterion c;

    // Part one: every handset message arrives long after its IN counterpart;
    // all calls must still pair FullyReconciled.
    {
        const netsim::KeyRing keys = netsim::KeyRing::derive(500);
        const std::vector<netsim::GroundTruthCall> calls =
            netsim::generate_calls(500, TimeWindow{0, 600'000}, 500);
        std::mt19937_64 seal_rng(500);
        reconciler::Reconciler rec(reconciler::Reconciler::Config{keys, "tp-01", 500});

        std::size_t fully = 0;
        std::size_t other = 0;
        for (const netsim::GroundTruthCall& call : calls) {
            const auto a =
                rec.ingest(netsim::in_emit(call, keys, seal_rng), netsim::in_emit_time_ms(call));
            other += a.records.size();
        }
        for (const netsim::GroundTruthCall& call : calls) {
            const auto b = rec.ingest(netsim::handset_emit(call, keys, seal_rng),
                                      netsim::handset_emit_time_ms(call) + 7'200'000);
            for (const reconciler::ReconciledRecord& r : b.records) {
                if (r.provenance == reconciler::Provenance::FullyReconciled) {
                    ++fully;
                } else {
                    ++other;
                }
            }
        }
        if (fully != 500 || other != 0) {
            c.fail("delayed handsets: fully=" + std::to_string(fully) +
                   " other=" + std::to_string(other));
        }
        if (rec.pending_count() != 0) {
            c.fail("delayed handsets left " + std::to_string(rec.pending_count()) + " pending");
        }
    }

    // Part two: total handset loss with bill-without-reconciliation still
    // bills every call and loses no revenue.
    {
        pipeline::RunConfig config = base_run_config("handset_blackout", 501);
        config.call_count = 1000;
        config.channel.handset_loss_probability = 1.0;
        config.timeout_policy.on_missing_handset =
            reconciler::MissingHandsetPolicy::BillWithoutReconciliation;

        const pipeline::RunResult result = pipeline::run_pipeline(config);
        const Money truth = ground_truth_total(fs::path(config.output_dir), config.tariff);

        if (result.rec.billed_without_handset != 1000) {
            c.fail("billed_without_handset=" + std::to_string(result.rec.billed_without_handset));
        }
        if (result.rec.reconciled != 0) {
            c.fail("reconciled=" + std::to_string(result.rec.reconciled) + " with no handsets");
        }
        std::size_t billed_without = 0;
        for (const auto& entry : fs::directory_iterator(config.output_dir)) {
            const std::string name = entry.path().filename().string();
            if (name.rfind("billing_Tp", 0) != 0) continue;
            for (const reconciler::ReconciledRecord& r :
                 read_jsonl_file<reconciler::ReconciledRecord>(entry.path())) {
                if (r.provenance == reconciler::Provenance::BilledWithoutHandset) {
                    ++billed_without;
                }
            }
        }
        if (billed_without != 1000) {
            c.fail("archived billed_without_handset=" + std::to_string(billed_without));
        }
        if (result.report.balance_after_extended_mamo != truth) {
            c.fail("blackout after=" +
                   std::to_string(result.report.balance_after_extended_mamo) +
                   " truth=" + std::to_string(truth));
        }
        if (result.report.recovered_amount != 0) {
            c.fail("blackout recovered=" + std::to_string(result.report.recovered_amount));
        }
    }

    if (c.ok) c.detail = "500 delayed pairs fully reconciled; 1000-call blackout fully billed";
    return c;
}

// --- criterion 6: reconciliation scaling ----------------------------------------

Criterion criterion_scaling() {
    Criterion c;
    pipeline::RunConfig base = base_run_config("scaling", 600);
    const std::vector<std::size_t> counts = {1000, 5000, 10000, 15000, 20000};
    const std::vector<pipeline::BenchPoint> points = pipeline::run_bench(base, counts);
    pipeline::write_bench_csv(points, fs::path(base.output_dir) / "bench.csv");

    const double exponent = pipeline::scaling_exponent(points);
    if (exponent >= 1.3) c.fail("fitted exponent " + std::to_string(exponent) + " >= 1.3");

    const pipeline::BenchPoint& largest = points.back();
    if (largest.message_count != 20000) c.fail("missing 20k point");
    const double largest_s = static_cast<double>(largest.reconcile_total_ns) / 1e9;
    if (largest_s >= 10.0) {
        c.fail("20k messages took " + std::to_string(largest_s) + " s (limit 10)");
    }

    if (c.ok) {
        char buf[128];
        std::snprintf(buf, sizeof(buf), "exponent %.3f, 20k messages in %.2f s", exponent,
                      largest_s);
        c.detail = buf;
    }
    return c;
}

// --- criterion 7: order insensitivity --------------------------------------------

Criterion criterion_order_insensitivity() {
    Criterion c;
    const std::uint64_t seed = 700;
    const netsim::KeyRing keys = netsim::KeyRing::derive(seed);
    const std::vector<netsim::GroundTruthCall> calls =
        netsim::generate_calls(300, TimeWindow{0, 600'000}, seed);
    const Tariff tariff{0, 1, Rounding::PerSecond};

    // Fixed switch side: one AD over all calls, shipped fully.
    netsim::AdSwitch::Config ad_config;
    ad_config.buffer_x = 50;
    ad_config.restorations_n = 2;
    ad_config.low_traffic_threshold = 1.0;
    ad_config.tariff = tariff;
    ad_config.seed = seed;
    ad_config.switch_key = keys.switch_key;
    netsim::AdSwitch ad(ad_config);
    for (const netsim::GroundTruthCall& call : calls) ad.ingest(call);
    ad.flush();
    std::vector<ScheduleBatch> batches;
    while (const auto batch = ad.probe(0.0)) batches.push_back(*batch);

    std::vector<ScheduleWindow> windows;
    for (const ScheduleBatch& b : batches) windows.push_back({b.schedule_id, b.window});

    // Fixed message multiset with per-message receive times.
    struct Timed {
        envelope::MamoMessage message;
        std::int64_t receive_ms;
    };
    std::vector<Timed> stream;
    std::mt19937_64 seal_rng(seed);
    std::int64_t horizon = 0;
    for (const netsim::GroundTruthCall& call : calls) {
        stream.push_back({netsim::in_emit(call, keys, seal_rng), netsim::in_emit_time_ms(call)});
        stream.push_back(
            {netsim::handset_emit(call, keys, seal_rng), netsim::handset_emit_time_ms(call)});
        horizon = std::max(horizon, netsim::handset_emit_time_ms(call));
    }
    const reconciler::TimeoutPolicy policy;

    std::optional<std::vector<std::string>> baseline_records;
    std::optional<nlohmann::json> baseline_report;
    std::mt19937_64 shuffle_rng(0x5EED);

    for (int perm = 0; perm < 20; ++perm) {
        std::vector<std::size_t> order(stream.size());
        for (std::size_t i = 0; i < order.size(); ++i) order[i] = i;
        std::shuffle(order.begin(), order.end(), shuffle_rng);

        reconciler::Reconciler rec(reconciler::Reconciler::Config{keys, "tp-01", seed});
        std::vector<reconciler::ReconciledRecord> records;
        for (std::size_t idx : order) {
            auto result = rec.ingest(stream[idx].message, stream[idx].receive_ms);
            for (auto& r : result.records) records.push_back(std::move(r));
        }
        auto expired = rec.expire(horizon + policy.wait_limit_ms + 1, policy);
        for (auto& r : expired.records) records.push_back(std::move(r));

        // Canonical form: schedule-tagged, serialized, sorted.
        std::vector<std::string> canonical;
        for (reconciler::ReconciledRecord r : records) {
            r = reconciler::tag_schedule(std::move(r), windows);
            canonical.push_back(nlohmann::json(r).dump());
        }
        std::sort(canonical.begin(), canonical.end());

        // Settle the permutation's records into a fresh report.
        std::map<std::uint64_t, std::vector<reconciler::ReconciledRecord>> by_schedule;
        for (reconciler::ReconciledRecord r : records) {
            r = reconciler::tag_schedule(std::move(r), windows);
            by_schedule[r.billing_schedule_id].push_back(std::move(r));
        }
        std::vector<assurance::AssuranceFile> files;
        for (const ScheduleBatch& sw : batches) {
            ScheduleBatch billing;
            billing.schedule_id = sw.schedule_id;
            billing.window = sw.window;
            const auto it = by_schedule.find(sw.schedule_id);
            if (it != by_schedule.end()) {
                billing.records = assurance::rate_records(it->second, tariff);
            }
            files.push_back(assurance::contrast_parameters(
                assurance::merge_archives(sw, billing), assurance::kDefaultContrastFields));
        }
        std::map<std::string, assurance::Account> accounts;
        for (const netsim::GroundTruthCall& call : calls) {
            accounts.emplace(call.caller,
                             assurance::Account{call.caller, 1'000'000, 0, {}});
        }
        const assurance::RevenueReport report =
            assurance::revenue_report(files, tariff, accounts, nullptr);
        const nlohmann::json report_json = report;

        if (!baseline_records) {
            baseline_records = canonical;
            baseline_report = report_json;
            continue;
        }
        if (canonical != *baseline_records) {
            c.fail("permutation " + std::to_string(perm) + " changed the record multiset");
        }
        if (report_json != *baseline_report) {
            c.fail("permutation " + std::to_string(perm) + " changed the revenue report");
        }
    }

    if (c.ok) {
        c.detail = "20 permutations of 600 messages, identical records and report";
    }
    return c;
}

// --- criterion 8: merge oracle ---------------------------------------------------

Criterion criterion_merge_oracle() {
    Criterion c;
    std::mt19937_64 rng(800);
    const TimeWindow window{0, 1'000'000};
    std::size_t disagreements = 0;

    for (int round = 0; round < 200; ++round) {
        ScheduleBatch sw;
        ScheduleBatch bl;
        sw.schedule_id = static_cast<std::uint64_t>(round) * 2 + 1;
        bl.schedule_id = static_cast<std::uint64_t>(round) * 2 + 2;
        sw.window = window;
        bl.window = window;

        const std::size_t id_space = 1 + rng() % 50;
        for (CallId id = 1; id <= id_space; ++id) {
            const std::uint64_t fate = rng() % 16;
            if (fate < 3) continue;  // absent on both sides
            CallRecord r;
            r.call_id = id;
            r.correlation_id = id * 7;
            r.start_time_ms = static_cast<std::int64_t>(rng() % 1'000'000);
            r.charged_duration = static_cast<std::int64_t>(rng() % 600);
            r.final_charge = r.charged_duration;
            r.account_before = static_cast<Money>(rng() % 100'000);
            r.account_after = r.account_before - r.final_charge;
            r.caller = "49" + std::to_string(rng() % 1000);
            r.callee = "49" + std::to_string(rng() % 1000);
            if (fate < 6) {
                sw.records.push_back(r);  // switch only
            } else if (fate < 9) {
                bl.records.push_back(r);  // billing only
            } else {
                sw.records.push_back(r);
                if (fate < 12) {
                    r.charged_duration += 1 + static_cast<std::int64_t>(rng() % 5);
                    r.final_charge = r.charged_duration;
                }
                bl.records.push_back(r);
            }
        }

        const assurance::AssuranceFile mine = assurance::contrast_parameters(
            assurance::merge_archives(sw, bl), assurance::kDefaultContrastFields);
        const assurance::AssuranceFile oracle =
            testsupport::merge_oracle(sw, bl, assurance::kDefaultContrastFields);

        const bool count_ok = mine.count_mark.match == oracle.count_mark.match &&
                              mine.count_mark.switch_count == oracle.count_mark.switch_count &&
                              mine.count_mark.billing_count == oracle.count_mark.billing_count;
        const bool rows_ok = [&] {
            if (mine.merged.size() != oracle.merged.size()) return false;
            for (std::size_t i = 0; i < mine.merged.size(); ++i) {
                if (mine.merged[i].call_id != oracle.merged[i].call_id) return false;
                if (mine.merged[i].switch_record != oracle.merged[i].switch_record) return false;
                if (mine.merged[i].billing_record != oracle.merged[i].billing_record) {
                    return false;
                }
            }
            return true;
        }();
        if (!count_ok || !rows_ok || mine.unmatched_marks != oracle.unmatched_marks ||
            mine.parameter_marks != oracle.parameter_marks) {
            ++disagreements;
            c.fail("round " + std::to_string(round) + " disagreed with the reference merge");
        }
    }

    if (c.ok) c.detail = "200 random archive pairs, 0 disagreements";
    return c;
}

// --- criterion 9: determinism -----------------------------------------------------

Criterion criterion_determinism() {
    Criterion c;

    pipeline::RunConfig first = base_run_config("determinism_a", 900);
    first.call_count = 400;
    first.channel.in_drop_probability = 0.08;
    first.channel.handset_loss_probability = 0.02;
    first.channel.reorder_window = 12;
    first.channel.delay_min_ms = 5;
    first.channel.delay_max_ms = 60;
    const pipeline::RunResult run_a = pipeline::run_pipeline(first);

    pipeline::RunConfig second = first;
    second.output_dir = scratch("determinism_b").string();
    const pipeline::RunResult run_b = pipeline::run_pipeline(second);

    const nlohmann::json report_a = run_a.report;
    const nlohmann::json report_b = run_b.report;
    if (report_a != report_b) c.fail("revenue reports differ between runs");

    const std::set<std::string> timing_files = {"reconcile_metrics.json", "run_metrics.json"};
    std::map<std::string, std::string> bytes_a;
    for (const auto& entry : fs::directory_iterator(first.output_dir)) {
        const std::string name = entry.path().filename().string();
        if (timing_files.count(name) != 0) continue;
        bytes_a[name] = slurp(entry.path());
    }
    std::size_t compared = 0;
    for (const auto& entry : fs::directory_iterator(second.output_dir)) {
        const std::string name = entry.path().filename().string();
        if (timing_files.count(name) != 0) continue;
        const auto it = bytes_a.find(name);
        if (it == bytes_a.end()) {
            c.fail("second run produced extra file " + name);
            continue;
        }
        ++compared;
        if (it->second != slurp(entry.path())) c.fail(name + " differs between runs");
    }
    if (compared != bytes_a.size()) c.fail("runs produced different file sets");
    if (compared == 0) c.fail("no files compared");

    if (c.ok) {
        c.detail = std::to_string(compared) + " artifacts byte-identical, reports equal";
    }
    return c;
}

struct Entry {
    const char* name;
    Criterion (*run)();
};

}  // namespace

int main() {
    const Entry entries[] = {
        {"1. grammar oracle equivalence", criterion_grammar_oracle},
        {"2. compatibility table reproduction", criterion_compatibility_table},
        {"3. tamper evidence", criterion_tamper_evidence},
        {"4. revenue recovery", criterion_revenue_recovery},
        {"5. exception handling", criterion_exception_handling},
        {"6. reconciliation scaling", criterion_scaling},
        {"7. order insensitivity", criterion_order_insensitivity},
        {"8. merge oracle agreement", criterion_merge_oracle},
        {"9. determinism", criterion_determinism},
    };

    int failures = 0;
    for (const Entry& entry : entries) {
        Criterion result;
        try {
            result = entry.run();
        } catch (const std::exception& e) {
            result.fail(std::string("unhandled exception: ") + e.what());
        }
        std::printf("%s  %s — %s\n", result.ok ? "PASS" : "FAIL", entry.name,
                    result.detail.c_str());
        std::fflush(stdout);
        if (!result.ok) ++failures;
    }
    return failures == 0 ? 0 : 1;
}
