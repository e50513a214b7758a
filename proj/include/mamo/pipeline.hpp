#pragma once

#include <cstdint>
#include <filesystem>
#include <string>
#include <vector>

#include "mamo/assurance.hpp"
#include "mamo/netsim.hpp"
#include "mamo/reconciler.hpp"
#include "mamo/records.hpp"

namespace mamo::pipeline {

struct RunConfig {
    std::size_t call_count = 100;
    std::int64_t window_seconds = 600;
    netsim::ChannelConfig channel{};
    std::size_t buffer_x = 100;
    std::size_t restorations_n = 10;
    double low_traffic_threshold = 0.3;
    Tariff tariff{};
    reconciler::TimeoutPolicy timeout_policy{};
    std::uint64_t seed = 1;
    std::string output_dir = "out";
};

void to_json(nlohmann::json& j, const RunConfig& c);
void from_json(const nlohmann::json& j, RunConfig& c);

// Throws ConfigError listing every offending field at once.
void validate(const RunConfig& config);
RunConfig load_config(const std::filesystem::path& path);

// Simulation clock origin (ms). Calls land in
// [kEpochMs, kEpochMs + window_seconds * 1000).
inline constexpr std::int64_t kEpochMs = 1'600'000'000'000;

// --- stage results -----------------------------------------------------------

struct SimulateResult {
    std::size_t call_count = 0;
    std::size_t emitted = 0;
    std::size_t delivered = 0;
    std::size_t dropped_in = 0;
    std::size_t dropped_handset = 0;
    std::size_t switch_batches = 0;
    std::size_t switch_records = 0;
};

struct ReconcileResult {
    std::size_t message_count = 0;       // handset + IN frames ingested
    std::size_t reconciled = 0;
    std::size_t billed_without_handset = 0;
    std::size_t rejected = 0;
    std::size_t duplicates = 0;
    std::size_t resend_requests = 0;
    std::int64_t ingest_total_ns = 0;
    double avg_ns_per_message = 0.0;
    double avg_record_size_bytes = 0.0;
    std::vector<std::pair<std::uint64_t, std::int64_t>> batch_ingest_ns;
};

struct AssureResult {
    std::size_t schedule_pairs = 0;
    std::size_t merged_rows = 0;
    std::size_t count_mismatches = 0;
    std::size_t unmatched_switch_only = 0;
    std::size_t unmatched_billing_only = 0;
    std::size_t parameter_marks = 0;
};

struct RunMetrics {
    std::size_t message_count = 0;
    std::int64_t reconcile_total_ns = 0;
    double avg_reconcile_ns_per_message = 0.0;
    double avg_record_size_bytes = 0.0;
    Money revenue_before = 0;
    Money revenue_after = 0;
    double recovered_pct = 0.0;
};

struct RunResult {
    SimulateResult sim;
    ReconcileResult rec;
    AssureResult assure;
    assurance::RevenueReport report;
    RunMetrics metrics;
};

// --- stages --------------------------------------------------------------------
// Each stage reads its inputs from and writes its outputs under
// config.output_dir, so a staged CLI run and run_pipeline produce
// byte-identical artifacts.

SimulateResult simulate_stage(const RunConfig& config);
ReconcileResult reconcile_stage(const RunConfig& config);
AssureResult assure_stage(const RunConfig& config);
assurance::RevenueReport report_stage(const RunConfig& config);

RunResult run_pipeline(const RunConfig& config);

// Scaling benchmark over the given total message counts (two messages per
// call). Writes one CSV row per run; timing covers the ingest loop only.
struct BenchPoint {
    std::size_t message_count = 0;
    std::int64_t reconcile_total_ns = 0;
    double avg_ns_per_message = 0.0;
    double avg_record_size_bytes = 0.0;
};

std::vector<BenchPoint> run_bench(const RunConfig& base, const std::vector<std::size_t>& message_counts);
void write_bench_csv(const std::vector<BenchPoint>& points, const std::filesystem::path& path);
// Least-squares slope of log(total_ns) against log(message_count).
double scaling_exponent(const std::vector<BenchPoint>& points);

}  // namespace mamo::pipeline
