// Command line front end for the billing pipeline. Subcommands map onto the
// pipeline stages; `bench` sweeps the reconciler across message volumes.

#include <cinttypes>
#include <cstdio>
#include <exception>
#include <optional>
#include <string>
#include <vector>

#include "CLI11.hpp"
#include "mamo/errors.hpp"
#include "mamo/pipeline.hpp"

namespace {

constexpr int kExitOk = 0;
constexpr int kExitConfig = 2;
constexpr int kExitFailure = 3;

struct CommonArgs {
    std::string config_path;
    std::optional<std::uint64_t> seed;
    std::optional<std::string> out_dir;
};

void add_common(CLI::App* cmd, CommonArgs& args) {
    cmd->add_option("--config", args.config_path, "Run configuration JSON")
        ->required()
        ->check(CLI::ExistingFile);
    cmd->add_option("--seed", args.seed, "Override the run seed");
    cmd->add_option("--out", args.out_dir, "Override the output directory");
}

mamo::pipeline::RunConfig resolve(const CommonArgs& args) {
    mamo::pipeline::RunConfig config = mamo::pipeline::load_config(args.config_path);
    if (args.seed) config.seed = *args.seed;
    if (args.out_dir) config.output_dir = *args.out_dir;
    mamo::pipeline::validate(config);
    return config;
}

void print_report(const mamo::assurance::RevenueReport& r) {
    std::printf("recharge_count            %zu\n", r.recharge_count);
    std::printf("total_transaction_amount  %" PRId64 "\n", r.total_transaction_amount);
    std::printf("net_calculation_amount    %" PRId64 "\n", r.net_calculation_amount);
    std::printf("balance_before            %" PRId64 "\n", r.balance_before_extended_mamo);
    std::printf("balance_after             %" PRId64 "\n", r.balance_after_extended_mamo);
    std::printf("recovered_amount          %" PRId64 "\n", r.recovered_amount);
    std::printf("recovered_percentage      %.4f\n", r.recovered_percentage);
}

}  // namespace

int main(int argc, char** argv) {
    CLI::App app{"Grammar-authorized telecom billing simulator"};
    app.require_subcommand(1);

    CommonArgs simulate_args;
    CLI::App* simulate = app.add_subcommand("simulate", "Generate calls and deliver messages");
    add_common(simulate, simulate_args);

    CommonArgs reconcile_args;
    CLI::App* reconcile =
        app.add_subcommand("reconcile", "Pair delivered messages into billing archives");
    add_common(reconcile, reconcile_args);

    CommonArgs assure_args;
    CLI::App* assure =
        app.add_subcommand("assure", "Merge switch and billing archives and mark gaps");
    add_common(assure, assure_args);

    CommonArgs report_args;
    std::string report_csv;
    CLI::App* report = app.add_subcommand("report", "Settle charges and emit the revenue report");
    add_common(report, report_args);
    report->add_option("--csv", report_csv, "Also write the report CSV to this path");

    CommonArgs bench_args;
    std::string bench_csv;
    CLI::App* bench =
        app.add_subcommand("bench", "Run the pipeline across message volumes and time it");
    add_common(bench, bench_args);
    bench->add_option("--csv", bench_csv, "Write the timing CSV to this path");

    try {
        app.parse(argc, argv);
    } catch (const CLI::ParseError& e) {
        // Help and version land here with exit code 0; anything else is a
        // usage problem and maps to the config exit code.
        const int code = app.exit(e);
        return code == 0 ? kExitOk : kExitConfig;
    }

    try {
        if (simulate->parsed()) {
            const mamo::pipeline::SimulateResult r =
                mamo::pipeline::simulate_stage(resolve(simulate_args));
            std::printf("calls=%zu emitted=%zu delivered=%zu dropped_in=%zu "
                        "dropped_handset=%zu switch_batches=%zu\n",
                        r.call_count, r.emitted, r.delivered, r.dropped_in, r.dropped_handset,
                        r.switch_batches);
        } else if (reconcile->parsed()) {
            const mamo::pipeline::ReconcileResult r =
                mamo::pipeline::reconcile_stage(resolve(reconcile_args));
            std::printf("messages=%zu reconciled=%zu billed_without_handset=%zu rejected=%zu "
                        "duplicates=%zu avg_ns_per_message=%.1f\n",
                        r.message_count, r.reconciled, r.billed_without_handset, r.rejected,
                        r.duplicates, r.avg_ns_per_message);
        } else if (assure->parsed()) {
            const mamo::pipeline::AssureResult r =
                mamo::pipeline::assure_stage(resolve(assure_args));
            std::printf("schedule_pairs=%zu merged_rows=%zu count_mismatches=%zu "
                        "unmatched_switch_only=%zu parameter_marks=%zu\n",
                        r.schedule_pairs, r.merged_rows, r.count_mismatches,
                        r.unmatched_switch_only, r.parameter_marks);
        } else if (report->parsed()) {
            const mamo::pipeline::RunConfig config = resolve(report_args);
            const mamo::assurance::RevenueReport r = mamo::pipeline::report_stage(config);
            print_report(r);
            if (!report_csv.empty()) {
                const std::string csv = mamo::assurance::report_csv_header() + "\n" +
                                        mamo::assurance::report_csv_row(r) + "\n";
                FILE* f = std::fopen(report_csv.c_str(), "wb");
                if (!f) mamo::raise(mamo::ErrorCode::IoError, "cannot write " + report_csv);
                std::fwrite(csv.data(), 1, csv.size(), f);
                std::fclose(f);
            }
        } else if (bench->parsed()) {
            const mamo::pipeline::RunConfig config = resolve(bench_args);
            const std::vector<std::size_t> counts = {1000, 5000, 10000, 15000, 20000};
            const std::vector<mamo::pipeline::BenchPoint> points =
                mamo::pipeline::run_bench(config, counts);
            const std::filesystem::path csv_path =
                bench_csv.empty() ? std::filesystem::path(config.output_dir) / "bench.csv"
                                  : std::filesystem::path(bench_csv);
            mamo::pipeline::write_bench_csv(points, csv_path);
            for (const mamo::pipeline::BenchPoint& p : points) {
                std::printf("messages=%zu total_ns=%" PRId64 " avg_ns=%.1f\n", p.message_count,
                            p.reconcile_total_ns, p.avg_ns_per_message);
            }
            std::printf("scaling_exponent=%.3f\n", mamo::pipeline::scaling_exponent(points));
        }
    } catch (const mamo::MamoError& e) {
        std::fprintf(stderr, "error: %s\n", e.what());
        return (e.code() == mamo::ErrorCode::ConfigError || e.code() == mamo::ErrorCode::IoError)
                   ? kExitConfig
                   : kExitFailure;
    } catch (const std::exception& e) {
        std::fprintf(stderr, "error: %s\n", e.what());
        return kExitFailure;
    }
    return kExitOk;
}
