#pragma once

#include <cstdint>
#include <map>
#include <optional>
#include <string>
#include <vector>

#include "mamo/reconciler.hpp"
#include "mamo/records.hpp"

namespace mamo::assurance {

// One row of the full outer merge of a switch batch against its billing
// mirror, keyed by call_id.
struct MergedEntry {
    CallId call_id = 0;
    std::optional<CallRecord> switch_record;
    std::optional<CallRecord> billing_record;
};

struct CountMark {
    bool match = true;
    std::size_t switch_count = 0;
    std::size_t billing_count = 0;
};

struct ParameterMark {
    CallId call_id = 0;
    std::string field;
    std::string switch_value;
    std::string billing_value;

    bool operator==(const ParameterMark&) const = default;
};

struct AssuranceFile {
    std::uint64_t switch_schedule_id = 0;
    std::uint64_t billing_schedule_id = 0;
    TimeWindow window{};
    std::vector<MergedEntry> merged;  // ascending call_id
    CountMark count_mark{};
    std::vector<CallId> unmatched_marks;      // ascending
    std::vector<ParameterMark> parameter_marks;
};

inline const std::vector<std::string> kDefaultContrastFields = {"charged_duration",
                                                                "final_charge"};

// Stable sort by call_id, ties by start_time_ms.
std::vector<CallRecord> sort_archive(std::vector<CallRecord> records);

// Requires equal windows (ScheduleMismatch otherwise) and unique call_ids
// per side. Produces the merge rows, the count mark and the unmatched marks.
AssuranceFile merge_archives(const ScheduleBatch& switch_batch, const ScheduleBatch& billing_batch);

// Field-by-field contrast of double-sided rows. Unknown field names raise
// UnknownField.
AssuranceFile contrast_parameters(AssuranceFile file, const std::vector<std::string>& fields);

// Registry lookup used both for contrast and its tests.
std::string field_value(const CallRecord& record, const std::string& field);

// --- rating and settlement ---------------------------------------------------

Money rate_call(const CallRecord& record, const Tariff& tariff);

// Rates reconciled records into billing-side call records.
std::vector<CallRecord> rate_records(const std::vector<reconciler::ReconciledRecord>& records,
                                     const Tariff& tariff);

struct Account {
    std::string subscriber_number;
    Money balance = 0;
    Money floor = 0;
    // (time_ms, amount) pairs, oldest first.
    std::vector<std::pair<std::int64_t, Money>> recharge_log;
};

void to_json(nlohmann::json& j, const Account& a);
void from_json(const nlohmann::json& j, Account& a);

// Debits the charge; throws InsufficientBalance when the result would fall
// below the account floor.
Account adjust_balance(const Account& account, Money charge);

struct FlaggedCharge {
    CallId call_id = 0;
    std::string caller;
    Money charge = 0;
};

struct RevenueReport {
    std::size_t recharge_count = 0;
    Money total_transaction_amount = 0;
    Money net_calculation_amount = 0;
    Money balance_before_extended_mamo = 0;
    Money balance_after_extended_mamo = 0;
    Money recovered_amount = 0;
    double recovered_percentage = 0.0;
};

void to_json(nlohmann::json& j, const RevenueReport& r);
void from_json(const nlohmann::json& j, RevenueReport& r);

// Folds every merge row into the final revenue picture. "Before" bills only
// what billing saw; "after" prefers the switch copy for every row, which is
// what recovers records billing lost. Charges settle against accounts in
// global call_id order, so the file order never changes the outcome.
// Charges an account cannot absorb are flagged and excluded from the net.
RevenueReport revenue_report(const std::vector<AssuranceFile>& files, const Tariff& tariff,
                             std::map<std::string, Account>& accounts,
                             std::vector<FlaggedCharge>* flagged = nullptr);

std::string report_csv_header();
std::string report_csv_row(const RevenueReport& report);

}  // namespace mamo::assurance
