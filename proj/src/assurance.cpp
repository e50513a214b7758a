#include "mamo/assurance.hpp"

#include <algorithm>
#include <cinttypes>
#include <cstdio>

#include "mamo/errors.hpp"

namespace mamo::assurance {
namespace {

void check_unique_ids(const std::vector<CallRecord>& sorted, const char* side) {
    for (std::size_t i = 1; i < sorted.size(); ++i) {
        if (sorted[i].call_id == sorted[i - 1].call_id) {
            raise(ErrorCode::ConfigError, std::string("duplicate call_id in ") + side +
                                              " archive: " +
                                              std::to_string(sorted[i].call_id));
        }
    }
}

}  // namespace

std::vector<CallRecord> sort_archive(std::vector<CallRecord> records) {
    std::stable_sort(records.begin(), records.end(), [](const CallRecord& a, const CallRecord& b) {
        if (a.call_id != b.call_id) return a.call_id < b.call_id;
        return a.start_time_ms < b.start_time_ms;
    });
    return records;
}

AssuranceFile merge_archives(const ScheduleBatch& switch_batch,
                             const ScheduleBatch& billing_batch) {
    if (!(switch_batch.window == billing_batch.window)) {
        raise(ErrorCode::ScheduleMismatch,
              "switch and billing schedules cover different windows");
    }

    const std::vector<CallRecord> sw = sort_archive(switch_batch.records);
    const std::vector<CallRecord> bl = sort_archive(billing_batch.records);
    check_unique_ids(sw, "switch");
    check_unique_ids(bl, "billing");

    AssuranceFile file;
    file.switch_schedule_id = switch_batch.schedule_id;
    file.billing_schedule_id = billing_batch.schedule_id;
    file.window = switch_batch.window;

    std::size_t i = 0;
    std::size_t j = 0;
    while (i < sw.size() || j < bl.size()) {
        MergedEntry entry;
        if (j == bl.size() || (i < sw.size() && sw[i].call_id < bl[j].call_id)) {
            entry.call_id = sw[i].call_id;
            entry.switch_record = sw[i++];
        } else if (i == sw.size() || bl[j].call_id < sw[i].call_id) {
            entry.call_id = bl[j].call_id;
            entry.billing_record = bl[j++];
        } else {
            entry.call_id = sw[i].call_id;
            entry.switch_record = sw[i++];
            entry.billing_record = bl[j++];
        }
        if (!entry.switch_record || !entry.billing_record) {
            file.unmatched_marks.push_back(entry.call_id);
        }
        file.merged.push_back(std::move(entry));
    }

    file.count_mark = CountMark{sw.size() == bl.size(), sw.size(), bl.size()};
    return file;
}

std::string field_value(const CallRecord& record, const std::string& field) {
    if (field == "charged_duration") return std::to_string(record.charged_duration);
    if (field == "final_charge") return std::to_string(record.final_charge);
    if (field == "account_before") return std::to_string(record.account_before);
    if (field == "account_after") return std::to_string(record.account_after);
    if (field == "start_time_ms") return std::to_string(record.start_time_ms);
    if (field == "caller") return record.caller;
    if (field == "callee") return record.callee;
    raise(ErrorCode::UnknownField, "no contrastable field named " + field);
}

AssuranceFile contrast_parameters(AssuranceFile file, const std::vector<std::string>& fields) {
    for (const MergedEntry& entry : file.merged) {
        if (!entry.switch_record || !entry.billing_record) continue;
        for (const std::string& field : fields) {
            const std::string sv = field_value(*entry.switch_record, field);
            const std::string bv = field_value(*entry.billing_record, field);
            if (sv != bv) file.parameter_marks.push_back({entry.call_id, field, sv, bv});
        }
    }
    return file;
}

Money rate_call(const CallRecord& record, const Tariff& tariff) {
    return rate_for_duration(record.charged_duration, tariff);
}

std::vector<CallRecord> rate_records(const std::vector<reconciler::ReconciledRecord>& records,
                                     const Tariff& tariff) {
    std::vector<CallRecord> out;
    out.reserve(records.size());
    for (const reconciler::ReconciledRecord& r : records) {
        CallRecord c;
        c.call_id = r.call_id;
        c.correlation_id = r.correlation_id;
        c.start_time_ms = r.in_fields.start_time_ms;
        c.charged_duration = r.in_fields.charged_duration;
        c.final_charge = rate_for_duration(c.charged_duration, tariff);
        c.account_before = r.in_fields.account_before;
        c.account_after = c.account_before - c.final_charge;
        c.caller = r.in_fields.caller;
        c.callee = r.in_fields.callee;
        out.push_back(std::move(c));
    }
    return out;
}

void to_json(nlohmann::json& j, const Account& a) {
    nlohmann::json log = nlohmann::json::array();
    for (const auto& [time_ms, amount] : a.recharge_log) {
        log.push_back(nlohmann::json{{"time_ms", time_ms}, {"amount", amount}});
    }
    j = nlohmann::json{{"subscriber_number", a.subscriber_number},
                       {"balance", a.balance},
                       {"floor", a.floor},
                       {"recharge_log", std::move(log)}};
}

void from_json(const nlohmann::json& j, Account& a) {
    j.at("subscriber_number").get_to(a.subscriber_number);
    j.at("balance").get_to(a.balance);
    j.at("floor").get_to(a.floor);
    a.recharge_log.clear();
    for (const nlohmann::json& entry : j.at("recharge_log")) {
        a.recharge_log.emplace_back(entry.at("time_ms").get<std::int64_t>(),
                                    entry.at("amount").get<Money>());
    }
}

Account adjust_balance(const Account& account, Money charge) {
    if (charge < 0) raise(ErrorCode::ConfigError, "charges cannot be negative");
    if (account.balance - charge < account.floor) {
        raise(ErrorCode::InsufficientBalance,
              account.subscriber_number + " cannot absorb charge " + std::to_string(charge));
    }
    Account adjusted = account;
    adjusted.balance -= charge;
    return adjusted;
}

void to_json(nlohmann::json& j, const RevenueReport& r) {
    j = nlohmann::json{
        {"recharge_count", r.recharge_count},
        {"total_transaction_amount", r.total_transaction_amount},
        {"net_calculation_amount", r.net_calculation_amount},
        {"balance_before_extended_mamo", r.balance_before_extended_mamo},
        {"balance_after_extended_mamo", r.balance_after_extended_mamo},
        {"recovered_amount", r.recovered_amount},
        {"recovered_percentage", r.recovered_percentage},
    };
}

void from_json(const nlohmann::json& j, RevenueReport& r) {
    j.at("recharge_count").get_to(r.recharge_count);
    j.at("total_transaction_amount").get_to(r.total_transaction_amount);
    j.at("net_calculation_amount").get_to(r.net_calculation_amount);
    j.at("balance_before_extended_mamo").get_to(r.balance_before_extended_mamo);
    j.at("balance_after_extended_mamo").get_to(r.balance_after_extended_mamo);
    j.at("recovered_amount").get_to(r.recovered_amount);
    j.at("recovered_percentage").get_to(r.recovered_percentage);
}

RevenueReport revenue_report(const std::vector<AssuranceFile>& files, const Tariff& tariff,
                             std::map<std::string, Account>& accounts,
                             std::vector<FlaggedCharge>* flagged) {
    RevenueReport report;

    struct Charge {
        CallId call_id;
        std::string caller;
        Money amount;
    };
    std::vector<Charge> charges;

    for (const AssuranceFile& file : files) {
        for (const MergedEntry& entry : file.merged) {
            if (entry.billing_record) {
                report.balance_before_extended_mamo += rate_call(*entry.billing_record, tariff);
            }
            // The switch copy is authoritative wherever it exists; rows the
            // billing side never saw are exactly the recovered revenue.
            const CallRecord& preferred =
                entry.switch_record ? *entry.switch_record : *entry.billing_record;
            charges.push_back({entry.call_id, preferred.caller, rate_call(preferred, tariff)});
        }
    }

    for (const Charge& c : charges) report.balance_after_extended_mamo += c.amount;
    report.total_transaction_amount = report.balance_after_extended_mamo;
    report.recovered_amount =
        report.balance_after_extended_mamo - report.balance_before_extended_mamo;
    report.recovered_percentage =
        report.balance_before_extended_mamo > 0
            ? 100.0 * static_cast<double>(report.recovered_amount) /
                  static_cast<double>(report.balance_before_extended_mamo)
            : 0.0;

    // Settle in global call order so the outcome cannot depend on the order
    // the schedule pairs were processed in.
    std::sort(charges.begin(), charges.end(),
              [](const Charge& a, const Charge& b) { return a.call_id < b.call_id; });
    Money uncollectible = 0;
    for (const Charge& c : charges) {
        auto [it, inserted] = accounts.try_emplace(c.caller);
        if (inserted) it->second.subscriber_number = c.caller;
        Account& account = it->second;
        if (account.balance - c.amount < account.floor) {
            uncollectible += c.amount;
            if (flagged) flagged->push_back({c.call_id, c.caller, c.amount});
            continue;
        }
        account.balance -= c.amount;
    }
    report.net_calculation_amount = report.total_transaction_amount - uncollectible;

    for (const auto& [subscriber, account] : accounts) {
        (void)subscriber;
        report.recharge_count += account.recharge_log.size();
    }
    return report;
}

std::string report_csv_header() {
    return "recharge_count,total_transaction_amount,net_calculation_amount,before,after,"
           "recovered,recovered_pct";
}

std::string report_csv_row(const RevenueReport& report) {
    char buf[256];
    std::snprintf(buf, sizeof(buf), "%zu,%" PRId64 ",%" PRId64 ",%" PRId64 ",%" PRId64
                                    ",%" PRId64 ",%.4f",
                  report.recharge_count, report.total_transaction_amount,
                  report.net_calculation_amount, report.balance_before_extended_mamo,
                  report.balance_after_extended_mamo, report.recovered_amount,
                  report.recovered_percentage);
    return buf;
}

}  // namespace mamo::assurance
