#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include "json.hpp"

namespace mamo {

// All monetary amounts are integer minor units; balances never touch
// floating point.
using Money = std::int64_t;
using CallId = std::uint64_t;
using CorrelationId = std::uint64_t;

// Half-open interval [start_ms, end_ms).
struct TimeWindow {
    std::int64_t start_ms = 0;
    std::int64_t end_ms = 0;

    bool contains(std::int64_t t) const { return start_ms <= t && t < end_ms; }
    bool operator==(const TimeWindow&) const = default;
};

enum class Rounding { PerSecond, PerMinuteCeil };

struct Tariff {
    Money setup_fee = 0;
    Money rate_per_second = 0;
    Rounding rounding = Rounding::PerSecond;
};

Money rate_for_duration(std::int64_t charged_duration_s, const Tariff& tariff);

// Call detail record as archived by the switch and, after rating, by the
// billing side.
struct CallRecord {
    CallId call_id = 0;
    CorrelationId correlation_id = 0;
    std::int64_t start_time_ms = 0;
    std::int64_t charged_duration = 0;  // seconds
    Money final_charge = 0;
    Money account_before = 0;
    Money account_after = 0;
    std::string caller;
    std::string callee;

    bool operator==(const CallRecord&) const = default;
};

struct ScheduleBatch {
    std::uint64_t schedule_id = 0;
    TimeWindow window{};
    std::vector<CallRecord> records;  // ascending call_id
};

// Window table entry used to tag billing records with their schedule.
struct ScheduleWindow {
    std::uint64_t schedule_id = 0;
    TimeWindow window{};
};

void to_json(nlohmann::json& j, const TimeWindow& w);
void from_json(const nlohmann::json& j, TimeWindow& w);
void to_json(nlohmann::json& j, const Tariff& t);
void from_json(const nlohmann::json& j, Tariff& t);
void to_json(nlohmann::json& j, const CallRecord& r);
void from_json(const nlohmann::json& j, CallRecord& r);
void to_json(nlohmann::json& j, const ScheduleWindow& w);
void from_json(const nlohmann::json& j, ScheduleWindow& w);

}  // namespace mamo
