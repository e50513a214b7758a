#include "mamo/records.hpp"

#include "mamo/errors.hpp"

namespace mamo {

Money rate_for_duration(std::int64_t charged_duration_s, const Tariff& tariff) {
    if (charged_duration_s < 0) raise(ErrorCode::ConfigError, "negative charged duration");
    switch (tariff.rounding) {
    case Rounding::PerSecond:
        return tariff.setup_fee + tariff.rate_per_second * charged_duration_s;
    case Rounding::PerMinuteCeil: {
        const std::int64_t minutes = (charged_duration_s + 59) / 60;
        return tariff.setup_fee + tariff.rate_per_second * 60 * minutes;
    }
    }
    raise(ErrorCode::ConfigError, "unknown rounding rule");
}

void to_json(nlohmann::json& j, const TimeWindow& w) {
    j = nlohmann::json{{"start_ms", w.start_ms}, {"end_ms", w.end_ms}};
}

void from_json(const nlohmann::json& j, TimeWindow& w) {
    j.at("start_ms").get_to(w.start_ms);
    j.at("end_ms").get_to(w.end_ms);
}

void to_json(nlohmann::json& j, const Tariff& t) {
    j = nlohmann::json{
        {"setup_fee", t.setup_fee},
        {"rate_per_second", t.rate_per_second},
        {"rounding", t.rounding == Rounding::PerSecond ? "per_second" : "per_minute_ceil"},
    };
}

void from_json(const nlohmann::json& j, Tariff& t) {
    j.at("setup_fee").get_to(t.setup_fee);
    j.at("rate_per_second").get_to(t.rate_per_second);
    const std::string rounding = j.at("rounding").get<std::string>();
    if (rounding == "per_second") {
        t.rounding = Rounding::PerSecond;
    } else if (rounding == "per_minute_ceil") {
        t.rounding = Rounding::PerMinuteCeil;
    } else {
        raise(ErrorCode::ConfigError, "tariff.rounding must be per_second or per_minute_ceil");
    }
}

void to_json(nlohmann::json& j, const CallRecord& r) {
    j = nlohmann::json{
        {"call_id", r.call_id},
        {"correlation_id", r.correlation_id},
        {"start_time_ms", r.start_time_ms},
        {"charged_duration", r.charged_duration},
        {"final_charge", r.final_charge},
        {"account_before", r.account_before},
        {"account_after", r.account_after},
        {"caller", r.caller},
        {"callee", r.callee},
    };
}

void from_json(const nlohmann::json& j, CallRecord& r) {
    j.at("call_id").get_to(r.call_id);
    j.at("correlation_id").get_to(r.correlation_id);
    j.at("start_time_ms").get_to(r.start_time_ms);
    j.at("charged_duration").get_to(r.charged_duration);
    j.at("final_charge").get_to(r.final_charge);
    j.at("account_before").get_to(r.account_before);
    j.at("account_after").get_to(r.account_after);
    j.at("caller").get_to(r.caller);
    j.at("callee").get_to(r.callee);
}

void to_json(nlohmann::json& j, const ScheduleWindow& w) {
    j = nlohmann::json{{"schedule_id", w.schedule_id}, {"window", w.window}};
}

void from_json(const nlohmann::json& j, ScheduleWindow& w) {
    j.at("schedule_id").get_to(w.schedule_id);
    j.at("window").get_to(w.window);
}

}  // namespace mamo
