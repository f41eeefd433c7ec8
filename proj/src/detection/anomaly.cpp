#include "cbm/detection/anomaly.hpp"

#include <cmath>
#include <tuple>

#include <fmt/format.h>
#include <nlohmann/json.hpp>

namespace cbm::detection {

const char* to_string(Method m) {
    switch (m) {
        case Method::trend: return "trend";
        case Method::limit: return "limit";
        case Method::pattern: return "pattern";
        case Method::statistical: return "statistical";
    }
    return "limit";
}

Method method_from_string(const std::string& s) {
    if (s == "trend") return Method::trend;
    if (s == "limit") return Method::limit;
    if (s == "pattern") return Method::pattern;
    if (s == "statistical") return Method::statistical;
    throw Error("unknown detection method '" + s + "'");
}

std::string make_anomaly_id(const std::string& asset, Method method, const std::string& channel,
                            const std::string& rule, Timestamp at) {
    return fmt::format("{}/{}/{}/{}@{}", asset, to_string(method), channel, rule, epoch_ms(at));
}

namespace {

int method_priority(Method m) {
    switch (m) {
        case Method::limit: return 0;
        case Method::trend: return 1;
        case Method::statistical: return 2;
        case Method::pattern: return 3;
    }
    return 4;
}

}  // namespace

bool action_order(const AnomalyEvent& a, const AnomalyEvent& b) {
    // Absent predictions sort after every present one.
    auto predicted = [](const AnomalyEvent& e) {
        return std::make_tuple(!e.predicted_failure_at.has_value(),
                               e.predicted_failure_at ? epoch_ms(*e.predicted_failure_at) : 0);
    };
    const auto ka = std::make_tuple(-static_cast<int>(a.severity), predicted(a), method_priority(a.method));
    const auto kb = std::make_tuple(-static_cast<int>(b.severity), predicted(b), method_priority(b.method));
    if (ka != kb) return ka < kb;
    return a.anomaly_id < b.anomaly_id;
}

std::string journal_line(const AnomalyEvent& e) {
    nlohmann::ordered_json j;
    j["id"] = e.anomaly_id;
    j["asset"] = e.asset;
    j["method"] = to_string(e.method);
    j["severity"] = to_string(e.severity);
    j["detected_at"] = epoch_ms(e.detected_at);
    j["predicted_failure_at"] = e.predicted_failure_at ? nlohmann::ordered_json(epoch_ms(*e.predicted_failure_at))
                                                       : nlohmann::ordered_json(nullptr);
    j["channel"] = e.channel;
    j["rule"] = e.rule;
    j["evidence"] = e.evidence;
    return j.dump(-1, ' ', false, nlohmann::ordered_json::error_handler_t::replace);
}

void LimitRule::validate() const {
    if (!lower && !upper) throw InvalidRule("limit rule needs at least one bound");
    if ((lower && !std::isfinite(*lower)) || (upper && !std::isfinite(*upper))) {
        throw InvalidRule("limit bounds must be finite");
    }
    if (lower && upper && !(*lower < *upper)) {
        throw InvalidRule(fmt::format("lower bound {} must be below upper bound {}", *lower, *upper));
    }
}

std::string LimitRule::rule_id() const { return std::string("limit:") + cbm::to_string(kind); }

std::optional<AnomalyEvent> check_limits(double value, const LimitRule& rule, Timestamp now,
                                         const std::string& sensor) {
    std::string evidence;
    if (rule.upper && value > *rule.upper) {
        evidence = fmt::format("value {} above upper limit {}", value, *rule.upper);
    } else if (rule.lower && value < *rule.lower) {
        evidence = fmt::format("value {} below lower limit {}", value, *rule.lower);
    } else {
        return std::nullopt;
    }
    AnomalyEvent e;
    e.asset = rule.asset;
    e.method = Method::limit;
    e.severity = rule.severity_on_breach;
    e.detected_at = now;
    e.channel = sensor;
    e.rule = rule.rule_id();
    e.evidence = std::move(evidence);
    e.anomaly_id = make_anomaly_id(e.asset, e.method, e.channel, e.rule, now);
    return e;
}

}  // namespace cbm::detection
