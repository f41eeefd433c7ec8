#pragma once

#include <optional>
#include <string>
#include <vector>

#include "cbm/common.hpp"
#include "cbm/telemetry.hpp"

namespace cbm::detection {

CBM_DEFINE_ERROR(InvalidRule);
CBM_DEFINE_ERROR(InsufficientPoints);

enum class Method { trend, limit, pattern, statistical };
const char* to_string(Method m);
Method method_from_string(const std::string& s);

/// A detected potential failure.
struct AnomalyEvent {
    std::string anomaly_id;
    std::string asset;
    Method method = Method::limit;
    Severity severity = Severity::advisory;
    Timestamp detected_at{};
    std::optional<Timestamp> predicted_failure_at;
    std::string evidence;
    /// Sensor the anomaly was raised on; empty for asset-level methods.
    std::string channel;
    std::string rule;

    bool operator==(const AnomalyEvent&) const = default;
};

/// Deterministic id: "<asset>/<method>/<channel>/<rule>@<epoch ms>".
std::string make_anomaly_id(const std::string& asset, Method method, const std::string& channel,
                            const std::string& rule, Timestamp at);

/// Action order: severity desc, predicted failure asc (absent last), method
/// priority limit > trend > statistical > pattern, then id asc.
bool action_order(const AnomalyEvent& a, const AnomalyEvent& b);

/// One line of the anomaly journal; byte-stable for a given event.
std::string journal_line(const AnomalyEvent& event);

/// Inclusive-pass range rule: a breach needs value < lower or value > upper.
struct LimitRule {
    std::string asset;
    ChannelKind kind = ChannelKind::point_temperature;
    std::optional<double> lower;
    std::optional<double> upper;
    Severity severity_on_breach = Severity::warning;

    /// Throws InvalidRule: no bound, non-finite bound, or lower >= upper.
    void validate() const;
    std::string rule_id() const;

    bool operator==(const LimitRule&) const = default;
};

std::optional<AnomalyEvent> check_limits(double value, const LimitRule& rule, Timestamp now,
                                         const std::string& sensor = {});

}  // namespace cbm::detection
