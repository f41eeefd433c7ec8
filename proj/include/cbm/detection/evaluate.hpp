#pragma once

#include <optional>
#include <string>
#include <vector>

#include "cbm/detection/anomaly.hpp"
#include "cbm/detection/pattern.hpp"
#include "cbm/detection/trend.hpp"
#include "cbm/reliability/weibull.hpp"

namespace cbm::detection {

inline constexpr double kDefaultStatisticalThreshold = 0.10;

struct StatisticalRule {
    reliability::WeibullModel model;
    double threshold = kDefaultStatisticalThreshold;
    Severity severity = Severity::advisory;
};

/// Event iff P(fail within inspection_interval | survived to age) > threshold.
std::optional<AnomalyEvent> statistical_check(Hours age, const reliability::WeibullModel& model,
                                              Hours inspection_interval, double threshold, Timestamp now,
                                              const std::string& asset, Severity severity = Severity::advisory);

struct TrendConfig {
    /// Most recent accepted points used, all within one P-F interval.
    std::size_t window = 12;
    /// Slope must exceed this many standard errors.
    double min_t_statistic = 3.0;
    /// Crossings further out than this many P-F intervals are ignored.
    double horizon_pf_multiple = 2.0;
};

struct ReadingPoint {
    Timestamp ts;
    double value;
};

struct ChannelSnapshot {
    std::string sensor;
    ChannelKind kind;
    /// Faulty sensors and manually excluded ones.
    bool excluded = false;
    /// Accepted or substituted values, time-ordered.
    std::vector<ReadingPoint> recent;
};

/// Everything one inspection of one asset needs, frozen at `now`.
struct AssetSnapshot {
    std::string asset;
    Timestamp now{};
    Millis pf_interval{kHour};
    Millis inspection_interval{kHour};
    /// Operating age since the last renewal, for statistical checks.
    Hours age{0.0};
    std::vector<ChannelSnapshot> channels;
    /// Readings since the previous inspection, time-ordered.
    std::vector<HistoryEntry> history;
    std::vector<LimitRule> limits;
    std::vector<PatternRule> patterns;
    std::optional<StatisticalRule> statistical;
    TrendConfig trend;
};

/// Trend method on one channel against one limit rule; empty when the trend
/// is insignificant, flat, or crosses outside the horizon.
std::optional<AnomalyEvent> trend_check(const ChannelSnapshot& channel, const LimitRule& rule,
                                        const AssetSnapshot& snapshot);

/// Runs all four methods and returns the merged anomalies in action order.
/// Pure: the same snapshot always yields the same sequence.
std::vector<AnomalyEvent> evaluate(const AssetSnapshot& snapshot);

}  // namespace cbm::detection
