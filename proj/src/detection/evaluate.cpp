#include "cbm/detection/evaluate.hpp"

#include <algorithm>
#include <cmath>
#include <map>
#include <tuple>

#include <fmt/format.h>

#include "cbm/reliability/weibull.hpp"

namespace cbm::detection {

std::optional<AnomalyEvent> statistical_check(Hours age, const reliability::WeibullModel& model,
                                              Hours inspection_interval, double threshold, Timestamp now,
                                              const std::string& asset, Severity severity) {
    if (!(threshold > 0.0 && threshold < 1.0)) throw InvalidRule("statistical threshold must lie in (0, 1)");
    const double p = reliability::conditional_failure_probability(model, age.count(), inspection_interval.count());
    if (!(p > threshold)) return std::nullopt;
    AnomalyEvent e;
    e.asset = asset;
    e.method = Method::statistical;
    e.severity = severity;
    e.detected_at = now;
    e.rule = fmt::format("weibull:{}:{}", model.shape(), model.scale());
    e.evidence = fmt::format("P(failure within {:.6g}h | age {:.6g}h) = {:.6f} > {}", inspection_interval.count(),
                             age.count(), p, threshold);
    e.anomaly_id = make_anomaly_id(asset, e.method, e.channel, e.rule, now);
    return e;
}

namespace {

bool rule_applies(const LimitRule& rule, const std::string& asset, ChannelKind kind) {
    return (rule.asset == asset || rule.asset == "*") && rule.kind == kind;
}

}  // namespace

std::optional<AnomalyEvent> trend_check(const ChannelSnapshot& channel, const LimitRule& rule,
                                        const AssetSnapshot& snap) {
    std::vector<TrendSample> samples;
    const Timestamp oldest = snap.now - snap.pf_interval;
    for (auto it = channel.recent.rbegin(); it != channel.recent.rend() && samples.size() < snap.trend.window; ++it) {
        if (it->ts > snap.now) continue;
        if (it->ts < oldest) break;
        samples.push_back({to_hours(it->ts - snap.now), it->value});
    }
    if (samples.size() < kMinTrendPoints) return std::nullopt;
    std::reverse(samples.begin(), samples.end());

    TrendModel model;
    try {
        model = trend_analysis(samples, rule);
    } catch (const InsufficientPoints&) {
        return std::nullopt;
    }
    if (!model.predicted_crossing) return std::nullopt;
    if (model.slope_stderr > 0.0 && std::abs(model.slope) < snap.trend.min_t_statistic * model.slope_stderr) {
        return std::nullopt;
    }
    const double hours_to_cross = *model.predicted_crossing;
    const double pf_h = to_hours(snap.pf_interval);
    if (hours_to_cross > snap.trend.horizon_pf_multiple * pf_h) return std::nullopt;

    AnomalyEvent e;
    e.asset = snap.asset;
    e.method = Method::trend;
    if (hours_to_cross < 0.5 * to_hours(snap.inspection_interval)) e.severity = Severity::critical;
    else if (hours_to_cross < pf_h) e.severity = Severity::warning;
    else e.severity = Severity::advisory;
    e.detected_at = snap.now;
    e.predicted_failure_at = snap.now + to_millis(Hours{std::max(hours_to_cross, 0.0)});
    e.channel = channel.sensor;
    e.rule = rule.rule_id();
    e.evidence = fmt::format("slope {:.6g}/h over {} points crosses limit in {:.3f}h", model.slope,
                             model.n_points, hours_to_cross);
    e.anomaly_id = make_anomaly_id(e.asset, e.method, e.channel, e.rule, snap.now);
    return e;
}

std::vector<AnomalyEvent> evaluate(const AssetSnapshot& snap) {
    std::vector<AnomalyEvent> raised;
    std::vector<std::string> excluded;

    for (const auto& channel : snap.channels) {
        if (channel.excluded) {
            excluded.push_back(channel.sensor);
            continue;
        }
        for (const auto& rule : snap.limits) {
            if (!rule_applies(rule, snap.asset, channel.kind)) continue;
            if (!channel.recent.empty()) {
                LimitRule scoped = rule;
                scoped.asset = snap.asset;
                if (auto e = check_limits(channel.recent.back().value, scoped, snap.now, channel.sensor)) {
                    raised.push_back(std::move(*e));
                }
            }
            if (auto e = trend_check(channel, rule, snap)) raised.push_back(std::move(*e));
        }
    }

    if (!snap.patterns.empty()) {
        std::vector<HistoryEntry> history;
        history.reserve(snap.history.size());
        for (const auto& h : snap.history) {
            if (std::find(excluded.begin(), excluded.end(), h.sensor) == excluded.end()) history.push_back(h);
        }
        for (const auto& rule : snap.patterns) {
            if (auto e = match_pattern(history, rule, snap.now, snap.asset)) raised.push_back(std::move(*e));
        }
    }

    if (snap.statistical) {
        const auto& s = *snap.statistical;
        if (auto e = statistical_check(snap.age, s.model, Hours{to_hours(snap.inspection_interval)}, s.threshold,
                                       snap.now, snap.asset, s.severity)) {
            raised.push_back(std::move(*e));
        }
    }

    // One anomaly per (method, channel, rule) per inspection: keep the one
    // that sorts first.
    std::map<std::tuple<Method, std::string, std::string>, AnomalyEvent> merged;
    for (auto& e : raised) {
        auto key = std::make_tuple(e.method, e.channel, e.rule);
        auto it = merged.find(key);
        if (it == merged.end()) merged.emplace(std::move(key), std::move(e));
        else if (action_order(e, it->second)) it->second = std::move(e);
    }
    std::vector<AnomalyEvent> out;
    out.reserve(merged.size());
    for (auto& [key, e] : merged) out.push_back(std::move(e));
    std::sort(out.begin(), out.end(), action_order);
    return out;
}

}  // namespace cbm::detection
