#include "cbm/engine/engine.hpp"

#include <algorithm>

#include <fmt/format.h>
#include <nlohmann/json.hpp>

#include "cbm/scheduler/policy.hpp"
#include "cbm/sim/simulator.hpp"

namespace cbm::engine {

using nlohmann::ordered_json;

Engine::Engine(const sim::Scenario& fleet, detection::RuleSet rules, EngineConfig config, store::Store* store,
               store::Journal* anomaly_journal)
    : fleet_(fleet), rules_(std::move(rules)), config_(config), store_(store), journal_(anomaly_journal) {
    sim::validate(fleet_);
    for (std::size_t i = 0; i < fleet_.assets.size(); ++i) {
        const auto& a = fleet_.assets[i];
        AssetRuntime rt{scheduler::InspectionSchedule::create(a.id, a.pf, config_.inspection_fraction, fleet_.start,
                                                              a.usage_rate),
                        true,
                        {},
                        rules_.limits_for(a.id),
                        {}};
        if (rules_.failure_limits) {
            auto derived = scheduler::failure_level_limits(a, *rules_.failure_limits);
            rt.limits.insert(rt.limits.end(), derived.begin(), derived.end());
        }
        assets_.push_back(std::move(rt));
        for (const auto& c : a.channels) sensors_.emplace(c.id, SensorRuntime{i, c.kind, {}, {}});
    }
}

ingest::LaneOutcome Engine::feed(const TelemetryFrame& frame, std::optional<Timestamp> now) {
    const auto it = sensors_.find(frame.sensor);
    if (it == sensors_.end() || fleet_.assets[it->second.asset].id != frame.asset) {
        throw UnknownSensor(frame.asset + "/" + frame.sensor);
    }
    // Inspections strictly before this frame see only earlier frames.
    advance_to(frame.ts - Millis{1});

    auto& s = it->second;
    ++counts_.received;
    const auto outcome = ingest::process_frame(s.state, frame, now.value_or(frame.ts), config_.ingest);
    if (!outcome.admission.accepted()) {
        ++counts_.quarantined;
        if (store_) store_->quarantine(frame, *outcome.admission.quarantined);
    } else {
        ++counts_.accepted;
        if (outcome.substitution) ++counts_.substituted;
        if (outcome.dropped) ++counts_.dropped;
        if (store_) store_->append(frame, outcome.substitution);
        if (outcome.detection_value) {
            s.recent.push_back({frame.ts, *outcome.detection_value});
            while (s.recent.size() > config_.recent_points) s.recent.pop_front();
            assets_[s.asset].history.push_back({frame.ts, frame.sensor, frame.kind, *outcome.detection_value});
        }
    }
    if (observer_) {
        observer_->on_frame(frame, outcome);
        if (outcome.health.before != outcome.health.after) {
            observer_->on_sensor_health(frame.asset, frame.sensor, outcome.health, frame.ts);
        }
    }
    return outcome;
}

void Engine::advance_to(Timestamp t) {
    // Due inspections run in (time, asset index) order.
    while (true) {
        std::optional<std::size_t> next;
        for (std::size_t i = 0; i < assets_.size(); ++i) {
            const auto& a = assets_[i];
            if (!a.enabled || a.schedule.next_due > t) continue;
            if (!next || a.schedule.next_due < assets_[*next].schedule.next_due) next = i;
        }
        if (!next) return;
        auto& a = assets_[*next];
        const Timestamp due = a.schedule.next_due;
        a.schedule = scheduler::next_inspection(a.schedule, due);
        inspect(*next, due);
    }
}

void Engine::inspect(std::size_t index, Timestamp at) {
    auto& a = assets_[index];
    const auto& spec = fleet_.assets[index];
    for (auto& rule : a.pending) {
        auto same = std::find_if(a.limits.begin(), a.limits.end(), [&](const auto& r) { return r.kind == rule.kind; });
        if (same != a.limits.end()) *same = rule;
        else a.limits.push_back(rule);
    }
    a.pending.clear();

    detection::AssetSnapshot snap;
    snap.asset = spec.id;
    snap.now = at;
    snap.pf_interval = spec.pf_clock();
    snap.inspection_interval = a.schedule.period;
    snap.age = Hours{to_hours(at - fleet_.start)};
    snap.trend = config_.trend;
    snap.limits = a.limits;
    snap.patterns = rules_.patterns_for(spec.id);
    snap.statistical = rules_.statistical_for(spec.id);
    for (const auto& c : spec.channels) {
        const auto& s = sensors_.at(c.id);
        detection::ChannelSnapshot ch{c.id, c.kind, s.state.health == ingest::Health::faulty, {}};
        ch.recent.assign(s.recent.begin(), s.recent.end());
        snap.channels.push_back(std::move(ch));
    }
    snap.history = std::move(a.history);
    a.history.clear();

    const auto found = detection::evaluate(snap);
    for (const auto& e : found) {
        if (journal_) journal_->append(detection::journal_line(e));
        anomalies_.push_back(e);
    }
    if (observer_) observer_->on_inspection(spec.id, at, found);
}

void Engine::run_simulation() {
    sim::Simulator simulator(fleet_);
    while (!simulator.done()) {
        for (const auto& f : simulator.step()) feed(f);
    }
    advance_to(fleet_.end());
}

void Engine::replay(const store::Store& store, store::TimeRange range, Timestamp until) {
    store.replay(range, [&](const store::StoredFrame& f) { feed(f.frame); });
    advance_to(until);
}

void Engine::stage_limit_rule(const detection::LimitRule& rule) {
    rule.validate();
    for (std::size_t i = 0; i < fleet_.assets.size(); ++i) {
        if (rule.asset != "*" && rule.asset != fleet_.assets[i].id) continue;
        auto& pending = assets_[i].pending;
        std::erase_if(pending, [&](const auto& r) { return r.kind == rule.kind; });
        pending.push_back(rule);
    }
}

void Engine::override_sensor_health(const std::string& sensor, ingest::Health forced) {
    auto it = sensors_.find(sensor);
    if (it == sensors_.end()) throw UnknownSensor(sensor);
    ingest::override_health(it->second.state, forced);
}

namespace {

std::size_t asset_index(const sim::Scenario& fleet, const std::string& asset) {
    for (std::size_t i = 0; i < fleet.assets.size(); ++i) {
        if (fleet.assets[i].id == asset) return i;
    }
    throw sim::UnknownAsset(asset);
}

}  // namespace

void Engine::set_detection_enabled(const std::string& asset, bool enabled, Timestamp now) {
    auto& a = assets_[asset_index(fleet_, asset)];
    if (enabled && !a.enabled) {
        a.schedule.next_due = now + a.schedule.period;
        a.history.clear();
    }
    a.enabled = enabled;
}

void Engine::reschedule(const std::string& asset, Timestamp at) {
    assets_[asset_index(fleet_, asset)].schedule.next_due = at;
}

bool Engine::detection_enabled(const std::string& asset) const { return assets_[asset_index(fleet_, asset)].enabled; }

std::optional<Timestamp> Engine::next_inspection(const std::string& asset) const {
    const auto& a = assets_[asset_index(fleet_, asset)];
    if (!a.enabled) return std::nullopt;
    return a.schedule.next_due;
}

std::vector<SensorView> Engine::sensors(const std::string& asset) const {
    const auto& spec = fleet_.assets[asset_index(fleet_, asset)];
    std::vector<SensorView> out;
    for (const auto& c : spec.channels) {
        const auto& s = sensors_.at(c.id);
        SensorView v{spec.id, c.id, c.kind, s.state.health, s.state.health == ingest::Health::faulty, std::nullopt};
        if (!s.recent.empty()) v.latest = s.recent.back();
        out.push_back(std::move(v));
    }
    return out;
}

std::vector<detection::LimitRule> Engine::active_limits(const std::string& asset) const {
    return assets_[asset_index(fleet_, asset)].limits;
}

std::vector<detection::LimitRule> Engine::pending_limits(const std::string& asset) const {
    return assets_[asset_index(fleet_, asset)].pending;
}

std::vector<detection::ReadingPoint> Engine::recent(const std::string& sensor) const {
    auto it = sensors_.find(sensor);
    if (it == sensors_.end()) throw UnknownSensor(sensor);
    return {it->second.recent.begin(), it->second.recent.end()};
}

std::vector<AssetSummary> summarize(const sim::Scenario& scenario,
                                    const std::vector<detection::AnomalyEvent>& anomalies) {
    std::vector<AssetSummary> out;
    for (const auto& a : scenario.assets) {
        const auto truth = sim::ground_truth(a);
        AssetSummary s{a.id, truth.potential_failure, truth.functional_failure, std::nullopt, false, std::nullopt, 0};
        for (const auto& e : anomalies) {
            if (e.asset != a.id) continue;
            ++s.anomalies;
            if (!s.first_detection || e.detected_at < *s.first_detection) s.first_detection = e.detected_at;
        }
        if (s.first_detection && *s.first_detection < truth.functional_failure) {
            s.detected_before_failure = true;
            s.lead_time = Hours{to_hours(truth.functional_failure - *s.first_detection)};
        }
        out.push_back(std::move(s));
    }
    return out;
}

std::string summary_json(const std::vector<AssetSummary>& summary) {
    ordered_json doc;
    doc["schema"] = "cbm.summary/1";
    std::size_t detected = 0;
    doc["assets"] = ordered_json::array();
    for (const auto& s : summary) {
        if (s.detected_before_failure) ++detected;
        ordered_json j;
        j["asset"] = s.asset;
        j["potential_failure"] = epoch_ms(s.potential_failure);
        j["functional_failure"] = epoch_ms(s.functional_failure);
        j["first_detection"] = s.first_detection ? ordered_json(epoch_ms(*s.first_detection)) : ordered_json(nullptr);
        j["detected_before_failure"] = s.detected_before_failure;
        j["lead_time_h"] = s.lead_time ? ordered_json(s.lead_time->count()) : ordered_json(nullptr);
        j["anomalies"] = s.anomalies;
        doc["assets"].push_back(std::move(j));
    }
    doc["assets_total"] = summary.size();
    doc["detected_before_failure"] = detected;
    return doc.dump(2) + "\n";
}

std::string summary_table(const std::vector<AssetSummary>& summary) {
    std::string out = fmt::format("{:<16} {:>10} {:>12} {:>10}\n", "asset", "detected", "lead_time_h", "anomalies");
    std::size_t detected = 0;
    for (const auto& s : summary) {
        if (s.detected_before_failure) ++detected;
        out += fmt::format("{:<16} {:>10} {:>12} {:>10}\n", s.asset, s.detected_before_failure ? "yes" : "no",
                           s.lead_time ? fmt::format("{:.1f}", s.lead_time->count()) : "-", s.anomalies);
    }
    out += fmt::format("\n{}/{} assets detected before functional failure\n", detected, summary.size());
    return out;
}

std::string ground_truth_json(const sim::Scenario& scenario) {
    ordered_json doc;
    doc["schema"] = "cbm.ground-truth/1";
    doc["assets"] = ordered_json::array();
    for (const auto& a : scenario.assets) {
        const auto t = sim::ground_truth(a);
        doc["assets"].push_back(ordered_json{{"asset", a.id},
                                             {"potential_failure", epoch_ms(t.potential_failure)},
                                             {"functional_failure", epoch_ms(t.functional_failure)}});
    }
    return doc.dump(2) + "\n";
}

}  // namespace cbm::engine
