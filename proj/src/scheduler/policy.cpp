#include "cbm/scheduler/policy.hpp"

#include <algorithm>
#include <cmath>
#include <queue>

#include "cbm/scheduler/schedule.hpp"
#include "cbm/sim/random.hpp"

namespace cbm::scheduler {

const char* to_string(PolicyKind k) {
    switch (k) {
        case PolicyKind::corrective: return "corrective";
        case PolicyKind::preventive: return "preventive";
        case PolicyKind::predictive: return "predictive";
    }
    return "corrective";
}

MaintenancePolicy MaintenancePolicy::corrective(std::string name) {
    return {std::move(name), PolicyKind::corrective, std::nullopt, std::nullopt};
}

MaintenancePolicy MaintenancePolicy::preventive(Millis period, std::string name) {
    return {std::move(name), PolicyKind::preventive, period, std::nullopt};
}

MaintenancePolicy MaintenancePolicy::predictive(DetectionConfig config, std::string name) {
    return {std::move(name), PolicyKind::predictive, std::nullopt, config};
}

void MaintenancePolicy::validate() const {
    if (preventive_period.has_value() != (kind == PolicyKind::preventive)) {
        throw InvalidPolicy("policy '" + name + "': preventive_period is required iff the policy is preventive");
    }
    if (detection.has_value() != (kind == PolicyKind::predictive)) {
        throw InvalidPolicy("policy '" + name + "': detection config is required iff the policy is predictive");
    }
    if (preventive_period && *preventive_period <= Millis{0}) {
        throw InvalidPolicy("policy '" + name + "': preventive_period must be positive");
    }
    if (detection && !(detection->inspection_fraction > 0.0 && detection->inspection_fraction <= 1.0)) {
        throw InvalidPolicy("policy '" + name + "': inspection fraction must lie in (0, 1]");
    }
}

void CostTable::validate() const {
    const double entries[] = {breakdown_cost,           planned_cost,           inspection_cost,
                              downtime_cost_per_hour,   breakdown_downtime.count(), planned_downtime.count(),
                              response_time.count(),    production_rate};
    for (double v : entries) {
        if (!std::isfinite(v) || v < 0.0) throw InvalidCostTable("cost table entries must be finite and >= 0");
    }
}

std::vector<detection::LimitRule> failure_level_limits(const sim::AssetSpec& asset, Severity severity) {
    std::vector<detection::LimitRule> rules;
    for (const auto& c : asset.channels) {
        if (c.degradation_gain == 0.0) continue;
        const bool seen = std::any_of(rules.begin(), rules.end(), [&](const auto& r) { return r.kind == c.kind; });
        if (seen) continue;
        detection::LimitRule r;
        r.asset = asset.id;
        r.kind = c.kind;
        const double level = sim::failure_level(asset, c);
        if (c.degradation_gain > 0.0) r.upper = level;
        else r.lower = level;
        r.severity_on_breach = severity;
        rules.push_back(std::move(r));
    }
    return rules;
}

namespace {

// Same-instant events resolve renewal first, then failure before any
// intervention that would have come too late.
enum class EventKind { renewal = 0, failure = 1, repair = 2, preventive = 3, inspection = 4 };

struct Event {
    Timestamp at;
    EventKind kind;
    std::size_t asset;
    std::uint64_t life;

    bool operator>(const Event& o) const {
        return std::tie(at, kind, asset, life) > std::tie(o.at, o.kind, o.asset, o.life);
    }
};

struct AssetRun {
    std::uint64_t life = 0;
    bool down = false;
    bool repair_pending = false;
    Timestamp life_start{};
    Timestamp onset{};
    Timestamp failure{};
    Timestamp last_inspection{};
    sim::Random lifetimes;
    sim::Random noise;
};

class PolicyRun {
  public:
    PolicyRun(const sim::Scenario& scenario, const MaintenancePolicy& policy, const CostTable& costs,
              const detection::RuleSet* rules)
        : scenario_(scenario), policy_(policy), costs_(costs), rules_(rules) {}

    PolicyOutcome run() {
        for (std::size_t i = 0; i < scenario_.assets.size(); ++i) {
            runs_.push_back(AssetRun{0, false, false, {}, {}, {}, {},
                                     sim::Random::stream(scenario_.seed, (1ULL << 22) + i),
                                     sim::Random::stream(scenario_.seed, (1ULL << 21) + i)});
            start_life(i, scenario_.start, scenario_.assets[i].degradation_onset);
            if (policy_.kind == PolicyKind::preventive) {
                queue_.push({scenario_.start + *policy_.preventive_period, EventKind::preventive, i, 0});
            }
        }
        while (!queue_.empty()) {
            const Event ev = queue_.top();
            queue_.pop();
            if (ev.at > scenario_.end()) break;
            dispatch(ev);
        }
        outcome_.maintenance_cost = static_cast<double>(outcome_.unplanned_breakdowns) * costs_.breakdown_cost +
                                    static_cast<double>(outcome_.planned_interventions) * costs_.planned_cost +
                                    static_cast<double>(outcome_.inspections) * costs_.inspection_cost +
                                    outcome_.downtime.count() * costs_.downtime_cost_per_hour;
        outcome_.production_lost = outcome_.downtime.count() * costs_.production_rate;
        return outcome_;
    }

  private:
    const sim::AssetSpec& spec(std::size_t i) const { return scenario_.assets[i]; }

    Millis inspection_period(std::size_t i) const {
        return InspectionSchedule::create(spec(i).id, spec(i).pf, policy_.detection->inspection_fraction,
                                          scenario_.start, spec(i).usage_rate)
            .period;
    }

    void start_life(std::size_t i, Timestamp at, Timestamp onset) {
        auto& r = runs_[i];
        r.down = false;
        r.repair_pending = false;
        r.life_start = at;
        r.last_inspection = at;
        r.onset = onset;
        r.failure = onset + spec(i).pf_clock();
        queue_.push({r.failure, EventKind::failure, i, r.life});
        if (policy_.kind == PolicyKind::predictive) {
            queue_.push({at + inspection_period(i), EventKind::inspection, i, r.life});
        }
    }

    void take_down(std::size_t i, Timestamp at, Hours duration) {
        auto& r = runs_[i];
        ++r.life;
        r.down = true;
        const Millis d = to_millis(duration);
        outcome_.downtime += Hours{to_hours(std::min(d, scenario_.end() - at))};
        queue_.push({at + d, EventKind::renewal, i, r.life});
    }

    void dispatch(const Event& ev) {
        auto& r = runs_[ev.asset];
        switch (ev.kind) {
            case EventKind::renewal: {
                if (ev.life != r.life) return;
                const auto& a = spec(ev.asset);
                const Millis to_onset = a.lifetime ? to_millis(Hours{r.lifetimes.weibull(a.lifetime->shape(),
                                                                                          a.lifetime->scale())})
                                                   : a.degradation_onset - scenario_.start;
                start_life(ev.asset, ev.at, ev.at + to_onset);
                return;
            }
            case EventKind::failure:
                if (ev.life != r.life || r.down) return;
                ++outcome_.unplanned_breakdowns;
                take_down(ev.asset, ev.at, costs_.breakdown_downtime);
                return;
            case EventKind::repair:
                if (ev.life != r.life || r.down) return;
                ++outcome_.planned_interventions;
                take_down(ev.asset, ev.at, costs_.planned_downtime);
                return;
            case EventKind::preventive:
                queue_.push({ev.at + *policy_.preventive_period, EventKind::preventive, ev.asset, 0});
                if (r.down) return;
                ++outcome_.planned_interventions;
                take_down(ev.asset, ev.at, costs_.planned_downtime);
                return;
            case EventKind::inspection:
                if (ev.life != r.life || r.down || r.repair_pending) return;
                inspect(ev.asset, ev.at);
                return;
        }
    }

    void inspect(std::size_t i, Timestamp at) {
        auto& r = runs_[i];
        const auto& a = spec(i);
        ++outcome_.inspections;

        detection::AssetSnapshot snap;
        snap.asset = a.id;
        snap.now = at;
        snap.pf_interval = a.pf_clock();
        snap.inspection_interval = inspection_period(i);
        snap.age = Hours{to_hours(at - r.life_start)};
        snap.trend = policy_.detection->trend;
        for (const auto& c : a.channels) {
            detection::ChannelSnapshot ch{c.id, c.kind, false, {}};
            for (std::size_t k = 0; k < snap.trend.window; ++k) {
                const Timestamp t = at - c.sample_period * static_cast<std::int64_t>(k);
                if (t < r.life_start) break;
                const double v = sim::mean_value(c, r.onset, t) + c.noise_sigma * r.noise.normal();
                ch.recent.push_back({t, v});
                if (t > r.last_inspection) snap.history.push_back({t, c.id, c.kind, v});
            }
            std::reverse(ch.recent.begin(), ch.recent.end());
            snap.channels.push_back(std::move(ch));
        }
        std::sort(snap.history.begin(), snap.history.end(),
                  [](const auto& x, const auto& y) { return std::tie(x.ts, x.sensor) < std::tie(y.ts, y.sensor); });
        if (rules_) {
            snap.limits = rules_->limits_for(a.id);
            if (rules_->failure_limits) {
                auto derived = failure_level_limits(a, *rules_->failure_limits);
                snap.limits.insert(snap.limits.end(), derived.begin(), derived.end());
            }
            snap.patterns = rules_->patterns_for(a.id);
            snap.statistical = rules_->statistical_for(a.id);
        } else {
            snap.limits = failure_level_limits(a, Severity::warning);
        }
        r.last_inspection = at;

        const auto anomalies = detection::evaluate(snap);
        const bool act = std::any_of(anomalies.begin(), anomalies.end(), [&](const auto& e) {
            return e.severity >= policy_.detection->repair_at;
        });
        if (!act) {
            queue_.push({at + snap.inspection_interval, EventKind::inspection, i, r.life});
            return;
        }
        r.repair_pending = true;
        const Timestamp repair_at = at + to_millis(costs_.response_time);
        // A response that cannot land before F leaves the failure event to fire.
        if (repair_at < r.failure) queue_.push({repair_at, EventKind::repair, i, r.life});
    }

    const sim::Scenario& scenario_;
    const MaintenancePolicy& policy_;
    const CostTable& costs_;
    const detection::RuleSet* rules_;
    std::vector<AssetRun> runs_;
    std::priority_queue<Event, std::vector<Event>, std::greater<>> queue_;
    PolicyOutcome outcome_;
};

}  // namespace

PolicyOutcome simulate_policy(const sim::Scenario& scenario, const MaintenancePolicy& policy, const CostTable& costs,
                              const detection::RuleSet* rules) {
    sim::validate(scenario);
    policy.validate();
    costs.validate();
    return PolicyRun(scenario, policy, costs, rules).run();
}

}  // namespace cbm::scheduler
