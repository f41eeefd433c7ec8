#pragma once

#include <optional>
#include <string>
#include <vector>

#include "cbm/common.hpp"
#include "cbm/detection/evaluate.hpp"
#include "cbm/detection/rules.hpp"
#include "cbm/sim/scenario.hpp"

namespace cbm::scheduler {

CBM_DEFINE_ERROR(InvalidPolicy);
CBM_DEFINE_ERROR(InvalidCostTable);

enum class PolicyKind { corrective, preventive, predictive };
const char* to_string(PolicyKind k);

/// How the predictive policy watches an asset.
struct DetectionConfig {
    double inspection_fraction = 0.5;
    /// Lowest severity that triggers a repair.
    Severity repair_at = Severity::warning;
    detection::TrendConfig trend;
};

struct MaintenancePolicy {
    std::string name;
    PolicyKind kind = PolicyKind::corrective;
    std::optional<Millis> preventive_period;    ///< required iff preventive
    std::optional<DetectionConfig> detection;   ///< required iff predictive

    static MaintenancePolicy corrective(std::string name = "corrective");
    static MaintenancePolicy preventive(Millis period, std::string name = "preventive");
    static MaintenancePolicy predictive(DetectionConfig config = {}, std::string name = "predictive");

    /// Throws InvalidPolicy when parameter presence does not match kind.
    void validate() const;
};

struct CostTable {
    double breakdown_cost = 0.0;
    double planned_cost = 0.0;
    double inspection_cost = 0.0;
    double downtime_cost_per_hour = 0.0;
    Hours breakdown_downtime{0.0};
    Hours planned_downtime{0.0};
    /// Time from a repair decision to the repair itself (the four response
    /// steps).
    Hours response_time{0.0};
    /// Units of production lost per hour of downtime.
    double production_rate = 0.0;

    /// Throws InvalidCostTable for negative or non-finite entries.
    void validate() const;
};

struct PolicyOutcome {
    std::uint64_t unplanned_breakdowns = 0;
    std::uint64_t planned_interventions = 0;
    std::uint64_t inspections = 0;
    Hours downtime{0.0};
    double maintenance_cost = 0.0;
    double production_lost = 0.0;

    bool operator==(const PolicyOutcome&) const = default;
};

/// Discrete-event run of one policy over every asset in the scenario.
///
///  - corrective: repair only at functional failure
///  - preventive: service every preventive_period from scenario start; an F
///    before the next service is still a breakdown
///  - predictive: inspect every fraction x P-F, run detection on the
///    asset's readings, and repair response_time after any anomaly at or
///    above the configured severity; a repair that cannot finish before F
///    counts as a breakdown
///
/// Repairs renew the asset. Later lives draw their time-to-P from the asset's
/// lifetime model when present, otherwise repeat the first life's onset.
/// When `rules` is empty the predictive policy watches limits at each
/// channel's functional-failure level. Deterministic given the scenario seed.
PolicyOutcome simulate_policy(const sim::Scenario& scenario, const MaintenancePolicy& policy, const CostTable& costs,
                              const detection::RuleSet* rules = nullptr);

/// Limit rules at the level each drifting channel reaches at F.
std::vector<detection::LimitRule> failure_level_limits(const sim::AssetSpec& asset, Severity severity);

}  // namespace cbm::scheduler
