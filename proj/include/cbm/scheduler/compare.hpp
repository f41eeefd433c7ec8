#pragma once

#include <optional>
#include <string>
#include <vector>

#include "cbm/scheduler/policy.hpp"

namespace cbm::scheduler {

/// Percent change of a metric relative to the baseline policy; empty when
/// the baseline value is zero and the policy's is not.
struct MetricDelta {
    std::string metric;
    std::optional<double> percent;
};

struct PolicyResult {
    MaintenancePolicy policy;
    PolicyOutcome outcome;
    std::vector<MetricDelta> deltas;
};

/// Published industry averages for a working predictive programme. Printed
/// next to computed results as context only; nothing asserts against them.
struct ReportedRange {
    std::string label;
    double low_percent;
    double high_percent;
};

const std::vector<ReportedRange>& reported_ranges();

struct ComparisonReport {
    std::size_t baseline = 0;  ///< index of the reference policy
    std::vector<PolicyResult> results;

    std::string table() const;
    std::string json() const;
};

/// Runs every policy on the same scenario. The first corrective policy is the
/// baseline (the first policy if none is corrective). Throws InvalidPolicy
/// for fewer than two policies.
ComparisonReport compare_policies(const sim::Scenario& scenario, const std::vector<MaintenancePolicy>& policies,
                                  const CostTable& costs, const detection::RuleSet* rules = nullptr);

inline constexpr const char* kPoliciesSchema = "cbm.policies/1";
inline constexpr const char* kCostsSchema = "cbm.costs/1";

/// Declarative policy list and cost table documents (JSON).
std::vector<MaintenancePolicy> parse_policies(const std::string& text);
CostTable parse_costs(const std::string& text);
std::vector<MaintenancePolicy> load_policies(const std::string& path);
CostTable load_costs(const std::string& path);

}  // namespace cbm::scheduler
