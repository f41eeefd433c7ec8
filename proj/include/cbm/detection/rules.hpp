#pragma once

#include <optional>
#include <string>
#include <vector>

#include "cbm/detection/evaluate.hpp"

namespace cbm::detection {

inline constexpr const char* kRulesSchema = "cbm.rules/1";

struct AssetPatternRule {
    std::string asset;  ///< "*" for every asset
    PatternRule rule;
};

struct AssetStatisticalRule {
    std::string asset;  ///< "*" for every asset
    StatisticalRule rule;
};

/// Declarative rule set (JSON, schema "cbm.rules/1").
struct RuleSet {
    std::vector<LimitRule> limits;
    std::vector<AssetPatternRule> patterns;
    std::vector<AssetStatisticalRule> statistical;
    /// When set, every drifting channel of a simulated asset gets a limit at
    /// the level its mean reaches at functional failure.
    std::optional<Severity> failure_limits;

    std::vector<LimitRule> limits_for(const std::string& asset) const;
    std::vector<PatternRule> patterns_for(const std::string& asset) const;
    std::optional<StatisticalRule> statistical_for(const std::string& asset) const;
};

/// Throws InvalidRule.
RuleSet parse_rules(const std::string& text);
RuleSet load_rules(const std::string& path);
std::string dump_rules(const RuleSet& rules);

}  // namespace cbm::detection
