#include "cbm/detection/rules.hpp"

#include <fstream>
#include <sstream>

#include <nlohmann/json.hpp>

namespace cbm::detection {

using nlohmann::json;
using nlohmann::ordered_json;

std::vector<LimitRule> RuleSet::limits_for(const std::string& asset) const {
    std::vector<LimitRule> out;
    for (const auto& r : limits) {
        if (r.asset == asset || r.asset == "*") out.push_back(r);
    }
    return out;
}

std::vector<PatternRule> RuleSet::patterns_for(const std::string& asset) const {
    std::vector<PatternRule> out;
    for (const auto& r : patterns) {
        if (r.asset == asset || r.asset == "*") out.push_back(r.rule);
    }
    return out;
}

std::optional<StatisticalRule> RuleSet::statistical_for(const std::string& asset) const {
    // An asset-specific rule wins over the wildcard.
    std::optional<StatisticalRule> wildcard;
    for (const auto& r : statistical) {
        if (r.asset == asset) return r.rule;
        if (r.asset == "*" && !wildcard) wildcard = r.rule;
    }
    return wildcard;
}

namespace {

std::optional<double> optional_number(const json& j, const char* key) {
    auto it = j.find(key);
    if (it == j.end() || it->is_null()) return std::nullopt;
    return it->get<double>();
}

Severity severity_or(const json& j, Severity fallback) {
    auto it = j.find("severity");
    return it == j.end() ? fallback : severity_from_string(it->get<std::string>());
}

RuleSet parse_document(const json& doc) {
    if (!doc.is_object() || doc.value("schema", "") != kRulesSchema) {
        throw InvalidRule(std::string("rules document must declare schema ") + kRulesSchema);
    }
    RuleSet rs;
    for (const auto& lj : doc.value("limits", json::array())) {
        LimitRule r;
        r.asset = lj.at("asset").get<std::string>();
        r.kind = channel_kind_from_string(lj.at("kind").get<std::string>());
        r.lower = optional_number(lj, "lower");
        r.upper = optional_number(lj, "upper");
        r.severity_on_breach = severity_or(lj, Severity::warning);
        r.validate();
        rs.limits.push_back(std::move(r));
    }
    for (const auto& pj : doc.value("patterns", json::array())) {
        AssetPatternRule ar;
        ar.asset = pj.value("asset", "*");
        ar.rule.rule_id = pj.at("id").get<std::string>();
        ar.rule.conclusion = pj.value("conclusion", "");
        ar.rule.severity = severity_or(pj, Severity::warning);
        for (const auto& tj : pj.at("trigger")) {
            EventPredicate p;
            p.channel = tj.at("channel").get<std::string>();
            p.comparator = comparator_from_string(tj.at("op").get<std::string>());
            p.value = tj.at("value").get<double>();
            p.max_gap = to_millis(Hours{tj.value("max_gap_h", 1.0)});
            ar.rule.trigger_sequence.push_back(std::move(p));
        }
        ar.rule.validate();
        rs.patterns.push_back(std::move(ar));
    }
    for (const auto& sj : doc.value("statistical", json::array())) {
        AssetStatisticalRule ar{sj.value("asset", "*"),
                                StatisticalRule{reliability::WeibullModel(sj.at("beta").get<double>(),
                                                                          sj.at("eta").get<double>()),
                                                sj.value("threshold", kDefaultStatisticalThreshold),
                                                severity_or(sj, Severity::advisory)}};
        if (!(ar.rule.threshold > 0.0 && ar.rule.threshold < 1.0)) {
            throw InvalidRule("statistical threshold must lie in (0, 1)");
        }
        rs.statistical.push_back(std::move(ar));
    }
    if (auto it = doc.find("failure_limits"); it != doc.end() && !it->is_null()) {
        rs.failure_limits = severity_or(*it, Severity::warning);
    }
    return rs;
}

}  // namespace

RuleSet parse_rules(const std::string& text) {
    try {
        return parse_document(json::parse(text));
    } catch (const json::exception& e) {
        throw InvalidRule(std::string("malformed rules document: ") + e.what());
    } catch (const InvalidRule&) {
        throw;
    } catch (const Error& e) {
        throw InvalidRule(e.what());
    }
}

RuleSet load_rules(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw InvalidRule("cannot read rules file '" + path + "'");
    std::stringstream ss;
    ss << in.rdbuf();
    return parse_rules(ss.str());
}

std::string dump_rules(const RuleSet& rs) {
    ordered_json doc;
    doc["schema"] = kRulesSchema;
    doc["limits"] = ordered_json::array();
    for (const auto& r : rs.limits) {
        ordered_json j;
        j["asset"] = r.asset;
        j["kind"] = to_string(r.kind);
        j["lower"] = r.lower ? ordered_json(*r.lower) : ordered_json(nullptr);
        j["upper"] = r.upper ? ordered_json(*r.upper) : ordered_json(nullptr);
        j["severity"] = to_string(r.severity_on_breach);
        doc["limits"].push_back(std::move(j));
    }
    doc["patterns"] = ordered_json::array();
    for (const auto& ar : rs.patterns) {
        ordered_json j;
        j["asset"] = ar.asset;
        j["id"] = ar.rule.rule_id;
        j["conclusion"] = ar.rule.conclusion;
        j["severity"] = to_string(ar.rule.severity);
        j["trigger"] = ordered_json::array();
        for (const auto& p : ar.rule.trigger_sequence) {
            j["trigger"].push_back(ordered_json{{"channel", p.channel},
                                                {"op", to_string(p.comparator)},
                                                {"value", p.value},
                                                {"max_gap_h", to_hours(p.max_gap)}});
        }
        doc["patterns"].push_back(std::move(j));
    }
    doc["statistical"] = ordered_json::array();
    for (const auto& ar : rs.statistical) {
        doc["statistical"].push_back(ordered_json{{"asset", ar.asset},
                                                  {"beta", ar.rule.model.shape()},
                                                  {"eta", ar.rule.model.scale()},
                                                  {"threshold", ar.rule.threshold},
                                                  {"severity", to_string(ar.rule.severity)}});
    }
    if (rs.failure_limits) doc["failure_limits"] = ordered_json{{"severity", to_string(*rs.failure_limits)}};
    return doc.dump(2) + "\n";
}

}  // namespace cbm::detection
