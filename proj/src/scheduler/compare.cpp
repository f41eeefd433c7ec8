#include "cbm/scheduler/compare.hpp"

#include <cmath>
#include <fstream>
#include <sstream>

#include <fmt/format.h>
#include <nlohmann/json.hpp>

namespace cbm::scheduler {

using nlohmann::json;
using nlohmann::ordered_json;

const std::vector<ReportedRange>& reported_ranges() {
    static const std::vector<ReportedRange> ranges = {
        {"overall savings over traditional maintenance", 8.0, 12.0},
        {"reduction in maintenance costs", 25.0, 30.0},
        {"elimination of breakdowns", 70.0, 75.0},
        {"reduction in downtime", 35.0, 45.0},
        {"increase in production", 20.0, 25.0},
    };
    return ranges;
}

namespace {

std::optional<double> percent_change(double value, double base) {
    if (base == 0.0) return value == 0.0 ? std::optional<double>(0.0) : std::nullopt;
    return (value - base) / base * 100.0;
}

std::vector<MetricDelta> deltas(const PolicyOutcome& o, const PolicyOutcome& base) {
    return {
        {"unplanned_breakdowns", percent_change(static_cast<double>(o.unplanned_breakdowns),
                                                static_cast<double>(base.unplanned_breakdowns))},
        {"planned_interventions", percent_change(static_cast<double>(o.planned_interventions),
                                                 static_cast<double>(base.planned_interventions))},
        {"downtime_h", percent_change(o.downtime.count(), base.downtime.count())},
        {"maintenance_cost", percent_change(o.maintenance_cost, base.maintenance_cost)},
        {"production_lost", percent_change(o.production_lost, base.production_lost)},
    };
}

std::string format_percent(const std::optional<double>& p) { return p ? fmt::format("{:+.1f}%", *p) : "n/a"; }

}  // namespace

ComparisonReport compare_policies(const sim::Scenario& scenario, const std::vector<MaintenancePolicy>& policies,
                                  const CostTable& costs, const detection::RuleSet* rules) {
    if (policies.size() < 2) throw InvalidPolicy("a comparison needs at least two policies");
    ComparisonReport report;
    for (std::size_t i = 0; i < policies.size(); ++i) {
        if (policies[i].kind == PolicyKind::corrective) {
            report.baseline = i;
            break;
        }
    }
    for (const auto& p : policies) report.results.push_back({p, simulate_policy(scenario, p, costs, rules), {}});
    const auto base = report.results[report.baseline].outcome;
    for (auto& r : report.results) r.deltas = deltas(r.outcome, base);
    return report;
}

std::string ComparisonReport::table() const {
    std::string out = fmt::format("Policy comparison (baseline: {})\n\n", results[baseline].policy.name);
    out += fmt::format("{:<16} {:>11} {:>9} {:>11} {:>12} {:>14} {:>12}\n", "policy", "breakdowns", "planned",
                       "inspections", "downtime_h", "cost", "prod_lost");
    for (const auto& r : results) {
        const auto& o = r.outcome;
        out += fmt::format("{:<16} {:>11} {:>9} {:>11} {:>12.1f} {:>14.1f} {:>12.1f}\n", r.policy.name,
                           o.unplanned_breakdowns, o.planned_interventions, o.inspections, o.downtime.count(),
                           o.maintenance_cost, o.production_lost);
    }
    out += "\nChange relative to baseline\n\n";
    out += fmt::format("{:<16} {:>11} {:>9} {:>12} {:>14} {:>12}\n", "policy", "breakdowns", "planned", "downtime",
                       "cost", "prod_lost");
    for (const auto& r : results) {
        out += fmt::format("{:<16} {:>11} {:>9} {:>12} {:>14} {:>12}\n", r.policy.name,
                           format_percent(r.deltas[0].percent), format_percent(r.deltas[1].percent),
                           format_percent(r.deltas[2].percent), format_percent(r.deltas[3].percent),
                           format_percent(r.deltas[4].percent));
    }
    out += "\nReported industry ranges for predictive programmes (context only, not reproduced):\n";
    for (const auto& rr : reported_ranges()) {
        out += fmt::format("  {:<46} {:.0f}% to {:.0f}%\n", rr.label, rr.low_percent, rr.high_percent);
    }
    return out;
}

std::string ComparisonReport::json() const {
    ordered_json doc;
    doc["schema"] = "cbm.comparison/1";
    doc["baseline"] = results[baseline].policy.name;
    doc["policies"] = ordered_json::array();
    for (const auto& r : results) {
        ordered_json pj;
        pj["name"] = r.policy.name;
        pj["kind"] = to_string(r.policy.kind);
        pj["unplanned_breakdowns"] = r.outcome.unplanned_breakdowns;
        pj["planned_interventions"] = r.outcome.planned_interventions;
        pj["inspections"] = r.outcome.inspections;
        pj["downtime_h"] = r.outcome.downtime.count();
        pj["maintenance_cost"] = r.outcome.maintenance_cost;
        pj["production_lost"] = r.outcome.production_lost;
        ordered_json dj;
        for (const auto& d : r.deltas) dj[d.metric] = d.percent ? ordered_json(*d.percent) : ordered_json(nullptr);
        pj["percent_change_vs_baseline"] = std::move(dj);
        doc["policies"].push_back(std::move(pj));
    }
    doc["reported_ranges"] = ordered_json::array();
    for (const auto& rr : reported_ranges()) {
        doc["reported_ranges"].push_back(
            ordered_json{{"label", rr.label}, {"low_percent", rr.low_percent}, {"high_percent", rr.high_percent},
                         {"status", "context only, not reproduced"}});
    }
    return doc.dump(2) + "\n";
}

namespace {

std::string read_file(const std::string& path, const char* what) {
    std::ifstream in(path);
    if (!in) throw Error(std::string("cannot read ") + what + " file '" + path + "'");
    std::stringstream ss;
    ss << in.rdbuf();
    return ss.str();
}

}  // namespace

std::vector<MaintenancePolicy> parse_policies(const std::string& text) {
    try {
        const auto doc = json::parse(text);
        if (doc.value("schema", "") != kPoliciesSchema) {
            throw InvalidPolicy(std::string("policies document must declare schema ") + kPoliciesSchema);
        }
        std::vector<MaintenancePolicy> out;
        for (const auto& pj : doc.at("policies")) {
            const auto kind = pj.at("kind").get<std::string>();
            const auto name = pj.value("name", kind);
            if (kind == "corrective") {
                out.push_back(MaintenancePolicy::corrective(name));
            } else if (kind == "preventive") {
                out.push_back(MaintenancePolicy::preventive(to_millis(Hours{pj.at("period_h").get<double>()}), name));
            } else if (kind == "predictive") {
                DetectionConfig cfg;
                cfg.inspection_fraction = pj.value("inspection_fraction", 0.5);
                cfg.repair_at = severity_from_string(pj.value("repair_at", "warning"));
                cfg.trend.window = pj.value("trend_window", cfg.trend.window);
                out.push_back(MaintenancePolicy::predictive(cfg, name));
            } else {
                throw InvalidPolicy("unknown policy kind '" + kind + "'");
            }
            out.back().validate();
        }
        return out;
    } catch (const json::exception& e) {
        throw InvalidPolicy(std::string("malformed policies document: ") + e.what());
    }
}

CostTable parse_costs(const std::string& text) {
    try {
        const auto doc = json::parse(text);
        if (doc.value("schema", "") != kCostsSchema) {
            throw InvalidCostTable(std::string("cost table must declare schema ") + kCostsSchema);
        }
        CostTable c;
        c.breakdown_cost = doc.at("breakdown_cost").get<double>();
        c.planned_cost = doc.at("planned_cost").get<double>();
        c.downtime_cost_per_hour = doc.at("downtime_cost_per_h").get<double>();
        c.breakdown_downtime = Hours{doc.at("breakdown_downtime_h").get<double>()};
        c.planned_downtime = Hours{doc.at("planned_downtime_h").get<double>()};
        c.inspection_cost = doc.value("inspection_cost", 0.0);
        c.response_time = Hours{doc.value("response_time_h", 0.0)};
        c.production_rate = doc.value("production_per_h", 0.0);
        c.validate();
        return c;
    } catch (const json::exception& e) {
        throw InvalidCostTable(std::string("malformed cost table: ") + e.what());
    }
}

std::vector<MaintenancePolicy> load_policies(const std::string& path) {
    return parse_policies(read_file(path, "policies"));
}

CostTable load_costs(const std::string& path) {
    std::ifstream probe(path);
    if (!probe) throw InvalidCostTable("cannot read cost table '" + path + "'");
    return parse_costs(read_file(path, "cost table"));
}

}  // namespace cbm::scheduler
