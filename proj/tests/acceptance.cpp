// Acceptance gate. One line per criterion:
//
//   PASS <n> <name>: <measurements>
//   FAIL <n> <name>: <measurements>
//
// Exits non-zero when any criterion fails.

#include <chrono>
#include <cmath>
#include <cstdio>
#include <functional>
#include <map>
#include <sstream>
#include <string>
#include <vector>

#include <fmt/format.h>

#include "cbm/detection/rules.hpp"
#include "cbm/detection/trend.hpp"
#include "cbm/engine/engine.hpp"
#include "cbm/reliability/hazard.hpp"
#include "cbm/reliability/weibull.hpp"
#include "cbm/scheduler/compare.hpp"
#include "cbm/scheduler/schedule.hpp"
#include "cbm/sim/random.hpp"
#include "cbm/sim/simulator.hpp"
#include "commands.hpp"
#include "oracles.hpp"

using namespace cbm;
using Clock = std::chrono::steady_clock;

namespace {

struct Verdict {
    bool pass = true;
    std::string detail;

    void require(bool ok, const std::string& what) {
        if (!ok) {
            pass = false;
            detail += (detail.empty() ? "" : "; ") + std::string("violated: ") + what;
        }
    }
    void note(const std::string& what) { detail += (detail.empty() ? "" : "; ") + what; }
};

double seconds_since(Clock::time_point t) { return std::chrono::duration<double>(Clock::now() - t).count(); }

Verdict weibull_recovery() {
    Verdict v;
    const std::pair<double, double> truth[] = {{0.8, 50}, {1.0, 100}, {1.5, 300}, {2.5, 80}};
    double fit_seconds = 0;
    double worst_beta = 0, worst_eta = 0, worst_grid = 0;
    for (const auto& [beta, eta] : truth) {
        sim::Random rng(7);
        std::vector<double> x(5000);
        for (auto& t : x) t = rng.weibull(beta, eta);

        const auto started = Clock::now();
        const auto fit = reliability::fit_weibull(x);
        fit_seconds += seconds_since(started);

        const double be = std::fabs(fit.shape() / beta - 1);
        const double ee = std::fabs(fit.scale() / eta - 1);
        const auto grid = oracle::weibull_grid(x);
        const double ge = std::fabs(fit.shape() - grid.beta);
        worst_beta = std::max(worst_beta, be);
        worst_eta = std::max(worst_eta, ee);
        worst_grid = std::max(worst_grid, ge);
        v.require(be <= 0.05, fmt::format("beta {:.4f} vs {}", fit.shape(), beta));
        v.require(ee <= 0.03, fmt::format("eta {:.3f} vs {}", fit.scale(), eta));
        // Grid points sit 0.001 apart, so the true argmax lies within one step.
        v.require(ge <= 0.001 + 1e-12, fmt::format("grid argmax {:.3f} vs MLE {:.6f}", grid.beta, fit.shape()));
    }
    v.require(fit_seconds < 5.0, fmt::format("fit time {:.3f}s", fit_seconds));
    v.note(fmt::format("max |beta err| {:.2f}%, max |eta err| {:.2f}%, max |MLE - grid| {:.5f}, fit time {:.3f}s",
                       100 * worst_beta, 100 * worst_eta, worst_grid, fit_seconds));
    return v;
}

Verdict half_interval() {
    Verdict v;
    sim::Random rng(2);
    int exact = 0;
    for (int i = 0; i < 1000; ++i) {
        const double pf = std::exp(rng.uniform(std::log(1e-3), std::log(1e7)));
        const auto span = scheduler::inspection_interval(reliability::PFInterval(pf), 0.5);
        if (span.length == pf / 2 && span.unit == reliability::UsageUnit::time) ++exact;
    }
    v.require(exact == 1000, fmt::format("{} of 1000 exact", exact));
    v.note(fmt::format("{}/1000 exactly pf/2", exact));
    return v;
}

Verdict detection_before_failure() {
    Verdict v;
    const auto fleet = sim::load_scenario(testutil::scenario("class_b_fleet.json"));
    const auto rules = detection::load_rules(testutil::scenario("class_b_rules.json"));
    bool noiseless = true;
    for (const auto& a : fleet.assets) {
        for (const auto& c : a.channels) noiseless = noiseless && c.noise_sigma == 0.0;
        noiseless = noiseless && a.pattern == reliability::PatternClass::B;
    }
    v.require(fleet.assets.size() == 100, "100 class-B assets");
    v.require(noiseless, "zero sensor noise");
    v.require(rules.failure_limits.has_value(), "limits at the functional-failure level");

    engine::EngineConfig config;
    config.inspection_fraction = 0.5;
    const auto started = Clock::now();
    engine::Engine e(fleet, rules, config);
    e.run_simulation();
    const double elapsed = seconds_since(started);

    const auto summary = engine::summarize(fleet, e.anomalies());
    std::size_t detected = 0, long_lead = 0;
    double min_lead = INFINITY;
    for (const auto& s : summary) {
        if (!s.detected_before_failure) continue;
        ++detected;
        const double pf = to_hours(fleet.find_asset(s.asset)->pf_clock());
        if (s.lead_time->count() >= 0.4 * pf) ++long_lead;
        min_lead = std::min(min_lead, s.lead_time->count());
    }
    v.require(detected == 100, fmt::format("{} of 100 detected before F", detected));
    v.require(long_lead >= 95, fmt::format("{} with lead >= 0.4 P-F", long_lead));
    v.require(elapsed < 30.0, fmt::format("runtime {:.2f}s", elapsed));
    v.note(fmt::format("{}/100 before F, {}/100 with lead >= 0.4 P-F, min lead {:.2f}h, {} frames in {:.2f}s",
                       detected, long_lead, min_lead, e.counts().received, elapsed));
    return v;
}

class FaultWatch : public engine::EngineObserver {
  public:
    explicit FaultWatch(const sim::Scenario& s) {
        for (const auto& f : s.faults) start_[f.sensor] = f.start;
    }

    void on_frame(const TelemetryFrame& frame, const ingest::LaneOutcome& out) override {
        auto it = start_.find(frame.sensor);
        if (it == start_.end() || frame.ts < it->second) return;
        auto& n = readings_[frame.sensor];
        ++n;
        if (out.health.became_faulty() && !flagged_after_.contains(frame.sensor)) flagged_after_[frame.sensor] = n;
    }

    std::size_t faults() const { return start_.size(); }
    const std::map<std::string, int>& flagged_after() const { return flagged_after_; }

  private:
    std::map<std::string, Timestamp> start_;
    std::map<std::string, int> readings_;
    std::map<std::string, int> flagged_after_;
};

Verdict containment() {
    Verdict v;
    const auto fleet = sim::load_scenario(testutil::scenario("containment.json"));
    const auto rules = detection::load_rules(testutil::scenario("containment_rules.json"));
    std::map<std::string, int> per_asset;
    for (const auto& f : fleet.faults) {
        for (const auto& a : fleet.assets) {
            for (const auto& c : a.channels) per_asset[a.id] += c.id == f.sensor && f.kind == sim::FaultKind::stuck_value;
        }
    }
    bool one_each = fleet.assets.size() == 20;
    for (const auto& a : fleet.assets) one_each = one_each && per_asset[a.id] == 1;
    v.require(one_each, "one stuck-value fault on each of 20 assets");

    testutil::TempDir dir;
    store::Store st({dir.path(), std::nullopt, store::Durability::flush});
    FaultWatch watch(fleet);
    engine::Engine e(fleet, rules, {}, &st);
    e.set_observer(&watch);
    e.run_simulation();

    int worst = 0;
    for (const auto& [sensor, n] : watch.flagged_after()) worst = std::max(worst, n);
    const bool all_flagged = watch.flagged_after().size() == watch.faults();
    v.require(all_flagged, fmt::format("{} of {} faulty sensors flagged", watch.flagged_after().size(), watch.faults()));
    v.require(worst <= 3, fmt::format("flagged after {} readings", worst));

    std::size_t linked = 0;
    for (const auto& f : fleet.faults) {
        const auto asset = f.sensor.substr(0, f.sensor.find('.'));
        for (const auto& sf : st.query(asset, f.sensor, fleet.start, fleet.end())) linked += sf.substitution.has_value();
    }
    v.require(e.counts().substituted > 0 && linked > 0, "substitution records present");
    v.require(e.anomalies().empty(), fmt::format("{} asset-level anomalies", e.anomalies().size()));
    v.note(fmt::format("{}/{} faulty sensors flagged, worst after {} readings, {} substitutions ({} on faulty sensors, "
                       "stored with records), {} anomalies",
                       watch.flagged_after().size(), watch.faults(), worst, e.counts().substituted, linked,
                       e.anomalies().size()));
    return v;
}

Verdict policy_dominance() {
    Verdict v;
    const auto fleet = sim::load_scenario(testutil::scenario("policy_fleet.json"));
    const auto policies = scheduler::load_policies(testutil::scenario("policies.json"));
    const auto costs = scheduler::load_costs(testutil::scenario("costs.json"));
    v.require(fleet.assets.size() == 50, "50-asset scenario");
    const auto report = scheduler::compare_policies(fleet, policies, costs);

    const scheduler::PolicyResult *corrective = nullptr, *predictive = nullptr;
    for (const auto& r : report.results) {
        if (r.policy.kind == scheduler::PolicyKind::corrective && !corrective) corrective = &r;
        if (r.policy.kind == scheduler::PolicyKind::predictive && !predictive) predictive = &r;
    }
    if (!corrective || !predictive) {
        v.require(false, "policies file has corrective and predictive entries");
        return v;
    }
    const auto& c = corrective->outcome;
    const auto& p = predictive->outcome;
    v.require(p.unplanned_breakdowns < c.unplanned_breakdowns,
              fmt::format("breakdowns {} vs {}", p.unplanned_breakdowns, c.unplanned_breakdowns));
    v.require(p.downtime < c.downtime, fmt::format("downtime {:.1f}h vs {:.1f}h", p.downtime.count(), c.downtime.count()));

    const auto table = report.table();
    bool ranges = true;
    for (const auto& r : scheduler::reported_ranges()) ranges = ranges && table.find(r.label) != std::string::npos;
    v.require(ranges && table.find("context") != std::string::npos && table.find('%') != std::string::npos,
              "report prints computed percentages beside the labelled context ranges");

    auto pct = [](double a, double b) { return b == 0 ? 0.0 : 100.0 * (a - b) / b; };
    v.note(fmt::format("breakdowns {} -> {} ({:+.1f}%), downtime {:.1f}h -> {:.1f}h ({:+.1f}%), cost {:.0f} -> {:.0f} "
                       "({:+.1f}%)",
                       c.unplanned_breakdowns, p.unplanned_breakdowns,
                       pct(static_cast<double>(p.unplanned_breakdowns), static_cast<double>(c.unplanned_breakdowns)),
                       c.downtime.count(), p.downtime.count(), pct(p.downtime.count(), c.downtime.count()),
                       c.maintenance_cost, p.maintenance_cost, pct(p.maintenance_cost, c.maintenance_cost)));
    return v;
}

Verdict replay_determinism() {
    Verdict v;
    testutil::TempDir dir;
    std::ostringstream sink;
    auto simulate = [&](const std::string& name) {
        cli::SimulateOptions o;
        o.scenario = testutil::scenario("class_b_fleet.json");
        o.rules = testutil::scenario("class_b_rules.json");
        o.out = (dir / name).string();
        return cli::cmd_simulate(o, sink, sink).exit_code;
    };
    v.require(simulate("first") == cli::kExitOk, "first simulate run");
    v.require(simulate("second") == cli::kExitOk, "second simulate run");

    cli::ReplayOptions r;
    r.store = (dir / "first" / "store").string();
    r.scenario = testutil::scenario("class_b_fleet.json");
    r.rules = testutil::scenario("class_b_rules.json");
    r.out = (dir / "replayed").string();
    v.require(cli::cmd_replay(r, sink, sink).exit_code == cli::kExitOk, "replay run");

    const auto a = testutil::slurp(dir / "first" / "anomalies.jsonl");
    const auto b = testutil::slurp(dir / "second" / "anomalies.jsonl");
    const auto c = testutil::slurp(dir / "replayed" / "anomalies.jsonl");
    const auto lines = std::count(a.begin(), a.end(), '\n');
    v.require(lines > 0, "non-empty anomaly journal");
    v.require(a == b, "two simulate runs byte-identical");
    v.require(a == c, "replay byte-identical to the original run");
    v.note(fmt::format("{} journal lines, {} bytes, fnv1a64 {:016x} / {:016x} / {:016x}", lines, a.size(),
                       store::fnv1a64(a), store::fnv1a64(b), store::fnv1a64(c)));
    return v;
}

Verdict trend_oracle() {
    Verdict v;
    sim::Random rng(1234);
    double worst = 0;
    int bad = 0;
    for (int i = 0; i < 1000; ++i) {
        const auto n = 3 + static_cast<std::size_t>(rng.uniform() * 98);
        std::vector<double> t, y;
        std::vector<detection::TrendSample> pts;
        double clock = rng.uniform(-1000, 1000);
        const double slope = (rng.uniform() < 0.5 ? -1 : 1) * std::exp(rng.uniform(std::log(1e-2), std::log(10.0)));
        const double level = rng.uniform(-100, 100);
        for (std::size_t k = 0; k < n; ++k) {
            clock += rng.uniform(0.05, 24);
            t.push_back(clock);
            y.push_back(level + slope * clock + rng.normal(0, rng.uniform(0, 5)));
            pts.push_back({t.back(), y.back()});
        }
        detection::LimitRule rule;
        rule.upper = 1e6;
        rule.lower = -1e6;
        const auto got = detection::trend_analysis(pts, rule);
        const auto ref = oracle::least_squares(t, y);
        const double bound = ref.slope > 0 ? 1e6 : -1e6;
        const double crossing = (bound - ref.intercept) / ref.slope;
        const double e1 = std::fabs(got.slope - ref.slope) / std::fabs(ref.slope);
        const double e2 = std::fabs(got.intercept - ref.intercept) / std::fabs(ref.intercept);
        const double e3 = got.predicted_crossing ? std::fabs(*got.predicted_crossing - crossing) / std::fabs(crossing) : 1.0;
        worst = std::max({worst, e1, e2, e3});
        bad += (e1 > 1e-9 || e2 > 1e-9 || e3 > 1e-9 || got.n_points != n) ? 1 : 0;
    }
    v.require(bad == 0, fmt::format("{} series beyond 1e-9", bad));

    int raised = 0;
    for (int i = 0; i < 1000; ++i) {
        const double a = rng.uniform(-10, 10);
        const std::vector<detection::TrendSample> two{{a, rng.normal(0, 1)}, {a + rng.uniform(0.1, 5), rng.normal(0, 1)}};
        detection::LimitRule rule;
        rule.upper = 10;
        try {
            detection::trend_analysis(two, rule);
        } catch (const detection::InsufficientPoints&) {
            ++raised;
        }
    }
    v.require(raised == 1000, fmt::format("{} of 1000 size-2 inputs raised InsufficientPoints", raised));
    v.note(fmt::format("1000 series, worst relative error {:.2e}; {}/1000 size-2 inputs raised InsufficientPoints",
                       worst, raised));
    return v;
}

Verdict pattern_fixtures() {
    Verdict v;
    auto sampled = [](const std::function<double(double)>& h) {
        std::vector<reliability::HazardCurve::Point> g;
        for (int i = 0; i <= 40; ++i) g.push_back({i / 40.0, h(i / 40.0)});
        return reliability::HazardCurve(g);
    };
    const auto u = sampled([](double a) {
        if (a <= 0.3) return 0.05 - (0.04 / 0.3) * a;
        if (a <= 0.7) return 0.01;
        return 0.01 + (0.05 / 0.3) * (a - 0.7);
    });
    const auto flat = sampled([](double) { return 0.01; });
    const auto infant = sampled([](double a) { return a <= 0.3 ? 0.05 - (0.04 / 0.3) * a : 0.01; });
    const auto cu = reliability::classify_hazard_shape(u).id;
    const auto cf = reliability::classify_hazard_shape(flat).id;
    const auto ci = reliability::classify_hazard_shape(infant).id;
    v.require(cu == reliability::PatternClass::E, "U-shape -> E");
    v.require(cf == reliability::PatternClass::D, "flat -> D");
    v.require(ci == reliability::PatternClass::F, "decreasing-to-flat -> F");
    v.note(fmt::format("U-shape -> {}, flat -> {}, decreasing-to-flat -> {}", to_string(cu), to_string(cf),
                       to_string(ci)));
    return v;
}

}  // namespace

int main() {
    const std::pair<const char*, Verdict (*)()> criteria[] = {
        {"weibull-recovery", weibull_recovery},
        {"half-interval-rule", half_interval},
        {"detection-before-failure", detection_before_failure},
        {"faulty-sensor-containment", containment},
        {"policy-dominance", policy_dominance},
        {"replay-determinism", replay_determinism},
        {"trend-oracle", trend_oracle},
        {"pattern-class-fixtures", pattern_fixtures},
    };
    int failures = 0;
    int n = 0;
    for (const auto& [name, run] : criteria) {
        ++n;
        Verdict v;
        try {
            v = run();
        } catch (const std::exception& e) {
            v.pass = false;
            v.detail = std::string("threw ") + e.what();
        }
        failures += v.pass ? 0 : 1;
        std::printf("%s %d %s: %s\n", v.pass ? "PASS" : "FAIL", n, name, v.detail.c_str());
        std::fflush(stdout);
    }
    return failures == 0 ? 0 : 1;
}
