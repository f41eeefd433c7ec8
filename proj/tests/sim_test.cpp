#include <doctest.h>

#include <cstdlib>
#include <map>
#include <set>
#include <string>

#include "cbm/ingest/wire.hpp"
#include "cbm/sim/simulator.hpp"
#include "oracles.hpp"

using namespace cbm;
using namespace cbm::sim;

namespace {

const Timestamp t0 = from_epoch_ms(1'767'571'200'000);

SensorChannelSpec channel(std::string id, double nominal, double sigma, double gain, double period_h = 1.0) {
    SensorChannelSpec c;
    c.id = std::move(id);
    c.kind = ChannelKind::point_temperature;
    c.unit = "degC";
    c.nominal = nominal;
    c.noise_sigma = sigma;
    c.degradation_gain = gain;
    c.sample_period = to_millis(Hours{period_h});
    return c;
}

Scenario one_asset(double onset_h, double pf_h, SensorChannelSpec c, double horizon_h = 2000.0) {
    Scenario s;
    s.seed = 5;
    s.start = t0;
    s.horizon = to_millis(Hours{horizon_h});
    s.tick = kHour;
    AssetSpec a;
    a.id = "A1";
    a.pf = reliability::PFInterval(pf_h);
    a.degradation_onset = t0 + to_millis(Hours{onset_h});
    a.channels.push_back(std::move(c));
    s.assets.push_back(std::move(a));
    return s;
}

std::string run_wire(const Scenario& s) {
    Simulator sim(s);
    std::string out;
    while (!sim.done()) {
        for (const auto& f : sim.step()) out += ingest::encode_frame(f) + "\n";
    }
    return out;
}

std::map<double, double> values_by_hour(const Scenario& s) {
    Simulator sim(s);
    std::map<double, double> out;
    while (!sim.done()) {
        for (const auto& f : sim.step()) out[to_hours(f.ts - s.start)] = f.value;
    }
    return out;
}

}  // namespace

TEST_SUITE("sim") {

TEST_CASE("zero noise reads nominal before P and drifts linearly after") {
    const auto v = values_by_hour(one_asset(100, 200, channel("A1.t", 70.0, 0.0, 0.1)));
    CHECK(v.at(0) == 70.0);
    CHECK(v.at(99) == 70.0);
    CHECK(v.at(100) == 70.0);
    CHECK(v.at(110) == doctest::Approx(71.0).epsilon(1e-12));
}

TEST_CASE("stuck-value fault overrides the reading") {
    auto s = one_asset(100, 200, channel("A1.t", 70.0, 2.0, 0.1));
    s.faults.push_back({"A1.t", FaultKind::stuck_value, t0 + 50 * kHour, 99.0});
    const auto v = values_by_hour(s);
    for (double h : {50.0, 51.0, 150.0, 400.0}) CHECK(v.at(h) == 99.0);
    CHECK(v.at(49) != 99.0);
}

TEST_CASE("zero-noise values equal the closed-form mean") {
    auto c = channel("A1.t", 12.5, 0.0, 0.37, 3.0);
    const auto s = one_asset(333, 150, c);
    Simulator sim(s);
    while (!sim.done()) {
        for (const auto& f : sim.step()) {
            CHECK(f.value == mean_value(c, s.assets[0].degradation_onset, f.ts));
        }
    }
    CHECK(failure_level(s.assets[0], c) == doctest::Approx(12.5 + 0.37 * 150).epsilon(1e-12));
}

TEST_CASE("same seed gives identical wire streams") {
    const auto s = load_scenario(testutil::scenario("containment.json"));
    const auto a = run_wire(s);
    CHECK(a == run_wire(s));
    const std::string golden = std::string(CBM_TEST_DIR) + "/golden/containment.wire";
    if (std::getenv("CBM_UPDATE_GOLDEN")) testutil::spit(golden, a);
    CHECK(a == testutil::slurp(golden));
    auto other = s;
    other.seed += 1;
    CHECK(a != run_wire(other));
}

TEST_CASE("per-sensor seq is gapless without faults") {
    const auto s = load_scenario(testutil::scenario("class_b_fleet.json"));
    Simulator sim(s);
    std::map<std::string, std::uint64_t> next;
    std::size_t frames = 0;
    for (int i = 0; i < 400 && !sim.done(); ++i) {
        for (const auto& f : sim.step()) {
            auto [it, fresh] = next.try_emplace(f.sensor, 0);
            CHECK(f.seq == it->second);
            it->second = f.seq + 1;
            ++frames;
        }
    }
    CHECK(frames > 0);
}

TEST_CASE("ground truth") {
    const auto s = one_asset(1000, 200, channel("A1.t", 70.0, 0.0, 0.1));
    Simulator sim(s);
    const auto gt = sim.ground_truth("A1");
    CHECK(gt.potential_failure == t0 + 1000 * kHour);
    CHECK(gt.functional_failure == t0 + 1200 * kHour);
    CHECK_THROWS_AS(sim.ground_truth("nope"), UnknownAsset);

    const auto fleet = load_scenario(testutil::scenario("class_b_fleet.json"));
    std::set<std::int64_t> onsets;
    for (const auto& a : fleet.assets) {
        const auto g = ground_truth(a);
        CHECK(g.functional_failure - g.potential_failure == a.pf_clock());
        onsets.insert(epoch_ms(g.potential_failure));
    }
    CHECK(onsets.size() > 1);
}

TEST_CASE("invalid specs") {
    Scenario empty;
    empty.horizon = kHour;
    CHECK_THROWS_AS(validate(empty), InvalidSpec);

    auto s = one_asset(10, 20, channel("A1.t", 1, 0, 0, 1.0));
    s.tick = 2 * kHour;
    CHECK_THROWS_AS(Simulator{s}, InvalidSpec);

    auto late = one_asset(1990, 200, channel("A1.t", 1, 0, 0));
    CHECK_THROWS_AS(validate(late), InvalidSpec);

    CHECK_THROWS_AS(parse_scenario("{"), InvalidSpec);
    CHECK_THROWS_AS(parse_scenario(R"({"schema":"other/9"})"), InvalidSpec);
}

TEST_CASE("horizon") {
    auto s = one_asset(1, 2, channel("A1.t", 1, 0, 0), 3.0);
    Simulator sim(s);
    sim.step();
    sim.step();
    sim.step();
    CHECK(sim.done());
    CHECK_THROWS_AS(sim.step(), HorizonExceeded);
}

TEST_CASE("scenario normalization round-trips") {
    const auto s = load_scenario(testutil::scenario("policy_fleet.json"));
    const auto text = normalized_scenario(s);
    CHECK(normalized_scenario(parse_scenario(text)) == text);
}

}
