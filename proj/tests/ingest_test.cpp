#include <doctest.h>

#include <cmath>
#include <limits>
#include <string>
#include <vector>

#include "cbm/engine/engine.hpp"
#include "cbm/ingest/lane.hpp"
#include "cbm/ingest/wire.hpp"
#include "cbm/sim/random.hpp"
#include "oracles.hpp"

using namespace cbm;
using namespace cbm::ingest;

namespace {

const Timestamp t0 = from_epoch_ms(1'767'571'200'000);

TelemetryFrame frame(std::uint64_t seq, double value, Timestamp ts = t0) {
    TelemetryFrame f;
    f.asset = "A1";
    f.sensor = "A1.temp";
    f.kind = ChannelKind::point_temperature;
    f.ts = ts;
    f.value = value;
    f.unit = "C";
    f.seq = seq;
    return f;
}

ChannelState with_window(std::vector<double> values) {
    ChannelState s;
    for (std::size_t i = 0; i < values.size(); ++i) accept_value(s, t0 + i * kHour, values[i], 32);
    return s;
}

}  // namespace

TEST_SUITE("ingest") {

TEST_CASE("wire round-trip") {
    auto f = frame(17, 70.25, from_epoch_ms(3'600'000));
    const auto line = encode_frame(f);
    CHECK(line == R"({"v":1,"asset":"A1","sensor":"A1.temp","kind":"point-temperature","ts":3600000,"value":70.25,"unit":"C","seq":17})");
    CHECK(decode_frame(line) == f);
    CHECK(decode_frame(line + "\n") == f);
    CHECK(decode_frame(line + "\r\n") == f);

    sim::Random rng(1);
    for (int i = 0; i < 2000; ++i) {
        f.value = rng.normal(0, 1e3) * std::pow(10.0, rng.uniform(-8, 8));
        f.seq = static_cast<std::uint64_t>(rng.uniform(0, 1e15));
        CHECK(decode_frame(encode_frame(f)) == f);
    }
}

TEST_CASE("wire rejects bad lines") {
    CHECK_THROWS_AS(decode_frame(R"({"v":1,"asset":"A1","sensor":"A1.temp","kind":"point-temperature","ts":0,"value":1,"unit":"C"})"),
                    MalformedFrame);
    CHECK_THROWS_AS(decode_frame(R"({"v":1,"asset":"A1","sensor":"A1.temp","kind":"point-temperature","ts":0,"value":"NaN","unit":"C","seq":1})"),
                    MalformedFrame);
    CHECK_THROWS_AS(decode_frame(R"({"v":1,"asset":"A1","sensor":"A1.temp","kind":"point-temperature","ts":0,"value":NaN,"unit":"C","seq":1})"),
                    MalformedFrame);
    CHECK_THROWS_AS(decode_frame(R"({"v":2,"asset":"A1","sensor":"A1.temp","kind":"point-temperature","ts":0,"value":1,"unit":"C","seq":1})"),
                    MalformedFrame);
    CHECK_THROWS_AS(decode_frame(R"({"v":1,"asset":"A1","sensor":"A1.temp","kind":"laser","ts":0,"value":1,"unit":"C","seq":1})"),
                    MalformedFrame);
    CHECK_THROWS_AS(decode_frame(""), MalformedFrame);
    CHECK_THROWS_AS(decode_frame(std::string(kMaxLineBytes + 10, ' ')), MalformedFrame);
    CHECK_THROWS_AS(encode_frame(frame(1, std::numeric_limits<double>::infinity())), Error);
}

TEST_CASE("decoder is total under mutation") {
    const std::string base = encode_frame(frame(3, -12.5e-3));
    const std::string alphabet = "{}[]\":,0123456789.eE+-nulltruefalse\\ \x01\xff";
    sim::Random rng(2024);
    int decoded = 0, rejected = 0;
    for (int i = 0; i < 50'000; ++i) {
        std::string s = base;
        const int edits = 1 + static_cast<int>(rng.uniform() * 6);
        for (int e = 0; e < edits; ++e) {
            const auto pos = static_cast<std::size_t>(rng.uniform() * static_cast<double>(s.size() + 1));
            const char c = alphabet[static_cast<std::size_t>(rng.uniform() * alphabet.size())];
            switch (static_cast<int>(rng.uniform() * 4)) {
                case 0: if (pos < s.size()) s[pos] = c; break;
                case 1: s.insert(s.begin() + static_cast<long>(pos), c); break;
                case 2: if (pos < s.size()) s.erase(pos, 1); break;
                default: s = s.substr(0, pos); break;
            }
        }
        try {
            const auto f = decode_frame(s);
            CHECK(std::isfinite(f.value));
            ++decoded;
        } catch (const MalformedFrame&) {
            ++rejected;
        }
    }
    CHECK(rejected > 0);
    CHECK(decoded + rejected == 50'000);
}

TEST_CASE("admit") {
    ChannelState s;
    CHECK(admit(frame(5, 1.0), s, t0, 24 * kHour).accepted());
    CHECK(admit(frame(5, 1.0), s, t0, 24 * kHour).quarantined == QuarantineReason::out_of_order);
    CHECK(admit(frame(4, 1.0), s, t0, 24 * kHour).quarantined == QuarantineReason::out_of_order);
    CHECK(admit(frame(6, 1.0), s, t0, 24 * kHour).accepted());
    CHECK(admit(frame(7, 1.0, t0), s, t0 + 25 * kHour, 24 * kHour).quarantined == QuarantineReason::stale);
    CHECK(admit(frame(7, 1.0, t0), s, t0 + 24 * kHour, 24 * kHour).accepted());
    CHECK(*s.last_seq == 7);
}

TEST_CASE("screen_outlier") {
    const auto flat = with_window({5, 5, 5, 5, 5});
    auto r = screen_outlier(flat, 5.0);
    CHECK_FALSE(r.outlier);
    CHECK(r.score == 0.0);
    r = screen_outlier(flat, 50.0);
    CHECK(r.outlier);
    CHECK(r.score > 100.0);
    const auto short_window = with_window({1, 2, 3});
    r = screen_outlier(short_window, 1e9);
    CHECK_FALSE(r.outlier);
    CHECK(r.score == 0.0);

    // score = |x - median| / max(1.4826 MAD, floor)
    const std::vector<double> w{1, 2, 3, 4, 100};
    CHECK(screen_outlier(w, 10.0).score == doctest::Approx(7.0 / 1.4826).epsilon(1e-12));
}

TEST_CASE("screen_outlier is translation-equivariant") {
    sim::Random rng(8);
    for (int i = 0; i < 500; ++i) {
        std::vector<double> w(5 + static_cast<std::size_t>(rng.uniform() * 28));
        for (auto& v : w) v = rng.normal(0, 3);
        const double x = rng.normal(0, 10);
        const double c = rng.uniform(-1e3, 1e3);
        std::vector<double> shifted(w);
        for (auto& v : shifted) v += c;
        // The floor depends on |median|; equivariance holds whenever MAD dominates it.
        const double med = median(shifted);
        std::vector<double> dev;
        for (double v : shifted) dev.push_back(std::fabs(v - med));
        if (1.4826 * median(dev) < 1e-6 + 0.01 * std::max(std::fabs(med), std::fabs(median(w)))) continue;
        CHECK(screen_outlier(shifted, x + c).score == doctest::Approx(screen_outlier(w, x).score).epsilon(1e-9));
    }
}

TEST_CASE("substitute") {
    CHECK(substitute(with_window({4, 5, 6}), frame(1, 90), t0).substituted_value == 5.0);
    CHECK(substitute(with_window({5}), frame(1, 90), t0).substituted_value == 5.0);
    const auto rec = substitute(with_window({4, 5, 6}), frame(1, 90), t0);
    CHECK(rec.original.value == 90.0);
    CHECK(rec.method == SubstitutionMethod::rolling_median);
    CHECK_THROWS_AS(substitute(ChannelState{}, frame(1, 90), t0), NoHistory);
}

TEST_CASE("health hysteresis") {
    ChannelState s;
    const ScreenResult bad{true, 10}, good{false, 0};
    CHECK(update_health(s, bad).after == Health::suspect);
    CHECK(update_health(s, bad).after == Health::suspect);
    const auto t = update_health(s, bad);
    CHECK(t.became_faulty());
    CHECK(s.health == Health::faulty);

    for (int i = 0; i < 9; ++i) CHECK(update_health(s, good).after == Health::faulty);
    CHECK(update_health(s, good).recovered());
    CHECK(s.health == Health::healthy);

    ChannelState once;
    update_health(once, bad);
    update_health(once, good);
    CHECK(once.consecutive_outliers == 0);
    CHECK(once.health == Health::healthy);
}

TEST_CASE("lane never forwards an outlier") {
    ChannelState s;
    sim::Random rng(4);
    std::uint64_t seq = 0;
    int substituted = 0;
    for (int i = 0; i < 2000; ++i) {
        const bool spike = i > 20 && rng.uniform() < 0.05;
        const double v = spike ? 500.0 : rng.normal(50, 1);
        const auto out = process_frame(s, frame(seq++, v, t0 + i * kHour), t0 + i * kHour);
        if (out.screen.outlier) {
            REQUIRE(out.substitution.has_value());
            CHECK(out.detection_value == out.substitution->substituted_value);
            CHECK(*out.detection_value != v);
            ++substituted;
        } else {
            CHECK(out.detection_value == v);
        }
    }
    CHECK(substituted > 0);
}

TEST_CASE("accounting identity and single-fault containment end to end") {
    auto fleet = sim::load_scenario(testutil::scenario("containment.json"));
    const auto rules = detection::load_rules(testutil::scenario("containment_rules.json"));

    auto clean = fleet;
    clean.faults.clear();
    engine::Engine honest(clean, rules);
    honest.run_simulation();
    engine::Engine faulty(fleet, rules);
    faulty.run_simulation();

    for (const auto* e : {&honest, &faulty}) {
        const auto& c = e->counts();
        CHECK(c.accepted + c.quarantined == c.received);
    }
    CHECK(faulty.counts().substituted > 0);

    auto verdicts = [](const engine::Engine& e) {
        std::vector<std::string> out;
        for (const auto& a : e.anomalies()) out.push_back(detection::journal_line(a));
        return out;
    };
    CHECK(verdicts(honest) == verdicts(faulty));
    for (const auto& a : fleet.assets) {
        for (const auto& v : faulty.sensors(a.id)) {
            if (v.sensor.ends_with("motor-temp")) {
                CHECK(v.health == Health::faulty);
                CHECK(v.excluded);
            }
        }
    }
}

}
