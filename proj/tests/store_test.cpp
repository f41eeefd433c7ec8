#include <doctest.h>

#include <filesystem>
#include <vector>

#include "cbm/sim/random.hpp"
#include "cbm/store/journal.hpp"
#include "cbm/store/store.hpp"
#include "oracles.hpp"

using namespace cbm;
using namespace cbm::store;
namespace fs = std::filesystem;

namespace {

const Timestamp t0 = from_epoch_ms(1'767'571'200'000);

TelemetryFrame frame(std::uint64_t seq, Timestamp ts, double value = 1.0, std::string sensor = "A1.temp") {
    TelemetryFrame f;
    f.asset = "A1";
    f.sensor = std::move(sensor);
    f.ts = ts;
    f.value = value;
    f.unit = "C";
    f.seq = seq;
    return f;
}

StoreConfig config(const fs::path& root) { return {root, std::nullopt, Durability::flush}; }

RetentionPolicy policy(int hot_days, int archive_days, int drop_days) {
    return {hot_days * kDay, archive_days * kDay, drop_days * kDay};
}

}  // namespace

TEST_SUITE("store") {

TEST_CASE("read your write, idempotence and persistence") {
    testutil::TempDir dir;
    {
        Store s(config(dir.path()));
        CHECK(s.append(frame(1, t0 + kHour, 70.5)));
        const auto q = s.query("A1", "A1.temp", t0, t0 + kDay);
        REQUIRE(q.size() == 1);
        CHECK(q[0].frame == frame(1, t0 + kHour, 70.5));
        CHECK_FALSE(s.append(frame(1, t0 + kHour, 70.5)));
        CHECK_FALSE(s.append(frame(1, t0 + 2 * kHour, 12.0)));
        CHECK(s.frame_count() == 1);
    }
    Store reopened(config(dir.path()));
    CHECK(reopened.query("A1", "A1.temp", t0, t0 + kDay).size() == 1);
    CHECK_FALSE(reopened.append(frame(1, t0 + kHour, 70.5)));
}

TEST_CASE("quota") {
    testutil::TempDir dir;
    Store s({dir.path(), 400, Durability::flush});
    CHECK_THROWS_AS(
        [&] {
            for (std::uint64_t i = 0; i < 100; ++i) s.append(frame(i, t0 + i * Millis{1000}));
        }(),
        StorageFull);
    CHECK(s.bytes_used() <= 400);
}

TEST_CASE("query windows") {
    testutil::TempDir dir;
    Store s(config(dir.path()));
    s.append(frame(3, t0 + 3 * kHour));
    s.append(frame(1, t0 + kHour));
    s.append(frame(2, t0 + 2 * kHour));
    s.append(frame(4, t0 + 30 * kHour));
    s.append(frame(1, t0 + 2 * kHour, 5.0, "A1.other"));

    CHECK(s.query("A1", "A1.temp", t0 + kHour, t0 + kHour).empty());
    const auto q = s.query("A1", "A1.temp", t0, t0 + 4 * kHour);
    REQUIRE(q.size() == 3);
    CHECK(q[0].frame.seq == 1);
    CHECK(q[1].frame.seq == 2);
    CHECK(q[2].frame.seq == 3);
    CHECK(s.query("A1", "A1.temp", t0, t0 + 2 * kDay).size() == 4);
    CHECK(s.query("A1", "A1.temp", t0 + kHour, t0 + 2 * kHour).size() == 1);
    CHECK_THROWS_AS(s.query("A1", "A1.temp", t0 + kHour, t0), InvalidRange);
}

TEST_CASE("substitution linkage") {
    testutil::TempDir dir;
    ingest::SubstitutionRecord rec;
    rec.original = frame(9, t0 + kHour, 500.0);
    rec.substituted_value = 70.0;
    rec.at = t0 + kHour;
    {
        Store s(config(dir.path()));
        s.append(rec.original, rec);
        s.quarantine(frame(2, t0), ingest::QuarantineReason::stale);
    }
    Store s(config(dir.path()));
    const auto q = s.query("A1", "A1.temp", t0, t0 + kDay);
    REQUIRE(q.size() == 1);
    REQUIRE(q[0].substitution);
    CHECK(q[0].frame.value == 500.0);
    CHECK(q[0].substitution->substituted_value == 70.0);
    REQUIRE(s.quarantined().size() == 1);
    CHECK(s.quarantined()[0].second == ingest::QuarantineReason::stale);
}

TEST_CASE("retention examples") {
    testutil::TempDir dir;
    Store s(config(dir.path()));
    const Timestamp now = t0 + 60 * kDay;
    s.append(frame(1, now - 31 * kDay));
    s.append(frame(2, now - kHour));
    const auto p = policy(1, 30, 365);
    const auto r = s.apply_retention(p, now);
    CHECK(r == RetentionResult{1, 0});
    CHECK(s.apply_retention(p, now) == RetentionResult{0, 0});
    CHECK(s.archive_segments().size() == 1);
    CHECK(s.query("A1", "A1.temp", t0, now + kDay).size() == 2);
    CHECK_THROWS_AS(s.apply_retention(policy(40, 30, 365), now), InvalidRetention);
}

TEST_CASE("dropped ranges") {
    testutil::TempDir dir;
    Store s(config(dir.path()));
    const Timestamp now = t0 + 100 * kDay;
    s.append(frame(1, t0 + kHour));
    s.append(frame(2, now - kHour));
    CHECK(s.apply_retention(policy(1, 10, 50), now) == RetentionResult{0, 1});
    CHECK_THROWS_AS(s.replay({t0, now}, [](const StoredFrame&) {}), RangeUnavailable);
    int n = 0;
    s.replay({now - kDay, now}, [&](const StoredFrame&) { ++n; });
    CHECK(n == 1);
    n = 0;
    s.replay({t0, t0}, [&](const StoredFrame&) { ++n; });
    CHECK(n == 0);
    CHECK_THROWS_AS(s.append(frame(3, t0 + 2 * kHour)), IoFailure);
}

TEST_CASE("archive checksum audit") {
    testutil::TempDir dir;
    {
        Store s(config(dir.path()));
        for (std::uint64_t i = 0; i < 48; ++i) s.append(frame(i, t0 + i * kHour, static_cast<double>(i)));
        s.apply_retention(policy(1, 5, 50), t0 + 10 * kDay);
        REQUIRE(s.archive_segments().size() == 2);
        s.verify_archive();
        for (const auto& seg : s.archive_segments()) CHECK(seg.frame_count == 24);
    }
    const auto victim = dir.path() / "archive" / (day_name(t0) + ".log");
    auto text = testutil::slurp(victim);
    REQUIRE(!text.empty());
    text[text.find("\"value\":3,") + 8] = '4';
    testutil::spit(victim, text);
    Store s(config(dir.path()));
    CHECK_THROWS_AS(s.verify_archive(), CorruptSegment);
}

TEST_CASE("retention never removes data younger than the archive window") {
    sim::Random rng(31);
    for (int run = 0; run < 5; ++run) {
        testutil::TempDir dir;
        Store s(config(dir.path()));
        const auto p = policy(2, 7 + run, 20 + 3 * run);
        std::vector<TelemetryFrame> written;
        Timestamp now = t0;
        std::uint64_t seq = 0;
        for (int step = 0; step < 60; ++step) {
            now += to_millis(Hours{rng.uniform(0, 36)});
            for (int k = 0; k < 5; ++k) {
                auto f = frame(seq++, now - to_millis(Hours{rng.uniform(0, 12)}));
                // Frames into already-archived days are refused, as designed.
                try {
                    if (s.append(f)) written.push_back(f);
                } catch (const IoFailure&) {
                }
            }
            s.apply_retention(p, now);
            const Timestamp keep_from = now - p.archive_window;
            std::size_t expected = 0;
            for (const auto& f : written) expected += f.ts >= keep_from ? 1 : 0;
            std::size_t seen = 0;
            s.replay({std::max(keep_from, s.dropped_before().value_or(keep_from)), now + kDay},
                     [&](const StoredFrame& sf) { seen += sf.frame.ts >= keep_from ? 1 : 0; });
            CHECK(seen == expected);
            if (s.dropped_before()) CHECK(*s.dropped_before() <= now - p.drop_after);
        }
    }
}

TEST_CASE("journal keeps complete lines only") {
    testutil::TempDir dir;
    const auto path = dir.path() / "j.jsonl";
    {
        Journal j(path, Durability::flush);
        CHECK(j.append("{\"a\":1}") == 0);
        CHECK(j.append("{\"a\":2}") == 1);
    }
    {
        std::ofstream torn(path, std::ios::app);
        torn << "{\"a\":";
    }
    Journal j(path, Durability::flush);
    CHECK(j.size() == 2);
    CHECK(j.lines()[1] == "{\"a\":2}");
}

}
