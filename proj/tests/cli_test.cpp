#include <doctest.h>

#include <cstdlib>
#include <sstream>
#include <string>
#include <sys/wait.h>

#include <nlohmann/json.hpp>

#include "cbm/sim/random.hpp"
#include "commands.hpp"
#include "oracles.hpp"

using namespace cbm;
using namespace cbm::cli;

namespace {

int run_binary(const std::string& args) {
    const std::string cmd = std::string(CBM_BINARY) + " " + args + " >/dev/null 2>&1";
    const int status = std::system(cmd.c_str());
    return WIFEXITED(status) ? WEXITSTATUS(status) : -1;
}

}  // namespace

TEST_SUITE("cli") {

TEST_CASE("simulate rejects a malformed scenario with exit 2") {
    testutil::TempDir dir;
    testutil::spit(dir / "bad.json", R"({"schema":"cbm.scenario/1","seed":1,)");
    std::ostringstream out, err;
    SimulateOptions o;
    o.scenario = (dir / "bad.json").string();
    o.out = (dir / "run").string();
    CHECK(cmd_simulate(o, out, err).exit_code == kExitInvalid);
    CHECK(err.str().find("InvalidSpec") != std::string::npos);
    CHECK(run_binary("simulate " + o.scenario + " --out " + *o.out) == kExitInvalid);
    CHECK(run_binary("no-such-command") == kExitInvalid);
    CHECK(run_binary("validate " + testutil::scenario("containment.json")) == kExitOk);
}

TEST_CASE("simulate is deterministic for a fixed seed") {
    testutil::TempDir dir;
    auto run = [&](const std::string& name, std::uint64_t seed) {
        SimulateOptions o;
        o.scenario = testutil::scenario("containment.json");
        o.rules = testutil::scenario("containment_rules.json");
        o.out = (dir / name).string();
        o.seed = seed;
        std::ostringstream out, err;
        REQUIRE(cmd_simulate(o, out, err).exit_code == kExitOk);
        return testutil::slurp(dir / name / "anomalies.jsonl") + testutil::slurp(dir / name / "summary.json");
    };
    const auto a = run("a", 5);
    CHECK(a == run("b", 5));
    CHECK(testutil::slurp(dir / "a" / "ground_truth.json") == testutil::slurp(dir / "b" / "ground_truth.json"));
}

TEST_CASE("compare argument errors") {
    testutil::TempDir dir;
    testutil::spit(dir / "one.json",
                   R"({"schema":"cbm.policies/1","policies":[{"name":"rtf","kind":"corrective"}]})");
    std::ostringstream out, err;
    CompareOptions o;
    o.scenario = testutil::scenario("policy_fleet.json");
    o.policies = (dir / "one.json").string();
    o.costs = testutil::scenario("costs.json");
    CHECK(cmd_compare(o, out, err).exit_code == kExitInvalid);

    o.policies = testutil::scenario("policies.json");
    o.costs = (dir / "missing.json").string();
    CHECK(cmd_compare(o, out, err).exit_code == kExitInvalid);
}

TEST_CASE("fit") {
    testutil::TempDir dir;
    std::ostringstream out, err;
    testutil::spit(dir / "two.txt", "10\n20\n");
    CHECK(cmd_fit((dir / "two.txt").string(), false, out, err).exit_code == kExitInvalid);
    testutil::spit(dir / "flat.txt", "# constant\n100\n100\n100\n100\n");
    CHECK(cmd_fit((dir / "flat.txt").string(), false, out, err).exit_code == kExitInvalid);
    CHECK(cmd_fit((dir / "missing.txt").string(), false, out, err).exit_code != kExitOk);

    sim::Random rng(7);
    std::string text;
    for (int i = 0; i < 5000; ++i) text += std::to_string(rng.weibull(1.5, 300)) + (i % 10 == 0 ? " 0\n" : "\n");
    testutil::spit(dir / "life.txt", text);
    std::ostringstream json;
    REQUIRE(cmd_fit((dir / "life.txt").string(), true, json, err).exit_code == kExitOk);
    const auto doc = nlohmann::json::parse(json.str());
    CHECK(doc["beta"].get<double>() == doctest::Approx(1.5).epsilon(0.05));
    CHECK(doc["eta"].get<double>() == doctest::Approx(300).epsilon(0.03));
}

TEST_CASE("lifetime and instant parsing") {
    const auto [t, c] = parse_lifetimes("# header\n12.5\n\n30 1\n7 0 # trailing\n");
    REQUIRE(t.size() == 3);
    CHECK(t[1] == 30.0);
    CHECK(c[1]);
    CHECK_FALSE(c[2]);
    CHECK(parse_instant("2026-01-05T00:00:00Z") == from_epoch_ms(1'767'571'200'000));
    CHECK(parse_instant("1767571200000") == from_epoch_ms(1'767'571'200'000));
    CHECK_THROWS(parse_instant("yesterday"));
}

}
