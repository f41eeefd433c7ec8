#pragma once

#include <cstdint>
#include <optional>
#include <string>
#include <vector>

#include "cbm/common.hpp"
#include "cbm/reliability/hazard.hpp"
#include "cbm/reliability/pf_interval.hpp"
#include "cbm/reliability/weibull.hpp"
#include "cbm/telemetry.hpp"

namespace cbm::sim {

CBM_DEFINE_ERROR(InvalidSpec);

struct SensorChannelSpec {
    std::string id;
    ChannelKind kind = ChannelKind::point_temperature;
    std::string unit;
    double nominal = 0.0;
    double noise_sigma = 0.0;
    Millis sample_period{kHour};
    /// Mean drift past P, in channel units per hour^exponent.
    double degradation_gain = 0.0;
    /// 1 gives linear drift; > 1 convex.
    double drift_exponent = 1.0;
};

struct AssetSpec {
    std::string id;
    reliability::PatternClass pattern = reliability::PatternClass::B;
    reliability::PFInterval pf{1.0};
    /// Usage units per hour; converts non-time P-F intervals to clock time.
    double usage_rate = 1.0;
    /// The P point of the first life.
    Timestamp degradation_onset{};
    std::vector<SensorChannelSpec> channels;
    /// Time-to-P distribution (hours) used for later lives in policy studies.
    std::optional<reliability::WeibullModel> lifetime;

    Millis pf_clock() const { return pf.to_clock(usage_rate); }
};

enum class FaultKind { stuck_value, spike, dropout, drift };

const char* to_string(FaultKind k);
FaultKind fault_kind_from_string(const std::string& s);

struct FaultInjection {
    std::string sensor;
    FaultKind kind = FaultKind::stuck_value;
    Timestamp start{};
    double magnitude = 0.0;
};

struct Scenario {
    std::uint64_t seed = 0;
    Timestamp start{};
    Millis horizon{0};
    Millis tick{kHour};
    std::vector<AssetSpec> assets;
    std::vector<FaultInjection> faults;

    Timestamp end() const { return start + horizon; }
    const AssetSpec* find_asset(const std::string& id) const;
};

/// Throws InvalidSpec naming the first violated invariant.
void validate(const Scenario& scenario);

/// Closed-form mean of a channel at `t` for an asset whose current life
/// has its P point at `onset`.
double mean_value(const SensorChannelSpec& channel, Timestamp onset, Timestamp t);

/// Value the mean reaches at functional failure (onset + P-F).
double failure_level(const AssetSpec& asset, const SensorChannelSpec& channel);

inline constexpr const char* kScenarioSchema = "cbm.scenario/1";

/// Parses the declarative scenario document (JSON, schema
/// "cbm.scenario/1"). Durations are hours; `fleets` blocks expand into
/// individually named assets with seeded onsets. Throws InvalidSpec.
Scenario parse_scenario(const std::string& text);
Scenario load_scenario(const std::string& path);

/// Normalized document: fleets expanded, defaults filled, keys ordered.
std::string normalized_scenario(const Scenario& scenario);

}  // namespace cbm::sim
