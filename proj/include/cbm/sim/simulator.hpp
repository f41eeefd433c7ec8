#pragma once

#include <string>
#include <utility>
#include <vector>

#include "cbm/sim/random.hpp"
#include "cbm/sim/scenario.hpp"
#include "cbm/telemetry.hpp"

namespace cbm::sim {

CBM_DEFINE_ERROR(HorizonExceeded);
CBM_DEFINE_ERROR(UnknownAsset);

struct GroundTruth {
    Timestamp potential_failure;   ///< P
    Timestamp functional_failure;  ///< F = P + P-F interval
};

/// Deterministic sensor-array simulator. Each step emits one frame per
/// channel that has come due; before P a channel reads nominal plus Gaussian
/// noise, from P on its mean drifts, and injected faults override the honest
/// reading. Each channel draws noise from its own stream of the scenario
/// seed, so adding a channel never perturbs the others.
class Simulator {
  public:
    /// Validates the scenario (InvalidSpec).
    explicit Simulator(Scenario scenario);

    const Scenario& scenario() const { return scenario_; }
    Timestamp now() const { return now_; }
    bool done() const { return now_ >= scenario_.end(); }

    /// Emits frames due at the current clock, then advances one tick.
    /// Throws HorizonExceeded once the clock reaches the horizon.
    std::vector<TelemetryFrame> step();

    GroundTruth ground_truth(const std::string& asset) const;

  private:
    struct ChannelRuntime {
        std::size_t asset;
        std::size_t channel;
        Random rng;
        Timestamp next_due;
        std::uint64_t seq = 0;
        std::vector<std::size_t> faults;
        bool spike_fired = false;
    };

    Scenario scenario_;
    Timestamp now_;
    std::vector<ChannelRuntime> channels_;
};

/// Convenience: GroundTruth for an asset spec without running a simulator.
GroundTruth ground_truth(const AssetSpec& asset);

}  // namespace cbm::sim
