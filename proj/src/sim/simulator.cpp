#include "cbm/sim/simulator.hpp"

namespace cbm::sim {

GroundTruth ground_truth(const AssetSpec& asset) {
    return {asset.degradation_onset, asset.degradation_onset + asset.pf_clock()};
}

Simulator::Simulator(Scenario scenario) : scenario_(std::move(scenario)), now_(scenario_.start) {
    validate(scenario_);
    std::uint64_t stream = 0;
    for (std::size_t a = 0; a < scenario_.assets.size(); ++a) {
        const auto& asset = scenario_.assets[a];
        for (std::size_t c = 0; c < asset.channels.size(); ++c) {
            ChannelRuntime rt{a, c, Random::stream(scenario_.seed, stream++), scenario_.start, 0, {}, false};
            for (std::size_t f = 0; f < scenario_.faults.size(); ++f) {
                if (scenario_.faults[f].sensor == asset.channels[c].id) rt.faults.push_back(f);
            }
            channels_.push_back(std::move(rt));
        }
    }
}

std::vector<TelemetryFrame> Simulator::step() {
    if (done()) throw HorizonExceeded("simulation clock reached the horizon");
    std::vector<TelemetryFrame> frames;
    for (auto& rt : channels_) {
        if (rt.next_due > now_) continue;
        while (rt.next_due <= now_) rt.next_due += scenario_.assets[rt.asset].channels[rt.channel].sample_period;

        const auto& asset = scenario_.assets[rt.asset];
        const auto& spec = asset.channels[rt.channel];
        double value = mean_value(spec, asset.degradation_onset, now_);
        // The draw happens even at zero noise so streams stay aligned.
        const double noise = rt.rng.normal();
        value += spec.noise_sigma * noise;

        bool emit = true;
        for (std::size_t fi : rt.faults) {
            const auto& fault = scenario_.faults[fi];
            if (now_ < fault.start) continue;
            switch (fault.kind) {
                case FaultKind::stuck_value: value = fault.magnitude; break;
                case FaultKind::spike:
                    if (!rt.spike_fired) {
                        value += fault.magnitude;
                        rt.spike_fired = true;
                    }
                    break;
                case FaultKind::dropout: emit = false; break;
                case FaultKind::drift: value += fault.magnitude * to_hours(now_ - fault.start); break;
            }
        }
        if (!emit) continue;

        TelemetryFrame frame;
        frame.asset = asset.id;
        frame.sensor = spec.id;
        frame.kind = spec.kind;
        frame.ts = now_;
        frame.value = value;
        frame.unit = spec.unit;
        frame.seq = rt.seq++;
        frames.push_back(std::move(frame));
    }
    now_ += scenario_.tick;
    return frames;
}

GroundTruth Simulator::ground_truth(const std::string& asset) const {
    const auto* spec = scenario_.find_asset(asset);
    if (!spec) throw UnknownAsset("no asset '" + asset + "' in scenario");
    return sim::ground_truth(*spec);
}

}  // namespace cbm::sim
