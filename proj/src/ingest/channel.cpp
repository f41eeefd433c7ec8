#include "cbm/ingest/channel.hpp"

#include <algorithm>
#include <cmath>

namespace cbm::ingest {

const char* to_string(Health h) {
    switch (h) {
        case Health::healthy: return "healthy";
        case Health::suspect: return "suspect";
        case Health::faulty: return "faulty";
    }
    return "healthy";
}

Health health_from_string(const std::string& s) {
    if (s == "healthy") return Health::healthy;
    if (s == "suspect") return Health::suspect;
    if (s == "faulty") return Health::faulty;
    throw Error("unknown health state '" + s + "'");
}

const char* to_string(QuarantineReason r) { return r == QuarantineReason::stale ? "stale" : "out-of-order"; }

const char* to_string(SubstitutionMethod m) {
    return m == SubstitutionMethod::last_good ? "last-good" : "rolling-median";
}

std::vector<double> ChannelState::values() const {
    std::vector<double> v;
    v.reserve(window.size());
    for (const auto& e : window) v.push_back(e.value);
    return v;
}

Admission admit(const TelemetryFrame& frame, ChannelState& state, Timestamp now, Millis staleness) {
    if (state.last_seq && frame.seq <= *state.last_seq) return {QuarantineReason::out_of_order};
    if (now - frame.ts > staleness) return {QuarantineReason::stale};
    state.last_seq = frame.seq;
    return {};
}

void accept_value(ChannelState& state, Timestamp ts, double value, std::size_t window) {
    state.window.push_back({ts, value});
    while (state.window.size() > window) state.window.pop_front();
}

double median(std::vector<double> v) {
    if (v.empty()) throw NoHistory("median of an empty window");
    const auto mid = v.size() / 2;
    std::nth_element(v.begin(), v.begin() + static_cast<std::ptrdiff_t>(mid), v.end());
    const double upper = v[mid];
    if (v.size() % 2 == 1) return upper;
    const double lower = *std::max_element(v.begin(), v.begin() + static_cast<std::ptrdiff_t>(mid));
    return 0.5 * (lower + upper);
}

ScreenResult screen_outlier(std::span<const double> window, double value, const IngestConfig& config) {
    if (window.size() < config.min_history) return {false, 0.0};
    std::vector<double> v(window.begin(), window.end());
    const double med = median(v);
    for (auto& x : v) x = std::abs(x - med);
    const double mad = median(std::move(v));
    const double scale = std::max(1.4826 * mad, 1e-6 + 0.01 * std::abs(med));
    const double score = std::abs(value - med) / scale;
    return {score > config.outlier_k, score};
}

ScreenResult screen_outlier(const ChannelState& state, double value, const IngestConfig& config) {
    const auto v = state.values();
    return screen_outlier(std::span<const double>(v), value, config);
}

SubstitutionRecord substitute(const ChannelState& state, const TelemetryFrame& flagged, Timestamp at) {
    if (state.window.empty()) throw NoHistory("no accepted history for sensor '" + flagged.sensor + "'");
    return {flagged, median(state.values()), SubstitutionMethod::rolling_median, at};
}

HealthTransition update_health(ChannelState& state, const ScreenResult& result, const IngestConfig& config) {
    const Health before = state.health;
    if (result.outlier) {
        ++state.consecutive_outliers;
        state.consecutive_ok = 0;
    } else {
        state.consecutive_outliers = 0;
        ++state.consecutive_ok;
    }
    if (!state.pinned) {
        if (result.outlier) {
            if (state.health == Health::faulty || state.consecutive_outliers >= config.fault_threshold) {
                state.health = Health::faulty;
            } else {
                state.health = Health::suspect;
            }
        } else if (state.health != Health::faulty || state.consecutive_ok >= config.recovery_threshold) {
            state.health = Health::healthy;
        }
    }
    return {before, state.health};
}

void override_health(ChannelState& state, Health forced) {
    state.health = forced;
    state.consecutive_outliers = 0;
    state.consecutive_ok = 0;
    // Forcing healthy hands control back to the automatic rules.
    state.pinned = forced != Health::healthy;
}

}  // namespace cbm::ingest
