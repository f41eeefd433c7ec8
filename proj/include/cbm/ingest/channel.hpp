#pragma once

#include <cstdint>
#include <deque>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "cbm/telemetry.hpp"

namespace cbm::ingest {

CBM_DEFINE_ERROR(NoHistory);

struct IngestConfig {
    std::size_t window = 32;
    std::size_t min_history = 5;
    double outlier_k = 3.5;
    Millis staleness{24 * kHour};
    int fault_threshold = 3;
    int recovery_threshold = 10;
};

enum class Health { healthy, suspect, faulty };
const char* to_string(Health h);
Health health_from_string(const std::string& s);

struct WindowEntry {
    Timestamp ts;
    double value;
};

/// Per-sensor ingest state. Confined to the sensor's processing lane.
struct ChannelState {
    std::deque<WindowEntry> window;  ///< last accepted (non-outlier) readings
    std::optional<std::uint64_t> last_seq;
    Health health = Health::healthy;
    int consecutive_outliers = 0;
    int consecutive_ok = 0;
    /// Set by a manual override; pins health until the next override.
    bool pinned = false;

    std::vector<double> values() const;
};

enum class QuarantineReason { out_of_order, stale };
const char* to_string(QuarantineReason r);

struct Admission {
    std::optional<QuarantineReason> quarantined;  ///< empty means accepted
    bool accepted() const { return !quarantined.has_value(); }
};

/// Ordering and staleness gate. Accepting a frame advances last_seq; the
/// window itself only grows through accept_value once the reading has
/// passed screening.
Admission admit(const TelemetryFrame& frame, ChannelState& state, Timestamp now, Millis staleness);

void accept_value(ChannelState& state, Timestamp ts, double value, std::size_t window);

struct ScreenResult {
    bool outlier = false;
    double score = 0.0;
};

double median(std::vector<double> values);

/// Robust score |x - median| / max(1.4826 MAD, 1e-6 + 0.01 |median|).
/// Fewer than `min_history` window values always score ok(0).
ScreenResult screen_outlier(std::span<const double> window, double value, const IngestConfig& config = {});
ScreenResult screen_outlier(const ChannelState& state, double value, const IngestConfig& config = {});

enum class SubstitutionMethod { rolling_median, last_good };
const char* to_string(SubstitutionMethod m);

struct SubstitutionRecord {
    TelemetryFrame original;
    double substituted_value = 0.0;
    SubstitutionMethod method = SubstitutionMethod::rolling_median;
    Timestamp at{};
};

/// Rolling-median estimate for a flagged reading. Throws NoHistory on an
/// empty window.
SubstitutionRecord substitute(const ChannelState& state, const TelemetryFrame& flagged, Timestamp at);

struct HealthTransition {
    Health before;
    Health after;
    bool became_faulty() const { return before != Health::faulty && after == Health::faulty; }
    bool recovered() const { return before == Health::faulty && after != Health::faulty; }
};

/// Hysteresis: `fault_threshold` consecutive outliers latch the sensor
/// faulty; only `recovery_threshold` consecutive ok scores (or an override)
/// release it.
HealthTransition update_health(ChannelState& state, const ScreenResult& result, const IngestConfig& config = {});

/// Manual override of a sensor's health.
void override_health(ChannelState& state, Health forced);

}  // namespace cbm::ingest
