#pragma once

#include <optional>

#include "cbm/ingest/channel.hpp"

namespace cbm::ingest {

/// Everything that happened to one frame in its sensor lane.
struct LaneOutcome {
    Admission admission;
    ScreenResult screen;
    std::optional<SubstitutionRecord> substitution;
    HealthTransition health{Health::healthy, Health::healthy};
    /// Outlier with no history to estimate from: frame dropped.
    bool dropped = false;
    /// What detection is allowed to see. Empty when quarantined or dropped;
    /// never an outlier value.
    std::optional<double> detection_value;
};

/// Runs admit, screen, substitute-or-accept and the health update for one
/// frame. All frames of a sensor must go through the same lane in arrival
/// order.
LaneOutcome process_frame(ChannelState& state, const TelemetryFrame& frame, Timestamp now,
                          const IngestConfig& config = {});

}  // namespace cbm::ingest
