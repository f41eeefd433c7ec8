#include "cbm/ingest/lane.hpp"

namespace cbm::ingest {

LaneOutcome process_frame(ChannelState& state, const TelemetryFrame& frame, Timestamp now,
                          const IngestConfig& config) {
    LaneOutcome out;
    out.admission = admit(frame, state, now, config.staleness);
    if (!out.admission.accepted()) {
        out.health = {state.health, state.health};
        return out;
    }
    out.screen = screen_outlier(state, frame.value, config);
    if (out.screen.outlier) {
        try {
            out.substitution = substitute(state, frame, now);
            out.detection_value = out.substitution->substituted_value;
        } catch (const NoHistory&) {
            out.dropped = true;
        }
    } else {
        accept_value(state, frame.ts, frame.value, config.window);
        out.detection_value = frame.value;
    }
    out.health = update_health(state, out.screen, config);
    if (out.dropped && !state.pinned && state.health == Health::healthy) state.health = Health::suspect;
    return out;
}

}  // namespace cbm::ingest
