#pragma once

#include <cstdint>
#include <string>

#include "cbm/common.hpp"

namespace cbm {

/// Sensor channel taxonomy. Kinds mirror common condition-monitoring
/// measurement methods; every kind carries a scalar value only.
enum class ChannelKind {
    point_temperature,
    area_pyrometer,
    temperature_paint,
    thermography,
    iso_velocity,
    spm,
    acoustic_emission,
    vibration_meter,
    current_loop_4_20ma,
    fluid_viscosity,
    fluid_contamination,
    corrosion_rate,
    electrical_resistance,
    visual,
};

/// Wire names, e.g. "point-temperature", "current-loop-4-20mA".
const char* to_string(ChannelKind kind);
/// Throws cbm::Error for unknown names.
ChannelKind channel_kind_from_string(const std::string& name);
bool try_channel_kind_from_string(const std::string& name, ChannelKind& out);

inline constexpr int kWireSchemaVersion = 1;

/// One timestamped reading, as carried on the wire and kept in the store.
struct TelemetryFrame {
    int schema_version = kWireSchemaVersion;
    std::string asset;
    std::string sensor;
    ChannelKind kind = ChannelKind::point_temperature;
    Timestamp ts{};
    double value = 0.0;
    std::string unit;
    std::uint64_t seq = 0;

    bool operator==(const TelemetryFrame&) const = default;
};

}  // namespace cbm
