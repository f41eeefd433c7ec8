#include <array>
#include <string_view>

#include "cbm/common.hpp"
#include "cbm/telemetry.hpp"

namespace cbm {

const char* to_string(Severity s) {
    switch (s) {
        case Severity::advisory: return "advisory";
        case Severity::warning: return "warning";
        case Severity::critical: return "critical";
    }
    return "advisory";
}

Severity severity_from_string(const std::string& s) {
    if (s == "advisory") return Severity::advisory;
    if (s == "warning") return Severity::warning;
    if (s == "critical") return Severity::critical;
    throw Error("unknown severity '" + s + "'");
}

namespace {

constexpr std::array<std::string_view, 14> kChannelNames = {
    "point-temperature",  "area-pyrometer",  "temperature-paint",   "thermography",
    "iso-velocity",       "spm",             "acoustic-emission",   "vibration-meter",
    "current-loop-4-20mA", "fluid-viscosity", "fluid-contamination", "corrosion-rate",
    "electrical-resistance", "visual",
};

}  // namespace

const char* to_string(ChannelKind kind) { return kChannelNames[static_cast<std::size_t>(kind)].data(); }

bool try_channel_kind_from_string(const std::string& name, ChannelKind& out) {
    for (std::size_t i = 0; i < kChannelNames.size(); ++i) {
        if (kChannelNames[i] == name) {
            out = static_cast<ChannelKind>(i);
            return true;
        }
    }
    return false;
}

ChannelKind channel_kind_from_string(const std::string& name) {
    ChannelKind kind;
    if (!try_channel_kind_from_string(name, kind)) throw Error("unknown channel kind '" + name + "'");
    return kind;
}

}  // namespace cbm
