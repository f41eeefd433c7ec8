#include "cbm/reliability/pf_interval.hpp"

#include <cmath>

namespace cbm::reliability {

const char* to_string(UsageUnit u) {
    switch (u) {
        case UsageUnit::time: return "time";
        case UsageUnit::cycles: return "cycles";
        case UsageUnit::output_units: return "output-units";
    }
    return "time";
}

UsageUnit usage_unit_from_string(const std::string& s) {
    if (s == "time") return UsageUnit::time;
    if (s == "cycles") return UsageUnit::cycles;
    if (s == "output-units") return UsageUnit::output_units;
    throw InvalidInterval("unknown unit kind '" + s + "'");
}

Millis UsageSpan::to_clock(double usage_rate) const {
    if (unit == UsageUnit::time) return to_millis(Hours{length});
    if (!(usage_rate > 0.0) || !std::isfinite(usage_rate)) {
        throw InvalidInterval("usage rate must be positive to convert non-time units");
    }
    return to_millis(Hours{length / usage_rate});
}

PFInterval::PFInterval(double length, UsageUnit unit) : span_{length, unit} {
    if (!std::isfinite(length) || !(length > 0.0)) {
        throw InvalidInterval("P-F interval length must be positive, got " + std::to_string(length));
    }
}

}  // namespace cbm::reliability
