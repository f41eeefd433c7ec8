#pragma once

#include <string>

#include "cbm/common.hpp"

namespace cbm::reliability {

CBM_DEFINE_ERROR(InvalidInterval);

/// Unit in which a P-F window is measured. Non-time units (stop-start
/// cycles, units of output) convert to clock time through an asset's usage
/// rate.
enum class UsageUnit { time, cycles, output_units };

const char* to_string(UsageUnit u);
UsageUnit usage_unit_from_string(const std::string& s);

/// A span measured in some usage unit. Time spans are in hours.
struct UsageSpan {
    double length = 0.0;
    UsageUnit unit = UsageUnit::time;

    bool operator==(const UsageSpan&) const = default;

    /// Clock time covered by this span at `usage_rate` units per hour
    /// (ignored for time spans).
    Millis to_clock(double usage_rate = 1.0) const;
};

/// Window between potential failure (P, first detectable deterioration) and
/// functional failure (F). Always strictly positive.
class PFInterval {
  public:
    /// Throws InvalidInterval unless length is finite and > 0.
    PFInterval(double length, UsageUnit unit = UsageUnit::time);

    double length() const { return span_.length; }
    UsageUnit unit() const { return span_.unit; }
    const UsageSpan& span() const { return span_; }
    Millis to_clock(double usage_rate = 1.0) const { return span_.to_clock(usage_rate); }

    bool operator==(const PFInterval&) const = default;

  private:
    UsageSpan span_;
};

}  // namespace cbm::reliability
