#pragma once

#include <optional>
#include <span>

#include "cbm/detection/anomaly.hpp"

namespace cbm::detection {

/// Minimum number of monitoring points for a trend.
inline constexpr std::size_t kMinTrendPoints = 3;

struct TrendSample {
    double t;  ///< hours on any axis
    double value;
};

struct TrendModel {
    double slope = 0.0;      ///< value units per hour
    double intercept = 0.0;  ///< value at t = 0
    std::size_t n_points = 0;
    double residual_rms = 0.0;
    double slope_stderr = 0.0;
    /// t at which the line reaches the bound it is heading for.
    std::optional<double> predicted_crossing;
};

/// Ordinary least squares over time-ordered samples. The crossing is
/// reported only when the slope moves toward a present bound (upper for a
/// rising line, lower for a falling one). Throws InsufficientPoints for
/// fewer than 3 samples or fewer than 2 distinct times.
TrendModel trend_analysis(std::span<const TrendSample> points, const LimitRule& rule);

}  // namespace cbm::detection
