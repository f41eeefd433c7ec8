#include "cbm/detection/trend.hpp"

#include <cmath>

#include <Eigen/Dense>

namespace cbm::detection {

TrendModel trend_analysis(std::span<const TrendSample> points, const LimitRule& rule) {
    const auto n = static_cast<Eigen::Index>(points.size());
    if (points.size() < kMinTrendPoints) {
        throw InsufficientPoints("trend needs at least 3 monitoring points, got " + std::to_string(points.size()));
    }
    Eigen::VectorXd t(n), y(n);
    for (Eigen::Index i = 0; i < n; ++i) {
        t(i) = points[static_cast<std::size_t>(i)].t;
        y(i) = points[static_cast<std::size_t>(i)].value;
    }
    if (t.maxCoeff() == t.minCoeff()) throw InsufficientPoints("trend needs at least 2 distinct times");

    // Centred sums: well conditioned for epoch-scale times, and a constant
    // series gives a slope of exactly zero.
    const double t_mean = t.mean();
    const double y_mean = y.mean();
    const Eigen::VectorXd tc = t.array() - t_mean;
    const Eigen::VectorXd yc = y.array() - y_mean;
    const double sxx = tc.squaredNorm();

    TrendModel m;
    m.slope = tc.dot(yc) / sxx;
    m.intercept = y_mean - m.slope * t_mean;
    m.n_points = points.size();
    const double sse = (yc - m.slope * tc).squaredNorm();
    m.residual_rms = std::sqrt(sse / static_cast<double>(n));
    m.slope_stderr = std::sqrt(sse / static_cast<double>(n - 2) / sxx);

    if (m.slope > 0.0 && rule.upper) {
        m.predicted_crossing = t_mean + (*rule.upper - y_mean) / m.slope;
    } else if (m.slope < 0.0 && rule.lower) {
        m.predicted_crossing = t_mean + (*rule.lower - y_mean) / m.slope;
    }
    if (m.predicted_crossing && !std::isfinite(*m.predicted_crossing)) m.predicted_crossing.reset();
    return m;
}

}  // namespace cbm::detection
