#include "cbm/reliability/hazard.hpp"

#include <algorithm>
#include <cmath>

namespace cbm::reliability {

FailurePatternClass describe(PatternClass id) {
    switch (id) {
        case PatternClass::A: return {id, "constant hazard followed by a terminal wear-out rise"};
        case PatternClass::B: return {id, "steadily increasing hazard"};
        case PatternClass::C: return {id, "gradually increasing hazard without a distinct wear-out age"};
        case PatternClass::D: return {id, "constant hazard (random failures)"};
        case PatternClass::E: return {id, "bathtub: infant mortality, flat useful life, wear-out"};
        case PatternClass::F: return {id, "infant mortality declining to a constant hazard"};
    }
    throw InvalidCurve("unknown pattern class");
}

const char* to_string(PatternClass id) {
    static constexpr const char* names[] = {"A", "B", "C", "D", "E", "F"};
    return names[static_cast<int>(id)];
}

PatternClass pattern_from_string(const std::string& s) {
    if (s.size() == 1 && s[0] >= 'A' && s[0] <= 'F') return static_cast<PatternClass>(s[0] - 'A');
    throw InvalidCurve("unknown pattern class '" + s + "'");
}

HazardCurve::HazardCurve(std::vector<Point> grid) : grid_(std::move(grid)) {
    for (std::size_t i = 0; i < grid_.size(); ++i) {
        const auto& p = grid_[i];
        if (!(p.age >= 0.0 && p.age <= 1.0)) throw InvalidCurve("ages must lie in [0, 1]");
        if (i > 0 && !(p.age > grid_[i - 1].age)) throw InvalidCurve("ages must be strictly increasing");
        if (!std::isfinite(p.hazard) || p.hazard < 0.0) throw InvalidCurve("hazard values must be finite and >= 0");
    }
}

double HazardCurve::at(double age) const {
    if (grid_.empty()) throw InvalidCurve("empty curve");
    if (age <= grid_.front().age) return grid_.front().hazard;
    if (age >= grid_.back().age) return grid_.back().hazard;
    auto hi = std::lower_bound(grid_.begin(), grid_.end(), age,
                               [](const Point& p, double a) { return p.age < a; });
    auto lo = std::prev(hi);
    const double w = (age - lo->age) / (hi->age - lo->age);
    return lo->hazard + w * (hi->hazard - lo->hazard);
}

double HazardCurve::max_hazard() const {
    double m = 0.0;
    for (const auto& p : grid_) m = std::max(m, p.hazard);
    return m;
}

HazardCurve hazard_curve(const WeibullModel& model, std::size_t points) {
    if (points < 2) throw InvalidCurve("need at least 2 points");
    const double t_max = model.quantile(0.99);
    std::vector<HazardCurve::Point> grid;
    grid.reserve(points);
    for (std::size_t i = 0; i < points; ++i) {
        const double age = static_cast<double>(i) / static_cast<double>(points - 1);
        const double t = std::max(age, 1e-3) * t_max;
        grid.push_back({age, weibull_hazard(t, model)});
    }
    return HazardCurve(std::move(grid));
}

namespace {

SlopeSign slope(double change, double peak) {
    if (peak <= 0.0 || std::abs(change) < kFlatTolerance * peak) return SlopeSign::flat;
    return change > 0.0 ? SlopeSign::increasing : SlopeSign::decreasing;
}

}  // namespace

ShapeFeatures shape_features(const HazardCurve& curve) {
    const double peak = curve.max_hazard();
    const double q1 = curve.at(0.25);
    const double q3 = curve.at(0.75);
    const double end = curve.at(1.0);
    const double late_rise = end - q3;
    const double final_rise = end - curve.at(0.9);

    ShapeFeatures f{};
    f.early = slope(q1 - curve.at(0.0), peak);
    f.mid = slope(q3 - q1, peak);
    f.late = slope(late_rise, peak);
    f.terminal_jump = f.late == SlopeSign::increasing && final_rise >= 0.5 * late_rise;
    return f;
}

FailurePatternClass classify_hazard_shape(const HazardCurve& curve) {
    if (curve.size() < 8) throw InvalidCurve("need at least 8 grid points, got " + std::to_string(curve.size()));
    using enum SlopeSign;
    const auto f = shape_features(curve);

    auto unclassifiable = [] () -> FailurePatternClass {
        throw UnclassifiableShape("hazard segments contradict every pattern class");
    };

    switch (f.early) {
        case decreasing:
            if (f.late == increasing) return describe(PatternClass::E);
            if (f.mid == increasing) return unclassifiable();
            return describe(PatternClass::F);
        case flat:
            if (f.mid == decreasing || f.late == decreasing) return unclassifiable();
            if (f.mid == flat) return describe(f.late == flat ? PatternClass::D : PatternClass::A);
            if (f.late == increasing) return describe(f.terminal_jump ? PatternClass::A : PatternClass::B);
            return describe(PatternClass::C);
        case increasing:
            if (f.mid == decreasing || f.late == decreasing) return unclassifiable();
            if (f.mid == increasing && f.late == increasing) return describe(PatternClass::B);
            return describe(PatternClass::C);
    }
    return unclassifiable();
}

}  // namespace cbm::reliability
