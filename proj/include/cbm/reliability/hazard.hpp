#pragma once

#include <string>
#include <vector>

#include "cbm/common.hpp"
#include "cbm/reliability/weibull.hpp"

namespace cbm::reliability {

CBM_DEFINE_ERROR(InvalidCurve);
CBM_DEFINE_ERROR(UnclassifiableShape);

/// The six conditional-probability curve shapes used to group assets.
///
/// Only E (bathtub) has a fixed meaning in the literature this engine follows;
/// the rest are a project convention:
///   A  constant, then a terminal wear-out rise
///   B  steadily increasing
///   C  gradually increasing, no distinct wear-out age
///   D  constant (random failures)
///   E  bathtub: infant mortality, flat useful life, wear-out
///   F  infant mortality declining to a constant
enum class PatternClass { A, B, C, D, E, F };

struct FailurePatternClass {
    PatternClass id;
    std::string description;
};

FailurePatternClass describe(PatternClass id);
const char* to_string(PatternClass id);
PatternClass pattern_from_string(const std::string& s);

/// Hazard sampled over normalized age.
class HazardCurve {
  public:
    struct Point {
        double age;     ///< normalized, in [0, 1]
        double hazard;  ///< >= 0
    };

    /// Throws InvalidCurve if ages are not strictly increasing within [0, 1]
    /// or any hazard is negative or non-finite.
    explicit HazardCurve(std::vector<Point> grid);

    const std::vector<Point>& grid() const { return grid_; }
    std::size_t size() const { return grid_.size(); }
    /// Linear interpolation, clamped to the grid ends.
    double at(double age) const;
    double max_hazard() const;

  private:
    std::vector<Point> grid_;
};

/// Samples h(t) of `model` on `points` evenly spaced normalized ages over
/// [0, t_max], where t_max is the 0.99 quantile. Age 0 is evaluated slightly
/// above zero so decreasing-hazard models stay finite.
HazardCurve hazard_curve(const WeibullModel& model, std::size_t points = 64);

enum class SlopeSign { decreasing, flat, increasing };

struct ShapeFeatures {
    SlopeSign early;      ///< over the first quartile of age
    SlopeSign mid;        ///< over the middle half
    SlopeSign late;       ///< over the last quartile
    bool terminal_jump;   ///< most of the late rise happens in the final tenth
};

/// A segment is flat when its change is below this fraction of the curve's
/// peak hazard. Normalizing by the peak keeps features scale-invariant.
inline constexpr double kFlatTolerance = 0.10;

ShapeFeatures shape_features(const HazardCurve& curve);

/// Requires at least 8 grid points (InvalidCurve otherwise).
FailurePatternClass classify_hazard_shape(const HazardCurve& curve);

}  // namespace cbm::reliability
