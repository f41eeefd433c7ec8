#pragma once

#include <array>
#include <optional>
#include <string>

#include "cbm/common.hpp"
#include "cbm/detection/anomaly.hpp"
#include "cbm/reliability/pf_interval.hpp"

namespace cbm::scheduler {

CBM_DEFINE_ERROR(InvalidFraction);
CBM_DEFINE_ERROR(ClockRegression);
CBM_DEFINE_ERROR(DuplicateResponse);
CBM_DEFINE_ERROR(AlreadyCompleted);
CBM_DEFINE_ERROR(UnknownResponse);

/// Conventional cadence: inspect every half P-F interval, which leaves at
/// least half the interval for the response after detection.
inline constexpr double kDefaultInspectionFraction = 0.5;

/// pf x fraction, in the interval's own unit. Throws InvalidFraction unless
/// 0 < fraction <= 1.
reliability::UsageSpan inspection_interval(const reliability::PFInterval& pf,
                                           double fraction = kDefaultInspectionFraction);

struct InspectionSchedule {
    std::string asset;
    reliability::PFInterval pf;
    double fraction = kDefaultInspectionFraction;
    reliability::UsageSpan interval;
    /// Clock time of `interval` at the asset's usage rate.
    Millis period{0};
    Timestamp next_due{};

    static InspectionSchedule create(std::string asset, const reliability::PFInterval& pf, double fraction,
                                     Timestamp created_at, double usage_rate = 1.0);
};

/// Anchors the next inspection to the completion time, so late inspections
/// shift the cadence instead of piling up. Throws ClockRegression when
/// completed_at precedes the due time.
InspectionSchedule next_inspection(const InspectionSchedule& schedule, Timestamp completed_at);

enum class Stage { analyse_root_cause, plan_corrective_action, organize_resources, implement, completed };
inline constexpr std::size_t kStageCount = 5;
const char* to_string(Stage s);

/// Four-step corrective response to one anomaly, all due within the P-F
/// window.
struct ResponsePipeline {
    std::string response_id;
    detection::AnomalyEvent anomaly;
    Stage stage = Stage::analyse_root_cause;
    std::array<std::optional<Timestamp>, kStageCount> stage_entered_at{};
    Timestamp deadline{};
    bool overdue = false;

    bool open() const { return stage != Stage::completed; }
};

/// Deadline is the predicted failure time when known, else now + P-F.
ResponsePipeline open_response(const detection::AnomalyEvent& anomaly, Timestamp now, Millis pf_interval);

/// Moves to the next stage; passing the deadline is allowed but marks the
/// pipeline overdue. Throws AlreadyCompleted on a completed pipeline.
ResponsePipeline advance_response(ResponsePipeline pipeline, Timestamp now);

}  // namespace cbm::scheduler
