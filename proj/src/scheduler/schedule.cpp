#include "cbm/scheduler/schedule.hpp"

#include <cmath>

#include <fmt/format.h>

#include "cbm/scheduler/response_board.hpp"

namespace cbm::scheduler {

reliability::UsageSpan inspection_interval(const reliability::PFInterval& pf, double fraction) {
    if (!(fraction > 0.0 && fraction <= 1.0)) {
        throw InvalidFraction(fmt::format("inspection fraction must lie in (0, 1], got {}", fraction));
    }
    return {pf.length() * fraction, pf.unit()};
}

InspectionSchedule InspectionSchedule::create(std::string asset, const reliability::PFInterval& pf,
                                              double fraction, Timestamp created_at, double usage_rate) {
    InspectionSchedule s{std::move(asset), pf, fraction, inspection_interval(pf, fraction), Millis{0}, created_at};
    s.period = s.interval.to_clock(usage_rate);
    if (s.period <= Millis{0}) throw InvalidFraction("inspection period rounds to zero milliseconds");
    s.next_due = created_at + s.period;
    return s;
}

InspectionSchedule next_inspection(const InspectionSchedule& schedule, Timestamp completed_at) {
    if (completed_at < schedule.next_due) {
        throw ClockRegression(fmt::format("inspection of '{}' completed at {} before its due time {}", schedule.asset,
                                          epoch_ms(completed_at), epoch_ms(schedule.next_due)));
    }
    InspectionSchedule next = schedule;
    next.next_due = completed_at + schedule.period;
    return next;
}

const char* to_string(Stage s) {
    switch (s) {
        case Stage::analyse_root_cause: return "analyse-root-cause";
        case Stage::plan_corrective_action: return "plan-corrective-action";
        case Stage::organize_resources: return "organize-resources";
        case Stage::implement: return "implement";
        case Stage::completed: return "completed";
    }
    return "completed";
}

ResponsePipeline open_response(const detection::AnomalyEvent& anomaly, Timestamp now, Millis pf_interval) {
    ResponsePipeline p;
    p.response_id = "response:" + anomaly.anomaly_id;
    p.anomaly = anomaly;
    p.stage = Stage::analyse_root_cause;
    p.stage_entered_at[0] = now;
    p.deadline = anomaly.predicted_failure_at.value_or(now + pf_interval);
    p.overdue = now > p.deadline;
    return p;
}

ResponsePipeline advance_response(ResponsePipeline pipeline, Timestamp now) {
    if (pipeline.stage == Stage::completed) {
        throw AlreadyCompleted("response '" + pipeline.response_id + "' is already completed");
    }
    const auto next = static_cast<std::size_t>(pipeline.stage) + 1;
    pipeline.stage = static_cast<Stage>(next);
    pipeline.stage_entered_at[next] = now;
    if (now > pipeline.deadline) pipeline.overdue = true;
    return pipeline;
}

const ResponsePipeline& ResponseBoard::open(const detection::AnomalyEvent& anomaly, Timestamp now,
                                            Millis pf_interval) {
    if (pipelines_.contains(anomaly.anomaly_id)) {
        throw DuplicateResponse("anomaly '" + anomaly.anomaly_id + "' already has a response pipeline");
    }
    return pipelines_.emplace(anomaly.anomaly_id, open_response(anomaly, now, pf_interval)).first->second;
}

const ResponsePipeline& ResponseBoard::advance(const std::string& anomaly_id, Timestamp now) {
    auto it = pipelines_.find(anomaly_id);
    if (it == pipelines_.end()) throw UnknownResponse("no response pipeline for '" + anomaly_id + "'");
    it->second = advance_response(std::move(it->second), now);
    return it->second;
}

const ResponsePipeline* ResponseBoard::find(const std::string& anomaly_id) const {
    auto it = pipelines_.find(anomaly_id);
    return it == pipelines_.end() ? nullptr : &it->second;
}

std::vector<const ResponsePipeline*> ResponseBoard::open_pipelines() const {
    std::vector<const ResponsePipeline*> out;
    for (const auto& [id, p] : pipelines_) {
        if (p.open()) out.push_back(&p);
    }
    return out;
}

}  // namespace cbm::scheduler
