#pragma once

#include <map>
#include <string>
#include <vector>

#include "cbm/scheduler/schedule.hpp"

namespace cbm::scheduler {

/// Open and historical response pipelines keyed by anomaly id. At most one
/// pipeline per anomaly.
class ResponseBoard {
  public:
    /// Throws DuplicateResponse if the anomaly already owns a pipeline.
    const ResponsePipeline& open(const detection::AnomalyEvent& anomaly, Timestamp now, Millis pf_interval);
    const ResponsePipeline& advance(const std::string& anomaly_id, Timestamp now);

    const ResponsePipeline* find(const std::string& anomaly_id) const;
    std::vector<const ResponsePipeline*> open_pipelines() const;
    std::size_t size() const { return pipelines_.size(); }

  private:
    std::map<std::string, ResponsePipeline> pipelines_;
};

}  // namespace cbm::scheduler
