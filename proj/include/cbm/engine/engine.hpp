#pragma once

#include <deque>
#include <map>
#include <optional>
#include <string>
#include <vector>

#include "cbm/detection/rules.hpp"
#include "cbm/ingest/lane.hpp"
#include "cbm/scheduler/schedule.hpp"
#include "cbm/sim/scenario.hpp"
#include "cbm/store/journal.hpp"
#include "cbm/store/store.hpp"

namespace cbm::engine {

CBM_DEFINE_ERROR(UnknownSensor);

struct EngineConfig {
    ingest::IngestConfig ingest;
    double inspection_fraction = scheduler::kDefaultInspectionFraction;
    detection::TrendConfig trend;
    /// Detection values kept per sensor for trend and limit checks.
    std::size_t recent_points = 64;
};

/// Callbacks for everything the engine does. All are invoked on the thread
/// that drives the engine.
class EngineObserver {
  public:
    virtual ~EngineObserver() = default;
    virtual void on_frame(const TelemetryFrame&, const ingest::LaneOutcome&) {}
    virtual void on_sensor_health(const std::string& /*asset*/, const std::string& /*sensor*/,
                                  const ingest::HealthTransition&, Timestamp) {}
    virtual void on_inspection(const std::string& /*asset*/, Timestamp, const std::vector<detection::AnomalyEvent>&) {}
};

struct IngestCounts {
    std::uint64_t received = 0;
    std::uint64_t accepted = 0;
    std::uint64_t quarantined = 0;
    std::uint64_t substituted = 0;
    std::uint64_t dropped = 0;
};

struct SensorView {
    std::string asset;
    std::string sensor;
    ChannelKind kind;
    ingest::Health health;
    bool excluded;
    std::optional<detection::ReadingPoint> latest;
};

/// Ingest lanes, store, inspection schedules and detection wired together
/// for one fleet. Inspections are anchored at the scenario start; the
/// inspection due at T sees exactly the frames with ts <= T. Frames must be
/// fed in non-decreasing ts order.
class Engine {
  public:
    Engine(const sim::Scenario& fleet, detection::RuleSet rules, EngineConfig config = {},
           store::Store* store = nullptr, store::Journal* anomaly_journal = nullptr);

    void set_observer(EngineObserver* observer) { observer_ = observer; }

    /// `now` is the ingest clock; simulated and replayed runs use frame.ts.
    ingest::LaneOutcome feed(const TelemetryFrame& frame, std::optional<Timestamp> now = std::nullopt);
    /// Runs every inspection due at or before `t`.
    void advance_to(Timestamp t);

    /// Simulates the fleet's scenario end to end.
    void run_simulation();
    /// Feeds stored frames in stored order, then inspects up to `until`.
    void replay(const store::Store& store, store::TimeRange range, Timestamp until);

    // Operator controls. Limit changes wait for the asset's next inspection.
    void stage_limit_rule(const detection::LimitRule& rule);
    void override_sensor_health(const std::string& sensor, ingest::Health forced);
    void set_detection_enabled(const std::string& asset, bool enabled, Timestamp now);
    bool detection_enabled(const std::string& asset) const;
    /// Moves the asset's next inspection; the cadence continues from there.
    void reschedule(const std::string& asset, Timestamp at);

    const std::vector<detection::AnomalyEvent>& anomalies() const { return anomalies_; }
    const IngestCounts& counts() const { return counts_; }
    std::optional<Timestamp> next_inspection(const std::string& asset) const;
    std::vector<SensorView> sensors(const std::string& asset) const;
    std::vector<detection::LimitRule> active_limits(const std::string& asset) const;
    std::vector<detection::LimitRule> pending_limits(const std::string& asset) const;
    /// Detection values held for the sensor, oldest first.
    std::vector<detection::ReadingPoint> recent(const std::string& sensor) const;
    const sim::Scenario& fleet() const { return fleet_; }

  private:
    struct SensorRuntime {
        std::size_t asset;
        ChannelKind kind;
        ingest::ChannelState state;
        std::deque<detection::ReadingPoint> recent;
    };
    struct AssetRuntime {
        scheduler::InspectionSchedule schedule;
        bool enabled = true;
        std::vector<detection::HistoryEntry> history;
        std::vector<detection::LimitRule> limits;
        std::vector<detection::LimitRule> pending;
    };

    void inspect(std::size_t asset, Timestamp at);

    sim::Scenario fleet_;
    detection::RuleSet rules_;
    EngineConfig config_;
    store::Store* store_;
    store::Journal* journal_;
    EngineObserver* observer_ = nullptr;
    std::map<std::string, SensorRuntime> sensors_;
    std::vector<AssetRuntime> assets_;
    std::vector<detection::AnomalyEvent> anomalies_;
    IngestCounts counts_;
};

/// Per-asset detection outcome of a simulated run against ground truth.
struct AssetSummary {
    std::string asset;
    Timestamp potential_failure;
    Timestamp functional_failure;
    std::optional<Timestamp> first_detection;  ///< earliest anomaly at or before the horizon
    bool detected_before_failure = false;
    std::optional<Hours> lead_time;            ///< F - first detection, when detected before F
    std::size_t anomalies = 0;
};

std::vector<AssetSummary> summarize(const sim::Scenario& scenario, const std::vector<detection::AnomalyEvent>& anomalies);
std::string summary_json(const std::vector<AssetSummary>& summary);
std::string summary_table(const std::vector<AssetSummary>& summary);
std::string ground_truth_json(const sim::Scenario& scenario);

}  // namespace cbm::engine
