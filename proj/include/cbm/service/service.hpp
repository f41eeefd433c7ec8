#pragma once

#include <condition_variable>
#include <functional>
#include <map>
#include <memory>
#include <mutex>
#include <optional>
#include <shared_mutex>
#include <string>
#include <vector>

#include <nlohmann/json.hpp>

#include "cbm/engine/engine.hpp"
#include "cbm/scheduler/response_board.hpp"

namespace cbm::service {

CBM_DEFINE_ERROR(ValidationFailed);
CBM_DEFINE_ERROR(Unauthorized);
CBM_DEFINE_ERROR(NotFound);
CBM_DEFINE_ERROR(AlreadyAcknowledged);
CBM_DEFINE_ERROR(CursorExpired);
CBM_DEFINE_ERROR(RangeUnavailable);

using Json = nlohmann::ordered_json;
using Clock = std::function<Timestamp()>;

inline constexpr Millis kEscalationInterval{15 * 60 * 1000};

/// Who is asking. The single static token is the whole access scheme; a
/// richer identity provider would plug in behind `authorize`.
struct Credentials {
    std::string token;
    std::string author;
};

enum class OverrideTarget { sensor_health, detection_enabled, limit_rule, schedule };
const char* to_string(OverrideTarget t);
OverrideTarget override_target_from_string(const std::string& s);

/// new_state per target:
///   sensor-health      {"sensor": id, "health": "healthy"|"suspect"|"faulty"}
///   detection-enabled  {"enabled": bool}
///   limit-rule         {"kind": .., "lower": x|null, "upper": x|null, "severity": ..}
///   schedule           {"inspect_at": epoch ms}
struct OverrideCommand {
    std::string asset;
    OverrideTarget target = OverrideTarget::sensor_health;
    Json new_state;
    std::string author;
    std::string reason;
    Timestamp at{};
};

struct RuleVersion {
    std::string version_id;
    detection::LimitRule rule;
    std::string author;
    Timestamp at{};
};

struct AnomalyRecord {
    detection::AnomalyEvent event;
    bool acknowledged = false;
    std::string acknowledged_by;
    std::optional<Timestamp> acknowledged_at;
    Timestamp last_notified{};
    int notifications = 0;
};

/// One entry of the service journal. `seq` doubles as the stream cursor.
struct Event {
    std::uint64_t seq = 0;
    Timestamp at{};
    std::string type;
    Json payload;
};

enum class DigestPeriod { weekly, monthly };
const char* to_string(DigestPeriod p);
DigestPeriod digest_period_from_string(const std::string& s);

/// Weekly: the 7 days ending at `end`. Monthly: the UTC calendar month
/// containing `end`.
store::TimeRange digest_range(DigestPeriod period, Timestamp end);

class NotificationSink {
  public:
    virtual ~NotificationSink() = default;
    virtual void notify(const Event& event) = 0;
};

struct ServiceConfig {
    std::string token;
    std::filesystem::path data_dir;
    engine::EngineConfig engine;
    Millis escalation_interval = kEscalationInterval;
    store::Durability durability = store::Durability::fsync;
};

/// The monitoring station. Every state change (rule, override, ack, response
/// step) is journaled before it takes effect, and the journal alone rebuilds
/// configuration on restart. Commands are serialized; queries share a read
/// lock.
class MonitoringService {
  public:
    MonitoringService(const sim::Scenario& fleet, detection::RuleSet rules, ServiceConfig config, Clock clock);
    ~MonitoringService();

    void set_sink(std::shared_ptr<NotificationSink> sink);

    // Telemetry and time.
    ingest::LaneOutcome ingest(const TelemetryFrame& frame);
    /// Runs due inspections and escalations.
    void tick();

    // Commands.
    std::string update_limit_rule(const std::string& asset, const detection::LimitRule& rule, const Credentials& who);
    AnomalyRecord acknowledge_anomaly(const std::string& anomaly_id, const Credentials& who);
    Json apply_override(const OverrideCommand& cmd, const Credentials& who);
    scheduler::ResponsePipeline advance_response(const std::string& anomaly_id, const Credentials& who);

    // Queries.
    void authorize(const Credentials& who) const;
    Json assets() const;
    Json asset_health(const std::string& asset) const;
    std::vector<AnomalyRecord> anomalies(std::optional<Timestamp> since = std::nullopt) const;
    std::vector<RuleVersion> rule_versions(const std::string& asset) const;
    Json digest(DigestPeriod period, Timestamp end) const;
    /// Events after `cursor` (all retained events when empty). Throws
    /// CursorExpired when events after the cursor were already expired.
    std::vector<Event> events_since(std::optional<std::uint64_t> cursor) const;
    /// Blocks until an event after `cursor` exists or the timeout passes.
    std::vector<Event> wait_events(std::optional<std::uint64_t> cursor, Millis timeout) const;
    std::optional<std::uint64_t> head() const;
    /// Drops events before `t` from the live feed.
    void expire_events_before(Timestamp t);
    /// Rules, overrides, acks and response steps as reconstructed state.
    Json configuration() const;

    Timestamp now() const { return clock_(); }
    const sim::Scenario& fleet() const { return engine_.fleet(); }
    void shutdown();

  private:
    class Observer;

    Event& record(const std::string& type, Timestamp at, Json payload);
    void apply(const Event& event, bool replaying);
    void notify(const Event& event);
    void check_asset(const std::string& asset) const;
    std::string asset_status(const std::string& asset) const;
    Json anomaly_json(const AnomalyRecord& r) const;
    void rebuild();

    ServiceConfig config_;
    Clock clock_;
    std::unique_ptr<store::Store> store_;
    std::unique_ptr<store::Journal> anomaly_journal_;
    std::unique_ptr<store::Journal> journal_;
    engine::Engine engine_;
    std::unique_ptr<Observer> observer_;
    std::shared_ptr<NotificationSink> sink_;

    mutable std::shared_mutex mutex_;
    mutable std::mutex events_mutex_;
    mutable std::condition_variable events_cv_;
    bool stopping_ = false;

    std::vector<Event> events_;          ///< retained feed
    std::uint64_t first_retained_ = 0;   ///< seq of events_.front()
    std::optional<Timestamp> expired_before_;
    std::map<std::string, std::vector<RuleVersion>> versions_;
    std::map<std::string, AnomalyRecord> anomalies_;
    std::vector<std::string> anomaly_order_;
    scheduler::ResponseBoard responses_;
    std::vector<Json> overrides_;
};

}  // namespace cbm::service
