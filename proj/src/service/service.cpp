#include "cbm/service/service.hpp"

#include <algorithm>

#include <fmt/format.h>

namespace cbm::service {

namespace fs = std::filesystem;

const char* to_string(OverrideTarget t) {
    switch (t) {
        case OverrideTarget::sensor_health: return "sensor-health";
        case OverrideTarget::detection_enabled: return "detection-enabled";
        case OverrideTarget::limit_rule: return "limit-rule";
        case OverrideTarget::schedule: return "schedule";
    }
    return "sensor-health";
}

OverrideTarget override_target_from_string(const std::string& s) {
    if (s == "sensor-health") return OverrideTarget::sensor_health;
    if (s == "detection-enabled") return OverrideTarget::detection_enabled;
    if (s == "limit-rule") return OverrideTarget::limit_rule;
    if (s == "schedule") return OverrideTarget::schedule;
    throw ValidationFailed("unknown override target '" + s + "'");
}

const char* to_string(DigestPeriod p) { return p == DigestPeriod::weekly ? "weekly" : "monthly"; }

DigestPeriod digest_period_from_string(const std::string& s) {
    if (s == "weekly") return DigestPeriod::weekly;
    if (s == "monthly") return DigestPeriod::monthly;
    throw ValidationFailed("period must be weekly or monthly");
}

store::TimeRange digest_range(DigestPeriod period, Timestamp end) {
    using namespace std::chrono;
    if (period == DigestPeriod::weekly) return {end - 7 * kDay, end};
    const year_month_day ymd{floor<days>(end)};
    const auto first = ymd.year() / ymd.month() / day{1};
    const auto next = first + months{1};
    return {Timestamp{sys_days{first}}, Timestamp{sys_days{next}}};
}

namespace {

Json rule_json(const detection::LimitRule& r) {
    Json j;
    j["asset"] = r.asset;
    j["kind"] = to_string(r.kind);
    j["lower"] = r.lower ? Json(*r.lower) : Json(nullptr);
    j["upper"] = r.upper ? Json(*r.upper) : Json(nullptr);
    j["severity"] = to_string(r.severity_on_breach);
    return j;
}

std::optional<double> optional_bound(const Json& j, const char* key) {
    auto it = j.find(key);
    if (it == j.end() || it->is_null()) return std::nullopt;
    if (!it->is_number()) throw ValidationFailed(std::string(key) + " must be a number or null");
    return it->get<double>();
}

detection::LimitRule rule_from_json(const Json& j, const std::string& asset) {
    detection::LimitRule r;
    r.asset = asset;
    if (!j.contains("kind") || !j.at("kind").is_string()) throw ValidationFailed("kind is required");
    if (!try_channel_kind_from_string(j.at("kind").get<std::string>(), r.kind)) {
        throw ValidationFailed("unknown channel kind '" + j.at("kind").get<std::string>() + "'");
    }
    r.lower = optional_bound(j, "lower");
    r.upper = optional_bound(j, "upper");
    try {
        r.severity_on_breach = severity_from_string(j.value("severity", std::string("warning")));
        r.validate();
    } catch (const ValidationFailed&) {
        throw;
    } catch (const Error& e) {
        throw ValidationFailed(e.what());
    }
    return r;
}

Json anomaly_payload(const detection::AnomalyEvent& e) { return Json::parse(detection::journal_line(e)); }

detection::AnomalyEvent anomaly_from_payload(const Json& j) {
    detection::AnomalyEvent e;
    e.anomaly_id = j.at("id").get<std::string>();
    e.asset = j.at("asset").get<std::string>();
    e.method = detection::method_from_string(j.at("method").get<std::string>());
    e.severity = severity_from_string(j.at("severity").get<std::string>());
    e.detected_at = from_epoch_ms(j.at("detected_at").get<std::int64_t>());
    if (!j.at("predicted_failure_at").is_null()) {
        e.predicted_failure_at = from_epoch_ms(j.at("predicted_failure_at").get<std::int64_t>());
    }
    e.channel = j.at("channel").get<std::string>();
    e.rule = j.at("rule").get<std::string>();
    e.evidence = j.at("evidence").get<std::string>();
    return e;
}

Json event_json(const Event& e) {
    Json j;
    j["seq"] = e.seq;
    j["at"] = epoch_ms(e.at);
    j["type"] = e.type;
    j["data"] = e.payload;
    return j;
}

}  // namespace

class MonitoringService::Observer : public engine::EngineObserver {
  public:
    explicit Observer(MonitoringService& s) : s_(s) {}

    void on_sensor_health(const std::string& asset, const std::string& sensor, const ingest::HealthTransition& t,
                          Timestamp at) override {
        Json p;
        p["asset"] = asset;
        p["sensor"] = sensor;
        p["before"] = ingest::to_string(t.before);
        p["after"] = ingest::to_string(t.after);
        const auto& ev = s_.record("sensor-health", at, std::move(p));
        if (t.became_faulty()) s_.notify(ev);
    }

    void on_inspection(const std::string& asset, Timestamp at,
                       const std::vector<detection::AnomalyEvent>& found) override {
        for (const auto& e : found) {
            Json p;
            p["anomaly"] = anomaly_payload(e);
            const Event ev = s_.record("anomaly", at, std::move(p));
            s_.apply(ev, false);
            s_.notify(ev);
        }
        Json p;
        p["asset"] = asset;
        p["anomalies"] = found.size();
        const auto next = s_.engine_.next_inspection(asset);
        p["next_due"] = next ? Json(epoch_ms(*next)) : Json(nullptr);
        s_.record("inspection", at, std::move(p));
    }

  private:
    MonitoringService& s_;
};

namespace {

std::unique_ptr<store::Store> open_store(const ServiceConfig& c) {
    fs::create_directories(c.data_dir);
    return std::make_unique<store::Store>(store::StoreConfig{c.data_dir / "store", std::nullopt, c.durability});
}

}  // namespace

MonitoringService::MonitoringService(const sim::Scenario& fleet, detection::RuleSet rules, ServiceConfig config,
                                     Clock clock)
    : config_(std::move(config)),
      clock_(std::move(clock)),
      store_(open_store(config_)),
      anomaly_journal_(std::make_unique<store::Journal>(config_.data_dir / "anomalies.jsonl", config_.durability)),
      journal_(std::make_unique<store::Journal>(config_.data_dir / "events.jsonl", config_.durability)),
      engine_(fleet, std::move(rules), config_.engine, store_.get(), anomaly_journal_.get()),
      observer_(std::make_unique<Observer>(*this)) {
    rebuild();
    engine_.set_observer(observer_.get());
}

MonitoringService::~MonitoringService() { shutdown(); }

void MonitoringService::shutdown() {
    {
        std::lock_guard lock(events_mutex_);
        stopping_ = true;
    }
    events_cv_.notify_all();
}

void MonitoringService::set_sink(std::shared_ptr<NotificationSink> sink) {
    std::unique_lock lock(mutex_);
    sink_ = std::move(sink);
}

void MonitoringService::rebuild() {
    for (const auto& line : journal_->lines()) {
        const auto j = Json::parse(line);
        Event e{j.at("seq").get<std::uint64_t>(), from_epoch_ms(j.at("at").get<std::int64_t>()),
                j.at("type").get<std::string>(), j.at("data")};
        apply(e, true);
        std::lock_guard lock(events_mutex_);
        events_.push_back(std::move(e));
    }
    // Expiry recorded in the journal applies to the rebuilt feed as well.
    if (expired_before_) {
        std::lock_guard lock(events_mutex_);
        while (!events_.empty() && events_.front().at < *expired_before_) events_.erase(events_.begin());
        first_retained_ = events_.empty() ? journal_->size() : events_.front().seq;
    }
}

Event& MonitoringService::record(const std::string& type, Timestamp at, Json payload) {
    Event e{journal_->size(), at, type, std::move(payload)};
    journal_->append(event_json(e).dump());
    {
        std::lock_guard lock(events_mutex_);
        if (events_.empty()) first_retained_ = e.seq;
        events_.push_back(std::move(e));
    }
    events_cv_.notify_all();
    return events_.back();
}

void MonitoringService::notify(const Event& event) {
    if (sink_) sink_->notify(event);
}

void MonitoringService::apply(const Event& e, bool replaying) {
    const auto& p = e.payload;
    if (e.type == "rule") {
        const auto asset = p.at("asset").get<std::string>();
        auto rule = rule_from_json(p.at("rule"), asset);
        versions_[asset].push_back({p.at("version").get<std::string>(), rule, p.at("author").get<std::string>(), e.at});
        engine_.stage_limit_rule(rule);
    } else if (e.type == "override") {
        const auto asset = p.at("asset").get<std::string>();
        const auto target = override_target_from_string(p.at("target").get<std::string>());
        const auto& st = p.at("new_state");
        switch (target) {
            case OverrideTarget::sensor_health:
                engine_.override_sensor_health(st.at("sensor").get<std::string>(),
                                               ingest::health_from_string(st.at("health").get<std::string>()));
                break;
            case OverrideTarget::detection_enabled:
                engine_.set_detection_enabled(asset, st.at("enabled").get<bool>(), e.at);
                break;
            case OverrideTarget::limit_rule: {
                auto rule = rule_from_json(st, asset);
                versions_[asset].push_back(
                    {p.at("version").get<std::string>(), rule, p.at("author").get<std::string>(), e.at});
                engine_.stage_limit_rule(rule);
                break;
            }
            case OverrideTarget::schedule:
                engine_.reschedule(asset, from_epoch_ms(st.at("inspect_at").get<std::int64_t>()));
                break;
        }
        overrides_.push_back(p);
    } else if (e.type == "ack") {
        auto& r = anomalies_.at(p.at("anomaly").get<std::string>());
        r.acknowledged = true;
        r.acknowledged_by = p.at("author").get<std::string>();
        r.acknowledged_at = e.at;
    } else if (e.type == "response") {
        responses_.advance(p.at("anomaly").get<std::string>(), e.at);
    } else if (e.type == "anomaly") {
        auto event = anomaly_from_payload(p.at("anomaly"));
        const auto* spec = engine_.fleet().find_asset(event.asset);
        responses_.open(event, e.at, spec ? spec->pf_clock() : Millis{0});
        AnomalyRecord r;
        r.event = event;
        r.last_notified = e.at;
        r.notifications = 1;
        anomaly_order_.push_back(event.anomaly_id);
        anomalies_[event.anomaly_id] = std::move(r);
    } else if (e.type == "escalation") {
        auto& r = anomalies_.at(p.at("anomaly").get<std::string>());
        r.last_notified = e.at;
        ++r.notifications;
    } else if (e.type == "expire") {
        expired_before_ = from_epoch_ms(p.at("before").get<std::int64_t>());
    }
    (void)replaying;
}

void MonitoringService::authorize(const Credentials& who) const {
    if (config_.token.empty()) return;
    if (who.token != config_.token) throw Unauthorized("missing or invalid bearer token");
}

void MonitoringService::check_asset(const std::string& asset) const {
    if (!engine_.fleet().find_asset(asset)) throw NotFound("unknown asset '" + asset + "'");
}

ingest::LaneOutcome MonitoringService::ingest(const TelemetryFrame& frame) {
    std::unique_lock lock(mutex_);
    try {
        return engine_.feed(frame, clock_());
    } catch (const engine::UnknownSensor& e) {
        throw NotFound(e.what());
    }
}

void MonitoringService::tick() {
    std::unique_lock lock(mutex_);
    const Timestamp now = clock_();
    engine_.advance_to(now);
    for (const auto& id : anomaly_order_) {
        const auto& r = anomalies_.at(id);
        if (r.acknowledged || r.event.severity != Severity::critical) continue;
        const auto* pipeline = responses_.find(id);
        if (pipeline && !pipeline->open()) continue;
        if (now - r.last_notified < config_.escalation_interval) continue;
        Json p;
        p["anomaly"] = id;
        p["asset"] = r.event.asset;
        p["notification"] = r.notifications + 1;
        const Event ev = record("escalation", now, std::move(p));
        apply(ev, false);
        notify(ev);
    }
}

std::string MonitoringService::update_limit_rule(const std::string& asset, const detection::LimitRule& rule,
                                                 const Credentials& who) {
    authorize(who);
    if (who.author.empty()) throw ValidationFailed("author is required");
    std::unique_lock lock(mutex_);
    check_asset(asset);
    auto scoped = rule;
    scoped.asset = asset;
    try {
        scoped.validate();
    } catch (const Error& e) {
        throw ValidationFailed(e.what());
    }
    const auto& existing = versions_[asset];
    const auto n = std::count_if(existing.begin(), existing.end(), [&](const auto& v) { return v.rule.kind == rule.kind; });
    const auto version = fmt::format("{}/{}/v{}", asset, to_string(rule.kind), n + 1);
    Json p;
    p["asset"] = asset;
    p["version"] = version;
    p["author"] = who.author;
    p["rule"] = rule_json(scoped);
    const Event ev = record("rule", clock_(), std::move(p));
    apply(ev, false);
    return version;
}

AnomalyRecord MonitoringService::acknowledge_anomaly(const std::string& anomaly_id, const Credentials& who) {
    authorize(who);
    if (who.author.empty()) throw ValidationFailed("author is required");
    std::unique_lock lock(mutex_);
    auto it = anomalies_.find(anomaly_id);
    if (it == anomalies_.end()) throw NotFound("unknown anomaly '" + anomaly_id + "'");
    if (it->second.acknowledged) throw AlreadyAcknowledged("anomaly '" + anomaly_id + "' is already acknowledged");
    Json p;
    p["anomaly"] = anomaly_id;
    p["asset"] = it->second.event.asset;
    p["author"] = who.author;
    const Event ev = record("ack", clock_(), std::move(p));
    apply(ev, false);
    return it->second;
}

Json MonitoringService::apply_override(const OverrideCommand& cmd, const Credentials& who) {
    authorize(who);
    if (cmd.reason.empty()) throw ValidationFailed("reason is required");
    if (cmd.author.empty()) throw ValidationFailed("author is required");
    std::unique_lock lock(mutex_);
    check_asset(cmd.asset);
    const auto& st = cmd.new_state;
    if (!st.is_object()) throw ValidationFailed("new_state must be an object");
    Json p;
    p["asset"] = cmd.asset;
    p["target"] = to_string(cmd.target);
    p["author"] = cmd.author;
    p["reason"] = cmd.reason;
    Json state;
    const Timestamp now = clock_();
    switch (cmd.target) {
        case OverrideTarget::sensor_health: {
            if (!st.contains("sensor") || !st.at("sensor").is_string()) throw ValidationFailed("sensor is required");
            const auto sensor = st.at("sensor").get<std::string>();
            const auto* spec = engine_.fleet().find_asset(cmd.asset);
            const bool owned = std::any_of(spec->channels.begin(), spec->channels.end(),
                                           [&](const auto& c) { return c.id == sensor; });
            if (!owned) throw ValidationFailed("sensor '" + sensor + "' does not belong to '" + cmd.asset + "'");
            if (!st.contains("health") || !st.at("health").is_string()) throw ValidationFailed("health is required");
            try {
                ingest::health_from_string(st.at("health").get<std::string>());
            } catch (const Error& e) {
                throw ValidationFailed(e.what());
            }
            state = Json{{"sensor", sensor}, {"health", st.at("health")}};
            break;
        }
        case OverrideTarget::detection_enabled:
            if (!st.contains("enabled") || !st.at("enabled").is_boolean()) throw ValidationFailed("enabled must be a boolean");
            state = Json{{"enabled", st.at("enabled")}};
            break;
        case OverrideTarget::limit_rule: {
            const auto rule = rule_from_json(st, cmd.asset);
            const auto& existing = versions_[cmd.asset];
            const auto n = std::count_if(existing.begin(), existing.end(),
                                         [&](const auto& v) { return v.rule.kind == rule.kind; });
            p["version"] = fmt::format("{}/{}/v{}", cmd.asset, to_string(rule.kind), n + 1);
            state = rule_json(rule);
            break;
        }
        case OverrideTarget::schedule: {
            if (!st.contains("inspect_at") || !st.at("inspect_at").is_number_integer()) {
                throw ValidationFailed("inspect_at must be epoch milliseconds");
            }
            if (from_epoch_ms(st.at("inspect_at").get<std::int64_t>()) < now) {
                throw ValidationFailed("inspect_at is in the past");
            }
            state = Json{{"inspect_at", st.at("inspect_at")}};
            break;
        }
    }
    p["new_state"] = state;
    const Event ev = record("override", now, p);
    apply(ev, false);
    notify(ev);
    Json out;
    out["v"] = 1;
    out["seq"] = ev.seq;
    out["applied"] = p;
    return out;
}

scheduler::ResponsePipeline MonitoringService::advance_response(const std::string& anomaly_id, const Credentials& who) {
    authorize(who);
    if (who.author.empty()) throw ValidationFailed("author is required");
    std::unique_lock lock(mutex_);
    const auto* pipeline = responses_.find(anomaly_id);
    if (!pipeline) throw NotFound("no response for '" + anomaly_id + "'");
    if (!pipeline->open()) throw ValidationFailed("response for '" + anomaly_id + "' is already completed");
    Json p;
    p["anomaly"] = anomaly_id;
    p["author"] = who.author;
    p["stage"] = to_string(static_cast<scheduler::Stage>(static_cast<int>(pipeline->stage) + 1));
    const Event ev = record("response", clock_(), std::move(p));
    apply(ev, false);
    return *responses_.find(anomaly_id);
}

std::string MonitoringService::asset_status(const std::string& asset) const {
    if (!engine_.detection_enabled(asset)) return "paused";
    std::optional<Severity> worst;
    for (const auto& [id, r] : anomalies_) {
        if (r.event.asset != asset || r.acknowledged) continue;
        const auto* p = responses_.find(id);
        if (p && !p->open()) continue;
        if (!worst || r.event.severity > *worst) worst = r.event.severity;
    }
    if (worst) return to_string(*worst);
    for (const auto& s : engine_.sensors(asset)) {
        if (s.health == ingest::Health::faulty) return "sensor-fault";
    }
    return "nominal";
}

Json MonitoringService::anomaly_json(const AnomalyRecord& r) const {
    Json j = anomaly_payload(r.event);
    j["acknowledged"] = r.acknowledged;
    j["acknowledged_by"] = r.acknowledged ? Json(r.acknowledged_by) : Json(nullptr);
    j["acknowledged_at"] = r.acknowledged_at ? Json(epoch_ms(*r.acknowledged_at)) : Json(nullptr);
    j["notifications"] = r.notifications;
    if (const auto* p = responses_.find(r.event.anomaly_id)) {
        j["response"] = Json{{"stage", to_string(p->stage)},
                             {"deadline", epoch_ms(p->deadline)},
                             {"overdue", p->overdue}};
    }
    return j;
}

Json MonitoringService::assets() const {
    std::shared_lock lock(mutex_);
    Json out;
    out["v"] = 1;
    out["assets"] = Json::array();
    for (const auto& a : engine_.fleet().assets) {
        Json j;
        j["id"] = a.id;
        j["status"] = asset_status(a.id);
        std::size_t open = 0;
        for (const auto& [id, r] : anomalies_) {
            const auto* p = responses_.find(id);
            if (r.event.asset == a.id && !r.acknowledged && (!p || p->open())) ++open;
        }
        j["open_anomalies"] = open;
        const auto next = engine_.next_inspection(a.id);
        j["next_inspection"] = next ? Json(epoch_ms(*next)) : Json(nullptr);
        j["detection_enabled"] = engine_.detection_enabled(a.id);
        out["assets"].push_back(std::move(j));
    }
    return out;
}

Json MonitoringService::asset_health(const std::string& asset) const {
    std::shared_lock lock(mutex_);
    check_asset(asset);
    const auto* spec = engine_.fleet().find_asset(asset);
    Json j;
    j["v"] = 1;
    j["id"] = asset;
    j["status"] = asset_status(asset);
    j["detection_enabled"] = engine_.detection_enabled(asset);
    const auto next = engine_.next_inspection(asset);
    j["next_inspection"] = next ? Json(epoch_ms(*next)) : Json(nullptr);
    const auto period = scheduler::InspectionSchedule::create(asset, spec->pf, config_.engine.inspection_fraction,
                                                              engine_.fleet().start, spec->usage_rate)
                            .period;
    j["inspection_interval_h"] = to_hours(period);
    j["pf_interval_h"] = to_hours(spec->pf_clock());
    j["sensors"] = Json::array();
    for (const auto& s : engine_.sensors(asset)) {
        Json sj;
        sj["id"] = s.sensor;
        sj["kind"] = to_string(s.kind);
        sj["health"] = ingest::to_string(s.health);
        sj["excluded"] = s.excluded;
        sj["latest"] = s.latest ? Json{{"ts", epoch_ms(s.latest->ts)}, {"value", s.latest->value}} : Json(nullptr);
        // Sparkline window: two inspection intervals back from the latest reading.
        Json recent = Json::array();
        for (const auto& r : engine_.recent(s.sensor)) {
            if (s.latest && r.ts < s.latest->ts - 2 * period) continue;
            recent.push_back(Json::array({epoch_ms(r.ts), r.value}));
        }
        sj["recent"] = std::move(recent);
        j["sensors"].push_back(std::move(sj));
    }
    j["limits"] = Json::array();
    for (const auto& r : engine_.active_limits(asset)) j["limits"].push_back(rule_json(r));
    j["pending_limits"] = Json::array();
    for (const auto& r : engine_.pending_limits(asset)) j["pending_limits"].push_back(rule_json(r));
    j["rule_versions"] = Json::array();
    if (auto it = versions_.find(asset); it != versions_.end()) {
        for (const auto& v : it->second) {
            j["rule_versions"].push_back(Json{{"version", v.version_id},
                                              {"author", v.author},
                                              {"at", epoch_ms(v.at)},
                                              {"rule", rule_json(v.rule)}});
        }
    }
    j["open_anomalies"] = Json::array();
    for (const auto& id : anomaly_order_) {
        const auto& r = anomalies_.at(id);
        const auto* p = responses_.find(id);
        if (r.event.asset == asset && !r.acknowledged && (!p || p->open())) j["open_anomalies"].push_back(anomaly_json(r));
    }
    return j;
}

std::vector<AnomalyRecord> MonitoringService::anomalies(std::optional<Timestamp> since) const {
    std::shared_lock lock(mutex_);
    std::vector<AnomalyRecord> out;
    for (const auto& id : anomaly_order_) {
        const auto& r = anomalies_.at(id);
        if (since && r.event.detected_at < *since) continue;
        out.push_back(r);
    }
    return out;
}

std::vector<RuleVersion> MonitoringService::rule_versions(const std::string& asset) const {
    std::shared_lock lock(mutex_);
    check_asset(asset);
    auto it = versions_.find(asset);
    return it == versions_.end() ? std::vector<RuleVersion>{} : it->second;
}

Json MonitoringService::digest(DigestPeriod period, Timestamp end) const {
    const auto range = digest_range(period, end);
    std::vector<Event> feed;
    {
        std::lock_guard lock(events_mutex_);
        if (expired_before_ && range.start < *expired_before_) {
            throw RangeUnavailable("events before " + store::day_name(*expired_before_) + " have expired");
        }
        for (const auto& e : events_) {
            if (e.at >= range.end) continue;
            feed.push_back(e);
        }
    }
    struct AssetFold {
        std::map<std::string, std::uint64_t> by_severity{{"advisory", 0}, {"warning", 0}, {"critical", 0}};
        Json faults = Json::array();
        std::map<std::string, std::string> sensor_health;
        bool enabled = true;
    };
    std::map<std::string, AssetFold> fold;
    for (const auto& a : fleet().assets) fold[a.id];
    std::map<std::string, scheduler::ResponsePipeline> pipelines;
    std::map<std::string, bool> acked;
    std::vector<std::string> order;

    for (const auto& e : feed) {
        const bool in_range = e.at >= range.start;
        const auto& p = e.payload;
        if (e.type == "anomaly") {
            const auto a = anomaly_from_payload(p.at("anomaly"));
            if (in_range) ++fold[a.asset].by_severity[to_string(a.severity)];
            const auto* spec = fleet().find_asset(a.asset);
            pipelines.emplace(a.anomaly_id, scheduler::open_response(a, e.at, spec ? spec->pf_clock() : Millis{0}));
            order.push_back(a.anomaly_id);
        } else if (e.type == "ack") {
            acked[p.at("anomaly").get<std::string>()] = true;
        } else if (e.type == "response") {
            auto it = pipelines.find(p.at("anomaly").get<std::string>());
            if (it != pipelines.end() && it->second.open()) it->second = scheduler::advance_response(it->second, e.at);
        } else if (e.type == "sensor-health") {
            auto& f = fold[p.at("asset").get<std::string>()];
            f.sensor_health[p.at("sensor").get<std::string>()] = p.at("after").get<std::string>();
            if (in_range && p.at("after") == "faulty") {
                f.faults.push_back(Json{{"sensor", p.at("sensor")}, {"at", epoch_ms(e.at)}});
            }
        } else if (e.type == "override" && p.at("target") == "detection-enabled") {
            fold[p.at("asset").get<std::string>()].enabled = p.at("new_state").at("enabled").get<bool>();
        } else if (e.type == "override" && p.at("target") == "sensor-health") {
            fold[p.at("asset").get<std::string>()].sensor_health[p.at("new_state").at("sensor").get<std::string>()] =
                p.at("new_state").at("health").get<std::string>();
        }
    }

    Json out;
    out["v"] = 1;
    out["period"] = to_string(period);
    out["start"] = epoch_ms(range.start);
    out["end"] = epoch_ms(range.end);
    out["assets"] = Json::array();
    std::map<std::string, std::uint64_t> totals{{"advisory", 0}, {"warning", 0}, {"critical", 0}};
    std::uint64_t fault_count = 0;
    for (const auto& a : fleet().assets) {
        const auto& f = fold[a.id];
        std::string status = "nominal";
        std::optional<Severity> worst;
        for (const auto& id : order) {
            const auto& pl = pipelines.at(id);
            if (pl.anomaly.asset != a.id || acked.count(id) || !pl.open()) continue;
            if (!worst || pl.anomaly.severity > *worst) worst = pl.anomaly.severity;
        }
        const bool faulty = std::any_of(f.sensor_health.begin(), f.sensor_health.end(),
                                        [](const auto& kv) { return kv.second == "faulty"; });
        if (!f.enabled) status = "paused";
        else if (worst) status = to_string(*worst);
        else if (faulty) status = "sensor-fault";
        Json j;
        j["asset"] = a.id;
        j["status"] = status;
        j["anomalies"] = Json{{"advisory", f.by_severity.at("advisory")},
                              {"warning", f.by_severity.at("warning")},
                              {"critical", f.by_severity.at("critical")}};
        j["sensor_faults"] = f.faults;
        for (const auto& [k, v] : f.by_severity) totals[k] += v;
        fault_count += f.faults.size();
        out["assets"].push_back(std::move(j));
    }
    out["anomaly_counts"] = Json{{"advisory", totals["advisory"]}, {"warning", totals["warning"]},
                                 {"critical", totals["critical"]}};
    out["sensor_faults"] = fault_count;
    out["open_responses"] = Json::array();
    for (const auto& id : order) {
        const auto& pl = pipelines.at(id);
        if (!pl.open()) continue;
        out["open_responses"].push_back(Json{{"anomaly", id},
                                             {"stage", to_string(pl.stage)},
                                             {"deadline", epoch_ms(pl.deadline)},
                                             {"overdue", pl.overdue || range.end > pl.deadline}});
    }
    return out;
}

std::vector<Event> MonitoringService::events_since(std::optional<std::uint64_t> cursor) const {
    std::lock_guard lock(events_mutex_);
    if (cursor && *cursor + 1 < first_retained_) {
        throw CursorExpired(fmt::format("cursor {} is older than the retained feed (first {})", *cursor, first_retained_));
    }
    std::vector<Event> out;
    for (const auto& e : events_) {
        if (!cursor || e.seq > *cursor) out.push_back(e);
    }
    return out;
}

std::vector<Event> MonitoringService::wait_events(std::optional<std::uint64_t> cursor, Millis timeout) const {
    {
        std::unique_lock lock(events_mutex_);
        events_cv_.wait_for(lock, timeout, [&] {
            if (stopping_) return true;
            if (events_.empty()) return false;
            return !cursor || events_.back().seq > *cursor;
        });
    }
    return events_since(cursor);
}

std::optional<std::uint64_t> MonitoringService::head() const {
    std::lock_guard lock(events_mutex_);
    if (events_.empty()) return journal_->size() == 0 ? std::nullopt : std::optional(journal_->size() - 1);
    return events_.back().seq;
}

void MonitoringService::expire_events_before(Timestamp t) {
    std::unique_lock lock(mutex_);
    Json p;
    p["before"] = epoch_ms(t);
    const Event ev = record("expire", clock_(), std::move(p));
    apply(ev, false);
    std::lock_guard elock(events_mutex_);
    std::erase_if(events_, [&](const Event& e) { return e.at < t; });
    first_retained_ = events_.empty() ? journal_->size() : events_.front().seq;
}

Json MonitoringService::configuration() const {
    std::shared_lock lock(mutex_);
    Json out;
    out["rules"] = Json::object();
    for (const auto& [asset, vs] : versions_) {
        Json arr = Json::array();
        for (const auto& v : vs) {
            arr.push_back(Json{{"version", v.version_id}, {"author", v.author}, {"at", epoch_ms(v.at)},
                               {"rule", rule_json(v.rule)}});
        }
        out["rules"][asset] = std::move(arr);
    }
    out["overrides"] = overrides_;
    out["anomalies"] = Json::array();
    for (const auto& id : anomaly_order_) out["anomalies"].push_back(anomaly_json(anomalies_.at(id)));
    out["detection_enabled"] = Json::object();
    out["limits"] = Json::object();
    for (const auto& a : engine_.fleet().assets) {
        out["detection_enabled"][a.id] = engine_.detection_enabled(a.id);
        // Limits as they stand once pending changes take effect.
        auto merged = engine_.active_limits(a.id);
        for (const auto& r : engine_.pending_limits(a.id)) {
            auto same = std::find_if(merged.begin(), merged.end(), [&](const auto& m) { return m.kind == r.kind; });
            if (same != merged.end()) *same = r;
            else merged.push_back(r);
        }
        Json limits = Json::array();
        for (const auto& r : merged) limits.push_back(rule_json(r));
        out["limits"][a.id] = std::move(limits);
    }
    return out;
}

}  // namespace cbm::service
