#include "cbm/service/http.hpp"

#include <atomic>

#include <httplib.h>

namespace cbm::service {

namespace {

void send_json(httplib::Response& res, int status, const Json& body) {
    res.status = status;
    res.set_content(body.dump(), "application/json");
}

void send_error(httplib::Response& res, int status, const std::string& name, const std::string& message) {
    Json j;
    j["v"] = 1;
    j["error"] = name;
    j["message"] = message;
    send_json(res, status, j);
}

template <typename F>
void handle(httplib::Response& res, F&& body) {
    try {
        body();
    } catch (const Unauthorized& e) {
        res.set_header("WWW-Authenticate", "Bearer");
        send_error(res, 401, "Unauthorized", e.what());
    } catch (const ValidationFailed& e) {
        send_error(res, 422, "ValidationFailed", e.what());
    } catch (const NotFound& e) {
        send_error(res, 404, "NotFound", e.what());
    } catch (const AlreadyAcknowledged& e) {
        send_error(res, 409, "AlreadyAcknowledged", e.what());
    } catch (const CursorExpired& e) {
        send_error(res, 410, "CursorExpired", e.what());
    } catch (const RangeUnavailable& e) {
        send_error(res, 416, "RangeUnavailable", e.what());
    } catch (const Json::exception& e) {
        send_error(res, 422, "ValidationFailed", std::string("malformed JSON body: ") + e.what());
    } catch (const std::exception& e) {
        send_error(res, 500, "InternalError", e.what());
    }
}

Credentials credentials(const httplib::Request& req, const Json* body = nullptr) {
    Credentials c;
    const auto auth = req.get_header_value("Authorization");
    if (auth.rfind("Bearer ", 0) == 0) c.token = auth.substr(7);
    else if (req.has_param("token")) c.token = req.get_param_value("token");
    if (body && body->contains("author") && body->at("author").is_string()) c.author = body->at("author");
    return c;
}

Json parse_body(const httplib::Request& req) {
    if (req.body.empty()) return Json::object();
    auto j = Json::parse(req.body);
    if (!j.is_object()) throw ValidationFailed("request body must be a JSON object");
    return j;
}

Timestamp parse_time_param(const std::string& text) {
    if (!text.empty() && text.find_first_not_of("-0123456789") == std::string::npos) {
        return from_epoch_ms(std::stoll(text));
    }
    std::tm tm{};
    std::istringstream in(text);
    in >> std::get_time(&tm, "%Y-%m-%dT%H:%M:%S");
    if (in.fail()) throw ValidationFailed("cannot parse time '" + text + "'");
    return from_epoch_ms(static_cast<std::int64_t>(::timegm(&tm)) * 1000);
}

Json event_json(const Event& e) {
    Json j;
    j["seq"] = e.seq;
    j["at"] = epoch_ms(e.at);
    j["type"] = e.type;
    j["data"] = e.payload;
    return j;
}

std::optional<std::uint64_t> cursor_of(const httplib::Request& req) {
    std::string text;
    if (req.has_param("cursor")) text = req.get_param_value("cursor");
    else if (req.has_header("Last-Event-ID")) text = req.get_header_value("Last-Event-ID");
    if (text.empty()) return std::nullopt;
    if (text.find_first_not_of("0123456789") != std::string::npos) throw ValidationFailed("cursor must be a sequence number");
    return std::stoull(text);
}

}  // namespace

std::pair<std::string, int> parse_listen(const std::string& address) {
    const auto colon = address.rfind(':');
    try {
        if (colon == std::string::npos) return {"127.0.0.1", std::stoi(address)};
        return {address.substr(0, colon), std::stoi(address.substr(colon + 1))};
    } catch (const std::exception&) {
        throw Error("invalid listen address '" + address + "'");
    }
}

struct HttpApi::Impl {
    MonitoringService& svc;
    httplib::Server server;
    std::atomic<bool> stopping{false};

    explicit Impl(MonitoringService& s) : svc(s) { routes(); }

    void routes() {
        server.set_default_headers({{"X-Cbm-Api", "1"}, {"Access-Control-Allow-Origin", "*"}});
        server.Options(R"(.*)", [](const httplib::Request&, httplib::Response& res) {
            res.set_header("Access-Control-Allow-Methods", "GET, PUT, POST, OPTIONS");
            res.set_header("Access-Control-Allow-Headers", "Authorization, Content-Type, Last-Event-ID");
            res.status = 204;
        });

        server.Get("/assets", [this](const httplib::Request& req, httplib::Response& res) {
            handle(res, [&] {
                svc.authorize(credentials(req));
                send_json(res, 200, svc.assets());
            });
        });

        server.Get(R"(/assets/([^/]+)/health)", [this](const httplib::Request& req, httplib::Response& res) {
            handle(res, [&] {
                svc.authorize(credentials(req));
                send_json(res, 200, svc.asset_health(req.matches[1]));
            });
        });

        server.Put(R"(/assets/([^/]+)/rules/limits)", [this](const httplib::Request& req, httplib::Response& res) {
            handle(res, [&] {
                const auto body = parse_body(req);
                const auto who = credentials(req, &body);
                svc.authorize(who);
                detection::LimitRule rule;
                if (!body.contains("kind") || !body.at("kind").is_string() ||
                    !try_channel_kind_from_string(body.at("kind").get<std::string>(), rule.kind)) {
                    throw ValidationFailed("kind must name a channel kind");
                }
                auto bound = [&](const char* key) -> std::optional<double> {
                    if (!body.contains(key) || body.at(key).is_null()) return std::nullopt;
                    if (!body.at(key).is_number()) throw ValidationFailed(std::string(key) + " must be a number");
                    return body.at(key).get<double>();
                };
                rule.lower = bound("lower");
                rule.upper = bound("upper");
                try {
                    rule.severity_on_breach = severity_from_string(body.value("severity", std::string("warning")));
                } catch (const Error& e) {
                    throw ValidationFailed(e.what());
                }
                const auto version = svc.update_limit_rule(req.matches[1], rule, who);
                Json out;
                out["v"] = 1;
                out["version"] = version;
                out["effective"] = "next-inspection";
                send_json(res, 200, out);
            });
        });

        server.Get("/anomalies", [this](const httplib::Request& req, httplib::Response& res) {
            handle(res, [&] {
                svc.authorize(credentials(req));
                std::optional<Timestamp> since;
                if (req.has_param("since")) since = parse_time_param(req.get_param_value("since"));
                Json out;
                out["v"] = 1;
                out["anomalies"] = Json::array();
                for (const auto& r : svc.anomalies(since)) {
                    Json j = Json::parse(detection::journal_line(r.event));
                    j["acknowledged"] = r.acknowledged;
                    j["acknowledged_by"] = r.acknowledged ? Json(r.acknowledged_by) : Json(nullptr);
                    j["acknowledged_at"] = r.acknowledged_at ? Json(epoch_ms(*r.acknowledged_at)) : Json(nullptr);
                    out["anomalies"].push_back(std::move(j));
                }
                send_json(res, 200, out);
            });
        });

        server.Post(R"(/anomalies/(.+)/ack)", [this](const httplib::Request& req, httplib::Response& res) {
            handle(res, [&] {
                const auto body = parse_body(req);
                const auto r = svc.acknowledge_anomaly(req.matches[1], credentials(req, &body));
                Json out;
                out["v"] = 1;
                out["id"] = r.event.anomaly_id;
                out["acknowledged"] = r.acknowledged;
                out["acknowledged_by"] = r.acknowledged_by;
                out["acknowledged_at"] = r.acknowledged_at ? Json(epoch_ms(*r.acknowledged_at)) : Json(nullptr);
                send_json(res, 200, out);
            });
        });

        server.Post(R"(/anomalies/(.+)/advance)", [this](const httplib::Request& req, httplib::Response& res) {
            handle(res, [&] {
                const auto body = parse_body(req);
                const auto p = svc.advance_response(req.matches[1], credentials(req, &body));
                Json out;
                out["v"] = 1;
                out["id"] = p.anomaly.anomaly_id;
                out["stage"] = to_string(p.stage);
                out["deadline"] = epoch_ms(p.deadline);
                out["overdue"] = p.overdue;
                send_json(res, 200, out);
            });
        });

        server.Post(R"(/assets/([^/]+)/override)", [this](const httplib::Request& req, httplib::Response& res) {
            handle(res, [&] {
                const auto body = parse_body(req);
                const auto who = credentials(req, &body);
                svc.authorize(who);
                OverrideCommand cmd;
                cmd.asset = req.matches[1];
                cmd.target = override_target_from_string(body.value("target", std::string()));
                cmd.new_state = body.value("new_state", Json::object());
                cmd.author = who.author;
                cmd.reason = body.value("reason", std::string());
                cmd.at = svc.now();
                send_json(res, 200, svc.apply_override(cmd, who));
            });
        });

        server.Get("/digests", [this](const httplib::Request& req, httplib::Response& res) {
            handle(res, [&] {
                svc.authorize(credentials(req));
                const auto period = digest_period_from_string(req.get_param_value("period"));
                const Timestamp end = req.has_param("end") ? parse_time_param(req.get_param_value("end")) : svc.now();
                send_json(res, 200, svc.digest(period, end));
            });
        });

        server.Get("/events", [this](const httplib::Request& req, httplib::Response& res) {
            handle(res, [&] {
                svc.authorize(credentials(req));
                auto cursor = cursor_of(req);
                auto initial = svc.events_since(cursor);  // throws CursorExpired up front
                const auto head = svc.head();
                res.set_header("X-Cbm-Cursor", head ? std::to_string(*head) : "");
                if (req.has_param("once")) {
                    Json out;
                    out["v"] = 1;
                    out["cursor"] = head ? Json(*head) : Json(nullptr);
                    out["events"] = Json::array();
                    for (const auto& e : initial) out["events"].push_back(event_json(e));
                    send_json(res, 200, out);
                    return;
                }
                res.set_header("Cache-Control", "no-cache");
                auto pending = std::make_shared<std::vector<Event>>(std::move(initial));
                res.set_chunked_content_provider(
                    "text/event-stream", [this, cursor, pending](std::size_t, httplib::DataSink& sink) mutable {
                        if (stopping) return false;
                        std::vector<Event> batch;
                        if (!pending->empty()) batch.swap(*pending);
                        else batch = svc.wait_events(cursor, Millis{1000});
                        if (stopping) return false;
                        std::string chunk;
                        for (const auto& e : batch) {
                            chunk += "id: " + std::to_string(e.seq) + "\nevent: " + e.type + "\ndata: " +
                                     event_json(e).dump() + "\n\n";
                            cursor = e.seq;
                        }
                        if (chunk.empty()) chunk = ": keep-alive\n\n";
                        return sink.write(chunk.data(), chunk.size());
                    });
            });
        });
    }
};

HttpApi::HttpApi(MonitoringService& service) : impl_(std::make_unique<Impl>(service)) {}

HttpApi::~HttpApi() { stop(); }

int HttpApi::bind(const std::string& host, int port) {
    if (port == 0) return impl_->server.bind_to_any_port(host);
    if (!impl_->server.bind_to_port(host, port)) throw Error("cannot bind " + host + ":" + std::to_string(port));
    return port;
}

void HttpApi::listen() { impl_->server.listen_after_bind(); }

void HttpApi::stop() {
    impl_->stopping = true;
    impl_->server.stop();
}

}  // namespace cbm::service
