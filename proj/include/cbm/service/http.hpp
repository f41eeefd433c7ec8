#pragma once

#include <memory>
#include <string>

#include "cbm/service/service.hpp"

namespace cbm::service {

/// HTTP surface of a MonitoringService. Paths are stable; every JSON body
/// carries "v": 1.
///
///   GET  /assets
///   GET  /assets/{id}/health
///   PUT  /assets/{id}/rules/limits        {"kind", "lower", "upper", "severity", "author"}
///   GET  /anomalies?since=<ms>
///   POST /anomalies/{id}/ack              {"author"}
///   POST /anomalies/{id}/advance          {"author"}
///   POST /assets/{id}/override            {"target", "new_state", "author", "reason"}
///   GET  /digests?period=weekly|monthly&end=<ms or ISO-8601>
///   GET  /events?cursor=<seq>             server-sent events; Last-Event-ID also accepted
///   GET  /events?cursor=<seq>&once=1      the same events as one JSON document
///
/// Requests authenticate with "Authorization: Bearer <token>"; a token query
/// parameter is accepted for clients that cannot set headers (EventSource).
class HttpApi {
  public:
    explicit HttpApi(MonitoringService& service);
    ~HttpApi();

    /// Binds host:port (port 0 picks a free one) and returns the bound port.
    int bind(const std::string& host, int port);
    /// Serves until stop(); blocks.
    void listen();
    void stop();

  private:
    struct Impl;
    std::unique_ptr<Impl> impl_;
};

/// Splits "host:port"; a bare port binds to 127.0.0.1.
std::pair<std::string, int> parse_listen(const std::string& address);

}  // namespace cbm::service
