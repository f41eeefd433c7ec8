#pragma once

#include <atomic>
#include <condition_variable>
#include <deque>
#include <memory>
#include <mutex>
#include <optional>
#include <string>
#include <thread>

#include "cbm/service/service.hpp"

namespace cbm::service {

inline constexpr const char* kServiceSchema = "cbm.service/1";

/// Service settings. File keys (JSON, schema "cbm.service/1"):
///   listen, token, data_dir, scenario, rules, ingest_listen, webhook_url,
///   speedup, inspection_fraction, escalation_minutes
/// Environment overrides: CBM_LISTEN, CBM_TOKEN, CBM_DATA_DIR,
/// CBM_INGEST_LISTEN, CBM_WEBHOOK_URL.
struct RuntimeConfig {
    std::string listen = "127.0.0.1:8080";
    std::string token;
    std::string data_dir = "cbm-data";
    std::string scenario;
    std::optional<std::string> rules;
    std::optional<std::string> ingest_listen;
    std::optional<std::string> webhook_url;
    /// When set, the service drives its own simulator at this many simulated
    /// seconds per wall second.
    std::optional<double> speedup;
    double inspection_fraction = 0.5;
    double escalation_minutes = 15.0;
};

/// Reads `path` (may be empty) and then applies environment overrides.
RuntimeConfig load_runtime_config(const std::string& path);

/// Posts each event as JSON to an http:// URL from a background thread.
/// Delivery is best effort; failures are reported on stderr.
class WebhookSink : public NotificationSink {
  public:
    explicit WebhookSink(std::string url);
    ~WebhookSink() override;
    void notify(const Event& event) override;

  private:
    void run();

    std::string host_;
    int port_ = 80;
    std::string path_;
    std::mutex mutex_;
    std::condition_variable cv_;
    std::deque<std::string> queue_;
    bool stop_ = false;
    std::thread worker_;
};

/// Raw TCP listener for the wire protocol: newline-delimited frames, one
/// connection per gateway. Malformed lines are counted and skipped.
class IngestListener {
  public:
    IngestListener(MonitoringService& service, const std::string& address);
    ~IngestListener();
    int port() const { return port_; }
    std::uint64_t malformed() const { return malformed_; }
    void stop();

  private:
    void accept_loop();
    void serve_connection(int fd);

    MonitoringService& service_;
    int listen_fd_ = -1;
    int port_ = 0;
    std::atomic<bool> stop_{false};
    std::atomic<std::uint64_t> malformed_{0};
    std::thread acceptor_;
    std::mutex workers_mutex_;
    std::vector<std::thread> workers_;
    std::vector<int> connections_;
};

}  // namespace cbm::service
