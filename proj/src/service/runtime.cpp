#include "cbm/service/runtime.hpp"

#include <arpa/inet.h>
#include <netinet/in.h>
#include <sys/socket.h>
#include <unistd.h>

#include <cstdlib>
#include <fstream>
#include <iostream>
#include <sstream>

#include <httplib.h>

#include "cbm/ingest/wire.hpp"
#include "cbm/service/http.hpp"

namespace cbm::service {

RuntimeConfig load_runtime_config(const std::string& path) {
    RuntimeConfig c;
    if (!path.empty()) {
        std::ifstream in(path);
        if (!in) throw ValidationFailed("cannot read service config '" + path + "'");
        nlohmann::json doc;
        try {
            doc = nlohmann::json::parse(in);
        } catch (const nlohmann::json::exception& e) {
            throw ValidationFailed(std::string("malformed service config: ") + e.what());
        }
        if (doc.value("schema", "") != kServiceSchema) {
            throw ValidationFailed(std::string("service config must declare schema ") + kServiceSchema);
        }
        c.listen = doc.value("listen", c.listen);
        c.token = doc.value("token", c.token);
        c.data_dir = doc.value("data_dir", c.data_dir);
        c.scenario = doc.value("scenario", c.scenario);
        if (doc.contains("rules")) c.rules = doc.at("rules").get<std::string>();
        if (doc.contains("ingest_listen")) c.ingest_listen = doc.at("ingest_listen").get<std::string>();
        if (doc.contains("webhook_url")) c.webhook_url = doc.at("webhook_url").get<std::string>();
        if (doc.contains("speedup")) c.speedup = doc.at("speedup").get<double>();
        c.inspection_fraction = doc.value("inspection_fraction", c.inspection_fraction);
        c.escalation_minutes = doc.value("escalation_minutes", c.escalation_minutes);
    }
    if (const char* v = std::getenv("CBM_LISTEN")) c.listen = v;
    if (const char* v = std::getenv("CBM_TOKEN")) c.token = v;
    if (const char* v = std::getenv("CBM_DATA_DIR")) c.data_dir = v;
    if (const char* v = std::getenv("CBM_INGEST_LISTEN")) c.ingest_listen = v;
    if (const char* v = std::getenv("CBM_WEBHOOK_URL")) c.webhook_url = v;
    return c;
}

WebhookSink::WebhookSink(std::string url) {
    const std::string scheme = "http://";
    if (url.rfind(scheme, 0) != 0) throw ValidationFailed("webhook url must start with http://");
    const auto rest = url.substr(scheme.size());
    const auto slash = rest.find('/');
    const auto authority = rest.substr(0, slash);
    path_ = slash == std::string::npos ? "/" : rest.substr(slash);
    const auto colon = authority.rfind(':');
    host_ = authority.substr(0, colon);
    if (colon != std::string::npos) port_ = std::stoi(authority.substr(colon + 1));
    worker_ = std::thread([this] { run(); });
}

WebhookSink::~WebhookSink() {
    {
        std::lock_guard lock(mutex_);
        stop_ = true;
    }
    cv_.notify_all();
    worker_.join();
}

void WebhookSink::notify(const Event& event) {
    Json j;
    j["seq"] = event.seq;
    j["at"] = epoch_ms(event.at);
    j["type"] = event.type;
    j["data"] = event.payload;
    {
        std::lock_guard lock(mutex_);
        queue_.push_back(j.dump());
    }
    cv_.notify_one();
}

void WebhookSink::run() {
    httplib::Client client(host_, port_);
    client.set_connection_timeout(2);
    while (true) {
        std::string body;
        {
            std::unique_lock lock(mutex_);
            cv_.wait(lock, [&] { return stop_ || !queue_.empty(); });
            if (queue_.empty()) return;
            body = std::move(queue_.front());
            queue_.pop_front();
        }
        auto res = client.Post(path_, body, "application/json");
        if (!res || res->status >= 300) std::cerr << "webhook delivery to " << host_ << " failed\n";
    }
}

IngestListener::IngestListener(MonitoringService& service, const std::string& address) : service_(service) {
    const auto [host, port] = parse_listen(address);
    listen_fd_ = ::socket(AF_INET, SOCK_STREAM, 0);
    if (listen_fd_ < 0) throw Error("cannot create ingest socket");
    int yes = 1;
    ::setsockopt(listen_fd_, SOL_SOCKET, SO_REUSEADDR, &yes, sizeof yes);
    sockaddr_in addr{};
    addr.sin_family = AF_INET;
    addr.sin_port = htons(static_cast<std::uint16_t>(port));
    if (::inet_pton(AF_INET, host.c_str(), &addr.sin_addr) != 1) throw Error("invalid ingest host '" + host + "'");
    if (::bind(listen_fd_, reinterpret_cast<sockaddr*>(&addr), sizeof addr) != 0 || ::listen(listen_fd_, 16) != 0) {
        ::close(listen_fd_);
        throw Error("cannot bind ingest listener on " + address);
    }
    socklen_t len = sizeof addr;
    ::getsockname(listen_fd_, reinterpret_cast<sockaddr*>(&addr), &len);
    port_ = ntohs(addr.sin_port);
    acceptor_ = std::thread([this] { accept_loop(); });
}

IngestListener::~IngestListener() { stop(); }

void IngestListener::stop() {
    if (stop_.exchange(true)) return;
    ::shutdown(listen_fd_, SHUT_RDWR);
    ::close(listen_fd_);
    if (acceptor_.joinable()) acceptor_.join();
    std::lock_guard lock(workers_mutex_);
    for (int fd : connections_) ::shutdown(fd, SHUT_RDWR);
    for (auto& w : workers_) w.join();
}

void IngestListener::accept_loop() {
    while (!stop_) {
        const int fd = ::accept(listen_fd_, nullptr, nullptr);
        if (fd < 0) {
            if (stop_) return;
            continue;
        }
        std::lock_guard lock(workers_mutex_);
        connections_.push_back(fd);
        workers_.emplace_back([this, fd] { serve_connection(fd); });
    }
}

void IngestListener::serve_connection(int fd) {
    std::string buffer;
    char chunk[8192];
    bool discarding = false;  // inside an over-long line
    while (!stop_) {
        const auto n = ::read(fd, chunk, sizeof chunk);
        if (n <= 0) break;
        buffer.append(chunk, static_cast<std::size_t>(n));
        std::size_t start = 0;
        for (auto nl = buffer.find('\n', start); nl != std::string::npos; nl = buffer.find('\n', start)) {
            const std::string_view line(buffer.data() + start, nl - start);
            start = nl + 1;
            if (discarding) {
                discarding = false;
                continue;
            }
            try {
                service_.ingest(ingest::decode_frame(line));
            } catch (const std::exception& e) {
                ++malformed_;
            }
        }
        buffer.erase(0, start);
        if (buffer.size() > ingest::kMaxLineBytes) {
            ++malformed_;
            buffer.clear();
            discarding = true;
        }
    }
    ::close(fd);
}

}  // namespace cbm::service
