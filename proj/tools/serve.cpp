#include <atomic>
#include <chrono>
#include <csignal>
#include <iostream>
#include <thread>

#include "cbm/detection/rules.hpp"
#include "cbm/service/http.hpp"
#include "cbm/service/runtime.hpp"
#include "cbm/sim/simulator.hpp"
#include "commands.hpp"

namespace cbm::cli {

namespace {

std::atomic<bool> g_stop{false};

void on_signal(int) { g_stop = true; }

}  // namespace

CommandResult cmd_serve(const ServeOptions& opts, std::ostream& out, std::ostream& err) {
    service::RuntimeConfig rc;
    sim::Scenario fleet;
    detection::RuleSet rules;
    try {
        rc = service::load_runtime_config(opts.config);
        if (!opts.scenario.empty()) rc.scenario = opts.scenario;
        if (rc.scenario.empty()) throw service::ValidationFailed("no fleet scenario given");
        fleet = sim::load_scenario(rc.scenario);
        if (rc.rules) rules = detection::load_rules(*rc.rules);
        else rules.failure_limits = Severity::warning;
    } catch (const std::exception& e) {
        err << e.what() << "\n";
        return {kExitInvalid, std::nullopt};
    }

    try {
        const auto wall_start = std::chrono::steady_clock::now();
        service::Clock clock;
        if (opts.now) {
            clock = [t = *opts.now] { return t; };
        } else if (rc.speedup) {
            clock = [wall_start, start = fleet.start, speed = *rc.speedup] {
                const auto elapsed = std::chrono::duration<double>(std::chrono::steady_clock::now() - wall_start);
                return start + Millis{static_cast<std::int64_t>(elapsed.count() * speed * 1000.0)};
            };
        } else {
            clock = [] { return std::chrono::time_point_cast<Millis>(std::chrono::system_clock::now()); };
        }

        service::ServiceConfig sc;
        sc.token = rc.token;
        sc.data_dir = rc.data_dir;
        sc.engine.inspection_fraction = rc.inspection_fraction;
        sc.escalation_interval = Millis{static_cast<std::int64_t>(rc.escalation_minutes * 60'000.0)};
        service::MonitoringService svc(fleet, rules, sc, clock);
        if (rc.webhook_url) svc.set_sink(std::make_shared<service::WebhookSink>(*rc.webhook_url));

        service::HttpApi api(svc);
        const auto [host, port] = service::parse_listen(rc.listen);
        const int bound = api.bind(host, port);
        out << "http listening on " << host << ":" << bound << std::endl;
        std::unique_ptr<service::IngestListener> ingest;
        if (rc.ingest_listen) {
            ingest = std::make_unique<service::IngestListener>(svc, *rc.ingest_listen);
            out << "ingest listening on port " << ingest->port() << std::endl;
        }

        std::signal(SIGINT, on_signal);
        std::signal(SIGTERM, on_signal);
        std::thread driver([&] {
            std::optional<sim::Simulator> simulator;
            if (rc.speedup && !opts.now) simulator.emplace(fleet);
            while (!g_stop) {
                if (simulator) {
                    while (!simulator->done() && simulator->now() <= svc.now()) {
                        for (const auto& f : simulator->step()) svc.ingest(f);
                    }
                }
                svc.tick();
                std::this_thread::sleep_for(std::chrono::milliseconds(200));
            }
            svc.shutdown();
            api.stop();
        });
        api.listen();
        g_stop = true;
        driver.join();
        if (ingest) ingest->stop();
    } catch (const std::exception& e) {
        err << "error: " << e.what() << "\n";
        return {kExitRuntime, std::nullopt};
    }
    return {};
}

}  // namespace cbm::cli
