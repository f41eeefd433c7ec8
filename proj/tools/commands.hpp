#pragma once

#include <cstdint>
#include <iosfwd>
#include <optional>
#include <string>
#include <utility>
#include <vector>

#include "cbm/common.hpp"

namespace cbm::cli {

inline constexpr int kExitOk = 0;
inline constexpr int kExitRuntime = 1;
inline constexpr int kExitInvalid = 2;

struct CommandResult {
    int exit_code = kExitOk;
    std::optional<std::string> report_path;
};

struct SimulateOptions {
    std::string scenario;
    std::optional<std::string> rules;
    std::optional<std::string> out;
    std::optional<std::uint64_t> seed;
    double inspection_fraction = 0.5;
};

struct CompareOptions {
    std::string scenario;
    std::string policies;
    std::string costs;
    std::optional<std::string> rules;
    std::optional<std::string> out;
    std::optional<std::uint64_t> seed;
};

struct ReplayOptions {
    std::string store;
    std::string scenario;
    std::optional<std::string> rules;
    std::optional<std::string> out;
    std::optional<Timestamp> now;  ///< inspect up to here; default scenario end
    double inspection_fraction = 0.5;
};

struct ServeOptions {
    std::string config;
    std::string scenario;
    std::optional<Timestamp> now;
};

/// One lifetime per line, optionally followed by a censoring flag (1 when
/// the unit was still running). Blank lines and '#' comments are skipped.
std::pair<std::vector<double>, std::vector<bool>> parse_lifetimes(const std::string& text);

/// Accepts epoch milliseconds or an ISO-8601 UTC instant
/// ("2026-01-05T00:00:00Z").
Timestamp parse_instant(const std::string& text);

CommandResult cmd_validate(const std::string& scenario, std::ostream& out, std::ostream& err);
CommandResult cmd_simulate(const SimulateOptions& opts, std::ostream& out, std::ostream& err);
CommandResult cmd_compare(const CompareOptions& opts, std::ostream& out, std::ostream& err);
CommandResult cmd_fit(const std::string& lifetimes, bool json, std::ostream& out, std::ostream& err);
CommandResult cmd_replay(const ReplayOptions& opts, std::ostream& out, std::ostream& err);
CommandResult cmd_serve(const ServeOptions& opts, std::ostream& out, std::ostream& err);

}  // namespace cbm::cli
