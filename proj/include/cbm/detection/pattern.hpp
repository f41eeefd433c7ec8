#pragma once

#include <optional>
#include <span>
#include <string>
#include <vector>

#include "cbm/detection/anomaly.hpp"

namespace cbm::detection {

enum class Comparator { greater, greater_equal, less, less_equal };
const char* to_string(Comparator c);
Comparator comparator_from_string(const std::string& s);

struct EventPredicate {
    /// Matches a history entry by sensor id or by channel-kind name.
    std::string channel;
    Comparator comparator = Comparator::greater;
    double value = 0.0;
    /// Longest allowed gap since the previous predicate's match (ignored for
    /// the first predicate).
    Millis max_gap{kHour};
};

struct PatternRule {
    std::string rule_id;
    std::vector<EventPredicate> trigger_sequence;
    std::string conclusion;
    Severity severity = Severity::warning;

    void validate() const;
};

struct HistoryEntry {
    Timestamp ts;
    std::string sensor;
    ChannelKind kind;
    double value;
};

bool satisfies(const EventPredicate& p, const HistoryEntry& e);

/// Event iff the predicates match a subsequence of `history` in order with
/// every consecutive gap within its bound.
std::optional<AnomalyEvent> match_pattern(std::span<const HistoryEntry> history, const PatternRule& rule,
                                          Timestamp now, const std::string& asset);

}  // namespace cbm::detection
