#include "cbm/detection/pattern.hpp"

#include <fmt/format.h>

namespace cbm::detection {

const char* to_string(Comparator c) {
    switch (c) {
        case Comparator::greater: return ">";
        case Comparator::greater_equal: return ">=";
        case Comparator::less: return "<";
        case Comparator::less_equal: return "<=";
    }
    return ">";
}

Comparator comparator_from_string(const std::string& s) {
    if (s == ">") return Comparator::greater;
    if (s == ">=") return Comparator::greater_equal;
    if (s == "<") return Comparator::less;
    if (s == "<=") return Comparator::less_equal;
    throw InvalidRule("unknown comparator '" + s + "'");
}

void PatternRule::validate() const {
    if (rule_id.empty()) throw InvalidRule("pattern rule needs an id");
    if (trigger_sequence.empty()) throw InvalidRule("pattern rule '" + rule_id + "' has an empty trigger sequence");
    for (const auto& p : trigger_sequence) {
        if (p.channel.empty()) throw InvalidRule("pattern predicate without a channel in '" + rule_id + "'");
        if (p.max_gap < Millis{0}) throw InvalidRule("negative max gap in '" + rule_id + "'");
    }
}

bool satisfies(const EventPredicate& p, const HistoryEntry& e) {
    if (p.channel != e.sensor && p.channel != cbm::to_string(e.kind)) return false;
    switch (p.comparator) {
        case Comparator::greater: return e.value > p.value;
        case Comparator::greater_equal: return e.value >= p.value;
        case Comparator::less: return e.value < p.value;
        case Comparator::less_equal: return e.value <= p.value;
    }
    return false;
}

std::optional<AnomalyEvent> match_pattern(std::span<const HistoryEntry> history, const PatternRule& rule,
                                          Timestamp now, const std::string& asset) {
    const auto& preds = rule.trigger_sequence;
    if (preds.empty()) return std::nullopt;

    // chains[j]: the partial match of predicates 0..j ending latest so far.
    // Keeping the latest end is optimal because gaps only bound the next step.
    std::vector<std::optional<std::vector<Timestamp>>> chains(preds.size());
    for (const auto& entry : history) {
        for (std::size_t j = preds.size(); j-- > 0;) {
            if (!satisfies(preds[j], entry)) continue;
            if (j == 0) {
                chains[0] = std::vector<Timestamp>{entry.ts};
                continue;
            }
            const auto& prev = chains[j - 1];
            if (!prev || entry.ts - prev->back() > preds[j].max_gap) continue;
            auto chain = *prev;
            chain.push_back(entry.ts);
            chains[j] = std::move(chain);
        }
    }
    const auto& full = chains.back();
    if (!full) return std::nullopt;

    std::string times;
    for (auto t : *full) times += (times.empty() ? "" : ",") + std::to_string(epoch_ms(t));
    AnomalyEvent e;
    e.asset = asset;
    e.method = Method::pattern;
    e.severity = rule.severity;
    e.detected_at = now;
    e.rule = rule.rule_id;
    e.evidence = fmt::format("{} (matched at {})", rule.conclusion, times);
    e.anomaly_id = make_anomaly_id(asset, e.method, e.channel, e.rule, now);
    return e;
}

}  // namespace cbm::detection
