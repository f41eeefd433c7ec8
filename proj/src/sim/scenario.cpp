#include "cbm/sim/scenario.hpp"

#include <cmath>
#include <fstream>
#include <set>
#include <sstream>

#include <fmt/format.h>
#include <nlohmann/json.hpp>

#include "cbm/sim/random.hpp"

namespace cbm::sim {

using nlohmann::json;
using nlohmann::ordered_json;

const char* to_string(FaultKind k) {
    switch (k) {
        case FaultKind::stuck_value: return "stuck-value";
        case FaultKind::spike: return "spike";
        case FaultKind::dropout: return "dropout";
        case FaultKind::drift: return "drift";
    }
    return "stuck-value";
}

FaultKind fault_kind_from_string(const std::string& s) {
    if (s == "stuck-value") return FaultKind::stuck_value;
    if (s == "spike") return FaultKind::spike;
    if (s == "dropout") return FaultKind::dropout;
    if (s == "drift") return FaultKind::drift;
    throw InvalidSpec("unknown fault kind '" + s + "'");
}

const AssetSpec* Scenario::find_asset(const std::string& id) const {
    for (const auto& a : assets) {
        if (a.id == id) return &a;
    }
    return nullptr;
}

void validate(const Scenario& s) {
    if (s.assets.empty()) throw InvalidSpec("asset set is empty");
    if (s.tick <= Millis{0}) throw InvalidSpec("tick must be positive");
    if (s.horizon <= Millis{0}) throw InvalidSpec("horizon must be positive");

    std::set<std::string> asset_ids;
    std::set<std::string> sensor_ids;
    for (const auto& a : s.assets) {
        if (a.id.empty()) throw InvalidSpec("asset id is empty");
        if (!asset_ids.insert(a.id).second) throw InvalidSpec("duplicate asset id '" + a.id + "'");
        if (a.channels.empty()) throw InvalidSpec("asset '" + a.id + "' has no channels");
        if (!(a.usage_rate > 0.0) || !std::isfinite(a.usage_rate)) {
            throw InvalidSpec("asset '" + a.id + "' usage_rate must be positive");
        }
        if (a.degradation_onset < s.start || a.degradation_onset > s.end()) {
            throw InvalidSpec("asset '" + a.id + "' degradation_onset outside the horizon");
        }
        if (a.degradation_onset + a.pf_clock() > s.end()) {
            throw InvalidSpec("horizon ends before functional failure of asset '" + a.id + "'");
        }
        for (const auto& c : a.channels) {
            if (c.id.empty()) throw InvalidSpec("channel id is empty in asset '" + a.id + "'");
            if (!sensor_ids.insert(c.id).second) throw InvalidSpec("duplicate sensor id '" + c.id + "'");
            if (c.sample_period <= Millis{0}) throw InvalidSpec("sensor '" + c.id + "' sample_period must be positive");
            if (!(c.noise_sigma >= 0.0) || !std::isfinite(c.noise_sigma)) {
                throw InvalidSpec("sensor '" + c.id + "' noise_sigma must be >= 0");
            }
            if (s.tick > c.sample_period) {
                throw InvalidSpec("tick exceeds sample_period of sensor '" + c.id + "'");
            }
            if (!(c.drift_exponent > 0.0) || !std::isfinite(c.nominal) || !std::isfinite(c.degradation_gain)) {
                throw InvalidSpec("sensor '" + c.id + "' has a non-finite or non-positive drift parameter");
            }
        }
    }
    for (const auto& f : s.faults) {
        if (!sensor_ids.contains(f.sensor)) throw InvalidSpec("fault targets unknown sensor '" + f.sensor + "'");
        if (f.start < s.start || f.start > s.end()) throw InvalidSpec("fault on '" + f.sensor + "' starts outside the horizon");
        if (!std::isfinite(f.magnitude)) throw InvalidSpec("fault on '" + f.sensor + "' has non-finite magnitude");
    }
}

double mean_value(const SensorChannelSpec& channel, Timestamp onset, Timestamp t) {
    if (t < onset) return channel.nominal;
    const double hours_past = to_hours(t - onset);
    if (channel.drift_exponent == 1.0) return channel.nominal + channel.degradation_gain * hours_past;
    return channel.nominal + channel.degradation_gain * std::pow(hours_past, channel.drift_exponent);
}

double failure_level(const AssetSpec& asset, const SensorChannelSpec& channel) {
    return mean_value(channel, asset.degradation_onset, asset.degradation_onset + asset.pf_clock());
}

// ---------------------------------------------------------------------------
// Scenario document

namespace {

Millis hours_field(const json& j, const char* key) {
    const double h = j.at(key).get<double>();
    if (!std::isfinite(h)) throw InvalidSpec(std::string(key) + " must be finite");
    return to_millis(Hours{h});
}

template <typename T>
T get_or(const json& j, const char* key, T fallback) {
    auto it = j.find(key);
    return it == j.end() ? fallback : it->get<T>();
}

SensorChannelSpec parse_channel(const json& j, const std::string& id_prefix) {
    SensorChannelSpec c;
    c.id = id_prefix + j.at("id").get<std::string>();
    if (!try_channel_kind_from_string(j.at("kind").get<std::string>(), c.kind)) {
        throw InvalidSpec("unknown channel kind '" + j.at("kind").get<std::string>() + "'");
    }
    c.unit = get_or<std::string>(j, "unit", "");
    c.nominal = j.at("nominal").get<double>();
    c.noise_sigma = get_or(j, "noise_sigma", 0.0);
    c.sample_period = hours_field(j, "period_h");
    c.degradation_gain = get_or(j, "gain_per_h", 0.0);
    c.drift_exponent = get_or(j, "exponent", 1.0);
    return c;
}

AssetSpec parse_asset_body(const json& j, const std::string& id, const std::string& channel_prefix,
                           Timestamp onset) {
    AssetSpec a;
    a.id = id;
    a.pattern = reliability::pattern_from_string(get_or<std::string>(j, "pattern", "B"));
    const auto& pf = j.at("pf");
    a.pf = reliability::PFInterval(pf.at("length").get<double>(),
                                   reliability::usage_unit_from_string(get_or<std::string>(pf, "unit", "time")));
    a.usage_rate = get_or(j, "usage_rate", 1.0);
    a.degradation_onset = onset;
    if (auto it = j.find("lifetime"); it != j.end()) {
        a.lifetime = reliability::WeibullModel(it->at("beta").get<double>(), it->at("eta").get<double>());
    }
    for (const auto& cj : j.at("channels")) a.channels.push_back(parse_channel(cj, channel_prefix));
    return a;
}

FaultInjection parse_fault(const json& j, Timestamp start, const std::string& sensor) {
    FaultInjection f;
    f.sensor = sensor;
    f.kind = fault_kind_from_string(j.at("kind").get<std::string>());
    f.start = start + hours_field(j, "start_h");
    f.magnitude = get_or(j, "magnitude", 0.0);
    return f;
}

Scenario parse_document(const json& doc) {
    if (!doc.is_object()) throw InvalidSpec("scenario document must be an object");
    const auto schema = get_or<std::string>(doc, "schema", "");
    if (schema != kScenarioSchema) {
        throw InvalidSpec("unsupported scenario schema '" + schema + "' (expected " + kScenarioSchema + ")");
    }
    Scenario s;
    s.seed = doc.at("seed").get<std::uint64_t>();
    s.start = from_epoch_ms(get_or<std::int64_t>(doc, "start_ms", 0));
    s.horizon = hours_field(doc, "horizon_h");
    s.tick = hours_field(doc, "tick_h");

    if (auto it = doc.find("assets"); it != doc.end()) {
        for (const auto& aj : *it) {
            const auto id = aj.at("id").get<std::string>();
            const auto prefix = get_or(aj, "prefix_channels", false) ? id + "." : std::string{};
            s.assets.push_back(parse_asset_body(aj, id, prefix, s.start + hours_field(aj, "onset_h")));
        }
    }
    if (auto it = doc.find("faults"); it != doc.end()) {
        for (const auto& fj : *it) s.faults.push_back(parse_fault(fj, s.start, fj.at("sensor").get<std::string>()));
    }

    // Fleet k draws its onsets from stream 2^20 + k of the scenario seed.
    if (auto it = doc.find("fleets"); it != doc.end()) {
        std::uint64_t fleet_index = 0;
        for (const auto& fj : *it) {
            auto rng = Random::stream(s.seed, (1ULL << 20) + fleet_index++);
            const auto count = fj.at("count").get<std::size_t>();
            const auto prefix = fj.at("id_prefix").get<std::string>();
            const auto& onset = fj.at("onset_h");
            const Millis onset_min = hours_field(onset, "min");
            const Millis onset_max = hours_field(onset, "max");
            if (onset_max < onset_min) throw InvalidSpec("fleet onset range is inverted");
            const auto& tmpl = fj.at("template");
            for (std::size_t i = 0; i < count; ++i) {
                const auto id = fmt::format("{}{:03d}", prefix, i + 1);
                const double span_ticks = static_cast<double>((onset_max - onset_min) / s.tick);
                const auto offset_ticks = static_cast<std::int64_t>(std::floor(rng.uniform() * (span_ticks + 1.0)));
                const Timestamp onset_at = s.start + onset_min + s.tick * std::min<std::int64_t>(offset_ticks, span_ticks);
                s.assets.push_back(parse_asset_body(tmpl, id, id + ".", onset_at));
                if (auto fit = fj.find("faults"); fit != fj.end()) {
                    for (const auto& ff : *fit) {
                        s.faults.push_back(parse_fault(ff, s.start, id + "." + ff.at("channel").get<std::string>()));
                    }
                }
            }
        }
    }
    validate(s);
    return s;
}

}  // namespace

Scenario parse_scenario(const std::string& text) {
    json doc;
    try {
        doc = json::parse(text);
    } catch (const json::exception& e) {
        throw InvalidSpec(std::string("not a valid scenario document: ") + e.what());
    }
    try {
        return parse_document(doc);
    } catch (const json::exception& e) {
        throw InvalidSpec(std::string("scenario field error: ") + e.what());
    } catch (const InvalidSpec&) {
        throw;
    } catch (const Error& e) {
        throw InvalidSpec(e.what());
    }
}

Scenario load_scenario(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw InvalidSpec("cannot read scenario file '" + path + "'");
    std::stringstream ss;
    ss << in.rdbuf();
    return parse_scenario(ss.str());
}

std::string normalized_scenario(const Scenario& s) {
    auto hours = [](Millis d) { return to_hours(d); };
    ordered_json doc;
    doc["schema"] = kScenarioSchema;
    doc["seed"] = s.seed;
    doc["start_ms"] = epoch_ms(s.start);
    doc["horizon_h"] = hours(s.horizon);
    doc["tick_h"] = hours(s.tick);
    doc["assets"] = ordered_json::array();
    for (const auto& a : s.assets) {
        ordered_json aj;
        aj["id"] = a.id;
        aj["pattern"] = reliability::to_string(a.pattern);
        aj["pf"] = {{"length", a.pf.length()}, {"unit", reliability::to_string(a.pf.unit())}};
        aj["usage_rate"] = a.usage_rate;
        aj["onset_h"] = hours(a.degradation_onset - s.start);
        if (a.lifetime) aj["lifetime"] = {{"beta", a.lifetime->shape()}, {"eta", a.lifetime->scale()}};
        aj["channels"] = ordered_json::array();
        for (const auto& c : a.channels) {
            ordered_json cj;
            cj["id"] = c.id;
            cj["kind"] = to_string(c.kind);
            cj["unit"] = c.unit;
            cj["nominal"] = c.nominal;
            cj["noise_sigma"] = c.noise_sigma;
            cj["period_h"] = hours(c.sample_period);
            cj["gain_per_h"] = c.degradation_gain;
            cj["exponent"] = c.drift_exponent;
            aj["channels"].push_back(std::move(cj));
        }
        doc["assets"].push_back(std::move(aj));
    }
    doc["faults"] = ordered_json::array();
    for (const auto& f : s.faults) {
        doc["faults"].push_back(ordered_json{{"sensor", f.sensor},
                                             {"kind", to_string(f.kind)},
                                             {"start_h", hours(f.start - s.start)},
                                             {"magnitude", f.magnitude}});
    }
    return doc.dump(2) + "\n";
}

}  // namespace cbm::sim
