#include "cbm/ingest/wire.hpp"

#include <array>
#include <charconv>
#include <cmath>
#include <limits>

#include <nlohmann/json.hpp>

namespace cbm::ingest {

namespace {

constexpr std::array<const char*, 8> kFieldOrder = {"v", "asset", "sensor", "kind", "ts", "value", "unit", "seq"};

void append_string(std::string& out, const std::string& s) {
    out += nlohmann::json(s).dump(-1, ' ', false, nlohmann::json::error_handler_t::replace);
}

}  // namespace

std::string format_decimal(double value) {
    std::array<char, 64> buf{};
    auto [end, ec] = std::to_chars(buf.data(), buf.data() + buf.size(), value);
    if (ec != std::errc{}) throw MalformedFrame("value cannot be formatted");
    return std::string(buf.data(), end);
}

std::string encode_frame(const TelemetryFrame& f) {
    if (!std::isfinite(f.value)) throw MalformedFrame("value must be finite");
    std::string out;
    out.reserve(160);
    out += "{\"v\":";
    out += std::to_string(f.schema_version);
    out += ",\"asset\":";
    append_string(out, f.asset);
    out += ",\"sensor\":";
    append_string(out, f.sensor);
    out += ",\"kind\":\"";
    out += to_string(f.kind);
    out += "\",\"ts\":";
    out += std::to_string(epoch_ms(f.ts));
    out += ",\"value\":";
    out += format_decimal(f.value);
    out += ",\"unit\":";
    append_string(out, f.unit);
    out += ",\"seq\":";
    out += std::to_string(f.seq);
    out += '}';
    return out;
}

TelemetryFrame decode_frame(std::string_view line) {
    if (!line.empty() && line.back() == '\n') line.remove_suffix(1);
    if (!line.empty() && line.back() == '\r') line.remove_suffix(1);
    if (line.size() > kMaxLineBytes) throw MalformedFrame("line exceeds 4096 bytes");

    const auto doc = nlohmann::ordered_json::parse(line, nullptr, /*allow_exceptions=*/false);
    if (doc.is_discarded() || !doc.is_object()) throw MalformedFrame("not a flat JSON object");
    if (doc.size() != kFieldOrder.size()) throw MalformedFrame("expected exactly 8 fields");
    std::size_t i = 0;
    for (auto it = doc.begin(); it != doc.end(); ++it, ++i) {
        if (it.key() != kFieldOrder[i]) {
            throw MalformedFrame(std::string("field ") + std::to_string(i) + " must be '" + kFieldOrder[i] + "'");
        }
    }

    const auto& v = doc["v"];
    if (!v.is_number_unsigned() || v.get<std::uint64_t>() != static_cast<std::uint64_t>(kWireSchemaVersion)) {
        throw MalformedFrame("unknown schema_version");
    }
    TelemetryFrame f;
    f.schema_version = kWireSchemaVersion;

    for (const char* key : {"asset", "sensor", "kind", "unit"}) {
        if (!doc[key].is_string()) throw MalformedFrame(std::string("'") + key + "' must be a string");
    }
    f.asset = doc["asset"].get<std::string>();
    f.sensor = doc["sensor"].get<std::string>();
    f.unit = doc["unit"].get<std::string>();
    if (f.asset.empty() || f.sensor.empty()) throw MalformedFrame("asset and sensor must be non-empty");
    if (!try_channel_kind_from_string(doc["kind"].get<std::string>(), f.kind)) throw MalformedFrame("unknown kind");

    const auto& ts = doc["ts"];
    if (ts.is_number_unsigned()) {
        const auto u = ts.get<std::uint64_t>();
        if (u > static_cast<std::uint64_t>(std::numeric_limits<std::int64_t>::max())) throw MalformedFrame("ts out of range");
        f.ts = from_epoch_ms(static_cast<std::int64_t>(u));
    } else if (ts.is_number_integer()) {
        f.ts = from_epoch_ms(ts.get<std::int64_t>());
    } else {
        throw MalformedFrame("'ts' must be integer milliseconds");
    }

    const auto& value = doc["value"];
    if (!value.is_number()) throw MalformedFrame("'value' must be a decimal number");
    f.value = value.get<double>();
    if (!std::isfinite(f.value)) throw MalformedFrame("'value' must be finite");

    const auto& seq = doc["seq"];
    if (!seq.is_number_unsigned()) throw MalformedFrame("'seq' must be a non-negative integer");
    f.seq = seq.get<std::uint64_t>();
    return f;
}

}  // namespace cbm::ingest
