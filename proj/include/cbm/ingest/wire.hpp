#pragma once

#include <string>
#include <string_view>

#include "cbm/telemetry.hpp"

namespace cbm::ingest {

CBM_DEFINE_ERROR(MalformedFrame);

inline constexpr std::size_t kMaxLineBytes = 4096;

/// Encodes one frame as a single wire line, without the trailing newline:
///
///   {"v":1,"asset":"A1","sensor":"A1.temp","kind":"point-temperature","ts":3600000,"value":70.25,"unit":"C","seq":1}
///
/// Field order is fixed; `ts` is integer epoch milliseconds (UTC) and
/// `value` is the shortest decimal that round-trips the double.
std::string encode_frame(const TelemetryFrame& frame);

/// Total decoder: never crashes on hostile input. Accepts a trailing "\n" or
/// "\r\n". Throws MalformedFrame on parse failure, wrong or missing fields,
/// fields out of order, non-finite values, unknown schema versions and lines
/// longer than kMaxLineBytes.
TelemetryFrame decode_frame(std::string_view line);

/// Shortest round-trip decimal for a finite double.
std::string format_decimal(double value);

}  // namespace cbm::ingest
