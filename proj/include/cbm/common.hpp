#pragma once

#include <chrono>
#include <cmath>
#include <cstdint>
#include <stdexcept>
#include <string>

namespace cbm {

/// Wall and simulation clocks share one representation: UTC milliseconds.
using Millis = std::chrono::milliseconds;
using Timestamp = std::chrono::sys_time<Millis>;
/// Fractional hours, the unit used by every rate and lifetime parameter.
using Hours = std::chrono::duration<double, std::ratio<3600>>;

inline constexpr Millis kHour{3'600'000};
inline constexpr Millis kDay{86'400'000};

inline Timestamp from_epoch_ms(std::int64_t ms) { return Timestamp{Millis{ms}}; }
inline std::int64_t epoch_ms(Timestamp t) { return t.time_since_epoch().count(); }

/// Rounds to the nearest millisecond.
inline Millis to_millis(Hours h) { return Millis{std::llround(h.count() * 3.6e6)}; }
inline double to_hours(Millis d) { return static_cast<double>(d.count()) / 3.6e6; }

/// Base of every error raised by the engine. Each module derives its own
/// named failures from this so callers can catch by module or by kind.
class Error : public std::runtime_error {
  public:
    using std::runtime_error::runtime_error;
};

#define CBM_DEFINE_ERROR(Name)                                                          \
    class Name : public ::cbm::Error {                                                 \
      public:                                                                          \
        explicit Name(const std::string& what) : ::cbm::Error(#Name ": " + what) {}    \
    }

enum class Severity { advisory = 0, warning = 1, critical = 2 };

const char* to_string(Severity s);
Severity severity_from_string(const std::string& s);

}  // namespace cbm
