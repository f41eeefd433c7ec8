#pragma once

#include <cstdint>
#include <filesystem>
#include <functional>
#include <map>
#include <memory>
#include <optional>
#include <set>
#include <string>
#include <tuple>
#include <vector>

#include "cbm/ingest/channel.hpp"
#include "cbm/telemetry.hpp"

namespace cbm::store {

CBM_DEFINE_ERROR(StorageFull);
CBM_DEFINE_ERROR(IoFailure);
CBM_DEFINE_ERROR(InvalidRange);
CBM_DEFINE_ERROR(RangeUnavailable);
CBM_DEFINE_ERROR(InvalidRetention);
CBM_DEFINE_ERROR(CorruptSegment);

/// FNV-1a, 64-bit.
std::uint64_t fnv1a64(std::string_view bytes, std::uint64_t seed = 0xcbf29ce484222325ULL);

struct RetentionPolicy {
    /// Segments younger than this stay resident in memory.
    Millis hot_window{30 * kDay};
    /// Segments entirely older than this move to the archive.
    Millis archive_window{730 * kDay};
    /// Segments entirely older than this are deleted.
    Millis drop_after{2555 * kDay};

    /// Throws InvalidRetention unless 0 < hot <= archive <= drop.
    void validate() const;
};

struct RetentionResult {
    std::uint64_t archived = 0;  ///< frames moved to archive segments
    std::uint64_t dropped = 0;   ///< frames deleted

    bool operator==(const RetentionResult&) const = default;
};

/// Half-open [start, end).
struct TimeRange {
    Timestamp start;
    Timestamp end;
};

struct ArchiveSegment {
    TimeRange range;
    std::uint64_t frame_count = 0;
    std::uint64_t checksum = 0;
};

struct StoredFrame {
    TelemetryFrame frame;
    /// Present when ingest replaced the value; `frame` keeps the original.
    std::optional<ingest::SubstitutionRecord> substitution;
};

enum class Durability {
    fsync,  ///< every append reaches the disk before returning
    flush   ///< appends reach the OS; fsync on close and on rotation
};

struct StoreConfig {
    std::filesystem::path root;
    std::optional<std::uint64_t> quota_bytes;
    Durability durability = Durability::fsync;
};

/// Segmented append-only telemetry log.
///
/// Layout under `root`:
///   hot/<yyyy-mm-dd>.log        wire-format lines, one UTC day per segment
///   archive/<yyyy-mm-dd>.log    same lines, immutable
///   archive/<yyyy-mm-dd>.meta   {"v":1,"start":..,"end":..,"frames":..,"fnv1a64":"<hex>"}
///   quarantine.log              wire line, TAB, reason
///   substitutions.log           one JSON object per substituted frame
///   retention.json              {"v":1,"dropped_before":<ms>}
///
/// One writer at a time; readers see whole appended lines.
class Store {
  public:
    explicit Store(StoreConfig config);
    ~Store();
    Store(const Store&) = delete;
    Store& operator=(const Store&) = delete;

    /// Returns false for an exact (asset, sensor, seq) duplicate, which is
    /// not stored again.
    bool append(const TelemetryFrame& frame, const std::optional<ingest::SubstitutionRecord>& substitution = {});
    void quarantine(const TelemetryFrame& frame, ingest::QuarantineReason reason);

    /// Frames of one sensor in [start, end), ascending by (ts, seq).
    std::vector<StoredFrame> query(const std::string& asset, const std::string& sensor, Timestamp start,
                                   Timestamp end) const;

    RetentionResult apply_retention(const RetentionPolicy& policy, Timestamp now);

    /// Delivers every frame in [start, end) in stored order. Throws
    /// RangeUnavailable when the range reaches into dropped data.
    void replay(TimeRange range, const std::function<void(const StoredFrame&)>& sink) const;

    std::vector<ArchiveSegment> archive_segments() const;
    /// Re-reads every archive segment and compares checksums. Throws
    /// CorruptSegment on the first mismatch.
    void verify_archive() const;

    std::vector<std::pair<TelemetryFrame, ingest::QuarantineReason>> quarantined() const;
    std::optional<Timestamp> dropped_before() const { return dropped_before_; }
    std::uint64_t frame_count() const { return keys_.size(); }
    std::uint64_t bytes_used() const { return bytes_used_; }
    void sync();

  private:
    using Key = std::tuple<std::string, std::string, std::uint64_t>;
    struct Segment;

    Segment& segment_for(Timestamp ts);
    std::vector<StoredFrame>& frames_of(const Segment& seg) const;
    void load();
    void write_watermark();

    StoreConfig config_;
    std::map<std::int64_t, std::unique_ptr<Segment>> hot_;      ///< keyed by day start (ms)
    std::map<std::int64_t, ArchiveSegment> archive_;
    std::set<Key> keys_;
    std::map<Key, ingest::SubstitutionRecord> substitutions_;
    std::optional<Timestamp> dropped_before_;
    std::uint64_t bytes_used_ = 0;
};

/// Day boundaries in UTC.
Timestamp day_start(Timestamp t);
std::string day_name(Timestamp day);

}  // namespace cbm::store
