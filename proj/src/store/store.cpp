#include "cbm/store/store.hpp"

#include <unistd.h>

#include <algorithm>
#include <cerrno>
#include <cstdio>
#include <cstring>
#include <fstream>
#include <sstream>

#include <fmt/format.h>
#include <nlohmann/json.hpp>

#include "cbm/ingest/wire.hpp"

namespace cbm::store {

namespace fs = std::filesystem;
using nlohmann::json;
using nlohmann::ordered_json;

std::uint64_t fnv1a64(std::string_view bytes, std::uint64_t seed) {
    std::uint64_t h = seed;
    for (unsigned char c : bytes) {
        h ^= c;
        h *= 0x100000001b3ULL;
    }
    return h;
}

void RetentionPolicy::validate() const {
    if (!(hot_window > Millis{0} && hot_window <= archive_window && archive_window <= drop_after)) {
        throw InvalidRetention("require 0 < hot_window <= archive_window <= drop_after");
    }
}

Timestamp day_start(Timestamp t) {
    return std::chrono::floor<std::chrono::days>(t);
}

std::string day_name(Timestamp day) {
    const std::chrono::year_month_day ymd{std::chrono::floor<std::chrono::days>(day)};
    return fmt::format("{:04d}-{:02d}-{:02d}", static_cast<int>(ymd.year()), static_cast<unsigned>(ymd.month()),
                       static_cast<unsigned>(ymd.day()));
}

namespace {

std::optional<Timestamp> parse_day_name(const std::string& stem) {
    int y = 0;
    unsigned m = 0, d = 0;
    if (std::sscanf(stem.c_str(), "%d-%u-%u", &y, &m, &d) != 3) return std::nullopt;
    const std::chrono::year_month_day ymd{std::chrono::year{y}, std::chrono::month{m}, std::chrono::day{d}};
    if (!ymd.ok()) return std::nullopt;
    return Timestamp{std::chrono::sys_days{ymd}};
}

std::string read_all(const fs::path& p) {
    std::ifstream in(p, std::ios::binary);
    if (!in) throw IoFailure("cannot read " + p.string());
    std::stringstream ss;
    ss << in.rdbuf();
    return ss.str();
}

void write_durably(const fs::path& p, const std::string& bytes) {
    const fs::path tmp = p.string() + ".tmp";
    std::FILE* f = std::fopen(tmp.c_str(), "wb");
    if (!f) throw IoFailure("cannot create " + tmp.string() + ": " + std::strerror(errno));
    const bool ok = std::fwrite(bytes.data(), 1, bytes.size(), f) == bytes.size() && std::fflush(f) == 0 &&
                    ::fsync(fileno(f)) == 0;
    std::fclose(f);
    if (!ok) throw IoFailure("cannot write " + tmp.string());
    std::error_code ec;
    fs::rename(tmp, p, ec);
    if (ec) throw IoFailure("cannot rename " + tmp.string() + ": " + ec.message());
}

std::vector<std::string> split_lines(const std::string& text) {
    std::vector<std::string> out;
    std::size_t pos = 0;
    while (pos < text.size()) {
        const auto nl = text.find('\n', pos);
        if (nl == std::string::npos) break;  // a torn final line is ignored
        out.push_back(text.substr(pos, nl - pos));
        pos = nl + 1;
    }
    return out;
}

std::vector<TelemetryFrame> decode_segment(const std::string& text, const fs::path& p) {
    std::vector<TelemetryFrame> frames;
    for (const auto& line : split_lines(text)) {
        try {
            frames.push_back(ingest::decode_frame(line));
        } catch (const ingest::MalformedFrame& e) {
            throw CorruptSegment(p.string() + ": " + e.what());
        }
    }
    return frames;
}

ingest::QuarantineReason quarantine_reason_from_string(const std::string& s) {
    if (s == "out-of-order") return ingest::QuarantineReason::out_of_order;
    if (s == "stale") return ingest::QuarantineReason::stale;
    throw CorruptSegment("unknown quarantine reason '" + s + "'");
}

ingest::SubstitutionMethod substitution_method_from_string(const std::string& s) {
    if (s == "rolling-median") return ingest::SubstitutionMethod::rolling_median;
    if (s == "last-good") return ingest::SubstitutionMethod::last_good;
    throw CorruptSegment("unknown substitution method '" + s + "'");
}

}  // namespace

struct Store::Segment {
    Timestamp day;
    fs::path path;
    std::FILE* file = nullptr;
    mutable std::optional<std::vector<StoredFrame>> frames;  ///< empty while evicted

    ~Segment() {
        if (file) std::fclose(file);
    }
};

Store::Store(StoreConfig config) : config_(std::move(config)) {
    std::error_code ec;
    fs::create_directories(config_.root / "hot", ec);
    fs::create_directories(config_.root / "archive", ec);
    if (ec) throw IoFailure("cannot create store at " + config_.root.string() + ": " + ec.message());
    load();
}

Store::~Store() {
    try {
        sync();
    } catch (...) {
    }
}

void Store::load() {
    const fs::path wm = config_.root / "retention.json";
    if (fs::exists(wm)) {
        const auto doc = json::parse(read_all(wm));
        if (!doc.at("dropped_before").is_null()) dropped_before_ = from_epoch_ms(doc.at("dropped_before").get<std::int64_t>());
    }
    const fs::path subs = config_.root / "substitutions.log";
    if (fs::exists(subs)) {
        for (const auto& line : split_lines(read_all(subs))) {
            const auto j = json::parse(line);
            ingest::SubstitutionRecord r;
            r.original = ingest::decode_frame(j.at("frame").get<std::string>());
            r.substituted_value = j.at("value").get<double>();
            r.method = substitution_method_from_string(j.at("method").get<std::string>());
            r.at = from_epoch_ms(j.at("at").get<std::int64_t>());
            substitutions_[{r.original.asset, r.original.sensor, r.original.seq}] = r;
        }
    }
    for (const auto& entry : fs::directory_iterator(config_.root / "archive")) {
        if (entry.path().extension() != ".meta") continue;
        const auto meta = json::parse(read_all(entry.path()));
        ArchiveSegment a;
        a.range = {from_epoch_ms(meta.at("start").get<std::int64_t>()), from_epoch_ms(meta.at("end").get<std::int64_t>())};
        a.frame_count = meta.at("frames").get<std::uint64_t>();
        a.checksum = std::stoull(meta.at("fnv1a64").get<std::string>(), nullptr, 16);
        const fs::path log = fs::path(entry.path()).replace_extension(".log");
        const auto text = read_all(log);
        bytes_used_ += text.size();
        for (const auto& f : decode_segment(text, log)) keys_.insert({f.asset, f.sensor, f.seq});
        archive_[epoch_ms(a.range.start)] = a;
    }
    for (const auto& entry : fs::directory_iterator(config_.root / "hot")) {
        if (entry.path().extension() != ".log") continue;
        const auto day = parse_day_name(entry.path().stem().string());
        if (!day) continue;
        auto seg = std::make_unique<Segment>();
        seg->day = *day;
        seg->path = entry.path();
        const auto text = read_all(seg->path);
        bytes_used_ += text.size();
        std::vector<StoredFrame> frames;
        for (auto& f : decode_segment(text, seg->path)) {
            Key k{f.asset, f.sensor, f.seq};
            keys_.insert(k);
            auto it = substitutions_.find(k);
            frames.push_back({std::move(f), it == substitutions_.end() ? std::nullopt : std::optional(it->second)});
        }
        seg->frames = std::move(frames);
        hot_[epoch_ms(*day)] = std::move(seg);
    }
    const fs::path q = config_.root / "quarantine.log";
    if (fs::exists(q)) bytes_used_ += fs::file_size(q);
    if (fs::exists(subs)) bytes_used_ += fs::file_size(subs);
}

Store::Segment& Store::segment_for(Timestamp ts) {
    const Timestamp day = day_start(ts);
    auto& slot = hot_[epoch_ms(day)];
    if (!slot) {
        if (archive_.count(epoch_ms(day)) || (dropped_before_ && day < *dropped_before_)) {
            hot_.erase(epoch_ms(day));
            throw IoFailure("segment " + day_name(day) + " is archived or dropped; append refused");
        }
        slot = std::make_unique<Segment>();
        slot->day = day;
        slot->path = config_.root / "hot" / (day_name(day) + ".log");
        slot->frames.emplace();
    }
    return *slot;
}

std::vector<StoredFrame>& Store::frames_of(const Segment& seg) const {
    if (!seg.frames) {
        std::vector<StoredFrame> frames;
        for (auto& f : decode_segment(read_all(seg.path), seg.path)) {
            auto it = substitutions_.find({f.asset, f.sensor, f.seq});
            frames.push_back({std::move(f), it == substitutions_.end() ? std::nullopt : std::optional(it->second)});
        }
        seg.frames = std::move(frames);
    }
    return *seg.frames;
}

namespace {

void append_line(std::FILE*& file, const fs::path& path, const std::string& line, Durability durability) {
    if (!file) {
        file = std::fopen(path.c_str(), "ab");
        if (!file) throw IoFailure("cannot open " + path.string() + ": " + std::strerror(errno));
    }
    if (std::fwrite(line.data(), 1, line.size(), file) != line.size() || std::fflush(file) != 0) {
        throw IoFailure("write to " + path.string() + " failed: " + std::strerror(errno));
    }
    if (durability == Durability::fsync && ::fsync(fileno(file)) != 0) {
        throw IoFailure("fsync of " + path.string() + " failed: " + std::strerror(errno));
    }
}

void append_to(const fs::path& path, const std::string& line, Durability durability) {
    std::FILE* f = nullptr;
    try {
        append_line(f, path, line, durability);
    } catch (...) {
        if (f) std::fclose(f);
        throw;
    }
    std::fclose(f);
}

}  // namespace

bool Store::append(const TelemetryFrame& frame, const std::optional<ingest::SubstitutionRecord>& substitution) {
    Key key{frame.asset, frame.sensor, frame.seq};
    if (keys_.count(key)) return false;
    const std::string line = ingest::encode_frame(frame) + "\n";
    std::string sub_line;
    if (substitution) {
        ordered_json j;
        j["frame"] = ingest::encode_frame(frame);
        j["value"] = substitution->substituted_value;
        j["method"] = ingest::to_string(substitution->method);
        j["at"] = epoch_ms(substitution->at);
        sub_line = j.dump() + "\n";
    }
    if (config_.quota_bytes && bytes_used_ + line.size() + sub_line.size() > *config_.quota_bytes) {
        throw StorageFull(fmt::format("quota of {} bytes reached", *config_.quota_bytes));
    }
    Segment& seg = segment_for(frame.ts);
    auto& frames = frames_of(seg);
    // The substitution link is written first so a crash never leaves a
    // substituted frame looking like a raw reading.
    if (substitution) append_to(config_.root / "substitutions.log", sub_line, config_.durability);
    append_line(seg.file, seg.path, line, config_.durability);
    bytes_used_ += line.size() + sub_line.size();
    keys_.insert(key);
    if (substitution) substitutions_[key] = *substitution;
    frames.push_back({frame, substitution});
    return true;
}

void Store::quarantine(const TelemetryFrame& frame, ingest::QuarantineReason reason) {
    std::string line = ingest::encode_frame(frame);
    line += '\t';
    line += ingest::to_string(reason);
    line += '\n';
    if (config_.quota_bytes && bytes_used_ + line.size() > *config_.quota_bytes) {
        throw StorageFull(fmt::format("quota of {} bytes reached", *config_.quota_bytes));
    }
    append_to(config_.root / "quarantine.log", line, config_.durability);
    bytes_used_ += line.size();
}

std::vector<std::pair<TelemetryFrame, ingest::QuarantineReason>> Store::quarantined() const {
    std::vector<std::pair<TelemetryFrame, ingest::QuarantineReason>> out;
    const fs::path q = config_.root / "quarantine.log";
    if (!fs::exists(q)) return out;
    for (const auto& line : split_lines(read_all(q))) {
        const auto tab = line.rfind('\t');
        if (tab == std::string::npos) throw CorruptSegment("quarantine line without reason column");
        out.emplace_back(ingest::decode_frame(line.substr(0, tab)), quarantine_reason_from_string(line.substr(tab + 1)));
    }
    return out;
}

std::vector<StoredFrame> Store::query(const std::string& asset, const std::string& sensor, Timestamp start,
                                      Timestamp end) const {
    if (start > end) throw InvalidRange("start is after end");
    std::vector<StoredFrame> out;
    if (start == end) return out;
    auto take = [&](const StoredFrame& f) {
        if (f.frame.asset == asset && f.frame.sensor == sensor && f.frame.ts >= start && f.frame.ts < end) {
            out.push_back(f);
        }
    };
    replay({start, end}, take);
    std::stable_sort(out.begin(), out.end(), [](const StoredFrame& a, const StoredFrame& b) {
        return std::tie(a.frame.ts, a.frame.seq) < std::tie(b.frame.ts, b.frame.seq);
    });
    return out;
}

void Store::replay(TimeRange range, const std::function<void(const StoredFrame&)>& sink) const {
    if (range.start > range.end) throw InvalidRange("start is after end");
    if (range.start == range.end) return;
    if (dropped_before_ && range.start < *dropped_before_) {
        throw RangeUnavailable("data before " + day_name(*dropped_before_) + " has been dropped");
    }
    const std::int64_t first = epoch_ms(day_start(range.start));
    std::map<std::int64_t, const Segment*> hot_days;
    for (auto it = hot_.lower_bound(first); it != hot_.end() && it->second->day < range.end; ++it) {
        hot_days[it->first] = it->second.get();
    }
    auto a = archive_.lower_bound(first);
    auto h = hot_days.begin();
    while (a != archive_.end() || h != hot_days.end()) {
        const bool take_archive = h == hot_days.end() || (a != archive_.end() && a->first < h->first);
        if (take_archive) {
            if (a->second.range.start >= range.end) {
                a = archive_.end();
                continue;
            }
            const fs::path log = config_.root / "archive" / (day_name(a->second.range.start) + ".log");
            const auto text = read_all(log);
            if (fnv1a64(text) != a->second.checksum) throw CorruptSegment("checksum mismatch in " + log.string());
            for (auto& f : decode_segment(text, log)) {
                if (f.ts < range.start || f.ts >= range.end) continue;
                auto it = substitutions_.find({f.asset, f.sensor, f.seq});
                sink({std::move(f), it == substitutions_.end() ? std::nullopt : std::optional(it->second)});
            }
            ++a;
        } else {
            for (const auto& f : frames_of(*h->second)) {
                if (f.frame.ts >= range.start && f.frame.ts < range.end) sink(f);
            }
            ++h;
        }
    }
}

RetentionResult Store::apply_retention(const RetentionPolicy& policy, Timestamp now) {
    policy.validate();
    RetentionResult result;
    const Timestamp drop_cut = now - policy.drop_after;
    const Timestamp archive_cut = now - policy.archive_window;
    const Timestamp hot_cut = now - policy.hot_window;
    std::optional<Timestamp> new_watermark;
    auto raise_watermark = [&](Timestamp t) {
        if (!new_watermark || t > *new_watermark) new_watermark = t;
    };

    for (auto it = archive_.begin(); it != archive_.end();) {
        if (it->second.range.end > drop_cut) {
            ++it;
            continue;
        }
        const fs::path log = config_.root / "archive" / (day_name(it->second.range.start) + ".log");
        std::error_code ec;
        const auto size = fs::file_size(log, ec);
        if (!ec) bytes_used_ -= std::min<std::uint64_t>(bytes_used_, size);
        // Meta first: a segment without meta is ignored on load.
        if (!fs::remove(fs::path(log).replace_extension(".meta"), ec) && ec) throw IoFailure(ec.message());
        fs::remove(log, ec);
        result.dropped += it->second.frame_count;
        raise_watermark(it->second.range.end);
        it = archive_.erase(it);
    }

    for (auto it = hot_.begin(); it != hot_.end();) {
        Segment& seg = *it->second;
        const Timestamp seg_end = seg.day + kDay;
        if (seg_end > archive_cut) {
            if (seg_end <= hot_cut && seg.frames) {
                if (seg.file) {
                    ::fsync(fileno(seg.file));
                    std::fclose(seg.file);
                    seg.file = nullptr;
                }
                seg.frames.reset();
            }
            ++it;
            continue;
        }
        if (seg.file) {
            std::fclose(seg.file);
            seg.file = nullptr;
        }
        const auto text = read_all(seg.path);
        const auto count = static_cast<std::uint64_t>(std::count(text.begin(), text.end(), '\n'));
        std::error_code ec;
        if (seg_end <= drop_cut) {
            fs::remove(seg.path, ec);
            if (ec) throw IoFailure("cannot remove " + seg.path.string() + ": " + ec.message());
            bytes_used_ -= std::min<std::uint64_t>(bytes_used_, text.size());
            result.dropped += count;
            raise_watermark(seg_end);
        } else {
            const fs::path log = config_.root / "archive" / (day_name(seg.day) + ".log");
            write_durably(log, text);
            ordered_json meta;
            meta["v"] = 1;
            meta["start"] = epoch_ms(seg.day);
            meta["end"] = epoch_ms(seg_end);
            meta["frames"] = count;
            meta["fnv1a64"] = fmt::format("{:016x}", fnv1a64(text));
            write_durably(fs::path(log).replace_extension(".meta"), meta.dump() + "\n");
            fs::remove(seg.path, ec);
            if (ec) throw IoFailure("cannot remove " + seg.path.string() + ": " + ec.message());
            archive_[epoch_ms(seg.day)] = {{seg.day, seg_end}, count, fnv1a64(text)};
            result.archived += count;
        }
        it = hot_.erase(it);
    }

    if (new_watermark && (!dropped_before_ || *new_watermark > *dropped_before_)) {
        dropped_before_ = new_watermark;
        write_watermark();
    }
    return result;
}

void Store::write_watermark() {
    ordered_json j;
    j["v"] = 1;
    j["dropped_before"] = dropped_before_ ? ordered_json(epoch_ms(*dropped_before_)) : ordered_json(nullptr);
    write_durably(config_.root / "retention.json", j.dump() + "\n");
}

std::vector<ArchiveSegment> Store::archive_segments() const {
    std::vector<ArchiveSegment> out;
    for (const auto& [day, seg] : archive_) out.push_back(seg);
    return out;
}

void Store::verify_archive() const {
    for (const auto& [day, seg] : archive_) {
        const fs::path log = config_.root / "archive" / (day_name(seg.range.start) + ".log");
        if (fnv1a64(read_all(log)) != seg.checksum) throw CorruptSegment("checksum mismatch in " + log.string());
    }
}

void Store::sync() {
    for (auto& [day, seg] : hot_) {
        if (seg->file) {
            std::fflush(seg->file);
            ::fsync(fileno(seg->file));
        }
    }
}

}  // namespace cbm::store
