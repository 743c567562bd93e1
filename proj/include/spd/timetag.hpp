#ifndef SPD_TIMETAG_HPP
#define SPD_TIMETAG_HPP

#include <cstdint>
#include <iosfwd>
#include <map>
#include <string>
#include <vector>

namespace spd {

// Half-open range of tag indices belonging to one uninterrupted recording.
struct Session {
    std::size_t begin = 0;
    std::size_t end = 0;

    std::size_t count() const { return end - begin; }
};

// A single-channel stream of detection timestamps in integer tick units.
// Ticks are nondecreasing within a session; sessions are independent time
// axes and nothing is ever paired across a session boundary.
struct TagStream {
    std::vector<std::uint64_t> ticks;
    double tick_seconds = 78.125e-12;
    std::vector<Session> sessions;
    std::map<std::string, std::string> meta;

    std::size_t size() const { return ticks.size(); }
    double time_of(std::size_t i) const { return static_cast<double>(ticks[i]) * tick_seconds; }

    // Throws input_error if any invariant is violated.
    void validate() const;
};

enum class TagFormat {
    BinaryTicks, // little-endian uint64 tick counts, no header
    CsvSeconds,  // one timestamp in seconds per line (commas also accepted),
                 // '#'-prefixed lines carry key=value metadata
};

TagStream load_tags(std::istream& in, TagFormat format, double tick_seconds = 78.125e-12);
TagStream load_tags_file(const std::string& path, TagFormat format, double tick_seconds = 78.125e-12);
void serialize(const TagStream& stream, std::ostream& out, TagFormat format);
void serialize_file(const TagStream& stream, const std::string& path, TagFormat format);

// Concatenate streams keeping each input's sessions separate. All inputs
// must share tick_seconds. Tick values are never altered or reordered.
TagStream merge_sessions(const std::vector<TagStream>& streams);

struct SessionStats {
    std::uint64_t counts = 0;
    double live_seconds = 0.0;
    double mean_rate_cps = 0.0;
};

struct StreamStats {
    std::uint64_t total_counts = 0;
    double live_seconds = 0.0;
    double mean_rate_cps = 0.0;
    std::vector<SessionStats> per_session;
};

// Per-session live time defaults to (last tick - first tick); pass explicit
// wall-clock durations when the stream is too sparse for the span to be a
// fair estimate (one entry per session).
StreamStats stream_stats(const TagStream& stream,
                         const std::vector<double>* session_spans = nullptr);

} // namespace spd

#endif
