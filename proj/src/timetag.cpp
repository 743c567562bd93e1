#include "spd/timetag.hpp"

#include "spd/errors.hpp"

#include <cmath>
#include <cstring>
#include <fstream>
#include <istream>
#include <ostream>
#include <sstream>

namespace spd {

void TagStream::validate() const {
    if (!(tick_seconds > 0.0))
        throw input_error("tick_seconds must be positive");
    if (sessions.empty())
        throw input_error("stream must contain at least one session");
    std::size_t expect = 0;
    for (std::size_t s = 0; s < sessions.size(); ++s) {
        const Session& ses = sessions[s];
        if (ses.begin != expect || ses.end < ses.begin)
            throw input_error("sessions must be disjoint, ordered, and cover all ticks");
        for (std::size_t i = ses.begin + 1; i < ses.end; ++i) {
            if (ticks[i] < ticks[i - 1])
                throw input_error("non-monotone ticks at index " + std::to_string(i) +
                                  " in session " + std::to_string(s));
        }
        expect = ses.end;
    }
    if (expect != ticks.size())
        throw input_error("sessions do not cover every tick");
}

namespace {

TagStream load_binary(std::istream& in, double tick_seconds) {
    TagStream s;
    s.tick_seconds = tick_seconds;
    char buf[8];
    std::size_t index = 0;
    for (;;) {
        in.read(buf, 8);
        std::streamsize got = in.gcount();
        if (got == 0)
            break;
        if (got != 8)
            throw input_error("malformed binary record at byte offset " +
                              std::to_string(index * 8) + " (truncated uint64)");
        std::uint64_t v = 0;
        for (int b = 7; b >= 0; --b)
            v = (v << 8) | static_cast<unsigned char>(buf[b]);
        if (!s.ticks.empty() && v < s.ticks.back())
            throw input_error("non-monotone timestamp at index " + std::to_string(index));
        s.ticks.push_back(v);
        ++index;
    }
    s.sessions.push_back({0, s.ticks.size()});
    return s;
}

TagStream load_csv(std::istream& in, double tick_seconds) {
    TagStream s;
    s.tick_seconds = tick_seconds;
    std::string line;
    std::size_t line_no = 0;
    std::size_t index = 0;
    double prev = -1.0;
    while (std::getline(in, line)) {
        ++line_no;
        if (line.empty())
            continue;
        if (line[0] == '#') {
            auto eq = line.find('=');
            if (eq != std::string::npos) {
                std::string key = line.substr(1, eq - 1);
                std::string val = line.substr(eq + 1);
                auto strip = [](std::string& t) {
                    while (!t.empty() && (t.front() == ' ' || t.front() == '\t')) t.erase(t.begin());
                    while (!t.empty() && (t.back() == ' ' || t.back() == '\r' || t.back() == '\t')) t.pop_back();
                };
                strip(key);
                strip(val);
                if (!key.empty())
                    s.meta[key] = val;
            }
            continue;
        }
        std::string field;
        std::istringstream ls(line);
        while (std::getline(ls, field, ',')) {
            // skip fields that are pure whitespace (trailing commas etc.)
            if (field.find_first_not_of(" \t\r") == std::string::npos)
                continue;
            std::size_t pos = 0;
            double t;
            try {
                t = std::stod(field, &pos);
            } catch (const std::exception&) {
                throw input_error("malformed record on line " + std::to_string(line_no));
            }
            if (field.find_first_not_of(" \t\r", pos) != std::string::npos)
                throw input_error("malformed record on line " + std::to_string(line_no));
            if (t < prev)
                throw input_error("non-monotone timestamp at index " + std::to_string(index));
            prev = t;
            s.ticks.push_back(static_cast<std::uint64_t>(std::llround(t / tick_seconds)));
            ++index;
        }
    }
    s.sessions.push_back({0, s.ticks.size()});
    return s;
}

} // namespace

TagStream load_tags(std::istream& in, TagFormat format, double tick_seconds) {
    if (!(tick_seconds > 0.0))
        throw input_error("tick_seconds must be positive");
    TagStream s = format == TagFormat::BinaryTicks ? load_binary(in, tick_seconds)
                                                   : load_csv(in, tick_seconds);
    s.validate();
    return s;
}

TagStream load_tags_file(const std::string& path, TagFormat format, double tick_seconds) {
    std::ifstream f(path, format == TagFormat::BinaryTicks ? std::ios::binary : std::ios::in);
    if (!f)
        throw io_error("cannot open " + path);
    return load_tags(f, format, tick_seconds);
}

void serialize(const TagStream& stream, std::ostream& out, TagFormat format) {
    if (format == TagFormat::BinaryTicks) {
        for (std::uint64_t v : stream.ticks) {
            char buf[8];
            for (int b = 0; b < 8; ++b)
                buf[b] = static_cast<char>((v >> (8 * b)) & 0xff);
            out.write(buf, 8);
        }
    } else {
        out.precision(17);
        for (const auto& [k, v] : stream.meta)
            out << "# " << k << "=" << v << "\n";
        for (std::uint64_t v : stream.ticks)
            out << static_cast<double>(v) * stream.tick_seconds << "\n";
    }
    if (!out)
        throw io_error("write failure while serializing tag stream");
}

void serialize_file(const TagStream& stream, const std::string& path, TagFormat format) {
    std::ofstream f(path, format == TagFormat::BinaryTicks ? std::ios::binary : std::ios::out);
    if (!f)
        throw io_error("cannot open " + path + " for writing");
    serialize(stream, f, format);
}

TagStream merge_sessions(const std::vector<TagStream>& streams) {
    if (streams.empty())
        throw input_error("merge_sessions requires at least one stream");
    TagStream out;
    out.tick_seconds = streams.front().tick_seconds;
    for (const TagStream& s : streams) {
        if (s.tick_seconds != out.tick_seconds)
            throw input_error("merge_sessions: mismatched tick_seconds");
        std::size_t base = out.ticks.size();
        out.ticks.insert(out.ticks.end(), s.ticks.begin(), s.ticks.end());
        for (const Session& ses : s.sessions)
            out.sessions.push_back({base + ses.begin, base + ses.end});
        for (const auto& [k, v] : s.meta)
            out.meta.emplace(k, v); // first stream wins on conflicts
    }
    out.validate();
    return out;
}

StreamStats stream_stats(const TagStream& stream, const std::vector<double>* session_spans) {
    if (session_spans && session_spans->size() != stream.sessions.size())
        throw input_error("explicit session durations must match the session count");
    StreamStats st;
    for (std::size_t s = 0; s < stream.sessions.size(); ++s) {
        const Session& ses = stream.sessions[s];
        SessionStats ss;
        ss.counts = ses.count();
        if (session_spans) {
            ss.live_seconds = (*session_spans)[s];
        } else if (ses.count() >= 2) {
            ss.live_seconds =
                static_cast<double>(stream.ticks[ses.end - 1] - stream.ticks[ses.begin]) *
                stream.tick_seconds;
        }
        ss.mean_rate_cps = ss.live_seconds > 0.0 ? static_cast<double>(ss.counts) / ss.live_seconds : 0.0;
        st.total_counts += ss.counts;
        st.live_seconds += ss.live_seconds;
        st.per_session.push_back(ss);
    }
    if (st.total_counts > 0 && !(st.live_seconds > 0.0))
        throw input_error("zero live time with nonzero counts; supply explicit session durations");
    st.mean_rate_cps =
        st.live_seconds > 0.0 ? static_cast<double>(st.total_counts) / st.live_seconds : 0.0;
    return st;
}

} // namespace spd
