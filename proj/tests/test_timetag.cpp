#include "spd/errors.hpp"
#include "spd/timetag.hpp"

#include <doctest.h>

#include <cstdint>
#include <sstream>
#include <string>
#include <vector>

using namespace spd;

TEST_CASE("csv loading parses seconds, commas, and metadata") {
    std::istringstream in("# device = apd-1\n"
                          "0.0\n"
                          "1e-6, 2e-6,3e-6\n"
                          "\n"
                          "4e-6\n");
    TagStream s = load_tags(in, TagFormat::CsvSeconds, 1e-6);
    REQUIRE(s.size() == 5);
    CHECK(s.ticks == std::vector<std::uint64_t>{0, 1, 2, 3, 4});
    CHECK(s.meta.at("device") == "apd-1");
    CHECK(s.sessions.size() == 1);
    CHECK(s.sessions[0].count() == 5);
}

TEST_CASE("csv timestamps are quantized to the nearest tick") {
    std::istringstream in("0.0\n1.04e-6\n1.96e-6\n");
    TagStream s = load_tags(in, TagFormat::CsvSeconds, 1e-6);
    CHECK(s.ticks == std::vector<std::uint64_t>{0, 1, 2});
}

TEST_CASE("non-monotone csv input is rejected with the offending index") {
    std::istringstream in("1.0\n2.0\n1.5\n");
    CHECK_THROWS_WITH_AS(load_tags(in, TagFormat::CsvSeconds, 1e-6),
                         "non-monotone timestamp at index 2", input_error);
}

TEST_CASE("malformed csv field reports the line number") {
    std::istringstream in("1.0\nbogus\n");
    CHECK_THROWS_WITH_AS(load_tags(in, TagFormat::CsvSeconds, 1e-6),
                         "malformed record on line 2", input_error);
}

TEST_CASE("binary round trip preserves ticks exactly") {
    TagStream s;
    s.ticks = {0, 7, 1234567890123ULL, 1234567890123ULL, 98765432109876ULL};
    s.sessions = {{0, s.ticks.size()}};
    std::ostringstream out(std::ios::binary);
    serialize(s, out, TagFormat::BinaryTicks);
    CHECK(out.str().size() == s.ticks.size() * 8);
    std::istringstream in(out.str(), std::ios::binary);
    TagStream back = load_tags(in, TagFormat::BinaryTicks);
    CHECK(back.ticks == s.ticks);
}

TEST_CASE("truncated binary record reports the byte offset") {
    std::string bytes(8 + 3, '\0'); // one full record plus a torn one
    std::istringstream in(bytes, std::ios::binary);
    CHECK_THROWS_WITH_AS(load_tags(in, TagFormat::BinaryTicks),
                         "malformed binary record at byte offset 8 (truncated uint64)",
                         input_error);
}

TEST_CASE("merge_sessions keeps inputs in separate sessions") {
    TagStream a, b;
    a.ticks = {0, 10, 20};
    a.sessions = {{0, 3}};
    b.ticks = {5, 6}; // earlier times than stream a: allowed, sessions are independent
    b.sessions = {{0, 2}};
    TagStream m = merge_sessions({a, b});
    REQUIRE(m.sessions.size() == 2);
    CHECK(m.sessions[0].count() == 3);
    CHECK(m.sessions[1].begin == 3);
    CHECK(m.sessions[1].end == 5);
    CHECK(m.ticks == std::vector<std::uint64_t>{0, 10, 20, 5, 6});
}

TEST_CASE("merge_sessions rejects mismatched tick durations") {
    TagStream a, b;
    a.ticks = {0};
    a.sessions = {{0, 1}};
    a.tick_seconds = 1e-6;
    b = a;
    b.tick_seconds = 2e-6;
    CHECK_THROWS_AS(merge_sessions({a, b}), input_error);
}

TEST_CASE("stream_stats uses the tick span by default") {
    TagStream s;
    s.tick_seconds = 1e-6;
    s.ticks = {0, 500000, 1000000, 2000000, 3000000};
    s.sessions = {{0, 3}, {3, 5}};
    StreamStats st = stream_stats(s);
    CHECK(st.total_counts == 5);
    CHECK(st.per_session[0].counts == 3);
    CHECK(st.per_session[0].live_seconds == doctest::Approx(1.0));
    CHECK(st.per_session[1].live_seconds == doctest::Approx(1.0));
    CHECK(st.mean_rate_cps == doctest::Approx(2.5));
}

TEST_CASE("stream_stats honors explicit session durations") {
    TagStream s;
    s.tick_seconds = 1e-6;
    s.ticks = {0, 1000000};
    s.sessions = {{0, 2}};
    std::vector<double> spans{4.0};
    StreamStats st = stream_stats(s, &spans);
    CHECK(st.live_seconds == doctest::Approx(4.0));
    CHECK(st.mean_rate_cps == doctest::Approx(0.5));
}

TEST_CASE("stream_stats rejects counts with zero live time") {
    TagStream s;
    s.ticks = {42};
    s.sessions = {{0, 1}};
    CHECK_THROWS_AS(stream_stats(s), input_error);
}

TEST_CASE("validate rejects gappy session coverage") {
    TagStream s;
    s.ticks = {0, 1, 2};
    s.sessions = {{0, 2}}; // third tick not covered
    CHECK_THROWS_AS(s.validate(), input_error);
}
