#include "doctest.h"

#include <cstdio>
#include <cstdlib>
#include <filesystem>
#include <fstream>

#include "ppm/eventlog.hpp"
#include "support/synthetic.hpp"

using namespace ppm::eventlog;

namespace {

const std::string kData = PPM_TEST_DATA_DIR;

std::string temp_file(const std::string& name) {
    return (std::filesystem::temp_directory_path() / name).string();
}

void write_file(const std::string& path, const std::string& content) {
    std::ofstream out(path, std::ios::binary);
    out << content;
}

}  // namespace

TEST_CASE("timestamp formats") {
    // 2021-01-01T00:00:00Z == 1609459200
    CHECK(parse_timestamp("2021-01-01T00:00:00Z") == 1609459200.0);
    CHECK(parse_timestamp("2021-01-01 00:00:00") == 1609459200.0);
    CHECK(parse_timestamp("2021-01-01T01:00:00+01:00") == 1609459200.0);
    CHECK(parse_timestamp("2021-01-01T01:00:00+0100") == 1609459200.0);
    CHECK(parse_timestamp("2020-12-31T23:30:00-00:30") == 1609459200.0);
    CHECK(parse_timestamp("2021-01-01T00:00:00.25Z") == 1609459200.25);
    CHECK(parse_timestamp("1609459200") == 1609459200.0);
    CHECK(parse_timestamp("1609459200.5") == 1609459200.5);
    CHECK(!parse_timestamp("01/02/2021"));
    CHECK(!parse_timestamp("2021-13-01T00:00:00"));
    CHECK(!parse_timestamp(""));
}

TEST_CASE("parse_csv: two interleaved cases come out sorted per trace") {
    ParseReport rep;
    EventLog log = parse_csv(kData + "/interleaved.csv", ColumnMap{}, &rep);
    REQUIRE(log.traces.size() == 2);
    CHECK(rep.events == 6);
    CHECK(rep.activities == 4);
    CHECK(rep.roles == 4);

    // hand-sorted fixture: case A by start, case B with a (start, end) tie key
    const Trace& a = log.traces[0];
    REQUIRE(a.case_id == "A");
    CHECK(a.events[0].activity == "check");
    CHECK(a.events[1].activity == "register");
    CHECK(a.events[2].activity == "bill");

    const Trace& b = log.traces[1];
    REQUIRE(b.case_id == "B");
    CHECK(b.events[0].activity == "check");     // 09:00-09:10
    CHECK(b.events[1].activity == "register");  // 09:00-09:20
    CHECK(b.events[2].activity == "ship");
}

TEST_CASE("parse_csv: single-row file gives one trace of length 1") {
    EventLog log = parse_csv(kData + "/single_row.csv", ColumnMap{});
    REQUIRE(log.traces.size() == 1);
    CHECK(log.traces[0].events.size() == 1);
    CHECK(log.traces[0].events[0].end - log.traces[0].events[0].start == 2700.0);
}

TEST_CASE("parse_csv error paths") {
    std::string path = temp_file("ppm_test_bad.csv");

    write_file(path, "case_id,activity,start_timestamp,end_timestamp\nx,a,1,2\n");
    CHECK_THROWS_AS(parse_csv(path, ColumnMap{}), ppm::MissingColumn);

    write_file(path, "case_id,activity,role,start_timestamp,end_timestamp\nx,a,r,notatime,2\n");
    CHECK_THROWS_AS(parse_csv(path, ColumnMap{}), ppm::UnparseableTimestamp);

    write_file(path, "case_id,activity,role,start_timestamp,end_timestamp\n");
    CHECK_THROWS_AS(parse_csv(path, ColumnMap{}), ppm::EmptyLog);

    // rows with end < start are dropped and counted, not fatal
    write_file(path,
               "case_id,activity,role,start_timestamp,end_timestamp\n"
               "x,a,r,100,50\n"
               "x,a,r,100,200\n");
    ParseReport rep;
    EventLog log = parse_csv(path, ColumnMap{}, &rep);
    CHECK(rep.dropped_negative_duration == 1);
    CHECK(rep.events == 1);

    // reserved labels may not appear in raw input
    write_file(path,
               "case_id,activity,role,start_timestamp,end_timestamp\n"
               "x,«start»,r,100,200\n");
    CHECK_THROWS_AS(parse_csv(path, ColumnMap{}), ppm::DataError);

    std::remove(path.c_str());
}

TEST_CASE("vocabulary: reserved labels first, then first-appearance order") {
    EventLog log = parse_csv(kData + "/interleaved.csv", ColumnMap{});
    const Vocabulary& v = *log.activity_vocab;
    CHECK(v.label_of(0) == Vocabulary::kPad);
    CHECK(v.label_of(1) == Vocabulary::kStart);
    CHECK(v.label_of(2) == Vocabulary::kEnd);
    CHECK(v.label_of(3) == Vocabulary::kUnk);
    // first appearance over the grouped, per-trace-sorted log: trace A opens
    // with its earliest event
    CHECK(v.label_of(4) == "check");
    CHECK(v.label_of(5) == "register");
    CHECK(v.label_of(6) == "bill");
    CHECK(v.label_of(7) == "ship");
    CHECK(v.index_of("no-such-label") == Vocabulary::unk_index);

    EventLog again = parse_csv(kData + "/interleaved.csv", ColumnMap{});
    CHECK(again.activity_vocab->labels() == log.activity_vocab->labels());
    CHECK(again.role_vocab->labels() == log.role_vocab->labels());
}

TEST_CASE("split_chronological examples") {
    ppm::nn::Rng rng(99);

    SUBCASE("10 traces with distinct start days -> 7/1/2 in start order") {
        testsupport::EventLog log = testsupport::random_log(rng, 10, 10);
        for (std::size_t i = 0; i < log.traces.size(); ++i)
            for (auto& e : log.traces[i].events) {
                e.start += i * 86400.0;
                e.end += i * 86400.0;
            }
        SplitLog split = split_chronological(log);
        CHECK(split.train.traces.size() == 7);
        CHECK(split.validation.traces.size() == 1);
        CHECK(split.test.traces.size() == 2);
        // chronological: every train case starts no later than validation, etc.
        double t_max = 0;
        for (const auto& t : split.train.traces) t_max = std::max(t_max, t.events.front().start);
        CHECK(t_max <= split.validation.traces.front().events.front().start);
        CHECK(split.validation.traces.back().events.front().start <=
              split.test.traces.front().events.front().start);
        CHECK(split.train.activity_vocab == log.activity_vocab);  // shared, not copied
    }

    SUBCASE("608 traces -> 425/60/123 by floor arithmetic") {
        testsupport::EventLog log = testsupport::random_log(rng, 608, 608);
        SplitLog split = split_chronological(log);
        CHECK(split.train.traces.size() == 425);
        CHECK(split.validation.traces.size() == 60);
        CHECK(split.test.traces.size() == 123);
    }

    SUBCASE("identical timestamps split by file order, stable") {
        testsupport::EventLog log = testsupport::random_log(rng, 10, 10);
        for (auto& t : log.traces) {
            double shift = t.events.front().start - 1.6e9;
            for (auto& e : t.events) {
                e.start -= shift;
                e.end -= shift;
            }
        }
        SplitLog split = split_chronological(log);
        for (int i = 0; i < 7; ++i) CHECK(split.train.traces[i].case_id == log.traces[i].case_id);
        CHECK(split.validation.traces[0].case_id == log.traces[7].case_id);
        CHECK(split.test.traces[0].case_id == log.traces[8].case_id);
    }

    SUBCASE("fewer than 3 traces is an error") {
        testsupport::EventLog log = testsupport::random_log(rng, 2, 2);
        CHECK_THROWS_AS(split_chronological(log), ppm::TooFewTraces);
    }
}

TEST_CASE("round-trip: a parsed log written back to CSV re-parses identically") {
    EventLog parsed = parse_csv(kData + "/interleaved.csv", ColumnMap{});
    std::string p = temp_file("ppm_parsed_roundtrip.csv");
    write_csv(parsed, p);
    EventLog back = parse_csv(p, ColumnMap{});
    REQUIRE(back.traces.size() == parsed.traces.size());
    for (std::size_t i = 0; i < parsed.traces.size(); ++i) {
        REQUIRE(back.traces[i].case_id == parsed.traces[i].case_id);
        for (std::size_t j = 0; j < parsed.traces[i].events.size(); ++j) {
            const Event& x = parsed.traces[i].events[j];
            const Event& y = back.traces[i].events[j];
            REQUIRE(x.activity == y.activity);
            REQUIRE(x.role == y.role);
            REQUIRE(x.start == y.start);
            REQUIRE(x.end == y.end);
        }
    }
    REQUIRE(back.activity_vocab->labels() == parsed.activity_vocab->labels());
    std::remove(p.c_str());
}

TEST_CASE("round-trip: write_csv then parse_csv reproduces the log field-for-field") {
    ppm::nn::Rng rng(123);
    for (int rep = 0; rep < 10; ++rep) {
        testsupport::EventLog log = testsupport::random_log(rng, 3, 40);
        std::string path = temp_file("ppm_roundtrip.csv");
        write_csv(log, path);
        EventLog back = parse_csv(path, ColumnMap{});
        REQUIRE(back.traces.size() == log.traces.size());
        for (std::size_t i = 0; i < log.traces.size(); ++i) {
            REQUIRE(back.traces[i].case_id == log.traces[i].case_id);
            REQUIRE(back.traces[i].events.size() == log.traces[i].events.size());
            for (std::size_t j = 0; j < log.traces[i].events.size(); ++j) {
                const Event& x = log.traces[i].events[j];
                const Event& y = back.traces[i].events[j];
                REQUIRE(x.activity == y.activity);
                REQUIRE(x.role == y.role);
                REQUIRE(x.start == y.start);
                REQUIRE(x.end == y.end);
            }
        }
        REQUIRE(back.activity_vocab->labels() == log.activity_vocab->labels());
        REQUIRE(back.role_vocab->labels() == log.role_vocab->labels());
        std::remove(path.c_str());
    }
}

TEST_CASE("split_chronological is a partition for random logs") {
    ppm::nn::Rng rng(321);
    for (int rep = 0; rep < 25; ++rep) {
        testsupport::EventLog log = testsupport::random_log(rng, 3, 500);
        SplitLog split = split_chronological(log);
        std::size_t n = log.traces.size();
        CHECK(split.train.traces.size() + split.validation.traces.size() + split.test.traces.size() == n);
        CHECK(split.train.traces.size() == static_cast<std::size_t>(0.7 * n));
        CHECK(split.validation.traces.size() == static_cast<std::size_t>(0.1 * n));

        std::vector<std::string> seen;
        for (const auto* part : {&split.train, &split.validation, &split.test})
            for (const auto& t : part->traces) seen.push_back(t.case_id);
        std::sort(seen.begin(), seen.end());
        CHECK(std::adjacent_find(seen.begin(), seen.end()) == seen.end());  // no duplicates
        std::vector<std::string> expected;
        for (const auto& t : log.traces) expected.push_back(t.case_id);
        std::sort(expected.begin(), expected.end());
        CHECK(seen == expected);  // nothing lost
    }
}

// Set PPM_P2P_CSV to the downloaded P2P log to run this check; the dataset
// is not redistributed with the repository.
TEST_CASE("P2P log statistics (optional, needs PPM_P2P_CSV)") {
    const char* path = std::getenv("PPM_P2P_CSV");
    if (!path || !std::filesystem::exists(path)) return;
    ParseReport rep;
    EventLog log = parse_csv(path, ColumnMap{}, &rep);
    CHECK(rep.traces == 608);
    CHECK(rep.events == 9119);
    CHECK(rep.activities == 21);
    CHECK(rep.roles == 27);
    SplitLog split = split_chronological(log);
    CHECK(split.train.traces.size() == 425);
    CHECK(split.validation.traces.size() == 60);
    CHECK(split.test.traces.size() == 123);
}

TEST_CASE("total event count equals the sum of trace lengths") {
    EventLog log = parse_csv(kData + "/interleaved.csv", ColumnMap{});
    std::size_t total = 0;
    for (const auto& t : log.traces) total += t.events.size();
    CHECK(total == log.total_events());
    CHECK(total == 6);
}
