#include "doctest.h"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <map>

#include "agvsim/ingest.hpp"

using namespace agvsim;

namespace {

const char* kHeader = "pickup_ts,dropoff_ts,from,to,cart_type\n";

std::string stamp(std::int64_t s) {
    // 2018-03-05 (a Monday) is day 17595 since 1970-01-01
    std::int64_t day = s / 86400, r = s % 86400;
    int d = static_cast<int>(day - 17595);
    int y = 2018, m = 3, dd = 5 + d;
    static const int len[] = {31, 28, 31, 30, 31, 30, 31, 31, 30, 31, 30, 31};
    while (dd > len[m - 1]) {
        dd -= len[m - 1];
        if (++m > 12) m = 1, ++y;
    }
    char b[64];
    std::snprintf(b, sizeof b, "%04d-%02d-%02dT%02d:%02d:%02d", y, m, dd, int(r / 3600), int(r / 60 % 60), int(r % 60));
    return b;
}

constexpr std::int64_t kMon = 17595LL * 86400;

std::string row(std::int64_t pick, std::int64_t drop, const char* from, const char* to, const char* type) {
    return stamp(pick) + "," + stamp(drop) + "," + from + "," + to + "," + type + "\n";
}

}  // namespace

TEST_CASE("ingest: timestamps") {
    CHECK(parse_timestamp("1970-01-02T00:00") == 86400);
    CHECK(parse_timestamp("2018-03-05 15:04:05") == kMon + 15 * 3600 + 4 * 60 + 5);
    CHECK(stamp(kMon + 3600) == "2018-03-05T01:00:00");
    CHECK_THROWS(parse_timestamp("2018-02-30T10:00"));
    CHECK_THROWS(parse_timestamp("2018-03-05T25:00"));
    CHECK_THROWS(parse_timestamp("2018-3-5T10:00"));
    CHECK_THROWS(parse_timestamp("2018-03-05T10:00Z"));
    TripLogRow r;
    r.pickup = kMon + 7 * 3600 + 30 * 60;
    CHECK(r.pickup_weekday() == 0);
    CHECK(r.pickup_date() == "2018-03-05");
    CHECK(r.pickup_time_of_day() == 450);
    CHECK(release_offset(r) == 1410);
    r.pickup += 30 * 60;
    CHECK(release_offset(r) == 0);
    r.pickup += 5 * 86400;
    CHECK(r.pickup_weekday() == 5);
}

TEST_CASE("ingest: parsing, outliers and the surgical filter") {
    std::string t = std::string(kHeader) + row(kMon + 60000, kMon + 60600, "MD", "CCSA", "case_clean") +
                    row(kMon + 61000, kMon + 61300, "SCSA", "CSSD", "case_soiled") +
                    row(kMon + 62000, kMon + 62100, "DOCK", "K5", "linen");
    auto log = parse_trip_log(t);
    CHECK(log.rows.size() == 3);
    CHECK(log.rows[0].travel_min() == 10);
    CHECK(log.rows[0].route() == "MD->CCSA");

    auto bad = t + row(kMon + 70000, kMon + 69000, "MD", "CCSA", "case_clean");
    log = parse_trip_log(bad);
    CHECK(log.rows.size() == 3);
    CHECK(log.outliers == 1);
    CHECK(log.rows_in == 4);

    LogOptions so;
    so.surgical_only = true;
    log = parse_trip_log(bad, so);
    CHECK(log.rows.size() == 2);
    CHECK(log.filtered == 1);
    CHECK(static_cast<int>(log.rows.size()) + log.outliers + log.filtered == log.rows_in);

    LogOptions cut;
    cut.max_travel_min = 8;
    CHECK(parse_trip_log(t, cut).outliers == 1);

    try {
        parse_trip_log(std::string(kHeader) + row(kMon, kMon + 60, "A", "B", "case") + "2018-03-05T99:00,x,A,B,case\n");
        FAIL("no throw");
    } catch (const IngestError& e) {
        CHECK(e.line() == 3);
    }
    CHECK_THROWS_AS(parse_trip_log("a,b,c\n"), IngestError);
    CHECK_THROWS_AS(parse_trip_log(std::string(kHeader) + "2018-03-05T10:00,2018-03-05T10:05,A,B\n"), IngestError);
}

TEST_CASE("ingest: route summary reproduces a late-evening soiled bin") {
    // 77 trips between 9 pm and midnight with mean 5.45 and sd 1.01
    std::vector<double> z(77);
    for (int i = 0; i < 77; ++i) z[i] = std::sin(1.0 + i * 2.39996);
    double m = 0, v = 0;
    for (double x : z) m += x;
    m /= 77;
    for (double x : z) v += (x - m) * (x - m);
    double sd = std::sqrt(v / 76);
    std::string t = kHeader;
    for (int i = 0; i < 77; ++i) {
        double minutes = 5.45 + 1.01 * (z[i] - m) / sd;
        std::int64_t p = kMon + 21 * 3600 + i * 120;
        t += row(p, p + std::llround(minutes * 60), "SCSA", "CSSD", "case_soiled");
    }
    t += row(kMon + 16 * 3600, kMon + 16 * 3600 + 540, "MD", "CCSA", "case_clean");
    auto log = parse_trip_log(t);
    auto table = route_time_summary(log.rows, default_time_bins());
    REQUIRE(table.size() == 2);
    CHECK(table[0].route == "SCSA->CSSD");
    CHECK(table[0].interval == "9pm-12am");
    CHECK(table[0].n == 77);
    CHECK(std::fabs(table[0].mean - 5.45) < 0.005);
    CHECK(std::fabs(*table[0].sd - 1.01) < 0.005);
    CHECK(std::fabs(*table[0].cv - 0.19) < 0.005);
    CHECK(table[1].interval == "3pm-7pm");
    CHECK_FALSE(table[1].sd.has_value());
    auto text = format_route_summary(table);
    CHECK(text.find("MD->CCSA,3pm-7pm,1,9.0000,,\n") != std::string::npos);
}

TEST_CASE("ingest: summary counts add up per route") {
    RandomStream rs(4);
    std::string t = kHeader;
    std::map<std::string, int> per;
    const char* from[] = {"MD", "SCSA", "CSSD"};
    const char* to[] = {"CCSA", "CSSD", "MD"};
    for (int i = 0; i < 2000; ++i) {
        int k = static_cast<int>(rs.below(3));
        std::int64_t p = kMon + static_cast<std::int64_t>(rs.below(7 * 86400));
        t += row(p, p + 60 + static_cast<std::int64_t>(rs.below(600)), from[k], to[k], "case");
        per[std::string(from[k]) + "->" + to[k]]++;
    }
    auto table = route_time_summary(parse_trip_log(t).rows, default_time_bins());
    std::map<std::string, int> got;
    for (auto& r : table) {
        got[r.route] += r.n;
        if (r.n > 1) CHECK(*r.cv == doctest::Approx(*r.sd / r.mean));
    }
    CHECK(got == per);

    std::string same = kHeader;
    for (int i = 0; i < 4; ++i) same += row(kMon + 3600 * i, kMon + 3600 * i + 300, "A", "B", "case");
    auto flat = route_time_summary(parse_trip_log(same).rows, default_time_bins());
    CHECK(*flat[0].cv == 0);
}

TEST_CASE("ingest: triangular fit") {
    auto d = fit_triangular({60, 75, 68, 67, 69, 70, 66});
    CHECK(d.a == 60);
    CHECK(d.m == 68);
    CHECK(d.b == 75);
    auto f = fit_triangular({55, 62, 60, 64, 69, 61, 63});
    CHECK(f.a == 55);
    CHECK(f.b == 69);
    CHECK_THROWS(fit_triangular({70, 70, 70, 70, 70}));
    CHECK_THROWS(fit_triangular({60, 70}));

    // maximum likelihood against a direct density product over every candidate
    RandomStream rs(8);
    for (int trial = 0; trial < 50; ++trial) {
        std::vector<int> c;
        for (int i = 0; i < 7; ++i) c.push_back(55 + static_cast<int>(rs.below(25)));
        if (*std::min_element(c.begin(), c.end()) == *std::max_element(c.begin(), c.end())) continue;
        auto ml = fit_triangular(c, ModeEstimator::max_likelihood);
        double a = ml.a, b = ml.b;
        double best = -1, best_m = -1;
        for (int m = static_cast<int>(a); m <= b; ++m) {
            if (std::find(c.begin(), c.end(), m) == c.end()) continue;
            double like = 1;
            for (int x : c) {
                if (x == a || x == b) continue;
                like *= x < m ? 2 * (x - a) / ((b - a) * (m - a)) : x > m ? 2 * (b - x) / ((b - a) * (b - m)) : 2 / (b - a);
            }
            if (like > best * (1 + 1e-12)) best = like, best_m = m;
        }
        CHECK(ml.m == best_m);
    }
}

TEST_CASE("ingest: release CDF binning and round trip") {
    CHECK_THROWS(build_release_cdf({}));
    auto one = build_release_cdf({0, 5, 29.5});
    REQUIRE(one.points.size() == 1);
    CHECK(one.points[0].cumulative_probability == 1.0);
    CHECK(one.points[0].value == 0);

    // every weekday of the reference release tables, rebuilt from 1000 releases
    Scenario sc = load_scenario(std::string(AGVSIM_DATA_DIR) + "/reference_M.scn");
    for (int w = 0; w < kWeekdays; ++w) {
        const auto& src = sc.weekdays[w].release;
        std::vector<double> offsets;
        double prev = 0;
        for (const auto& p : src.points) {
            long k = std::lround((p.cumulative_probability - prev) * 1000);
            for (long i = 0; i < k; ++i) offsets.push_back(p.value + 7 + (i % 20));
            prev = p.cumulative_probability;
        }
        REQUIRE(offsets.size() == 1000);
        auto c = build_release_cdf(offsets);
        if (w == 0) {
            CHECK(c.points[0].cumulative_probability == doctest::Approx(0.004));
            CHECK(c.points[0].value == 0);
            CHECK(c.points[1].cumulative_probability == doctest::Approx(0.05));
            CHECK(c.points[1].value == 30);
        }
        double last = 0, prev_p = 0;
        for (const auto& p : src.points) {
            if (p.cumulative_probability > prev_p) last = p.value;
            prev_p = p.cumulative_probability;
        }
        CHECK(c.points.back().value == last);
        for (std::size_t i = 0; i < c.points.size(); ++i) CHECK(c.points[i].value == 30.0 * i);

        std::map<double, long> hits;
        RandomStream rs(100 + w);
        const long n = 1000000;
        for (long i = 0; i < n; ++i) hits[sample_discrete_cdf(c, rs.uniform())]++;
        double ks = 0, cum = 0;
        for (const auto& p : c.points) {
            cum += hits[p.value];
            double src_frac = 0;
            for (double x : offsets) src_frac += x < p.value + 30;
            ks = std::max(ks, std::fabs(cum / n - src_frac / offsets.size()));
        }
        CHECK(ks < 0.005);
    }
}

TEST_CASE("ingest: inputs derived from a log feed a scenario") {
    std::string t = kHeader;
    RandomStream rs(12);
    int counts[7][5];
    for (int week = 0; week < 7; ++week)
        for (int w = 0; w < 5; ++w) {
            counts[week][w] = 10 + static_cast<int>(rs.below(6)) + w;
            std::int64_t day = kMon + (week * 7 + w) * 86400LL;
            for (int i = 0; i < counts[week][w]; ++i) {
                std::int64_t p = day + 15 * 3600 + i * 300;
                t += row(p, p + 540, "MD", "CCSA", "case_clean");
                // soiled releases the next business morning
                std::int64_t s = day + (w == 4 ? 3 : 1) * 86400 + (9 + w) * 3600 + i * 600;
                t += row(s, s + 360, "SCSA", "CSSD", "case_soiled");
            }
        }
    auto log = parse_trip_log(t);
    auto d = derive_inputs(log.rows, "MD->CCSA", "SCSA->CSSD");
    for (int w = 0; w < 5; ++w) {
        REQUIRE(d.case_count[w].has_value());
        int lo = 99, hi = 0;
        for (auto& wk : counts) lo = std::min(lo, wk[w]), hi = std::max(hi, wk[w]);
        CHECK(d.case_count[w]->a == lo);
        CHECK(d.case_count[w]->b == hi);
    }
    for (int w = 0; w < 5; ++w) {
        REQUIRE(d.release[w].has_value());
        // first release of weekday w at (9 + w) am
        CHECK(d.release[w]->cdf(60.0 * (w + 1) - 1) == 0);
        CHECK(d.release[w]->cdf(60.0 * (w + 1)) > 0);
    }
    CHECK(d.notes.empty());
    std::string sections = format_distributions(d);
    auto back = parse_scenario("variant = M\n" + sections);
    CHECK(back.weekdays[3].case_count.b == d.case_count[3]->b);

    // a weekday without enough history is reported, not guessed
    std::vector<TripLogRow> few;
    for (const auto& r : log.rows)
        if (r.pickup < kMon + 14 * 86400) few.push_back(r);
    auto partial = derive_inputs(few, "MD->CCSA", "SCSA->CSSD");
    CHECK_FALSE(partial.case_count[0].has_value());
    CHECK(partial.notes.size() == 5);
}
