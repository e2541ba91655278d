#pragma once

// AGV control-system trip logs: parsing, travel-time summaries by time of
// day, and the case-count and release-time inputs scenarios consume.

#include <cstdint>
#include <optional>
#include <stdexcept>
#include <string>
#include <string_view>
#include <vector>

#include "agvsim/stochastics.hpp"
#include "agvsim/workflow.hpp"

namespace agvsim {

class IngestError : public std::runtime_error {
public:
    IngestError(int line, const std::string& msg)
        : std::runtime_error("line " + std::to_string(line) + ": " + msg), line_(line) {}
    int line() const { return line_; }

private:
    int line_;
};

/// Seconds since 1970-01-01T00:00 of a naive local ISO-8601 stamp
/// ("YYYY-MM-DDTHH:MM[:SS]", 'T' or a space between date and time).
std::int64_t parse_timestamp(std::string_view s);

struct TripLogRow {
    int line = 0;
    std::int64_t pickup = 0;  // seconds, see parse_timestamp
    std::int64_t dropoff = 0;
    std::string from, to, cart_type;

    double travel_min() const { return (dropoff - pickup) / 60.0; }
    std::string route() const { return from + "->" + to; }
    /// Minutes since midnight of the pickup.
    double pickup_time_of_day() const;
    /// 0 = Monday .. 6 = Sunday.
    int pickup_weekday() const;
    std::string pickup_date() const;  // YYYY-MM-DD
};

/// Surgical case carts carry a cart_type starting with "case".
bool is_surgical(std::string_view cart_type);

struct LogOptions {
    bool surgical_only = false;
    /// Trips longer than this are outliers too (breakdowns); off by default.
    std::optional<double> max_travel_min;
};

struct TripLog {
    std::vector<TripLogRow> rows;
    int rows_in = 0;
    int outliers = 0;  // negative or over-threshold duration
    int filtered = 0;  // non-surgical, with surgical_only
};

/// Header `pickup_ts,dropoff_ts,from,to,cart_type`. Throws IngestError with the
/// line number on malformed rows.
TripLog parse_trip_log(std::string_view text, const LogOptions& opt = {});

struct TimeBin {
    double start_min = 0;  // minutes since midnight, half-open [start, end)
    double end_min = 0;
    std::string label;
};

/// 12am-3am, 3am-6am, 6am-9am, 9am-12pm, 12pm-3pm, 3pm-7pm, 7pm-9pm, 9pm-12am.
std::vector<TimeBin> default_time_bins();

struct RouteTimeRow {
    std::string route;
    std::string interval;
    int n = 0;
    double mean = 0;
    std::optional<double> sd;  // undefined for a single trip
    std::optional<double> cv;
};

/// One row per (route, bin) with trips, routes in first-seen order.
std::vector<RouteTimeRow> route_time_summary(const std::vector<TripLogRow>& rows,
                                             const std::vector<TimeBin>& bins);
std::string format_route_summary(const std::vector<RouteTimeRow>& table);

enum class ModeEstimator { nearest_mean, max_likelihood };

/// a = min, b = max, mode by `est`. nearest_mean picks the observed count
/// closest to the sample mean (lower on ties). max_likelihood maximizes the
/// TRIA likelihood of the interior points over observed candidates.
TriangularDist fit_triangular(const std::vector<int>& counts, ModeEstimator est = ModeEstimator::nearest_mean);

/// Release offsets (minutes after 8 am, in [0,1440)) binned by `bin_min`,
/// floored to the bin start. Trailing bins past the last release are dropped.
EmpiricalCdf build_release_cdf(const std::vector<double>& offsets, double bin_min = 30.0);
/// Offset of a soiled pickup: minutes since the preceding 8 am.
double release_offset(const TripLogRow& row);

struct DailyCount {
    std::string date;
    int weekday = 0;  // 0 = Monday
    int count = 0;
};

/// Trips per pickup date, in date order.
std::vector<DailyCount> daily_counts(const std::vector<TripLogRow>& rows);

struct DerivedInputs {
    std::array<std::optional<TriangularDist>, kWeekdays> case_count;
    std::array<std::optional<EmpiricalCdf>, kWeekdays> release;
    std::vector<std::string> notes;  // weekdays left out and why
};

/// Case counts from `clean_route` trips and release CDFs from `soiled_route`
/// trips, per weekday.
DerivedInputs derive_inputs(const std::vector<TripLogRow>& rows, const std::string& clean_route,
                            const std::string& soiled_route, ModeEstimator est = ModeEstimator::nearest_mean);

/// `[weekday]` sections usable in a scenario file.
std::string format_distributions(const DerivedInputs& d);

}  // namespace agvsim
