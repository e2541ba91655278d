#include "agvsim/ingest.hpp"

#include <algorithm>
#include <cctype>
#include <chrono>
#include <cmath>
#include <cstdio>
#include <limits>
#include <map>
#include <sstream>

namespace agvsim {

namespace {

bool digits(std::string_view s, std::size_t pos, std::size_t n, int& out) {
    if (pos + n > s.size()) return false;
    out = 0;
    for (std::size_t i = pos; i < pos + n; ++i) {
        if (s[i] < '0' || s[i] > '9') return false;
        out = out * 10 + (s[i] - '0');
    }
    return true;
}

std::string trim(std::string s) {
    auto sp = [](unsigned char c) { return std::isspace(c); };
    while (!s.empty() && sp(s.back())) s.pop_back();
    std::size_t i = 0;
    while (i < s.size() && sp(s[i])) ++i;
    return s.substr(i);
}

std::vector<std::string> split_csv(const std::string& line) {
    std::vector<std::string> f;
    std::stringstream ss(line);
    std::string cell;
    while (std::getline(ss, cell, ',')) f.push_back(trim(cell));
    if (!line.empty() && line.back() == ',') f.emplace_back();
    return f;
}

std::chrono::sys_days day_of(std::int64_t s) {
    auto d = s >= 0 ? s / 86400 : -((-s + 86399) / 86400);
    return std::chrono::sys_days{std::chrono::days{d}};
}

std::string fmt(double x) {
    char b[32];
    std::snprintf(b, sizeof b, "%.4f", x);
    return b;
}

}  // namespace

std::int64_t parse_timestamp(std::string_view s) {
    int y, mo, d, h, mi, sec = 0;
    bool ok = digits(s, 0, 4, y) && s.size() > 4 && s[4] == '-' && digits(s, 5, 2, mo) && s.size() > 7 &&
              s[7] == '-' && digits(s, 8, 2, d) && s.size() > 10 && (s[10] == 'T' || s[10] == ' ') &&
              digits(s, 11, 2, h) && s.size() > 13 && s[13] == ':' && digits(s, 14, 2, mi);
    std::size_t end = 16;
    if (ok && s.size() > 16 && s[16] == ':') {
        ok = digits(s, 17, 2, sec);
        end = 19;
    }
    if (!ok || s.size() != end) throw std::invalid_argument("bad timestamp '" + std::string(s) + "'");
    using namespace std::chrono;
    year_month_day ymd{year{y}, month{static_cast<unsigned>(mo)}, day{static_cast<unsigned>(d)}};
    if (!ymd.ok() || h > 23 || mi > 59 || sec > 59)
        throw std::invalid_argument("bad timestamp '" + std::string(s) + "'");
    std::int64_t days = sys_days{ymd}.time_since_epoch().count();
    return days * 86400 + h * 3600 + mi * 60 + sec;
}

double TripLogRow::pickup_time_of_day() const {
    std::int64_t s = pickup - day_of(pickup).time_since_epoch().count() * 86400LL;
    return s / 60.0;
}

int TripLogRow::pickup_weekday() const {
    return static_cast<int>(std::chrono::weekday{day_of(pickup)}.iso_encoding()) - 1;
}

std::string TripLogRow::pickup_date() const {
    std::chrono::year_month_day ymd{day_of(pickup)};
    char b[16];
    std::snprintf(b, sizeof b, "%04d-%02u-%02u", static_cast<int>(ymd.year()), static_cast<unsigned>(ymd.month()),
                  static_cast<unsigned>(ymd.day()));
    return b;
}

bool is_surgical(std::string_view t) { return t.rfind("case", 0) == 0; }

TripLog parse_trip_log(std::string_view text, const LogOptions& opt) {
    TripLog log;
    std::istringstream in{std::string(text)};
    std::string line;
    int n = 0;
    bool header = false;
    while (std::getline(in, line)) {
        ++n;
        if (!line.empty() && line.back() == '\r') line.pop_back();
        if (trim(line).empty() || line[0] == '#') continue;
        auto f = split_csv(line);
        if (!header) {
            if (f != std::vector<std::string>{"pickup_ts", "dropoff_ts", "from", "to", "cart_type"})
                throw IngestError(n, "expected header pickup_ts,dropoff_ts,from,to,cart_type");
            header = true;
            continue;
        }
        ++log.rows_in;
        if (f.size() != 5) throw IngestError(n, "expected 5 fields, got " + std::to_string(f.size()));
        TripLogRow r;
        r.line = n;
        try {
            r.pickup = parse_timestamp(f[0]);
            r.dropoff = parse_timestamp(f[1]);
        } catch (const std::invalid_argument& e) {
            throw IngestError(n, e.what());
        }
        r.from = f[2];
        r.to = f[3];
        r.cart_type = f[4];
        if (r.from.empty() || r.to.empty()) throw IngestError(n, "empty location");
        if (opt.surgical_only && !is_surgical(r.cart_type)) {
            ++log.filtered;
            continue;
        }
        if (r.dropoff < r.pickup || (opt.max_travel_min && r.travel_min() > *opt.max_travel_min)) {
            ++log.outliers;
            continue;
        }
        log.rows.push_back(std::move(r));
    }
    if (!header) throw IngestError(n, "missing header");
    return log;
}

std::vector<TimeBin> default_time_bins() {
    return {{0, 180, "12am-3am"},    {180, 360, "3am-6am"},   {360, 540, "6am-9am"},
            {540, 720, "9am-12pm"},  {720, 900, "12pm-3pm"},  {900, 1140, "3pm-7pm"},
            {1140, 1260, "7pm-9pm"}, {1260, 1440, "9pm-12am"}};
}

std::vector<RouteTimeRow> route_time_summary(const std::vector<TripLogRow>& rows, const std::vector<TimeBin>& bins) {
    std::vector<std::string> order;
    std::map<std::string, std::vector<std::vector<double>>> by;
    for (const auto& r : rows) {
        auto key = r.route();
        auto [it, fresh] = by.try_emplace(key, bins.size());
        if (fresh) order.push_back(key);
        double tod = r.pickup_time_of_day();
        for (std::size_t b = 0; b < bins.size(); ++b)
            if (tod >= bins[b].start_min && tod < bins[b].end_min) {
                it->second[b].push_back(r.travel_min());
                break;
            }
    }
    std::vector<RouteTimeRow> out;
    for (const auto& key : order) {
        const auto& v = by[key];
        for (std::size_t b = 0; b < bins.size(); ++b) {
            if (v[b].empty()) continue;
            RouteTimeRow row;
            row.route = key;
            row.interval = bins[b].label;
            row.n = static_cast<int>(v[b].size());
            row.mean = mean(v[b]);
            if (row.n > 1) {
                row.sd = stddev(v[b]);
                if (row.mean != 0) row.cv = *row.sd / row.mean;
            }
            out.push_back(row);
        }
    }
    return out;
}

std::string format_route_summary(const std::vector<RouteTimeRow>& t) {
    std::string s = "route,interval,n,mean,sd,cv\n";
    for (const auto& r : t)
        s += r.route + "," + r.interval + "," + std::to_string(r.n) + "," + fmt(r.mean) + "," +
             (r.sd ? fmt(*r.sd) : "") + "," + (r.cv ? fmt(*r.cv) : "") + "\n";
    return s;
}

TriangularDist fit_triangular(const std::vector<int>& counts, ModeEstimator est) {
    if (counts.size() < 3) throw std::invalid_argument("fit_triangular needs at least 3 counts");
    auto [lo, hi] = std::minmax_element(counts.begin(), counts.end());
    double a = *lo, b = *hi;
    if (a == b) throw std::invalid_argument("fit_triangular: all counts equal, no spread");
    std::vector<int> cand(counts);
    std::sort(cand.begin(), cand.end());
    cand.erase(std::unique(cand.begin(), cand.end()), cand.end());
    double m = cand.front();
    if (est == ModeEstimator::nearest_mean) {
        double mu = 0;
        for (int c : counts) mu += c;
        mu /= counts.size();
        double best = std::numeric_limits<double>::infinity();
        for (int c : cand)
            if (std::fabs(c - mu) < best) {
                best = std::fabs(c - mu);
                m = c;
            }
    } else {
        double best = -std::numeric_limits<double>::infinity();
        for (int c : cand) {
            double ll = 0;
            for (int x : counts) {
                if (x == a || x == b) continue;  // endpoints fix a and b
                double f = x < c ? (x - a) / (c - a) : x > c ? (b - x) / (b - c) : 1.0;
                ll += std::log(f);
            }
            if (ll > best) {
                best = ll;
                m = c;
            }
        }
    }
    TriangularDist d{a, m, b};
    d.validate();
    return d;
}

double release_offset(const TripLogRow& row) {
    double t = row.pickup_time_of_day() - 480.0;
    return t < 0 ? t + 1440.0 : t;
}

EmpiricalCdf build_release_cdf(const std::vector<double>& offsets, double bin_min) {
    if (offsets.empty()) throw std::invalid_argument("build_release_cdf: no releases");
    if (bin_min <= 0) throw std::invalid_argument("build_release_cdf: bin must be positive");
    int nb = static_cast<int>(std::ceil(1440.0 / bin_min));
    std::vector<long> hist(nb, 0);
    for (double x : offsets) {
        if (x < 0 || x >= 1440) throw std::invalid_argument("release offset outside [0,1440)");
        hist[std::min(nb - 1, static_cast<int>(std::floor(x / bin_min)))]++;
    }
    int last = nb - 1;
    while (hist[last] == 0) --last;
    EmpiricalCdf c;
    long cum = 0;
    for (int i = 0; i <= last; ++i) {
        cum += hist[i];
        c.points.push_back({i == last ? 1.0 : static_cast<double>(cum) / offsets.size(), i * bin_min});
    }
    c.validate();
    return c;
}

std::vector<DailyCount> daily_counts(const std::vector<TripLogRow>& rows) {
    std::map<std::string, DailyCount> by;
    for (const auto& r : rows) {
        auto& d = by[r.pickup_date()];
        d.date = r.pickup_date();
        d.weekday = r.pickup_weekday();
        d.count++;
    }
    std::vector<DailyCount> out;
    for (auto& [k, v] : by) out.push_back(v);
    return out;
}

DerivedInputs derive_inputs(const std::vector<TripLogRow>& rows, const std::string& clean_route,
                            const std::string& soiled_route, ModeEstimator est) {
    DerivedInputs out;
    std::vector<TripLogRow> clean;
    std::array<std::vector<double>, kWeekdays> offsets;
    for (const auto& r : rows) {
        if (r.route() == clean_route) clean.push_back(r);
        if (r.route() == soiled_route) {
            // released on the business day after the cases were picked;
            // Monday's releases are Friday's cases, weekend ones are dropped
            TripLogRow shifted = r;
            shifted.pickup -= 480 * 60;
            int w = shifted.pickup_weekday();
            if (w < kWeekdays) offsets[(w + kWeekdays - 1) % kWeekdays].push_back(release_offset(r));
        }
    }
    std::array<std::vector<int>, kWeekdays> counts;
    for (const auto& d : daily_counts(clean))
        if (d.weekday < kWeekdays) counts[d.weekday].push_back(d.count);
    for (int w = 0; w < kWeekdays; ++w) {
        std::string day(kWeekdayNames[w]);
        try {
            out.case_count[w] = fit_triangular(counts[w], est);
        } catch (const std::exception& e) {
            out.notes.push_back(day + " case_count: " + e.what());
        }
        if (offsets[w].empty())
            out.notes.push_back(day + " release_time: no soiled trips");
        else
            out.release[w] = build_release_cdf(offsets[w]);
    }
    return out;
}

std::string format_distributions(const DerivedInputs& d) {
    std::string s;
    for (int w = 0; w < kWeekdays; ++w) {
        if (!d.case_count[w] || !d.release[w]) continue;
        s += "[weekday]\nday = " + std::string(kWeekdayNames[w]) + "\n";
        s += "case_count = " + d.case_count[w]->to_literal() + "\n";
        s += "release_time = " + d.release[w]->to_literal() + "\n\n";
    }
    for (const auto& n : d.notes) s += "# " + n + "\n";
    return s;
}

}  // namespace agvsim
