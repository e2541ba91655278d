#include "agvsim/stochastics.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <limits>
#include <numeric>
#include <sstream>

namespace agvsim {

namespace {

std::string fmt_num(double v) {
    char buf[64];
    std::snprintf(buf, sizeof buf, "%.15g", v);
    return buf;
}

std::vector<double> literal_args(std::string_view lit, std::string_view name) {
    auto trim = [](std::string_view s) {
        while (!s.empty() && std::isspace(static_cast<unsigned char>(s.front()))) s.remove_prefix(1);
        while (!s.empty() && std::isspace(static_cast<unsigned char>(s.back()))) s.remove_suffix(1);
        return s;
    };
    lit = trim(lit);
    std::string head(name);
    if (lit.size() < head.size() + 2 || lit.substr(0, head.size()) != head)
        throw StatsError("expected " + head + "(...) literal, got '" + std::string(lit) + "'");
    auto body = trim(lit.substr(head.size()));
    if (body.empty() || body.front() != '(' || body.back() != ')')
        throw StatsError("malformed " + head + " literal '" + std::string(lit) + "'");
    body = body.substr(1, body.size() - 2);
    std::vector<double> out;
    std::size_t start = 0;
    while (start <= body.size()) {
        std::size_t comma = body.find(',', start);
        auto tok = trim(body.substr(start, comma == std::string_view::npos ? body.size() - start
                                                                          : comma - start));
        if (tok.empty()) throw StatsError("empty argument in '" + std::string(lit) + "'");
        std::string t(tok);
        char* end = nullptr;
        double v = std::strtod(t.c_str(), &end);
        if (end != t.c_str() + t.size()) throw StatsError("bad number '" + t + "' in " + head);
        out.push_back(v);
        if (comma == std::string_view::npos) break;
        start = comma + 1;
    }
    return out;
}

std::uint64_t splitmix64(std::uint64_t& x) {
    std::uint64_t z = (x += 0x9e3779b97f4a7c15ULL);
    z = (z ^ (z >> 30)) * 0xbf58476d1ce4e5b9ULL;
    z = (z ^ (z >> 27)) * 0x94d049bb133111ebULL;
    return z ^ (z >> 31);
}

std::uint64_t rotl(std::uint64_t x, int k) { return (x << k) | (x >> (64 - k)); }

}  // namespace

// ---------------------------------------------------------------------------

void TriangularDist::validate() const {
    if (!(a <= m && m <= b)) throw StatsError("triangular requires a <= m <= b");
    if (!(a < b)) throw StatsError("triangular requires a < b");
}

double TriangularDist::cdf(double x) const {
    if (x <= a) return 0.0;
    if (x >= b) return 1.0;
    if (x <= m) return (x - a) * (x - a) / ((b - a) * (m - a));
    return 1.0 - (b - x) * (b - x) / ((b - a) * (b - m));
}

std::string TriangularDist::to_literal() const {
    return "TRIA(" + fmt_num(a) + "," + fmt_num(m) + "," + fmt_num(b) + ")";
}

void EmpiricalCdf::validate() const {
    if (points.empty()) throw StatsError("empirical CDF has no points");
    double prev_p = 0.0;
    double prev_v = -std::numeric_limits<double>::infinity();
    for (const auto& p : points) {
        if (p.cumulative_probability < prev_p || p.cumulative_probability > 1.0)
            throw StatsError("CDF probabilities must be non-decreasing in [0,1]");
        if (p.value < prev_v) throw StatsError("CDF values must be non-decreasing");
        prev_p = p.cumulative_probability;
        prev_v = p.value;
    }
    if (points.back().cumulative_probability != 1.0)
        throw StatsError("final CDF probability must be 1");
}

double EmpiricalCdf::cdf(double x) const {
    double p = 0.0;
    for (const auto& pt : points) {
        if (pt.value <= x)
            p = pt.cumulative_probability;
        else
            break;
    }
    return p;
}

std::string EmpiricalCdf::to_literal() const {
    std::string s = "DISC(";
    for (std::size_t i = 0; i < points.size(); ++i) {
        if (i) s += ",";
        s += fmt_num(points[i].cumulative_probability) + "," + fmt_num(points[i].value);
    }
    return s + ")";
}

double sample_triangular(const TriangularDist& d, double u) {
    u = std::clamp(u, 0.0, 1.0);
    double split = (d.m - d.a) / (d.b - d.a);
    if (u <= split) return d.a + std::sqrt(u * (d.b - d.a) * (d.m - d.a));
    return d.b - std::sqrt((1.0 - u) * (d.b - d.a) * (d.b - d.m));
}

double sample_discrete_cdf(const EmpiricalCdf& c, double u) {
    auto it = std::lower_bound(c.points.begin(), c.points.end(), u,
                               [](const CdfPoint& p, double x) { return p.cumulative_probability < x; });
    if (it == c.points.end()) return c.points.back().value;
    return it->value;
}

TriangularDist parse_tria(std::string_view literal) {
    auto args = literal_args(literal, "TRIA");
    if (args.size() != 3) throw StatsError("TRIA takes three arguments");
    TriangularDist d{args[0], args[1], args[2]};
    d.validate();
    return d;
}

EmpiricalCdf parse_disc(std::string_view literal) {
    auto args = literal_args(literal, "DISC");
    if (args.empty() || args.size() % 2 != 0) throw StatsError("DISC takes probability/value pairs");
    EmpiricalCdf c;
    for (std::size_t i = 0; i < args.size(); i += 2) c.points.push_back({args[i], args[i + 1]});
    c.validate();
    return c;
}

// ---------------------------------------------------------------------------
// xoshiro256** seeded through splitmix64.

RandomStream::RandomStream(std::uint64_t seed) {
    std::uint64_t x = seed;
    for (auto& w : s_) w = splitmix64(x);
}

std::uint64_t RandomStream::next_u64() {
    std::uint64_t result = rotl(s_[1] * 5, 7) * 9;
    std::uint64_t t = s_[1] << 17;
    s_[2] ^= s_[0];
    s_[3] ^= s_[1];
    s_[1] ^= s_[2];
    s_[0] ^= s_[3];
    s_[2] ^= t;
    s_[3] = rotl(s_[3], 45);
    return result;
}

double RandomStream::uniform() {
    return (static_cast<double>(next_u64() >> 11) + 0.5) * 0x1.0p-53;
}

std::uint64_t RandomStream::below(std::uint64_t n) {
    if (n == 0) return 0;
    std::uint64_t limit = std::numeric_limits<std::uint64_t>::max() -
                          std::numeric_limits<std::uint64_t>::max() % n;
    std::uint64_t v;
    do v = next_u64();
    while (v >= limit);
    return v % n;
}

std::uint64_t RngPolicy::derive_seed(std::uint64_t master_seed, std::uint64_t replication, Stream s) {
    std::uint64_t x = master_seed;
    std::uint64_t h = splitmix64(x);
    x = h ^ (replication * 0xd1b54a32d192ed03ULL);
    h = splitmix64(x);
    x = h ^ (static_cast<std::uint64_t>(s) + 1) * 0x8cb92ba72f3d8dd7ULL;
    return splitmix64(x);
}

RngPolicy::RngPolicy(std::uint64_t master_seed, std::uint64_t replication)
    : master_(master_seed),
      streams_{RandomStream(derive_seed(master_seed, replication, Stream::case_count)),
               RandomStream(derive_seed(master_seed, replication, Stream::release_time)),
               RandomStream(derive_seed(master_seed, replication, Stream::picking_time)),
               RandomStream(derive_seed(master_seed, replication, Stream::dispatch_tiebreak))} {}

// ---------------------------------------------------------------------------
// Special functions

namespace dist {

namespace {

// Continued fraction for I_x(a,b) (modified Lentz).
double beta_cf(double a, double b, double x) {
    const double tiny = 1e-300;
    const double eps = 1e-16;
    double qab = a + b, qap = a + 1.0, qam = a - 1.0;
    double c = 1.0;
    double d = 1.0 - qab * x / qap;
    if (std::fabs(d) < tiny) d = tiny;
    d = 1.0 / d;
    double h = d;
    for (int m = 1; m <= 10000; ++m) {
        int m2 = 2 * m;
        double aa = m * (b - m) * x / ((qam + m2) * (a + m2));
        d = 1.0 + aa * d;
        if (std::fabs(d) < tiny) d = tiny;
        c = 1.0 + aa / c;
        if (std::fabs(c) < tiny) c = tiny;
        d = 1.0 / d;
        h *= d * c;
        aa = -(a + m) * (qab + m) * x / ((a + m2) * (qap + m2));
        d = 1.0 + aa * d;
        if (std::fabs(d) < tiny) d = tiny;
        c = 1.0 + aa / c;
        if (std::fabs(c) < tiny) c = tiny;
        d = 1.0 / d;
        double del = d * c;
        h *= del;
        if (std::fabs(del - 1.0) < eps) break;
    }
    return h;
}

}  // namespace

double incomplete_beta(double a, double b, double x) {
    if (x <= 0) return 0.0;
    if (x >= 1) return 1.0;
    double ln_front = std::lgamma(a + b) - std::lgamma(a) - std::lgamma(b) + a * std::log(x) +
                      b * std::log1p(-x);
    double front = std::exp(ln_front);
    if (x < (a + 1.0) / (a + b + 2.0)) return front * beta_cf(a, b, x) / a;
    return 1.0 - front * beta_cf(b, a, 1.0 - x) / b;
}

double student_t_cdf(double t, double df) {
    if (std::isinf(t)) return t > 0 ? 1.0 : 0.0;
    double x = df / (df + t * t);
    double tail = 0.5 * incomplete_beta(df / 2.0, 0.5, x);
    return t > 0 ? 1.0 - tail : tail;
}

double student_t_quantile(double p, double df) {
    if (!(p > 0 && p < 1)) throw StatsError("t quantile needs p in (0,1)");
    if (p == 0.5) return 0.0;
    // Bracket, then bisect to machine precision; the CDF is monotone.
    double lo = -1.0, hi = 1.0;
    while (student_t_cdf(lo, df) > p) lo *= 2.0;
    while (student_t_cdf(hi, df) < p) hi *= 2.0;
    for (int i = 0; i < 200 && hi - lo > 1e-15 * std::max(1.0, std::fabs(hi)); ++i) {
        double mid = 0.5 * (lo + hi);
        if (student_t_cdf(mid, df) < p)
            lo = mid;
        else
            hi = mid;
    }
    return 0.5 * (lo + hi);
}

double f_cdf(double f, double d1, double d2) {
    if (f <= 0) return 0.0;
    return incomplete_beta(d1 / 2.0, d2 / 2.0, d1 * f / (d1 * f + d2));
}

double f_quantile(double p, double d1, double d2) {
    if (!(p > 0 && p < 1)) throw StatsError("F quantile needs p in (0,1)");
    double lo = 0.0, hi = 1.0;
    while (f_cdf(hi, d1, d2) < p) hi *= 2.0;
    for (int i = 0; i < 200 && hi - lo > 1e-15 * std::max(1.0, hi); ++i) {
        double mid = 0.5 * (lo + hi);
        if (f_cdf(mid, d1, d2) < p)
            lo = mid;
        else
            hi = mid;
    }
    return 0.5 * (lo + hi);
}

}  // namespace dist

// ---------------------------------------------------------------------------

double mean(std::span<const double> x) {
    if (x.empty()) throw StatsError("mean of empty sample");
    return std::accumulate(x.begin(), x.end(), 0.0) / static_cast<double>(x.size());
}

double variance(std::span<const double> x) {
    if (x.size() < 2) throw StatsError("variance needs at least two values");
    double m = mean(x);
    double ss = 0.0;
    for (double v : x) ss += (v - m) * (v - m);
    return ss / static_cast<double>(x.size() - 1);
}

double stddev(std::span<const double> x) { return std::sqrt(variance(x)); }

double quantile(std::vector<double> x, double q) {
    if (x.empty()) throw StatsError("quantile of empty sample");
    std::sort(x.begin(), x.end());
    double h = (static_cast<double>(x.size()) - 1.0) * std::clamp(q, 0.0, 1.0);
    auto lo = static_cast<std::size_t>(std::floor(h));
    auto hi = std::min(lo + 1, x.size() - 1);
    return x[lo] + (h - static_cast<double>(lo)) * (x[hi] - x[lo]);
}

TestResult welch_t_test(std::span<const double> a, std::span<const double> b, double level) {
    if (a.size() < 2 || b.size() < 2) throw StatsError("Welch test needs at least two values per sample");
    double ma = mean(a), mb = mean(b);
    double va = variance(a) / static_cast<double>(a.size());
    double vb = variance(b) / static_cast<double>(b.size());
    double se2 = va + vb;
    TestResult r;
    r.level = level;
    r.estimate = ma - mb;
    if (se2 == 0.0) {
        if (ma == mb) {
            r.statistic = 0.0;
            r.p_value = 1.0;
            r.degrees_of_freedom = static_cast<double>(a.size() + b.size() - 2);
            r.confidence_interval = {0.0, 0.0};
            return r;
        }
        throw StatsError("Welch test needs nonzero variance in at least one sample");
    }
    double se = std::sqrt(se2);
    r.statistic = r.estimate / se;
    double na1 = static_cast<double>(a.size() - 1), nb1 = static_cast<double>(b.size() - 1);
    r.degrees_of_freedom = se2 * se2 / (va * va / na1 + vb * vb / nb1);
    double tail = dist::student_t_cdf(-std::fabs(r.statistic), r.degrees_of_freedom);
    r.p_value = std::min(1.0, 2.0 * tail);
    double q = dist::student_t_quantile(0.5 + level / 2.0, r.degrees_of_freedom);
    r.confidence_interval = {r.estimate - q * se, r.estimate + q * se};
    return r;
}

TestResult variance_ratio_test(std::span<const double> a, std::span<const double> b, double level,
                               VarianceTest kind) {
    if (a.size() < 2 || b.size() < 2) throw StatsError("variance test needs at least two values per sample");
    double va = variance(a), vb = variance(b);
    if (va == 0.0 || vb == 0.0) throw StatsError("variance test rejects zero-variance samples");
    TestResult r;
    r.level = level;
    if (kind == VarianceTest::f_ratio) {
        bool a_big = va >= vb;
        double big = a_big ? va : vb, small = a_big ? vb : va;
        double d1 = static_cast<double>((a_big ? a.size() : b.size()) - 1);
        double d2 = static_cast<double>((a_big ? b.size() : a.size()) - 1);
        r.statistic = big / small;
        r.degrees_of_freedom = d1;
        r.degrees_of_freedom2 = d2;
        r.p_value = std::min(1.0, 2.0 * (1.0 - dist::f_cdf(r.statistic, d1, d2)));
        r.estimate = va / vb;
        // CI on var(a)/var(b).
        double na = static_cast<double>(a.size() - 1), nb = static_cast<double>(b.size() - 1);
        double alpha = 1.0 - level;
        r.confidence_interval = {r.estimate / dist::f_quantile(1.0 - alpha / 2, na, nb),
                                 r.estimate / dist::f_quantile(alpha / 2, na, nb)};
        return r;
    }
    // Levene: one-way ANOVA on |x - group mean| with two groups.
    auto absdev = [](std::span<const double> x) {
        double m = mean(x);
        std::vector<double> z;
        z.reserve(x.size());
        for (double v : x) z.push_back(std::fabs(v - m));
        return z;
    };
    auto za = absdev(a), zb = absdev(b);
    double ma = mean(za), mb = mean(zb);
    double na = static_cast<double>(za.size()), nb = static_cast<double>(zb.size());
    double grand = (ma * na + mb * nb) / (na + nb);
    double between = na * (ma - grand) * (ma - grand) + nb * (mb - grand) * (mb - grand);
    double within = 0.0;
    for (double v : za) within += (v - ma) * (v - ma);
    for (double v : zb) within += (v - mb) * (v - mb);
    double d2 = na + nb - 2.0;
    if (within == 0.0) throw StatsError("Levene test is degenerate for these samples");
    r.statistic = between / (within / d2);
    r.degrees_of_freedom = 1.0;
    r.degrees_of_freedom2 = d2;
    r.p_value = 1.0 - dist::f_cdf(r.statistic, 1.0, d2);
    r.estimate = va / vb;
    r.confidence_interval = {r.estimate, r.estimate};
    return r;
}

TestResult mean_ci(std::span<const double> x, double level) {
    if (x.size() < 2) throw StatsError("confidence interval needs at least two values");
    TestResult r;
    r.level = level;
    r.estimate = mean(x);
    double n = static_cast<double>(x.size());
    double se = std::sqrt(variance(x) / n);
    r.degrees_of_freedom = n - 1;
    double q = dist::student_t_quantile(0.5 + level / 2.0, n - 1);
    r.confidence_interval = {r.estimate - q * se, r.estimate + q * se};
    r.statistic = se > 0 ? r.estimate / se : 0.0;
    return r;
}

double coefficient_of_variation(std::span<const double> x) {
    double m = mean(x);
    if (m == 0.0) throw StatsError("coefficient of variation undefined for zero mean");
    return stddev(x) / m;
}

}  // namespace agvsim
