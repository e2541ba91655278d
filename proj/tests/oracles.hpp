#pragma once

// Independent reference computations used by the unit and acceptance tests.

#include <algorithm>
#include <cmath>
#include <fstream>
#include <sstream>
#include <string>
#include <vector>

#include <boost/math/distributions/fisher_f.hpp>
#include <boost/math/distributions/students_t.hpp>
#include <boost/multiprecision/cpp_bin_float.hpp>

#include "agvsim/kvfile.hpp"
#include "agvsim/stochastics.hpp"

namespace oracle {

// Travel time as the integral of dx / v(x), where the admissible speed at x is
// bounded by the peak speed, by acceleration from rest at 0 and (optionally) by
// braking to rest at D. The endpoint singularities are removed with x = s^2.
inline double profile_time(double D, double vpeak, double a, double d, bool stop) {
    auto v = [&](double x) {
        double s = std::min(vpeak, std::sqrt(2 * a * x));
        if (stop) s = std::min(s, std::sqrt(2 * d * std::max(0.0, D - x)));
        return s;
    };
    static const double gx[5] = {-0.9061798459386640, -0.5384693101056831, 0.0,
                                 0.5384693101056831, 0.9061798459386640};
    static const double gw[5] = {0.2369268850561891, 0.4786286704993665, 0.5688888888888889,
                                 0.4786286704993665, 0.2369268850561891};
    auto integrate = [&](auto f, double lo, double hi, int panels) {
        double h = (hi - lo) / panels, sum = 0;
        for (int p = 0; p < panels; ++p) {
            double c = lo + (p + 0.5) * h;
            for (int k = 0; k < 5; ++k) sum += gw[k] * f(c + 0.5 * h * gx[k]);
        }
        return sum * 0.5 * h;
    };
    double half = D / 2;
    double root = std::sqrt(half);
    // first half: x = s^2
    double t1 = integrate([&](double s) { return s <= 0 ? 2 / std::sqrt(2 * a) : 2 * s / v(s * s); }, 0,
                          root, 4000);
    double t2;
    if (stop) {
        // second half: x = D - s^2
        t2 = integrate(
            [&](double s) { return s <= 0 ? 2 / std::sqrt(2 * d) : 2 * s / v(D - s * s); }, 0, root,
            4000);
    } else {
        t2 = integrate([&](double x) { return 1 / v(x); }, half, D, 4000);
    }
    return t1 + t2;
}

using big = boost::multiprecision::cpp_bin_float_50;

inline big big_mean(const std::vector<double>& x) {
    big s = 0;
    for (double v : x) s += big(v);
    return s / big(x.size());
}

inline big big_var(const std::vector<double>& x) {
    big m = big_mean(x), s = 0;
    for (double v : x) s += (big(v) - m) * (big(v) - m);
    return s / big(x.size() - 1);
}

struct Welch {
    double t, df, p;
};

inline Welch welch(const std::vector<double>& a, const std::vector<double>& b) {
    big va = big_var(a) / big(a.size()), vb = big_var(b) / big(b.size());
    big t = (big_mean(a) - big_mean(b)) / sqrt(va + vb);
    big df = (va + vb) * (va + vb) /
             (va * va / big(a.size() - 1) + vb * vb / big(b.size() - 1));
    boost::math::students_t_distribution<big> dist(df);
    big p = 2 * boost::math::cdf(dist, -abs(t));
    return {static_cast<double>(t), static_cast<double>(df), static_cast<double>(p)};
}

struct FTest {
    double f, p;
};

inline FTest ftest(const std::vector<double>& a, const std::vector<double>& b) {
    big va = big_var(a), vb = big_var(b);
    bool a_big = va >= vb;
    big f = a_big ? va / vb : vb / va;
    big d1 = big((a_big ? a.size() : b.size()) - 1);
    big d2 = big((a_big ? b.size() : a.size()) - 1);
    boost::math::fisher_f_distribution<big> dist(d1, d2);
    big p = 2 * boost::math::cdf(boost::math::complement(dist, f));
    if (p > 1) p = 1;
    return {static_cast<double>(f), static_cast<double>(p)};
}

inline std::string read_file(const std::string& path) {
    std::ifstream in(path);
    std::stringstream ss;
    ss << in.rdbuf();
    return ss.str();
}

// Weekday release CDFs as written in the bundled reference scenario.
inline std::vector<agvsim::EmpiricalCdf> appendix_release_cdfs() {
    auto doc = agvsim::kv::parse(read_file(std::string(AGVSIM_DATA_DIR) + "/reference_M.scn"));
    std::vector<agvsim::EmpiricalCdf> out;
    for (const auto* s : doc.all("weekday"))
        out.push_back(agvsim::parse_disc(s->require("release_time").as_text()));
    return out;
}

// Kolmogorov distance between the step CDF and the empirical CDF of draws.
inline double kolmogorov(const agvsim::EmpiricalCdf& c, std::vector<double> draws) {
    std::sort(draws.begin(), draws.end());
    double worst = 0, n = static_cast<double>(draws.size());
    for (const auto& p : c.points) {
        auto k = std::upper_bound(draws.begin(), draws.end(), p.value) - draws.begin();
        worst = std::max(worst, std::fabs(static_cast<double>(k) / n - c.cdf(p.value)));
    }
    return worst;
}

}  // namespace oracle
