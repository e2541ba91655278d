#pragma once

// Random variates, the per-purpose RNG streams of a replication, and the
// small set of estimators and tests used to compare simulated and observed
// travel times.

#include <array>
#include <cstdint>
#include <span>
#include <stdexcept>
#include <string>
#include <string_view>
#include <utility>
#include <vector>

namespace agvsim {

class StatsError : public std::invalid_argument {
public:
    using std::invalid_argument::invalid_argument;
};

struct TriangularDist {
    double a = 0.0;  // min
    double m = 0.0;  // mode
    double b = 1.0;  // max

    /// Throws StatsError unless a <= m <= b and a < b.
    void validate() const;
    double mean() const { return (a + m + b) / 3.0; }
    double cdf(double x) const;
    std::string to_literal() const;  // "TRIA(a,m,b)"
};

struct CdfPoint {
    double cumulative_probability = 0.0;
    double value = 0.0;
};

struct EmpiricalCdf {
    std::vector<CdfPoint> points;

    /// Probabilities non-decreasing in [0,1] ending at exactly 1; values non-decreasing.
    void validate() const;
    /// P(X <= x) of the step distribution.
    double cdf(double x) const;
    std::string to_literal() const;  // "DISC(p1,v1,...)"
};

/// Inverse-CDF transform; u in [0,1].
double sample_triangular(const TriangularDist& d, double u);
/// Value of the first point whose cumulative probability is >= u.
double sample_discrete_cdf(const EmpiricalCdf& c, double u);

TriangularDist parse_tria(std::string_view literal);
EmpiricalCdf parse_disc(std::string_view literal);

// ---------------------------------------------------------------------------
// RNG streams

enum class Stream : int { case_count = 0, release_time = 1, picking_time = 2, dispatch_tiebreak = 3 };
inline constexpr int kStreamCount = 4;

/// 64-bit generator with a 53-bit open-interval uniform. Deterministic across
/// platforms (no std::distribution involved).
class RandomStream {
public:
    explicit RandomStream(std::uint64_t seed = 0);
    std::uint64_t next_u64();
    /// Uniform on the open interval (0,1).
    double uniform();
    /// Uniform integer in [0, n).
    std::uint64_t below(std::uint64_t n);

private:
    std::array<std::uint64_t, 4> s_{};
};

/// One independent stream per purpose, derived from (master seed, replication).
class RngPolicy {
public:
    RngPolicy(std::uint64_t master_seed, std::uint64_t replication);
    RandomStream& stream(Stream s) { return streams_[static_cast<int>(s)]; }
    std::uint64_t master_seed() const { return master_; }

    static std::uint64_t derive_seed(std::uint64_t master_seed, std::uint64_t replication, Stream s);

private:
    std::uint64_t master_;
    std::array<RandomStream, kStreamCount> streams_;
};

// ---------------------------------------------------------------------------
// Estimators and tests

struct TestResult {
    double statistic = 0.0;
    double degrees_of_freedom = 0.0;  // first df for F tests
    double degrees_of_freedom2 = 0.0;
    double p_value = 1.0;
    std::pair<double, double> confidence_interval{0.0, 0.0};
    double level = 0.95;
    double estimate = 0.0;  // mean, mean difference, or variance ratio
};

double mean(std::span<const double> x);
/// Sample variance (n-1 denominator).
double variance(std::span<const double> x);
double stddev(std::span<const double> x);
/// Linear-interpolated quantile (type 7), q in [0,1]; x need not be sorted.
double quantile(std::vector<double> x, double q);

/// Two-sided Welch test on mean(a) - mean(b) with Welch-Satterthwaite df.
TestResult welch_t_test(std::span<const double> a, std::span<const double> b, double level = 0.95);

enum class VarianceTest { f_ratio, levene };
/// Two-sided variance comparison. F-test: statistic = larger / smaller sample
/// variance. Levene: ANOVA F on absolute deviations from group means.
TestResult variance_ratio_test(std::span<const double> a, std::span<const double> b,
                               double level = 0.95, VarianceTest kind = VarianceTest::f_ratio);

/// Student-t confidence interval on the mean.
TestResult mean_ci(std::span<const double> x, double level = 0.95);

double coefficient_of_variation(std::span<const double> x);

namespace dist {
/// Regularized incomplete beta I_x(a, b).
double incomplete_beta(double a, double b, double x);
double student_t_cdf(double t, double df);
/// Inverse of student_t_cdf for p in (0,1).
double student_t_quantile(double p, double df);
double f_cdf(double f, double d1, double d2);
double f_quantile(double p, double d1, double d2);
}  // namespace dist

}  // namespace agvsim
