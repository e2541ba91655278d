#include "doctest.h"

#include <algorithm>
#include <cmath>
#include <map>

#include "agvsim/optimizer.hpp"

using namespace agvsim;

namespace {

Scenario reference() { return load_scenario(std::string(AGVSIM_DATA_DIR) + "/reference_M.scn"); }

// Small two-weekday instance: pool n, light days.
Scenario toy(RandomStream& rs, int n) {
    Scenario sc = reference();
    sc.set_variant(rs.below(2) ? Variant::M : Variant::S);
    sc.seed = rs.next_u64() % 100000;
    sc.pool = n;
    sc.days = 2;
    sc.fleet = FleetPlan::constant(1);
    int base = 3 + static_cast<int>(rs.below(6));
    for (auto& w : sc.weekdays) w.case_count = {double(base), double(base + 2), double(base + 5)};
    return sc;
}

struct Pick {
    FleetPlan plan;
    double obj;
    double viol;
};

// Enumeration with its own ranking rule.
Pick brute_force(const Scenario& sc, int n, Objective o, std::optional<double> bound, int reps) {
    std::vector<Pick> all;
    for (int a = 1; a <= n; ++a)
        for (int b = 1; b <= n; ++b) {
            FleetPlan p{{a, b, 1, 1, 1}};
            auto e = evaluate(p, sc, reps);
            double obj = 0, tc = 0;
            for (int r = 0; r < reps; ++r) {
                const auto& days = run_replication(sc, p, r).days;
                double sum = 0, tsum = 0;
                for (const auto& d : days) {
                    sum += d.clean_sum;
                    tsum += d.tc();
                }
                obj += o == Objective::min_total_travel ? sum / days.size() : tsum;
                tc += tsum / days.size();
            }
            obj /= reps;
            tc /= reps;
            CHECK(obj == doctest::Approx(o == Objective::min_total_travel ? e.mean_daily_travel : e.mean_sum_tc));
            all.push_back({p, obj, bound ? std::max(0.0, tc - *bound) : 0.0});
        }
    return *std::min_element(all.begin(), all.end(), [](const Pick& x, const Pick& y) {
        bool fx = x.viol == 0, fy = y.viol == 0;
        if (fx != fy) return fx;
        if (!fx && x.viol != y.viol) return x.viol < y.viol;
        if (std::fabs(x.obj - y.obj) > 1e-9 * std::max(1.0, std::fabs(x.obj))) return x.obj < y.obj;
        return x.plan < y.plan;
    });
}

EvaluationResult fake(FleetPlan p, double travel, double clock) {
    EvaluationResult e;
    e.plan = p;
    e.avg_travel = travel;
    e.avg_clock = clock;
    return e;
}

}  // namespace

TEST_CASE("optimizer: clock formatting") {
    CHECK(format_clock(0) == "8:00:00 AM");
    CHECK(format_clock(240) == "12:00:00 PM");
    CHECK(format_clock(545) == "5:05:00 PM");
    CHECK(format_clock(543 + 1.0 / 60) == "5:03:01 PM");
    CHECK(format_clock(508 + 46.0 / 60) == "4:28:46 PM");
    CHECK(format_clock(960) == "12:00:00 AM");
}

TEST_CASE("optimizer: summary statistics from replication results") {
    ReplicationResult r;
    DayMetrics d0, d1;
    d0.day = 0, d0.weekday = 0, d0.clean_n = 2, d0.clean_sum = 10, d0.clean_min = 4, d0.clean_max = 6;
    d0.first_pickup = 420, d0.last_drop = 600;
    d1.day = 1, d1.weekday = 1, d1.clean_n = 1, d1.clean_sum = 3, d1.clean_min = 3, d1.clean_max = 3;
    d1.first_pickup = 1440 + 430, d1.last_drop = 1440 + 500;
    r.days = {d0, d1};
    ReplicationResult s = r;
    s.days[1].last_drop = 1440 + 530;
    auto e = summarize(FleetPlan{{2, 3, 1, 1, 1}}, {r, s});
    CHECK(e.replications == 2);
    CHECK(e.avg_travel == doctest::Approx(26.0 / 6));
    CHECK(e.min_travel == 3);
    CHECK(e.max_travel == 6);
    CHECK(e.mean_daily_travel == doctest::Approx(6.5));
    CHECK(e.rep_sum_tc == std::vector<double>{250, 280});
    CHECK(e.mean_sum_tc == doctest::Approx(265));
    CHECK(e.avg_clock == doctest::Approx((600 + 500 + 600 + 530) / 4.0));
    CHECK(e.weekday[1].mean_tc == doctest::Approx(85));
    CHECK(e.weekday[0].mean_travel == doctest::Approx(5));

    SearchConfig c;
    c.constraint = TcConstraint{120.0, std::nullopt};
    auto sc = score(e, c);
    CHECK(sc.violation == doctest::Approx(132.5 - 120));
    CHECK_FALSE(sc.eval.feasible);
    c.constraint = TcConstraint{130.0, 0.0};
    CHECK(score(e, c).eval.feasible);
}

TEST_CASE("optimizer: filtering is an order-stable subset") {
    FilterCriteria c;
    std::vector<RankedPlan> in(4);
    in[0].eval = fake(FleetPlan{{3, 3, 3, 4, 4}}, 3.43, 543.0);
    in[1].eval = fake(FleetPlan{{3, 3, 12, 4, 4}}, 3.43, 543.0);
    in[2].eval = fake(FleetPlan{{3, 3, 3, 4, 4}}, 3.43, 550.0);
    in[3].eval = fake(FleetPlan{{8, 7, 8, 10, 8}}, 9.62, 545.0);
    auto out = filter_candidates(in, c);
    REQUIRE(out.size() == 2);
    CHECK(out[0].eval.plan == in[0].eval.plan);
    CHECK(out[1].eval.plan == in[3].eval.plan);
    c.max_daily_agvs = 12;
    CHECK(filter_candidates(in, c).size() == 3);
    in[0].eval.avg_travel = 9.63;
    CHECK_FALSE(passes(in[0].eval, FilterCriteria{}));

    std::string rep = format_report(out);
    CHECK(rep.rfind("rank,mon,tue,wed,thu,fri,min_travel,max_travel,avg_travel,avg_completion_clock,feasible", 0) == 0);
    CHECK(rep.find("\n2,8,7,8,10,8,") != std::string::npos);
    CHECK(rep.find("5:05:00 PM") != std::string::npos);
}

TEST_CASE("optimizer: evaluation is repeatable and congestion shows") {
    Scenario sc = reference();
    sc.days = 5;
    auto a = evaluate(FleetPlan::constant(11), sc, 3);
    auto b = evaluate(FleetPlan::constant(11), sc, 3, 2);
    CHECK(a.avg_travel == b.avg_travel);
    CHECK(a.rep_sum_tc == b.rep_sum_tc);
    CHECK(a.min_travel <= a.avg_travel);
    CHECK(a.avg_travel <= a.max_travel);
    auto c = evaluate(FleetPlan::constant(3), sc, 3);
    CHECK(a.avg_travel > c.avg_travel);
    CHECK(a.avg_tc < c.avg_tc);
}

TEST_CASE("optimizer: exhaustive search equals enumeration on 20 toys") {
    RandomStream rs(2024);
    int agree = 0;
    for (int t = 0; t < 20; ++t) {
        int n = 2 + static_cast<int>(rs.below(3));
        Scenario sc = toy(rs, n);
        SearchConfig cfg;
        cfg.objective = rs.below(2) ? Objective::min_total_travel : Objective::min_sum_completion;
        std::optional<double> bound;
        if (rs.below(2)) {
            bound = 20 + static_cast<double>(rs.below(40));
            cfg.constraint = TcConstraint{*bound, std::nullopt};
        }
        cfg.replications = 2;
        cfg.budget = n * n;
        cfg.lo = {1, 1, 1, 1, 1};
        cfg.hi = {n, n, 1, 1, 1};
        auto res = search(cfg, sc);
        CHECK(res.exhaustive);
        CHECK(res.evaluations == n * n);
        auto want = brute_force(sc, n, cfg.objective, bound, 2);
        const auto& got = res.ranked.front();
        bool same = got.eval.plan == want.plan && std::fabs(got.objective - want.obj) < 1e-9 * std::max(1.0, want.obj);
        CHECK_MESSAGE(same, "toy ", t, ": search ", got.eval.plan.to_string(), " vs ", want.plan.to_string());
        agree += same;
    }
    CHECK(agree == 20);
}

TEST_CASE("optimizer: local search beats its starts and respects the budget") {
    // synthetic convex landscape with its minimum at (4,6,5,7,3)
    const std::array<int, 5> opt{4, 6, 5, 7, 3};
    int calls = 0;
    Evaluator f = [&](const FleetPlan& p) {
        ++calls;
        EvaluationResult e;
        e.plan = p;
        for (int w = 0; w < 5; ++w) e.mean_daily_travel += (p.k[w] - opt[w]) * (p.k[w] - opt[w]);
        e.rep_mean_tc = {100.0 + p.total()};
        return e;
    };
    SearchConfig cfg;
    cfg.budget = 400;
    auto r = search(cfg, f);
    CHECK_FALSE(r.exhaustive);
    CHECK(r.ranked.front().eval.plan.k == opt);
    CHECK(calls == r.evaluations);
    for (const auto& x : r.ranked)
        if (x.eval.plan == FleetPlan::constant(3) || x.eval.plan == FleetPlan::constant(7))
            CHECK(r.ranked.front().objective <= x.objective);
    for (std::size_t i = 1; i < r.ranked.size(); ++i) CHECK_FALSE(ranks_before(r.ranked[i], r.ranked[i - 1]));

    // a constraint pushes the optimum away from small plans
    cfg.constraint = TcConstraint{122.0, std::nullopt};
    auto c = search(cfg, f);
    CHECK(c.ranked.front().eval.feasible);
    CHECK(c.ranked.front().eval.plan.total() <= 22);

    cfg.budget = 7;
    calls = 0;
    auto small = search(cfg, f);
    CHECK(small.evaluations <= 7);
    CHECK(calls <= 7);
    cfg.budget = 0;
    CHECK_THROWS_AS(search(cfg, f), std::invalid_argument);
    cfg.budget = 400;
    cfg.constraint.reset();
    auto again = search(cfg, f);
    REQUIRE(again.ranked.size() == r.ranked.size());
    for (std::size_t i = 0; i < r.ranked.size(); ++i) CHECK(again.ranked[i].eval.plan == r.ranked[i].eval.plan);
}
