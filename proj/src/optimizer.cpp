#include "agvsim/optimizer.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <limits>
#include <map>
#include <set>
#include <stdexcept>

namespace agvsim {

EvaluationResult summarize(const FleetPlan& plan, const std::vector<ReplicationResult>& reps) {
    EvaluationResult e;
    e.plan = plan;
    e.replications = static_cast<int>(reps.size());
    const double inf = std::numeric_limits<double>::infinity();
    std::array<double, kWeekdays> wsum{}, wtc{}, wclock{};
    std::array<double, kWeekdays> wmin, wmax;
    wmin.fill(inf);
    wmax.fill(-inf);
    double sum = 0, tc = 0, clock = 0;
    long n = 0, ndays = 0;
    e.min_travel = inf;
    e.max_travel = -inf;
    for (const auto& r : reps) {
        double daily = 0, tcsum = 0;
        int tdays = 0;
        for (const auto& d : r.days) {
            daily += d.clean_sum;
            if (!d.has_tc()) continue;
            auto& w = e.weekday[d.weekday];
            w.days++;
            w.trips += d.clean_n;
            wsum[d.weekday] += d.clean_sum;
            wtc[d.weekday] += d.tc();
            wclock[d.weekday] += d.completion_clock();
            wmin[d.weekday] = std::min(wmin[d.weekday], d.clean_min);
            wmax[d.weekday] = std::max(wmax[d.weekday], d.clean_max);
            sum += d.clean_sum;
            n += d.clean_n;
            tc += d.tc();
            clock += d.completion_clock();
            ++ndays;
            tcsum += d.tc();
            ++tdays;
        }
        e.rep_daily_travel.push_back(r.days.empty() ? 0 : daily / r.days.size());
        e.rep_sum_tc.push_back(tcsum);
        e.rep_mean_tc.push_back(tdays ? tcsum / tdays : 0);
    }
    for (int w = 0; w < kWeekdays; ++w) {
        auto& s = e.weekday[w];
        if (!s.days) continue;
        s.mean_travel = wsum[w] / s.trips;
        s.min_travel = wmin[w];
        s.max_travel = wmax[w];
        s.mean_tc = wtc[w] / s.days;
        s.mean_clock = wclock[w] / s.days;
        e.min_travel = std::min(e.min_travel, wmin[w]);
        e.max_travel = std::max(e.max_travel, wmax[w]);
    }
    if (n == 0) e.min_travel = e.max_travel = 0;
    e.avg_travel = n ? sum / n : 0;
    e.avg_tc = ndays ? tc / ndays : 0;
    e.avg_clock = ndays ? clock / ndays : 0;
    for (double x : e.rep_daily_travel) e.mean_daily_travel += x;
    for (double x : e.rep_sum_tc) e.mean_sum_tc += x;
    if (!reps.empty()) {
        e.mean_daily_travel /= reps.size();
        e.mean_sum_tc /= reps.size();
    }
    return e;
}

EvaluationResult evaluate(const FleetPlan& plan, const Scenario& sc, int replications, int jobs) {
    RunOptions opt;
    opt.keep_trips = false;
    return summarize(plan, run_replications(sc, plan, replications, jobs, opt));
}

RankedPlan score(const EvaluationResult& e, const SearchConfig& cfg) {
    RankedPlan r;
    r.eval = e;
    r.objective = cfg.objective == Objective::min_total_travel ? e.mean_daily_travel : e.mean_sum_tc;
    if (cfg.constraint) {
        double v;
        if (cfg.constraint->quantile)
            v = quantile(e.rep_mean_tc, *cfg.constraint->quantile);
        else {
            v = 0;
            for (double x : e.rep_mean_tc) v += x;
            v /= std::max<std::size_t>(1, e.rep_mean_tc.size());
        }
        r.violation = std::max(0.0, v - cfg.constraint->bound);
    }
    r.eval.feasible = r.violation == 0;
    return r;
}

bool ranks_before(const RankedPlan& a, const RankedPlan& b) {
    if (a.eval.feasible != b.eval.feasible) return a.eval.feasible;
    if (!a.eval.feasible && a.violation != b.violation) return a.violation < b.violation;
    if (a.objective != b.objective) return a.objective < b.objective;
    return a.eval.plan < b.eval.plan;
}

namespace {

long space_size(const SearchConfig& c) {
    long n = 1;
    for (int w = 0; w < kWeekdays; ++w) n *= c.hi[w] - c.lo[w] + 1;
    return n;
}

}  // namespace

SearchResult search(const SearchConfig& cfg, const Evaluator& eval) {
    if (cfg.budget <= 0) throw std::invalid_argument("search budget must be positive");
    for (int w = 0; w < kWeekdays; ++w)
        if (cfg.lo[w] < 1 || cfg.lo[w] > cfg.hi[w]) throw std::invalid_argument("bad search bounds");
    std::map<FleetPlan, RankedPlan> seen;
    SearchResult res;
    int limit = cfg.budget;
    auto get = [&](const FleetPlan& p) -> const RankedPlan* {
        if (auto it = seen.find(p); it != seen.end()) return &it->second;
        if (res.evaluations >= limit) return nullptr;
        ++res.evaluations;
        return &seen.emplace(p, score(eval(p), cfg)).first->second;
    };

    res.exhaustive = cfg.exhaustive || space_size(cfg) <= cfg.budget;
    if (res.exhaustive) {
        FleetPlan p{cfg.lo};
        while (true) {
            if (!get(p)) break;
            int w = kWeekdays - 1;
            for (; w >= 0 && p.k[w] == cfg.hi[w]; --w) p.k[w] = cfg.lo[w];
            if (w < 0) break;
            ++p.k[w];
        }
    } else {
        // each start gets an equal share of the budget
        int n = static_cast<int>(cfg.starts.size());
        for (int i = 0; i < n; ++i) {
            int s = cfg.starts[i];
            limit = static_cast<int>(static_cast<long>(cfg.budget) * (i + 1) / n);
            FleetPlan cur;
            for (int w = 0; w < kWeekdays; ++w) cur.k[w] = std::clamp(s, cfg.lo[w], cfg.hi[w]);
            const RankedPlan* best = get(cur);
            while (best) {
                std::set<FleetPlan> nb;  // ordered by plan
                for (int w = 0; w < kWeekdays; ++w)
                    for (int d : {-1, 1}) {
                        FleetPlan q = cur;
                        q.k[w] += d;
                        if (q.k[w] >= cfg.lo[w] && q.k[w] <= cfg.hi[w]) nb.insert(q);
                    }
                const RankedPlan* next = nullptr;
                for (const auto& q : nb) {
                    const RankedPlan* r = get(q);
                    if (r && (!next || ranks_before(*r, *next))) next = r;
                }
                if (!next || !ranks_before(*next, *best)) break;
                best = next;
                cur = best->eval.plan;
            }
        }
    }
    for (auto& [p, r] : seen) res.ranked.push_back(r);
    std::sort(res.ranked.begin(), res.ranked.end(), ranks_before);
    return res;
}

SearchResult search(const SearchConfig& cfg, const Scenario& sc) {
    return search(cfg, [&](const FleetPlan& p) { return evaluate(p, sc, cfg.replications, cfg.jobs); });
}

bool passes(const EvaluationResult& e, const FilterCriteria& c) {
    for (int k : e.plan.k)
        if (k > c.max_daily_agvs) return false;
    return e.avg_travel <= c.max_avg_travel && e.avg_clock <= c.latest_clock;
}

std::vector<RankedPlan> filter_candidates(const std::vector<RankedPlan>& in, const FilterCriteria& c) {
    std::vector<RankedPlan> out;
    for (const auto& r : in)
        if (passes(r.eval, c)) out.push_back(r);
    return out;
}

std::string format_clock(double minutes) {
    long s = std::lround(minutes * 60.0) + 8 * 3600;
    s %= 86400;
    if (s < 0) s += 86400;
    int h = static_cast<int>(s / 3600), m = static_cast<int>(s / 60 % 60), sec = static_cast<int>(s % 60);
    const char* ap = h >= 12 ? "PM" : "AM";
    int h12 = h % 12 == 0 ? 12 : h % 12;
    char b[32];
    std::snprintf(b, sizeof b, "%d:%02d:%02d %s", h12, m, sec, ap);
    return b;
}

std::string format_report(const std::vector<RankedPlan>& plans) {
    std::string s =
        "rank,mon,tue,wed,thu,fri,min_travel,max_travel,avg_travel,avg_completion_clock,feasible,"
        "avg_completion_min,objective\n";
    char b[256];
    int rank = 0;
    for (const auto& r : plans) {
        const auto& e = r.eval;
        std::snprintf(b, sizeof b, "%d,%d,%d,%d,%d,%d,%.2f,%.2f,%.2f,%s,%s,%.4f,%.4f\n", ++rank, e.plan.k[0],
                      e.plan.k[1], e.plan.k[2], e.plan.k[3], e.plan.k[4], e.min_travel, e.max_travel, e.avg_travel,
                      format_clock(e.avg_clock).c_str(), e.feasible ? "yes" : "no", e.avg_clock, r.objective);
        s += b;
    }
    return s;
}

}  // namespace agvsim
