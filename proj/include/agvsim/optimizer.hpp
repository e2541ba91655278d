#pragma once

// Simulation-optimization of per-weekday Kanban caps: plan evaluation under
// common random numbers, multi-start local search, and solution filtering.

#include <array>
#include <functional>
#include <optional>
#include <string>
#include <vector>

#include "agvsim/workflow.hpp"

namespace agvsim {

struct WeekdayStats {
    int days = 0;
    int trips = 0;
    double mean_travel = 0, min_travel = 0, max_travel = 0;  // clean trips
    double mean_tc = 0;
    double mean_clock = 0;  // completion, minutes after 8 am
};

struct EvaluationResult {
    FleetPlan plan;
    int replications = 0;
    std::array<WeekdayStats, kWeekdays> weekday{};
    double min_travel = 0, max_travel = 0, avg_travel = 0;  // per clean trip
    double avg_tc = 0;
    double avg_clock = 0;
    std::vector<double> rep_daily_travel;  // per rep: mean over days of summed clean travel
    std::vector<double> rep_sum_tc;        // per rep: sum of daily T_c
    std::vector<double> rep_mean_tc;       // per rep: mean daily T_c
    double mean_daily_travel = 0;
    double mean_sum_tc = 0;
    bool feasible = true;
};

/// Runs `replications` seeded replications (0..n-1, common random numbers
/// across plans) and aggregates clean-trip travel and completion times.
EvaluationResult evaluate(const FleetPlan& plan, const Scenario& sc, int replications, int jobs = 1);

/// Aggregation only; exposed for tests.
EvaluationResult summarize(const FleetPlan& plan, const std::vector<ReplicationResult>& reps);

enum class Objective { min_total_travel, min_sum_completion };

struct TcConstraint {
    double bound = 200.0;
    /// Empty: the replication mean must meet the bound. Otherwise this
    /// quantile of the per-replication means must.
    std::optional<double> quantile;
};

struct SearchConfig {
    Objective objective = Objective::min_total_travel;
    std::optional<TcConstraint> constraint;
    int budget = 60;  // plan evaluations
    int replications = 30;
    int jobs = 1;
    bool exhaustive = false;  // also chosen when the budget covers the space
    std::vector<int> starts{3, 7, 11};  // constant plans, clamped to bounds
    std::array<int, kWeekdays> lo{1, 1, 1, 1, 1};
    std::array<int, kWeekdays> hi{11, 11, 11, 11, 11};
};

struct RankedPlan {
    EvaluationResult eval;
    double objective = 0;
    double violation = 0;  // T_c above the bound, 0 when feasible
};

struct SearchResult {
    std::vector<RankedPlan> ranked;  // every evaluated plan, best first
    int evaluations = 0;
    bool exhaustive = false;
};

using Evaluator = std::function<EvaluationResult(const FleetPlan&)>;

/// Objective value and constraint check of one evaluation.
RankedPlan score(const EvaluationResult& e, const SearchConfig& cfg);
/// Feasible first, then objective, then violation, then plan order.
bool ranks_before(const RankedPlan& a, const RankedPlan& b);

/// Steepest-descent over +-1 changes of one weekday, started from each
/// constant plan in `cfg.starts`; evaluations are memoized and consumed in
/// plan order. Throws std::invalid_argument on a zero budget.
SearchResult search(const SearchConfig& cfg, const Evaluator& eval);
SearchResult search(const SearchConfig& cfg, const Scenario& sc);

struct FilterCriteria {
    int max_daily_agvs = 11;
    double max_avg_travel = 9.62;
    double latest_clock = 545.0;  // 5:05 pm
};

bool passes(const EvaluationResult& e, const FilterCriteria& c);
/// Order-preserving subset.
std::vector<RankedPlan> filter_candidates(const std::vector<RankedPlan>& in, const FilterCriteria& c);

/// "5:03:01 PM" for minutes after 8 am.
std::string format_clock(double minutes_after_8am);

/// Columns rank,mon,tue,wed,thu,fri,min_travel,max_travel,avg_travel,
/// avg_completion_clock,feasible followed by avg_completion_min,objective.
std::string format_report(const std::vector<RankedPlan>& plans);

}  // namespace agvsim
