#pragma once

// Cart lifecycles around the traffic engine: daily case schedules, picking
// with employees and the cart pool, the Kanban cap on active AGVs, washers,
// drying, and per-day measures. One replication is one sequential run.

#include <array>
#include <cstdint>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

#include "agvsim/engine.hpp"
#include "agvsim/layout.hpp"
#include "agvsim/stochastics.hpp"

namespace agvsim {

class ScenarioError : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

inline constexpr int kWeekdays = 5;
inline constexpr std::array<std::string_view, kWeekdays> kWeekdayNames{"mon", "tue", "wed", "thu", "fri"};
int parse_weekday(std::string_view s);  // throws ScenarioError

struct FleetPlan {
    std::array<int, kWeekdays> k{};

    static FleetPlan constant(int n) { return {{n, n, n, n, n}}; }
    int max() const;
    int total() const;
    std::string to_string() const;  // "3-3-3-4-4"
    auto operator<=>(const FleetPlan&) const = default;
};

struct WeekdayInputs {
    TriangularDist case_count;
    EmpiricalCdf release;
};

struct Scenario {
    Variant variant = Variant::M;
    std::string layout_source = "reference";
    NetworkSpec network;  // variant applied
    FleetPlan fleet = FleetPlan::constant(11);
    int pool = 11;  // physical AGVs
    int days = 30;
    int replications = 30;
    std::uint64_t seed = 1;
    double wash_cycle_min = 15.0;
    double drying_min = 30.0;
    int loading_employees = 4;
    int carts = 110;
    int washers = 3;
    TriangularDist picking_time{3, 4, 5};
    double clean_start_min = 420.0;
    double handling_min = 0.0;
    KinematicsParams kinematics;
    std::array<WeekdayInputs, kWeekdays> weekdays;
    // Historical counts per weekday, used in turn instead of TRIA draws.
    std::optional<std::array<std::vector<int>, kWeekdays>> case_volumes;

    /// Re-applies `v` to the layout.
    void set_variant(Variant v);
    void validate() const;
};

/// Parses a scenario. Relative `layout` and `case_volume_file` paths resolve
/// against `base_dir`.
Scenario parse_scenario(std::string_view text, const std::string& base_dir = ".");
Scenario load_scenario(const std::string& path);

/// Rows `date,weekday,case_count` with a header line.
std::array<std::vector<int>, kWeekdays> parse_case_volumes(std::string_view text);

struct SurgicalCase {
    int id = -1;
    int day = 0;
    int weekday = 0;
    double release_offset = 0.0;  // minutes after 8 am of the next day
    double picking_min = 0.0;
};

/// Draws one day's cases: count from `case_count` unless `fixed_count` is set,
/// then per case a release offset and a picking time.
std::vector<SurgicalCase> generate_day_schedule(int day, const WeekdayInputs& in,
                                                const TriangularDist& picking, RngPolicy& rng,
                                                std::optional<int> fixed_count, int first_id);

/// FIFO token pool bounding the number of AGVs in service.
class KanbanController {
public:
    explicit KanbanController(int cap);

    /// True when granted at once; otherwise the token waits in FIFO order.
    bool acquire(int token);
    /// Frees one grant; returns the tokens granted as a consequence.
    std::vector<int> release();
    /// Changes the cap; returns tokens granted by an increase.
    std::vector<int> set_cap(int cap);

    int cap() const { return cap_; }
    int active() const { return active_; }
    int queued() const { return static_cast<int>(queue_.size()); }

private:
    std::vector<int> drain();
    int cap_;
    int active_ = 0;
    std::vector<int> queue_;
    std::size_t head_ = 0;
};

struct TripRecord {
    int rep = 0;
    int day = 0;  // day of the pickup
    int weekday = 0;
    int case_day = 0;
    int cart = -1;
    CartState state = CartState::clean;
    int agv = -1;
    double assigned = 0.0;
    double pickup = 0.0;
    double dropoff = 0.0;
    double travel() const { return dropoff - pickup; }
};

/// Last clean drop-off minus first clean pickup; empty when there are none.
std::optional<double> task_completion_time(const std::vector<TripRecord>& clean_trips);

struct DayMetrics {
    int day = 0;
    int weekday = 0;
    int cases = 0;
    int cap = 0;
    int clean_n = 0, soiled_n = 0, washed_n = 0;
    double clean_sum = 0, soiled_sum = 0, washed_sum = 0;  // travel minutes
    double clean_min = 0, clean_max = 0;
    double first_pickup = 0, last_drop = 0;  // absolute minutes, clean trips
    int peak_active = 0;

    bool has_tc() const { return clean_n > 0; }
    double tc() const { return last_drop - first_pickup; }
    double completion_clock() const { return last_drop - 1440.0 * day; }  // minutes after 8 am
    double clean_mean() const { return clean_n ? clean_sum / clean_n : 0.0; }
    double soiled_mean() const { return soiled_n ? soiled_sum / soiled_n : 0.0; }
    double washed_mean() const { return washed_n ? washed_sum / washed_n : 0.0; }
};

struct RunOptions {
    bool record_ledger = false;  // audit zone occupancy (memory heavy)
    bool keep_trips = true;
    bool record_events = false;
};

/// Cart lifecycle step: pick_start, pick_done, wash_queue, wash_start,
/// wash_done, available.
struct CartEvent {
    double time = 0.0;
    int case_id = -1;
    int cart = -1;
    std::string what;
};

struct ReplicationResult {
    int rep = 0;
    std::vector<TripRecord> trips;
    std::vector<DayMetrics> days;  // business days 0..days-1
    EngineStats stats;
    std::vector<CartEvent> events;
    std::vector<std::string> violations;  // kanban, conservation, ledger
    double soiled_sum = 0;  // all soiled trips, drain day included
    int soiled_n = 0;
};

ReplicationResult run_replication(const Scenario& sc, const FleetPlan& plan, int rep,
                                  const RunOptions& opt = {});

/// Replications 0..reps-1; `jobs` > 1 runs them on OpenMP threads. Results
/// are ordered by replication and identical for any `jobs`.
std::vector<ReplicationResult> run_replications(const Scenario& sc, const FleetPlan& plan, int reps,
                                                int jobs, const RunOptions& opt = {});

/// Plain loop over replications; the baseline the parallel runner must match.
std::vector<ReplicationResult> run_replications_serial(const Scenario& sc, const FleetPlan& plan,
                                                       int reps, const RunOptions& opt = {});

}  // namespace agvsim
