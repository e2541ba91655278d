#pragma once

// Zone-controlled guided-path traffic: AGV motion under the end rule,
// intersection claiming, elevator cars, the look-ahead gate and nearest-idle
// dispatch. One Engine is one sequential event loop.

#include <array>
#include <cstdint>
#include <limits>
#include <memory>
#include <stdexcept>
#include <string>
#include <vector>

#include "agvsim/calendar.hpp"
#include "agvsim/kinematics.hpp"
#include "agvsim/layout.hpp"
#include "agvsim/stochastics.hpp"

namespace agvsim {

class DeadlockError : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

enum class AgvPhase { idle_parked, traveling_empty, loaded, in_elevator, held_at_lookahead, blocked };
std::string_view to_string(AgvPhase p);

struct EngineConfig {
    KinematicsParams kinematics;
    double handling_min = 0.0;    // load or unload time at a detent
    double watchdog_min = 1440.0;  // longest tolerated wait of one AGV
    bool record_ledger = false;
    bool record_trace = false;
};

struct Task {
    int id = -1;
    int cart = -1;
    CartState state = CartState::clean;
};

struct TaskOutcome {
    int task = -1;
    int cart = -1;
    int agv = -1;
    CartState state = CartState::clean;
    double assigned = 0.0;  // minutes
    double pickup = 0.0;
    double dropoff = 0.0;
    double nominal_min = 0.0;  // uncongested travel time of the loaded route
    double waited_min = 0.0;   // time spent at rest while loaded
};

/// Receives drop-offs and timer callbacks scheduled through the engine.
class EngineListener {
public:
    virtual ~EngineListener() = default;
    virtual void on_dropoff(const TaskOutcome& outcome) = 0;
    virtual void on_timer(int code, long long payload) = 0;
};

// ---------------------------------------------------------------------------
// Occupancy ledger

enum class HoldKind : std::uint8_t { zone, spur, node, car, detent, park };

struct Hold {
    int agv = -1;
    HoldKind kind = HoldKind::zone;
    int res = -1;  // zone/spur/node resource id, elevator, or station
    double from = 0.0;
    double to = std::numeric_limits<double>::infinity();
};

struct LinkPass {
    int link = -1;
    int agv = -1;
    double enter = 0.0;
    double leave = std::numeric_limits<double>::infinity();
};

struct TaskSpan {
    int task = -1;
    double assigned = 0.0;
    double dropoff = std::numeric_limits<double>::infinity();
};

struct OccupancyLedger {
    std::vector<Hold> holds;
    std::vector<LinkPass> passes;
    std::vector<TaskSpan> tasks;
};

/// Independent audit of a ledger: exclusive zones/spurs/nodes, elevator and
/// detent capacities, continuous holding per AGV (end rule), and no passing
/// on trunk links. Returns one message per violation.
std::vector<std::string> check_ledger(const OccupancyLedger& ledger, const NetworkSpec& spec);

struct TraceEntry {
    double time = 0.0;
    int agv = -1;
    std::string what;  // run, cross, board, exit, pickup, drop, gate, park, assign
    std::string where;
};

struct EngineStats {
    std::uint64_t events = 0;
    std::uint64_t runs = 0;
    std::uint64_t blocked_stops = 0;
    std::uint64_t gate_holds = 0;
    std::uint64_t car_trips = 0;
    int max_active = 0;
};

class Engine {
public:
    Engine(const NetworkSpec& spec, const EngineConfig& cfg, RandomStream* tiebreak);
    ~Engine();
    Engine(const Engine&) = delete;
    Engine& operator=(const Engine&) = delete;

    void set_listener(EngineListener* l) { listener_ = l; }

    /// Adds an AGV parked off-network at the parking station.
    int add_agv();
    int agv_count() const;

    /// Queues a loaded move of the active route for `t.state`; the nearest idle
    /// AGV is assigned immediately when one exists.
    void submit(const Task& t);
    int queued_tasks() const;
    int active_tasks() const;

    void schedule_timer(double time, int code, long long payload);

    double now() const { return cal_.now(); }
    /// Processes the next event; false when none remain.
    bool step();
    void run();
    void run_until(double t);

    /// Throws DeadlockError when an AGV has waited longer than the watchdog.
    void check_watchdog() const;
    /// Throws DeadlockError unless every submitted task has been delivered.
    void require_drained() const;

    double nominal_minutes(CartState s) const;
    /// Empty-travel distance in feet between two nodes (stations only as endpoints).
    double path_distance(int from_node, int to_node) const;

    AgvPhase phase(int agv) const;
    double odometer(int agv) const;

    const EngineStats& stats() const { return stats_; }
    const OccupancyLedger& ledger() const { return ledger_; }
    const std::vector<TraceEntry>& trace() const { return trace_; }
    const NetworkSpec& spec() const { return spec_; }

    struct Impl;

private:
    const NetworkSpec& spec_;
    EngineConfig cfg_;
    EventCalendar cal_;
    EngineListener* listener_ = nullptr;
    EngineStats stats_;
    OccupancyLedger ledger_;
    std::vector<TraceEntry> trace_;
    std::unique_ptr<Impl> impl_;
};

}  // namespace agvsim
