#include "doctest.h"

#include <algorithm>
#include <functional>
#include <map>

#include "agvsim/engine.hpp"
#include "oracles.hpp"

using namespace agvsim;

namespace {

struct Recorder : EngineListener {
    std::vector<TaskOutcome> out;
    std::function<void(const TaskOutcome&)> hook;
    void on_dropoff(const TaskOutcome& o) override {
        out.push_back(o);
        if (hook) hook(o);
    }
    void on_timer(int, long long) override {}
};

// Uncongested loaded travel rebuilt from the route text: every link is a
// rest-to-rest move, the first link after a car includes the boarding
// distance, and a car costs boarding + two door cycles + the ride.
double nominal_oracle(const NetworkSpec& n, CartState s) {
    const auto& r = n.active_route(s);
    KinematicsParams k;
    double sec = 0;
    double carry = 0;
    for (const auto& id : r.link_sequence) {
        std::string first = id.substr(0, id.find('|'));
        int e = n.elevator_index(first);
        if (e >= 0) {
            const auto& el = n.elevators[e];
            sec += oracle::profile_time(el.board_ft, k.peak_fps(false), 0.98, 0.98, true);
            sec += 2 * el.door_delay_s + el.ride_s;
            carry = el.board_ft;
            continue;
        }
        const auto& l = n.links[n.link_index(id)];
        sec += oracle::profile_time(l.length_ft + carry, k.peak_fps(l.turning), 0.98, 0.98, true);
        carry = 0;
    }
    return sec / 60.0;
}

std::vector<const TraceEntry*> find(const Engine& e, int agv, const std::string& what) {
    std::vector<const TraceEntry*> v;
    for (const auto& t : e.trace())
        if ((agv < 0 || t.agv == agv) && t.what == what) v.push_back(&t);
    return v;
}

EngineConfig traced() {
    EngineConfig c;
    c.record_ledger = true;
    c.record_trace = true;
    return c;
}

}  // namespace

TEST_CASE("engine: lone AGV trip equals nominal travel") {
    for (auto v : {Variant::M, Variant::S}) {
        auto net = apply_variant(reference_layout(), v);
        for (auto s : kCartStates) {
            RandomStream rs(1);
            Engine eng(net, traced(), &rs);
            Recorder rec;
            eng.set_listener(&rec);
            eng.add_agv();
            eng.submit({0, 0, s});
            eng.run();
            eng.require_drained();
            REQUIRE(rec.out.size() == 1);
            double travel = rec.out[0].dropoff - rec.out[0].pickup;
            double want = nominal_oracle(net, s);
            CHECK(std::abs(travel - want) * 60 < 1e-4);
            CHECK(std::abs(eng.nominal_minutes(s) - want) * 60 < 1e-4);
            CHECK(rec.out[0].waited_min == doctest::Approx(0.0));
            CHECK(check_ledger(eng.ledger(), net).empty());
            CHECK(eng.phase(0) == AgvPhase::idle_parked);
            CHECK(eng.trace().back().what == "arrive");
            CHECK(eng.trace().back().where == "PARKING");
        }
    }
}

TEST_CASE("engine: elevator event times for a lone clean trip") {
    auto net = apply_variant(reference_layout(), Variant::M);
    RandomStream rs(1);
    Engine eng(net, traced(), &rs);
    Recorder rec;
    eng.set_listener(&rec);
    eng.add_agv();
    eng.submit({0, 0, CartState::clean});
    eng.run();
    auto boards = find(eng, 0, "board");
    auto exits = find(eng, 0, "exit");
    REQUIRE(boards.size() >= 1);
    REQUIRE(exits.size() >= 1);
    // loaded boarding is the last on the way up
    const TraceEntry* b = nullptr;
    for (auto* t : boards)
        if (t->time >= rec.out[0].pickup) {
            b = t;
            break;
        }
    REQUIRE(b);
    const TraceEntry* x = nullptr;
    for (auto* t : exits)
        if (t->time > b->time) {
            x = t;
            break;
        }
    REQUIRE(x);
    double board_s = oracle::profile_time(6, 200.0 / 60, 0.98, 0.98, true);
    double ride_s = net.elevators[net.elevator_index("J")].ride_s;
    CHECK((x->time - b->time) * 60 == doctest::Approx(board_s + 11 + ride_s + 11).epsilon(1e-9));
}

TEST_CASE("engine: random workload keeps the ledger clean and is deterministic") {
    for (auto v : {Variant::M, Variant::S}) {
        auto net = apply_variant(reference_layout(), v);
        std::vector<double> fingerprint[2];
        for (int pass = 0; pass < 2; ++pass) {
            RandomStream tb(7), gen(99);
            Engine eng(net, traced(), &tb);
            Recorder rec;
            eng.set_listener(&rec);
            for (int i = 0; i < 11; ++i) eng.add_agv();
            double t = 0;
            for (int i = 0; i < 300; ++i) {
                t += gen.uniform() * 0.6;
                eng.run_until(t);
                eng.submit({i, i, kCartStates[gen.below(3)]});
            }
            eng.run();
            eng.require_drained();
            REQUIRE(rec.out.size() == 300);
            auto bad = check_ledger(eng.ledger(), net);
            CHECK(bad.empty());
            if (!bad.empty()) MESSAGE(bad.front());
            for (const auto& o : rec.out) {
                CHECK(o.dropoff - o.pickup - o.nominal_min >= -1e-9);
                CHECK(o.pickup >= o.assigned);
                fingerprint[pass].push_back(o.dropoff);
                fingerprint[pass].push_back(o.agv);
            }
            CHECK(eng.stats().max_active <= 11);
        }
        CHECK(fingerprint[0] == fingerprint[1]);
    }
}

TEST_CASE("engine: two clean carts share one door cycle of elevator J") {
    auto net = apply_variant(reference_layout(), Variant::M);
    RandomStream rs(3);
    Engine eng(net, traced(), &rs);
    Recorder rec;
    eng.set_listener(&rec);
    for (int i = 0; i < 3; ++i) eng.add_agv();
    for (int i = 0; i < 3; ++i) eng.submit({i, i, CartState::clean});
    eng.run();
    REQUIRE(rec.out.size() == 3);
    CHECK(check_ledger(eng.ledger(), net).empty());
    // at most two AGVs ride J at once
    int inside = 0, peak = 0;
    std::vector<std::pair<double, int>> ev;
    for (const auto& h : eng.ledger().holds)
        if (h.kind == HoldKind::car) {
            ev.push_back({h.from, 1});
            ev.push_back({h.to, -1});
        }
    std::sort(ev.begin(), ev.end());
    for (auto [t, d] : ev) peak = std::max(peak, inside += d);
    CHECK(peak == 2);
    // two loaded AGVs board before the doors close once
    int shared = 0, since_close = 0;
    for (const auto& t : eng.trace()) {
        if (t.what == "car closing") since_close = 0;
        if (t.what == "board" && t.where == "J" && ++since_close == 2) ++shared;
    }
    CHECK(shared >= 1);
}

TEST_CASE("engine: look-ahead stop holds until a destination detent frees") {
    auto net = apply_variant(reference_layout(), Variant::M);
    net.stations[net.station_index("CCSA")].detent_capacity = 1;
    RandomStream rs(3);
    Engine eng(net, traced(), &rs);
    Recorder rec;
    eng.set_listener(&rec);
    eng.add_agv();
    eng.add_agv();
    eng.submit({0, 0, CartState::clean});
    eng.submit({1, 1, CartState::clean});
    eng.run();
    REQUIRE(rec.out.size() == 2);
    CHECK(eng.stats().gate_holds > 0);
    CHECK(check_ledger(eng.ledger(), net).empty());
    auto first = std::min_element(rec.out.begin(), rec.out.end(),
                                  [](auto& a, auto& b) { return a.dropoff < b.dropoff; });
    int second_agv = first->agv == 0 ? 1 : 0;
    auto gates = find(eng, second_agv, "gate");
    REQUIRE(gates.size() == 1);
    CHECK(gates[0]->time >= first->dropoff);
    CHECK(eng.nominal_minutes(CartState::clean) < rec.out[1].dropoff - rec.out[1].pickup);
}

TEST_CASE("engine: no detent at the destination leaves the task undelivered") {
    auto net = apply_variant(reference_layout(), Variant::M);
    net.stations[net.station_index("CCSA")].detent_capacity = 0;
    RandomStream rs(3);
    Engine eng(net, traced(), &rs);
    eng.add_agv();
    eng.submit({0, 0, CartState::clean});
    eng.schedule_timer(2000, 0, 0);
    eng.run();
    CHECK_THROWS_AS(eng.check_watchdog(), DeadlockError);
    CHECK_THROWS_AS(eng.require_drained(), DeadlockError);
    CHECK(eng.phase(0) == AgvPhase::held_at_lookahead);
}

TEST_CASE("engine: queued requests are served first come first served") {
    auto net = apply_variant(reference_layout(), Variant::M);
    RandomStream rs(3);
    Engine eng(net, traced(), &rs);
    Recorder rec;
    eng.set_listener(&rec);
    eng.add_agv();
    for (int i = 0; i < 4; ++i) eng.submit({i, i, CartState::washed});
    CHECK(eng.queued_tasks() == 3);
    CHECK(eng.active_tasks() == 1);
    eng.run();
    REQUIRE(rec.out.size() == 4);
    for (int i = 0; i < 4; ++i) CHECK(rec.out[i].task == i);
    for (int i = 1; i < 4; ++i) CHECK(rec.out[i].assigned >= rec.out[i - 1].dropoff);
    CHECK(eng.phase(0) == AgvPhase::idle_parked);
}

TEST_CASE("engine: nearest idle AGV takes the request") {
    auto net = apply_variant(reference_layout(), Variant::M);
    RandomStream rs(3);
    Engine eng(net, traced(), &rs);
    Recorder rec;
    eng.set_listener(&rec);
    eng.add_agv();
    eng.add_agv();
    int n = 0;
    rec.hook = [&](const TaskOutcome& o) {
        // the AGV that just unloaded at MD is closer than the parked one
        if (o.task == 0) eng.submit({1, 1, CartState::clean});
        ++n;
    };
    eng.submit({0, 0, CartState::washed});
    eng.run();
    REQUIRE(rec.out.size() == 2);
    CHECK(rec.out[1].agv == rec.out[0].agv);
    CHECK(rec.out[1].assigned == rec.out[1].pickup);
}

TEST_CASE("engine: empty-travel distances treat stations as endpoints") {
    auto net = reference_layout();
    RandomStream rs(3);
    Engine eng(net, {}, &rs);
    int park = net.node_index("PARK"), md = net.node_index("MD"), cssd = net.node_index("CSSD");
    CHECK(eng.path_distance(park, md) == doctest::Approx(30 + 60 + 30));
    CHECK(eng.path_distance(md, cssd) == doctest::Approx(30 + 60 + 30));
    CHECK(eng.path_distance(cssd, md) == doctest::Approx(30 + 60 + 30));
    CHECK(eng.path_distance(md, md) == 0);
}

TEST_CASE("engine: ledger checker flags overlaps, gaps and passing") {
    auto net = reference_layout();
    OccupancyLedger ok;
    ok.holds = {{0, HoldKind::zone, 5, 0, 1}, {0, HoldKind::zone, 6, 0.5, 2},
                {1, HoldKind::zone, 5, 1, 3}};
    CHECK(check_ledger(ok, net).empty());

    auto overlap = ok;
    overlap.holds.push_back({2, HoldKind::zone, 6, 1.5, 2.5});
    CHECK(check_ledger(overlap, net).size() == 1);

    auto gap = ok;
    gap.holds.push_back({0, HoldKind::zone, 9, 2.5, 4});
    CHECK(check_ledger(gap, net).size() == 1);

    OccupancyLedger pass;
    pass.passes = {{0, 0, 0, 5}, {0, 1, 1, 4}};
    CHECK(check_ledger(pass, net).size() == 1);

    OccupancyLedger car;
    int j = net.elevator_index("J");
    car.holds = {{0, HoldKind::car, j, 0, 1}, {1, HoldKind::car, j, 0, 1}};
    CHECK(check_ledger(car, net).empty());
    car.holds.push_back({2, HoldKind::car, j, 0.5, 1});
    CHECK(check_ledger(car, net).size() == 1);
}

TEST_CASE("engine: timers reach the listener in order") {
    struct T : EngineListener {
        std::vector<std::pair<int, long long>> got;
        void on_dropoff(const TaskOutcome&) override {}
        void on_timer(int c, long long p) override { got.push_back({c, p}); }
    } t;
    auto net = reference_layout();
    Engine eng(net, {}, nullptr);
    eng.set_listener(&t);
    eng.schedule_timer(5, 2, 20);
    eng.schedule_timer(1, 1, 10);
    eng.schedule_timer(5, 3, 30);
    eng.run();
    REQUIRE(t.got.size() == 3);
    CHECK(t.got[0].first == 1);
    CHECK(t.got[1].first == 2);
    CHECK(t.got[2].first == 3);
    CHECK(eng.now() == 5);
}
