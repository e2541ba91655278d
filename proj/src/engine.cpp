#include "agvsim/engine.hpp"

#include <algorithm>
#include <cmath>
#include <deque>
#include <map>
#include <queue>
#include <sstream>

namespace agvsim {

std::string_view to_string(AgvPhase p) {
    switch (p) {
        case AgvPhase::idle_parked: return "idle_parked";
        case AgvPhase::traveling_empty: return "traveling_empty";
        case AgvPhase::loaded: return "loaded";
        case AgvPhase::in_elevator: return "in_elevator";
        case AgvPhase::held_at_lookahead: return "held_at_lookahead";
        case AgvPhase::blocked: return "blocked";
    }
    return "?";
}

namespace {

constexpr double kInf = std::numeric_limits<double>::infinity();

enum EvKind : int {
    ev_run_end = 1,
    ev_wake,
    ev_car_phase,
    ev_car_release,
    ev_board_done,
    ev_pickup,
    ev_drop,
    ev_timer,
    ev_dispatch,
};

enum WakerKind : int { wk_agv = 0, wk_node = 1, wk_car = 2 };

struct Waker {
    int kind;
    int id;
    bool operator==(const Waker& o) const { return kind == o.kind && id == o.id; }
};

struct Resource {
    double busy_until = -kInf;
    std::vector<Waker> watchers;
    int hold = -1;  // open ledger entry
};

enum class Where { parked, station, link, car };

struct Agv {
    int id = 0;
    double odo = 0.0;
    AgvPhase phase = AgvPhase::idle_parked;
    int task = -1;
    bool loaded = false;
    bool go_park = false;
    std::vector<Leg> legs;
    int leg = -1;

    Where where = Where::parked;
    int station = -1;
    int link = -1;
    int zone = -1;
    double pos = 0.0;
    bool moving = false;
    int car = -1;

    int tail = -1;  // resource under the AGV while on a link
    int pass = -1;  // open LinkPass entry

    bool waiting = false;
    double wait_since = 0.0;
    bool queued_at_node = false;
    bool in_landing = false;
    bool arrived = false;

    bool gate_done = false;
    int bound_car = -1;
    int bound_landing = -1;
    bool dest_detent = false;
    const ResolvedRoute* route = nullptr;

    int detent_hold = -1;
    int park_hold = -1;
    int car_hold = -1;

    double assigned = 0.0;
    double pickup = 0.0;
    double waited_loaded = 0.0;
};

enum class CarPhase { idle, opening, open, closing, moving };

struct Car {
    int el = -1;
    int at = -1;
    int other = -1;
    CarPhase phase = CarPhase::idle;
    bool busy = false;
    std::vector<int> occ;
    int reserved = 0;
    std::vector<int> bound_waiting;  // bound AGVs not yet boarded
    std::vector<Waker> gate_watchers;
    std::vector<int> group;  // cars sharing both landings, including this one
};

struct StationState {
    int used = 0;
    std::vector<Waker> watchers;
};

struct Edge {
    int to;
    double cost;
    bool elevator;
    int link;
    bool reverse;
    int group;  // index into elevator groups
};

struct TaskRec {
    Task task;
    int agv = -1;
    double assigned = 0.0;
    bool done = false;
};

std::string fmt_time(double t) {
    char buf[32];
    std::snprintf(buf, sizeof buf, "%.4f", t);
    return buf;
}

}  // namespace

struct Engine::Impl {
    Engine& E;
    const NetworkSpec& spec;
    const KinematicsParams& kin;
    RandomStream* tiebreak;

    std::array<ResolvedRoute, 3> routes;
    std::array<double, 3> nominal{};
    int park_station = -1;
    int park_node = -1;

    std::vector<int> zone_base;  // trunk links: first zone resource
    std::vector<int> spur_res;   // spur links: whole-link resource
    std::vector<int> node_res;   // intersections
    std::vector<Resource> res;
    std::vector<HoldKind> res_kind;

    std::vector<char> is_landing;
    std::vector<int> station_at;

    std::vector<std::vector<Edge>> adj;
    std::vector<std::vector<int>> elevator_groups;
    std::vector<std::vector<double>> dist;
    std::vector<std::vector<int>> pred_edge;  // [src][v] -> (node << 8 | edge idx) encoded as node*64+edge
    std::vector<std::vector<int>> pred_node;

    std::vector<Agv> agvs;
    std::vector<Car> cars;
    std::vector<StationState> stations;
    std::vector<std::vector<int>> node_queue;
    std::vector<std::vector<int>> landing_q;

    std::vector<TaskRec> tasks;
    std::deque<int> task_queue;
    int active = 0;
    bool dispatch_pending = false;

    std::array<std::vector<double>, 3> wake_at;

    Impl(Engine& e, RandomStream* tb) : E(e), spec(e.spec_), kin(e.cfg_.kinematics), tiebreak(tb) {}

    double now() const { return E.cal_.now(); }

    // ------------------------------------------------------------------ setup

    void build() {
        kin.validate();
        const int nn = static_cast<int>(spec.nodes.size());
        is_landing.assign(nn, 0);
        for (const auto& el : spec.elevators) {
            if (!(el.board_ft > 0)) throw LayoutError("elevator " + el.id + " needs board_ft > 0");
            is_landing[el.node] = is_landing[el.to_node] = 1;
        }
        station_at.assign(nn, -1);
        for (int s = 0; s < static_cast<int>(spec.stations.size()); ++s) {
            station_at[spec.stations[s].node] = s;
            if (spec.stations[s].kind == StationKind::PARKING && park_station < 0) park_station = s;
        }
        if (park_station < 0) throw LayoutError("layout has no parking station");
        park_node = spec.stations[park_station].node;

        zone_base.assign(spec.links.size(), -1);
        spur_res.assign(spec.links.size(), -1);
        for (int l = 0; l < static_cast<int>(spec.links.size()); ++l) {
            const Link& L = spec.links[l];
            if (L.kind == LinkKind::trunk) {
                zone_base[l] = static_cast<int>(res.size());
                for (int z = 0; z < L.zone_count(); ++z) res_kind.push_back(HoldKind::zone);
                res.resize(res_kind.size());
            } else {
                spur_res[l] = static_cast<int>(res.size());
                res_kind.push_back(HoldKind::spur);
                res.resize(res_kind.size());
            }
        }
        node_res.assign(nn, -1);
        for (int n = 0; n < nn; ++n) {
            if (station_at[n] >= 0 || is_landing[n]) continue;
            node_res[n] = static_cast<int>(res.size());
            res_kind.push_back(HoldKind::node);
            res.resize(res_kind.size());
        }

        // Elevator cars and groups of interchangeable cars.
        std::map<std::pair<int, int>, int> group_of;
        for (int e = 0; e < static_cast<int>(spec.elevators.size()); ++e) {
            const auto& el = spec.elevators[e];
            auto key = std::minmax(el.node, el.to_node);
            auto [it, fresh] = group_of.try_emplace({key.first, key.second},
                                                    static_cast<int>(elevator_groups.size()));
            if (fresh) elevator_groups.emplace_back();
            elevator_groups[it->second].push_back(e);
            Car c;
            c.el = e;
            c.at = el.node;
            c.other = el.to_node;
            cars.push_back(c);
        }
        for (const auto& g : elevator_groups)
            for (int e : g) cars[e].group = g;

        stations.assign(spec.stations.size(), {});
        node_queue.assign(nn, {});
        landing_q.assign(nn, {});

        // Empty-travel graph.
        adj.assign(nn, {});
        for (int l = 0; l < static_cast<int>(spec.links.size()); ++l) {
            const Link& L = spec.links[l];
            adj[L.from].push_back({L.to, L.length_ft, false, l, false, -1});
            if (L.kind == LinkKind::spur) adj[L.to].push_back({L.from, L.length_ft, false, l, true, -1});
        }
        for (auto& [key, g] : group_of) {
            const auto& el = spec.elevators[elevator_groups[g].front()];
            double cost = 2 * el.board_ft + (el.ride_s + 2 * el.door_delay_s) * kin.peak_fps(false);
            adj[el.node].push_back({el.to_node, cost, true, -1, false, g});
            adj[el.to_node].push_back({el.node, cost, true, -1, false, g});
        }
        dist.assign(nn, std::vector<double>(nn, kInf));
        pred_node.assign(nn, std::vector<int>(nn, -1));
        pred_edge.assign(nn, std::vector<int>(nn, -1));
        for (int s = 0; s < nn; ++s) dijkstra(s);

        for (auto st : kCartStates) {
            int i = static_cast<int>(st);
            if (const RouteSpec* r = spec.find_route(st, spec.variant)) {
                routes[i] = resolve_route(spec, *r);
                nominal[i] = route_nominal(routes[i]);
            }
        }
        wake_at[wk_node].assign(nn, -kInf);
        wake_at[wk_car].assign(cars.size(), -kInf);
    }

    void dijkstra(int src) {
        auto& d = dist[src];
        using Item = std::pair<double, int>;
        std::priority_queue<Item, std::vector<Item>, std::greater<>> pq;
        d[src] = 0;
        pq.push({0, src});
        while (!pq.empty()) {
            auto [du, u] = pq.top();
            pq.pop();
            if (du > d[u]) continue;
            if (u != src && station_at[u] >= 0) continue;  // stations are endpoints only
            for (int i = 0; i < static_cast<int>(adj[u].size()); ++i) {
                const Edge& e = adj[u][i];
                double nd = du + e.cost;
                if (nd < d[e.to]) {
                    d[e.to] = nd;
                    pred_node[src][e.to] = u;
                    pred_edge[src][e.to] = i;
                    pq.push({nd, e.to});
                }
            }
        }
    }

    std::vector<Leg> path(int from, int to) const {
        std::vector<Leg> out;
        if (from == to) return out;
        if (dist[from][to] == kInf)
            throw LayoutError("no guide-path from " + spec.nodes[from] + " to " + spec.nodes[to]);
        for (int v = to; v != from;) {
            int u = pred_node[from][v];
            const Edge& e = adj[u][pred_edge[from][v]];
            Leg leg;
            leg.from_node = u;
            leg.to_node = v;
            if (e.elevator) {
                leg.kind = Leg::Kind::elevator;
                leg.elevators = elevator_groups[e.group];
            } else {
                leg.kind = Leg::Kind::link;
                leg.link = e.link;
                leg.reverse = e.reverse;
            }
            out.push_back(std::move(leg));
            v = u;
        }
        std::reverse(out.begin(), out.end());
        return out;
    }

    double secs(double ft, bool turning) const {
        return traverse_time(ft, kin, turning, true);
    }

    double route_nominal(const ResolvedRoute& r) const {
        double s = 0;
        double carry = 0;  // boarding distance folded into the next link
        for (const auto& leg : r.legs) {
            if (leg.kind == Leg::Kind::elevator) {
                const auto& el = spec.elevators[leg.elevators.front()];
                s += secs(el.board_ft, false) + 2 * el.door_delay_s + el.ride_s;
                carry = el.board_ft;
            } else {
                const Link& L = spec.links[leg.link];
                s += secs(L.length_ft + carry, L.turning);
                carry = 0;
            }
        }
        return s / 60.0;
    }

    // ------------------------------------------------------------ utilities

    void trace(int agv, const char* what, const std::string& where) {
        if (!E.cfg_.record_trace) return;
        E.trace_.push_back({now(), agv, what, where});
    }

    int open_hold(int agv, HoldKind k, int id, double from) {
        if (!E.cfg_.record_ledger) return -1;
        E.ledger_.holds.push_back({agv, k, id, from, kInf});
        return static_cast<int>(E.ledger_.holds.size()) - 1;
    }
    void close_hold(int& h, double to) {
        if (h >= 0) E.ledger_.holds[h].to = to;
        h = -1;
    }
    void add_hold(int agv, HoldKind k, int id, double from, double to) {
        if (!E.cfg_.record_ledger) return;
        E.ledger_.holds.push_back({agv, k, id, from, to});
    }

    bool free(int r) const { return res[r].busy_until <= now(); }

    void schedule_wake(Waker w, double t) {
        double& at = w.kind == wk_agv ? wake_at[wk_agv][w.id] : wake_at[w.kind][w.id];
        if (at == t) return;
        at = t;
        E.cal_.schedule(t, ev_wake, w.kind, w.id);
    }

    void watch(int r, Waker w) {
        Resource& R = res[r];
        if (R.busy_until <= now())
            schedule_wake(w, now());
        else if (R.busy_until < kInf)
            schedule_wake(w, R.busy_until);
        else if (std::find(R.watchers.begin(), R.watchers.end(), w) == R.watchers.end())
            R.watchers.push_back(w);
    }

    void notify_all(std::vector<Waker>& ws, double t) {
        auto list = std::move(ws);
        ws.clear();
        for (auto w : list) schedule_wake(w, t);
    }

    void acquire(int r, int agv, double from) {
        res[r].busy_until = kInf;
        res[r].hold = open_hold(agv, res_kind[r], r, from);
    }

    void release(int r, double t) {
        Resource& R = res[r];
        R.busy_until = t;
        close_hold(R.hold, t);
        notify_all(R.watchers, t);
    }

    double zone_end(const Link& L, int j) const {
        return std::min((j + 1) * L.zone_length_ft, L.length_ft);
    }

    bool gate_pending(const Agv& a) const {
        return a.loaded && !a.gate_done && a.route && a.route->spec->lookahead &&
               a.link == a.route->spec->lookahead->link;
    }

    int gate_zone(const Agv& a) const { return a.route->spec->lookahead->zone; }

    void start_wait(Agv& a, AgvPhase ph) {
        if (!a.waiting) {
            a.waiting = true;
            a.wait_since = now();
            ++E.stats_.blocked_stops;
        }
        a.phase = ph;
    }

    void end_wait(Agv& a) {
        if (a.waiting && a.loaded) a.waited_loaded += now() - a.wait_since;
        a.waiting = false;
        a.phase = a.loaded ? AgvPhase::loaded : AgvPhase::traveling_empty;
    }

    // ------------------------------------------------------------- motion

    // Rest-to-rest move on `link` from position p0 to the end of zone e (the
    // whole link for spurs). Zones ahead are claimed now; each is released when
    // the front clears the following zone. Returns the time at which the front
    // clears the first new zone, when the previous tail is released.
    double begin_move(Agv& a, int link, bool reverse, double p0, int e) {
        const Link& L = spec.links[link];
        const double t0 = now();
        double x_end = L.kind == LinkKind::spur ? L.length_ft : zone_end(L, e);
        double D = x_end - p0;
        VelocityProfile prof(D, kin.peak_fps(L.turning), kin.accel_fps2, kin.decel_fps2, true);
        auto at = [&](double x) { return t0 + prof.time_at(x - p0) / 60.0; };

        bool new_link = a.link != link || a.where != Where::link;
        int j0 = new_link ? 0 : a.zone + 1;
        double t_first;
        int new_tail;
        if (L.kind == LinkKind::spur) {
            new_tail = spur_res[link];
            acquire(new_tail, a.id, t0);
            t_first = at(std::min(L.zone_length_ft, L.length_ft));
            e = L.zone_count() - 1;
        } else {
            for (int j = j0; j <= e; ++j) {
                int r = zone_base[link] + j;
                double enter = at(std::max(0.0, j == 0 ? 0.0 : zone_end(L, j - 1)));
                if (j < e) {
                    double leave = at(zone_end(L, j + 1));
                    res[r].busy_until = leave;
                    notify_all(res[r].watchers, leave);
                    add_hold(a.id, HoldKind::zone, r, enter, leave);
                } else {
                    res[r].busy_until = kInf;
                    res[r].hold = open_hold(a.id, HoldKind::zone, r, enter);
                }
            }
            new_tail = zone_base[link] + e;
            t_first = at(zone_end(L, j0));
        }
        if (a.tail >= 0) release(a.tail, t_first);
        if (new_link) {
            if (a.pass >= 0) E.ledger_.passes[a.pass].leave = t_first;
            a.pass = -1;
            if (E.cfg_.record_ledger && L.kind == LinkKind::trunk) {
                E.ledger_.passes.push_back({link, a.id, at(0.0), kInf});
                a.pass = static_cast<int>(E.ledger_.passes.size()) - 1;
            }
        }
        a.tail = new_tail;
        a.where = Where::link;
        a.link = link;
        (void)reverse;
        a.zone = e;
        a.pos = x_end;
        a.moving = true;
        a.odo += D;
        end_wait(a);
        ++E.stats_.runs;
        E.cal_.schedule(at(x_end), ev_run_end, a.id);
        if (a.go_park) request_dispatch();
        trace(a.id, "run", L.id + ":" + std::to_string(e));
        return t_first;
    }

    // Contiguous free zones from `from` on a trunk link, capped at the gate.
    int reach(const Agv& a, int link, int from) const {
        const Link& L = spec.links[link];
        int last = L.zone_count() - 1;
        bool gated = a.loaded && !a.gate_done && a.route && a.route->spec->lookahead &&
                     a.route->spec->lookahead->link == link;
        int cap = gated ? std::min(last, a.route->spec->lookahead->zone) : last;
        int e = from - 1;
        for (int j = from; j <= cap; ++j) {
            if (!free(zone_base[link] + j)) break;
            e = j;
        }
        return e;
    }

    void advance(Agv& a) {
        if (a.moving) return;
        switch (a.where) {
            case Where::parked:
            case Where::station: depart_station(a); return;
            case Where::car: return;
            case Where::link: on_link(a); return;
        }
    }

    void on_link(Agv& a) {
        const Link& L = spec.links[a.link];
        const Leg& cur = a.legs[a.leg];
        if (L.kind == LinkKind::trunk) {
            int last = L.zone_count() - 1;
            if (gate_pending(a) && a.zone == gate_zone(a) && a.zone < last) {
                if (!mid_gate(a)) return;
            }
            if (a.zone < last) {
                int e = reach(a, a.link, a.zone + 1);
                if (e > a.zone) {
                    begin_move(a, a.link, false, zone_end(L, a.zone), e);
                } else {
                    start_wait(a, a.loaded ? AgvPhase::blocked : AgvPhase::blocked);
                    watch(zone_base[a.link] + a.zone + 1, {wk_agv, a.id});
                }
                return;
            }
        }
        // At the end of the current leg.
        if (a.leg + 1 >= static_cast<int>(a.legs.size()))
            throw std::logic_error("route exhausted on link " + L.id);
        const Leg& next = a.legs[a.leg + 1];
        if (next.kind == Leg::Kind::elevator) {
            if (!a.arrived) {
                a.arrived = true;
                start_wait(a, a.phase == AgvPhase::held_at_lookahead ? AgvPhase::blocked : AgvPhase::blocked);
                poke_cars(next.elevators);
            }
            return;
        }
        int n = cur.to_node;
        if (!a.queued_at_node) {
            a.queued_at_node = true;
            start_wait(a, gate_pending(a) ? AgvPhase::held_at_lookahead : AgvPhase::blocked);
            node_queue[n].push_back(a.id);
        }
        schedule_wake({wk_node, n}, now());
    }

    void depart_station(Agv& a) {
        if (a.legs.empty() || a.leg != -1) return;
        const Leg& first = a.legs[0];
        int r = spur_res[first.link];
        if (r < 0) throw LayoutError("station exit must be a spur");
        if (!free(r)) {
            start_wait(a, a.loaded ? AgvPhase::blocked : (a.task >= 0 || a.go_park ? AgvPhase::blocked : AgvPhase::idle_parked));
            watch(r, {wk_agv, a.id});
            return;
        }
        int s = a.station;
        if (a.where == Where::parked) {
            close_hold(a.park_hold, now());
        } else if (s >= 0) {
            stations[s].used--;
            close_hold(a.detent_hold, now());
            notify_all(stations[s].watchers, now());
        }
        a.leg = 0;
        a.station = -1;
        a.tail = -1;
        begin_move(a, first.link, first.reverse, 0.0, 0);
    }

    void run_end(Agv& a) {
        a.moving = false;
        const Link& L = spec.links[a.link];
        const Leg& cur = a.legs[a.leg];
        if (L.kind == LinkKind::spur && station_at[cur.to_node] >= 0) {
            arrive_station(a, station_at[cur.to_node]);
            return;
        }
        advance(a);
    }

    void arrive_station(Agv& a, int s) {
        release(a.tail, now());
        a.tail = -1;
        a.where = spec.stations[s].kind == StationKind::PARKING ? Where::parked : Where::station;
        a.station = s;
        a.legs.clear();
        a.leg = -1;
        trace(a.id, "arrive", spec.stations[s].id);
        if (a.where == Where::parked) {
            a.park_hold = open_hold(a.id, HoldKind::park, s, now());
            a.go_park = false;
            a.phase = AgvPhase::idle_parked;
            request_dispatch();
            return;
        }
        if (a.loaded) {
            E.cal_.schedule(now() + E.cfg_.handling_min, ev_drop, a.id);
        } else if (a.task >= 0 && routes[idx(tasks[a.task].task.state)].origin_station == s) {
            E.cal_.schedule(now() + E.cfg_.handling_min, ev_pickup, a.id);
        } else {
            go_park(a);
        }
    }

    static int idx(CartState s) { return static_cast<int>(s); }

    // ------------------------------------------------------------- stations

    bool detent_available(int s) const {
        const Station& st = spec.stations[s];
        return st.kind == StationKind::PARKING || stations[s].used < st.detent_capacity;
    }

    void take_detent(Agv& a, int s) {
        if (spec.stations[s].kind == StationKind::PARKING) return;
        stations[s].used++;
        a.detent_hold = open_hold(a.id, HoldKind::detent, s, now());
    }

    // ------------------------------------------------------------- gate

    const Leg* elevator_after(const Agv& a) const {
        for (int i = a.leg + 1; i < static_cast<int>(a.legs.size()); ++i)
            if (a.legs[i].kind == Leg::Kind::elevator) return &a.legs[i];
        return nullptr;
    }

    bool serving(const Car& c, int landing) const {
        if (c.at == landing)
            return c.phase == CarPhase::idle || c.phase == CarPhase::opening || c.phase == CarPhase::open;
        return c.phase == CarPhase::moving;
    }

    int pick_car_for_gate(const Leg& leg) const {
        int best = -1;
        for (int c : leg.elevators) {
            const Car& car = cars[c];
            if (car.reserved >= spec.elevators[c].agv_capacity) continue;
            if (best < 0) {
                best = c;
                continue;
            }
            const Car& b = cars[best];
            bool cs = serving(car, leg.from_node), bs = serving(b, leg.from_node);
            if (cs != bs) {
                if (cs) best = c;
                continue;
            }
            if (car.reserved < b.reserved) best = c;
        }
        return best;
    }

    // Destination detent and elevator-slot conditions of the look-ahead stop.
    bool gate_ok(const Agv& a, Waker w) {
        bool ok = true;
        int dest = a.route->dest_station;
        if (!detent_available(dest)) {
            auto& ws = stations[dest].watchers;
            if (std::find(ws.begin(), ws.end(), w) == ws.end()) ws.push_back(w);
            ok = false;
        }
        if (const Leg* leg = elevator_after(a)) {
            if (pick_car_for_gate(*leg) < 0) {
                for (int c : leg->elevators) {
                    auto& ws = cars[c].gate_watchers;
                    if (std::find(ws.begin(), ws.end(), w) == ws.end()) ws.push_back(w);
                }
                ok = false;
            }
        }
        return ok;
    }

    void grant_gate(Agv& a) {
        a.gate_done = true;
        take_detent(a, a.route->dest_station);
        a.dest_detent = true;
        if (const Leg* leg = elevator_after(a)) {
            int c = pick_car_for_gate(*leg);
            Car& car = cars[c];
            car.reserved++;
            car.bound_waiting.push_back(a.id);
            a.bound_car = c;
            a.bound_landing = leg->from_node;
            poke_cars(car.group);
        }
        trace(a.id, "gate", spec.links[a.link].id);
    }

    // Look-ahead stop placed before the last zone of a link.
    bool mid_gate(Agv& a) {
        Waker w{wk_agv, a.id};
        int n = a.legs[a.leg].to_node;
        bool ok = true;
        if (node_res[n] >= 0 && !free(node_res[n])) {
            watch(node_res[n], w);
            ok = false;
        }
        if (!gate_ok(a, w)) ok = false;
        if (!ok) {
            ++E.stats_.gate_holds;
            start_wait(a, AgvPhase::held_at_lookahead);
            return false;
        }
        grant_gate(a);
        return true;
    }

    // ------------------------------------------------------------- intersections

    bool leaving_class(const Agv& a) const {
        const Link& L = spec.links[a.link];
        const Leg& cur = a.legs[a.leg];
        if (L.kind == LinkKind::spur) return station_at[cur.from_node] >= 0;
        return is_landing[L.from] != 0;
    }

    // Checks every resource the crossing needs; registers the node as watcher
    // of those that are unavailable.
    bool can_cross(Agv& a, int n) {
        Waker w{wk_node, n};
        bool ok = true;
        if (node_res[n] >= 0 && !free(node_res[n])) {
            watch(node_res[n], w);
            ok = false;
        }
        const Leg& next = a.legs[a.leg + 1];
        const Link& L2 = spec.links[next.link];
        int r = L2.kind == LinkKind::spur ? spur_res[next.link] : zone_base[next.link];
        if (!free(r)) {
            watch(r, w);
            ok = false;
        }
        if (L2.kind == LinkKind::spur) {
            int s = station_at[next.to_node];
            if (s >= 0 && !(a.dest_detent && a.route && s == a.route->dest_station) &&
                !detent_available(s)) {
                auto& ws = stations[s].watchers;
                if (std::find(ws.begin(), ws.end(), w) == ws.end()) ws.push_back(w);
                ok = false;
            }
        }
        if (gate_pending(a) && a.zone == gate_zone(a)) {
            if (!gate_ok(a, w)) ok = false;
        }
        return ok;
    }

    void process_node(int n) {
        auto& q = node_queue[n];
        if (q.empty()) return;
        int best = -1;
        bool best_leaving = false;
        double best_since = 0;
        int ties = 0;
        std::vector<int> tied;
        for (int id : q) {
            Agv& a = agvs[id];
            if (!can_cross(a, n)) {
                if (gate_pending(a) && a.zone == gate_zone(a)) ++E.stats_.gate_holds;
                continue;
            }
            bool lv = leaving_class(a);
            if (best < 0 || (lv && !best_leaving) ||
                (lv == best_leaving && a.wait_since < best_since)) {
                best = id;
                best_leaving = lv;
                best_since = a.wait_since;
                tied.assign(1, id);
                ties = 1;
            } else if (lv == best_leaving && a.wait_since == best_since) {
                tied.push_back(id);
                ++ties;
            }
        }
        if (best < 0) return;
        if (ties > 1) best = tied[tiebreak ? tiebreak->below(tied.size()) : 0];
        q.erase(std::find(q.begin(), q.end(), best));
        cross(agvs[best], n);
        if (!q.empty() && node_res[n] >= 0) watch(node_res[n], {wk_node, n});
    }

    void cross(Agv& a, int n) {
        a.queued_at_node = false;
        if (gate_pending(a) && a.zone == gate_zone(a)) grant_gate(a);
        const Leg& next = a.legs[a.leg + 1];
        const Link& L2 = spec.links[next.link];
        if (L2.kind == LinkKind::spur) {
            int s = station_at[next.to_node];
            if (s >= 0 && !(a.dest_detent && a.route && s == a.route->dest_station)) take_detent(a, s);
        }
        a.leg++;
        int e = L2.kind == LinkKind::spur ? 0 : reach(a, next.link, 0);
        double t0 = now();
        trace(a.id, "cross", spec.nodes[n]);
        double t_first = begin_move(a, next.link, next.reverse, 0.0, e);
        if (node_res[n] >= 0) {
            Resource& R = res[node_res[n]];
            R.busy_until = t_first;
            add_hold(a.id, HoldKind::node, node_res[n], t0, t_first);
            notify_all(R.watchers, t_first);
        }
        enter_approach(a);
    }

    void enter_approach(Agv& a) {
        if (a.leg + 1 >= static_cast<int>(a.legs.size())) return;
        const Leg& next = a.legs[a.leg + 1];
        if (next.kind != Leg::Kind::elevator) return;
        landing_q[next.from_node].push_back(a.id);
        a.in_landing = true;
        a.arrived = false;
        poke_cars(next.elevators);
    }

    // ------------------------------------------------------------- elevators

    void poke_cars(const std::vector<int>& cs) {
        for (int c : cs) schedule_wake({wk_car, c}, now());
    }

    bool may_use(const Agv& a, int c) const {
        if (a.bound_car >= 0) return a.bound_car == c;
        const Leg& next = a.legs[a.leg + 1];
        return std::find(next.elevators.begin(), next.elevators.end(), c) != next.elevators.end();
    }

    int bound_pending(const Car& car, int landing) const {
        int k = 0;
        for (int id : car.bound_waiting)
            if (agvs[id].bound_landing == landing) ++k;
        return k;
    }

    int room(int c, int landing) const {
        const Car& car = cars[c];
        return spec.elevators[c].agv_capacity - static_cast<int>(car.occ.size()) -
               bound_pending(car, landing);
    }

    // Does landing X hold AGVs that car c should come for?
    bool wants(int c, int X) const {
        const Car& car = cars[c];
        if (bound_pending(car, X) > 0) return true;
        int unbound = 0;
        for (int id : landing_q[X]) {
            const Agv& a = agvs[id];
            if (a.bound_car < 0 && may_use(a, c)) ++unbound;
        }
        if (unbound == 0) return false;
        int others = 0;
        for (int o : car.group) {
            if (o == c || !serving(cars[o], X)) continue;
            // of two idle cars the lower index answers
            if (cars[o].phase == CarPhase::idle && car.phase == CarPhase::idle && o > c) continue;
            others += std::max(0, room(o, X));
        }
        return unbound > others;
    }

    bool follower(int c) const {
        const Car& car = cars[c];
        if (bound_pending(car, car.at) > 0) return true;
        for (int id : landing_q[car.at]) {
            const Agv& a = agvs[id];
            if (!a.arrived && may_use(a, c)) return true;
        }
        return false;
    }

    static const char* phase_name(CarPhase p) {
        switch (p) {
            case CarPhase::idle: return "idle";
            case CarPhase::opening: return "opening";
            case CarPhase::open: return "open";
            case CarPhase::closing: return "closing";
            case CarPhase::moving: return "moving";
        }
        return "?";
    }

    void car_trace(int c) {
        if (!E.cfg_.record_trace) return;
        E.trace_.push_back({now(), -1, std::string("car ") + phase_name(cars[c].phase),
                            spec.elevators[c].id + "@" + spec.nodes[cars[c].at]});
    }

    void set_phase(int c, CarPhase p, double dur) {
        Car& car = cars[c];
        car.phase = p;
        car_trace(c);
        E.cal_.schedule(now() + dur / 60.0, ev_car_phase, c);
        for (int o : car.group)
            if (o != c) schedule_wake({wk_car, o}, now());
    }

    void car_update(int c) {
        Car& car = cars[c];
        const Elevator& el = spec.elevators[c];
        switch (car.phase) {
            case CarPhase::idle:
                if (wants(c, car.at))
                    set_phase(c, CarPhase::opening, el.door_delay_s);
                else if (wants(c, car.other))
                    set_phase(c, CarPhase::moving, el.ride_s);
                return;
            case CarPhase::opening:
            case CarPhase::closing:
            case CarPhase::moving: return;
            case CarPhase::open: break;
        }
        if (car.busy) return;
        // Occupants leave first, one at a time.
        for (int id : car.occ) {
            Agv& a = agvs[id];
            if (a.legs[a.leg].to_node != car.at) continue;
            const Leg& out = a.legs[a.leg + 1];
            int r = zone_base[out.link];
            if (r < 0) throw LayoutError("elevator exit must be a trunk link");
            if (!free(r)) {
                watch(r, {wk_car, c});
                return;
            }
            exit_car(a, c);
            return;
        }
        // Boarding in arrival order.
        auto& q = landing_q[car.at];
        for (int id : q) {
            Agv& a = agvs[id];
            if (!a.arrived || !may_use(a, c)) continue;
            int cap = el.agv_capacity;
            int n = static_cast<int>(car.occ.size());
            bool ok = a.bound_car == c ? n < cap : n + bound_pending(car, car.at) < cap;
            if (!ok) continue;
            board(a, c);
            return;
        }
        if (!car.occ.empty()) {
            if (static_cast<int>(car.occ.size()) < el.agv_capacity && follower(c)) return;
            set_phase(c, CarPhase::closing, el.door_delay_s);
            return;
        }
        if (follower(c)) return;
        set_phase(c, CarPhase::closing, el.door_delay_s);
    }

    void car_phase_done(int c) {
        Car& car = cars[c];
        const Elevator& el = spec.elevators[c];
        switch (car.phase) {
            case CarPhase::opening:
                car.phase = CarPhase::open;
                car_trace(c);
                car_update(c);
                break;
            case CarPhase::closing:
                if (!car.occ.empty() || (!wants(c, car.at) && wants(c, car.other))) {
                    set_phase(c, CarPhase::moving, el.ride_s);
                } else {
                    car.phase = CarPhase::idle;
                    car_trace(c);
                    poke_cars(car.group);
                }
                break;
            case CarPhase::moving:
                std::swap(car.at, car.other);
                ++E.stats_.car_trips;
                set_phase(c, CarPhase::opening, el.door_delay_s);
                break;
            default: break;
        }
    }

    void board(Agv& a, int c) {
        Car& car = cars[c];
        const Elevator& el = spec.elevators[c];
        auto& q = landing_q[car.at];
        q.erase(std::find(q.begin(), q.end(), a.id));
        a.in_landing = false;
        a.arrived = false;
        if (a.bound_car == c) {
            auto& bw = car.bound_waiting;
            bw.erase(std::find(bw.begin(), bw.end(), a.id));
        }
        double dt = secs(el.board_ft, false) / 60.0;
        double t0 = now();
        end_wait(a);
        release(a.tail, t0 + dt);
        a.tail = -1;
        if (a.pass >= 0) E.ledger_.passes[a.pass].leave = t0 + dt;
        a.pass = -1;
        car.occ.push_back(a.id);
        car.busy = true;
        a.car_hold = open_hold(a.id, HoldKind::car, c, t0);
        a.where = Where::car;
        a.car = c;
        a.leg++;
        a.moving = true;
        a.odo += el.board_ft;
        E.cal_.schedule(t0 + dt, ev_board_done, c, a.id);
        trace(a.id, "board", el.id);
    }

    void board_done(int c, int id) {
        Agv& a = agvs[id];
        a.moving = false;
        a.phase = AgvPhase::in_elevator;
        cars[c].busy = false;
        car_update(c);
    }

    void exit_car(Agv& a, int c) {
        Car& car = cars[c];
        const Elevator& el = spec.elevators[c];
        car.busy = true;
        a.leg++;
        int e = reach(a, a.legs[a.leg].link, 0);
        trace(a.id, "exit", el.id);
        double t_first = begin_move(a, a.legs[a.leg].link, false, -el.board_ft, e);
        E.cal_.schedule(t_first, ev_car_release, c, a.id);
        a.car = -1;
        enter_approach(a);
    }

    void car_release(int c, int id) {
        Car& car = cars[c];
        Agv& a = agvs[id];
        car.occ.erase(std::find(car.occ.begin(), car.occ.end(), id));
        close_hold(a.car_hold, now());
        car.busy = false;
        if (a.bound_car == c) {
            car.reserved--;
            a.bound_car = -1;
            a.bound_landing = -1;
            notify_all(car.gate_watchers, now());
        }
        car_update(c);
    }

    // ------------------------------------------------------------- dispatch

    bool retargetable(const Agv& a) const {
        if (a.where != Where::link) return false;
        if (spec.links[a.link].kind == LinkKind::spur) return false;
        const Leg& cur = a.legs[a.leg];
        if (cur.to_node == park_node) return false;
        if (a.leg + 1 < static_cast<int>(a.legs.size()) &&
            a.legs[a.leg + 1].kind == Leg::Kind::elevator)
            return false;
        return true;
    }

    double distance_to(const Agv& a, int target) const {
        if (a.where == Where::parked || a.where == Where::station)
            return dist[spec.stations[a.station].node][target];
        const Link& L = spec.links[a.link];
        double rem = L.length_ft - a.pos;
        return rem + dist[a.legs[a.leg].to_node][target];
    }

    int select_agv(int target) {
        int best = -1;
        double bd = kInf;
        std::vector<int> tied;
        for (auto& a : agvs) {
            if (a.task >= 0 || a.loaded) continue;
            bool idle = a.where == Where::parked ||
                        (a.where == Where::station && (a.go_park || a.legs.empty())) ||
                        (a.go_park && retargetable(a));
            if (!idle) continue;
            double d = distance_to(a, target);
            if (d == kInf) continue;
            if (best < 0 || d < bd || (d == bd && a.odo < agvs[best].odo)) {
                best = a.id;
                bd = d;
                tied.assign(1, a.id);
            } else if (d == bd && a.odo == agvs[best].odo) {
                tied.push_back(a.id);
            }
        }
        if (tied.size() > 1) best = tied[tiebreak ? tiebreak->below(tied.size()) : 0];
        return best;
    }

    void request_dispatch() {
        if (dispatch_pending || task_queue.empty()) return;
        dispatch_pending = true;
        E.cal_.schedule(now(), ev_dispatch);
    }

    void try_dispatch() {
        while (!task_queue.empty()) {
            int t = task_queue.front();
            int origin = routes[idx(tasks[t].task.state)].origin_station;
            int id = select_agv(spec.stations[origin].node);
            if (id < 0) return;
            task_queue.pop_front();
            assign(agvs[id], t);
        }
    }

    void assign(Agv& a, int t) {
        TaskRec& tr = tasks[t];
        tr.agv = a.id;
        tr.assigned = now();
        a.task = t;
        a.assigned = now();
        a.go_park = false;
        ++active;
        E.stats_.max_active = std::max(E.stats_.max_active, active);
        if (E.cfg_.record_ledger) E.ledger_.tasks.push_back({tr.task.id, now(), kInf});
        trace(a.id, "assign", std::to_string(tr.task.id));
        if (a.phase == AgvPhase::idle_parked) a.phase = AgvPhase::traveling_empty;
        head_to_pickup(a);
    }

    void head_to_pickup(Agv& a) {
        int origin = routes[idx(tasks[a.task].task.state)].origin_station;
        int target = spec.stations[origin].node;
        if (a.where == Where::station && a.station == origin) {
            a.legs.clear();
            a.leg = -1;
            E.cal_.schedule(now() + E.cfg_.handling_min, ev_pickup, a.id);
            return;
        }
        if (a.where == Where::parked || a.where == Where::station) {
            a.legs = path(spec.stations[a.station].node, target);
            a.leg = -1;
            depart_station(a);
            return;
        }
        // Re-target an AGV on its way to parking from the end of its current leg.
        a.legs.resize(a.leg + 1);
        auto rest = path(a.legs[a.leg].to_node, target);
        a.legs.insert(a.legs.end(), rest.begin(), rest.end());
        if (a.queued_at_node) schedule_wake({wk_node, a.legs[a.leg].to_node}, now());
        else if (!a.moving) schedule_wake({wk_agv, a.id}, now());
    }

    void go_park(Agv& a) {
        a.go_park = true;
        a.phase = AgvPhase::traveling_empty;
        a.legs = path(spec.stations[a.station].node, park_node);
        a.leg = -1;
        trace(a.id, "park", spec.stations[a.station].id);
        depart_station(a);
    }

    void pickup(Agv& a) {
        const ResolvedRoute& r = routes[idx(tasks[a.task].task.state)];
        a.loaded = true;
        a.pickup = now();
        a.waited_loaded = 0;
        a.route = &r;
        a.legs = r.legs;
        a.leg = -1;
        a.gate_done = false;
        a.dest_detent = false;
        a.phase = AgvPhase::loaded;
        trace(a.id, "pickup", spec.stations[a.station].id);
        depart_station(a);
    }

    void drop(Agv& a) {
        TaskRec& tr = tasks[a.task];
        tr.done = true;
        TaskOutcome out;
        out.task = tr.task.id;
        out.cart = tr.task.cart;
        out.agv = a.id;
        out.state = tr.task.state;
        out.assigned = tr.assigned;
        out.pickup = a.pickup;
        out.dropoff = now();
        out.nominal_min = nominal[idx(tr.task.state)];
        out.waited_min = a.waited_loaded;
        if (E.cfg_.record_ledger)
            for (auto it = E.ledger_.tasks.rbegin(); it != E.ledger_.tasks.rend(); ++it)
                if (it->task == tr.task.id) {
                    it->dropoff = now();
                    break;
                }
        trace(a.id, "drop", spec.stations[a.station].id);
        a.loaded = false;
        a.route = nullptr;
        a.task = -1;
        a.dest_detent = false;
        a.gate_done = false;
        a.phase = AgvPhase::traveling_empty;
        --active;
        if (E.listener_) E.listener_->on_dropoff(out);
        try_dispatch();
        if (a.task < 0) go_park(a);
    }

    void on_event(const Event& ev) {
        switch (ev.kind) {
            case ev_run_end: run_end(agvs[ev.a]); break;
            case ev_wake: {
                int id = static_cast<int>(ev.b);
                if (ev.a == wk_agv) {
                    if (wake_at[wk_agv][id] == ev.time) wake_at[wk_agv][id] = -kInf;
                    advance(agvs[id]);
                } else if (ev.a == wk_node) {
                    if (wake_at[wk_node][id] == ev.time) wake_at[wk_node][id] = -kInf;
                    process_node(id);
                } else {
                    if (wake_at[wk_car][id] == ev.time) wake_at[wk_car][id] = -kInf;
                    car_update(id);
                }
                break;
            }
            case ev_car_phase: car_phase_done(ev.a); break;
            case ev_car_release: car_release(ev.a, static_cast<int>(ev.b)); break;
            case ev_board_done: board_done(ev.a, static_cast<int>(ev.b)); break;
            case ev_pickup: pickup(agvs[ev.a]); break;
            case ev_drop: drop(agvs[ev.a]); break;
            case ev_dispatch:
                dispatch_pending = false;
                try_dispatch();
                break;
            case ev_timer:
                if (E.listener_) E.listener_->on_timer(ev.a, ev.b);
                break;
            default: throw std::logic_error("unknown event kind");
        }
    }

    std::string describe(const Agv& a) const {
        std::ostringstream os;
        os << "agv " << a.id << " " << to_string(a.phase);
        if (a.where == Where::link) os << " on " << spec.links[a.link].id << " zone " << a.zone;
        if (a.where == Where::car) os << " in car " << spec.elevators[a.car].id;
        if (a.where == Where::station || a.where == Where::parked)
            os << " at " << spec.stations[a.station].id;
        if (a.waiting) os << " waiting since " << fmt_time(a.wait_since);
        if (a.queued_at_node) os << " queued at " << spec.nodes[a.legs[a.leg].to_node];
        if (a.leg + 1 < static_cast<int>(a.legs.size())) {
            const Leg& n = a.legs[a.leg + 1];
            os << " next "
               << (n.kind == Leg::Kind::link ? spec.links[n.link].id : spec.elevators[n.elevators[0]].id);
        }
        if (a.task >= 0) os << " task " << tasks[a.task].task.id;
        return os.str();
    }
};

// ---------------------------------------------------------------------------

Engine::Engine(const NetworkSpec& spec, const EngineConfig& cfg, RandomStream* tiebreak)
    : spec_(spec), cfg_(cfg), impl_(std::make_unique<Impl>(*this, tiebreak)) {
    impl_->build();
}

Engine::~Engine() = default;

int Engine::add_agv() {
    Agv a;
    a.id = static_cast<int>(impl_->agvs.size());
    a.where = Where::parked;
    a.station = impl_->park_station;
    a.park_hold = impl_->open_hold(a.id, HoldKind::park, impl_->park_station, now());
    impl_->agvs.push_back(std::move(a));
    impl_->wake_at[wk_agv].push_back(-kInf);
    return impl_->agvs.back().id;
}

int Engine::agv_count() const { return static_cast<int>(impl_->agvs.size()); }

void Engine::submit(const Task& t) {
    if (!impl_->routes[static_cast<int>(t.state)].spec)
        throw LayoutError(std::string("no active route for ") + std::string(to_string(t.state)) + " carts");
    TaskRec r;
    r.task = t;
    impl_->tasks.push_back(r);
    impl_->task_queue.push_back(static_cast<int>(impl_->tasks.size()) - 1);
    impl_->try_dispatch();
}

int Engine::queued_tasks() const { return static_cast<int>(impl_->task_queue.size()); }
int Engine::active_tasks() const { return impl_->active; }

void Engine::schedule_timer(double time, int code, long long payload) {
    cal_.schedule(time, ev_timer, code, payload);
}

bool Engine::step() {
    if (cal_.empty()) return false;
    Event ev = cal_.pop();
    ++stats_.events;
    impl_->on_event(ev);
    return true;
}

void Engine::run() {
    while (step()) {}
}

void Engine::run_until(double t) {
    while (!cal_.empty() && cal_.peek_time() <= t) step();
}

void Engine::check_watchdog() const {
    for (const auto& a : impl_->agvs) {
        if (a.waiting && now() - a.wait_since > cfg_.watchdog_min) {
            std::ostringstream os;
            os << "deadlock suspected at t=" << fmt_time(now()) << ": " << impl_->describe(a);
            for (const auto& b : impl_->agvs) os << "\n  " << impl_->describe(b);
            throw DeadlockError(os.str());
        }
    }
}

void Engine::require_drained() const {
    if (impl_->task_queue.empty() && impl_->active == 0) return;
    std::ostringstream os;
    os << "simulation stalled at t=" << fmt_time(now()) << " with " << impl_->active
       << " active and " << impl_->task_queue.size() << " queued tasks";
    for (const auto& b : impl_->agvs) os << "\n  " << impl_->describe(b);
    throw DeadlockError(os.str());
}

double Engine::nominal_minutes(CartState s) const { return impl_->nominal[static_cast<int>(s)]; }

double Engine::path_distance(int from_node, int to_node) const { return impl_->dist[from_node][to_node]; }

AgvPhase Engine::phase(int agv) const { return impl_->agvs[agv].phase; }
double Engine::odometer(int agv) const { return impl_->agvs[agv].odo; }

// ---------------------------------------------------------------------------

std::vector<std::string> check_ledger(const OccupancyLedger& ledger, const NetworkSpec& spec) {
    std::vector<std::string> out;
    const double eps = 1e-9;
    auto name = [](HoldKind k) {
        switch (k) {
            case HoldKind::zone: return "zone";
            case HoldKind::spur: return "spur";
            case HoldKind::node: return "node";
            case HoldKind::car: return "elevator";
            case HoldKind::detent: return "detent";
            case HoldKind::park: return "park";
        }
        return "?";
    };

    std::map<std::pair<int, int>, std::vector<const Hold*>> by_res;
    std::map<int, std::vector<const Hold*>> by_agv;
    for (const auto& h : ledger.holds) {
        if (h.to < h.from - eps) out.push_back("hold released before acquired");
        by_agv[h.agv].push_back(&h);
        if (h.kind != HoldKind::park) by_res[{static_cast<int>(h.kind), h.res}].push_back(&h);
    }
    for (auto& [key, hs] : by_res) {
        auto kind = static_cast<HoldKind>(key.first);
        int cap = 1;
        if (kind == HoldKind::car) cap = spec.elevators[key.second].agv_capacity;
        if (kind == HoldKind::detent) cap = spec.stations[key.second].detent_capacity;
        std::vector<std::pair<double, int>> ev;
        for (const Hold* h : hs) {
            ev.push_back({h->from, +1});
            ev.push_back({h->to, -1});
        }
        std::sort(ev.begin(), ev.end());  // releases (-1) sort before acquires at equal times
        int n = 0;
        for (auto [t, d] : ev) {
            n += d;
            if (n > cap) {
                std::ostringstream os;
                os << name(kind) << " " << key.second << " holds " << n << " > " << cap << " at t=" << t;
                out.push_back(os.str());
                break;
            }
        }
    }
    for (auto& [agv, hs] : by_agv) {
        std::sort(hs.begin(), hs.end(), [](const Hold* a, const Hold* b) { return a->from < b->from; });
        double covered = hs.front()->to;
        for (std::size_t i = 1; i < hs.size(); ++i) {
            if (hs[i]->from > covered + eps) {
                std::ostringstream os;
                os << "agv " << agv << " holds nothing between " << covered << " and " << hs[i]->from;
                out.push_back(os.str());
                break;
            }
            covered = std::max(covered, hs[i]->to);
        }
    }
    std::map<int, std::vector<const LinkPass*>> by_link;
    for (const auto& p : ledger.passes) by_link[p.link].push_back(&p);
    for (auto& [link, ps] : by_link) {
        std::sort(ps.begin(), ps.end(), [](auto* a, auto* b) { return a->enter < b->enter; });
        for (std::size_t i = 1; i < ps.size(); ++i)
            if (ps[i]->leave < ps[i - 1]->leave - eps) {
                out.push_back("agv " + std::to_string(ps[i]->agv) + " passed agv " +
                              std::to_string(ps[i - 1]->agv) + " on link " + spec.links[link].id);
                break;
            }
    }
    return out;
}

}  // namespace agvsim
