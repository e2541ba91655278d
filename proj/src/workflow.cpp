#include "agvsim/workflow.hpp"

#include <algorithm>
#include <cctype>
#include <cmath>
#include <deque>
#include <filesystem>
#include <fstream>
#include <sstream>

#include "agvsim/kvfile.hpp"

namespace agvsim {

int parse_weekday(std::string_view s) {
    std::string low(s);
    for (auto& c : low) c = static_cast<char>(std::tolower(static_cast<unsigned char>(c)));
    if (low.size() > 3) low.resize(3);
    for (int i = 0; i < kWeekdays; ++i)
        if (low == kWeekdayNames[i]) return i;
    throw ScenarioError("unknown weekday '" + std::string(s) + "'");
}

int FleetPlan::max() const { return *std::max_element(k.begin(), k.end()); }
int FleetPlan::total() const {
    int t = 0;
    for (int x : k) t += x;
    return t;
}
std::string FleetPlan::to_string() const {
    std::string s;
    for (int i = 0; i < kWeekdays; ++i) s += (i ? "-" : "") + std::to_string(k[i]);
    return s;
}

// ---------------------------------------------------------------------------
// Scenario files

namespace {

std::string slurp(const std::string& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw ScenarioError("cannot read " + path);
    std::ostringstream ss;
    ss << in.rdbuf();
    return ss.str();
}

std::string resolve(const std::string& base, const std::string& p) {
    std::filesystem::path fp(p);
    if (fp.is_absolute()) return p;
    return (std::filesystem::path(base) / fp).string();
}

int positive_int(const kv::Value& v, const char* what) {
    long long x = v.as_integer();
    if (x < 1) throw kv::ParseError(v.line, std::string(what) + " must be at least 1");
    return static_cast<int>(x);
}

}  // namespace

void Scenario::set_variant(Variant v) {
    variant = v;
    network = apply_variant(network, v);
}

void Scenario::validate() const {
    if (pool < 1) throw ScenarioError("pool must be at least 1");
    for (int i = 0; i < kWeekdays; ++i) {
        if (fleet.k[i] < 1 || fleet.k[i] > pool)
            throw ScenarioError("fleet for " + std::string(kWeekdayNames[i]) + " must lie in [1, pool]");
        weekdays[i].case_count.validate();
        weekdays[i].release.validate();
        if (weekdays[i].release.points.back().value >= 1440)
            throw ScenarioError("release offsets must stay below 1440 minutes");
    }
    if (days < 1 || replications < 1) throw ScenarioError("days and replications must be positive");
    if (loading_employees < 1 || carts < 1 || washers < 1)
        throw ScenarioError("employees, carts and washers must be positive");
    if (wash_cycle_min < 0 || drying_min < 0 || handling_min < 0)
        throw ScenarioError("durations must be non-negative");
    picking_time.validate();
    kinematics.validate();
    auto report = validate_network(network);
    if (!report.ok()) throw ScenarioError("layout: " + report.violations.front().message);
    for (auto s : kCartStates) network.active_route(s);
}

Scenario parse_scenario(std::string_view text, const std::string& base_dir) {
    kv::Document doc = kv::parse(text);
    const kv::Section& top = doc.top();
    top.reject_unknown({"variant", "layout", "fleet", "pool", "days", "replications", "seed",
                        "wash_cycle_min", "drying_min", "loading_employees", "carts", "washers",
                        "picking_time", "clean_start_min", "handling_min", "case_volume_file"});
    Scenario sc;
    auto num = [&](const char* key, double& out) {
        if (auto* e = top.find(key)) out = e->value.as_number();
    };
    auto integer = [&](const char* key, int& out) {
        if (auto* e = top.find(key)) out = positive_int(e->value, key);
    };
    if (auto* e = top.find("variant")) sc.variant = parse_variant(e->value.as_text());
    if (auto* e = top.find("layout")) sc.layout_source = e->value.as_text();
    integer("pool", sc.pool);
    integer("days", sc.days);
    integer("replications", sc.replications);
    integer("loading_employees", sc.loading_employees);
    integer("carts", sc.carts);
    integer("washers", sc.washers);
    num("wash_cycle_min", sc.wash_cycle_min);
    num("drying_min", sc.drying_min);
    num("clean_start_min", sc.clean_start_min);
    num("handling_min", sc.handling_min);
    if (auto* e = top.find("seed")) {
        long long s = e->value.as_integer();
        if (s < 0) throw kv::ParseError(e->line, "seed must be non-negative");
        sc.seed = static_cast<std::uint64_t>(s);
    }
    if (auto* e = top.find("picking_time")) sc.picking_time = parse_tria(e->value.as_text());
    if (auto* e = top.find("fleet")) {
        if (e->value.kind == kv::Value::Kind::table) {
            std::array<bool, kWeekdays> seen{};
            for (const auto& [k, v] : e->value.as_table()) {
                int w = parse_weekday(k);
                sc.fleet.k[w] = positive_int(v, "fleet");
                seen[w] = true;
            }
            for (int w = 0; w < kWeekdays; ++w)
                if (!seen[w])
                    throw kv::ParseError(e->line, "fleet table lacks " + std::string(kWeekdayNames[w]));
        } else {
            sc.fleet = FleetPlan::constant(positive_int(e->value, "fleet"));
        }
    }

    for (const kv::Section* s : doc.all("kinematics")) {
        s->reject_unknown({"v_straight_fpm", "turn_factor", "accel_fps2", "decel_fps2"});
        auto set = [&](const char* key, double& out) {
            if (auto* e = s->find(key)) out = e->value.as_number();
        };
        set("v_straight_fpm", sc.kinematics.v_straight_fpm);
        set("turn_factor", sc.kinematics.turn_factor);
        set("accel_fps2", sc.kinematics.accel_fps2);
        set("decel_fps2", sc.kinematics.decel_fps2);
    }

    std::array<bool, kWeekdays> have{};
    for (const kv::Section* s : doc.all("weekday")) {
        s->reject_unknown({"day", "case_count", "release_time"});
        int w = parse_weekday(s->require("day").as_text());
        if (have[w]) throw kv::ParseError(s->line, "weekday given twice");
        have[w] = true;
        sc.weekdays[w].case_count = parse_tria(s->require("case_count").as_text());
        sc.weekdays[w].release = parse_disc(s->require("release_time").as_text());
    }
    for (int w = 0; w < kWeekdays; ++w)
        if (!have[w]) throw ScenarioError("missing [weekday] section for " + std::string(kWeekdayNames[w]));

    if (auto* e = top.find("case_volume_file"))
        sc.case_volumes = parse_case_volumes(slurp(resolve(base_dir, e->value.as_text())));

    NetworkSpec net = sc.layout_source == "reference"
                          ? reference_layout()
                          : parse_layout(slurp(resolve(base_dir, sc.layout_source)));
    sc.network = apply_variant(net, sc.variant);
    sc.validate();
    return sc;
}

Scenario load_scenario(const std::string& path) {
    auto dir = std::filesystem::path(path).parent_path().string();
    return parse_scenario(slurp(path), dir.empty() ? "." : dir);
}

std::array<std::vector<int>, kWeekdays> parse_case_volumes(std::string_view text) {
    std::array<std::vector<int>, kWeekdays> out;
    std::istringstream in{std::string(text)};
    std::string line;
    int n = 0;
    bool header = true;
    while (std::getline(in, line)) {
        ++n;
        if (!line.empty() && line.back() == '\r') line.pop_back();
        if (line.empty() || line[0] == '#') continue;
        if (header) {
            header = false;
            if (line.rfind("date", 0) == 0) continue;
        }
        std::vector<std::string> f;
        std::stringstream ls(line);
        std::string cell;
        while (std::getline(ls, cell, ',')) f.push_back(cell);
        if (f.size() != 3) throw ScenarioError("case volumes line " + std::to_string(n) + ": expected 3 fields");
        int w;
        try {
            w = parse_weekday(f[1]);
        } catch (const ScenarioError&) {
            continue;  // weekend rows are outside the business-day horizon
        }
        int c;
        try {
            std::size_t pos;
            c = std::stoi(f[2], &pos);
            if (pos != f[2].size() || c < 0) throw std::invalid_argument("");
        } catch (const std::exception&) {
            throw ScenarioError("case volumes line " + std::to_string(n) + ": bad count '" + f[2] + "'");
        }
        out[w].push_back(c);
    }
    for (int w = 0; w < kWeekdays; ++w)
        if (out[w].empty())
            throw ScenarioError("case volumes lack " + std::string(kWeekdayNames[w]));
    return out;
}

// ---------------------------------------------------------------------------

std::vector<SurgicalCase> generate_day_schedule(int day, const WeekdayInputs& in,
                                                const TriangularDist& picking, RngPolicy& rng,
                                                std::optional<int> fixed_count, int first_id) {
    int n = fixed_count ? *fixed_count
                        : static_cast<int>(std::lround(
                              sample_triangular(in.case_count, rng.stream(Stream::case_count).uniform())));
    std::vector<SurgicalCase> out(n);
    for (int i = 0; i < n; ++i) {
        auto& c = out[i];
        c.id = first_id + i;
        c.day = day;
        c.weekday = day % kWeekdays;
        c.release_offset = sample_discrete_cdf(in.release, rng.stream(Stream::release_time).uniform());
        c.picking_min = sample_triangular(picking, rng.stream(Stream::picking_time).uniform());
    }
    return out;
}

KanbanController::KanbanController(int cap) : cap_(cap) {
    if (cap < 0) throw std::invalid_argument("kanban cap must be non-negative");
}

bool KanbanController::acquire(int token) {
    if (active_ < cap_ && head_ == queue_.size()) {
        ++active_;
        return true;
    }
    queue_.push_back(token);
    return false;
}

std::vector<int> KanbanController::drain() {
    std::vector<int> granted;
    while (active_ < cap_ && head_ < queue_.size()) {
        granted.push_back(queue_[head_++]);
        ++active_;
    }
    if (head_ == queue_.size()) {
        queue_.clear();
        head_ = 0;
    }
    return granted;
}

std::vector<int> KanbanController::release() {
    if (active_ == 0) throw std::logic_error("kanban release without acquire");
    --active_;
    return drain();
}

std::vector<int> KanbanController::set_cap(int cap) {
    if (cap < 0) throw std::invalid_argument("kanban cap must be non-negative");
    cap_ = cap;
    return drain();
}

std::optional<double> task_completion_time(const std::vector<TripRecord>& clean) {
    if (clean.empty()) return std::nullopt;
    double lo = clean.front().pickup, hi = clean.front().dropoff;
    for (const auto& t : clean) {
        lo = std::min(lo, t.pickup);
        hi = std::max(hi, t.dropoff);
    }
    return hi - lo;
}

// ---------------------------------------------------------------------------
// One replication

namespace {

enum Timer : int { t_day = 1, t_clean_start, t_pick_done, t_soiled, t_wash_done, t_dry_done };

enum class CartPhase {
    available,
    clean_loading,
    clean_transit,
    stored_CCSA,
    in_OR,
    soiled_waiting,
    soiled_transit,
    washing,
    drying
};

struct CaseState {
    SurgicalCase c;
    int cart = -1;
    bool clean_dropped = false;
    bool release_due = false;
};

struct Pending {
    int task_id;
    int case_idx;
    CartState state;
};

class Replication : public EngineListener {
public:
    Replication(const Scenario& sc, const FleetPlan& plan, int rep, const RunOptions& opt)
        : sc_(sc),
          plan_(plan),
          rep_(rep),
          opt_(opt),
          rng_(sc.seed, static_cast<std::uint64_t>(rep)),
          eng_(sc.network, engine_config(sc, opt), &rng_.stream(Stream::dispatch_tiebreak)),
          kanban_(plan.k[0]) {
        for (int i = 0; i < sc.pool; ++i) eng_.add_agv();
        eng_.set_listener(this);
        cart_phase_.assign(sc.carts, CartPhase::available);
        for (int c = 0; c < sc.carts; ++c) free_carts_.push_back(c);
        free_employees_ = sc.loading_employees;
        free_washers_ = sc.washers;
        res_.rep = rep;
        res_.days.resize(sc.days);
        for (int d = 0; d < sc.days; ++d) {
            res_.days[d].day = d;
            res_.days[d].weekday = d % kWeekdays;
            res_.days[d].cap = plan.k[d % kWeekdays];
        }
        counts_.assign(sc.days, {0, 0, 0});
        cap_changes_.push_back({0.0, plan.k[0]});
    }

    ReplicationResult run() {
        eng_.schedule_timer(0.0, t_day, 0);
        eng_.run();
        eng_.require_drained();
        finish();
        return std::move(res_);
    }

    void on_timer(int code, long long p) override {
        switch (code) {
            case t_day: day_start(static_cast<int>(p)); break;
            case t_clean_start: clean_start(static_cast<int>(p)); break;
            case t_pick_done: pick_done(static_cast<int>(p)); break;
            case t_soiled: soiled_due(static_cast<int>(p)); break;
            case t_wash_done: wash_done(static_cast<int>(p)); break;
            case t_dry_done: dry_done(static_cast<int>(p)); break;
        }
    }

    void on_dropoff(const TaskOutcome& o) override {
        const Pending& pd = pending_[o.task];
        CaseState& cs = cases_[pd.case_idx];
        record(o, cs);
        close_span(o.task, o.dropoff);
        for (int tok : kanban_.release()) grant(tok);
        switch (pd.state) {
            case CartState::clean:
                move_cart(cs.cart, CartPhase::clean_transit, CartPhase::stored_CCSA);
                cs.clean_dropped = true;
                if (cs.release_due) request_soiled(pd.case_idx);
                break;
            case CartState::soiled:
                move_cart(cs.cart, CartPhase::soiled_transit, CartPhase::washing);
                washer_queue_.push_back(pd.case_idx);
                log(pd.case_idx, "wash_queue");
                serve_washers();
                break;
            case CartState::washed:
                move_cart(cs.cart, CartPhase::washing, CartPhase::drying);
                eng_.schedule_timer(eng_.now() + sc_.drying_min, t_dry_done, pd.case_idx);
                break;
        }
    }

private:
    static EngineConfig engine_config(const Scenario& sc, const RunOptions& opt) {
        EngineConfig c;
        c.kinematics = sc.kinematics;
        c.handling_min = sc.handling_min;
        c.record_ledger = opt.record_ledger;
        return c;
    }

    double now() const { return eng_.now(); }

    void violation(std::string s) {
        if (res_.violations.size() < 50) res_.violations.push_back(std::move(s));
    }

    void move_cart(int cart, CartPhase from, CartPhase to) {
        if (cart_phase_[cart] != from)
            violation("cart " + std::to_string(cart) + " in unexpected state");
        cart_phase_[cart] = to;
    }

    void log(int idx, const char* what) {
        if (opt_.record_events) res_.events.push_back({now(), cases_[idx].c.id, cases_[idx].cart, what});
    }

    int cap_for(int day) const { return plan_.k[day % kWeekdays]; }

    void day_start(int d) {
        eng_.check_watchdog();
        if (d < sc_.days) {
            if (d + 1 <= sc_.days) eng_.schedule_timer(1440.0 * (d + 1), t_day, d + 1);
            set_cap(cap_for(d));
        }
        // Yesterday's carts come back soiled through the day.
        if (d > 0)
            for (int idx : by_day_[d - 1])
                eng_.schedule_timer(1440.0 * d + cases_[idx].c.release_offset, t_soiled, idx);
        if (d >= sc_.days) return;

        std::optional<int> fixed;
        if (sc_.case_volumes) {
            const auto& v = (*sc_.case_volumes)[d % kWeekdays];
            fixed = v[(d / kWeekdays) % v.size()];
        }
        auto sched = generate_day_schedule(d, sc_.weekdays[d % kWeekdays], sc_.picking_time, rng_, fixed,
                                           static_cast<int>(cases_.size()));
        res_.days[d].cases = static_cast<int>(sched.size());
        by_day_.emplace_back();
        for (auto& c : sched) {
            by_day_.back().push_back(static_cast<int>(cases_.size()));
            cases_.push_back({c});
        }
        eng_.schedule_timer(1440.0 * d + sc_.clean_start_min, t_clean_start, d);
    }

    void set_cap(int cap) {
        // A lower cap binds once the carried-over grants have drained.
        if (kanban_.active() <= cap) {
            cap_changes_.push_back({now(), cap});
            lowered_to_ = -1;
        } else {
            lowered_to_ = cap;
        }
        for (int tok : kanban_.set_cap(cap)) grant(tok);
    }

    void clean_start(int d) {
        for (int idx : by_day_[d]) picking_queue_.push_back(idx);
        serve_picking();
    }

    void serve_picking() {
        while (free_employees_ > 0 && !free_carts_.empty() && !picking_queue_.empty()) {
            int idx = picking_queue_.front();
            picking_queue_.pop_front();
            int cart = free_carts_.front();
            free_carts_.pop_front();
            --free_employees_;
            cases_[idx].cart = cart;
            move_cart(cart, CartPhase::available, CartPhase::clean_loading);
            log(idx, "pick_start");
            eng_.schedule_timer(now() + cases_[idx].c.picking_min, t_pick_done, idx);
        }
    }

    void pick_done(int idx) {
        ++free_employees_;
        log(idx, "pick_done");
        serve_picking();
        move_cart(cases_[idx].cart, CartPhase::clean_loading, CartPhase::clean_transit);
        request(idx, CartState::clean);
    }

    void soiled_due(int idx) {
        CaseState& cs = cases_[idx];
        cs.release_due = true;
        if (cs.clean_dropped) request_soiled(idx);
    }

    void request_soiled(int idx) {
        CaseState& cs = cases_[idx];
        move_cart(cs.cart, CartPhase::stored_CCSA, CartPhase::in_OR);
        move_cart(cs.cart, CartPhase::in_OR, CartPhase::soiled_waiting);
        move_cart(cs.cart, CartPhase::soiled_waiting, CartPhase::soiled_transit);
        request(idx, CartState::soiled);
    }

    void serve_washers() {
        while (free_washers_ > 0 && !washer_queue_.empty()) {
            int idx = washer_queue_.front();
            washer_queue_.pop_front();
            --free_washers_;
            log(idx, "wash_start");
            eng_.schedule_timer(now() + sc_.wash_cycle_min, t_wash_done, idx);
        }
    }

    void wash_done(int idx) {
        ++free_washers_;
        log(idx, "wash_done");
        serve_washers();
        request(idx, CartState::washed);
    }

    void dry_done(int idx) {
        int cart = cases_[idx].cart;
        move_cart(cart, CartPhase::drying, CartPhase::available);
        free_carts_.push_back(cart);
        log(idx, "available");
        serve_picking();
    }

    void request(int idx, CartState st) {
        int id = static_cast<int>(pending_.size());
        pending_.push_back({id, idx, st});
        if (kanban_.acquire(id)) grant(id);
    }

    void grant(int id) {
        const Pending& p = pending_[id];
        if (kanban_.active() > effective_cap())
            violation("kanban grant above cap at t=" + std::to_string(now()));
        spans_.push_back({now(), std::numeric_limits<double>::infinity()});
        span_of_.resize(pending_.size(), -1);
        span_of_[id] = static_cast<int>(spans_.size()) - 1;
        eng_.submit({id, cases_[p.case_idx].cart, p.state});
    }

    int effective_cap() const { return cap_changes_.back().second; }

    void close_span(int task, double t) {
        spans_[span_of_[task]].second = t;
        if (lowered_to_ >= 0 && kanban_.active() - 1 <= lowered_to_) {
            cap_changes_.push_back({t, lowered_to_});
            lowered_to_ = -1;
        }
    }

    void record(const TaskOutcome& o, const CaseState& cs) {
        TripRecord r;
        r.rep = rep_;
        r.day = static_cast<int>(std::floor(o.pickup / 1440.0));
        r.weekday = r.day % kWeekdays;
        r.case_day = cs.c.day;
        r.cart = cs.cart;
        r.state = o.state;
        r.agv = o.agv;
        r.assigned = o.assigned;
        r.pickup = o.pickup;
        r.dropoff = o.dropoff;
        double tr = r.travel();
        if (cs.c.day < sc_.days) counts_[cs.c.day][static_cast<int>(o.state)]++;
        if (o.state == CartState::soiled) {
            res_.soiled_sum += tr;
            res_.soiled_n++;
        }
        if (r.day < sc_.days) {
            DayMetrics& m = res_.days[r.day];
            switch (o.state) {
                case CartState::clean:
                    if (m.clean_n == 0) {
                        m.clean_min = m.clean_max = tr;
                        m.first_pickup = r.pickup;
                        m.last_drop = r.dropoff;
                    }
                    m.clean_n++;
                    m.clean_sum += tr;
                    m.clean_min = std::min(m.clean_min, tr);
                    m.clean_max = std::max(m.clean_max, tr);
                    m.first_pickup = std::min(m.first_pickup, r.pickup);
                    m.last_drop = std::max(m.last_drop, r.dropoff);
                    break;
                case CartState::soiled:
                    m.soiled_n++;
                    m.soiled_sum += tr;
                    break;
                case CartState::washed:
                    m.washed_n++;
                    m.washed_sum += tr;
                    break;
            }
        }
        if (opt_.keep_trips) res_.trips.push_back(r);
    }

    // Independent audits once drained.
    void finish() {
        res_.stats = eng_.stats();
        for (int d = 0; d < sc_.days; ++d) {
            auto& c = counts_[d];
            int n = res_.days[d].cases;
            if (c[0] != n || c[1] != n || c[2] != n)
                violation("day " + std::to_string(d) + " trips " + std::to_string(c[0]) + "/" +
                          std::to_string(c[1]) + "/" + std::to_string(c[2]) + " for " +
                          std::to_string(n) + " cases");
        }
        if (static_cast<int>(free_carts_.size()) != sc_.carts)
            violation("cart pool closes at " + std::to_string(free_carts_.size()));
        for (auto p : cart_phase_)
            if (p != CartPhase::available) {
                violation("cart left in service");
                break;
            }
        audit_kanban();
        if (opt_.record_ledger)
            for (auto& m : check_ledger(eng_.ledger(), sc_.network)) violation("ledger: " + m);
    }

    // Sweep of grant spans against the cap schedule, per day.
    void audit_kanban() {
        std::vector<std::pair<double, int>> ev;
        for (auto& [a, b] : spans_) {
            ev.push_back({a, +1});
            ev.push_back({b, -1});
        }
        std::sort(ev.begin(), ev.end());
        std::size_t ci = 0;
        int active = 0;
        for (auto [t, d] : ev) {
            while (ci + 1 < cap_changes_.size() && cap_changes_[ci + 1].first <= t) ++ci;
            active += d;
            int day = std::clamp(static_cast<int>(std::floor(t / 1440.0)), 0, sc_.days - 1);
            auto& m = res_.days[day];
            m.peak_active = std::max(m.peak_active, active);
            if (active > cap_changes_[ci].second) {
                violation("kanban: " + std::to_string(active) + " active above cap " +
                          std::to_string(cap_changes_[ci].second) + " at t=" + std::to_string(t));
            }
        }
    }

    const Scenario& sc_;
    FleetPlan plan_;
    int rep_;
    RunOptions opt_;
    RngPolicy rng_;
    Engine eng_;
    KanbanController kanban_;
    ReplicationResult res_;

    std::vector<CaseState> cases_;
    std::vector<std::vector<int>> by_day_;
    std::vector<Pending> pending_;
    std::vector<CartPhase> cart_phase_;
    std::deque<int> free_carts_;
    std::deque<int> picking_queue_;
    std::deque<int> washer_queue_;
    int free_employees_ = 0;
    int free_washers_ = 0;
    std::vector<std::array<int, 3>> counts_;

    std::vector<std::pair<double, double>> spans_;
    std::vector<int> span_of_;
    std::vector<std::pair<double, int>> cap_changes_;
    int lowered_to_ = -1;
};

}  // namespace

ReplicationResult run_replication(const Scenario& sc, const FleetPlan& plan, int rep, const RunOptions& opt) {
    for (int w = 0; w < kWeekdays; ++w)
        if (plan.k[w] < 1 || plan.k[w] > sc.pool)
            throw ScenarioError("plan " + plan.to_string() + " exceeds the pool of " + std::to_string(sc.pool));
    Replication r(sc, plan, rep, opt);
    try {
        return r.run();
    } catch (const DeadlockError& e) {
        throw DeadlockError("plan " + plan.to_string() + " rep " + std::to_string(rep) + ": " + e.what());
    }
}

std::vector<ReplicationResult> run_replications_serial(const Scenario& sc, const FleetPlan& plan, int reps,
                                                       const RunOptions& opt) {
    std::vector<ReplicationResult> out;
    out.reserve(reps);
    for (int r = 0; r < reps; ++r) out.push_back(run_replication(sc, plan, r, opt));
    return out;
}

std::vector<ReplicationResult> run_replications(const Scenario& sc, const FleetPlan& plan, int reps, int jobs,
                                                const RunOptions& opt) {
    if (jobs <= 1 || reps <= 1) return run_replications_serial(sc, plan, reps, opt);
    std::vector<ReplicationResult> out(reps);
    std::vector<std::string> errors(reps);
#pragma omp parallel for num_threads(jobs) schedule(dynamic, 1)
    for (int r = 0; r < reps; ++r) {
        try {
            out[r] = run_replication(sc, plan, r, opt);
        } catch (const std::exception& e) {
            errors[r] = e.what();
        }
    }
    for (auto& e : errors)
        if (!e.empty()) throw DeadlockError(e);
    return out;
}

}  // namespace agvsim
