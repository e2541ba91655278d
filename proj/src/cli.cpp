#include "agvsim/cli.hpp"

#include <algorithm>
#include <cstdio>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <map>
#include <ostream>
#include <sstream>
#include <vector>

#include "agvsim/ingest.hpp"
#include "agvsim/optimizer.hpp"
#include "agvsim/stochastics.hpp"
#include "agvsim/workflow.hpp"

namespace agvsim {

namespace fs = std::filesystem;

namespace {

// Files are written under temporary names and renamed together on commit;
// anything uncommitted is removed.
class Outputs {
public:
    explicit Outputs(const std::string& dir) : dir_(dir) {
        std::error_code ec;
        fs::create_directories(dir_, ec);
        if (ec || !fs::is_directory(dir_)) throw std::runtime_error("cannot create output directory " + dir);
    }
    ~Outputs() {
        std::error_code ec;
        for (auto& [tmp, fin] : files_) fs::remove(tmp, ec);
    }
    void write(const std::string& name, const std::string& content) {
        fs::path fin = dir_ / name, tmp = dir_ / (name + ".partial");
        std::ofstream f(tmp, std::ios::binary);
        f << content;
        f.close();
        if (!f) throw std::runtime_error("cannot write " + fin.string());
        files_.push_back({tmp, fin});
    }
    void commit() {
        for (auto& [tmp, fin] : files_) fs::rename(tmp, fin);
        files_.clear();
    }

private:
    fs::path dir_;
    std::vector<std::pair<fs::path, fs::path>> files_;
};

std::string f6(double x) {
    char b[40];
    std::snprintf(b, sizeof b, "%.6f", x);
    return b;
}

std::string slurp(const std::string& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw std::runtime_error("cannot read " + path);
    std::ostringstream ss;
    ss << in.rdbuf();
    return ss.str();
}

Scenario load(const CommandOptions& o, bool required = true) {
    if (o.scenario.empty()) {
        if (required) throw UsageError("--scenario is required");
        Scenario sc;
        sc.network = apply_variant(reference_layout(), o.variant.value_or(Variant::M));
        sc.variant = sc.network.variant;
        return sc;
    }
    Scenario sc = load_scenario(o.scenario);
    if (o.variant) sc.set_variant(*o.variant);
    if (o.reps) sc.replications = *o.reps;
    if (o.days) sc.days = *o.days;
    if (o.seed) {
        sc.seed = *o.seed;
    } else if (const char* env = std::getenv("AGV_SIMOPT_SEED")) {
        try {
            std::size_t pos;
            sc.seed = std::stoull(env, &pos);
            if (pos != std::string(env).size()) throw std::invalid_argument(env);
        } catch (const std::exception&) {
            throw UsageError(std::string("AGV_SIMOPT_SEED is not an unsigned integer: ") + env);
        }
    }
    if (o.jobs < 1) throw UsageError("--jobs must be at least 1");
    sc.validate();
    return sc;
}

std::string describe(const Scenario& sc, const FleetPlan& plan) {
    return "variant " + std::string(sc.variant == Variant::M ? "M" : "S") + "\nfleet " + plan.to_string() +
           "\nseed " + std::to_string(sc.seed) + "\nreplications " + std::to_string(sc.replications) + "\ndays " +
           std::to_string(sc.days) + "\n";
}

const char* state_name(CartState s) { return s == CartState::clean ? "clean" : s == CartState::soiled ? "soiled" : "washed"; }

std::string ci_line(const std::string& name, const std::vector<double>& xs, double level) {
    if (xs.empty()) return name + " n=0\n";
    std::string s = name + " mean " + f6(mean(xs));
    if (xs.size() > 1) {
        auto ci = mean_ci(xs, level);
        s += " ci " + f6(ci.confidence_interval.first) + " " + f6(ci.confidence_interval.second);
    }
    return s + "\n";
}

int fail_on_violations(const std::vector<ReplicationResult>& rs, std::ostream& msg) {
    int n = 0;
    for (const auto& r : rs)
        for (const auto& v : r.violations) {
            if (n++ < 10) msg << "rep " << r.rep << ": " << v << "\n";
        }
    return n;
}

}  // namespace

std::pair<int, int> parse_fleet_range(const std::string& s) {
    auto num = [&](const std::string& t) {
        std::size_t pos = 0;
        int v = -1;
        try {
            v = std::stoi(t, &pos);
        } catch (const std::exception&) {
            pos = 0;
        }
        if (t.empty() || pos != t.size() || v < 1) throw UsageError("bad fleet '" + s + "', expected A..B or N");
        return v;
    };
    auto dots = s.find("..");
    if (dots == std::string::npos) {
        int n = num(s);
        return {n, n};
    }
    int a = num(s.substr(0, dots)), b = num(s.substr(dots + 2));
    if (a > b) throw UsageError("empty fleet range '" + s + "'");
    return {a, b};
}

int cmd_run(const CommandOptions& o, std::ostream& msg) {
    Scenario sc = load(o);
    FleetPlan plan = sc.fleet;
    if (o.fleet) {
        if (o.fleet->first != o.fleet->second) throw UsageError("run takes a single fleet size");
        plan = FleetPlan::constant(o.fleet->first);
    }
    Outputs out(o.out);
    auto rs = run_replications(sc, plan, sc.replications, o.jobs);
    if (int n = fail_on_violations(rs, msg)) {
        msg << n << " invariant violations\n";
        return 1;
    }

    std::string trips = "rep,day,weekday,case_day,cart,state,agv,assigned,pickup,dropoff,travel\n";
    std::string days =
        "rep,day,weekday,cases,cap,clean_n,soiled_n,washed_n,tc,completion_clock,clean_mean,soiled_mean,"
        "washed_mean,peak_active\n";
    std::array<std::vector<double>, 3> rep_mean;
    std::vector<double> rep_tc, rep_clock;
    int peak = 0;
    for (const auto& r : rs) {
        std::array<double, 3> sum{};
        std::array<int, 3> n{};
        for (const auto& t : r.trips) {
            trips += std::to_string(t.rep) + "," + std::to_string(t.day) + "," +
                     std::string(kWeekdayNames[t.weekday]) + "," + std::to_string(t.case_day) + "," +
                     std::to_string(t.cart) + "," + state_name(t.state) + "," + std::to_string(t.agv) + "," +
                     f6(t.assigned) + "," + f6(t.pickup) + "," + f6(t.dropoff) + "," + f6(t.travel()) + "\n";
            sum[static_cast<int>(t.state)] += t.travel();
            n[static_cast<int>(t.state)]++;
        }
        for (int s = 0; s < 3; ++s)
            if (n[s]) rep_mean[s].push_back(sum[s] / n[s]);
        double tc = 0, clock = 0;
        int nd = 0;
        for (const auto& d : r.days) {
            days += std::to_string(r.rep) + "," + std::to_string(d.day) + "," + std::string(kWeekdayNames[d.weekday]) +
                    "," + std::to_string(d.cases) + "," + std::to_string(d.cap) + "," + std::to_string(d.clean_n) +
                    "," + std::to_string(d.soiled_n) + "," + std::to_string(d.washed_n) + "," +
                    (d.has_tc() ? f6(d.tc()) : "") + "," + (d.has_tc() ? f6(d.completion_clock()) : "") + "," +
                    f6(d.clean_mean()) + "," + f6(d.soiled_mean()) + "," + f6(d.washed_mean()) + "," +
                    std::to_string(d.peak_active) + "\n";
            if (d.has_tc()) {
                tc += d.tc();
                clock += d.completion_clock();
                ++nd;
            }
            peak = std::max(peak, d.peak_active);
        }
        if (nd) {
            rep_tc.push_back(tc / nd);
            rep_clock.push_back(clock / nd);
        }
    }
    std::string summary = describe(sc, plan);
    summary += "level " + f6(o.level) + "\n";
    for (int s = 0; s < 3; ++s)
        summary += ci_line(std::string(state_name(static_cast<CartState>(s))) + "_travel_min", rep_mean[s], o.level);
    summary += ci_line("task_completion_min", rep_tc, o.level);
    summary += ci_line("completion_clock_min", rep_clock, o.level);
    if (!rep_clock.empty()) summary += "completion_clock " + format_clock(mean(rep_clock)) + "\n";
    summary += "peak_active " + std::to_string(peak) + "\nviolations 0\n";

    out.write("trips.csv", trips);
    out.write("days.csv", days);
    out.write("summary.txt", summary);
    out.commit();
    msg << summary;
    return 0;
}

int cmd_sweep(const CommandOptions& o, std::ostream& msg) {
    Scenario sc = load(o);
    if (!o.fleet) throw UsageError("sweep needs --fleet A..B");
    auto [a, b] = *o.fleet;
    if (b > sc.pool) throw UsageError("fleet range exceeds the pool of " + std::to_string(sc.pool));
    Outputs out(o.out);
    std::string csv =
        "variant,fleet,route,n,mean,min,q1,median,q3,max,tc_mean,tc_ci_lo,tc_ci_hi,completion_clock_min,"
        "completion_clock\n";
    const char* var = sc.variant == Variant::M ? "M" : "S";
    for (int k = a; k <= b; ++k) {
        auto plan = FleetPlan::constant(k);
        auto rs = run_replications(sc, plan, sc.replications, o.jobs);
        if (int n = fail_on_violations(rs, msg)) {
            msg << n << " invariant violations at fleet " << k << "\n";
            return 1;
        }
        auto ev = summarize(plan, rs);
        std::pair<double, double> ci{ev.avg_tc, ev.avg_tc};
        if (ev.rep_mean_tc.size() > 1) ci = mean_ci(ev.rep_mean_tc, o.level).confidence_interval;
        std::string tail = "," + f6(ev.avg_tc) + "," + f6(ci.first) + "," + f6(ci.second) + "," + f6(ev.avg_clock) +
                           "," + format_clock(ev.avg_clock) + "\n";
        for (int s = 0; s < 3; ++s) {
            std::vector<double> tr;
            for (const auto& r : rs)
                for (const auto& t : r.trips)
                    if (static_cast<int>(t.state) == s) tr.push_back(t.travel());
            if (tr.empty()) continue;
            csv += std::string(var) + "," + std::to_string(k) + "," + state_name(static_cast<CartState>(s)) + "," +
                   std::to_string(tr.size()) + "," + f6(mean(tr)) + "," + f6(quantile(tr, 0)) + "," +
                   f6(quantile(tr, 0.25)) + "," + f6(quantile(tr, 0.5)) + "," + f6(quantile(tr, 0.75)) + "," +
                   f6(quantile(tr, 1)) + tail;
        }
        msg << "fleet " << k << ": clean " << f6(ev.avg_travel) << " T_c " << f6(ev.avg_tc) << "\n";
    }
    out.write("sweep.csv", csv);
    out.commit();
    return 0;
}

int cmd_optimize(const CommandOptions& o, std::ostream& msg) {
    if (o.budget <= 0) throw UsageError("--budget must be positive");
    if (o.experiment != 1 && o.experiment != 2) throw UsageError("--experiment must be 1 or 2");
    Scenario sc = load(o);
    SearchConfig cfg;
    cfg.objective = o.experiment == 1 ? Objective::min_total_travel : Objective::min_sum_completion;
    if (o.experiment == 1) cfg.constraint = TcConstraint{};
    cfg.budget = o.budget;
    cfg.exhaustive = o.exhaustive;
    cfg.replications = sc.replications;
    cfg.jobs = o.jobs;
    cfg.hi.fill(sc.pool);
    Outputs out(o.out);
    auto res = search(cfg, sc);
    auto kept = filter_candidates(res.ranked, FilterCriteria{});
    out.write("report.csv", format_report(res.ranked));
    out.write("filtered.csv", format_report(kept));
    std::string info = describe(sc, res.ranked.front().eval.plan);
    info += "experiment " + std::to_string(o.experiment) + "\nobjective " +
            (o.experiment == 1 ? "min_total_travel" : "min_sum_completion") + "\nconstraint " +
            (o.experiment == 1 ? "tc<=200" : "none") + "\nevaluations " + std::to_string(res.evaluations) +
            "\nexhaustive " + (res.exhaustive ? "yes" : "no") + "\nfiltered " + std::to_string(kept.size()) + "\n";
    out.write("optimize.txt", info);
    out.commit();
    msg << info;
    return 0;
}

namespace {

// Travel minutes per route from trips.csv or a raw trip log; log rows are
// matched to routes by their origin and destination stations.
std::map<std::string, std::vector<double>> load_travel(const std::string& path, const NetworkSpec& net,
                                                        bool surgical_only) {
    std::string text = slurp(path);
    std::map<std::string, std::vector<double>> out;
    if (text.rfind("rep,", 0) == 0) {
        std::istringstream in(text);
        std::string line;
        std::getline(in, line);
        int n = 1;
        while (std::getline(in, line)) {
            ++n;
            if (line.empty()) continue;
            std::vector<std::string> f;
            std::stringstream ls(line);
            std::string c;
            while (std::getline(ls, c, ',')) f.push_back(c);
            if (f.size() != 11) throw std::runtime_error(path + " line " + std::to_string(n) + ": expected 11 fields");
            out[f[5]].push_back(std::stod(f[10]));
        }
        return out;
    }
    LogOptions lo;
    lo.surgical_only = surgical_only;
    auto log = parse_trip_log(text, lo);
    std::map<std::string, std::string> names;
    for (auto s : kCartStates) {
        auto r = resolve_route(net, net.active_route(s));
        names[net.stations[r.origin_station].id + "->" + net.stations[r.dest_station].id] = state_name(s);
    }
    for (const auto& r : log.rows)
        if (auto it = names.find(r.route()); it != names.end()) out[it->second].push_back(r.travel_min());
    return out;
}

}  // namespace

int cmd_validate(const CommandOptions& o, std::ostream& msg) {
    if (o.reference.empty()) throw UsageError("validate needs --reference");
    if (o.level <= 0 || o.level >= 1) throw UsageError("--level must lie in (0,1)");
    Scenario sc = load(o, false);
    std::map<std::string, std::vector<double>> sim;
    if (!o.trips.empty()) {
        sim = load_travel(o.trips, sc.network, o.surgical_only);
    } else {
        if (o.scenario.empty()) throw UsageError("validate needs --trips or --scenario");
        for (const auto& r : run_replications(sc, sc.fleet, sc.replications, o.jobs))
            for (const auto& t : r.trips) sim[state_name(t.state)].push_back(t.travel());
    }
    auto ref = load_travel(o.reference, sc.network, o.surgical_only);
    Outputs out(o.out);
    std::string csv =
        "route,sim_n,sim_mean,sim_ci_lo,sim_ci_hi,ref_n,ref_mean,ref_ci_lo,ref_ci_hi,t,df,p_value,var_test,"
        "var_statistic,var_p_value,verdict\n";
    int rows = 0;
    for (auto s : kCartStates) {
        std::string name = state_name(s);
        auto a = sim.find(name), b = ref.find(name);
        if (a == sim.end() || b == ref.end() || a->second.size() < 2 || b->second.size() < 2) continue;
        auto ca = mean_ci(a->second, o.level), cb = mean_ci(b->second, o.level);
        auto t = welch_t_test(a->second, b->second, o.level);
        auto v = variance_ratio_test(a->second, b->second, o.level, o.levene ? VarianceTest::levene : VarianceTest::f_ratio);
        bool ok = t.p_value >= 1 - o.level;
        csv += name + "," + std::to_string(a->second.size()) + "," + f6(ca.estimate) + "," +
               f6(ca.confidence_interval.first) + "," + f6(ca.confidence_interval.second) + "," +
               std::to_string(b->second.size()) + "," + f6(cb.estimate) + "," + f6(cb.confidence_interval.first) + "," +
               f6(cb.confidence_interval.second) + "," + f6(t.statistic) + "," + f6(t.degrees_of_freedom) + "," +
               f6(t.p_value) + "," + (o.levene ? "levene" : "f") + "," + f6(v.statistic) + "," + f6(v.p_value) + "," +
               (ok ? "consistent" : "different") + "\n";
        ++rows;
    }
    if (rows == 0) throw std::runtime_error("no route has at least two trips in both logs");
    out.write("validation.csv", csv);
    out.commit();
    msg << csv;
    return 0;
}

int cmd_ingest(const CommandOptions& o, std::ostream& msg) {
    if (o.log.empty()) throw UsageError("ingest needs --log");
    LogOptions lo;
    lo.surgical_only = o.surgical_only;
    lo.max_travel_min = o.max_travel;
    auto log = parse_trip_log(slurp(o.log), lo);
    if (log.rows.empty()) throw std::runtime_error("no trips left after filtering");
    Outputs out(o.out);
    out.write("route_summary.csv", format_route_summary(route_time_summary(log.rows, default_time_bins())));

    std::vector<TripLogRow> clean;
    for (const auto& r : log.rows)
        if (r.route() == o.clean_route) clean.push_back(r);
    std::string counts = "date,weekday,case_count\n";
    static const char* names[] = {"mon", "tue", "wed", "thu", "fri", "sat", "sun"};
    for (const auto& d : daily_counts(clean)) counts += d.date + "," + names[d.weekday] + "," + std::to_string(d.count) + "\n";
    out.write("case_volumes.csv", counts);

    auto inputs = derive_inputs(log.rows, o.clean_route, o.soiled_route,
                                o.ml_mode ? ModeEstimator::max_likelihood : ModeEstimator::nearest_mean);
    out.write("distributions.scn", format_distributions(inputs));
    std::string info = "rows_in " + std::to_string(log.rows_in) + "\nrows_out " + std::to_string(log.rows.size()) +
                       "\noutliers " + std::to_string(log.outliers) + "\nfiltered " + std::to_string(log.filtered) +
                       "\nmode_estimator " + (o.ml_mode ? "max_likelihood" : "nearest_mean") + "\n";
    for (const auto& n : inputs.notes) info += "note " + n + "\n";
    out.write("ingest.txt", info);
    out.commit();
    msg << info;
    return 0;
}

}  // namespace agvsim
