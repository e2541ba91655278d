// agv_simopt: run, sweep, optimize, validate and ingest from the command line.

#include <iostream>

#include "CLI11.hpp"
#include "agvsim/cli.hpp"
#include "agvsim/engine.hpp"

using namespace agvsim;

int main(int argc, char** argv) {
    CLI::App app{"Zone-controlled AGV network simulation and Kanban fleet optimization"};
    app.require_subcommand(1);
    CommandOptions o;
    std::string fleet, variant;
    std::uint64_t seed = 0;
    int reps = 0, days = 0;

    auto common = [&](CLI::App* c, bool sim) {
        c->add_option("--scenario", o.scenario, "scenario file");
        c->add_option("--out", o.out, "output directory")->capture_default_str();
        if (!sim) return;
        c->add_option("--seed", seed, "master seed (else AGV_SIMOPT_SEED, else the scenario's)");
        c->add_option("--reps", reps, "replications")->check(CLI::PositiveNumber);
        c->add_option("--days", days, "business days per replication")->check(CLI::PositiveNumber);
        c->add_option("--jobs", o.jobs, "parallel replications")->check(CLI::PositiveNumber)->capture_default_str();
        c->add_option("--variant", variant, "M or S")->check(CLI::IsMember({"M", "S"}));
        c->add_option("--level", o.level, "confidence level")->capture_default_str();
    };

    auto* run = app.add_subcommand("run", "simulate a scenario and write trips.csv, days.csv, summary.txt");
    common(run, true);
    run->add_option("--fleet", fleet, "constant fleet size N");
    auto* sweep = app.add_subcommand("sweep", "summaries over a fleet-size range");
    common(sweep, true);
    sweep->add_option("--fleet", fleet, "range A..B")->required();
    auto* opt = app.add_subcommand("optimize", "search per-weekday fleet plans");
    common(opt, true);
    opt->add_option("--experiment", o.experiment, "1: travel with T_c <= 200, 2: completion")->capture_default_str();
    opt->add_option("--budget", o.budget, "plan evaluations")->capture_default_str();
    opt->add_flag("--exhaustive", o.exhaustive, "enumerate every plan");
    auto* val = app.add_subcommand("validate", "Welch t-test of simulated against reference travel times");
    common(val, true);
    val->add_option("--trips", o.trips, "simulated trips.csv or trip log (else the scenario is run)");
    val->add_option("--reference", o.reference, "reference trip log")->required();
    val->add_flag("--levene", o.levene, "Levene instead of the F-test for variances");
    val->add_flag("--surgical-only", o.surgical_only, "keep case-cart rows only");
    auto* ing = app.add_subcommand("ingest", "summaries and input distributions from a trip log");
    common(ing, false);
    ing->add_option("--log", o.log, "trip log")->required();
    ing->add_flag("--surgical-only", o.surgical_only, "keep case-cart rows only");
    ing->add_option("--max-travel", o.max_travel, "drop trips longer than this many minutes");
    ing->add_flag("--ml-mode", o.ml_mode, "maximum-likelihood TRIA mode");
    ing->add_option("--clean-route", o.clean_route, "FROM->TO of clean trips")->capture_default_str();
    ing->add_option("--soiled-route", o.soiled_route, "FROM->TO of soiled trips")->capture_default_str();

    try {
        app.parse(argc, argv);
    } catch (const CLI::ParseError& e) {
        return app.exit(e);
    }

    try {
        auto* cmd = app.get_subcommands().front();
        auto given = [&](const char* name) {
            auto* op = cmd->get_option_no_throw(name);
            return op && op->count() > 0;
        };
        if (given("--seed")) o.seed = seed;
        if (given("--reps")) o.reps = reps;
        if (given("--days")) o.days = days;
        if (!variant.empty()) o.variant = parse_variant(variant);
        if (!fleet.empty()) o.fleet = parse_fleet_range(fleet);
        if (cmd == run) return cmd_run(o, std::cout);
        if (cmd == sweep) return cmd_sweep(o, std::cout);
        if (cmd == opt) return cmd_optimize(o, std::cout);
        if (cmd == val) return cmd_validate(o, std::cout);
        return cmd_ingest(o, std::cout);
    } catch (const UsageError& e) {
        std::cerr << "usage error: " << e.what() << "\n";
        return 2;
    } catch (const std::exception& e) {
        std::cerr << "error: " << e.what() << "\n";
        return 1;
    }
}
