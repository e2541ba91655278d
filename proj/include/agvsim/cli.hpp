#pragma once

// Batch commands behind the agv_simopt tool. Each writes plain delimited
// files into an output directory; a failed command leaves none behind.

#include <cstdint>
#include <iosfwd>
#include <optional>
#include <stdexcept>
#include <string>
#include <utility>

#include "agvsim/layout.hpp"

namespace agvsim {

/// Bad flags or arguments; maps to exit code 2.
class UsageError : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

struct CommandOptions {
    std::string scenario;  // required by run, sweep and optimize
    std::string out = ".";
    std::optional<std::uint64_t> seed;  // else AGV_SIMOPT_SEED, else the scenario's
    std::optional<int> reps;
    std::optional<int> days;
    int jobs = 1;
    std::optional<std::pair<int, int>> fleet;  // "A..B" or "N"
    std::optional<Variant> variant;
    int experiment = 1;
    int budget = 60;
    bool exhaustive = false;
    double level = 0.95;
    bool levene = false;
    bool surgical_only = false;
    std::optional<double> max_travel;
    bool ml_mode = false;
    std::string trips;      // validate: simulated trips.csv or trip log
    std::string reference;  // validate: reference trip log
    std::string log;        // ingest input
    std::string clean_route = "MD->CCSA";
    std::string soiled_route = "SCSA->CSSD";
};

/// "3..11" or "7"; throws UsageError.
std::pair<int, int> parse_fleet_range(const std::string& s);

/// Each returns the process exit code; progress goes to `msg`.
int cmd_run(const CommandOptions& o, std::ostream& msg);
int cmd_sweep(const CommandOptions& o, std::ostream& msg);
int cmd_optimize(const CommandOptions& o, std::ostream& msg);
int cmd_validate(const CommandOptions& o, std::ostream& msg);
int cmd_ingest(const CommandOptions& o, std::ostream& msg);

}  // namespace agvsim
