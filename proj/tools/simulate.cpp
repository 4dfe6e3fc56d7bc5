#include <cstdlib>
#include <fstream>
#include <iostream>
#include <sstream>
#include <string>

#include <CLI11.hpp>

#include "crhx/experiment.hpp"

namespace {

std::string read_file(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw crhx::ConfigError("cannot open config file: " + path);
    std::ostringstream ss;
    ss << in.rdbuf();
    return ss.str();
}

int verbosity() {
    const char* v = std::getenv("CRHX_LOG");
    return v ? std::atoi(v) : 0;
}

} // namespace

int main(int argc, char** argv) {
    CLI::App app{"Two-cell cognitive-radio handover exchange simulator"};
    app.name("simulate");

    std::string config_path;
    std::string output_path;
    std::uint64_t seed = 0;
    bool seed_set = false;
    int replications = 0;
    std::vector<std::string> policies;
    std::string sweep;
    bool oracle = false;

    app.add_option("--config", config_path, "experiment config file (key = value)");
    app.add_option("--output", output_path, "CSV output path (default: stdout)");
    app.add_option("--seed", seed, "override base seed")
        ->each([&](const std::string&) { seed_set = true; });
    app.add_option("--replications", replications, "override replication count");
    app.add_option("--policy", policies,
                   "policies to run: exchange|buffered|conventional");
    app.add_option("--sweep", sweep, "sweep axis: lambda|queue");
    app.add_flag("--oracle", oracle, "emit analytic oracle columns");

    CLI11_PARSE(app, argc, argv);

    crhx::ExperimentSpec spec;
    try {
        if (!config_path.empty()) {
            spec = crhx::parse_config(read_file(config_path));
        }
        if (seed_set) spec.base_seed = seed;
        if (replications > 0) spec.replications = replications;
        if (!policies.empty()) spec.policies = policies;
        if (!sweep.empty()) {
            if (sweep == "lambda") spec.sweep_axis = crhx::SweepAxis::LambdaNc;
            else if (sweep == "queue") spec.sweep_axis = crhx::SweepAxis::QueueCapacity;
            else throw crhx::ConfigError("unknown sweep axis: " + sweep);
        }
        if (!output_path.empty()) spec.output_path = output_path;
        if (oracle) spec.emit_oracle = true;
        spec.validate();
    } catch (const crhx::ConfigError& e) {
        std::cerr << "config error: " << e.what() << "\n";
        return 1;
    }

    try {
        if (verbosity() > 0) {
            std::cerr << "running " << spec.policies.size() << " policies x "
                      << spec.sweep_values().size() << " sweep points x "
                      << spec.replications << " replications\n";
        }
        const auto rows = crhx::run_campaign(spec);
        const std::string csv = crhx::emit_csv(rows, spec);
        if (spec.output_path.empty()) {
            std::cout << csv;
        } else {
            std::ofstream out(spec.output_path, std::ios::binary);
            if (!out) {
                std::cerr << "config error: cannot write " << spec.output_path << "\n";
                return 1;
            }
            out << csv;
        }
    } catch (const crhx::InvariantViolation& e) {
        std::cerr << "invariant violation: " << e.what() << "\n";
        return 2;
    } catch (const std::exception& e) {
        std::cerr << "error: " << e.what() << "\n";
        return 1;
    }
    return 0;
}
