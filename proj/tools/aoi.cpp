// aoi: topology generation, AoI optimization, slotted ALOHA simulation and sweeps.

#include <iostream>
#include <string>

#include <CLI11.hpp>

#include "aoi/cli.hpp"

namespace {

struct Flags {
    std::string topology, edges, p = "1", q, q_file, objective = "total", solver = "pgd";
    std::string format, out, sweep = "line", range = "3:20";
    long long slots = 1'000'000, warmup = 1'000;
    int reps = 1, resolution = 200;
    unsigned long long seed = 0;
    double tol = 0.02;
};

void add_topology(CLI::App* sub, Flags& f) {
    auto* preset = sub->add_option("--topology", f.topology,
                                   "line:N ring:N star:N grid:RxC complete:N tree6 astar6 acircle6");
    auto* file = sub->add_option("--edges", f.edges, "edge-list file")->check(CLI::ExistingFile);
    preset->excludes(file);
}

void add_model(CLI::App* sub, Flags& f) {
    sub->add_option("--p", f.p, "generation probability: scalar or comma-separated per node");
    sub->add_option("--objective", f.objective, "total | normalized");
}

void add_solver(CLI::App* sub, Flags& f) {
    sub->add_option("--solver", f.solver, "pgd | fixed-point | d-regular | star | grid-oracle");
    sub->add_option("--resolution", f.resolution, "grid-oracle resolution");
}

void add_sim(CLI::App* sub, Flags& f) {
    sub->add_option("--slots", f.slots, "slots per replication");
    sub->add_option("--warmup", f.warmup, "slots excluded from averages");
    sub->add_option("--reps", f.reps, "replications");
    sub->add_option("--seed", f.seed, "RNG seed");
    sub->add_option("--tol", f.tol, "relative tolerance for analytic-vs-empirical checks");
}

void add_output(CLI::App* sub, Flags& f) {
    sub->add_option("--format", f.format, "json | csv (gen also: edges)");
    sub->add_option("--out", f.out, "also write the report to this file");
}

}  // namespace

int main(int argc, char** argv) {
    using namespace aoi::cli;

    CLI::App app{"Age of Information toolkit for half-duplex slotted ALOHA networks"};
    app.require_subcommand(1);
    Flags f;

    auto* gen = app.add_subcommand("gen", "emit a topology");
    add_topology(gen, f);
    add_output(gen, f);

    auto* solve = app.add_subcommand("solve", "optimize transmit probabilities");
    add_topology(solve, f);
    add_model(solve, f);
    add_solver(solve, f);
    add_output(solve, f);

    auto* simulate = app.add_subcommand("simulate", "Monte Carlo simulation at a given q");
    add_topology(simulate, f);
    add_model(simulate, f);
    simulate->add_option("--q", f.q, "transmit probability: scalar or comma-separated per node");
    simulate->add_option("--q-file", f.q_file, "JSON with q_star (solve output) or q");
    add_sim(simulate, f);
    add_output(simulate, f);

    auto* sweep = app.add_subcommand("sweep", "sweep N for line/star or evaluate the six-node presets");
    sweep->add_option("--sweep", f.sweep, "line | star | presets");
    sweep->add_option("--range", f.range, "N range A:B");
    add_model(sweep, f);
    sweep->add_option("--solver", f.solver, "pgd | fixed-point");
    add_output(sweep, f);

    auto* compare = app.add_subcommand("compare", "solve, then simulate at the optimum");
    add_topology(compare, f);
    add_model(compare, f);
    add_solver(compare, f);
    add_sim(compare, f);
    add_output(compare, f);

    try {
        app.parse(argc, argv);
    } catch (const CLI::ParseError& e) {
        // --help and friends exit 0; every other parse failure is a usage error.
        return app.exit(e) == 0 ? 0 : 2;
    }

    try {
        RunSpec spec;
        spec.topology = f.topology;
        spec.edges_file = f.edges;
        spec.p = f.p;
        spec.q = f.q;
        spec.q_file = f.q_file;
        spec.objective = parse_objective(f.objective);
        spec.solver = parse_solver(f.solver);
        spec.sim.slots = f.slots;
        spec.sim.warmup = f.warmup;
        spec.sim.replications = f.reps;
        spec.sim.seed = f.seed;
        spec.tol = f.tol;
        spec.resolution = f.resolution;
        spec.out = f.out;

        std::string default_format = "json";
        if (app.got_subcommand(gen)) {
            spec.command = Command::Gen;
            default_format = "edges";
        } else if (app.got_subcommand(solve)) {
            spec.command = Command::Solve;
        } else if (app.got_subcommand(simulate)) {
            spec.command = Command::Simulate;
        } else if (app.got_subcommand(sweep)) {
            spec.command = Command::Sweep;
            spec.sweep = parse_sweep(f.sweep);
            std::tie(spec.n_min, spec.n_max) = parse_range(f.range);
            default_format = "csv";
        } else {
            spec.command = Command::Compare;
        }
        spec.format = parse_format(f.format.empty() ? default_format : f.format);

        const auto report = execute(spec);
        std::cout << report.text;
        return report.exit_code;
    } catch (const UsageError& e) {
        std::cerr << "usage error: " << e.what() << '\n';
        return 2;
    } catch (const std::exception& e) {
        std::cerr << "error: " << e.what() << '\n';
        return 1;
    }
}
