#pragma once

#include <stdexcept>
#include <string>
#include <string_view>

#include <Eigen/Core>

#include "aoi/analysis.hpp"
#include "aoi/graph.hpp"
#include "aoi/simulator.hpp"

namespace aoi::cli {

/// Bad flags or incompatible flag combinations; the tool exits with code 2.
class UsageError : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

enum class Command { Gen, Solve, Simulate, Sweep, Compare };
enum class Solver { Pgd, FixedPoint, DRegular, Star, GridOracle };
enum class Format { Json, Csv, EdgeList };
enum class SweepKind { Line, Star, Presets };

struct RunSpec {
    Command command = Command::Solve;
    std::string topology;    // preset, e.g. "line:7"
    std::string edges_file;  // or an edge-list file
    std::string p = "1";     // scalar or comma-separated per-node list
    std::string q;           // inline q for simulate
    std::string q_file;      // JSON holding "q_star" (solve output) or "q"
    ObjectiveKind objective = ObjectiveKind::Total;
    Solver solver = Solver::Pgd;
    sim::SimConfig sim;
    double tol = 0.02;  // relative tolerance for analytic-vs-empirical checks
    int resolution = 200;
    SweepKind sweep = SweepKind::Line;
    int n_min = 3;
    int n_max = 20;
    Format format = Format::Json;
    std::string out;
};

struct Report {
    std::string text;
    int exit_code = 0;
};

/// `line:N`, `ring:N`, `star:N`, `grid:RxC`, `complete:N`, `tree6`, `astar6`, `acircle6`.
Topology parse_topology_spec(std::string_view spec);
Topology load_topology(const RunSpec& spec);
/// A single value broadcast to all n nodes, or exactly n comma-separated values.
Eigen::VectorXd parse_probabilities(std::string_view text, int n);
/// `A:B` with A <= B.
std::pair<int, int> parse_range(std::string_view text);

Solver parse_solver(std::string_view name);
ObjectiveKind parse_objective(std::string_view name);
SweepKind parse_sweep(std::string_view name);
Format parse_format(std::string_view name);

/// Shortest round-trip decimal; "inf"/"nan" for non-finite values.
std::string format_number(double x);

Report cmd_gen(const RunSpec& spec);
Report cmd_solve(const RunSpec& spec);
Report cmd_simulate(const RunSpec& spec);
Report cmd_sweep(const RunSpec& spec);
Report cmd_compare(const RunSpec& spec);

/// Runs the command, writes the report to `--out` when set, returns the report.
Report execute(const RunSpec& spec);

}  // namespace aoi::cli
