#pragma once

#include <optional>
#include <vector>

#include <Eigen/Core>

#include "aoi/analysis.hpp"
#include "aoi/graph.hpp"

namespace aoi {

struct SolveOptions {
    int max_iters = 10'000;
    double tol_grad = 1e-8;    // infinity norm of the projected gradient
    double tol_fp = 1e-10;     // fixed-point residual
    double damping = 0.5;      // weight of the new fixed-point target
    double epsilon_lo = 1e-9;  // lower clamp on q
    std::optional<Eigen::VectorXd> initial_q;

    void validate() const;
};

struct SolveResult {
    Eigen::VectorXd q_star;
    double objective_value = 0.0;
    double grad_residual = 0.0;
    double fp_residual = 0.0;
    int iterations = 0;
    bool converged = false;
    std::vector<double> objective_trace;
};

/// Nodewise d-regular rule min(1/(p_i (deg_i + 1)), 1 - 1e-6); 0 for isolated nodes.
Eigen::VectorXd default_initial_point(const Topology& t, const Eigen::VectorXd& p);

/// ||q - P(q - grad f(q))||_inf with P the clamp onto [epsilon_lo, 1].
double projected_gradient_norm(const Topology& t, const Eigen::VectorXd& p, const Eigen::VectorXd& q,
                               ObjectiveKind kind, double epsilon_lo);

/// max |q_l - A_l / (p_l (A_l + B_l))| over nodes with an incident edge and
/// epsilon_lo < q_l < 1.
double fixed_point_residual(const Topology& t, const Eigen::VectorXd& p, const Eigen::VectorXd& q,
                            ObjectiveKind kind, double epsilon_lo);

/// Projected gradient descent over [epsilon_lo, 1]^n, with the gradient scaled
/// by the Hessian diagonal and Armijo backtracking from a unit step. Steps that
/// make the objective infinite are rejected by the line search.
SolveResult solve_projected_gradient(const Topology& t, const Eigen::VectorXd& p, ObjectiveKind kind,
                                     const SolveOptions& opts = {});

/// Damped iteration of q_l <- A_l / (p_l (A_l + B_l)), clamped to [epsilon_lo, 1].
SolveResult solve_fixed_point(const Topology& t, const Eigen::VectorXd& p, ObjectiveKind kind,
                              const SolveOptions& opts = {});

/// Uniform optimum on a d-regular graph with homogeneous p: min(1/(p(d+1)), 1).
double d_regular_closed_form(int d, double p);

struct StarSolution {
    double hub;   // q1
    double leaf;  // q2
};

/// Optimal (hub, leaf) transmit probabilities on a star with p = 1.
StarSolution star_solve(int n);

/// 1 - (n-1) q2 - q2^{3/2} (1-q2)^{(n-3)/2}; zero at the optimal leaf probability.
double star_leaf_residual(int n, double q2);
/// q1^2 - q2 (1-q1)^2 (1-q2)^{n-3}; zero at the optimal (hub, leaf) pair.
double star_hub_residual(int n, double q1, double q2);
/// Squared, binomially expanded form of the leaf condition.
double star_polynomial_check(int n, double q2);

struct GridResult {
    Eigen::VectorXd q_best;
    double f_best = 0.0;
    double cells = 0.0;
};

inline constexpr double kDefaultGridBudget = 2e9;

/// Exhaustive search over {1/r, ..., (r-1)/r} per node (plus q = 1 where
/// p_i < 1). Throws std::length_error when the grid exceeds `cell_budget`.
GridResult brute_force_grid(const Topology& t, const Eigen::VectorXd& p, ObjectiveKind kind,
                            int resolution, double cell_budget = kDefaultGridBudget);

}  // namespace aoi
