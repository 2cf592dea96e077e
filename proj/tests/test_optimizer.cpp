#include <doctest.h>

#include <cmath>
#include <limits>
#include <random>

#include "aoi/optimizer.hpp"
#include "oracles.hpp"

using namespace aoi;
using doctest::Approx;

namespace {

Eigen::VectorXd ones(int n) { return Eigen::VectorXd::Ones(n); }

double max_diff(const Eigen::VectorXd& a, const Eigen::VectorXd& b) { return (a - b).lpNorm<Eigen::Infinity>(); }

// Line of 7 with p = 1, computed independently with SciPy (L-BFGS-B and
// Nelder-Mead agree to ~1e-8).
const double kLine7[] = {0.36031582, 0.35062774, 0.34111435, 0.34037170, 0.34111435, 0.35062774, 0.36031582};
const double kLine7Objective = 76.352478583058;

}  // namespace

TEST_CASE("projected gradient examples") {
    auto two = solve_projected_gradient(make_line(2), ones(2), ObjectiveKind::Total);
    CHECK(two.converged);
    CHECK(max_diff(two.q_star, Eigen::Vector2d(0.5, 0.5)) < 1e-7);
    CHECK(two.objective_value == Approx(8.0).epsilon(1e-12));

    auto ring = solve_projected_gradient(make_ring(6), ones(6), ObjectiveKind::Total);
    CHECK(ring.converged);
    CHECK(max_diff(ring.q_star, Eigen::VectorXd::Constant(6, 1.0 / 3.0)) < 1e-7);

    auto line = solve_projected_gradient(make_line(7), ones(7), ObjectiveKind::Total);
    CHECK(line.converged);
    const double table[] = {0.36, 0.35, 0.34, 0.34, 0.34, 0.35, 0.36};
    for (int i = 0; i < 7; ++i) {
        CHECK(std::abs(line.q_star[i] - table[i]) <= 0.01);
        CHECK(std::abs(line.q_star[i] - kLine7[i]) <= 1e-6);
    }
    CHECK(line.objective_value == Approx(kLine7Objective).epsilon(1e-10));
    CHECK(line.grad_residual <= 1e-8);
    CHECK(line.objective_trace.size() == static_cast<std::size_t>(line.iterations) + 1);
    for (std::size_t k = 1; k < line.objective_trace.size(); ++k)
        CHECK(line.objective_trace[k] <= line.objective_trace[k - 1] * (1.0 + 1e-14));
}

TEST_CASE("fixed point examples") {
    auto two = solve_fixed_point(make_line(2), ones(2), ObjectiveKind::Total);
    CHECK(two.converged);
    CHECK(max_diff(two.q_star, Eigen::Vector2d(0.5, 0.5)) < 1e-9);

    auto ring = solve_fixed_point(make_ring(6), ones(6), ObjectiveKind::Total);
    CHECK(ring.converged);
    CHECK(max_diff(ring.q_star, Eigen::VectorXd::Constant(6, 1.0 / 3.0)) < 1e-9);

    auto k4 = solve_fixed_point(make_complete(4), ones(4), ObjectiveKind::Total);
    CHECK(k4.converged);
    CHECK(max_diff(k4.q_star, Eigen::VectorXd::Constant(4, 0.25)) < 1e-9);

    auto line = solve_fixed_point(make_line(7), ones(7), ObjectiveKind::Total);
    CHECK(line.converged);
    CHECK(line.fp_residual <= 1e-10);
    for (int i = 0; i < 7; ++i) CHECK(std::abs(line.q_star[i] - kLine7[i]) <= 1e-6);
}

TEST_CASE("fixed point clamps at q = 1 with a consistent KKT sign") {
    // d = 3, p = 0.2: 1/(p(d+1)) = 1.25, so the optimum sits on the upper face.
    const auto k4 = make_complete(4);
    const Eigen::VectorXd p = Eigen::VectorXd::Constant(4, 0.2);
    auto fp = solve_fixed_point(k4, p, ObjectiveKind::Total);
    CHECK(fp.converged);
    CHECK(max_diff(fp.q_star, ones(4)) < 1e-9);
    const auto g = gradient(k4, NetworkParamsd{p, fp.q_star}, ObjectiveKind::Total);
    CHECK((g.array() <= 0.0).all());

    auto pg = solve_projected_gradient(k4, p, ObjectiveKind::Total);
    CHECK(pg.converged);
    CHECK(max_diff(pg.q_star, ones(4)) < 1e-9);
}

TEST_CASE("d_regular_closed_form") {
    CHECK(d_regular_closed_form(2, 1.0) == Approx(1.0 / 3.0));
    CHECK(d_regular_closed_form(1, 1.0) == 0.5);
    CHECK(d_regular_closed_form(3, 0.2) == 1.0);
    CHECK(d_regular_closed_form(2, 0.5) == Approx(2.0 / 3.0));
    CHECK_THROWS_AS(d_regular_closed_form(2, 0.0), std::invalid_argument);
    CHECK_THROWS_AS(d_regular_closed_form(0, 1.0), std::invalid_argument);
}

TEST_CASE("star_solve") {
    auto s2 = star_solve(2);
    CHECK(s2.hub == 0.5);
    CHECK(s2.leaf == 0.5);

    const double golden = (3.0 - std::sqrt(5.0)) / 2.0;
    auto s3 = star_solve(3);
    CHECK(s3.hub == Approx(golden).epsilon(1e-15));
    CHECK(s3.leaf == Approx(golden).epsilon(1e-15));
    CHECK(golden == Approx(0.381966).epsilon(1e-6));
    // The general equations also hold at n = 3.
    CHECK(std::abs(star_leaf_residual(3, golden)) < 1e-12);
    CHECK(std::abs(star_hub_residual(3, golden, golden)) < 1e-12);

    auto s6 = star_solve(6);
    CHECK(std::abs(star_leaf_residual(6, s6.leaf)) < 1e-10);
    CHECK(std::abs(star_hub_residual(6, s6.hub, s6.leaf)) < 1e-10);
    CHECK(s6.leaf > 0.0);
    CHECK(s6.leaf < 1.0 / 5.0);

    auto pg = solve_projected_gradient(make_star(6), ones(6), ObjectiveKind::Total);
    CHECK(std::abs(pg.q_star[0] - s6.hub) < 1e-4);
    for (int i = 1; i < 6; ++i) CHECK(std::abs(pg.q_star[i] - s6.leaf) < 1e-4);

    CHECK_THROWS_AS(star_solve(1), std::invalid_argument);
}

TEST_CASE("star optimum is monotone in n") {
    auto prev = star_solve(3);
    for (int n = 4; n <= 30; ++n) {
        auto cur = star_solve(n);
        CHECK(cur.hub < prev.hub);
        CHECK(cur.leaf < prev.leaf);
        CHECK(cur.leaf < cur.hub);
        prev = cur;
    }
}

TEST_CASE("star_polynomial_check") {
    CHECK(std::abs(star_polynomial_check(4, star_solve(4).leaf)) < 1e-9);
    CHECK(std::abs(star_polynomial_check(6, star_solve(6).leaf)) < 1e-9);
    CHECK(star_polynomial_check(5, 0.0) == -1.0);
    for (int n = 4; n <= 30; ++n) CHECK(std::abs(star_polynomial_check(n, star_solve(n).leaf)) < 1e-9);
    CHECK_THROWS_AS(star_polynomial_check(3, 0.2), std::invalid_argument);
}

TEST_CASE("brute_force_grid examples") {
    auto two = brute_force_grid(make_line(2), ones(2), ObjectiveKind::Total, 1000);
    CHECK(max_diff(two.q_best, Eigen::Vector2d(0.5, 0.5)) < 1e-12);
    CHECK(two.f_best == Approx(8.0));

    auto line3 = brute_force_grid(make_line(3), ones(3), ObjectiveKind::Total, 500);
    auto pg3 = solve_projected_gradient(make_line(3), ones(3), ObjectiveKind::Total);
    CHECK(std::abs(line3.f_best - pg3.objective_value) < 1e-3);
    CHECK(pg3.objective_value <= line3.f_best);

    auto star3 = brute_force_grid(make_star(3), ones(3), ObjectiveKind::Total, 500);
    for (int i = 0; i < 3; ++i) CHECK(std::abs(star3.q_best[i] - 0.381966) <= 0.002);
}

TEST_CASE("brute_force_grid matches naive enumeration") {
    // Naive sweep straight through analysis::objective at a coarse resolution.
    std::mt19937_64 rng(41);
    for (auto kind : {ObjectiveKind::Total, ObjectiveKind::NeighborNormalized}) {
        for (int trial = 0; trial < 6; ++trial) {
            const int n = 2 + trial % 3;
            const auto t = testing::random_connected(rng, n, 0.5);
            Eigen::VectorXd p = testing::random_vector(rng, n, 0.4, 1.0);
            if (trial % 2 == 0) p.setOnes();
            const int res = 12;
            std::vector<std::vector<double>> axes(n);
            for (int i = 0; i < n; ++i) {
                for (int k = 1; k < res; ++k) axes[i].push_back(double(k) / res);
                if (p[i] < 1.0) axes[i].push_back(1.0);
            }
            double best = std::numeric_limits<double>::infinity();
            std::vector<std::size_t> idx(n, 0);
            for (;;) {
                Eigen::VectorXd q(n);
                for (int i = 0; i < n; ++i) q[i] = axes[i][idx[i]];
                best = std::min(best, objective(t, NetworkParamsd{p, q}, kind));
                int d = n - 1;
                while (d >= 0 && ++idx[d] == axes[d].size()) idx[d--] = 0;
                if (d < 0) break;
            }
            const auto grid = brute_force_grid(t, p, kind, res);
            CHECK(grid.f_best == Approx(best).epsilon(1e-12));
        }
    }
}

TEST_CASE("small graphs: solver never loses to the grid") {
    // Isomorphism class counts of graphs on 1..4 nodes.
    const int all_counts[] = {1, 2, 4, 11};
    const int connected_counts[] = {1, 1, 2, 6};
    for (int n = 1; n <= 4; ++n) {
        CHECK(testing::graphs_up_to_iso(n, false).size() == all_counts[n - 1]);
        CHECK(testing::graphs_up_to_iso(n, true).size() == connected_counts[n - 1]);
    }
    const int res = 40;
    for (int n = 2; n <= 4; ++n)
        for (const auto& t : testing::graphs_up_to_iso(n, false)) {
            const auto grid = brute_force_grid(t, ones(n), ObjectiveKind::Total, res);
            const auto pg = solve_projected_gradient(t, ones(n), ObjectiveKind::Total);
            CHECK(pg.converged);
            CHECK(pg.objective_value <= grid.f_best);
            CHECK(max_diff(pg.q_star, grid.q_best) <= 1.0 / res);
        }
}

TEST_CASE("brute_force_grid refuses oversized grids") {
    CHECK_THROWS_AS(brute_force_grid(make_line(8), ones(8), ObjectiveKind::Total, 200), std::length_error);
    CHECK_THROWS_AS(brute_force_grid(make_line(3), ones(3), ObjectiveKind::Total, 50, 1000.0), std::length_error);
    CHECK_THROWS_AS(brute_force_grid(make_line(3), ones(3), ObjectiveKind::Total, 2), std::invalid_argument);
}

TEST_CASE("degenerate topologies") {
    const Topology empty(3, {});
    for (auto* solve : {&solve_projected_gradient, &solve_fixed_point}) {
        auto r = (*solve)(empty, ones(3), ObjectiveKind::Total, {});
        CHECK(r.converged);
        CHECK(r.q_star.isZero());
        CHECK(r.objective_value == 0.0);
    }

    const Topology pair_plus_isolated(3, {{0, 1}});
    for (auto* solve : {&solve_projected_gradient, &solve_fixed_point}) {
        auto r = (*solve)(pair_plus_isolated, ones(3), ObjectiveKind::Total, {});
        CHECK(r.converged);
        CHECK(r.q_star[2] == 0.0);
        CHECK(r.q_star[0] == Approx(0.5));
    }
    CHECK(brute_force_grid(pair_plus_isolated, ones(3), ObjectiveKind::Total, 100).q_best[2] == 0.0);

    Eigen::VectorXd p = ones(3);
    p[1] = 0.0;
    CHECK_THROWS_AS(solve_projected_gradient(make_line(3), p, ObjectiveKind::Total), std::invalid_argument);
    CHECK_THROWS_AS(solve_fixed_point(make_line(3), ones(2), ObjectiveKind::Total), std::invalid_argument);
}

TEST_CASE("options validation and iteration cap") {
    SolveOptions bad;
    bad.damping = 0.0;
    CHECK_THROWS_AS(bad.validate(), std::invalid_argument);
    bad = {};
    bad.epsilon_lo = 0.5;
    CHECK_THROWS_AS(bad.validate(), std::invalid_argument);
    bad = {};
    bad.max_iters = 0;
    CHECK_THROWS_AS(bad.validate(), std::invalid_argument);

    SolveOptions one;
    one.max_iters = 1;
    auto r = solve_projected_gradient(make_line(7), ones(7), ObjectiveKind::Total, one);
    CHECK_FALSE(r.converged);
    CHECK(std::isfinite(r.objective_value));

    SolveOptions start;
    start.initial_q = Eigen::VectorXd::Constant(7, 0.05);
    auto from_far = solve_projected_gradient(make_line(7), ones(7), ObjectiveKind::Total, start);
    CHECK(from_far.converged);
    for (int i = 0; i < 7; ++i) CHECK(std::abs(from_far.q_star[i] - kLine7[i]) <= 1e-6);
}

TEST_CASE("fixed point and projected gradient agree") {
    std::vector<Topology> tops{make_line(2),  make_line(5),   make_line(7),      make_ring(5),
                               make_star(4),  make_star(8),   make_grid(2, 3),   make_grid(3, 3),
                               make_tree6(),  make_asym_star6(), make_asym_circle6(), make_complete(5)};
    std::mt19937_64 rng(43);
    for (int k = 0; k < 10; ++k) tops.push_back(testing::random_connected(rng, 3 + k % 6, 0.3));
    for (auto kind : {ObjectiveKind::Total, ObjectiveKind::NeighborNormalized}) {
        for (const auto& t : tops) {
            for (double pv : {1.0, 0.6}) {
                const Eigen::VectorXd p = Eigen::VectorXd::Constant(t.size(), pv);
                auto a = solve_projected_gradient(t, p, kind);
                auto b = solve_fixed_point(t, p, kind);
                CHECK(a.converged);
                CHECK(b.converged);
                CHECK(max_diff(a.q_star, b.q_star) < 1e-5);
                CHECK(b.fp_residual < SolveOptions{}.tol_fp);
                CHECK(a.fp_residual < 1e-6);
            }
        }
    }
}

TEST_CASE("general solvers reproduce the d-regular closed form") {
    for (const auto& t : {make_ring(3), make_ring(6), make_ring(10), make_complete(3), make_complete(4),
                          make_complete(5), make_ring(7)}) {
        const int d = t.degree(0);
        for (double pv : {1.0, 0.5, 0.25}) {
            const Eigen::VectorXd p = Eigen::VectorXd::Constant(t.size(), pv);
            const double expect = d_regular_closed_form(d, pv);
            for (auto kind : {ObjectiveKind::Total, ObjectiveKind::NeighborNormalized}) {
                CHECK(max_diff(solve_projected_gradient(t, p, kind).q_star, Eigen::VectorXd::Constant(t.size(), expect)) < 1e-6);
                CHECK(max_diff(solve_fixed_point(t, p, kind).q_star, Eigen::VectorXd::Constant(t.size(), expect)) < 1e-6);
            }
        }
    }
}

TEST_CASE("halving p doubles the d-regular optimum until it clamps") {
    const auto ring = make_ring(8);
    double prev_pq = -1.0;
    for (double pv : {1.0, 0.5, 0.25, 0.125}) {
        const auto r = solve_projected_gradient(ring, Eigen::VectorXd::Constant(8, pv), ObjectiveKind::Total);
        const double q = r.q_star[0];
        if (pv * 3 >= 1.0) {
            if (prev_pq > 0) CHECK(pv * q == Approx(prev_pq).epsilon(1e-6));
            prev_pq = pv * q;
        } else {
            CHECK(q == Approx(1.0).epsilon(1e-9));
        }
    }
}
