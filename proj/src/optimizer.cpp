#include "aoi/optimizer.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <stdexcept>
#include <string>

namespace aoi {

namespace {

constexpr double kInf = std::numeric_limits<double>::infinity();
constexpr double kArmijo = 1e-4;
constexpr double kMinStep = 1e-20;
constexpr double kRelObjectiveTol = 1e-12;
constexpr double kRoundoffUlps = 8.0;

void check_problem(const Topology& t, const Eigen::VectorXd& p) {
    if (p.size() != t.size())
        throw std::invalid_argument("p must have length " + std::to_string(t.size()));
    for (int i = 0; i < t.size(); ++i) {
        if (!(p[i] >= 0.0 && p[i] <= 1.0)) throw std::invalid_argument("p entries must lie in [0, 1]");
        if (p[i] == 0.0 && t.degree(i) > 0)
            throw std::invalid_argument("node " + std::to_string(i) +
                                        " never generates updates; objective is infinite for every q");
    }
}

double eval(const Topology& t, const Eigen::VectorXd& p, const Eigen::VectorXd& q, ObjectiveKind kind) {
    return objective(t, NetworkParamsd{p, q}, kind);
}

Eigen::VectorXd clamp_active(const Topology& t, Eigen::VectorXd q, double lo) {
    for (int i = 0; i < t.size(); ++i) q[i] = t.degree(i) == 0 ? 0.0 : std::clamp(q[i], lo, 1.0);
    return q;
}

Eigen::VectorXd starting_point(const Topology& t, const Eigen::VectorXd& p, const SolveOptions& opts) {
    if (!opts.initial_q) return clamp_active(t, default_initial_point(t, p), opts.epsilon_lo);
    if (opts.initial_q->size() != t.size())
        throw std::invalid_argument("initial_q must have length " + std::to_string(t.size()));
    return clamp_active(t, *opts.initial_q, opts.epsilon_lo);
}

SolveResult edgeless_result(const Topology& t) {
    SolveResult r;
    r.q_star = Eigen::VectorXd::Zero(t.size());
    r.converged = true;
    return r;
}

void finish(SolveResult& r, const Topology& t, const Eigen::VectorXd& p, ObjectiveKind kind,
            const SolveOptions& opts) {
    r.objective_value = eval(t, p, r.q_star, kind);
    if (std::isfinite(r.objective_value)) {
        r.grad_residual = projected_gradient_norm(t, p, r.q_star, kind, opts.epsilon_lo);
        r.fp_residual = fixed_point_residual(t, p, r.q_star, kind, opts.epsilon_lo);
    } else {
        r.grad_residual = kInf;
        r.fp_residual = kInf;
        r.converged = false;
    }
}

}  // namespace

void SolveOptions::validate() const {
    if (max_iters < 1) throw std::invalid_argument("max_iters must be >= 1");
    if (!(tol_grad > 0.0) || !(tol_fp > 0.0)) throw std::invalid_argument("tolerances must be > 0");
    if (!(damping > 0.0 && damping <= 1.0)) throw std::invalid_argument("damping must lie in (0, 1]");
    if (!(epsilon_lo > 0.0 && epsilon_lo < 0.5)) throw std::invalid_argument("epsilon_lo must lie in (0, 0.5)");
}

Eigen::VectorXd default_initial_point(const Topology& t, const Eigen::VectorXd& p) {
    check_problem(t, p);
    Eigen::VectorXd q = Eigen::VectorXd::Zero(t.size());
    for (int i = 0; i < t.size(); ++i) {
        const int d = t.degree(i);
        if (d > 0) q[i] = std::min(1.0 / (p[i] * (d + 1)), 1.0 - 1e-6);
    }
    return q;
}

double projected_gradient_norm(const Topology& t, const Eigen::VectorXd& p, const Eigen::VectorXd& q,
                               ObjectiveKind kind, double epsilon_lo) {
    const Eigen::VectorXd g = gradient(t, NetworkParamsd{p, q}, kind);
    return (q - clamp_active(t, q - g, epsilon_lo)).lpNorm<Eigen::Infinity>();
}

double fixed_point_residual(const Topology& t, const Eigen::VectorXd& p, const Eigen::VectorXd& q,
                            ObjectiveKind kind, double epsilon_lo) {
    const auto agg = all_aggregates(t, NetworkParamsd{p, q}, kind);
    double worst = 0.0;
    for (int l = 0; l < t.size(); ++l) {
        if (t.degree(l) == 0 || q[l] <= epsilon_lo || q[l] >= 1.0) continue;
        const double target = agg.a[l] / (p[l] * (agg.a[l] + agg.b[l]));
        worst = std::max(worst, std::abs(q[l] - target));
    }
    return worst;
}

SolveResult solve_projected_gradient(const Topology& t, const Eigen::VectorXd& p, ObjectiveKind kind,
                                     const SolveOptions& opts) {
    opts.validate();
    check_problem(t, p);
    if (t.edges().empty()) return edgeless_result(t);

    Eigen::VectorXd q = starting_point(t, p, opts);
    double f = eval(t, p, q, kind);
    if (!std::isfinite(f)) throw std::invalid_argument("initial point has infinite objective");

    SolveResult r;
    r.objective_trace.push_back(f);
    double rel_change = kInf;
    for (r.iterations = 0; r.iterations < opts.max_iters; ++r.iterations) {
        const NetworkParamsd params{p, q};
        const Eigen::VectorXd g = gradient(t, params, kind);
        const double pg = (q - clamp_active(t, q - g, opts.epsilon_lo)).lpNorm<Eigen::Infinity>();
        if (pg <= opts.tol_grad && rel_change < kRelObjectiveTol) {
            r.converged = true;
            break;
        }

        // Diagonally scaled direction; the box projection is unchanged under a
        // diagonal metric. Isolated nodes have zero curvature and zero gradient.
        const Eigen::VectorXd h = hessian_diagonal(t, params, kind);
        const Eigen::VectorXd dir = (h.array() > 0.0).select(g.array() / h.array(), 0.0);

        // Near the optimum the predicted decrease falls below the rounding error
        // of f, so the sufficient-decrease test gets a few ulps of slack.
        const double slack = kRoundoffUlps * std::numeric_limits<double>::epsilon() * std::abs(f);
        double step = 1.0;
        bool accepted = false;
        Eigen::VectorXd trial;
        double f_trial = kInf;
        for (; step >= kMinStep; step *= 0.5) {
            trial = clamp_active(t, q - step * dir, opts.epsilon_lo);
            f_trial = eval(t, p, trial, kind);
            if (std::isfinite(f_trial) && f_trial <= f + kArmijo * g.dot(trial - q) + slack) {
                accepted = true;
                break;
            }
        }
        if (!accepted) {
            // No representable descent left; accept the point if it is stationary.
            r.converged = pg <= opts.tol_grad;
            break;
        }
        rel_change = std::abs(f - f_trial) / std::max(std::abs(f), std::numeric_limits<double>::min());
        q = std::move(trial);
        f = f_trial;
        r.objective_trace.push_back(f);
    }

    r.q_star = std::move(q);
    finish(r, t, p, kind, opts);
    return r;
}

SolveResult solve_fixed_point(const Topology& t, const Eigen::VectorXd& p, ObjectiveKind kind,
                              const SolveOptions& opts) {
    opts.validate();
    check_problem(t, p);
    if (t.edges().empty()) return edgeless_result(t);

    Eigen::VectorXd q = starting_point(t, p, opts);
    SolveResult r;
    for (r.iterations = 0; r.iterations < opts.max_iters; ++r.iterations) {
        const NetworkParamsd params{p, q};
        const double f = objective(t, params, kind);
        if (!std::isfinite(f)) break;
        r.objective_trace.push_back(f);

        const auto agg = all_aggregates(t, params, kind);
        const Eigen::VectorXd g = gradient(t, params, kind);
        Eigen::VectorXd target = q;
        double residual = 0.0;
        bool clamped_ok = true;
        for (int l = 0; l < t.size(); ++l) {
            if (t.degree(l) == 0) continue;
            const double raw = agg.a[l] / (p[l] * (agg.a[l] + agg.b[l]));
            target[l] = std::clamp(raw, opts.epsilon_lo, 1.0);
            residual = std::max(residual, std::abs(q[l] - target[l]));
            // KKT sign conditions at the box faces.
            if (raw >= 1.0 && g[l] > 0.0) clamped_ok = false;
            if (raw <= opts.epsilon_lo && g[l] < 0.0) clamped_ok = false;
        }
        if (residual <= opts.tol_fp && clamped_ok) {
            r.converged = true;
            break;
        }
        q = (1.0 - opts.damping) * q + opts.damping * target;
    }

    r.q_star = std::move(q);
    finish(r, t, p, kind, opts);
    return r;
}

double d_regular_closed_form(int d, double p) {
    if (d < 1) throw std::invalid_argument("degree must be >= 1");
    if (!(p > 0.0 && p <= 1.0))
        throw std::invalid_argument("p must lie in (0, 1]; with p = 0 no update is ever generated");
    return std::min(1.0 / (p * (d + 1)), 1.0);
}

double star_leaf_residual(int n, double q2) {
    return 1.0 - (n - 1) * q2 - std::pow(q2, 1.5) * std::pow(1.0 - q2, (n - 3) / 2.0);
}

double star_hub_residual(int n, double q1, double q2) {
    return q1 * q1 - q2 * (1.0 - q1) * (1.0 - q1) * std::pow(1.0 - q2, n - 3);
}

double star_polynomial_check(int n, double q2) {
    if (n <= 3) throw std::invalid_argument("polynomial form needs n > 3");
    const int m = n - 3;
    double sum = 0.0;
    double binom = 1.0;
    for (int k = 0; k <= m; ++k) {
        sum += binom * ((k % 2 == 0) ? 1.0 : -1.0) * std::pow(q2, k + 3);
        binom = binom * (m - k) / (k + 1);
    }
    const double nm1 = n - 1;
    return sum + 2.0 * nm1 * q2 - nm1 * nm1 * q2 * q2 - 1.0;
}

StarSolution star_solve(int n) {
    if (n < 2) throw std::invalid_argument("star needs n >= 2");
    if (n == 2) return {0.5, 0.5};
    if (n == 3) {
        const double q = (3.0 - std::sqrt(5.0)) / 2.0;
        return {q, q};
    }
    // The left side 1 - (n-1) q2 is positive only below 1/(n-1) while the right
    // side is nonnegative, so the root is bracketed by (0, 1/(n-1)).
    double lo = 0.0;
    double hi = 1.0 / (n - 1);
    for (;;) {
        const double mid = 0.5 * (lo + hi);
        if (mid <= lo || mid >= hi) break;
        (star_leaf_residual(n, mid) > 0.0 ? lo : hi) = mid;
    }
    const double q2 = std::abs(star_leaf_residual(n, lo)) <= std::abs(star_leaf_residual(n, hi)) ? lo : hi;
    const double ratio = std::sqrt(q2) * std::pow(1.0 - q2, (n - 3) / 2.0);
    return {ratio / (1.0 + ratio), q2};
}

namespace {

// Writes 1/mu_{i,j} = C_i * r_j with
//   C_i = prod_{k in {i} u B_i} 1/(1 - p_k q_k),   r_j = (1 - p_j q_j)/(p_j q_j),
// so f = sum_i w_i C_i R_i with R_i = sum_{j in B_i} r_j. Nodes are assigned in
// index order; the innermost node's contribution is affine in its own b and
// b*r terms, which keeps the exhaustive sweep to three flops per cell.
class GridSearch {
public:
    GridSearch(const Topology& t, const Eigen::VectorXd& p, ObjectiveKind kind, int resolution)
        : t_(t), n_(t.size()) {
        weight_.resize(n_);
        for (int i = 0; i < n_; ++i)
            weight_[i] = t.degree(i) == 0 ? 0.0 : detail::receiver_weight<double>(t, i, kind);
        for (int v = 0; v < n_; ++v) {
            if (t.degree(v) == 0) continue;
            order_.push_back(v);
            Axis ax;
            for (int k = 1; k < resolution; ++k) ax.values.push_back(double(k) / resolution);
            if (p[v] < 1.0) ax.values.push_back(1.0);
            for (double q : ax.values) {
                const double s = 1.0 - p[v] * q;
                ax.b.push_back(1.0 / s);
                ax.r.push_back(s / (p[v] * q));
                ax.br.push_back(ax.r.back() / s);
            }
            axes_.push_back(std::move(ax));
        }
    }

    double cells() const {
        double c = 1.0;
        for (const auto& ax : axes_) c *= static_cast<double>(ax.values.size());
        return c;
    }

    Eigen::VectorXd run() {
        choice_.assign(order_.size(), 0);
        best_choice_ = choice_;
        std::vector<double> c(n_, 1.0);
        std::vector<double> r(n_, 0.0);
        recurse(0, c, r);
        Eigen::VectorXd q = Eigen::VectorXd::Zero(n_);
        for (std::size_t d = 0; d < order_.size(); ++d) q[order_[d]] = axes_[d].values[best_choice_[d]];
        return q;
    }

private:
    struct Axis {
        std::vector<double> values, b, r, br;
    };

    void recurse(std::size_t depth, const std::vector<double>& c, const std::vector<double>& r) {
        const int v = order_[depth];
        const Axis& ax = axes_[depth];
        const auto nb = t_.neighbors(v);
        if (depth + 1 == order_.size()) {
            double k0 = 0.0, k1 = 0.0, k2 = 0.0;
            for (int i = 0; i < n_; ++i) {
                if (weight_[i] == 0.0) continue;
                const bool closed = i == v || t_.has_edge(i, v);
                const double term = weight_[i] * c[i] * r[i];
                (closed ? k1 : k0) += term;
                if (i != v && closed) k2 += weight_[i] * c[i];
            }
            const std::size_t m = ax.values.size();
            for (std::size_t g = 0; g < m; ++g) {
                const double f = k0 + k1 * ax.b[g] + k2 * ax.br[g];
                if (f < best_) {
                    best_ = f;
                    choice_[depth] = g;
                    best_choice_ = choice_;
                }
            }
            return;
        }
        std::vector<double> c2(c), r2(r);
        for (std::size_t g = 0; g < ax.values.size(); ++g) {
            choice_[depth] = g;
            c2[v] = c[v] * ax.b[g];
            for (int i : nb) {
                c2[i] = c[i] * ax.b[g];
                r2[i] = r[i] + ax.r[g];
            }
            recurse(depth + 1, c2, r2);
        }
    }

    const Topology& t_;
    int n_;
    std::vector<double> weight_;
    std::vector<int> order_;
    std::vector<Axis> axes_;
    std::vector<std::size_t> choice_, best_choice_;
    double best_ = kInf;
};

}  // namespace

GridResult brute_force_grid(const Topology& t, const Eigen::VectorXd& p, ObjectiveKind kind,
                            int resolution, double cell_budget) {
    check_problem(t, p);
    if (resolution < 3) throw std::invalid_argument("grid resolution must be >= 3");
    GridResult out;
    if (t.edges().empty()) {
        out.q_best = Eigen::VectorXd::Zero(t.size());
        return out;
    }
    GridSearch search(t, p, kind, resolution);
    out.cells = search.cells();
    if (out.cells > cell_budget)
        throw std::length_error("grid of " + std::to_string(out.cells) + " cells exceeds budget of " +
                                std::to_string(cell_budget));
    out.q_best = search.run();
    out.f_best = eval(t, p, out.q_best, kind);
    return out;
}

}  // namespace aoi
