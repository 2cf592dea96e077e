#pragma once

#include <cmath>
#include <limits>
#include <stdexcept>
#include <string>
#include <vector>

#include <Eigen/Core>

#include "aoi/graph.hpp"

namespace aoi {

template <typename Scalar>
using VectorX = Eigen::Matrix<Scalar, Eigen::Dynamic, 1>;

enum class ObjectiveKind {
    Total,               // sum of per-link average ages
    NeighborNormalized,  // per-receiver mean over its neighbors, then mean over nodes
};

/// Raised when a quantity needs 1/mu on a link whose success probability is 0.
class InfeasiblePointError : public std::domain_error {
public:
    using std::domain_error::domain_error;
};

/// Per-node update generation probabilities `p` and transmit probabilities `q`.
template <typename Scalar>
struct NetworkParams {
    VectorX<Scalar> p;
    VectorX<Scalar> q;

    static NetworkParams homogeneous(int n, Scalar p, Scalar q) {
        return {VectorX<Scalar>::Constant(n, p), VectorX<Scalar>::Constant(n, q)};
    }
};

using NetworkParamsd = NetworkParams<double>;

template <typename Scalar>
void validate(const Topology& t, const NetworkParams<Scalar>& params) {
    if (params.p.size() != t.size() || params.q.size() != t.size())
        throw std::invalid_argument("parameter vectors must have length " + std::to_string(t.size()));
    auto in_unit = [](const VectorX<Scalar>& v) {
        return ((v.array() >= Scalar(0)) && (v.array() <= Scalar(1))).all();
    };
    if (!in_unit(params.p)) throw std::invalid_argument("p entries must lie in [0, 1]");
    if (!in_unit(params.q)) throw std::invalid_argument("q entries must lie in [0, 1]");
}

namespace detail {

// Above this degree the silence product is accumulated in log space.
inline constexpr int kLogSpaceDegree = 64;

/// Probability that `receiver` and all of its neighbors except `sender` stay
/// silent. `sender` may be -1 to include every neighbor.
template <typename Scalar>
Scalar silence_product(const Topology& t, const NetworkParams<Scalar>& params, int receiver,
                       int sender) {
    using std::exp;
    using std::log1p;
    const auto& p = params.p;
    const auto& q = params.q;
    auto nb = t.neighbors(receiver);
    if (static_cast<int>(nb.size()) > kLogSpaceDegree) {
        Scalar log_sum = log1p(-p[receiver] * q[receiver]);
        for (int k : nb)
            if (k != sender) log_sum += log1p(-p[k] * q[k]);
        return exp(log_sum);
    }
    Scalar prod = Scalar(1) - p[receiver] * q[receiver];
    for (int k : nb)
        if (k != sender) prod *= Scalar(1) - p[k] * q[k];
    return prod;
}

template <typename Scalar>
Scalar receiver_weight(const Topology& t, int receiver, ObjectiveKind kind) {
    if (kind == ObjectiveKind::Total) return Scalar(1);
    return Scalar(1) / (Scalar(t.size()) * Scalar(t.degree(receiver)));
}

}  // namespace detail

/// Per-slot success probability of `link`:
///   p_j q_j (1 - p_i q_i) prod_{k in B_i, k != j} (1 - p_k q_k).
template <typename Scalar>
Scalar link_success_prob(const Topology& t, const NetworkParams<Scalar>& params, DirectedLink link) {
    if (!t.has_edge(link.receiver, link.sender))
        throw TopologyError("no link from " + std::to_string(link.sender) + " to " +
                            std::to_string(link.receiver));
    const int j = link.sender;
    return params.p[j] * params.q[j] * detail::silence_product(t, params, link.receiver, j);
}

/// Average age 1/mu of a link with geometric inter-delivery times; +inf at mu = 0.
template <typename Scalar>
Scalar avg_aoi_link(Scalar mu) {
    if (!(mu >= Scalar(0) && mu <= Scalar(1)))
        throw std::domain_error("success probability must lie in [0, 1]");
    if (mu == Scalar(0)) return std::numeric_limits<Scalar>::infinity();
    return Scalar(1) / mu;
}

template <typename Scalar>
struct LinkMetric {
    DirectedLink link;
    Scalar mu;
    Scalar aoi;
};

template <typename Scalar>
using LinkMetrics = std::vector<LinkMetric<Scalar>>;

/// One entry per directed link, in Topology::links() order.
template <typename Scalar>
LinkMetrics<Scalar> link_metrics(const Topology& t, const NetworkParams<Scalar>& params) {
    validate(t, params);
    LinkMetrics<Scalar> out;
    out.reserve(t.links().size());
    for (const auto& link : t.links()) {
        Scalar mu = link_success_prob(t, params, link);
        out.push_back({link, mu, avg_aoi_link(mu)});
    }
    return out;
}

/// Total (or neighbor-normalized) average AoI; +inf when any link has mu = 0.
template <typename Scalar>
Scalar objective(const Topology& t, const NetworkParams<Scalar>& params, ObjectiveKind kind) {
    validate(t, params);
    Scalar total(0);
    for (int i = 0; i < t.size(); ++i) {
        if (t.degree(i) == 0) continue;
        Scalar per_receiver(0);
        for (int j : t.neighbors(i)) {
            Scalar mu = link_success_prob(t, params, DirectedLink{i, j});
            if (mu == Scalar(0)) return std::numeric_limits<Scalar>::infinity();
            per_receiver += Scalar(1) / mu;
        }
        total += detail::receiver_weight<Scalar>(t, i, kind) * per_receiver;
    }
    return total;
}

/// Stationarity aggregates for every node:
///   A_l = sum of ages on links where l is the sender,
///   B_l = sum of ages on links where l is the receiver or another neighbor of
///         the receiver.
/// Under NeighborNormalized every age is weighted by 1/(N |B_receiver|).
template <typename Scalar>
struct Aggregates {
    VectorX<Scalar> a;
    VectorX<Scalar> b;
};

template <typename Scalar>
Aggregates<Scalar> all_aggregates(const Topology& t, const NetworkParams<Scalar>& params,
                                  ObjectiveKind kind = ObjectiveKind::Total) {
    validate(t, params);
    Aggregates<Scalar> agg{VectorX<Scalar>::Zero(t.size()), VectorX<Scalar>::Zero(t.size())};
    for (const auto& [i, j] : t.links()) {
        Scalar mu = link_success_prob(t, params, DirectedLink{i, j});
        if (mu == Scalar(0))
            throw InfeasiblePointError("link " + std::to_string(j) + "->" + std::to_string(i) +
                                       " has zero success probability");
        Scalar g = detail::receiver_weight<Scalar>(t, i, kind) / mu;
        agg.a[j] += g;
        agg.b[i] += g;
        for (int k : t.neighbors(i))
            if (k != j) agg.b[k] += g;
    }
    return agg;
}

/// (A_l, B_l) for a single node. Isolated nodes give (0, 0).
template <typename Scalar>
std::pair<Scalar, Scalar> aggregates(const Topology& t, const NetworkParams<Scalar>& params, int ell,
                                     ObjectiveKind kind = ObjectiveKind::Total) {
    t.neighbors(ell);  // range check
    auto agg = all_aggregates(t, params, kind);
    return {agg.a[ell], agg.b[ell]};
}

/// d f / d q_l = -A_l / q_l + p_l B_l / (1 - p_l q_l); zero for isolated nodes.
template <typename Scalar>
VectorX<Scalar> gradient(const Topology& t, const NetworkParams<Scalar>& params, ObjectiveKind kind) {
    auto agg = all_aggregates(t, params, kind);
    VectorX<Scalar> grad = VectorX<Scalar>::Zero(t.size());
    for (int l = 0; l < t.size(); ++l) {
        if (t.degree(l) == 0) continue;
        const Scalar p = params.p[l];
        const Scalar q = params.q[l];
        grad[l] = -agg.a[l] / q + p * agg.b[l] / (Scalar(1) - p * q);
    }
    return grad;
}

/// Diagonal of the Hessian: 2 A_l / q_l^2 + 2 p_l^2 B_l / (1 - p_l q_l)^2.
/// Each age term g satisfies d2g/dq2 = g ((dlog g)^2 + d2log g) and log g is
/// separable, which gives the two pieces. Zero for isolated nodes.
template <typename Scalar>
VectorX<Scalar> hessian_diagonal(const Topology& t, const NetworkParams<Scalar>& params, ObjectiveKind kind) {
    auto agg = all_aggregates(t, params, kind);
    VectorX<Scalar> h = VectorX<Scalar>::Zero(t.size());
    for (int l = 0; l < t.size(); ++l) {
        if (t.degree(l) == 0) continue;
        const Scalar p = params.p[l];
        const Scalar q = params.q[l];
        const Scalar s = Scalar(1) - p * q;
        h[l] = Scalar(2) * agg.a[l] / (q * q) + Scalar(2) * p * p * agg.b[l] / (s * s);
    }
    return h;
}

}  // namespace aoi
