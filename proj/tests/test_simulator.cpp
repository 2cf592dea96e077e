#include <doctest.h>

#include <cmath>
#include <cstring>
#include <limits>
#include <map>

#include "aoi/simulator.hpp"

using namespace aoi;
using doctest::Approx;

namespace {

NetworkParamsd params_of(const Eigen::VectorXd& p, const Eigen::VectorXd& q) { return {p, q}; }

sim::SimConfig config(std::int64_t slots, std::uint64_t seed, std::int64_t warmup = 1000, int reps = 1) {
    sim::SimConfig cfg;
    cfg.slots = slots;
    cfg.seed = seed;
    cfg.warmup = warmup;
    cfg.replications = reps;
    return cfg;
}

void check_against_analysis(const Topology& t, const NetworkParamsd& params, const sim::SimResult& r,
                            double tol) {
    for (const auto& link : t.links()) {
        const double mu = link_success_prob(t, params, link);
        INFO("link " << link.sender << "->" << link.receiver);
        CHECK(std::abs(r.at(link).mean_age * mu - 1.0) < tol);
        CHECK(std::abs(sim::estimate_mu(r, link) / mu - 1.0) < tol);
    }
}

bool same(const sim::SimResult& a, const sim::SimResult& b) {
    if (a.slots_measured != b.slots_measured || a.seed != b.seed || a.links.size() != b.links.size()) return false;
    for (std::size_t l = 0; l < a.links.size(); ++l) {
        if (a.links[l].link != b.links[l].link || a.links[l].deliveries != b.links[l].deliveries) return false;
        if (std::memcmp(&a.links[l].mean_age, &b.links[l].mean_age, sizeof(double)) != 0) return false;
    }
    return true;
}

// Upper 1% point of chi-square via the Wilson-Hilferty approximation.
double chi2_critical_99(int df) {
    const double z = 2.326347874;
    const double k = 2.0 / (9.0 * df);
    return df * std::pow(1.0 - k + z * std::sqrt(k), 3);
}

}  // namespace

TEST_CASE("deterministic protocol outcome") {
    const auto t = make_line(2);
    const auto params = params_of(Eigen::Vector2d(1, 1), Eigen::Vector2d(1, 0));
    const auto r = sim::run(t, params, config(10'000, 1, 10));
    CHECK(r.slots_measured == 9'990);
    CHECK(r.at({1, 0}).deliveries == 9'990);
    CHECK(r.at({1, 0}).mean_age == 1.0);
    CHECK(sim::estimate_mu(r, {1, 0}) == 1.0);
    CHECK(r.at({0, 1}).deliveries == 0);
    CHECK(std::isinf(r.at({0, 1}).mean_age));
    CHECK(sim::estimate_mu(r, {0, 1}) == 0.0);
    CHECK_THROWS_AS(sim::estimate_mu(r, {0, 0}), std::out_of_range);
}

TEST_CASE("two-node fair case converges to age 4") {
    const auto t = make_line(2);
    const auto params = NetworkParamsd::homogeneous(2, 1.0, 0.5);
    const auto r = sim::run(t, params, config(1'000'000, 42));
    for (const auto& link : t.links()) {
        CHECK(r.at(link).mean_age == Approx(4.0).epsilon(0.02));
        CHECK(sim::estimate_mu(r, link) == Approx(0.25).epsilon(0.02));
    }
}

TEST_CASE("ring of six at the closed-form optimum") {
    const auto t = make_ring(6);
    const auto params = NetworkParamsd::homogeneous(6, 1.0, 1.0 / 3.0);
    const auto r = sim::run(t, params, config(1'000'000, 42));
    for (const auto& s : r.links) CHECK(s.mean_age == Approx(6.75).epsilon(0.02));
}

TEST_CASE("heterogeneous p and q agree with the product formula") {
    const Topology t(5, {{0, 1}, {1, 2}, {2, 3}, {1, 3}, {3, 4}});
    Eigen::VectorXd p(5), q(5);
    p << 0.9, 1.0, 0.8, 0.95, 0.7;
    q << 0.4, 0.25, 0.3, 0.2, 0.5;
    const auto params = params_of(p, q);
    check_against_analysis(t, params, sim::run(t, params, config(1'000'000, 9)), 0.02);
}

TEST_CASE("a silent sender never delivers") {
    const auto t = make_star(4);
    Eigen::VectorXd q = Eigen::VectorXd::Constant(4, 0.3);
    q[2] = 0.0;
    const auto r = sim::run(t, params_of(Eigen::VectorXd::Ones(4), q), config(20'000, 3));
    CHECK(sim::estimate_mu(r, {0, 2}) == 0.0);
    CHECK(r.at({0, 1}).deliveries > 0);
}

TEST_CASE("determinism and seed sensitivity") {
    const auto t = make_star(5);
    const auto params = NetworkParamsd::homogeneous(5, 0.9, 0.3);
    const auto a = sim::run(t, params, config(50'000, 77, 100, 3));
    const auto b = sim::run(t, params, config(50'000, 77, 100, 3));
    CHECK(same(a, b));
    CHECK_FALSE(same(a, sim::run(t, params, config(50'000, 78, 100, 3))));

    // An observer forces sequential replications; the aggregate must not change.
    const auto c = sim::run(t, params, config(50'000, 77, 100, 3), [](const sim::SlotEvent&) {});
    CHECK(same(a, c));
}

TEST_CASE("replication seeds are distinct") {
    CHECK(sim::replication_seed(0, 0) != sim::replication_seed(0, 1));
    CHECK(sim::replication_seed(0, 1) != sim::replication_seed(1, 0));
    CHECK(sim::replication_seed(5, 2) == sim::replication_seed(5, 2));
}

TEST_CASE("half-duplex and no-buffer rules hold in every slot") {
    const auto t = make_grid(2, 3);
    const auto params = NetworkParamsd::homogeneous(6, 0.7, 0.4);
    std::int64_t slots_seen = 0, deliveries_seen = 0;
    bool ok = true;
    sim::run(t, params, config(20'000, 5, 0), [&](const sim::SlotEvent& ev) {
        ++slots_seen;
        std::vector<int> received(t.size(), 0);
        for (const auto& d : ev.deliveries) {
            ++deliveries_seen;
            ok = ok && ev.generated[d.sender] && ev.transmitting[d.sender] && !ev.transmitting[d.receiver];
            ++received[d.receiver];
            for (int k : t.neighbors(d.receiver))
                if (k != d.sender) ok = ok && !ev.transmitting[k];
        }
        for (const auto& d : ev.deliveries) ok = ok && received[d.sender] == 0;  // a sender receives nothing
        for (int i = 0; i < t.size(); ++i) {
            ok = ok && received[i] <= 1;
            ok = ok && (!ev.transmitting[i] || ev.generated[i]);
        }
    });
    CHECK(ok);
    CHECK(slots_seen == 20'000);
    CHECK(deliveries_seen > 0);
}

TEST_CASE("inter-delivery gaps are geometric") {
    const auto t = make_line(3);
    const auto params = NetworkParamsd::homogeneous(3, 1.0, 0.35);
    const DirectedLink link{1, 0};
    std::map<std::int64_t, std::int64_t> gaps;
    std::int64_t last = -1, count = 0;
    sim::run(t, params, config(1'000'000, 2024, 0), [&](const sim::SlotEvent& ev) {
        for (const auto& d : ev.deliveries) {
            if (d != link) continue;
            if (last >= 0) {
                ++gaps[ev.slot - last];
                ++count;
            }
            last = ev.slot;
        }
    });
    REQUIRE(count > 1000);
    double mean = 0.0;
    for (auto [g, c] : gaps) mean += static_cast<double>(g * c);
    const double mu = count / mean;

    // Bins 1..K with a tail bin, each holding at least 5 expected gaps.
    double chi2 = 0.0;
    int bins = 0;
    double tail_prob = 1.0;
    std::int64_t observed_below = 0;
    for (std::int64_t k = 1;; ++k) {
        const double pk = mu * std::pow(1.0 - mu, static_cast<double>(k - 1));
        if ((tail_prob - pk) * count < 5.0) break;
        const double expected = pk * count;
        const double obs = gaps.count(k) ? static_cast<double>(gaps[k]) : 0.0;
        chi2 += (obs - expected) * (obs - expected) / expected;
        observed_below += static_cast<std::int64_t>(obs);
        tail_prob -= pk;
        ++bins;
    }
    const double tail_expected = tail_prob * count;
    const double tail_obs = static_cast<double>(count - observed_below);
    chi2 += (tail_obs - tail_expected) * (tail_obs - tail_expected) / tail_expected;
    ++bins;
    const int df = bins - 2;  // one estimated parameter
    REQUIRE(df >= 10);
    CHECK(chi2 < chi2_critical_99(df));
    CHECK(mu == Approx(link_success_prob(t, params, link)).epsilon(0.02));
}

TEST_CASE("mean age is at least one on delivering links") {
    const auto t = make_asym_circle6();
    const auto params = NetworkParamsd::homogeneous(6, 1.0, 0.3);
    const auto r = sim::run(t, params, config(30'000, 8, 100, 2));
    CHECK(r.slots_measured == 2 * (30'000 - 100));
    for (const auto& s : r.links)
        if (s.deliveries > 0) CHECK(s.mean_age >= 1.0);
}

TEST_CASE("config validation") {
    const auto t = make_line(2);
    const auto params = NetworkParamsd::homogeneous(2, 1.0, 0.5);
    CHECK_THROWS_AS(sim::run(t, params, config(100, 0, 100)), std::invalid_argument);
    CHECK_THROWS_AS(sim::run(t, params, config(0, 0, 0)), std::invalid_argument);
    CHECK_THROWS_AS(sim::run(t, params, config(100, 0, 0, 0)), std::invalid_argument);
    CHECK_THROWS_AS(sim::run(t, NetworkParamsd::homogeneous(3, 1.0, 0.5), config(100, 0, 0)), std::invalid_argument);
}
