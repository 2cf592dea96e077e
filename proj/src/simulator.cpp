#include "aoi/simulator.hpp"

#include <algorithm>
#include <limits>
#include <random>
#include <stdexcept>
#include <string>
#include <thread>

namespace aoi::sim {

namespace {

struct ReplicationTotals {
    std::vector<std::uint64_t> age_sum;
    std::vector<std::int64_t> deliveries;
};

// Uniform double in [0, 1) from the top 53 bits.
inline double uniform01(std::mt19937_64& rng) {
    return static_cast<double>(rng() >> 11) * 0x1.0p-53;
}

ReplicationTotals run_replication(const Topology& t, const NetworkParamsd& params, const SimConfig& cfg,
                                  int rep, const SlotObserver& observer) {
    const int n = t.size();
    const auto& links = t.links();
    std::mt19937_64 rng(replication_seed(cfg.seed, rep));

    std::vector<std::size_t> offset(static_cast<std::size_t>(n) + 1, 0);
    for (int i = 0; i < n; ++i) offset[i + 1] = offset[i] + static_cast<std::size_t>(t.degree(i));

    ReplicationTotals tot{std::vector<std::uint64_t>(links.size(), 0),
                          std::vector<std::int64_t>(links.size(), 0)};
    std::vector<std::uint64_t> age(links.size(), 1);
    std::vector<std::uint8_t> generated(n), transmitting(n);
    std::vector<std::size_t> delivered;
    std::vector<DirectedLink> delivered_links;

    for (std::int64_t s = 1; s <= cfg.slots; ++s) {
        for (int i = 0; i < n; ++i) generated[i] = uniform01(rng) < params.p[i];
        for (int i = 0; i < n; ++i) transmitting[i] = generated[i] && uniform01(rng) < params.q[i];

        delivered.clear();
        for (int i = 0; i < n; ++i) {
            if (transmitting[i]) continue;
            const auto nb = t.neighbors(i);
            int talkers = 0;
            std::size_t who = 0;
            for (std::size_t k = 0; k < nb.size() && talkers < 2; ++k) {
                if (transmitting[nb[k]]) {
                    ++talkers;
                    who = k;
                }
            }
            if (talkers == 1) delivered.push_back(offset[i] + who);
        }

        for (auto& a : age) ++a;
        for (auto idx : delivered) age[idx] = 1;

        if (s > cfg.warmup) {
            for (std::size_t l = 0; l < age.size(); ++l) tot.age_sum[l] += age[l];
            for (auto idx : delivered) ++tot.deliveries[idx];
        }

        if (observer) {
            delivered_links.clear();
            for (auto idx : delivered) delivered_links.push_back(links[idx]);
            observer(SlotEvent{rep, s, generated, transmitting, delivered_links});
        }
    }
    return tot;
}

}  // namespace

void SimConfig::validate() const {
    if (slots < 1) throw std::invalid_argument("slots must be >= 1");
    if (warmup < 0 || warmup >= slots) throw std::invalid_argument("warmup must lie in [0, slots)");
    if (replications < 1) throw std::invalid_argument("replications must be >= 1");
}

std::uint64_t replication_seed(std::uint64_t seed, int r) {
    std::uint64_t z = seed + static_cast<std::uint64_t>(r + 1) * 0x9E3779B97F4A7C15ULL;
    z = (z ^ (z >> 30)) * 0xBF58476D1CE4E5B9ULL;
    z = (z ^ (z >> 27)) * 0x94D049BB133111EBULL;
    return z ^ (z >> 31);
}

const LinkStats& SimResult::at(DirectedLink link) const {
    auto it = std::find_if(links.begin(), links.end(), [&](const LinkStats& s) { return s.link == link; });
    if (it == links.end())
        throw std::out_of_range("link " + std::to_string(link.sender) + "->" +
                                std::to_string(link.receiver) + " not in result");
    return *it;
}

SimResult run(const Topology& t, const NetworkParamsd& params, const SimConfig& cfg,
              const SlotObserver& observer) {
    cfg.validate();
    validate(t, params);

    const int reps = cfg.replications;
    std::vector<ReplicationTotals> per_rep(static_cast<std::size_t>(reps));
    const unsigned workers =
        observer ? 1u : std::clamp(std::thread::hardware_concurrency(), 1u, static_cast<unsigned>(reps));
    if (workers == 1) {
        for (int r = 0; r < reps; ++r) per_rep[r] = run_replication(t, params, cfg, r, observer);
    } else {
        std::vector<std::jthread> pool;
        for (unsigned w = 0; w < workers; ++w) {
            pool.emplace_back([&, w] {
                for (int r = static_cast<int>(w); r < reps; r += static_cast<int>(workers))
                    per_rep[r] = run_replication(t, params, cfg, r, {});
            });
        }
    }

    SimResult out;
    out.seed = cfg.seed;
    out.slots_measured = (cfg.slots - cfg.warmup) * reps;
    for (std::size_t l = 0; l < t.links().size(); ++l) {
        std::uint64_t age_sum = 0;
        std::int64_t deliveries = 0;
        for (const auto& rep : per_rep) {
            age_sum += rep.age_sum[l];
            deliveries += rep.deliveries[l];
        }
        const double mean = deliveries == 0 ? std::numeric_limits<double>::infinity()
                                            : static_cast<double>(age_sum) /
                                                  static_cast<double>(out.slots_measured);
        out.links.push_back({t.links()[l], mean, deliveries});
    }
    return out;
}

double estimate_mu(const SimResult& result, DirectedLink link) {
    return static_cast<double>(result.at(link).deliveries) / static_cast<double>(result.slots_measured);
}

}  // namespace aoi::sim
