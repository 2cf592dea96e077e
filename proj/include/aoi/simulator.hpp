#pragma once

#include <cstdint>
#include <functional>
#include <span>
#include <vector>

#include "aoi/analysis.hpp"
#include "aoi/graph.hpp"

namespace aoi::sim {

struct SimConfig {
    std::int64_t slots = 1'000'000;  // horizon per replication
    std::uint64_t seed = 0;
    std::int64_t warmup = 1'000;  // leading slots excluded from averages
    int replications = 1;

    void validate() const;
};

struct LinkStats {
    DirectedLink link;
    double mean_age = 0.0;  // +inf when the link never delivered in the measured window
    std::int64_t deliveries = 0;
};

struct SimResult {
    std::vector<LinkStats> links;  // Topology::links() order
    std::int64_t slots_measured = 0;
    std::uint64_t seed = 0;

    const LinkStats& at(DirectedLink link) const;
};

/// Everything that happened in one slot, for instrumented runs.
struct SlotEvent {
    int replication;
    std::int64_t slot;  // 1-based
    std::span<const std::uint8_t> generated;
    std::span<const std::uint8_t> transmitting;
    std::span<const DirectedLink> deliveries;
};

using SlotObserver = std::function<void(const SlotEvent&)>;

/// Seed of replication `r`: splitmix64 finalizer applied to
/// seed + (r + 1) * 0x9E3779B97F4A7C15. Each replication drives its own
/// std::mt19937_64 seeded with this value.
std::uint64_t replication_seed(std::uint64_t seed, int r);

/// Slotted ALOHA over `t`. Each slot: every node draws packet generation with
/// probability p_i (in node order), then every node holding a packet draws
/// transmission with probability q_i (in node order). Receiver i gets j's packet
/// iff j transmits, i does not, and no other neighbor of i transmits. Ages are
/// sampled at slot end: 1 after a delivery, otherwise incremented.
///
/// Replications run in parallel unless an observer is attached; aggregation is
/// exact integer arithmetic so the result does not depend on scheduling.
SimResult run(const Topology& t, const NetworkParamsd& params, const SimConfig& cfg,
              const SlotObserver& observer = {});

/// deliveries / slots_measured for `link`.
double estimate_mu(const SimResult& result, DirectedLink link);

}  // namespace aoi::sim
