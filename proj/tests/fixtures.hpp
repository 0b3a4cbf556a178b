// Synthetic temporal graphs shared by the evaluation tests and the
// acceptance suite.
#pragma once

#include <memory>
#include <string>
#include <vector>

#include "toffee/graph.hpp"
#include "toffee/rng.hpp"

namespace fixtures {

// Erdos-Renyi-style temporal graph: `events` uniformly random (i != j) edge
// events with timestamps uniform on [0, 1000).
inline std::shared_ptr<const toffee::TemporalGraph> random_temporal_graph(
    std::size_t n, std::size_t events, std::uint64_t seed) {
    toffee::SeededRng rng(seed);
    std::vector<std::string> labels(n);
    for (std::size_t i = 0; i < n; ++i) labels[i] = "n" + std::to_string(i);
    std::vector<toffee::Event> ev(events);
    for (auto& e : ev) {
        e.src = static_cast<toffee::NodeId>(rng.next_below(n));
        do {
            e.dst = static_cast<toffee::NodeId>(rng.next_below(n));
        } while (e.dst == e.src);
        e.weight = 1.0;
        e.timestamp = rng.next_unit() * 1000.0;
    }
    return std::make_shared<const toffee::TemporalGraph>(
        toffee::TemporalGraph::from_events(std::move(labels), std::move(ev), false));
}

// Periodic two-community temporal network. The community assignment
// alternates every `period` slices between a block partition (first half vs
// second half) and a parity partition, so membership genuinely moves while
// the pattern repeats with period 2*`period`. Pairs inside a community draw
// an edge with p_intra per slice, across communities with p_inter.
inline std::shared_ptr<const toffee::TemporalGraph> periodic_two_community_graph(
    std::size_t n, std::size_t T, std::size_t period, double p_intra, double p_inter,
    std::uint64_t seed) {
    toffee::SeededRng rng(seed);
    std::vector<std::string> labels(n);
    for (std::size_t i = 0; i < n; ++i) labels[i] = "n" + std::to_string(i);

    auto community = [&](std::size_t node, std::size_t slice) -> int {
        const bool parity_phase = (slice / period) % 2 == 1;
        if (parity_phase) return static_cast<int>(node % 2);
        return node < n / 2 ? 0 : 1;
    };

    std::vector<toffee::Event> events;
    for (std::size_t t = 0; t < T; ++t) {
        for (std::size_t i = 0; i < n; ++i) {
            for (std::size_t j = i + 1; j < n; ++j) {
                const double p =
                    community(i, t) == community(j, t) ? p_intra : p_inter;
                if (rng.next_unit() < p) {
                    toffee::Event e;
                    e.src = static_cast<toffee::NodeId>(i);
                    e.dst = static_cast<toffee::NodeId>(j);
                    e.weight = 1.0;
                    e.timestamp = static_cast<double>(t);
                    events.push_back(e);
                }
            }
        }
    }
    return std::make_shared<const toffee::TemporalGraph>(
        toffee::TemporalGraph::from_events(std::move(labels), std::move(events), false));
}

}  // namespace fixtures
