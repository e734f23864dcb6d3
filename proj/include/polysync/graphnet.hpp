#pragma once

// Leader-follower communication graph. Followers are indexed 0..N-1 here and
// 1..N in configuration files; the leader is node 0 there.

#include <cstddef>

#include "polysync/numkit.hpp"

namespace polysync {

struct Topology {
    std::size_t n_followers = 0;
    Mat adjacency; // a(i, j) > 0 iff follower i hears follower j
    Vec pinning;   // g_i > 0 iff follower i hears the leader

    void validate() const;
};

// Edge (from, to, weight) with 0 = leader, 1..N = followers.
struct Edge {
    std::size_t from = 0;
    std::size_t to = 0;
    double weight = 1.0;

    friend bool operator==(const Edge&, const Edge&) = default;
};

Topology topology_from_edges(std::size_t n_followers, std::span<const Edge> edges);
std::vector<Edge> topology_edges(const Topology& t);

// Directed chain leader -> 1 -> 2 -> ... -> N with unit weights.
Topology chain_topology(std::size_t n_followers);

Vec in_degrees(const Topology& t);
Mat laplacian(const Topology& t);
Mat coupling(const Topology& t); // (I + D + G)^{-1} (L + G)

bool has_spanning_tree(const Topology& t);

// I_N (x) S - coupling (x) F
Mat observer_composite(const Topology& t, const Mat& s, const Mat& f);

} // namespace polysync
