#include "polysync/graphnet.hpp"

#include <cmath>
#include <deque>

namespace polysync {

void Topology::validate() const {
    require(adjacency.rows() == n_followers && adjacency.cols() == n_followers, ErrorKind::Shape,
            "topology: adjacency must be N x N");
    require(pinning.size() == n_followers, ErrorKind::Shape, "topology: pinning must have N entries");
    for (std::size_t i = 0; i < n_followers; ++i) {
        require(adjacency(i, i) == 0.0, ErrorKind::InvalidInput, "topology: self loops are not allowed");
        require(std::isfinite(pinning[i]) && pinning[i] >= 0.0, ErrorKind::InvalidInput,
                "topology: pinning gains must be nonnegative");
        for (std::size_t j = 0; j < n_followers; ++j)
            require(std::isfinite(adjacency(i, j)) && adjacency(i, j) >= 0.0, ErrorKind::InvalidInput,
                    "topology: edge weights must be nonnegative");
    }
}

Topology topology_from_edges(std::size_t n_followers, std::span<const Edge> edges) {
    Topology t{n_followers, Mat(n_followers, n_followers), Vec(n_followers, 0.0)};
    for (const Edge& e : edges) {
        require(e.to >= 1 && e.to <= n_followers, ErrorKind::InvalidInput, "topology: edge target must be a follower 1..N");
        require(e.from <= n_followers, ErrorKind::InvalidInput, "topology: edge source out of range");
        require(e.from != e.to, ErrorKind::InvalidInput, "topology: self loops are not allowed");
        require(std::isfinite(e.weight) && e.weight > 0.0, ErrorKind::InvalidInput, "topology: edge weights must be positive");
        if (e.from == 0)
            t.pinning[e.to - 1] = e.weight;
        else
            t.adjacency(e.to - 1, e.from - 1) = e.weight;
    }
    return t;
}

std::vector<Edge> topology_edges(const Topology& t) {
    std::vector<Edge> out;
    for (std::size_t i = 0; i < t.n_followers; ++i)
        if (t.pinning[i] > 0.0) out.push_back({0, i + 1, t.pinning[i]});
    for (std::size_t i = 0; i < t.n_followers; ++i)
        for (std::size_t j = 0; j < t.n_followers; ++j)
            if (t.adjacency(i, j) > 0.0) out.push_back({j + 1, i + 1, t.adjacency(i, j)});
    return out;
}

Topology chain_topology(std::size_t n_followers) {
    std::vector<Edge> edges;
    for (std::size_t i = 1; i <= n_followers; ++i) edges.push_back({i - 1, i, 1.0});
    return topology_from_edges(n_followers, edges);
}

Vec in_degrees(const Topology& t) {
    Vec d(t.n_followers, 0.0);
    for (std::size_t i = 0; i < t.n_followers; ++i)
        for (std::size_t j = 0; j < t.n_followers; ++j) d[i] += t.adjacency(i, j);
    return d;
}

Mat laplacian(const Topology& t) {
    t.validate();
    const Vec d = in_degrees(t);
    Mat l = -t.adjacency;
    for (std::size_t i = 0; i < t.n_followers; ++i) l(i, i) = d[i];
    return l;
}

Mat coupling(const Topology& t) {
    Mat h = laplacian(t);
    const Vec d = in_degrees(t);
    for (std::size_t i = 0; i < t.n_followers; ++i) {
        h(i, i) += t.pinning[i];
        const double inv = 1.0 / (1.0 + d[i] + t.pinning[i]);
        for (std::size_t j = 0; j < t.n_followers; ++j) h(i, j) *= inv;
    }
    return h;
}

bool has_spanning_tree(const Topology& t) {
    t.validate();
    const std::size_t n = t.n_followers;
    std::vector<char> seen(n, 0);
    std::deque<std::size_t> queue;
    for (std::size_t i = 0; i < n; ++i)
        if (t.pinning[i] > 0.0) {
            seen[i] = 1;
            queue.push_back(i);
        }
    while (!queue.empty()) {
        const std::size_t j = queue.front();
        queue.pop_front();
        for (std::size_t i = 0; i < n; ++i)
            if (!seen[i] && t.adjacency(i, j) > 0.0) {
                seen[i] = 1;
                queue.push_back(i);
            }
    }
    for (char s : seen)
        if (!s) return false;
    return n > 0;
}

Mat observer_composite(const Topology& t, const Mat& s, const Mat& f) {
    require(s.is_square() && f.rows() == s.rows() && f.cols() == s.cols(), ErrorKind::Shape,
            "observer_composite: S and F must be square of equal size");
    return kron(Mat::identity(t.n_followers), s) - kron(coupling(t), f);
}

} // namespace polysync
