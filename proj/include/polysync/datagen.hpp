#pragma once

// Offline open-loop experiments producing the per-agent data matrices.

#include <cstdint>
#include <optional>
#include <random>

#include "polysync/numkit.hpp"
#include "polysync/polytope.hpp"

namespace polysync {

// Ground truth. Only data generation, simulation and test oracles read it.
struct TrueSystem {
    Mat a;
    Mat b;
    Mat c;

    [[nodiscard]] std::size_t n() const noexcept { return a.rows(); }
    [[nodiscard]] std::size_t p() const noexcept { return b.cols(); }
    [[nodiscard]] std::size_t q() const noexcept { return c.rows(); }
    void validate() const;
};

struct NoiseModel {
    VPolytope process;
    VPolytope measurement;
};

// Hypercube process noise of half-width w and interval measurement noise of
// half-width v; zero widths give singleton polytopes at the origin.
NoiseModel box_noise(std::size_t n, std::size_t q, double w, double v);

struct AgentDataset {
    Mat x;      // n x rho
    Mat x_plus; // n x rho
    Mat u;      // p x rho
    Mat y;      // q x rho
    std::size_t rho = 0;
    std::uint64_t seed = 0;
    std::size_t restarts = 0;
    // Realised noise, kept for oracle checks only.
    std::optional<Mat> w;
    std::optional<Mat> v;

    void validate() const;
};

struct CollectOptions {
    // When positive, a state with max-norm above this bound is redrawn
    // uniformly from [-1, 1]^n before the next transition is recorded.
    double restart_bound = 0.0;
    double divergence_threshold = 1e12;
    bool retain_noise = true;
};

// Uniform-on-simplex convex weights over the vertices.
Vec sample_in_hull(const VPolytope& p, std::mt19937_64& rng);
Vec sample_noise(const VPolytope& p, std::uint64_t seed);

AgentDataset collect(const TrueSystem& sys, const NoiseModel& noise, std::size_t rho, const VPolytope& input_poly,
                     std::span<const double> x0, std::uint64_t seed, const CollectOptions& opts = {});

// [U; X]
Mat stacked_data(const AgentDataset& d);
bool rank_ok(const AgentDataset& d, double tol = 1e-8);

} // namespace polysync
