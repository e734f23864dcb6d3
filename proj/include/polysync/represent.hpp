#pragma once

// Data-based set of system matrices consistent with the noisy data.

#include "polysync/datagen.hpp"
#include "polysync/polytope.hpp"

namespace polysync {

struct ConsistencySet {
    MatrixPolytope z_poly; // vertices of [B A], n x (p + n)
    MatrixPolytope c_poly; // vertices of C, q x n
    MatrixPolytope w_poly; // noise matrix polytopes the sets were built from
    MatrixPolytope v_poly;
    Mat d_pinv; // [U; X]^dagger, rho x (p + n)
    Mat x_pinv; // X^dagger, rho x n
    std::size_t n = 0;
    std::size_t p = 0;
    std::size_t q = 0;
    std::size_t gamma_w = 0;
    std::size_t gamma_v = 0;
    std::size_t rho = 0;
    NoiseMode mode = NoiseMode::Verbatim;
};

ConsistencySet build_consistency_set(const AgentDataset& d, const NoiseModel& noise,
                                     NoiseMode mode = NoiseMode::Verbatim, double rank_tol = 1e-8);

// Checks the reconstruction identity with the realised noise.
bool verify_true_membership(const ConsistencySet& cs, const TrueSystem& sys, const AgentDataset& d, double tol = 1e-9);

// Largest Frobenius errors of the reconstruction identity (for reporting).
struct ReconstructionError {
    double z = 0.0;
    double c = 0.0;
};
ReconstructionError reconstruction_error(const ConsistencySet& cs, const TrueSystem& sys, const AgentDataset& d);

// Vertices [B A] [K; I] = A + B K.
MatrixPolytope closed_loop_polytope(const ConsistencySet& cs, const Mat& k);

} // namespace polysync
