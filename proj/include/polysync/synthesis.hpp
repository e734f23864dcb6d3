#pragma once

// Feedback gain from data (a common Lyapunov LMI over the consistency set) and
// the distributed observer gain.

#include <optional>

#include "polysync/datagen.hpp"
#include "polysync/graphnet.hpp"
#include "polysync/represent.hpp"
#include "polysync/sdpcore.hpp"

namespace polysync {

struct SynthesisOptions {
    double margin = 1e-3; // required gap 1 - max vertex spectral radius
    sdp::SolverOptions solver;
    NoiseMode mode = NoiseMode::Verbatim;
};

struct SynthesisResult {
    Mat k;           // p x n
    Mat m_decision;  // rho x n
    Mat lyapunov_p;  // (X M)^{-1}
    Vec vertex_radii;
    double worst_vertex_radius = 0.0;
    double lyapunov_decrease = 0.0; // max over vertices of lambda_max(Q' P Q - P)
    double margin = 0.0;            // LMI margin reported by the solver
    sdp::LmiSolution solution;
};

// Decision variable y = M in row-major order. For every noise vertex k the block
//   [[X M, O_k M], [(O_k M)', X M]] >= t I,  O_k = (X+ - W_k) D^dagger D,
// with X M symmetric and trace(X M) = n fixing the scale of the homogeneous LMI.
sdp::LmiProblem gain_lmi(const AgentDataset& d, const ConsistencySet& cs);

SynthesisResult synthesize_k(const AgentDataset& d, const NoiseModel& noise, const SynthesisOptions& opts = {});

// Max over vertices of lambda_max(Q' P Q - P).
double lyapunov_decrease(const MatrixPolytope& closed_loop, const Mat& p);

struct ObserverDesign {
    Mat f;
    double composite_radius = 0.0;
    std::optional<double> alpha; // set when F = alpha S
};

constexpr double kDefaultObserverMargin = 1e-3;

// Searches F = alpha S: a log grid on alpha, then golden-section refinement.
ObserverDesign design_f(const Topology& t, const Mat& s, double margin = kDefaultObserverMargin);
// Verifies a user-supplied F.
ObserverDesign check_f(const Topology& t, const Mat& s, const Mat& f, double margin = kDefaultObserverMargin);

bool verify_composite_stability(const Topology& t, const Mat& s, const Mat& f, std::span<const MatrixPolytope> closed_loops);

} // namespace polysync
