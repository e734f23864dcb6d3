#pragma once

// Over-approximations of the virtual tracking error and the output error.

#include <vector>

#include "polysync/datagen.hpp"
#include "polysync/polytope.hpp"
#include "polysync/regulator.hpp"
#include "polysync/simulate.hpp"

namespace polysync {

// sup_t ||S^t|| for S with simple unit-modulus eigenvalues: the condition
// number of the eigenvector matrix.
double leader_orbit_gain(const Mat& s);

// Box containing the whole leader orbit from x0.
VPolytope leader_state_polytope(const LeaderModel& leader, std::span<const double> x0);

// Delta1 (P_x0 + delta) + coupling_scale * Pi F z, as the hull of vertex products.
VPolytope disturbance_polytope(const MatrixPolytope& delta1, const VPolytope& px0, const Mat& pi, const Mat& f,
                               double coupling_scale, std::span<const double> delta_t, std::span<const double> z_t,
                               std::size_t cap = kDefaultVertexCap);
VPolytope disturbance_polytope(const RegulatorFit& fit, const VPolytope& px0, const Mat& pi, const Mat& f,
                               const Topology& t, std::size_t agent, std::span<const double> delta_t,
                               std::span<const double> z_t);

struct XiSeries {
    std::vector<VPolytope> sets; // horizon + 1
    bool over_approximated = false;
};

// P(t + 1) = hull{Q v : Q vertex of mzk, v vertex of P(t)} + D(t), P(0) = p0.
XiSeries xi_bound_recursion(const MatrixPolytope& mzk, const VPolytope& p0, std::span<const VPolytope> disturbances,
                            std::size_t horizon, std::size_t cap = kDefaultVertexCap);

struct AsymptoticBound {
    double beta = 0.0;          // max_k ||P^{1/2} Q_k P^{-1/2}||_2
    double vertex_radius = 0.0; // max_k rho(Q_k), for reference
    double mu = 0.0;            // cond(P^{1/2})
    double value = 0.0;         // limsup bound on |e|_inf; infinite when beta >= 1
};

struct BoundSeries {
    Vec r; // bound on |e(t)|_inf, horizon + 1
    XiSeries xi;
    AsymptoticBound asymptotic;
};

struct ReachInputs {
    MatrixPolytope closed_loop; // vertices of A + B K
    MatrixPolytope c_poly;
    MatrixPolytope delta1;
    MatrixPolytope delta2;
    Mat pi;
    Mat f;
    double coupling_scale = 1.0; // (1 + d_i + g_i)^{-1}
    Mat lyapunov_p;
    VPolytope px0;
    Vec xi0;
    std::vector<Vec> delta; // observer error, at least horizon + 1 entries
    std::vector<Vec> z;     // local disagreement, at least horizon entries
    std::size_t horizon = 0;
    std::size_t cap = kDefaultVertexCap;
};

// r(t) = max |C v|_inf over C in c_poly, v in the xi set
//      + max |D2 w|_inf over D2 in delta2, w in px0
//      + max |C Pi delta(t)|_inf over C in c_poly.
Vec error_bound_series(const MatrixPolytope& c_poly, std::span<const VPolytope> xi_sets, const MatrixPolytope& delta2,
                       const VPolytope& px0, const Mat& pi, std::span<const Vec> delta);
Vec error_bound_series(const MatrixPolytope& c_poly, std::span<const VPolytope> xi_sets, const RegulatorFit& fit,
                       const VPolytope& px0, std::span<const Vec> delta);

AsymptoticBound asymptotic_bound(const MatrixPolytope& closed_loop, const Mat& lyapunov_p, const MatrixPolytope& c_poly,
                                 const MatrixPolytope& delta1, const MatrixPolytope& delta2, const VPolytope& px0);

BoundSeries compute_bounds(const ReachInputs& in);

// The exact data-consistent set of a matrix that is affine in the noise:
// M(W) = nominal - W * rows over all W with |W(i, m)| <= w_abs[i]. Every
// column of the true noise matrix lies in the noise polytope, hence in this
// box, so the true matrix is always a member.
struct NoiseAffineMatrix {
    Mat nominal; // r x c
    Mat rows;    // rho x c
    Vec w_abs;   // r
};

// A zonotope containing { M(W) x : W admissible, x in z }.
Zonotope image_bound(const NoiseAffineMatrix& m, const Zonotope& z);
// Per-row max of |(M(W) x)_i| over the same set.
Vec output_bound(const NoiseAffineMatrix& m, const Zonotope& z);

struct ExactSets {
    NoiseAffineMatrix closed_loop; // A + B K
    NoiseAffineMatrix delta1;      // A Pi + B Gamma - Pi S
    NoiseAffineMatrix c;           // C
    NoiseAffineMatrix delta2;      // C Pi - H
    NoiseAffineMatrix c_pi;        // C Pi
};
ExactSets exact_sets(const AgentDataset& d, const NoiseModel& noise, const Mat& k, const Mat& s, const Mat& h,
                     const Mat& pi, const Mat& gamma);

struct ExactReachInputs {
    ExactSets sets;
    Mat pi;
    Mat f;
    double coupling_scale = 1.0;
    VPolytope px0; // only its bounding box is used
    Vec xi0;
    std::vector<Vec> delta; // at least horizon + 1
    std::vector<Vec> z;     // at least horizon
    std::size_t horizon = 0;
    std::size_t max_generators = 64;
};

struct ExactBoundSeries {
    Vec r; // bound on |e(t)|_inf, horizon + 1
    std::vector<Zonotope> xi;
    // sup of the same recursion started at 0 with a converged observer;
    // infinite if it does not settle.
    double asymptotic = 0.0;
    std::size_t asymptotic_steps = 0;
};

ExactBoundSeries compute_exact_bounds(const ExactReachInputs& in);

} // namespace polysync
