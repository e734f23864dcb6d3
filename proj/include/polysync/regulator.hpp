#pragma once

// Output regulator equations A Pi + B Gamma = Pi S, C Pi = H: the model-based
// solve and the least-squares fit over every vertex of the consistency set.

#include "polysync/datagen.hpp"
#include "polysync/represent.hpp"

namespace polysync {

struct RegulatorSolution {
    Mat pi;    // n x n0
    Mat gamma; // p x n0
};

struct RegulatorFit {
    Mat pi;
    Mat gamma;
    Vec residual1_per_vertex; // ||Z_v [Gamma; Pi] - Pi S||_F over z_poly
    Vec residual2_per_vertex; // ||C_v Pi - H||_F over c_poly
    double bound1 = 0.0;
    double bound2 = 0.0;
    MatrixPolytope delta1_poly; // n x n0
    MatrixPolytope delta2_poly; // q x n0
    bool degenerate = false;    // least-squares system rank deficient; minimum-norm solution returned
    double objective = 0.0;
};

constexpr double kRegulatorResidualTol = 1e-9;

RegulatorSolution exact_regulator(const TrueSystem& sys, const Mat& s, const Mat& h);

RegulatorFit solve_fit(const ConsistencySet& cs, const Mat& s, const Mat& h);

// Sum of squared Frobenius residuals over all vertices, the quantity solve_fit minimises.
double fit_objective(const ConsistencySet& cs, const Mat& s, const Mat& h, const Mat& pi, const Mat& gamma);

struct DeltaPolytopes {
    MatrixPolytope delta1;
    MatrixPolytope delta2;
};

// Polytopes holding the regulator-equation errors of the true system at (pi, gamma).
//   Verbatim noise: symmetric hulls of +-2 W_k D^dagger [Gamma; Pi] and +-2 V_k X^dagger Pi.
//   Scaled noise:   R0 - W_k D^dagger [Gamma; Pi] with R0 the nominal residual, which
//                   contains the true error whenever the noise stays in its box.
DeltaPolytopes delta_polytopes(const ConsistencySet& cs, const Mat& s, const Mat& h, const Mat& pi, const Mat& gamma);

std::pair<double, double> delta_bounds(const RegulatorFit& fit);

} // namespace polysync
