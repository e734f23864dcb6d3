#pragma once

// Small dense LMI solver: maximise t subject to F0_b + sum_j y_j F_jb >= t I for
// every block b and a y = b on the equalities.

#include <string>
#include <vector>

#include "polysync/numkit.hpp"

namespace polysync::sdp {

struct LmiBlock {
    Mat f0;
    std::vector<Mat> f; // one symmetric coefficient per decision variable
};

struct Equality {
    Vec a;
    double b = 0.0;
};

struct LmiProblem {
    std::size_t dim = 0;
    std::vector<LmiBlock> blocks;
    std::vector<Equality> equalities;

    void validate() const;
};

enum class Status { Feasible, Infeasible, Inconclusive };

std::string to_string(Status s);

struct LmiSolution {
    Vec y;
    double margin = 0.0; // min eigenvalue over all blocks at y
    Status status = Status::Inconclusive;
    double upper_bound = 0.0; // bound on sup t from the last centred iterate
    double eq_residual = 0.0;
    double grad_norm = 0.0;
    int iterations = 0;
};

struct SolverOptions {
    double target_margin = -1.0; // negative: 1e-6 times the largest block Frobenius norm
    int iteration_cap = 600;     // Newton steps in total
    double variable_bound = 1e4; // box on the null-space coordinates
    double gap_tol = 1e-7;       // relative to the problem scale
};

LmiSolution solve_max_margin(const LmiProblem& p, const SolverOptions& opts = {});

struct Check {
    double margin = 0.0;
    double eq_residual = 0.0;
};
Check check_solution(const LmiProblem& p, std::span<const double> y);

Mat block_value(const LmiBlock& b, std::span<const double> y);

} // namespace polysync::sdp
