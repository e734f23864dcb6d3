#pragma once

// Small dense linear programs: minimize c^T x subject to A x = b, x >= 0.
// Two-phase tableau simplex with Bland's rule; meant for the membership and
// vertex-pruning problems, which have a dozen rows and a few hundred columns.

#include "polysync/numkit.hpp"

namespace polysync::lp {

enum class Status { Optimal, Infeasible, Unbounded, IterationLimit };

struct Result {
    Status status = Status::Infeasible;
    Vec x;
    double objective = 0.0;
};

Result minimize(const Mat& a, const Vec& b, const Vec& c, int iteration_cap = 20000);

} // namespace polysync::lp
