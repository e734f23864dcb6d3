#include <random>

#include "doctest.h"
#include "polysync/sdpcore.hpp"
#include "test_util.hpp"

using namespace polysync;
using namespace polysync::sdp;

namespace {

LmiProblem offdiag_problem() {
    LmiProblem p;
    p.dim = 1;
    p.blocks.push_back({Mat::identity(2), {Mat{{0, 1}, {1, 0}}}});
    return p;
}

// Random feasible problem: blocks built around a known interior point.
LmiProblem random_problem(std::mt19937_64& rng, std::size_t dim, std::size_t nblocks, std::size_t k) {
    LmiProblem p;
    p.dim = dim;
    for (std::size_t b = 0; b < nblocks; ++b) {
        LmiBlock blk;
        blk.f0 = symmetrize(testing::random_mat(k, k, rng)) + static_cast<double>(k) * Mat::identity(k);
        for (std::size_t j = 0; j < dim; ++j) blk.f.push_back(symmetrize(testing::random_mat(k, k, rng)));
        p.blocks.push_back(std::move(blk));
    }
    return p;
}

} // namespace

TEST_CASE("maximum margin of [[1, y], [y, 1]]") {
    const LmiSolution s = solve_max_margin(offdiag_problem());
    REQUIRE(s.status == Status::Feasible);
    CHECK(std::abs(s.y[0]) < 1e-6);
    CHECK(s.margin == doctest::Approx(1.0).epsilon(1e-6));
}

TEST_CASE("negative constant block is infeasible") {
    LmiProblem p;
    p.dim = 0;
    p.blocks.push_back({Mat{{-1}}, {}});
    const LmiSolution s = solve_max_margin(p);
    CHECK(s.status == Status::Infeasible);
    CHECK(s.upper_bound < 0.0);
}

TEST_CASE("forced variable") {
    LmiProblem p;
    p.dim = 1;
    p.blocks.push_back({Mat(2, 2), {Mat::identity(2)}});
    p.equalities.push_back({Vec{1.0}, 3.0});
    const LmiSolution s = solve_max_margin(p);
    REQUIRE(s.status == Status::Feasible);
    CHECK(s.y[0] == doctest::Approx(3.0));
    CHECK(s.margin == doctest::Approx(3.0));
}

TEST_CASE("conflicting constraints are infeasible") {
    // y >= 1 and -y >= 0.
    LmiProblem p;
    p.dim = 1;
    p.blocks.push_back({Mat{{-1}}, {Mat{{1}}}});
    p.blocks.push_back({Mat{{0}}, {Mat{{-1}}}});
    CHECK(solve_max_margin(p).status == Status::Infeasible);

    LmiProblem q = offdiag_problem();
    q.equalities.push_back({Vec{1.0}, 1.0});
    q.equalities.push_back({Vec{1.0}, 2.0});
    CHECK(solve_max_margin(q).status == Status::Infeasible);
}

TEST_CASE("check_solution recomputes the margin") {
    const LmiProblem p = offdiag_problem();
    const LmiSolution s = solve_max_margin(p);
    const Check c = check_solution(p, s.y);
    CHECK(c.margin == doctest::Approx(s.margin).epsilon(1e-7));
    CHECK(check_solution(p, Vec{0.0}).margin == 1.0);
    // Moving y* by ten times the margin breaks the certificate.
    CHECK(check_solution(p, Vec{10.0 * s.margin}).margin < 0.0);
}

TEST_CASE("feasible answers always pass the independent check") {
    std::mt19937_64 rng(21);
    for (int trial = 0; trial < 15; ++trial) {
        LmiProblem p = random_problem(rng, 4, 5, 3);
        if (trial % 3 == 0) p.equalities.push_back({Vec{1.0, -1.0, 0.5, 0.0}, 0.2});
        const LmiSolution s = solve_max_margin(p);
        if (s.status == Status::Feasible) {
            const Check c = check_solution(p, s.y);
            CHECK(c.margin > 0.0);
            CHECK(c.eq_residual < 1e-8);
        }
    }
}

TEST_CASE("margin scales with the blocks") {
    std::mt19937_64 rng(8);
    const LmiProblem p = random_problem(rng, 3, 4, 3);
    LmiProblem q = p;
    for (auto& b : q.blocks) {
        b.f0 *= 5.0;
        for (Mat& f : b.f) f *= 5.0;
    }
    const LmiSolution a = solve_max_margin(p), b = solve_max_margin(q);
    CHECK(a.status == b.status);
    CHECK(b.margin == doctest::Approx(5.0 * a.margin).epsilon(1e-6));
}

TEST_CASE("solver is deterministic") {
    std::mt19937_64 rng(3);
    const LmiProblem p = random_problem(rng, 5, 6, 4);
    const LmiSolution a = solve_max_margin(p), b = solve_max_margin(p);
    CHECK(a.y == b.y);
    CHECK(a.margin == b.margin);
}

TEST_CASE("problem validation") {
    LmiProblem p = offdiag_problem();
    p.blocks[0].f[0] = Mat{{0, 1}, {0, 0}};
    CHECK_THROWS_AS(solve_max_margin(p), Error);
    LmiProblem q = offdiag_problem();
    q.blocks[0].f.clear();
    CHECK_THROWS_AS(solve_max_margin(q), Error);
}
