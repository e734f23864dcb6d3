#include "doctest.h"
#include "example_systems.hpp"
#include "polysync/datagen.hpp"
#include "test_util.hpp"

using namespace polysync;

namespace {

const VPolytope kInputs = box_polytope(Vec{1.0});

} // namespace

TEST_CASE("sample noise stays in the hull") {
    CHECK(sample_noise(VPolytope::point(Vec{0.3, -0.2}), 5) == Vec{0.3, -0.2});
    const VPolytope box = box_polytope(Vec{0.01, 0.01});
    const VPolytope tri(std::vector<Vec>{{0, 0}, {1, 0}, {0, 1}});
    for (std::uint64_t seed = 0; seed < 50; ++seed) {
        const Vec s = sample_noise(box, seed);
        CHECK(std::abs(s[0]) <= 0.01);
        CHECK(std::abs(s[1]) <= 0.01);
        CHECK(contains(box, s, 1e-9));
        CHECK(contains(tri, sample_noise(tri, seed), 1e-9));
    }
    CHECK(sample_noise(box, 3) == sample_noise(box, 3));
}

TEST_CASE("collect with zero noise and zero input") {
    const TrueSystem sys{Mat{{0.5, 0.1}, {0, 0.3}}, Mat{{1}, {0}}, Mat{{1, 0}}};
    const NoiseModel quiet = box_noise(2, 1, 0.0, 0.0);
    const AgentDataset d = collect(sys, quiet, 5, VPolytope::point(Vec{0.0}), Vec{0, 0}, 1);
    CHECK(max_abs(d.x) == 0.0);
    CHECK(max_abs(d.x_plus) == 0.0);
    CHECK(max_abs(d.u) == 0.0);
    CHECK(max_abs(d.y) == 0.0);
    CHECK(d.x.cols() == 5);
}

TEST_CASE("collect satisfies the data equation") {
    const auto systems = testing::example_followers();
    for (const TrueSystem& sys : systems) {
        const std::size_t n = sys.n();
        CollectOptions opts;
        opts.restart_bound = 100.0;
        const AgentDataset clean = collect(sys, box_noise(n, 1, 0.0, 0.0), 20, kInputs, Vec(n, 0.5), 7, opts);
        CHECK(max_abs(clean.x_plus - sys.a * clean.x - sys.b * clean.u) < 1e-12 * (1.0 + max_abs(clean.x_plus)));

        const NoiseModel noise = box_noise(n, 1, 0.01, 0.01);
        const AgentDataset d = collect(sys, noise, 20, kInputs, Vec(n, 0.5), 7, opts);
        REQUIRE(d.w.has_value());
        const double scale = 1.0 + max_abs(d.x_plus);
        CHECK(max_abs(d.x_plus - *d.w - sys.a * d.x - sys.b * d.u) < 1e-12 * scale);
        CHECK(max_abs(d.y - *d.v - sys.c * d.x) < 1e-12 * scale);
        for (std::size_t t = 0; t < d.rho; ++t) {
            CHECK(contains(noise.process, d.w->col(t), 1e-12));
            CHECK(contains(noise.measurement, d.v->col(t), 1e-12));
        }
        CHECK(rank_ok(d));
    }
}

TEST_CASE("collect of the scalar example is column-wise consistent") {
    const TrueSystem sys{Mat{{2}}, Mat{{3}}, Mat{{1}}};
    const AgentDataset d = collect(sys, box_noise(1, 1, 0.01, 0.01), 20, kInputs, Vec{0.1}, 3);
    for (std::size_t t = 0; t < 20; ++t)
        CHECK(d.x_plus(0, t) == doctest::Approx(2 * d.x(0, t) + 3 * d.u(0, t) + (*d.w)(0, t)).epsilon(1e-12));
    for (std::size_t t = 0; t + 1 < 20; ++t) CHECK(d.x(0, t + 1) == d.x_plus(0, t));
}

TEST_CASE("collect is reproducible and diverges loudly") {
    const auto systems = testing::example_followers();
    const TrueSystem& f5 = systems[4];
    CollectOptions opts;
    opts.restart_bound = 100.0;
    const NoiseModel noise = box_noise(3, 1, 0.01, 0.01);
    const AgentDataset a = collect(f5, noise, 20, kInputs, Vec(3, 0.5), 11, opts);
    const AgentDataset b = collect(f5, noise, 20, kInputs, Vec(3, 0.5), 11, opts);
    CHECK(a.x == b.x);
    CHECK(a.x_plus == b.x_plus);
    CHECK(a.u == b.u);
    CHECK(a.y == b.y);
    CHECK(a.restarts > 0);

    // Without restarts the unstable follower leaves the representable range.
    try {
        collect(f5, noise, 40, kInputs, Vec(3, 0.5), 11);
        FAIL("expected divergence");
    } catch (const Error& e) {
        CHECK(e.kind() == ErrorKind::Divergence);
    }
}

TEST_CASE("rank check") {
    const auto systems = testing::example_followers();
    CollectOptions opts;
    opts.restart_bound = 100.0;
    const AgentDataset rich = collect(systems[5], box_noise(3, 1, 0.01, 0.01), 20, kInputs, Vec(3, 0.5), 2, opts);
    CHECK(rank_ok(rich));

    AgentDataset dup = rich;
    dup.u = dup.x.block(0, 0, 1, dup.rho);
    CHECK_FALSE(rank_ok(dup));

    const AgentDataset short_run = collect(systems[5], box_noise(3, 1, 0.01, 0.01), 3, kInputs, Vec(3, 0.5), 2, opts);
    CHECK_FALSE(rank_ok(short_run));
}
