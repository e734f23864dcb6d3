#include <cmath>
#include <random>

#include "doctest.h"
#include "example_systems.hpp"
#include "polysync/reach.hpp"
#include "polysync/synthesis.hpp"
#include "test_util.hpp"

using namespace polysync;

namespace {

VPolytope interval(double lo, double hi) { return VPolytope({Vec{lo}, Vec{hi}}); }

MatrixPolytope scalar_mats(std::initializer_list<double> vals) {
    std::vector<Mat> v;
    for (double x : vals) v.push_back(Mat{{x}});
    return MatrixPolytope(v);
}

double upper(const VPolytope& p) { return bounding_box(p).hi[0]; }
double lower(const VPolytope& p) { return bounding_box(p).lo[0]; }

// Rotation conjugated by a non-orthogonal basis: unit poles, kappa > 1.
Mat skewed_rotation(double theta, const Mat& basis) {
    const Mat r{{std::cos(theta), -std::sin(theta)}, {std::sin(theta), std::cos(theta)}};
    return basis * r * inverse(basis);
}

double cond2(const Mat& m) {
    const Svd s = svd(m);
    return s.s.front() / s.s.back();
}

} // namespace

TEST_CASE("leader orbit box for the rotation") {
    const LeaderModel leader{testing::leader_s(), testing::leader_h()};
    const VPolytope p = leader_state_polytope(leader, Vec{1.0, 0.0});
    const Bounds b = bounding_box(p);
    for (std::size_t i = 0; i < 2; ++i) {
        CHECK(b.hi[i] == doctest::Approx(1.0).epsilon(1e-10));
        CHECK(b.lo[i] == doctest::Approx(-1.0).epsilon(1e-10));
    }
    const VPolytope zero = leader_state_polytope(leader, Vec{0.0, 0.0});
    CHECK(zero.size() == 1);
    CHECK(norm_inf(zero.vertex(0)) == 0.0);
}

TEST_CASE("leader orbit box for a skewed rotation contains the orbit") {
    const Mat basis{{1.0, 0.7}, {0.2, 1.5}};
    const Mat s = skewed_rotation(0.37, basis);
    const double kappa = leader_orbit_gain(s);
    CHECK(kappa > 1.0);
    // The complex eigenbasis can be better conditioned than this real one.
    CHECK(kappa <= cond2(basis) + 1e-9);
    const LeaderModel leader{s, Mat{{1.0, 0.0}}};
    const Vec x0{0.4, -0.9};
    const VPolytope box = leader_state_polytope(leader, x0);
    CHECK(bounding_box(box).hi[0] <= kappa * norm2(x0) * (1.0 + 1e-9));
    Vec x = x0;
    for (int t = 0; t < 500; ++t) {
        CHECK(contains(box, x, 0.0));
        x = s * x;
    }
}

TEST_CASE("leader orbit rejects a leader without unit poles") {
    CHECK_THROWS_AS(leader_state_polytope({Mat{{0.9, 0}, {0, 1.0}}, Mat{{1, 1}}}, Vec{1.0, 0.0}), Error);
}

TEST_CASE("disturbance set at zero noise") {
    const MatrixPolytope zero_d({Mat(2, 2)});
    const VPolytope px0 = box_polytope(Vec{1.0, 1.0});
    const Mat pi = Mat::identity(2);
    const Mat f{{0.5, 0.0}, {0.0, 0.5}};
    const VPolytope p0 = disturbance_polytope(zero_d, px0, pi, f, 0.5, Vec{0.0, 0.0}, Vec{0.0, 0.0});
    CHECK(bounding_box(p0).hi == Vec{0.0, 0.0});
    CHECK(bounding_box(p0).lo == Vec{0.0, 0.0});
    const VPolytope pz = disturbance_polytope(zero_d, px0, pi, f, 0.5, Vec{0.1, 0.2}, Vec{1.0, -2.0});
    const Bounds b = bounding_box(pz);
    CHECK(b.lo == b.hi);
    CHECK(b.lo[0] == doctest::Approx(0.25));
    CHECK(b.lo[1] == doctest::Approx(-0.5));
}

TEST_CASE("disturbance set respects the triangle bound") {
    const auto sys = testing::example_followers()[1];
    CollectOptions opts;
    opts.restart_bound = 100.0;
    const NoiseModel noise = box_noise(2, 1, 0.01, 0.01);
    const AgentDataset d = collect(sys, noise, 20, box_polytope(Vec{1.0}), Vec{0.5, 0.5}, 3, opts);
    const ConsistencySet cs = build_consistency_set(d, noise);
    const RegulatorFit fit = solve_fit(cs, testing::leader_s(), testing::leader_h());
    const Topology t = chain_topology(6);
    const Mat f = design_f(t, testing::leader_s()).f;
    const VPolytope px0 = box_polytope(Vec{1.0, 1.0});
    const Vec delta{0.2, -0.1}, z{0.3, 0.4};
    const VPolytope p = disturbance_polytope(fit, px0, fit.pi, f, t, 1, delta, z);
    const double coupling = norm2(scale(fit.pi * (f * z), 0.5));
    double d1 = 0.0;
    for (const Mat& m : fit.delta1_poly.vertices()) d1 = std::max(d1, norm_two(m));
    CHECK(max_vertex_norm(p, NormKind::Two) <= d1 * (max_vertex_norm(px0, NormKind::Two) + norm2(delta)) + coupling + 1e-12);
    CHECK_THROWS_AS(disturbance_polytope(fit, px0, fit.pi, f, t, 6, delta, z), Error);
}

TEST_CASE("recursion with a zero map collapses") {
    const MatrixPolytope zero({Mat(2, 2)});
    const VPolytope dist = VPolytope::point(Vec{0.0, 0.0});
    const std::vector<VPolytope> ds(3, dist);
    const XiSeries s = xi_bound_recursion(zero, box_polytope(Vec{3.0, 1.0}), ds, 3);
    REQUIRE(s.sets.size() == 4);
    CHECK(s.sets[1].size() == 1);
    CHECK(norm_inf(s.sets[1].vertex(0)) == 0.0);
}

TEST_CASE("scalar contraction without disturbance") {
    const std::vector<VPolytope> ds(20, VPolytope::point(Vec{0.0}));
    const XiSeries s = xi_bound_recursion(scalar_mats({0.5}), interval(-1, 1), ds, 20);
    for (std::size_t t = 0; t <= 20; ++t) {
        CHECK(upper(s.sets[t]) == doctest::Approx(std::pow(0.5, t)));
        CHECK(lower(s.sets[t]) == doctest::Approx(-std::pow(0.5, t)));
    }
    CHECK_FALSE(s.over_approximated);
}

TEST_CASE("scalar contraction with a constant disturbance converges to the geometric limit") {
    const std::vector<VPolytope> ds(80, interval(-0.1, 0.1));
    const XiSeries s = xi_bound_recursion(scalar_mats({0.5}), VPolytope::point(Vec{0.0}), ds, 80);
    CHECK(upper(s.sets[80]) == doctest::Approx(0.2).epsilon(1e-12));
    CHECK(lower(s.sets[80]) == doctest::Approx(-0.2).epsilon(1e-12));
    for (std::size_t t = 1; t <= 80; ++t) CHECK(upper(s.sets[t]) >= upper(s.sets[t - 1]));
}

TEST_CASE("recursion with several vertex maps uses the worst one") {
    const std::vector<VPolytope> ds(40, interval(-0.1, 0.1));
    const XiSeries s = xi_bound_recursion(scalar_mats({-0.5, 0.2}), VPolytope::point(Vec{0.0}), ds, 40);
    CHECK(upper(s.sets[40]) == doctest::Approx(0.2).epsilon(1e-9));
}

TEST_CASE("recursion input validation") {
    const std::vector<VPolytope> ds(2, interval(-0.1, 0.1));
    CHECK_THROWS_AS(xi_bound_recursion(scalar_mats({0.5}), interval(-1, 1), ds, 3), Error);
}

// Random Schur vertex sets and disturbances; trajectories driven by random
// members of both must stay inside the computed sets.
TEST_CASE("containment property over random trajectories") {
    for (std::uint64_t seed = 1; seed <= 5; ++seed) {
        std::mt19937_64 rng(seed);
        std::uniform_real_distribution<double> u(-1.0, 1.0);
        std::exponential_distribution<double> expo(1.0);
        const std::size_t n = 2 + seed % 2;
        std::vector<Mat> qs;
        for (int k = 0; k < 4; ++k) {
            Mat q = testing::random_mat(n, n, rng);
            qs.push_back(q * (0.8 / std::max(norm_two(q), 1e-9)));
        }
        const MatrixPolytope mzk(qs);
        std::vector<VPolytope> ds;
        for (std::size_t t = 0; t < 30; ++t) {
            Vec c(n), h(n);
            for (std::size_t i = 0; i < n; ++i) {
                c[i] = 0.3 * u(rng);
                h[i] = 0.05 + 0.05 * std::abs(u(rng));
            }
            ds.push_back(add_point(box_polytope(h), c));
        }
        const VPolytope p0 = box_polytope(Vec(n, 0.5));
        for (std::size_t cap : {std::size_t{4}, std::size_t{64}}) {
            const XiSeries s = xi_bound_recursion(mzk, p0, ds, 30, cap);
            for (int trial = 0; trial < 5; ++trial) {
                Vec x = sample_in_hull(p0, rng);
                for (std::size_t t = 0; t < 30; ++t) {
                    CHECK(contains(s.sets[t], x, 1e-9));
                    Vec w(mzk.size());
                    double total = 0.0;
                    for (double& wk : w) total += (wk = expo(rng));
                    Mat q(n, n);
                    for (std::size_t k = 0; k < mzk.size(); ++k) q += mzk.vertex(k) * (w[k] / total);
                    x = add(q * x, sample_in_hull(ds[t], rng));
                }
                CHECK(contains(s.sets[30], x, 1e-9));
            }
        }
    }
}

TEST_CASE("box fallback bounds dominate the pruned series") {
    std::mt19937_64 rng(11);
    std::vector<Mat> qs;
    for (int k = 0; k < 3; ++k) {
        Mat q = testing::random_mat(2, 2, rng);
        qs.push_back(q * (0.7 / norm_two(q)));
    }
    const MatrixPolytope mzk(qs);
    const std::vector<VPolytope> ds(25, box_polytope(Vec{0.05, 0.1}));
    const XiSeries tight = xi_bound_recursion(mzk, box_polytope(Vec{1.0, 1.0}), ds, 25, 64);
    const XiSeries boxed = xi_bound_recursion(mzk, box_polytope(Vec{1.0, 1.0}), ds, 25, 1);
    CHECK(boxed.over_approximated);
    const MatrixPolytope c({Mat{{1.0, -0.5}}, Mat{{0.3, 1.0}}});
    const MatrixPolytope d2({Mat(1, 2)});
    const VPolytope px0 = VPolytope::point(Vec{0.0, 0.0});
    const std::vector<Vec> delta(26, Vec{0.0, 0.0});
    const Vec rt = error_bound_series(c, tight.sets, d2, px0, Mat::identity(2), delta);
    const Vec rb = error_bound_series(c, boxed.sets, d2, px0, Mat::identity(2), delta);
    for (std::size_t t = 0; t <= 25; ++t) CHECK(rb[t] >= rt[t] - 1e-12);
}

TEST_CASE("larger disturbances give pointwise larger bounds") {
    const MatrixPolytope mzk = scalar_mats({0.6, -0.3});
    const std::vector<VPolytope> small(30, interval(-0.01, 0.02));
    const std::vector<VPolytope> large(30, interval(-0.1, 0.2));
    const XiSeries a = xi_bound_recursion(mzk, interval(-1, 1), small, 30);
    const XiSeries b = xi_bound_recursion(mzk, interval(-1, 1), large, 30);
    for (std::size_t t = 0; t <= 30; ++t) {
        CHECK(upper(b.sets[t]) >= upper(a.sets[t]));
        CHECK(lower(b.sets[t]) <= lower(a.sets[t]));
    }
}

TEST_CASE("zero-noise bounds decay geometrically") {
    const auto sys = testing::example_followers()[2];
    CollectOptions opts;
    opts.restart_bound = 100.0;
    const NoiseModel noise = box_noise(2, 1, 0.0, 0.0);
    const AgentDataset d = collect(sys, noise, 20, box_polytope(Vec{1.0}), Vec{0.5, 0.5}, 9, opts);
    const ConsistencySet cs = build_consistency_set(d, noise);
    const RegulatorFit fit = solve_fit(cs, testing::leader_s(), testing::leader_h());
    const SynthesisResult syn = synthesize_k(d, noise);
    ReachInputs in;
    in.closed_loop = closed_loop_polytope(cs, syn.k);
    in.c_poly = cs.c_poly;
    in.delta1 = fit.delta1_poly;
    in.delta2 = fit.delta2_poly;
    in.pi = fit.pi;
    in.f = Mat(2, 2);
    in.lyapunov_p = syn.lyapunov_p;
    in.px0 = box_polytope(Vec{1.0, 1.0});
    in.xi0 = {0.7, -0.4};
    in.horizon = 60;
    in.delta.assign(61, Vec{0.0, 0.0});
    in.z.assign(60, Vec{0.0, 0.0});
    const BoundSeries bs = compute_bounds(in);
    CHECK(bs.asymptotic.beta < 1.0);
    CHECK(bs.asymptotic.value < 1e-9);
    CHECK(bs.r[0] > 0.1);
    CHECK(bs.r[60] < 1e-8);
    // One closed loop, so the sets are the exact orbit Q^t xi0.
    double c_gain = 0.0;
    for (const Mat& c : cs.c_poly.vertices()) c_gain = std::max(c_gain, norm_two(c));
    for (std::size_t t = 0; t <= 60; ++t)
        CHECK(bs.r[t] <= c_gain * bs.asymptotic.mu * std::pow(bs.asymptotic.beta, static_cast<double>(t)) * norm2(in.xi0) + 1e-9);
}

namespace {

struct PinnedAgent {
    TrueSystem sys;
    AgentDataset data;
    NoiseModel noise;
    SynthesisResult syn;
    RegulatorFit fit;
};

PinnedAgent pinned_agent(std::size_t which, double level, std::uint64_t seed) {
    PinnedAgent a;
    a.sys = testing::example_followers()[which];
    a.noise = box_noise(a.sys.n(), 1, level, level);
    CollectOptions opts;
    opts.restart_bound = 100.0;
    a.data = collect(a.sys, a.noise, 20, box_polytope(Vec{1.0}), Vec(a.sys.n(), 0.5), seed, opts);
    a.syn = synthesize_k(a.data, a.noise);
    a.fit = solve_fit(build_consistency_set(a.data, a.noise), testing::leader_s(), testing::leader_h());
    return a;
}

Mat realised(const NoiseAffineMatrix& m, const Mat& w) { return m.nominal - w * m.rows; }

} // namespace

TEST_CASE("exact sets contain the true matrices") {
    const Mat s = testing::leader_s();
    const Mat h = testing::leader_h();
    for (std::size_t which : {1u, 4u}) {
        const PinnedAgent a = pinned_agent(which, 0.05, 3 + which);
        REQUIRE(a.data.w.has_value());
        const ExactSets e = exact_sets(a.data, a.noise, a.syn.k, s, h, a.fit.pi, a.fit.gamma);
        const Mat& w = *a.data.w;
        const Mat& v = *a.data.v;
        for (std::size_t i = 0; i < w.rows(); ++i)
            for (std::size_t m = 0; m < w.cols(); ++m) CHECK(std::abs(w(i, m)) <= e.closed_loop.w_abs[i] + 1e-15);
        const Mat& A = a.sys.a;
        const Mat& B = a.sys.b;
        const Mat& C = a.sys.c;
        CHECK(max_abs(realised(e.closed_loop, w) - (A + B * a.syn.k)) < 1e-9);
        CHECK(max_abs(realised(e.delta1, w) - (A * a.fit.pi + B * a.fit.gamma - a.fit.pi * s)) < 1e-9);
        CHECK(max_abs(realised(e.c, v) - C) < 1e-9);
        CHECK(max_abs(realised(e.delta2, v) - (C * a.fit.pi - h)) < 1e-9);
        CHECK(max_abs(realised(e.c_pi, v) - C * a.fit.pi) < 1e-9);
    }
}

TEST_CASE("noise-affine image bound is sound") {
    std::mt19937_64 rng(17);
    std::uniform_real_distribution<double> u(-1.0, 1.0);
    NoiseAffineMatrix m{testing::random_mat(2, 3, rng), testing::random_mat(6, 3, rng), Vec{0.1, 0.3}};
    const Zonotope z{Vec{0.5, -0.2, 0.1}, testing::random_mat(3, 4, rng)};
    const Zonotope img = image_bound(m, z);
    const Vec out = output_bound(m, z);
    REQUIRE(out.size() == 2);
    for (int trial = 0; trial < 300; ++trial) {
        Mat w(2, 6);
        for (std::size_t i = 0; i < 2; ++i)
            for (std::size_t k = 0; k < 6; ++k) w(i, k) = m.w_abs[i] * (trial % 3 == 0 ? (u(rng) < 0 ? -1.0 : 1.0) : u(rng));
        Vec beta(z.order());
        for (double& b : beta) b = trial % 2 == 0 ? (u(rng) < 0 ? -1.0 : 1.0) : u(rng);
        const Vec x = add(z.center, z.generators * beta);
        const Vec y = realised(m, w) * x;
        CHECK(contains(img, y, 1e-9));
        for (std::size_t i = 0; i < 2; ++i) CHECK(std::abs(y[i]) <= out[i] + 1e-12);
    }
    // Zero noise: the image is exactly the mapped zonotope.
    m.w_abs = Vec{0.0, 0.0};
    const Bounds a = interval_hull(image_bound(m, z));
    const Bounds b = interval_hull(linear_map(m.nominal, z));
    for (std::size_t i = 0; i < 2; ++i) {
        CHECK(a.lo[i] == doctest::Approx(b.lo[i]));
        CHECK(a.hi[i] == doctest::Approx(b.hi[i]));
    }
}

TEST_CASE("exact bounds contain the simulated error of a pinned follower") {
    const Mat s = testing::leader_s();
    const Mat h = testing::leader_h();
    const Topology topo = chain_topology(1);
    const ObserverDesign od = design_f(topo, s);
    for (double level : {0.0, 0.01, 0.05}) {
        const PinnedAgent a = pinned_agent(1, level, 11);
        SimSetup st{LeaderModel{s, h}, {a.sys}, {{a.syn.k, a.fit.pi, a.fit.gamma}}, od.f, topo,
                    Vec{0.6, -0.4}, {Vec{0.3, -0.9}}, {Vec{-0.5, 0.2}}};
        const std::size_t horizon = 120;
        const SimResult sim = run_closed_loop(st, horizon);
        ExactReachInputs in;
        in.sets = exact_sets(a.data, a.noise, a.syn.k, s, h, a.fit.pi, a.fit.gamma);
        in.pi = a.fit.pi;
        in.f = od.f;
        in.coupling_scale = 0.5;
        in.px0 = leader_state_polytope(st.leader, st.x0_leader);
        in.xi0 = sim.agents[0].xi[0];
        in.delta = sim.agents[0].delta;
        in.z = sim.agents[0].z;
        in.horizon = horizon;
        const ExactBoundSeries b = compute_exact_bounds(in);
        REQUIRE(b.r.size() == horizon + 1);
        for (std::size_t t = 0; t <= horizon; ++t) {
            CHECK(norm_inf(sim.agents[0].e[t]) <= b.r[t]);
            if (t % 20 == 0) CHECK(contains(b.xi[t], sim.agents[0].xi[t], 1e-9));
        }
        if (level == 0.0) {
            CHECK(b.r[horizon] < 1e-6);
            CHECK(b.asymptotic < 1e-9);
        } else {
            CHECK(std::isfinite(b.asymptotic));
            CHECK(b.asymptotic > 0.0);
        }
    }
}

TEST_CASE("exact bound inputs are validated") {
    ExactReachInputs in;
    in.horizon = 5;
    CHECK_THROWS_AS(compute_exact_bounds(in), Error);
}
