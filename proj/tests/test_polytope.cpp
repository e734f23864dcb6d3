#include <cmath>
#include <random>

#include "doctest.h"
#include "polysync/polytope.hpp"
#include "test_util.hpp"

using namespace polysync;
using polysync::testing::random_mat;

namespace {

VPolytope square(double h) { return box_polytope(Vec{h, h}); }

Vec random_weights(std::size_t k, std::mt19937_64& rng) {
    std::exponential_distribution<double> e(1.0);
    Vec w(k);
    double s = 0.0;
    for (auto& x : w) s += (x = e(rng));
    for (auto& x : w) x /= s;
    return w;
}

} // namespace

TEST_CASE("box polytope enumerates sign patterns") {
    const VPolytope b = square(0.01);
    REQUIRE(b.size() == 4);
    CHECK(b.vertex(0) == Vec{0.01, 0.01});
    CHECK(b.vertex(1) == Vec{0.01, -0.01});
    CHECK(b.vertex(2) == Vec{-0.01, 0.01});
    CHECK(b.vertex(3) == Vec{-0.01, -0.01});

    const VPolytope seg = box_polytope(Vec{0.01});
    REQUIRE(seg.size() == 2);
    CHECK(seg.vertex(0)[0] == 0.01);
    CHECK(seg.vertex(1)[0] == -0.01);

    const VPolytope cube = box_polytope(Vec{1, 2, 3});
    CHECK(cube.size() == 8);
    CHECK(cube.vertex(0) == Vec{1, 2, 3});
    CHECK(max_vertex_norm(cube, NormKind::Frobenius) == doctest::Approx(std::sqrt(14.0)));
}

TEST_CASE("box polytope rejects bad input") {
    CHECK_THROWS_AS(box_polytope(Vec(13, 1.0)), Error);
    try {
        box_polytope(Vec(13, 1.0));
    } catch (const Error& e) {
        CHECK(e.kind() == ErrorKind::Size);
    }
    CHECK_THROWS_AS(box_polytope(Vec{1.0, 0.0}), Error);
    CHECK_THROWS_AS(box_polytope(Vec{}), Error);
}

TEST_CASE("noise matrix polytope places one column per vertex") {
    const MatrixPolytope mp = noise_matrix_polytope(box_polytope(Vec{0.01}), 2);
    REQUIRE(mp.size() == 4);
    CHECK(mp.vertex(0) == Mat{{0.01, 0.0}});
    CHECK(mp.vertex(1) == Mat{{0.0, 0.01}});
    CHECK(mp.vertex(2) == Mat{{-0.01, 0.0}});
    CHECK(mp.vertex(3) == Mat{{0.0, -0.01}});

    const MatrixPolytope zero = noise_matrix_polytope(VPolytope::point(Vec{0.0}), 5);
    REQUIRE(zero.size() == 5);
    for (const Mat& v : zero.vertices()) CHECK(max_abs(v) == 0.0);

    const MatrixPolytope one = noise_matrix_polytope(VPolytope::point(Vec{1.0, 1.0}), 3);
    CHECK(one.vertex(1) == Mat{{0, 1, 0}, {0, 1, 0}});
}

TEST_CASE("noise matrix polytope has gamma*rho vertices with one nonzero column") {
    for (std::size_t rho : {1u, 3u, 20u}) {
        const MatrixPolytope mp = noise_matrix_polytope(box_polytope(Vec{0.1, 0.2, 0.3}), rho);
        REQUIRE(mp.size() == 8 * rho);
        for (const Mat& v : mp.vertices()) {
            int nonzero_cols = 0;
            for (std::size_t c = 0; c < v.cols(); ++c)
                if (norm_inf(v.col(c)) > 0.0) ++nonzero_cols;
            CHECK(nonzero_cols == 1);
        }
    }
    const MatrixPolytope mp = noise_matrix_polytope(box_polytope(Vec{0.01}), 20);
    CHECK(max_vertex_norm(mp, NormKind::Frobenius) == doctest::Approx(0.01));
}

TEST_CASE("scaled noise polytope contains every column-wise admissible matrix") {
    std::mt19937_64 rng(7);
    const VPolytope p = square(0.01);
    const std::size_t rho = 4;
    const MatrixPolytope verbatim = noise_matrix_polytope(p, rho);
    const MatrixPolytope scaled = noise_matrix_polytope(p, rho, NoiseMode::Scaled);
    // Every column at the same corner: admissible, outside the verbatim hull.
    Mat corner(2, rho, 0.01);
    CHECK_FALSE(contains(verbatim, corner));
    CHECK(contains(scaled, corner));
    for (int trial = 0; trial < 20; ++trial) {
        Mat w = random_mat(2, rho, rng, -0.01, 0.01);
        CHECK(contains(scaled, w));
    }
}

TEST_CASE("map matrix polytope") {
    std::mt19937_64 rng(11);
    const Mat xp = random_mat(2, 20, rng);
    const Mat pinv_d = random_mat(20, 3, rng);
    const MatrixPolytope single(std::vector<Mat>{Mat(2, 20)});
    const MatrixPolytope img = map_matrix_polytope(single, pinv_d, Mat::identity(2), xp * pinv_d);
    REQUIRE(img.size() == 1);
    CHECK(testing::max_abs_diff(img.vertex(0), xp * pinv_d) < 1e-14);

    const MatrixPolytope mp = noise_matrix_polytope(square(0.5), 20);
    const MatrixPolytope same = map_matrix_polytope(mp, Mat::identity(20), Mat::identity(2), Mat(2, 20));
    for (std::size_t k = 0; k < mp.size(); ++k) CHECK(same.vertex(k) == mp.vertex(k));

    const MatrixPolytope four(std::vector<Mat>(mp.vertices().begin(), mp.vertices().begin() + 4));
    const MatrixPolytope shaped = map_matrix_polytope(four, pinv_d, Mat::identity(2), Mat(2, 3));
    CHECK(shaped.size() == 4);
    CHECK(shaped.rows() == 2);
    CHECK(shaped.cols() == 3);

    CHECK_THROWS_AS(map_matrix_polytope(four, pinv_d, Mat::identity(3), Mat(2, 3)), Error);
    CHECK_THROWS_AS(map_matrix_polytope(four, pinv_d, Mat::identity(2), Mat(2, 4)), Error);
}

TEST_CASE("map commutes with membership and respects the norm bound") {
    std::mt19937_64 rng(3);
    std::vector<Mat> verts;
    for (int k = 0; k < 6; ++k) verts.push_back(random_mat(2, 5, rng));
    const MatrixPolytope mp(verts);
    const Mat left = random_mat(3, 2, rng), right = random_mat(5, 4, rng), shift = random_mat(3, 4, rng);
    const MatrixPolytope img = map_matrix_polytope(mp, right, left, shift);
    for (int trial = 0; trial < 10; ++trial) {
        const Vec beta = random_weights(verts.size(), rng);
        Mat v(2, 5);
        for (std::size_t k = 0; k < verts.size(); ++k) v += beta[k] * verts[k];
        CHECK(contains(mp, v));
        CHECK(contains(img, left * v * right + shift));
    }
    const MatrixPolytope rmap = map_matrix_polytope(mp, right, Mat::identity(2), Mat(2, 4));
    for (NormKind nk : {NormKind::Frobenius, NormKind::Two})
        CHECK(max_vertex_norm(rmap, nk) <= max_vertex_norm(mp, nk) * norm_two(right) + 1e-9);
}

TEST_CASE("minkowski sum and add point") {
    const VPolytope origin = VPolytope::point(Vec{0.0, 0.0});
    const VPolytope b = square(0.3);
    const VPolytope s0 = minkowski_sum(origin, b);
    REQUIRE(s0.size() == b.size());
    for (std::size_t k = 0; k < b.size(); ++k) CHECK(s0.vertex(k) == b.vertex(k));

    const VPolytope seg = minkowski_sum(box_polytope(Vec{1.0}), box_polytope(Vec{2.0}));
    const Bounds bb = bounding_box(seg);
    CHECK(bb.lo[0] == -3.0);
    CHECK(bb.hi[0] == 3.0);

    const VPolytope sq = minkowski_sum(square(1.0), square(1.0));
    CHECK(max_vertex_norm(sq, NormKind::Inf) == 2.0);
    CHECK(max_vertex_norm(sq, NormKind::Frobenius) == doctest::Approx(2.0 * std::sqrt(2.0)));

    const VPolytope shifted = add_point(b, Vec{1.0, -1.0});
    CHECK(shifted.vertex(0) == Vec{1.3, -0.7});
    CHECK_THROWS_AS(minkowski_sum(b, box_polytope(Vec{1.0})), Error);
    CHECK_THROWS_AS(add_point(b, Vec{1.0}), Error);
}

TEST_CASE("minkowski sum norm is subadditive") {
    std::mt19937_64 rng(5);
    std::uniform_real_distribution<double> u(-2, 2);
    for (int trial = 0; trial < 20; ++trial) {
        std::vector<Vec> a, b;
        for (int k = 0; k < 5; ++k) a.push_back({u(rng), u(rng), u(rng)});
        for (int k = 0; k < 4; ++k) b.push_back({u(rng), u(rng), u(rng)});
        const VPolytope pa(a), pb(b);
        const VPolytope s = minkowski_sum(pa, pb);
        for (NormKind nk : {NormKind::Frobenius, NormKind::Inf})
            CHECK(max_vertex_norm(s, nk) <= max_vertex_norm(pa, nk) + max_vertex_norm(pb, nk) + 1e-12);
    }
}

TEST_CASE("max vertex norm") {
    CHECK(max_vertex_norm(square(0.01), NormKind::Frobenius) == doctest::Approx(0.01 * std::sqrt(2.0)));
    CHECK(max_vertex_norm(VPolytope::point(Vec{0.0, 0.0}), NormKind::Frobenius) == 0.0);
    const MatrixPolytope mp(std::vector<Mat>{Mat{{3, 0}, {0, 4}}});
    CHECK(max_vertex_norm(mp, NormKind::Frobenius) == doctest::Approx(5.0));
    CHECK(max_vertex_norm(mp, NormKind::Two) == doctest::Approx(4.0));
    CHECK(max_vertex_norm(mp, NormKind::Inf) == doctest::Approx(4.0));
}

TEST_CASE("membership") {
    std::mt19937_64 rng(9);
    std::uniform_real_distribution<double> u(-1, 1);
    std::vector<Vec> pts;
    for (int k = 0; k < 7; ++k) pts.push_back({u(rng), u(rng), u(rng)});
    const VPolytope p(pts);
    Vec centroid(3, 0.0);
    for (const Vec& v : pts) centroid = add(centroid, scale(v, 1.0 / 7.0));
    CHECK(contains(p, centroid));
    for (const Vec& v : pts) CHECK(contains(p, v, 0.0));

    const VPolytope b = box_polytope(Vec{1.0, 2.0, 3.0});
    CHECK_FALSE(contains(b, Vec{2.0, 4.0, 6.0}));
    CHECK(contains(b, Vec{0.9, -1.9, 2.9}));
    CHECK_FALSE(contains(b, Vec{1.0 + 1e-6, 0.0, 0.0}));
    CHECK(contains(b, Vec{1.0 + 1e-9, 0.0, 0.0}));

    // A point inside the bounding box of a triangle but outside the triangle.
    const VPolytope tri(std::vector<Vec>{{0, 0}, {1, 0}, {0, 1}});
    CHECK_FALSE(contains(tri, Vec{0.8, 0.8}));
    CHECK(contains(tri, Vec{0.4, 0.4}));
    const auto w = hull_weights(tri, Vec{0.25, 0.5});
    REQUIRE(w.has_value());
    double s = 0.0;
    for (double x : *w) {
        CHECK(x >= -1e-12);
        s += x;
    }
    CHECK(s == doctest::Approx(1.0));
}

TEST_CASE("random convex combinations are members") {
    std::mt19937_64 rng(13);
    std::uniform_real_distribution<double> u(-1, 1);
    for (int trial = 0; trial < 25; ++trial) {
        std::vector<Vec> pts;
        for (int k = 0; k < 9; ++k) pts.push_back({u(rng), u(rng), u(rng), u(rng)});
        const VPolytope p(pts);
        const Vec beta = random_weights(pts.size(), rng);
        Vec x(4, 0.0);
        for (std::size_t k = 0; k < pts.size(); ++k) x = add(x, scale(pts[k], beta[k]));
        CHECK(contains(p, x));
    }
}

TEST_CASE("prune keeps the hull") {
    std::vector<Vec> pts = square(1.0).vertices();
    pts.push_back({0.0, 0.0});
    pts.push_back({0.5, -0.2});
    pts.push_back({1.0, 1.0});
    const PruneResult r = prune(VPolytope(pts));
    CHECK_FALSE(r.over_approximated);
    CHECK(r.polytope.size() == 4);
    for (const Vec& v : pts) CHECK(contains(r.polytope, v));

    // Circle points: all extreme, more than the cap, so the box takes over.
    std::vector<Vec> circle;
    for (int k = 0; k < 40; ++k) circle.push_back({std::cos(k * 0.157), std::sin(k * 0.157)});
    const PruneResult capped = prune(VPolytope(circle), 16);
    CHECK(capped.over_approximated);
    CHECK(capped.polytope.size() == 4);
    for (const Vec& v : circle) CHECK(contains(capped.polytope, v));

    const PruneResult line = prune(VPolytope(std::vector<Vec>{{1.0}, {-3.0}, {0.5}, {2.0}}));
    CHECK_FALSE(line.over_approximated);
    CHECK(line.polytope.size() == 2);
}

namespace {

Zonotope random_zonotope(std::size_t n, std::size_t m, std::mt19937_64& rng) {
    Zonotope z;
    z.center = random_mat(n, 1, rng).col(0);
    z.generators = random_mat(n, m, rng);
    return z;
}

Vec zonotope_sample(const Zonotope& z, std::mt19937_64& rng, bool corner = false) {
    std::uniform_real_distribution<double> u(-1.0, 1.0);
    Vec beta(z.order());
    for (double& b : beta) b = corner ? (u(rng) < 0 ? -1.0 : 1.0) : u(rng);
    return add(z.center, z.generators * beta);
}

} // namespace

TEST_CASE("zonotope box and interval hull") {
    const Bounds b{Vec{-1.0, 2.0}, Vec{3.0, 2.0}};
    const Zonotope z = Zonotope::box(b);
    const Bounds h = interval_hull(z);
    CHECK(h.lo == Vec{-1.0, 2.0});
    CHECK(h.hi == Vec{3.0, 2.0});
    CHECK(contains(z, Vec{0.0, 2.0}));
    CHECK_FALSE(contains(z, Vec{0.0, 2.1}));
    CHECK(max_abs_image(z, Vec{1.0, 0.0}) == doctest::Approx(3.0));
    CHECK(max_abs_image(z, Vec{1.0, -1.0}) == doctest::Approx(3.0)); // x - 2 over [-1, 3]
    CHECK(Zonotope::point(Vec{1.0}).order() == 0);
}

TEST_CASE("zonotope linear map and sum") {
    std::mt19937_64 rng(21);
    const Zonotope a = random_zonotope(3, 4, rng);
    const Zonotope b = random_zonotope(3, 2, rng);
    const Mat m = random_mat(2, 3, rng);
    const Zonotope ma = linear_map(m, a);
    const Zonotope s = minkowski_sum(a, b);
    CHECK(ma.dim() == 2);
    CHECK(s.order() == 6);
    for (int trial = 0; trial < 30; ++trial) {
        const Vec p = zonotope_sample(a, rng);
        const Vec q = zonotope_sample(b, rng);
        CHECK(contains(ma, m * p));
        CHECK(contains(s, add(p, q)));
    }
    CHECK_THROWS_AS(minkowski_sum(a, random_zonotope(2, 1, rng)), Error);
    CHECK_THROWS_AS(linear_map(random_mat(2, 2, rng), a), Error);
}

TEST_CASE("support along a row matches the corner maximum") {
    std::mt19937_64 rng(5);
    const Zonotope z = random_zonotope(3, 5, rng);
    const Vec row{0.3, -1.0, 0.7};
    double best = 0.0;
    for (int trial = 0; trial < 2000; ++trial) best = std::max(best, std::abs(dot(row, zonotope_sample(z, rng, true))));
    const double bound = max_abs_image(z, row);
    CHECK(best <= bound + 1e-12);
    CHECK(best > 0.9 * bound);
}

TEST_CASE("order reduction returns a superset") {
    std::mt19937_64 rng(8);
    const Zonotope z = random_zonotope(2, 30, rng);
    const Zonotope r = reduce_order(z, 6);
    CHECK(r.order() <= 6);
    CHECK(reduce_order(z, 40).order() == 30);
    for (int trial = 0; trial < 200; ++trial) CHECK(contains(r, zonotope_sample(z, rng, trial % 2 == 0), 1e-9));
    const Bounds hz = interval_hull(z);
    const Bounds hr = interval_hull(r);
    for (std::size_t i = 0; i < 2; ++i) {
        CHECK(hr.lo[i] <= hz.lo[i] + 1e-12);
        CHECK(hr.hi[i] >= hz.hi[i] - 1e-12);
    }
}

TEST_CASE("zonotope membership rejects points outside") {
    // Unit square rotated by 45 degrees.
    const Zonotope z{Vec{0.0, 0.0}, Mat{{1.0, 1.0}, {1.0, -1.0}}};
    CHECK(contains(z, Vec{1.9, 0.0}));
    CHECK(contains(z, Vec{1.0, 1.0}));
    CHECK_FALSE(contains(z, Vec{1.5, 1.0}));
    CHECK_FALSE(contains(z, Vec{2.1, 0.0}));
    // Flat zonotope: a segment in the plane.
    const Zonotope seg{Vec{1.0, 1.0}, Mat{{1.0}, {2.0}}};
    CHECK(contains(seg, Vec{1.5, 2.0}));
    CHECK_FALSE(contains(seg, Vec{1.5, 2.1}));
}
