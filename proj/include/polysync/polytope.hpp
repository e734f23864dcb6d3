#pragma once

// Vertex-represented vector and matrix polytopes. No half-space form is ever
// built; membership is an LP over convex weights.

#include <cstddef>
#include <optional>
#include <vector>

#include "polysync/numkit.hpp"

namespace polysync {

class VPolytope {
public:
    VPolytope() = default;
    explicit VPolytope(std::vector<Vec> vertices);

    static VPolytope point(Vec x) { return VPolytope(std::vector<Vec>{std::move(x)}); }

    [[nodiscard]] std::size_t dim() const noexcept { return dim_; }
    [[nodiscard]] std::size_t size() const noexcept { return vertices_.size(); }
    [[nodiscard]] const std::vector<Vec>& vertices() const noexcept { return vertices_; }
    [[nodiscard]] const Vec& vertex(std::size_t k) const { return vertices_.at(k); }

private:
    std::size_t dim_ = 0;
    std::vector<Vec> vertices_;
};

class MatrixPolytope {
public:
    MatrixPolytope() = default;
    explicit MatrixPolytope(std::vector<Mat> vertices);

    [[nodiscard]] std::size_t rows() const noexcept { return rows_; }
    [[nodiscard]] std::size_t cols() const noexcept { return cols_; }
    [[nodiscard]] std::size_t size() const noexcept { return vertices_.size(); }
    [[nodiscard]] const std::vector<Mat>& vertices() const noexcept { return vertices_; }
    [[nodiscard]] const Mat& vertex(std::size_t k) const { return vertices_.at(k); }

private:
    std::size_t rows_ = 0;
    std::size_t cols_ = 0;
    std::vector<Mat> vertices_;
};

enum class NormKind { Frobenius, Two, Inf };

// How a vector noise polytope is lifted to a polytope of noise matrices.
//   Verbatim: one nonzero column per vertex, gamma_w * rho vertices in all.
//             Its hull does not contain every matrix whose columns lie in p.
//   Scaled:   the same vertices multiplied by rho; the hull then contains every
//             such matrix (each column is 1/rho of a scaled vertex average).
enum class NoiseMode { Verbatim, Scaled };

constexpr std::size_t kMaxBoxDim = 12;
constexpr double kMembershipTol = 1e-8;
constexpr std::size_t kDefaultVertexCap = 64;

VPolytope box_polytope(std::span<const double> half_widths);

MatrixPolytope noise_matrix_polytope(const VPolytope& p, std::size_t rho, NoiseMode mode = NoiseMode::Verbatim);

// { left * V * right + shift } vertex by vertex.
MatrixPolytope map_matrix_polytope(const MatrixPolytope& mp, const Mat& right, const Mat& left, const Mat& shift);

VPolytope minkowski_sum(const VPolytope& a, const VPolytope& b);
VPolytope add_point(const VPolytope& a, std::span<const double> x);

double max_vertex_norm(const VPolytope& p, NormKind norm);
double max_vertex_norm(const MatrixPolytope& p, NormKind norm);

bool contains(const VPolytope& p, std::span<const double> x, double tol = kMembershipTol);
bool contains(const MatrixPolytope& p, const Mat& x, double tol = kMembershipTol);

// Convex weights expressing x (up to tol in the max norm), if any.
std::optional<Vec> hull_weights(const VPolytope& p, std::span<const double> x, double tol = kMembershipTol);

struct Bounds {
    Vec lo;
    Vec hi;
};
Bounds bounding_box(const VPolytope& p);
VPolytope box_from_bounds(const Bounds& b);

struct PruneResult {
    VPolytope polytope;
    bool over_approximated = false; // true when the bounding box replaced the hull
};

// Drops vertices that are convex combinations of the others. When more than
// cap vertices survive, or the input is too large to prune by LP, the result
// is the axis-aligned bounding box (a superset).
PruneResult prune(const VPolytope& p, std::size_t cap = kDefaultVertexCap);

// center + generators * beta, |beta|_inf <= 1.
struct Zonotope {
    Vec center;
    Mat generators; // dim x count; zero columns allowed

    [[nodiscard]] std::size_t dim() const noexcept { return center.size(); }
    [[nodiscard]] std::size_t order() const noexcept { return generators.cols(); }

    static Zonotope point(Vec c) { return {c, Mat(c.size(), 0)}; }
    static Zonotope box(const Bounds& b);
};

Zonotope linear_map(const Mat& m, const Zonotope& z);
Zonotope minkowski_sum(const Zonotope& a, const Zonotope& b);
Bounds interval_hull(const Zonotope& z);
// max over z of |row . x|
double max_abs_image(const Zonotope& z, std::span<const double> row);
// Keeps at most max_generators columns; the rest are replaced by their
// bounding box (n columns), largest first by |g|_1 - |g|_inf.
Zonotope reduce_order(const Zonotope& z, std::size_t max_generators);
bool contains(const Zonotope& z, std::span<const double> x, double tol = kMembershipTol);

} // namespace polysync
