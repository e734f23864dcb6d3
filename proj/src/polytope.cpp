#include "polysync/polytope.hpp"

#include <algorithm>
#include <cmath>
#include <limits>

#include "polysync/kernels.hpp"
#include "polysync/lp.hpp"

namespace polysync {

namespace {

// Inputs larger than this are boxed directly instead of pruned by LP.
constexpr std::size_t kLpPruneFactor = 16;

double vec_norm(const Vec& v, NormKind norm) { return norm == NormKind::Inf ? norm_inf(v) : norm2(v); }

double mat_norm(const Mat& m, NormKind norm) {
    switch (norm) {
    case NormKind::Frobenius: return frobenius(m);
    case NormKind::Two: return norm_two(m);
    case NormKind::Inf: return norm_inf(m);
    }
    return 0.0;
}

// min tau s.t. sum beta_k v_k + p - q = x, p + q + r = tau, sum beta = 1, all >= 0.
// Column layout: beta (K) | p (d) | q (d) | r (d) | tau.
lp::Result linf_fit(const std::vector<Vec>& verts, std::span<const double> x) {
    const std::size_t k = verts.size(), d = x.size();
    const std::size_t ncol = k + 3 * d + 1, nrow = 2 * d + 1;
    Mat a(nrow, ncol);
    Vec b(nrow, 0.0), c(ncol, 0.0);
    for (std::size_t i = 0; i < d; ++i) {
        for (std::size_t j = 0; j < k; ++j) a(i, j) = verts[j][i];
        a(i, k + i) = 1.0;
        a(i, k + d + i) = -1.0;
        b[i] = x[i];
        a(d + i, k + i) = 1.0;
        a(d + i, k + d + i) = 1.0;
        a(d + i, k + 2 * d + i) = 1.0;
        a(d + i, ncol - 1) = -1.0;
    }
    for (std::size_t j = 0; j < k; ++j) a(2 * d, j) = 1.0;
    b[2 * d] = 1.0;
    c[ncol - 1] = 1.0;
    return lp::minimize(a, b, c);
}

// Round-off floor added to the caller's tolerance so that tol = 0 still
// accepts the vertices themselves.
double roundoff_floor(std::span<const double> x, const std::vector<Vec>& verts) {
    double s = norm_inf(x);
    for (const Vec& v : verts) s = std::max(s, norm_inf(v));
    return 1e-12 * (1.0 + s);
}

bool outside_box(const std::vector<Vec>& verts, std::span<const double> x, double tol) {
    for (std::size_t i = 0; i < x.size(); ++i) {
        double lo = std::numeric_limits<double>::infinity(), hi = -lo;
        for (const Vec& v : verts) {
            lo = std::min(lo, v[i]);
            hi = std::max(hi, v[i]);
        }
        if (x[i] < lo - tol || x[i] > hi + tol) return true;
    }
    return false;
}

} // namespace

VPolytope::VPolytope(std::vector<Vec> vertices) : vertices_(std::move(vertices)) {
    require(!vertices_.empty(), ErrorKind::InvalidInput, "VPolytope needs at least one vertex");
    dim_ = vertices_.front().size();
    for (const Vec& v : vertices_) {
        require(v.size() == dim_, ErrorKind::Shape, "VPolytope vertices must share one dimension");
        for (double e : v) require(std::isfinite(e), ErrorKind::InvalidInput, "VPolytope vertex is not finite");
    }
}

MatrixPolytope::MatrixPolytope(std::vector<Mat> vertices) : vertices_(std::move(vertices)) {
    require(!vertices_.empty(), ErrorKind::InvalidInput, "MatrixPolytope needs at least one vertex");
    rows_ = vertices_.front().rows();
    cols_ = vertices_.front().cols();
    for (const Mat& v : vertices_) {
        require(v.rows() == rows_ && v.cols() == cols_, ErrorKind::Shape, "MatrixPolytope vertices must share one shape");
        require(v.all_finite(), ErrorKind::InvalidInput, "MatrixPolytope vertex is not finite");
    }
}

VPolytope box_polytope(std::span<const double> half_widths) {
    const std::size_t d = half_widths.size();
    require(d >= 1, ErrorKind::InvalidInput, "box_polytope: empty half-width vector");
    require(d <= kMaxBoxDim, ErrorKind::Size, "box_polytope: dimension above 12 would enumerate too many vertices");
    for (double h : half_widths)
        require(std::isfinite(h) && h > 0.0, ErrorKind::InvalidInput, "box_polytope: half-widths must be positive");
    // First coordinate varies slowest; + before -.
    std::vector<Vec> verts;
    verts.reserve(std::size_t{1} << d);
    for (std::size_t mask = 0; mask < (std::size_t{1} << d); ++mask) {
        Vec v(d);
        for (std::size_t i = 0; i < d; ++i) {
            const bool neg = (mask >> (d - 1 - i)) & 1U;
            v[i] = neg ? -half_widths[i] : half_widths[i];
        }
        verts.push_back(std::move(v));
    }
    return VPolytope(std::move(verts));
}

MatrixPolytope noise_matrix_polytope(const VPolytope& p, std::size_t rho, NoiseMode mode) {
    require(rho >= 1, ErrorKind::InvalidInput, "noise_matrix_polytope: horizon must be positive");
    const double factor = mode == NoiseMode::Scaled ? static_cast<double>(rho) : 1.0;
    std::vector<Mat> verts;
    verts.reserve(p.size() * rho);
    for (std::size_t k = 0; k < p.size(); ++k)
        for (std::size_t m = 0; m < rho; ++m) {
            Mat v(p.dim(), rho);
            for (std::size_t i = 0; i < p.dim(); ++i) v(i, m) = factor * p.vertex(k)[i];
            verts.push_back(std::move(v));
        }
    return MatrixPolytope(std::move(verts));
}

MatrixPolytope map_matrix_polytope(const MatrixPolytope& mp, const Mat& right, const Mat& left, const Mat& shift) {
    return MatrixPolytope(kernels::map_vertices_omp(mp.vertices(), left, right, shift));
}

VPolytope minkowski_sum(const VPolytope& a, const VPolytope& b) {
    require(a.dim() == b.dim(), ErrorKind::Shape, "minkowski_sum: dimension mismatch");
    std::vector<Vec> verts;
    verts.reserve(a.size() * b.size());
    for (const Vec& u : a.vertices())
        for (const Vec& v : b.vertices()) verts.push_back(add(u, v));
    return VPolytope(std::move(verts));
}

VPolytope add_point(const VPolytope& a, std::span<const double> x) {
    require(a.dim() == x.size(), ErrorKind::Shape, "add_point: dimension mismatch");
    std::vector<Vec> verts;
    verts.reserve(a.size());
    for (const Vec& u : a.vertices()) verts.push_back(add(u, x));
    return VPolytope(std::move(verts));
}

double max_vertex_norm(const VPolytope& p, NormKind norm) {
    double best = 0.0;
    for (const Vec& v : p.vertices()) best = std::max(best, vec_norm(v, norm));
    return best;
}

double max_vertex_norm(const MatrixPolytope& p, NormKind norm) {
    double best = 0.0;
    for (const Mat& v : p.vertices()) best = std::max(best, mat_norm(v, norm));
    return best;
}

std::optional<Vec> hull_weights(const VPolytope& p, std::span<const double> x, double tol) {
    require(p.dim() == x.size(), ErrorKind::Shape, "contains: dimension mismatch");
    require(tol >= 0.0, ErrorKind::InvalidInput, "contains: negative tolerance");
    const double eff = tol + roundoff_floor(x, p.vertices());
    if (outside_box(p.vertices(), x, eff)) return std::nullopt;
    const lp::Result r = linf_fit(p.vertices(), x);
    if (r.status != lp::Status::Optimal || r.objective > eff) return std::nullopt;
    return Vec(r.x.begin(), r.x.begin() + static_cast<std::ptrdiff_t>(p.size()));
}

bool contains(const VPolytope& p, std::span<const double> x, double tol) { return hull_weights(p, x, tol).has_value(); }

bool contains(const MatrixPolytope& p, const Mat& x, double tol) {
    require(x.rows() == p.rows() && x.cols() == p.cols(), ErrorKind::Shape, "contains: matrix shape mismatch");
    std::vector<Vec> verts;
    verts.reserve(p.size());
    for (const Mat& v : p.vertices()) verts.push_back(vec(v));
    return contains(VPolytope(std::move(verts)), vec(x), tol);
}

Bounds bounding_box(const VPolytope& p) {
    Bounds b{Vec(p.dim(), std::numeric_limits<double>::infinity()), Vec(p.dim(), -std::numeric_limits<double>::infinity())};
    for (const Vec& v : p.vertices())
        for (std::size_t i = 0; i < p.dim(); ++i) {
            b.lo[i] = std::min(b.lo[i], v[i]);
            b.hi[i] = std::max(b.hi[i], v[i]);
        }
    return b;
}

VPolytope box_from_bounds(const Bounds& b) {
    const std::size_t d = b.lo.size();
    require(d == b.hi.size() && d >= 1, ErrorKind::Shape, "box_from_bounds: malformed bounds");
    require(d <= kMaxBoxDim, ErrorKind::Size, "box_from_bounds: dimension above 12");
    std::vector<Vec> verts;
    for (std::size_t mask = 0; mask < (std::size_t{1} << d); ++mask) {
        Vec v(d);
        for (std::size_t i = 0; i < d; ++i) v[i] = ((mask >> (d - 1 - i)) & 1U) ? b.lo[i] : b.hi[i];
        verts.push_back(std::move(v));
    }
    // Degenerate coordinates produce duplicates; keep the first of each.
    std::sort(verts.begin(), verts.end());
    verts.erase(std::unique(verts.begin(), verts.end()), verts.end());
    return VPolytope(std::move(verts));
}

PruneResult prune(const VPolytope& p, std::size_t cap) {
    require(cap >= 1, ErrorKind::InvalidInput, "prune: vertex cap must be positive");
    std::vector<Vec> verts = p.vertices();
    std::sort(verts.begin(), verts.end());
    verts.erase(std::unique(verts.begin(), verts.end()), verts.end());

    // In one dimension the interval is the exact hull.
    if (p.dim() == 1) return {box_from_bounds(bounding_box(p)), false};
    if (verts.size() > kLpPruneFactor * cap) return {box_from_bounds(bounding_box(p)), true};

    std::vector<char> keep(verts.size(), 1);
    for (std::size_t k = 0; k < verts.size() && verts.size() > 1; ++k) {
        std::vector<Vec> others;
        for (std::size_t j = 0; j < verts.size(); ++j)
            if (j != k && keep[j]) others.push_back(verts[j]);
        if (others.empty()) continue;
        const lp::Result r = linf_fit(others, verts[k]);
        if (r.status == lp::Status::Optimal && r.objective <= roundoff_floor(verts[k], others)) keep[k] = 0;
    }
    std::vector<Vec> kept;
    for (std::size_t k = 0; k < verts.size(); ++k)
        if (keep[k]) kept.push_back(std::move(verts[k]));
    if (kept.size() > cap) return {box_from_bounds(bounding_box(p)), true};
    return {VPolytope(std::move(kept)), false};
}

Zonotope Zonotope::box(const Bounds& b) {
    const std::size_t d = b.lo.size();
    require(b.hi.size() == d, ErrorKind::Shape, "Zonotope::box: malformed bounds");
    Zonotope z{Vec(d), Mat(d, d)};
    for (std::size_t i = 0; i < d; ++i) {
        require(b.hi[i] >= b.lo[i], ErrorKind::InvalidInput, "Zonotope::box: empty interval");
        z.center[i] = 0.5 * (b.lo[i] + b.hi[i]);
        z.generators(i, i) = 0.5 * (b.hi[i] - b.lo[i]);
    }
    return z;
}

Zonotope linear_map(const Mat& m, const Zonotope& z) {
    require(m.cols() == z.dim(), ErrorKind::Shape, "linear_map: dimension mismatch");
    return {m * z.center, m * z.generators};
}

Zonotope minkowski_sum(const Zonotope& a, const Zonotope& b) {
    require(a.dim() == b.dim(), ErrorKind::Shape, "minkowski_sum: dimension mismatch");
    return {add(a.center, b.center), hstack(a.generators, b.generators)};
}

Bounds interval_hull(const Zonotope& z) {
    Bounds b{z.center, z.center};
    for (std::size_t i = 0; i < z.dim(); ++i) {
        double r = 0.0;
        for (std::size_t j = 0; j < z.order(); ++j) r += std::abs(z.generators(i, j));
        b.lo[i] -= r;
        b.hi[i] += r;
    }
    return b;
}

double max_abs_image(const Zonotope& z, std::span<const double> row) {
    require(row.size() == z.dim(), ErrorKind::Shape, "max_abs_image: dimension mismatch");
    double r = std::abs(dot(row, z.center));
    for (std::size_t j = 0; j < z.order(); ++j) {
        double g = 0.0;
        for (std::size_t i = 0; i < z.dim(); ++i) g += row[i] * z.generators(i, j);
        r += std::abs(g);
    }
    return r;
}

Zonotope reduce_order(const Zonotope& z, std::size_t max_generators) {
    const std::size_t d = z.dim();
    require(max_generators >= d, ErrorKind::InvalidInput, "reduce_order: need room for the box generators");
    // Drop zero columns first.
    std::vector<std::size_t> live;
    Vec score(z.order(), 0.0);
    for (std::size_t j = 0; j < z.order(); ++j) {
        double l1 = 0.0, linf = 0.0;
        for (std::size_t i = 0; i < d; ++i) {
            l1 += std::abs(z.generators(i, j));
            linf = std::max(linf, std::abs(z.generators(i, j)));
        }
        if (l1 > 0.0) live.push_back(j);
        score[j] = l1 - linf;
    }
    std::size_t keep = live.size();
    if (live.size() > max_generators) keep = max_generators - d;
    std::stable_sort(live.begin(), live.end(), [&](std::size_t a, std::size_t b) { return score[a] > score[b]; });
    const bool boxed = keep < live.size();
    Mat g(d, keep + (boxed ? d : 0));
    for (std::size_t k = 0; k < keep; ++k)
        for (std::size_t i = 0; i < d; ++i) g(i, k) = z.generators(i, live[k]);
    for (std::size_t k = keep; k < live.size(); ++k)
        for (std::size_t i = 0; i < d; ++i) g(i, keep + i) += std::abs(z.generators(i, live[k]));
    return {z.center, g};
}

// min tau s.t. G (bp - bm) + ep - em = x - c, bp + bm + s = 1,
// ep_i + em_i + r_i = tau, all >= 0.
bool contains(const Zonotope& z, std::span<const double> x, double tol) {
    require(x.size() == z.dim(), ErrorKind::Shape, "contains: dimension mismatch");
    const std::size_t d = z.dim(), g = z.order();
    const Vec rhs = sub(x, z.center);
    double scale_ref = std::max(norm_inf(x), norm_inf(z.center));
    for (double v : z.generators.data()) scale_ref = std::max(scale_ref, std::abs(v));
    const double eff = tol + 1e-12 * (1.0 + scale_ref);
    if (g == 0) return norm_inf(rhs) <= eff;
    const Bounds hull = interval_hull(z);
    for (std::size_t i = 0; i < d; ++i)
        if (x[i] < hull.lo[i] - eff || x[i] > hull.hi[i] + eff) return false;
    // Column layout: bp (g) | bm (g) | s (g) | ep (d) | em (d) | r (d) | tau.
    const std::size_t ncol = 3 * g + 3 * d + 1, nrow = 2 * d + g;
    Mat a(nrow, ncol);
    Vec b(nrow, 0.0), c(ncol, 0.0);
    for (std::size_t i = 0; i < d; ++i) {
        for (std::size_t j = 0; j < g; ++j) {
            a(i, j) = z.generators(i, j);
            a(i, g + j) = -z.generators(i, j);
        }
        a(i, 3 * g + i) = 1.0;
        a(i, 3 * g + d + i) = -1.0;
        b[i] = rhs[i];
        a(d + g + i, 3 * g + i) = 1.0;
        a(d + g + i, 3 * g + d + i) = 1.0;
        a(d + g + i, 3 * g + 2 * d + i) = 1.0;
        a(d + g + i, ncol - 1) = -1.0;
    }
    for (std::size_t j = 0; j < g; ++j) {
        a(d + j, j) = 1.0;
        a(d + j, g + j) = 1.0;
        a(d + j, 2 * g + j) = 1.0;
        b[d + j] = 1.0;
    }
    c[ncol - 1] = 1.0;
    const lp::Result r = lp::minimize(a, b, c);
    return r.status == lp::Status::Optimal && r.objective <= eff;
}

} // namespace polysync
