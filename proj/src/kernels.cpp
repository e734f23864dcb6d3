#include "polysync/kernels.hpp"

#include <algorithm>
#include <cmath>
#include <limits>

namespace polysync::kernels {

namespace {

Mat map_one(const Mat& v, const Mat& left, const Mat& right, const Mat& shift) { return left * v * right + shift; }

void check_map_shapes(std::span<const Mat> vertices, const Mat& left, const Mat& right, const Mat& shift) {
    if (vertices.empty()) return;
    const Mat& v = vertices.front();
    if (left.cols() != v.rows() || v.cols() != right.rows())
        fail(ErrorKind::Shape, "map_vertices: left/right factors are not conformal with the vertices");
    if (shift.rows() != left.rows() || shift.cols() != right.cols())
        fail(ErrorKind::Shape, "map_vertices: shift shape differs from the image shape");
}

// Per-block barrier contribution. grad/hess are written densely into the slot.
struct BlockTerms {
    bool interior = false;
    double value = 0.0;
    Vec grad;
    Mat hess;
};

// With G = L L', S_j = L^{-1} G_j L^{-T} gives grad_j = -tr(S_j) and
// hess_ij = <S_i, S_j>_F. S_j is symmetric, so it is stored packed (lower
// triangle, off-diagonals scaled by sqrt 2) and the Hessian is one Gram matrix.
BlockTerms block_terms(const AffineBlock& block, std::span<const double> x, bool derivatives) {
    BlockTerms out;
    const Mat g = evaluate_block(block, x);
    Mat l;
    if (!cholesky(g, l)) return out;
    out.interior = true;
    double logdet = 0.0;
    for (std::size_t i = 0; i < l.rows(); ++i) logdet += std::log(l(i, i));
    out.value = -2.0 * logdet;
    if (!derivatives) return out;

    const std::size_t k = g.rows();
    const std::size_t nv = block.coeffs.size();
    const std::size_t packed = k * (k + 1) / 2;
    const double root2 = std::sqrt(2.0);
    std::vector<double> sp(nv * packed);
    std::vector<double> tmp(k * k);
    out.grad.assign(nv, 0.0);
    for (std::size_t j = 0; j < nv; ++j) {
        const auto gj = block.coeffs[j].data();
        // tmp = L^{-1} G_j (columns by forward substitution)
        for (std::size_t c = 0; c < k; ++c)
            for (std::size_t i = 0; i < k; ++i) {
                double v = gj[i * k + c];
                for (std::size_t q = 0; q < i; ++q) v -= l(i, q) * tmp[q * k + c];
                tmp[i * k + c] = v / l(i, i);
            }
        // S = tmp L^{-T}: row r of S solves L s_r' = tmp_r'
        double* dst = &sp[j * packed];
        std::size_t idx = 0;
        std::vector<double> row(k);
        for (std::size_t r = 0; r < k; ++r) {
            for (std::size_t i = 0; i < k; ++i) {
                double v = tmp[r * k + i];
                for (std::size_t q = 0; q < i; ++q) v -= l(i, q) * row[q];
                row[i] = v / l(i, i);
            }
            for (std::size_t c = 0; c <= r; ++c) dst[idx++] = c == r ? row[c] : root2 * row[c];
            out.grad[j] -= row[r];
        }
    }
    out.hess = Mat(nv, nv);
    for (std::size_t i = 0; i < nv; ++i) {
        const double* si = &sp[i * packed];
        for (std::size_t j = 0; j <= i; ++j) {
            const double* sj = &sp[j * packed];
            double acc = 0.0;
            for (std::size_t e = 0; e < packed; ++e) acc += si[e] * sj[e];
            out.hess(i, j) = acc;
            out.hess(j, i) = acc;
        }
    }
    return out;
}

BarrierTerms reduce_terms(std::vector<BlockTerms>& per_block, std::size_t nv, bool derivatives) {
    BarrierTerms out;
    out.interior = true;
    if (derivatives) {
        out.grad.assign(nv, 0.0);
        out.hess = Mat(nv, nv);
    }
    for (const auto& bt : per_block) {
        if (!bt.interior) {
            out.interior = false;
            out.value = std::numeric_limits<double>::infinity();
            return out;
        }
        out.value += bt.value;
        if (derivatives) {
            for (std::size_t i = 0; i < nv; ++i) out.grad[i] += bt.grad[i];
            out.hess += bt.hess;
        }
    }
    return out;
}

// Directional derivative sum_j dx_j G_j, i.e. the block at dx without the base.
Mat block_direction(const AffineBlock& block, std::span<const double> dx) {
    Mat d(block.base.rows(), block.base.cols());
    for (std::size_t j = 0; j < dx.size(); ++j) {
        if (dx[j] == 0.0) continue;
        const auto src = block.coeffs[j].data();
        auto dst = d.data();
        for (std::size_t e = 0; e < dst.size(); ++e) dst[e] += dx[j] * src[e];
    }
    return d;
}

// G + a D > 0 iff 1 + a mu > 0 for every eigenvalue mu of L^{-1} D L^{-T}.
double block_max_step(const AffineBlock& block, std::span<const double> x, std::span<const double> dx) {
    Mat l;
    if (!cholesky(evaluate_block(block, x), l)) return 0.0;
    const Mat d = block_direction(block, dx);
    const Mat half = lower_solve(l, d);                // L^{-1} D
    const Mat m = lower_solve(l, half.transpose());    // L^{-1} D L^{-T}
    const double mu = min_sym_eig(symmetrize(m));
    return mu < 0.0 ? -1.0 / mu : std::numeric_limits<double>::infinity();
}

std::size_t num_vars(std::span<const AffineBlock> blocks) { return blocks.empty() ? 0 : blocks.front().coeffs.size(); }

Box empty_box(std::size_t dim) {
    return Box{Vec(dim, std::numeric_limits<double>::infinity()), Vec(dim, -std::numeric_limits<double>::infinity())};
}

void extend(Box& box, const Vec& p) {
    for (std::size_t i = 0; i < p.size(); ++i) {
        box.lo[i] = std::min(box.lo[i], p[i]);
        box.hi[i] = std::max(box.hi[i], p[i]);
    }
}

} // namespace

Mat evaluate_block(const AffineBlock& block, std::span<const double> x) {
    if (x.size() != block.coeffs.size()) fail(ErrorKind::Shape, "evaluate_block: variable count mismatch");
    Mat g = block.base;
    for (std::size_t j = 0; j < x.size(); ++j) {
        if (x[j] == 0.0) continue;
        const auto src = block.coeffs[j].data();
        auto dst = g.data();
        for (std::size_t e = 0; e < dst.size(); ++e) dst[e] += x[j] * src[e];
    }
    return g;
}

std::vector<Mat> map_vertices_serial(std::span<const Mat> vertices, const Mat& left, const Mat& right, const Mat& shift) {
    check_map_shapes(vertices, left, right, shift);
    std::vector<Mat> out;
    out.reserve(vertices.size());
    for (const Mat& v : vertices) out.push_back(map_one(v, left, right, shift));
    return out;
}

std::vector<Mat> map_vertices_omp(std::span<const Mat> vertices, const Mat& left, const Mat& right, const Mat& shift) {
    check_map_shapes(vertices, left, right, shift);
    std::vector<Mat> out(vertices.size());
    const auto n = static_cast<std::ptrdiff_t>(vertices.size());
#pragma omp parallel for schedule(static)
    for (std::ptrdiff_t i = 0; i < n; ++i)
        out[static_cast<std::size_t>(i)] = map_one(vertices[static_cast<std::size_t>(i)], left, right, shift);
    return out;
}

Vec spectral_radii_serial(std::span<const Mat> mats) {
    Vec r(mats.size());
    for (std::size_t i = 0; i < mats.size(); ++i) r[i] = spectral_radius(mats[i]);
    return r;
}

Vec spectral_radii_omp(std::span<const Mat> mats) {
    Vec r(mats.size());
    const auto n = static_cast<std::ptrdiff_t>(mats.size());
    // spectral_radius may throw; exceptions must not escape the parallel region.
    std::vector<char> failed(mats.size(), 0);
#pragma omp parallel for schedule(dynamic)
    for (std::ptrdiff_t i = 0; i < n; ++i) {
        const auto u = static_cast<std::size_t>(i);
        try {
            r[u] = spectral_radius(mats[u]);
        } catch (...) {
            failed[u] = 1;
        }
    }
    for (std::size_t i = 0; i < mats.size(); ++i)
        if (failed[i]) r[i] = spectral_radius(mats[i]); // rethrows serially
    return r;
}

Box image_bounds_serial(std::span<const Mat> mats, std::span<const Vec> points) {
    const std::size_t dim = mats.empty() ? 0 : mats.front().rows();
    Box box = empty_box(dim);
    for (const Mat& q : mats)
        for (const Vec& p : points) extend(box, q * p);
    return box;
}

Box image_bounds_omp(std::span<const Mat> mats, std::span<const Vec> points) {
    const std::size_t dim = mats.empty() ? 0 : mats.front().rows();
    std::vector<Box> partial(mats.size(), empty_box(dim));
    const auto n = static_cast<std::ptrdiff_t>(mats.size());
#pragma omp parallel for schedule(static)
    for (std::ptrdiff_t i = 0; i < n; ++i) {
        const auto u = static_cast<std::size_t>(i);
        for (const Vec& p : points) extend(partial[u], mats[u] * p);
    }
    Box box = empty_box(dim);
    for (const Box& b : partial) {
        extend(box, b.lo);
        extend(box, b.hi);
    }
    return box;
}

double max_step_serial(std::span<const AffineBlock> blocks, std::span<const double> x, std::span<const double> dx) {
    double alpha = std::numeric_limits<double>::infinity();
    for (const AffineBlock& b : blocks) alpha = std::min(alpha, block_max_step(b, x, dx));
    return alpha;
}

double max_step_omp(std::span<const AffineBlock> blocks, std::span<const double> x, std::span<const double> dx) {
    Vec per_block(blocks.size());
    const auto n = static_cast<std::ptrdiff_t>(blocks.size());
#pragma omp parallel for schedule(static)
    for (std::ptrdiff_t b = 0; b < n; ++b)
        per_block[static_cast<std::size_t>(b)] = block_max_step(blocks[static_cast<std::size_t>(b)], x, dx);
    double alpha = std::numeric_limits<double>::infinity();
    for (double a : per_block) alpha = std::min(alpha, a);
    return alpha;
}

BarrierTerms barrier_terms_serial(std::span<const AffineBlock> blocks, std::span<const double> x, bool derivatives) {
    std::vector<BlockTerms> per_block(blocks.size());
    for (std::size_t b = 0; b < blocks.size(); ++b) {
        per_block[b] = block_terms(blocks[b], x, derivatives);
        if (!per_block[b].interior) break;
    }
    return reduce_terms(per_block, num_vars(blocks), derivatives);
}

BarrierTerms barrier_terms_omp(std::span<const AffineBlock> blocks, std::span<const double> x, bool derivatives) {
    std::vector<BlockTerms> per_block(blocks.size());
    const auto n = static_cast<std::ptrdiff_t>(blocks.size());
#pragma omp parallel for schedule(static)
    for (std::ptrdiff_t b = 0; b < n; ++b)
        per_block[static_cast<std::size_t>(b)] = block_terms(blocks[static_cast<std::size_t>(b)], x, derivatives);
    return reduce_terms(per_block, num_vars(blocks), derivatives);
}

} // namespace polysync::kernels
