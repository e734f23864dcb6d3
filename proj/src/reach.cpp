#include "polysync/reach.hpp"

#include <cmath>
#include <complex>
#include <limits>

#include "polysync/kernels.hpp"

namespace polysync {

namespace {

using cplx = std::complex<double>;

constexpr double kRoundingSlack = 1e-12;

// Null vector of (S - lambda I) by inverse iteration with a shifted complex LU.
std::vector<cplx> eigenvector(const Mat& s, cplx lambda) {
    const std::size_t n = s.rows();
    const cplx shift = lambda + cplx(1e-10, 1e-10);
    std::vector<cplx> a(n * n);
    for (std::size_t i = 0; i < n; ++i)
        for (std::size_t j = 0; j < n; ++j) a[i * n + j] = s(i, j) - (i == j ? shift : 0.0);
    std::vector<std::size_t> perm(n);
    for (std::size_t i = 0; i < n; ++i) perm[i] = i;
    for (std::size_t k = 0; k < n; ++k) {
        std::size_t p = k;
        for (std::size_t i = k + 1; i < n; ++i)
            if (std::abs(a[i * n + k]) > std::abs(a[p * n + k])) p = i;
        if (p != k) {
            for (std::size_t j = 0; j < n; ++j) std::swap(a[k * n + j], a[p * n + j]);
            std::swap(perm[k], perm[p]);
        }
        if (std::abs(a[k * n + k]) < 1e-300) a[k * n + k] = 1e-300;
        for (std::size_t i = k + 1; i < n; ++i) {
            const cplx f = a[i * n + k] / a[k * n + k];
            a[i * n + k] = f;
            for (std::size_t j = k + 1; j < n; ++j) a[i * n + j] -= f * a[k * n + j];
        }
    }
    std::vector<cplx> v(n, cplx(1.0, 0.0));
    for (int it = 0; it < 3; ++it) {
        std::vector<cplx> b(n);
        for (std::size_t i = 0; i < n; ++i) b[i] = v[perm[i]];
        for (std::size_t i = 0; i < n; ++i)
            for (std::size_t j = 0; j < i; ++j) b[i] -= a[i * n + j] * b[j];
        for (std::size_t i = n; i-- > 0;) {
            for (std::size_t j = i + 1; j < n; ++j) b[i] -= a[i * n + j] * b[j];
            b[i] /= a[i * n + i];
        }
        double norm = 0.0;
        for (const cplx& c : b) norm += std::norm(c);
        norm = std::sqrt(norm);
        for (std::size_t i = 0; i < n; ++i) v[i] = b[i] / norm;
    }
    return v;
}

// Points Q v for all Q, v; boxed when there are too many to prune.
VPolytope image_set(const MatrixPolytope& mats, const VPolytope& pts, std::size_t cap, bool& boxed) {
    if (mats.size() * pts.size() > 4 * cap && pts.dim() > 1) {
        const kernels::Box b = kernels::image_bounds_omp(mats.vertices(), pts.vertices());
        boxed = true;
        return box_from_bounds({b.lo, b.hi});
    }
    std::vector<Vec> out;
    out.reserve(mats.size() * pts.size());
    for (const Mat& q : mats.vertices())
        for (const Vec& v : pts.vertices()) out.push_back(q * v);
    PruneResult pr = prune(VPolytope(std::move(out)), cap);
    boxed = boxed || pr.over_approximated;
    return std::move(pr.polytope);
}

VPolytope sum_sets(const VPolytope& a, const VPolytope& b, std::size_t cap, bool& boxed) {
    if (a.size() * b.size() > 4 * cap && a.dim() > 1) {
        const Bounds ba = bounding_box(a), bb = bounding_box(b);
        boxed = true;
        return box_from_bounds({add(ba.lo, bb.lo), add(ba.hi, bb.hi)});
    }
    PruneResult pr = prune(minkowski_sum(a, b), cap);
    boxed = boxed || pr.over_approximated;
    return std::move(pr.polytope);
}

double max_image_inf(const MatrixPolytope& mats, const VPolytope& pts) {
    double m = 0.0;
    for (const Mat& q : mats.vertices())
        for (const Vec& v : pts.vertices()) m = std::max(m, norm_inf(q * v));
    return m;
}

} // namespace

double leader_orbit_gain(const Mat& s) {
    require(s.is_square(), ErrorKind::Shape, "leader orbit: S must be square");
    const std::size_t n = s.rows();
    if (max_abs(s.transpose() * s - Mat::identity(n)) < 1e-12) return 1.0;
    const Spectrum sp = eigenvalues(s);
    for (const cplx& l : sp.eigenvalues)
        require(std::abs(std::abs(l) - 1.0) < 1e-9, ErrorKind::Precondition, "leader orbit: S has a pole off the unit circle");
    // V^H V through its real embedding [[Re, -Im], [Im, Re]]; eigenvalues appear twice.
    std::vector<std::vector<cplx>> cols;
    for (const cplx& l : sp.eigenvalues) cols.push_back(eigenvector(s, l));
    Mat g(2 * n, 2 * n);
    for (std::size_t i = 0; i < n; ++i)
        for (std::size_t j = 0; j < n; ++j) {
            cplx gij = 0.0;
            for (std::size_t k = 0; k < n; ++k) gij += std::conj(cols[i][k]) * cols[j][k];
            g(i, j) = gij.real();
            g(i + n, j + n) = gij.real();
            g(i, j + n) = -gij.imag();
            g(i + n, j) = gij.imag();
        }
    const SymEig e = sym_eig(g);
    require(e.values.front() > 1e-14, ErrorKind::Precondition, "leader orbit: S is not diagonalisable");
    return std::sqrt(e.values.back() / e.values.front());
}

VPolytope leader_state_polytope(const LeaderModel& leader, std::span<const double> x0) {
    leader.validate();
    require(x0.size() == leader.s.rows(), ErrorKind::Shape, "leader orbit: x0 has the wrong length");
    const double radius = leader_orbit_gain(leader.s) * norm2(x0) * (1.0 + 1e-12);
    if (radius == 0.0) return VPolytope::point(Vec(x0.size(), 0.0));
    return box_polytope(Vec(x0.size(), radius));
}

VPolytope disturbance_polytope(const MatrixPolytope& delta1, const VPolytope& px0, const Mat& pi, const Mat& f,
                               double coupling_scale, std::span<const double> delta_t, std::span<const double> z_t,
                               std::size_t cap) {
    require(delta_t.size() == px0.dim() && z_t.size() == px0.dim(), ErrorKind::Shape,
            "disturbance: observer error has the wrong length");
    const VPolytope shifted = add_point(px0, delta_t);
    bool boxed = false;
    const VPolytope img = image_set(delta1, shifted, cap, boxed);
    const Vec coupling_point = scale(pi * (f * z_t), coupling_scale);
    return add_point(img, coupling_point);
}

VPolytope disturbance_polytope(const RegulatorFit& fit, const VPolytope& px0, const Mat& pi, const Mat& f,
                               const Topology& t, std::size_t agent, std::span<const double> delta_t,
                               std::span<const double> z_t) {
    require(agent < t.n_followers, ErrorKind::InvalidInput, "disturbance: agent index out of range");
    const double c = 1.0 / (1.0 + in_degrees(t)[agent] + t.pinning[agent]);
    return disturbance_polytope(fit.delta1_poly, px0, pi, f, c, delta_t, z_t);
}

XiSeries xi_bound_recursion(const MatrixPolytope& mzk, const VPolytope& p0, std::span<const VPolytope> disturbances,
                            std::size_t horizon, std::size_t cap) {
    require(disturbances.size() >= horizon, ErrorKind::Shape, "xi recursion: one disturbance set per step");
    require(mzk.rows() == p0.dim() && mzk.cols() == p0.dim(), ErrorKind::Shape, "xi recursion: dimension mismatch");
    XiSeries out;
    out.sets.reserve(horizon + 1);
    out.sets.push_back(p0);
    for (std::size_t t = 0; t < horizon; ++t) {
        const VPolytope img = image_set(mzk, out.sets.back(), cap, out.over_approximated);
        out.sets.push_back(sum_sets(img, disturbances[t], cap, out.over_approximated));
        require(out.sets.back().size() <= std::max<std::size_t>(cap, std::size_t{1} << p0.dim()), ErrorKind::Numerical,
                "xi recursion: vertex count above the cap after fallback");
    }
    return out;
}

Vec error_bound_series(const MatrixPolytope& c_poly, std::span<const VPolytope> xi_sets, const MatrixPolytope& delta2,
                       const VPolytope& px0, const Mat& pi, std::span<const Vec> delta) {
    require(delta.size() >= xi_sets.size(), ErrorKind::Shape, "error bound: observer error series too short");
    const double leader_term = max_image_inf(delta2, px0);
    Vec r(xi_sets.size());
    for (std::size_t t = 0; t < xi_sets.size(); ++t) {
        double obs = 0.0;
        const Vec pd = pi * delta[t];
        for (const Mat& c : c_poly.vertices()) obs = std::max(obs, norm_inf(c * pd));
        // The terms are exact at t = 0, so leave room for rounding.
        r[t] = (max_image_inf(c_poly, xi_sets[t]) + leader_term + obs) * (1.0 + kRoundingSlack) + kRoundingSlack;
    }
    return r;
}

Vec error_bound_series(const MatrixPolytope& c_poly, std::span<const VPolytope> xi_sets, const RegulatorFit& fit,
                       const VPolytope& px0, std::span<const Vec> delta) {
    return error_bound_series(c_poly, xi_sets, fit.delta2_poly, px0, fit.pi, delta);
}

AsymptoticBound asymptotic_bound(const MatrixPolytope& closed_loop, const Mat& lyapunov_p, const MatrixPolytope& c_poly,
                                 const MatrixPolytope& delta1, const MatrixPolytope& delta2, const VPolytope& px0) {
    AsymptoticBound ab;
    const Mat half = sqrtm_spd(lyapunov_p);
    const Mat half_inv = inverse(half);
    for (const Mat& q : closed_loop.vertices()) ab.beta = std::max(ab.beta, norm_two(half * q * half_inv));
    for (double r : kernels::spectral_radii_omp(closed_loop.vertices())) ab.vertex_radius = std::max(ab.vertex_radius, r);
    const SymEig e = sym_eig(lyapunov_p);
    ab.mu = std::sqrt(e.values.back() / e.values.front());
    if (!(ab.beta < 1.0)) {
        ab.value = std::numeric_limits<double>::infinity();
        return ab;
    }
    // Once the observer has converged the disturbance is Delta1 x0 only.
    double dist = 0.0;
    for (const Mat& d : delta1.vertices())
        for (const Vec& v : px0.vertices()) dist = std::max(dist, norm2(d * v));
    double c_gain = 0.0;
    for (const Mat& c : c_poly.vertices()) c_gain = std::max(c_gain, norm_two(c));
    ab.value = c_gain * ab.mu * dist / (1.0 - ab.beta) + max_image_inf(delta2, px0);
    return ab;
}

BoundSeries compute_bounds(const ReachInputs& in) {
    require(in.delta.size() >= in.horizon + 1 && in.z.size() >= in.horizon, ErrorKind::Shape,
            "bounds: observer series shorter than the horizon");
    std::vector<VPolytope> dist;
    dist.reserve(in.horizon);
    for (std::size_t t = 0; t < in.horizon; ++t)
        dist.push_back(disturbance_polytope(in.delta1, in.px0, in.pi, in.f, in.coupling_scale, in.delta[t], in.z[t], in.cap));
    BoundSeries bs;
    bs.xi = xi_bound_recursion(in.closed_loop, VPolytope::point(in.xi0), dist, in.horizon, in.cap);
    bs.r = error_bound_series(in.c_poly, bs.xi.sets, in.delta2, in.px0, in.pi, in.delta);
    bs.asymptotic = asymptotic_bound(in.closed_loop, in.lyapunov_p, in.c_poly, in.delta1, in.delta2, in.px0);
    return bs;
}

namespace {

// sum_m max |rows_m . x| over z
double row_mass(const Mat& rows, const Zonotope& z) {
    double total = 0.0;
    for (std::size_t m = 0; m < rows.rows(); ++m) total += max_abs_image(z, rows.row_vec(m));
    return total;
}

Vec abs_bound(const VPolytope& p) {
    Vec b(p.dim(), 0.0);
    for (const Vec& v : p.vertices())
        for (std::size_t i = 0; i < p.dim(); ++i) b[i] = std::max(b[i], std::abs(v[i]));
    return b;
}

} // namespace

Zonotope image_bound(const NoiseAffineMatrix& m, const Zonotope& z) {
    require(m.rows.cols() == m.nominal.cols() && m.w_abs.size() == m.nominal.rows(), ErrorKind::Shape,
            "image_bound: malformed noise-affine matrix");
    Zonotope out = linear_map(m.nominal, z);
    const double mass = row_mass(m.rows, z);
    if (mass == 0.0) return out;
    Mat g(m.nominal.rows(), m.nominal.rows());
    for (std::size_t i = 0; i < g.rows(); ++i) g(i, i) = m.w_abs[i] * mass;
    out.generators = hstack(out.generators, g);
    return out;
}

Vec output_bound(const NoiseAffineMatrix& m, const Zonotope& z) {
    require(m.rows.cols() == z.dim() && m.nominal.cols() == z.dim(), ErrorKind::Shape, "output_bound: dimension mismatch");
    const double mass = row_mass(m.rows, z);
    Vec out(m.nominal.rows());
    for (std::size_t i = 0; i < out.size(); ++i) out[i] = max_abs_image(z, m.nominal.row_vec(i)) + m.w_abs[i] * mass;
    return out;
}

ExactSets exact_sets(const AgentDataset& d, const NoiseModel& noise, const Mat& k, const Mat& s, const Mat& h,
                     const Mat& pi, const Mat& gamma) {
    const std::size_t n = d.x.rows();
    require(k.cols() == n && pi.rows() == n && gamma.cols() == pi.cols() && s.rows() == pi.cols(), ErrorKind::Shape,
            "exact_sets: shape mismatch");
    require(noise.process.dim() == n && noise.measurement.dim() == d.y.rows(), ErrorKind::Shape,
            "exact_sets: noise dimension mismatch");
    const Mat d_pinv = pinv(stacked_data(d));
    const Mat x_pinv = pinv(d.x);
    const Vec w_abs = abs_bound(noise.process), v_abs = abs_bound(noise.measurement);

    ExactSets e;
    const Mat cl = d_pinv * vstack(k, Mat::identity(n));
    e.closed_loop = {d.x_plus * cl, cl, w_abs};
    const Mat g = d_pinv * vstack(gamma, pi);
    e.delta1 = {d.x_plus * g - pi * s, g, w_abs};
    e.c = {d.y * x_pinv, x_pinv, v_abs};
    const Mat xp = x_pinv * pi;
    e.c_pi = {d.y * xp, xp, v_abs};
    e.delta2 = {d.y * xp - h, xp, v_abs};
    return e;
}

ExactBoundSeries compute_exact_bounds(const ExactReachInputs& in) {
    require(in.delta.size() >= in.horizon + 1 && in.z.size() >= in.horizon, ErrorKind::Shape,
            "bounds: observer series shorter than the horizon");
    const std::size_t n = in.xi0.size();
    require(in.sets.closed_loop.nominal.rows() == n && in.pi.rows() == n, ErrorKind::Shape,
            "bounds: xi0 has the wrong length");
    const Zonotope px0 = Zonotope::box(bounding_box(in.px0));
    const Vec leader_term = output_bound(in.sets.delta2, px0);
    const std::size_t n0 = px0.dim();

    // Z(t + 1) = M_Q Z(t) + M_D1 (P_x0 + delta(t)) + c Pi F z(t)
    auto step = [&](const Zonotope& xi, std::span<const double> delta, std::span<const double> z) {
        const Zonotope eta = minkowski_sum(px0, Zonotope::point(Vec(delta.begin(), delta.end())));
        Zonotope next = minkowski_sum(image_bound(in.sets.closed_loop, xi), image_bound(in.sets.delta1, eta));
        next.center = add(next.center, scale(in.pi * (in.f * z), in.coupling_scale));
        return reduce_order(next, in.max_generators);
    };
    auto bound_at = [&](const Zonotope& xi, std::span<const double> delta) {
        const Vec a = output_bound(in.sets.c, xi);
        const Vec b = output_bound(in.sets.c_pi, Zonotope::point(Vec(delta.begin(), delta.end())));
        double r = 0.0;
        for (std::size_t i = 0; i < a.size(); ++i) r = std::max(r, a[i] + leader_term[i] + b[i]);
        return r * (1.0 + kRoundingSlack) + kRoundingSlack;
    };

    ExactBoundSeries out;
    out.xi.reserve(in.horizon + 1);
    out.xi.push_back(Zonotope::point(in.xi0));
    out.r.push_back(bound_at(out.xi.back(), in.delta[0]));
    for (std::size_t t = 0; t < in.horizon; ++t) {
        out.xi.push_back(step(out.xi.back(), in.delta[t], in.z[t]));
        out.r.push_back(bound_at(out.xi.back(), in.delta[t + 1]));
    }

    // Converged observer: delta = z = 0. Started at 0 the sets grow towards
    // the limit; stop once the bound stalls.
    const Vec zero(n0, 0.0);
    Zonotope xi = Zonotope::point(Vec(n, 0.0));
    double best = bound_at(xi, zero), last_check = best;
    constexpr std::size_t kMaxSteps = 20000, kWindow = 50;
    for (std::size_t t = 1; t <= kMaxSteps; ++t) {
        xi = step(xi, zero, zero);
        best = std::max(best, bound_at(xi, zero));
        out.asymptotic_steps = t;
        if (!std::isfinite(best) || best > 1e12) {
            best = std::numeric_limits<double>::infinity();
            break;
        }
        if (t % kWindow == 0) {
            if (best - last_check <= 1e-10 * best) break;
            last_check = best;
        }
        if (t == kMaxSteps) best = std::numeric_limits<double>::infinity();
    }
    out.asymptotic = best;
    return out;
}

} // namespace polysync
