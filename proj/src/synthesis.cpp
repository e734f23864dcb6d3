#include "polysync/synthesis.hpp"

#include <cmath>
#include <limits>
#include <sstream>

#include "polysync/kernels.hpp"

namespace polysync {

namespace {

double composite_radius(const Topology& t, const Mat& s, const Mat& f) {
    return spectral_radius(observer_composite(t, s, f));
}

bool has_simple_unit_poles(const Mat& s) {
    const Spectrum sp = eigenvalues(s);
    for (std::size_t i = 0; i < sp.size(); ++i) {
        if (std::abs(std::abs(sp.eigenvalues[i]) - 1.0) > 1e-9) return false;
        for (std::size_t j = i + 1; j < sp.size(); ++j)
            if (std::abs(sp.eigenvalues[i] - sp.eigenvalues[j]) < 1e-9) return false;
    }
    return true;
}

} // namespace

sdp::LmiProblem gain_lmi(const AgentDataset& d, const ConsistencySet& cs) {
    const std::size_t n = cs.n, rho = d.rho, m = rho * n;
    const Mat dd = stacked_data(d);
    const Mat proj = cs.d_pinv * dd; // rho x rho, projector onto the row space of D

    sdp::LmiProblem prob;
    prob.dim = m;
    // X E_rc = X(:, r) e_c'
    auto xe = [&](const Mat& x, std::size_t r, std::size_t c) {
        Mat out(x.rows(), n);
        for (std::size_t i = 0; i < x.rows(); ++i) out(i, c) = x(i, r);
        return out;
    };
    std::vector<Mat> sym_xe(m);
    for (std::size_t r = 0; r < rho; ++r)
        for (std::size_t c = 0; c < n; ++c) sym_xe[r * n + c] = symmetrize(xe(d.x, r, c));

    for (const Mat& w : cs.w_poly.vertices()) {
        const Mat omega = (d.x_plus - w) * proj;
        sdp::LmiBlock blk;
        blk.f0 = Mat(2 * n, 2 * n);
        blk.f.reserve(m);
        for (std::size_t r = 0; r < rho; ++r)
            for (std::size_t c = 0; c < n; ++c) {
                const Mat oe = xe(omega, r, c);
                Mat f(2 * n, 2 * n);
                f.set_block(0, 0, sym_xe[r * n + c]);
                f.set_block(n, n, sym_xe[r * n + c]);
                f.set_block(0, n, oe);
                f.set_block(n, 0, oe.transpose());
                blk.f.push_back(std::move(f));
            }
        prob.blocks.push_back(std::move(blk));
    }
    // (X M)_ab - (X M)_ba = 0 with (X M)_ab = sum_r X(a, r) M(r, b)
    for (std::size_t a = 0; a < n; ++a)
        for (std::size_t b = a + 1; b < n; ++b) {
            sdp::Equality e{Vec(m, 0.0), 0.0};
            for (std::size_t r = 0; r < rho; ++r) {
                e.a[r * n + b] += d.x(a, r);
                e.a[r * n + a] -= d.x(b, r);
            }
            prob.equalities.push_back(std::move(e));
        }
    sdp::Equality tr{Vec(m, 0.0), static_cast<double>(n)};
    for (std::size_t a = 0; a < n; ++a)
        for (std::size_t r = 0; r < rho; ++r) tr.a[r * n + a] += d.x(a, r);
    prob.equalities.push_back(std::move(tr));
    return prob;
}

double lyapunov_decrease(const MatrixPolytope& closed_loop, const Mat& p) {
    double worst = -std::numeric_limits<double>::infinity();
    for (const Mat& q : closed_loop.vertices()) worst = std::max(worst, max_sym_eig(symmetrize(q.transpose() * p * q - p)));
    return worst;
}

SynthesisResult synthesize_k(const AgentDataset& d, const NoiseModel& noise, const SynthesisOptions& opts) {
    require(opts.margin >= 0.0 && opts.margin < 1.0, ErrorKind::InvalidInput, "synthesis: margin must lie in [0, 1)");
    const ConsistencySet cs = build_consistency_set(d, noise, opts.mode);
    const sdp::LmiProblem prob = gain_lmi(d, cs);
    SynthesisResult res;
    res.solution = sdp::solve_max_margin(prob, opts.solver);
    res.margin = res.solution.margin;
    if (res.solution.status != sdp::Status::Feasible) {
        std::ostringstream msg;
        msg << "synthesis: LMI " << sdp::to_string(res.solution.status) << " (best margin " << res.solution.margin
            << ", upper bound " << res.solution.upper_bound << ")";
        fail(ErrorKind::SynthesisFailure, msg.str());
    }
    res.m_decision = Mat(d.rho, cs.n, res.solution.y);
    const Mat xm = symmetrize(d.x * res.m_decision);
    res.lyapunov_p = inverse(xm);
    res.k = d.u * res.m_decision * res.lyapunov_p;

    const MatrixPolytope loop = closed_loop_polytope(cs, res.k);
    res.vertex_radii = kernels::spectral_radii_omp(loop.vertices());
    res.worst_vertex_radius = 0.0;
    for (double r : res.vertex_radii) res.worst_vertex_radius = std::max(res.worst_vertex_radius, r);
    res.lyapunov_decrease = lyapunov_decrease(loop, res.lyapunov_p);
    if (!(res.worst_vertex_radius < 1.0 - opts.margin)) {
        std::ostringstream msg;
        msg << "synthesis: LMI certificate does not carry over, worst closed-loop vertex radius " << res.worst_vertex_radius;
        fail(ErrorKind::CertificateMismatch, msg.str());
    }
    return res;
}

ObserverDesign check_f(const Topology& t, const Mat& s, const Mat& f, double margin) {
    ObserverDesign od{f, composite_radius(t, s, f), std::nullopt};
    if (!(od.composite_radius < 1.0 - margin)) {
        std::ostringstream msg;
        msg << "observer: composite radius " << od.composite_radius << " is not below " << 1.0 - margin;
        fail(ErrorKind::ObserverDesignFailure, msg.str());
    }
    return od;
}

ObserverDesign design_f(const Topology& t, const Mat& s, double margin) {
    require(s.is_square(), ErrorKind::Shape, "observer: S must be square");
    require(has_spanning_tree(t), ErrorKind::Precondition,
            "observer: the graph has no spanning tree rooted at the leader");
    require(has_simple_unit_poles(s), ErrorKind::Precondition,
            "observer: S must have simple eigenvalues on the unit circle");

    auto radius = [&](double alpha) { return composite_radius(t, s, alpha * s); };
    constexpr int kGrid = 161;
    const double lo = std::log(1e-3), hi = std::log(1e2);
    std::vector<double> alphas(kGrid), radii(kGrid);
    std::size_t best = 0;
    for (int i = 0; i < kGrid; ++i) {
        alphas[i] = std::exp(lo + (hi - lo) * i / (kGrid - 1));
        radii[i] = radius(alphas[i]);
        if (radii[i] < radii[best]) best = static_cast<std::size_t>(i);
    }
    // Golden-section on the bracket around the best grid point.
    double a = alphas[best == 0 ? 0 : best - 1];
    double b = alphas[best + 1 < alphas.size() ? best + 1 : best];
    const double g = (std::sqrt(5.0) - 1.0) / 2.0;
    double c = b - g * (b - a), e = a + g * (b - a);
    double fc = radius(c), fe = radius(e);
    for (int it = 0; it < 80 && (b - a) > 1e-12 * b; ++it) {
        if (fc < fe) {
            b = e;
            e = c;
            fe = fc;
            c = b - g * (b - a);
            fc = radius(c);
        } else {
            a = c;
            c = e;
            fc = fe;
            e = a + g * (b - a);
            fe = radius(e);
        }
    }
    double alpha = alphas[best], r = radii[best];
    if (fc < r) alpha = c, r = fc;
    if (fe < r) alpha = e, r = fe;

    if (!(r < 1.0 - margin)) {
        std::ostringstream msg;
        msg << "observer: no F = alpha S reaches composite radius below " << 1.0 - margin << " (best " << r
            << "); coupling spectrum:";
        const Spectrum sp = eigenvalues(coupling(t));
        for (const auto& l : sp.eigenvalues) msg << ' ' << l;
        fail(ErrorKind::ObserverDesignFailure, msg.str());
    }
    return ObserverDesign{alpha * s, r, alpha};
}

bool verify_composite_stability(const Topology& t, const Mat& s, const Mat& f, std::span<const MatrixPolytope> closed_loops) {
    if (!(composite_radius(t, s, f) < 1.0)) return false;
    for (const MatrixPolytope& mp : closed_loops)
        for (double r : kernels::spectral_radii_omp(mp.vertices()))
            if (!(r < 1.0)) return false;
    return true;
}

} // namespace polysync
