#include "polysync/regulator.hpp"

#include <cmath>

namespace polysync {

namespace {

struct LsSystem {
    Mat a;
    Vec b;
};

// Unknowns: [vec Pi (n n0); vec Gamma (p n0)].
//   vec(A Pi + B Gamma - Pi S) = (I (x) A - S^T (x) I_n) vec Pi + (I (x) B) vec Gamma
//   vec(C Pi - H)              = (I (x) C) vec Pi - vec H
LsSystem assemble(std::span<const Mat> zs, std::span<const Mat> cs, std::size_t n, std::size_t p, const Mat& s,
                  const Mat& h) {
    const std::size_t n0 = s.rows(), q = h.rows();
    const std::size_t npi = n * n0, ngam = p * n0;
    const Mat i0 = Mat::identity(n0);
    const Mat shift = kron(s.transpose(), Mat::identity(n));
    LsSystem ls{Mat(zs.size() * npi + cs.size() * q * n0, npi + ngam), Vec()};
    ls.b.assign(ls.a.rows(), 0.0);
    std::size_t row = 0;
    for (const Mat& z : zs) {
        const Mat b = z.block(0, 0, n, p), a = z.block(0, p, n, n);
        ls.a.set_block(row, 0, kron(i0, a) - shift);
        ls.a.set_block(row, npi, kron(i0, b));
        row += npi;
    }
    const Vec vh = vec(h);
    for (const Mat& c : cs) {
        ls.a.set_block(row, 0, kron(i0, c));
        for (std::size_t k = 0; k < q * n0; ++k) ls.b[row + k] = vh[k];
        row += q * n0;
    }
    return ls;
}

void check_leader(const Mat& s, const Mat& h, std::size_t q) {
    require(s.is_square() && s.rows() >= 1, ErrorKind::Shape, "regulator: S must be square");
    require(h.cols() == s.rows() && h.rows() == q, ErrorKind::Shape, "regulator: H must be q x n0");
}

double residual_norm(const LsSystem& ls, std::span<const double> theta) {
    Vec r = sub(ls.a * theta, ls.b);
    return norm2(r);
}

RegulatorSolution unpack(std::span<const double> theta, std::size_t n, std::size_t p, std::size_t n0) {
    return {unvec(theta.subspan(0, n * n0), n, n0), unvec(theta.subspan(n * n0, p * n0), p, n0)};
}

} // namespace

RegulatorSolution exact_regulator(const TrueSystem& sys, const Mat& s, const Mat& h) {
    sys.validate();
    check_leader(s, h, sys.q());
    const Mat z = hstack(sys.b, sys.a);
    const LsSystem ls = assemble(std::span<const Mat>(&z, 1), std::span<const Mat>(&sys.c, 1), sys.n(), sys.p(), s, h);
    const Mat theta = solve_least_squares(ls.a, Mat::column(ls.b));
    const Vec t = theta.col(0);
    const double res = residual_norm(ls, t);
    if (!(res < kRegulatorResidualTol))
        fail(ErrorKind::NoSolution, "regulator equations have no solution for this model (residual " + std::to_string(res) + ")");
    return unpack(t, sys.n(), sys.p(), s.rows());
}

double fit_objective(const ConsistencySet& cs, const Mat& s, const Mat& h, const Mat& pi, const Mat& gamma) {
    const Mat g = vstack(gamma, pi);
    double total = 0.0;
    for (const Mat& z : cs.z_poly.vertices()) {
        const double r = frobenius(z * g - pi * s);
        total += r * r;
    }
    for (const Mat& c : cs.c_poly.vertices()) {
        const double r = frobenius(c * pi - h);
        total += r * r;
    }
    return total;
}

DeltaPolytopes delta_polytopes(const ConsistencySet& cs, const Mat& s, const Mat& h, const Mat& pi, const Mat& gamma) {
    const Mat g = vstack(gamma, pi);
    const Mat dg = cs.d_pinv * g;  // rho x n0
    const Mat xp = cs.x_pinv * pi; // rho x n0
    std::vector<Mat> d1, d2;
    if (cs.mode == NoiseMode::Verbatim) {
        for (const Mat& w : cs.w_poly.vertices()) {
            d1.push_back(2.0 * (w * dg));
            d1.push_back(-2.0 * (w * dg));
        }
        for (const Mat& v : cs.v_poly.vertices()) {
            d2.push_back(2.0 * (v * xp));
            d2.push_back(-2.0 * (v * xp));
        }
    } else {
        // Z_true = (X+ - W) D^dagger, so Z_true G - Pi S = (X+ D^dagger G - Pi S) - W D^dagger G.
        // The z_poly vertex at W = 0 is not stored; rebuild X+ D^dagger from any vertex.
        const Mat xpd = cs.z_poly.vertex(0) + cs.w_poly.vertex(0) * cs.d_pinv;
        const Mat ycx = cs.c_poly.vertex(0) + cs.v_poly.vertex(0) * cs.x_pinv;
        const Mat r1 = xpd * g - pi * s;
        const Mat r2 = ycx * pi - h;
        for (const Mat& w : cs.w_poly.vertices()) d1.push_back(r1 - w * dg);
        for (const Mat& v : cs.v_poly.vertices()) d2.push_back(r2 - v * xp);
    }
    return {MatrixPolytope(std::move(d1)), MatrixPolytope(std::move(d2))};
}

RegulatorFit solve_fit(const ConsistencySet& cs, const Mat& s, const Mat& h) {
    check_leader(s, h, cs.q);
    const std::size_t n0 = s.rows();
    const LsSystem ls = assemble(cs.z_poly.vertices(), cs.c_poly.vertices(), cs.n, cs.p, s, h);
    const Mat theta = solve_least_squares(ls.a, Mat::column(ls.b));
    const RegulatorSolution sol = unpack(theta.col(0), cs.n, cs.p, n0);

    RegulatorFit fit;
    fit.pi = sol.pi;
    fit.gamma = sol.gamma;
    fit.degenerate = rank(ls.a) < ls.a.cols();
    const Mat g = vstack(fit.gamma, fit.pi);
    for (const Mat& z : cs.z_poly.vertices()) fit.residual1_per_vertex.push_back(frobenius(z * g - fit.pi * s));
    for (const Mat& c : cs.c_poly.vertices()) fit.residual2_per_vertex.push_back(frobenius(c * fit.pi - h));
    fit.objective = fit_objective(cs, s, h, fit.pi, fit.gamma);

    const double wbar = max_vertex_norm(cs.w_poly, NormKind::Frobenius);
    const double vbar = max_vertex_norm(cs.v_poly, NormKind::Frobenius);
    const double rho = static_cast<double>(cs.rho);
    fit.bound1 = 2.0 * static_cast<double>(cs.gamma_w) * rho * wbar * frobenius(cs.d_pinv * g);
    fit.bound2 = 2.0 * static_cast<double>(cs.gamma_v) * rho * vbar * frobenius(cs.x_pinv * fit.pi);

    DeltaPolytopes dp = delta_polytopes(cs, s, h, fit.pi, fit.gamma);
    fit.delta1_poly = std::move(dp.delta1);
    fit.delta2_poly = std::move(dp.delta2);
    return fit;
}

std::pair<double, double> delta_bounds(const RegulatorFit& fit) { return {fit.bound1, fit.bound2}; }

} // namespace polysync
